//! Exact discrete likelihoods for success counts under a latent
//! success-probability distribution.
//!
//! If a problem's single-attempt success probability p is drawn from a
//! latent distribution and n attempts are recorded, the observed success
//! count follows the compound (mixed) binomial of that latent family. For a
//! scale-truncated Beta latent the mixture has a closed form through the
//! terminating Gauss hypergeometric sum; the scaled Kumaraswamy latent
//! needs quadrature; stop-at-first-success collection yields the compound
//! (negative-binomial, r = 1) counterpart with an explicit censoring
//! correction at the attempt cap.
//!
//! Count-level likelihoods are the exact discretization of the latent
//! density at the sampling resolution: all latent mass below 1/n is routed
//! into the x = 0 cell by the integral itself, which is precisely what a
//! finite sample can know about the left tail.

mod fit;

pub use fit::{fit_mle, FitConfig, FittedDistribution, OptimizerTraceSummary, RestartRecord};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::ingest::BenchmarkData;
use crate::specfun::{
    fail_integral_near_zero, integrate_with_endpoints, ln_beta, ln_binomial,
    ln_gauss_2f1_terminating, QuadratureConfig,
};

/// Which compound count model a fit assumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompoundKind {
    /// Binomial counts, scaled-Beta latent (closed form).
    ScaledBetaBinomial,
    /// Binomial counts, scaled-Kumaraswamy latent (quadrature).
    ScaledKumaraswamyBinomial,
    /// Failures-before-success counts, scaled-Beta latent.
    ScaledBetaNegativeBinomial,
}

/// Shared latent parameters (α, β, scale c) of the compound families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundParams {
    pub alpha: f64,
    pub beta: f64,
    /// Upper support bound c of the latent distribution, in (0, 1].
    pub scale: f64,
}

impl CompoundParams {
    /// Check α > 0, β > 0, 0 < c ≤ 1.
    ///
    /// # Errors
    ///
    /// Domain error naming the violated bound.
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite())
            || !(self.beta > 0.0 && self.beta.is_finite())
        {
            return Err(Error::Domain(format!(
                "shape parameters must be positive finite, got alpha={}, beta={}",
                self.alpha, self.beta
            )));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Domain(format!(
                "scale must lie in (0, 1], got {}",
                self.scale
            )));
        }
        Ok(())
    }
}

/// A compound count model: the kind plus its latent parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompoundFamily {
    pub kind: CompoundKind,
    pub params: CompoundParams,
}

/// A log PMF value obtained by quadrature, with its achieved accuracy
/// (relative error bound on the probability, i.e. absolute on the log).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadLogPmf {
    pub ln_pmf: f64,
    pub accuracy: f64,
}

/// Quadrature budget for PMF integrals: tolerance is purely relative so
/// that very small probabilities (deep in a miss-shaped parameter region
/// during optimization) are still resolved instead of accepted at zero.
const PMF_QUAD_CONFIG: QuadratureConfig = QuadratureConfig {
    relative_tolerance: 1e-10,
    absolute_tolerance: 1e-280,
    max_subdivisions: 200,
};

fn check_count_arguments(x: u64, n: u64) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("count PMF needs n ≥ 1 attempts".into()));
    }
    if x > n {
        return Err(Error::Domain(format!(
            "successes ({x}) exceed attempts ({n})"
        )));
    }
    Ok(())
}

/// Log PMF of the scaled Beta-Binomial: n attempts, latent p ~ c·Beta(α, β).
///
/// P(X = x) = C(n,x) · c^x · B(x+α, β)/B(α, β) · ₂F₁(−(n−x), x+α; x+α+β; c),
/// evaluated fully in log space; the hypergeometric factor is a terminating
/// sum with positive terms (since β > 0), so the result is finite for every
/// valid input.
///
/// # Errors
///
/// Domain error for invalid parameters or x > n.
pub fn scaled_beta_binomial_log_pmf(x: u64, n: u64, params: &CompoundParams) -> Result<f64> {
    params.validate()?;
    check_count_arguments(x, n)?;
    let (alpha, beta, scale) = (params.alpha, params.beta, params.scale);
    let xf = x as f64;
    Ok(ln_binomial(n, x)
        + xf * scale.ln()
        + ln_beta(xf + alpha, beta)?
        - ln_beta(alpha, beta)?
        + ln_gauss_2f1_terminating(n - x, xf + alpha, xf + alpha + beta, scale)?)
}

/// Log probability that a problem with latent p ~ c·Beta(α, β) sees zero
/// successes in `attempts` tries.
///
/// E[(1−p)^n] over the scaled Beta reduces, via its Euler integral, to the
/// terminating hypergeometric ₂F₁(−n, α; α+β; c) — the same quantity as
/// the x = 0 binomial-compound cell, but O(n) instead of O(n²) when used
/// as the censoring survivor for stop-at-first-success data.
///
/// # Errors
///
/// Domain error for invalid parameters or attempts = 0.
pub fn ln_probability_no_success(attempts: u64, params: &CompoundParams) -> Result<f64> {
    params.validate()?;
    if attempts == 0 {
        return Err(Error::Domain("survivor probability needs ≥ 1 attempt".into()));
    }
    ln_gauss_2f1_terminating(
        attempts,
        params.alpha,
        params.alpha + params.beta,
        params.scale,
    )
}

/// Log PMF of the scaled Kumaraswamy-Binomial via adaptive quadrature:
/// P(X = x) = C(n,x) ∫₀ᶜ p^x (1−p)^(n−x) f(p; α, β, c) dp.
///
/// The integrand near 0 carries the declared exponent x + α (its p-power
/// plus one); the x = 0 cell is the failure integral E[(1−p)^n] and takes
/// the spike-aware route. For x ≥ 1 the integrand is renormalized by its
/// peak value and split at the binomial-kernel mode x/n so the adaptive
/// rule always sees the mass. The achieved quadrature error is reported in
/// the accuracy field (relative on the probability).
///
/// # Errors
///
/// Domain error for invalid inputs; quadrature failure propagates.
pub fn scaled_kumaraswamy_binomial_log_pmf(
    x: u64,
    n: u64,
    params: &CompoundParams,
) -> Result<QuadLogPmf> {
    params.validate()?;
    check_count_arguments(x, n)?;
    let (alpha, beta, scale) = (params.alpha, params.beta, params.scale);
    let latent = DistributionSpec::ScaledKumaraswamy { alpha, beta, scale };

    if x == 0 {
        let result = fail_integral_near_zero(
            &|p| latent_density(&latent, p),
            scale,
            alpha,
            Some(beta),
            n,
            &PMF_QUAD_CONFIG,
        )?;
        if !(result.value > 0.0) {
            return Err(Error::Numerical(format!(
                "zero-success cell collapsed to {} for n={n}, {params:?}",
                result.value
            )));
        }
        return Ok(QuadLogPmf {
            ln_pmf: result.value.ln(),
            accuracy: result.error_estimate / result.value,
        });
    }

    let (xf, nf) = (x as f64, n as f64);
    let ln_kernel = |p: f64| -> f64 {
        if p <= 0.0 || p >= scale {
            return f64::NEG_INFINITY;
        }
        let z = p / scale;
        xf * p.ln()
            + (nf - xf) * (-p).ln_1p()
            + (alpha * beta / scale.powf(alpha)).ln()
            + (alpha - 1.0) * p.ln()
            + (beta - 1.0) * (1.0 - z.powf(alpha)).ln()
    };
    // Peak-normalize: probe a fixed grid plus the binomial-kernel mode so
    // the integrand handed to quadrature is O(1) at its maximum.
    let mut peak = f64::NEG_INFINITY;
    let mode = (xf / nf).clamp(scale * 1e-9, scale * (1.0 - 1e-9));
    for probe in (1..32)
        .map(|j| scale * f64::from(j) / 32.0)
        .chain([mode])
    {
        peak = peak.max(ln_kernel(probe));
    }
    if !peak.is_finite() {
        return Err(Error::Numerical(format!(
            "PMF integrand vanished everywhere for x={x}, n={n}, {params:?}"
        )));
    }
    let integrand = |p: f64| {
        let v = ln_kernel(p);
        if v.is_finite() {
            (v - peak).exp()
        } else {
            0.0
        }
    };
    let hi_exponent = beta + if scale >= 1.0 { nf - xf } else { 0.0 };
    let (total, error) = if mode > scale * 1e-6 && mode < scale * (1.0 - 1e-6) {
        let left = integrate_with_endpoints(
            integrand,
            0.0,
            mode,
            Some(xf + alpha),
            None,
            &PMF_QUAD_CONFIG,
        )?;
        let right = integrate_with_endpoints(
            integrand,
            mode,
            scale,
            None,
            Some(hi_exponent),
            &PMF_QUAD_CONFIG,
        )?;
        (
            left.value + right.value,
            left.error_estimate + right.error_estimate,
        )
    } else {
        let whole = integrate_with_endpoints(
            integrand,
            0.0,
            scale,
            Some(xf + alpha),
            Some(hi_exponent),
            &PMF_QUAD_CONFIG,
        )?;
        (whole.value, whole.error_estimate)
    };
    if !(total > 0.0) {
        return Err(Error::Numerical(format!(
            "PMF integral collapsed to {total} for x={x}, n={n}, {params:?}"
        )));
    }
    Ok(QuadLogPmf {
        ln_pmf: ln_binomial(n, x) + peak + total.ln(),
        accuracy: error / total,
    })
}

fn latent_density(latent: &DistributionSpec, p: f64) -> f64 {
    // Densities of the latent families are only probed inside (0, scale);
    // pdf() is total over the real line and validated upstream.
    match latent.pdf(p) {
        Ok(v) => v,
        Err(_) => 0.0,
    }
}

/// Log PMF of the scaled Beta negative binomial: x failures before the
/// r-th success, latent p ~ c·Beta(α, β).
///
/// P(X = x) = C(x+r−1, x) · c^r · B(r+α, β)/B(α, β)
///            · ₂F₁(−x, r+α; r+α+β; c).
///
/// With `cap` set, x + r ≤ cap is the uncensored region; the censored cell
/// (no success within the cap, r = 1, signalled by x = cap) is the
/// survivor probability P(X ≥ cap) = E[(1−p)^cap], evaluated through the
/// same terminating hypergeometric identity as
/// [`ln_probability_no_success`] — exactly log(1 − Σ_{x'<cap} P(X = x'))
/// but without the O(cap²) summation (the tests verify that equivalence
/// against the direct log-space sum).
///
/// # Errors
///
/// Domain error for invalid parameters, r = 0, or observations outside the
/// censoring contract.
pub fn scaled_beta_negbinomial_log_pmf(
    x: u64,
    r: u64,
    params: &CompoundParams,
    cap: Option<u64>,
) -> Result<f64> {
    params.validate()?;
    if r == 0 {
        return Err(Error::Domain("negative binomial needs r ≥ 1 successes".into()));
    }
    if let Some(cap) = cap {
        if x + r > cap {
            return if r == 1 && x == cap {
                ln_probability_no_success(cap, params)
            } else {
                Err(Error::Domain(format!(
                    "observation x={x}, r={r} lies beyond the attempt cap {cap} \
                     (only the r=1, x=cap censored cell is defined there)"
                )))
            };
        }
    }
    let (alpha, beta, scale) = (params.alpha, params.beta, params.scale);
    let rf = r as f64;
    Ok(ln_binomial(x + r - 1, x)
        + rf * scale.ln()
        + ln_beta(rf + alpha, beta)?
        - ln_beta(alpha, beta)?
        + ln_gauss_2f1_terminating(x, rf + alpha, rf + alpha + beta, scale)?)
}

/// One distinguishable observation shape in a benchmark: attempts,
/// successes, and whether collection stopped at the first success.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct ObservationKey {
    censored: bool,
    num_attempts: u64,
    num_successes: u64,
}

fn observation_log_prob(
    key: &ObservationKey,
    family: &CompoundFamily,
    cap: Option<u64>,
) -> Result<f64> {
    let params = &family.params;
    if !key.censored {
        return match family.kind {
            // Binomial-compound view of the shared scaled-Beta latent.
            CompoundKind::ScaledBetaBinomial | CompoundKind::ScaledBetaNegativeBinomial => {
                scaled_beta_binomial_log_pmf(key.num_successes, key.num_attempts, params)
            }
            CompoundKind::ScaledKumaraswamyBinomial => {
                scaled_kumaraswamy_binomial_log_pmf(key.num_successes, key.num_attempts, params)
                    .map(|q| q.ln_pmf)
            }
        };
    }
    match family.kind {
        CompoundKind::ScaledBetaBinomial | CompoundKind::ScaledBetaNegativeBinomial => {
            if key.num_successes == 1 {
                // First success on attempt n ⇒ n−1 failures, exact cell.
                scaled_beta_negbinomial_log_pmf(key.num_attempts - 1, 1, params, cap)
            } else {
                // No success within the budget ⇒ survivor cell.
                ln_probability_no_success(key.num_attempts, params)
            }
        }
        CompoundKind::ScaledKumaraswamyBinomial => Err(Error::Domain(
            "censored problems need the scaled-Beta latent (negative-binomial compound); \
             the scaled-Kumaraswamy model has no censored counterpart here"
                .into(),
        )),
    }
}

/// Total negative log-likelihood of a benchmark under a compound model.
///
/// Uncensored problems contribute their binomial-compound cell; censored
/// problems contribute the negative-binomial (r = 1) cell with the cap
/// correction. Identical observation shapes are evaluated once (PMF work
/// is cached per distinct (n, c, censored) key) and the values are
/// accumulated over the sorted key set with exact multiplicities, so the
/// result is exactly invariant under reordering of problems. Distinct keys
/// are evaluated in parallel.
///
/// # Errors
///
/// Domain error for invalid data or a censored problem without a declared
/// attempt cap; numerical error naming the offending problem when any term
/// is non-finite.
pub fn neg_log_likelihood(data: &BenchmarkData, family: &CompoundFamily) -> Result<f64> {
    family.params.validate()?;
    if data.problems.is_empty() {
        return Err(Error::InsufficientData(
            "likelihood of an empty benchmark is undefined".into(),
        ));
    }
    let mut multiplicity: BTreeMap<ObservationKey, u64> = BTreeMap::new();
    for problem in &data.problems {
        if problem.num_attempts == 0 {
            return Err(Error::Domain(format!(
                "problem {:?} has no attempts",
                problem.problem_id
            )));
        }
        if problem.num_successes > problem.num_attempts {
            return Err(Error::Domain(format!(
                "problem {:?} has more successes than attempts",
                problem.problem_id
            )));
        }
        if problem.censored {
            if problem.num_successes > 1 {
                return Err(Error::Domain(format!(
                    "censored problem {:?} records {} successes; stop-at-first-success \
                     data can have at most one",
                    problem.problem_id, problem.num_successes
                )));
            }
            if data.max_attempt_cap.is_none() {
                return Err(Error::Domain(format!(
                    "censored problem {:?} requires the benchmark to declare max_attempt_cap",
                    problem.problem_id
                )));
            }
        }
        *multiplicity
            .entry(ObservationKey {
                censored: problem.censored,
                num_attempts: problem.num_attempts,
                num_successes: problem.num_successes,
            })
            .or_insert(0) += 1;
    }

    let keys: Vec<ObservationKey> = multiplicity.keys().copied().collect();
    let terms: Vec<Result<f64>> = keys
        .par_iter()
        .map(|key| observation_log_prob(key, family, data.max_attempt_cap))
        .collect();

    let mut total = 0.0f64;
    for (key, term) in keys.iter().zip(terms) {
        let describe = || {
            let id = data
                .problems
                .iter()
                .find(|p| {
                    p.censored == key.censored
                        && p.num_attempts == key.num_attempts
                        && p.num_successes == key.num_successes
                })
                .map(|p| p.problem_id.clone())
                .unwrap_or_default();
            format!(
                "problem {id:?} (attempts={}, successes={}, censored={})",
                key.num_attempts, key.num_successes, key.censored
            )
        };
        let value = term.map_err(|e| match e {
            Error::Domain(m) => Error::Domain(format!("{}: {m}", describe())),
            Error::Numerical(m) => Error::Numerical(format!("{}: {m}", describe())),
            other => other,
        })?;
        if !value.is_finite() {
            return Err(Error::Numerical(format!(
                "non-finite log-likelihood term for {}",
                describe()
            )));
        }
        total -= multiplicity[key] as f64 * value;
    }
    Ok(total)
}
