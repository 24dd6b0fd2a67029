//! Parametric families over single-attempt success probability.
//!
//! Aggregate pass@k under a latent distribution D of per-problem success
//! probabilities is 1 − E[(1−p)^k], with the expectation over p ~ D. Two
//! classical facts organize everything here:
//!
//! * a density behaving like C·p^(b−1) as p → 0⁺ produces power-law
//!   scaling, −log pass@k → C·Γ(b)·k^(−b) (a Tauberian / Watson's-lemma
//!   argument applied to the failure integral E[(1−p)^k]);
//! * a density with no mass accumulating polynomially at 0 (a point mass,
//!   or support bounded away from 0) instead decays exponentially in k,
//!   so log(−log pass@k) plotted against log k has no limiting slope.
//!
//! [`DistributionSpec`] catalogues both kinds: Beta/Kumaraswamy families
//! and their scale-truncated variants (power tails with tunable exponent),
//! the uniform and continuous-Bernoulli families (exponent 1), and the
//! delta/reciprocal families (no power tail) as counterexamples.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::Distribution as _;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::specfun::{
    fail_integral_near_zero, ln_beta, ln_gamma, ln_gamma_delta, QuadratureConfig,
};

/// Absolute error budget for quadrature-backed pass@k values.
const PASS_AT_K_ERROR_BUDGET: f64 = 1e-8;

/// A parametric distribution of single-attempt success probability.
///
/// Supports live inside [0, 1]; scaled variants compress the standard
/// family onto (0, c).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistributionSpec {
    /// Point mass at p.
    Delta { p: f64 },
    /// Uniform on [alpha, beta] ⊆ [0, 1].
    Uniform { alpha: f64, beta: f64 },
    /// Beta(α, β) on (0, 1).
    Beta { alpha: f64, beta: f64 },
    /// c·X for X ~ Beta(α, β): support (0, c).
    ScaledBeta { alpha: f64, beta: f64, scale: f64 },
    /// Kumaraswamy(α, β) on (0, 1): density αβ·p^(α−1)(1−p^α)^(β−1).
    Kumaraswamy { alpha: f64, beta: f64 },
    /// c·X for X ~ Kumaraswamy(α, β): support (0, c).
    ScaledKumaraswamy { alpha: f64, beta: f64, scale: f64 },
    /// Continuous Bernoulli: density C(λ)·λ^p(1−λ)^(1−p) on (0, 1).
    ContinuousBernoulli { lambda: f64 },
    /// Log-uniform (reciprocal) on (a, b) with 0 < a < b < 1.
    Reciprocal { a: f64, b: f64 },
}

/// Shape of the leading −log pass@k law of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptoticLawKind {
    /// −log pass@k shrinks geometrically in k.
    Exponential,
    /// −log pass@k ≈ coefficient · k^(−b).
    PowerLaw,
    /// −log pass@k ≈ geometric factor divided by k.
    ExponentialOverK,
}

/// Leading-order −log pass@k evaluated at a specific k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticNegLog {
    /// The leading-order law evaluated at k.
    pub value: f64,
    /// Which law shape the family follows.
    pub law: AsymptoticLawKind,
}

/// Power-law behavior of a density at p → 0⁺: f(p) ≈ C·p^(b−1).
///
/// When present, the implied aggregate scaling is
/// −log pass@k ≈ C·Γ(b)·k^(−b).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub has_power_tail: bool,
    /// Tail exponent b (density power + 1); present iff has_power_tail.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent_b: Option<f64>,
    /// Density prefactor C at 0⁺; present iff has_power_tail.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coefficient_c: Option<f64>,
    /// C·Γ(b), the predicted −log pass@k coefficient.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predicted_neglog_coefficient: Option<f64>,
}

impl TailLaw {
    fn none() -> Self {
        Self {
            has_power_tail: false,
            exponent_b: None,
            coefficient_c: None,
            predicted_neglog_coefficient: None,
        }
    }

    fn power(b: f64, c: f64) -> Self {
        Self {
            has_power_tail: true,
            exponent_b: Some(b),
            coefficient_c: Some(c),
            predicted_neglog_coefficient: Some(c * ln_gamma(b).expect("b > 0").exp()),
        }
    }
}

/// Normalizer C(λ) of the continuous Bernoulli density.
///
/// Closed form 2·atanh(1−2λ)/(1−2λ); the removable singularity at λ = 1/2
/// is bridged by the even series 2·(1 + d²/3 + d⁴/5) in d = 1−2λ within
/// |λ − 1/2| < 1e-4, where the truncation error is below 1e-16 relative.
fn continuous_bernoulli_normalizer(lambda: f64) -> f64 {
    let d = 1.0 - 2.0 * lambda;
    if d.abs() < 2e-4 {
        2.0 * (1.0 + d * d / 3.0 + d * d * d * d / 5.0)
    } else {
        2.0 * d.atanh() / d
    }
}

impl DistributionSpec {
    /// Check the per-family parameter invariants.
    ///
    /// # Errors
    ///
    /// Domain error naming the violated constraint.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain(msg));
        match *self {
            Self::Delta { p } => {
                if !(p > 0.0 && p < 1.0) {
                    return fail(format!("delta needs 0 < p < 1, got p={p}"));
                }
            }
            Self::Uniform { alpha, beta } => {
                if !(alpha >= 0.0 && alpha < beta && beta <= 1.0) {
                    return fail(format!(
                        "uniform needs 0 ≤ alpha < beta ≤ 1, got alpha={alpha}, beta={beta}"
                    ));
                }
            }
            Self::Beta { alpha, beta } | Self::Kumaraswamy { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return fail(format!(
                        "shape parameters must be positive finite, got alpha={alpha}, beta={beta}"
                    ));
                }
            }
            Self::ScaledBeta { alpha, beta, scale }
            | Self::ScaledKumaraswamy { alpha, beta, scale } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return fail(format!(
                        "shape parameters must be positive finite, got alpha={alpha}, beta={beta}"
                    ));
                }
                if !(scale > 0.0 && scale <= 1.0) {
                    return fail(format!("scale needs 0 < c ≤ 1, got c={scale}"));
                }
            }
            Self::ContinuousBernoulli { lambda } => {
                if !(lambda > 0.0 && lambda < 1.0) {
                    return fail(format!(
                        "continuous Bernoulli needs 0 < lambda < 1, got lambda={lambda}"
                    ));
                }
            }
            Self::Reciprocal { a, b } => {
                if !(a > 0.0 && a < b && b < 1.0) {
                    return fail(format!(
                        "reciprocal needs 0 < a < b < 1, got a={a}, b={b}"
                    ));
                }
            }
        }
        Ok(())
    }

    /// The closed support [lo, hi] of the family.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::Delta { p } => (p, p),
            Self::Uniform { alpha, beta } => (alpha, beta),
            Self::Beta { .. } | Self::Kumaraswamy { .. } | Self::ContinuousBernoulli { .. } => {
                (0.0, 1.0)
            }
            Self::ScaledBeta { scale, .. } | Self::ScaledKumaraswamy { scale, .. } => (0.0, scale),
            Self::Reciprocal { a, b } => (a, b),
        }
    }

    /// The family name used in the JSON serialization.
    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Delta { .. } => "delta",
            Self::Uniform { .. } => "uniform",
            Self::Beta { .. } => "beta",
            Self::ScaledBeta { .. } => "scaled_beta",
            Self::Kumaraswamy { .. } => "kumaraswamy",
            Self::ScaledKumaraswamy { .. } => "scaled_kumaraswamy",
            Self::ContinuousBernoulli { .. } => "continuous_bernoulli",
            Self::Reciprocal { .. } => "reciprocal",
        }
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let mut map = BTreeMap::new();
        match *self {
            Self::Delta { p } => {
                map.insert("p".into(), p);
            }
            Self::Uniform { alpha, beta }
            | Self::Beta { alpha, beta }
            | Self::Kumaraswamy { alpha, beta } => {
                map.insert("alpha".into(), alpha);
                map.insert("beta".into(), beta);
            }
            Self::ScaledBeta { alpha, beta, scale }
            | Self::ScaledKumaraswamy { alpha, beta, scale } => {
                map.insert("alpha".into(), alpha);
                map.insert("beta".into(), beta);
                map.insert("scale".into(), scale);
            }
            Self::ContinuousBernoulli { lambda } => {
                map.insert("lambda".into(), lambda);
            }
            Self::Reciprocal { a, b } => {
                map.insert("a".into(), a);
                map.insert("b".into(), b);
            }
        }
        map
    }

    /// Build a validated spec from a family name and named parameters.
    ///
    /// # Errors
    ///
    /// Domain error for unknown families, missing/extra parameters, or
    /// parameter values violating the family invariants.
    pub fn from_parts(family: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let get = |name: &str| -> Result<f64> {
            params.get(name).copied().ok_or_else(|| {
                Error::Domain(format!("family {family:?} needs parameter {name:?}"))
            })
        };
        let (spec, expected): (Self, &[&str]) = match family {
            "delta" => (Self::Delta { p: get("p")? }, &["p"]),
            "uniform" => (
                Self::Uniform {
                    alpha: get("alpha")?,
                    beta: get("beta")?,
                },
                &["alpha", "beta"],
            ),
            "beta" => (
                Self::Beta {
                    alpha: get("alpha")?,
                    beta: get("beta")?,
                },
                &["alpha", "beta"],
            ),
            "scaled_beta" => (
                Self::ScaledBeta {
                    alpha: get("alpha")?,
                    beta: get("beta")?,
                    scale: get("scale")?,
                },
                &["alpha", "beta", "scale"],
            ),
            "kumaraswamy" => (
                Self::Kumaraswamy {
                    alpha: get("alpha")?,
                    beta: get("beta")?,
                },
                &["alpha", "beta"],
            ),
            "scaled_kumaraswamy" => (
                Self::ScaledKumaraswamy {
                    alpha: get("alpha")?,
                    beta: get("beta")?,
                    scale: get("scale")?,
                },
                &["alpha", "beta", "scale"],
            ),
            "continuous_bernoulli" => (
                Self::ContinuousBernoulli {
                    lambda: get("lambda")?,
                },
                &["lambda"],
            ),
            "reciprocal" => (
                Self::Reciprocal {
                    a: get("a")?,
                    b: get("b")?,
                },
                &["a", "b"],
            ),
            other => {
                return Err(Error::Domain(format!("unknown distribution family {other:?}")))
            }
        };
        for name in params.keys() {
            if !expected.contains(&name.as_str()) {
                return Err(Error::Domain(format!(
                    "family {family:?} does not accept parameter {name:?}"
                )));
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Density at p; zero outside the support.
    ///
    /// # Errors
    ///
    /// Domain error for the delta family (a point mass has no density) or
    /// invalid parameters.
    pub fn pdf(&self, p: f64) -> Result<f64> {
        self.validate()?;
        if matches!(self, Self::Delta { .. }) {
            return Err(Error::Domain(
                "delta is a point mass with no density; use sample or expected_pass_at_k".into(),
            ));
        }
        Ok(self.density_unchecked(p))
    }

    /// Density for non-delta families, assuming validated parameters.
    fn density_unchecked(&self, p: f64) -> f64 {
        match *self {
            Self::Delta { .. } => unreachable!("delta has no density"),
            Self::Uniform { alpha, beta } => {
                if p < alpha || p > beta {
                    0.0
                } else {
                    1.0 / (beta - alpha)
                }
            }
            Self::Beta { alpha, beta } => {
                if p <= 0.0 || p >= 1.0 {
                    return 0.0;
                }
                ((alpha - 1.0) * p.ln() + (beta - 1.0) * (-p).ln_1p()
                    - ln_beta(alpha, beta).expect("validated"))
                .exp()
            }
            Self::ScaledBeta { alpha, beta, scale } => {
                if p <= 0.0 || p >= scale {
                    return 0.0;
                }
                // Density of c·X, X ~ Beta(α, β):
                //   f(p) = p^(α−1)·(c−p)^(β−1) / (c^(α+β−1)·B(α, β)).
                ((alpha - 1.0) * p.ln() + (beta - 1.0) * (scale - p).ln()
                    - (alpha + beta - 1.0) * scale.ln()
                    - ln_beta(alpha, beta).expect("validated"))
                .exp()
            }
            Self::Kumaraswamy { alpha, beta } => {
                if p <= 0.0 || p >= 1.0 {
                    return 0.0;
                }
                alpha * beta * p.powf(alpha - 1.0) * (1.0 - p.powf(alpha)).powf(beta - 1.0)
            }
            Self::ScaledKumaraswamy { alpha, beta, scale } => {
                if p <= 0.0 || p >= scale {
                    return 0.0;
                }
                let z = p / scale;
                alpha * beta / scale.powf(alpha) * p.powf(alpha - 1.0)
                    * (1.0 - z.powf(alpha)).powf(beta - 1.0)
            }
            Self::ContinuousBernoulli { lambda } => {
                if p < 0.0 || p > 1.0 {
                    return 0.0;
                }
                continuous_bernoulli_normalizer(lambda)
                    * (p * lambda.ln() + (1.0 - p) * (-lambda).ln_1p()).exp()
            }
            Self::Reciprocal { a, b } => {
                if p < a || p > b {
                    0.0
                } else {
                    1.0 / (p * (b / a).ln())
                }
            }
        }
    }

    /// Draw `count` values, deterministically in `seed`.
    ///
    /// Uniform, Kumaraswamy (scaled or not), continuous Bernoulli, and
    /// reciprocal use their closed-form inverse CDFs; Beta families use the
    /// standard Beta sampler; delta repeats the constant.
    ///
    /// # Errors
    ///
    /// Domain error for invalid parameters.
    pub fn sample(&self, seed: u64, count: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        // Uniform on the open interval (0, 1): 53 random mantissa bits,
        // offset by half a step so 0.0 and 1.0 are unreachable.
        let unit_open = move |rng: &mut ChaCha12Rng| -> f64 {
            ((rng.gen::<u64>() >> 11) as f64).mul_add(f64::EPSILON / 2.0, f64::EPSILON / 4.0)
        };
        let out = match *self {
            Self::Delta { p } => vec![p; count],
            Self::Uniform { alpha, beta } => (0..count)
                .map(|_| alpha + (beta - alpha) * unit_open(&mut rng))
                .collect(),
            Self::Beta { alpha, beta } => {
                let sampler = rand_distr::Beta::new(alpha, beta).expect("validated");
                (0..count).map(|_| sampler.sample(&mut rng)).collect()
            }
            Self::ScaledBeta { alpha, beta, scale } => {
                let sampler = rand_distr::Beta::new(alpha, beta).expect("validated");
                (0..count).map(|_| scale * sampler.sample(&mut rng)).collect()
            }
            Self::Kumaraswamy { alpha, beta } => (0..count)
                .map(|_| kumaraswamy_inverse_cdf(unit_open(&mut rng), alpha, beta))
                .collect(),
            Self::ScaledKumaraswamy { alpha, beta, scale } => (0..count)
                .map(|_| scale * kumaraswamy_inverse_cdf(unit_open(&mut rng), alpha, beta))
                .collect(),
            Self::ContinuousBernoulli { lambda } => (0..count)
                .map(|_| continuous_bernoulli_inverse_cdf(unit_open(&mut rng), lambda))
                .collect(),
            Self::Reciprocal { a, b } => (0..count)
                .map(|_| a * (b / a).powf(unit_open(&mut rng)))
                .collect(),
        };
        Ok(out)
    }

    /// Log of the failure integral I(k) = E[(1−p)^k].
    ///
    /// Closed forms for delta, uniform, and Beta; adaptive quadrature of
    /// (1−p)^k against the density otherwise, with the geometric factor of
    /// the reciprocal family peeled off analytically so the result stays
    /// meaningful on the log scale at any k.
    fn ln_failure_integral(&self, k: u64) -> Result<f64> {
        self.validate()?;
        if k == 0 {
            return Err(Error::Domain("pass@k needs k ≥ 1".into()));
        }
        let kf = k as f64;
        let config = QuadratureConfig::default();
        match *self {
            Self::Delta { p } => Ok(kf * (-p).ln_1p()),
            Self::Uniform { alpha, beta } => {
                // I = [(1−α)^(k+1) − (1−β)^(k+1)] / ((k+1)(β−α)).
                let kf1 = kf + 1.0;
                let ln_lead = kf1 * (-alpha).ln_1p();
                let ratio_term = if beta < 1.0 {
                    let ln_r = (-beta).ln_1p() - (-alpha).ln_1p();
                    (-(kf1 * ln_r).exp_m1()).ln()
                } else {
                    0.0
                };
                Ok(ln_lead + ratio_term - (kf1 * (beta - alpha)).ln())
            }
            Self::Beta { alpha, beta } => {
                // I = B(α, β+k)/B(α, β) = exp(lnΓ differences), grouped as
                // same-scale increments so large k costs no precision.
                Ok(ln_gamma_delta(beta, alpha) - ln_gamma_delta(beta + kf, alpha))
            }
            Self::ScaledBeta { alpha, beta, scale } => {
                let result = fail_integral_near_zero(
                    &|p| self.density_unchecked(p),
                    scale,
                    alpha,
                    Some(beta),
                    k,
                    &config,
                )?;
                self.finite_ln_integral(result.value, result.error_estimate)
            }
            Self::Kumaraswamy { alpha, beta } => {
                let result = fail_integral_near_zero(
                    &|p| self.density_unchecked(p),
                    1.0,
                    alpha,
                    Some(beta),
                    k,
                    &config,
                )?;
                self.finite_ln_integral(result.value, result.error_estimate)
            }
            Self::ScaledKumaraswamy { alpha, beta, scale } => {
                let result = fail_integral_near_zero(
                    &|p| self.density_unchecked(p),
                    scale,
                    alpha,
                    Some(beta),
                    k,
                    &config,
                )?;
                self.finite_ln_integral(result.value, result.error_estimate)
            }
            Self::ContinuousBernoulli { .. } => {
                let result = fail_integral_near_zero(
                    &|p| self.density_unchecked(p),
                    1.0,
                    1.0,
                    Some(1.0),
                    k,
                    &config,
                )?;
                self.finite_ln_integral(result.value, result.error_estimate)
            }
            Self::Reciprocal { a, b } => {
                // Substitute p = a + (1−a)τ: I = (1−a)^k · J with
                //   J = ∫₀^((b−a)/(1−a)) (1−τ)^k · (1−a)·f(a + (1−a)τ) dτ,
                // so the geometric factor never underflows the quadrature.
                let hi = (b - a) / (1.0 - a);
                let result = fail_integral_near_zero(
                    &|tau| (1.0 - a) * self.density_unchecked(a + (1.0 - a) * tau),
                    hi,
                    1.0,
                    Some(1.0),
                    k,
                    &config,
                )?;
                if !(result.value > 0.0) {
                    return Err(Error::Numerical(format!(
                        "failure integral collapsed to {} for {self}",
                        result.value
                    )));
                }
                Ok(kf * (-a).ln_1p() + result.value.ln())
            }
        }
    }

    fn finite_ln_integral(&self, value: f64, error_estimate: f64) -> Result<f64> {
        if error_estimate > PASS_AT_K_ERROR_BUDGET {
            return Err(Error::QuadratureBudget {
                estimate: value,
                error_estimate,
                required: PASS_AT_K_ERROR_BUDGET,
            });
        }
        if !(value > 0.0) {
            return Err(Error::Numerical(format!(
                "failure integral collapsed to {value} for {self}"
            )));
        }
        Ok(value.ln())
    }

    /// Aggregate pass@k: 1 − E[(1−p)^k], with absolute error ≤ 1e-8.
    ///
    /// # Errors
    ///
    /// Domain error for invalid parameters or k = 0; quadrature budget
    /// exhaustion propagates with its best estimate.
    pub fn expected_pass_at_k(&self, k: u64) -> Result<f64> {
        Ok(-self.ln_failure_integral(k)?.exp_m1())
    }

    /// −log expected pass@k, accurate even where pass@k rounds to 1.
    ///
    /// # Errors
    ///
    /// As for [`expected_pass_at_k`].
    pub fn expected_neg_log_pass_at_k(&self, k: u64) -> Result<f64> {
        let ln_i = self.ln_failure_integral(k)?;
        let i = ln_i.exp();
        if i >= 1.0 {
            return Ok(f64::INFINITY);
        }
        Ok(-(-i).ln_1p())
    }

    /// The family's leading-order −log pass@k law evaluated at k, with the
    /// law-shape descriptor.
    ///
    /// # Errors
    ///
    /// Domain error for invalid parameters or k = 0.
    pub fn asymptotic_neg_log(&self, k: u64) -> Result<AsymptoticNegLog> {
        self.validate()?;
        if k == 0 {
            return Err(Error::Domain("asymptotic law needs k ≥ 1".into()));
        }
        let kf = k as f64;
        let gamma = |x: f64| ln_gamma(x).expect("positive").exp();
        let out = match *self {
            Self::Delta { p } => AsymptoticNegLog {
                value: (kf * (-p).ln_1p()).exp(),
                law: AsymptoticLawKind::Exponential,
            },
            Self::Uniform { alpha, beta } => {
                if alpha == 0.0 {
                    AsymptoticNegLog {
                        value: 1.0 / (beta * kf),
                        law: AsymptoticLawKind::PowerLaw,
                    }
                } else {
                    AsymptoticNegLog {
                        value: ((kf + 1.0) * (-alpha).ln_1p()).exp()
                            / ((kf + 1.0) * (beta - alpha)),
                        law: AsymptoticLawKind::Exponential,
                    }
                }
            }
            Self::Beta { alpha, beta } => AsymptoticNegLog {
                value: (ln_gamma(alpha + beta).expect("positive")
                    - ln_gamma(beta).expect("positive"))
                .exp()
                    * kf.powf(-alpha),
                law: AsymptoticLawKind::PowerLaw,
            },
            Self::ScaledBeta { alpha, .. }
            | Self::Kumaraswamy { alpha, .. }
            | Self::ScaledKumaraswamy { alpha, .. } => {
                let law = self.tail_law();
                AsymptoticNegLog {
                    value: law.coefficient_c.expect("power tail") * gamma(alpha)
                        * kf.powf(-alpha),
                    law: AsymptoticLawKind::PowerLaw,
                }
            }
            Self::ContinuousBernoulli { lambda } => AsymptoticNegLog {
                value: continuous_bernoulli_normalizer(lambda) * (1.0 - lambda) / kf,
                law: AsymptoticLawKind::PowerLaw,
            },
            Self::Reciprocal { a, b } => AsymptoticNegLog {
                value: ((kf + 1.0) * (-a).ln_1p()).exp() / ((kf + 1.0) * a * (b / a).ln()),
                law: AsymptoticLawKind::ExponentialOverK,
            },
        };
        Ok(out)
    }

    /// Extract the density's power-law behavior at 0⁺, if any.
    pub fn tail_law(&self) -> TailLaw {
        match *self {
            Self::Delta { .. } | Self::Reciprocal { .. } => TailLaw::none(),
            Self::Uniform { alpha, beta } => {
                if alpha == 0.0 {
                    TailLaw::power(1.0, 1.0 / beta)
                } else {
                    TailLaw::none()
                }
            }
            Self::Beta { alpha, beta } => {
                TailLaw::power(alpha, (-ln_beta(alpha, beta).expect("validated")).exp())
            }
            Self::ScaledBeta { alpha, beta, scale } => {
                // At p → 0⁺ the density p^(α−1)(c−p)^(β−1)/(c^(α+β−1)B(α,β))
                // tends to p^(α−1)·c^(β−1)/(c^(α+β−1)B(α,β)), so
                //   C = c^(β−1) / (c^(α+β−1)·B(α, β)) = c^(−α)/B(α, β).
                let c = (-alpha * scale.ln() - ln_beta(alpha, beta).expect("validated")).exp();
                TailLaw::power(alpha, c)
            }
            Self::Kumaraswamy { alpha, beta } => TailLaw::power(alpha, alpha * beta),
            Self::ScaledKumaraswamy { alpha, beta, scale } => {
                TailLaw::power(alpha, alpha * beta / scale.powf(alpha))
            }
            Self::ContinuousBernoulli { lambda } => TailLaw::power(
                1.0,
                continuous_bernoulli_normalizer(lambda) * (1.0 - lambda),
            ),
        }
    }
}

/// Inverse CDF of Kumaraswamy(α, β): u ↦ (1 − (1−u)^(1/β))^(1/α).
fn kumaraswamy_inverse_cdf(u: f64, alpha: f64, beta: f64) -> f64 {
    (1.0 - (1.0 - u).powf(1.0 / beta)).powf(1.0 / alpha)
}

/// Inverse CDF of the continuous Bernoulli in t = 2λ−1:
/// u ↦ ln(1 + 2tu/(1−t)) / (2·atanh t), which degenerates to u at t = 0.
fn continuous_bernoulli_inverse_cdf(u: f64, lambda: f64) -> f64 {
    let t = 2.0 * lambda - 1.0;
    if t.abs() < 1e-12 {
        u
    } else {
        (2.0 * t * u / (1.0 - t)).ln_1p() / (2.0 * t.atanh())
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family_name())?;
        for (i, (name, value)) in self.params().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}={value}")?;
        }
        write!(f, ")")
    }
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    family: String,
    params: BTreeMap<String, f64>,
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpecRepr {
            family: self.family_name().into(),
            params: self.params(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = SpecRepr::deserialize(deserializer)?;
        Self::from_parts(&repr.family, &repr.params).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use crate::specfun::integrate_with_endpoints as integrate_density;

    use super::*;

    const KUMA: DistributionSpec = DistributionSpec::Kumaraswamy {
        alpha: 0.5,
        beta: 2.0,
    };
    const SKUMA: DistributionSpec = DistributionSpec::ScaledKumaraswamy {
        alpha: 0.5,
        beta: 2.0,
        scale: 0.1,
    };
    const SBETA: DistributionSpec = DistributionSpec::ScaledBeta {
        alpha: 0.3,
        beta: 2.0,
        scale: 0.5,
    };
    const BETA: DistributionSpec = DistributionSpec::Beta {
        alpha: 0.3,
        beta: 2.0,
    };
    const CB: DistributionSpec = DistributionSpec::ContinuousBernoulli { lambda: 0.3 };
    const RECIP: DistributionSpec = DistributionSpec::Reciprocal { a: 0.1, b: 0.9 };

    fn assert_close(actual: f64, expected: f64, tolerance: f64, label: &str) {
        assert!(
            (actual - expected).abs() <= tolerance,
            "{label}: got {actual}, want {expected} (diff {})",
            (actual - expected).abs()
        );
    }

    #[test]
    fn validation_rejects_out_of_range_parameters() {
        assert!(DistributionSpec::Delta { p: 0.0 }.validate().is_err());
        assert!(DistributionSpec::Delta { p: 1.0 }.validate().is_err());
        assert!(DistributionSpec::Uniform { alpha: 0.5, beta: 0.5 }.validate().is_err());
        assert!(DistributionSpec::Uniform { alpha: -0.1, beta: 0.5 }.validate().is_err());
        assert!(DistributionSpec::Uniform { alpha: 0.0, beta: 1.1 }.validate().is_err());
        assert!(DistributionSpec::Beta { alpha: 0.0, beta: 1.0 }.validate().is_err());
        assert!(DistributionSpec::ScaledBeta { alpha: 1.0, beta: 1.0, scale: 0.0 }
            .validate()
            .is_err());
        assert!(DistributionSpec::ScaledKumaraswamy { alpha: 1.0, beta: 1.0, scale: 1.5 }
            .validate()
            .is_err());
        assert!(DistributionSpec::ContinuousBernoulli { lambda: 1.0 }.validate().is_err());
        assert!(DistributionSpec::Reciprocal { a: 0.2, b: 0.2 }.validate().is_err());
        assert!(DistributionSpec::Reciprocal { a: 0.2, b: 1.0 }.validate().is_err());
        assert!(KUMA.validate().is_ok());
    }

    #[test]
    fn json_round_trip_and_shape() {
        let json = serde_json::to_string(&SKUMA).unwrap();
        assert_eq!(
            json,
            r#"{"family":"scaled_kumaraswamy","params":{"alpha":0.5,"beta":2.0,"scale":0.1}}"#
        );
        let back: DistributionSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, SKUMA);
        for spec in [
            DistributionSpec::Delta { p: 0.25 },
            DistributionSpec::Uniform { alpha: 0.2, beta: 0.7 },
            BETA,
            SBETA,
            KUMA,
            CB,
            RECIP,
        ] {
            let json = serde_json::to_string(&spec).unwrap();
            let back: DistributionSpec = serde_json::from_str(&json).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn json_rejects_invalid_specs() {
        for bad in [
            r#"{"family":"beta","params":{"alpha":-1.0,"beta":2.0}}"#,
            r#"{"family":"nope","params":{}}"#,
            r#"{"family":"beta","params":{"alpha":1.0}}"#,
            r#"{"family":"delta","params":{"p":0.5,"q":0.5}}"#,
        ] {
            assert!(serde_json::from_str::<DistributionSpec>(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn pdf_reference_values() {
        let uniform = DistributionSpec::Uniform { alpha: 0.0, beta: 1.0 };
        assert_eq!(uniform.pdf(0.3).unwrap(), 1.0);
        let flat_beta = DistributionSpec::Beta { alpha: 1.0, beta: 1.0 };
        assert_close(flat_beta.pdf(0.47).unwrap(), 1.0, 1e-14, "beta(1,1)");
        let flat_scaled = DistributionSpec::ScaledKumaraswamy {
            alpha: 1.0,
            beta: 1.0,
            scale: 0.5,
        };
        assert_close(flat_scaled.pdf(0.2).unwrap(), 2.0, 1e-14, "skuma(1,1,0.5)");
        assert_close(KUMA.pdf(0.25).unwrap(), 1.0, 1e-14, "kuma(0.5,2)@0.25");
        assert_close(
            SKUMA.pdf(0.04).unwrap(),
            5.8113883008418967,
            1e-13,
            "skuma@0.04",
        );
        assert_close(
            SBETA.pdf(0.2).unwrap(),
            0.88879961773087743,
            1e-13,
            "sbeta@0.2",
        );
        assert_close(CB.pdf(0.6).unwrap(), 0.89184234143798835, 1e-13, "cb@0.6");
        assert_close(
            RECIP.pdf(0.3).unwrap(),
            1.5170653777113957,
            1e-13,
            "reciprocal@0.3",
        );
        // Outside support.
        assert_eq!(SBETA.pdf(0.6).unwrap(), 0.0);
        assert_eq!(RECIP.pdf(0.05).unwrap(), 0.0);
        assert_eq!(flat_scaled.pdf(0.7).unwrap(), 0.0);
        // Point mass has no density.
        assert!(DistributionSpec::Delta { p: 0.3 }.pdf(0.3).is_err());
    }

    #[test]
    fn densities_normalize_over_randomized_parameters() {
        let mut rng = ChaCha12Rng::seed_from_u64(77);
        let mut shape = |rng: &mut ChaCha12Rng| (-1.2 + 2.7 * rng.gen::<f64>()).exp();
        let config = QuadratureConfig::default();
        let mut cases: Vec<(DistributionSpec, f64, f64, f64, f64)> = Vec::new();
        for _ in 0..3 {
            let (a, b) = (shape(&mut rng), shape(&mut rng));
            let c = 0.05 + 0.95 * rng.gen::<f64>();
            let lo = 0.05 + 0.4 * rng.gen::<f64>();
            let hi = lo + (0.95 - lo) * rng.gen::<f64>();
            let lambda = 0.05 + 0.9 * rng.gen::<f64>();
            cases.push((DistributionSpec::Uniform { alpha: lo, beta: hi }, lo, hi, 1.0, 1.0));
            cases.push((DistributionSpec::Beta { alpha: a, beta: b }, 0.0, 1.0, a, b));
            cases.push((
                DistributionSpec::ScaledBeta { alpha: a, beta: b, scale: c },
                0.0,
                c,
                a,
                b,
            ));
            cases.push((DistributionSpec::Kumaraswamy { alpha: a, beta: b }, 0.0, 1.0, a, b));
            cases.push((
                DistributionSpec::ScaledKumaraswamy { alpha: a, beta: b, scale: c },
                0.0,
                c,
                a,
                b,
            ));
            cases.push((
                DistributionSpec::ContinuousBernoulli { lambda },
                0.0,
                1.0,
                1.0,
                1.0,
            ));
            cases.push((DistributionSpec::Reciprocal { a: lo, b: hi }, lo, hi, 1.0, 1.0));
        }
        for (spec, lo, hi, lo_exp, hi_exp) in cases {
            let total = integrate_density(
                |p| spec.density_unchecked(p),
                lo,
                hi,
                Some(lo_exp),
                Some(hi_exp),
                &config,
            )
            .unwrap();
            assert_close(total.value, 1.0, 1e-8, &format!("normalization of {spec}"));
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let delta = DistributionSpec::Delta { p: 0.3 };
        assert_eq!(delta.sample(5, 4).unwrap(), vec![0.3, 0.3, 0.3, 0.3]);
        for spec in [
            DistributionSpec::Uniform { alpha: 0.2, beta: 0.7 },
            BETA,
            SBETA,
            KUMA,
            SKUMA,
            CB,
            RECIP,
        ] {
            let first = spec.sample(99, 512).unwrap();
            let second = spec.sample(99, 512).unwrap();
            assert_eq!(first, second, "same seed must repeat for {spec}");
            let other = spec.sample(100, 512).unwrap();
            assert_ne!(first, other, "different seed must differ for {spec}");
            let (lo, hi) = spec.support();
            assert!(
                first.iter().all(|&p| p >= lo && p <= hi),
                "samples outside [{lo}, {hi}] for {spec}"
            );
        }
    }

    #[test]
    fn kumaraswamy_sampler_matches_analytic_cdf() {
        let spec = DistributionSpec::Kumaraswamy { alpha: 2.0, beta: 3.0 };
        let mut draws = spec.sample(2024, 100_000).unwrap();
        draws.sort_unstable_by(f64::total_cmp);
        let n = draws.len() as f64;
        let cdf = |p: f64| 1.0 - (1.0 - p * p).powi(3);
        let mut ks = 0.0f64;
        for (i, &p) in draws.iter().enumerate() {
            let f = cdf(p);
            ks = ks.max((f - i as f64 / n).abs());
            ks = ks.max((f - (i as f64 + 1.0) / n).abs());
        }
        assert!(ks < 0.01, "Kolmogorov–Smirnov statistic {ks} too large");
    }

    #[test]
    fn closed_form_pass_at_k() {
        let uniform = DistributionSpec::Uniform { alpha: 0.0, beta: 1.0 };
        assert_close(uniform.expected_pass_at_k(9).unwrap(), 0.9, 1e-14, "uniform k=9");
        let delta = DistributionSpec::Delta { p: 0.3 };
        assert_close(delta.expected_pass_at_k(3).unwrap(), 0.657, 1e-14, "delta k=3");
        let flat_beta = DistributionSpec::Beta { alpha: 1.0, beta: 1.0 };
        assert_close(
            flat_beta.expected_pass_at_k(9).unwrap(),
            0.9,
            1e-12,
            "beta(1,1) k=9",
        );

        let narrow = DistributionSpec::Uniform { alpha: 0.2, beta: 0.7 };
        for (k, expected) in [
            (1, 0.45),
            (7, 0.95807336250000000),
            (100, 0.99999999999677301),
        ] {
            assert_close(
                narrow.expected_pass_at_k(k).unwrap(),
                expected,
                1e-12,
                &format!("uniform(0.2,0.7) k={k}"),
            );
        }
        for (k, expected) in [
            (1, 0.13043478260869565),
            (10, 0.44149187141224134),
            (1000, 0.85319230297799431),
            (10_000, 0.92638909898983878),
            (100_000, 0.96310551269009318),
            (1_000_000, 0.98150887159198448),
        ] {
            assert_close(
                BETA.expected_pass_at_k(k).unwrap(),
                expected,
                1e-12,
                &format!("beta(0.3,2) k={k}"),
            );
        }
    }

    #[test]
    fn quadrature_pass_at_k_reference_values() {
        let cases: [(&DistributionSpec, &[(u64, f64)]); 5] = [
            (
                &KUMA,
                &[
                    (1, 0.16666666666666667),
                    (10, 0.55038872376333677),
                    (100, 0.83331683146387854),
                    (1000, 0.94497009661057920),
                    (100_000, 0.99440502970221066),
                ],
            ),
            (
                &SKUMA,
                &[
                    (1, 0.016666666666666667),
                    (10, 0.14052168552261062),
                    (100, 0.54060166795607806),
                    (1000, 0.83281105731879367),
                    (100_000, 0.98237552695762807),
                ],
            ),
            (
                &CB,
                &[
                    (1, 0.43022250114382867),
                    (10, 0.87413559885293844),
                    (100, 0.98544005332855425),
                    (1000, 0.99851996156568037),
                ],
            ),
            (
                &SBETA,
                &[
                    (1, 0.065217391304347826),
                    (10, 0.33114605791608912),
                    (100, 0.64202884586333851),
                ],
            ),
            (
                &RECIP,
                &[(1, 0.36409569065073496), (100, 0.99999900449184498)],
            ),
        ];
        for (spec, points) in cases {
            for &(k, expected) in points {
                assert_close(
                    spec.expected_pass_at_k(k).unwrap(),
                    expected,
                    1e-9,
                    &format!("{spec} k={k}"),
                );
            }
        }
    }

    #[test]
    fn neg_log_stays_accurate_deep_in_the_saturated_regime() {
        // Where pass@k rounds to 1.0 the log-scale value must survive: the
        // reciprocal family at k=1000 has −log pass@k = e^(−110.87).
        let neg_log = RECIP.expected_neg_log_pass_at_k(1000).unwrap();
        assert_close(neg_log.ln(), -110.86810506822914, 1e-6, "reciprocal ln(-ln) k=1000");
        let neg_log = RECIP.expected_neg_log_pass_at_k(2000).unwrap();
        assert_close(neg_log.ln(), -216.91686967731757, 1e-6, "reciprocal ln(-ln) k=2000");
    }

    #[test]
    fn monte_carlo_pass_matches_quadrature() {
        // Mean of 1−(1−p)^k over a million draws vs the integral, within a
        // 4-standard-error band, for every family.
        let k = 10;
        for (seed, spec) in [
            DistributionSpec::Delta { p: 0.37 },
            DistributionSpec::Uniform { alpha: 0.2, beta: 0.7 },
            BETA,
            SBETA,
            KUMA,
            SKUMA,
            CB,
            RECIP,
        ]
        .into_iter()
        .enumerate()
        {
            let draws = spec.sample(4100 + seed as u64, 1_000_000).unwrap();
            let passes: Vec<f64> = draws
                .iter()
                .map(|&p| 1.0 - (1.0 - p).powi(k as i32))
                .collect();
            let mean = passes.iter().sum::<f64>() / passes.len() as f64;
            let variance = passes
                .iter()
                .map(|&x| (x - mean) * (x - mean))
                .sum::<f64>()
                / (passes.len() - 1) as f64;
            let se = (variance / passes.len() as f64).sqrt();
            let expected = spec.expected_pass_at_k(k).unwrap();
            assert!(
                (mean - expected).abs() <= 4.0 * se.max(1e-9),
                "{spec}: Monte Carlo {mean} vs integral {expected} (se {se})"
            );
        }
    }

    #[test]
    fn scaled_kumaraswamy_with_unit_scale_reduces_to_kumaraswamy() {
        let scaled = DistributionSpec::ScaledKumaraswamy {
            alpha: 0.5,
            beta: 2.0,
            scale: 1.0,
        };
        for p in [0.02, 0.13, 0.5, 0.77, 0.99] {
            assert_close(
                scaled.pdf(p).unwrap(),
                KUMA.pdf(p).unwrap(),
                1e-10,
                &format!("pdf@{p}"),
            );
        }
        for k in [1, 10, 100] {
            assert_close(
                scaled.expected_pass_at_k(k).unwrap(),
                KUMA.expected_pass_at_k(k).unwrap(),
                1e-10,
                &format!("pass@{k}"),
            );
        }
    }

    #[test]
    fn continuous_bernoulli_normalizer_reference_values() {
        assert_close(
            continuous_bernoulli_normalizer(0.3),
            2.1182446509680090,
            1e-14,
            "C(0.3)",
        );
        assert_close(
            continuous_bernoulli_normalizer(0.25),
            2.1972245773362194,
            1e-14,
            "C(0.25)",
        );
        // Series region: λ = 0.49995 means d = 1e-4.
        assert_close(
            continuous_bernoulli_normalizer(0.49995),
            2.0000000066666667,
            1e-15,
            "C near 1/2",
        );
        assert_eq!(continuous_bernoulli_normalizer(0.5), 2.0);
    }

    #[test]
    fn tail_law_reference_values() {
        // Beta: C·Γ(b) must reproduce Γ(α+β)/Γ(β) both analytically and
        // numerically.
        for (alpha, beta) in [(0.3, 2.0), (1.7, 0.4), (2.0, 5.0), (0.5, 0.5)] {
            let law = DistributionSpec::Beta { alpha, beta }.tail_law();
            assert!(law.has_power_tail);
            assert_eq!(law.exponent_b.unwrap(), alpha);
            let expected = (ln_gamma(alpha + beta).unwrap() - ln_gamma(beta).unwrap()).exp();
            assert_close(
                law.predicted_neglog_coefficient.unwrap(),
                expected,
                1e-12 * expected,
                "beta coefficient",
            );
        }
        let law = SBETA.tail_law();
        assert_close(
            law.coefficient_c.unwrap(),
            0.48014632120451735,
            1e-13,
            "scaled beta C",
        );
        let law = KUMA.tail_law();
        assert_eq!(law.coefficient_c.unwrap(), 1.0);
        assert_close(
            law.predicted_neglog_coefficient.unwrap(),
            1.7724538509055160,
            1e-13,
            "kuma C·Γ(b)",
        );
        let law = SKUMA.tail_law();
        assert_close(
            law.predicted_neglog_coefficient.unwrap(),
            5.6049912163979287,
            1e-12,
            "skuma C·Γ(b)",
        );
        let law = DistributionSpec::Uniform { alpha: 0.0, beta: 0.5 }.tail_law();
        assert_eq!(law.exponent_b.unwrap(), 1.0);
        assert_eq!(law.coefficient_c.unwrap(), 2.0);
        assert_close(law.predicted_neglog_coefficient.unwrap(), 2.0, 1e-14, "uniform");
        let law = CB.tail_law();
        assert_close(
            law.coefficient_c.unwrap(),
            2.1182446509680090 * 0.7,
            1e-13,
            "cb C(λ)(1−λ)",
        );
        for spec in [
            DistributionSpec::Delta { p: 0.2 },
            RECIP,
            DistributionSpec::Uniform { alpha: 0.2, beta: 0.7 },
        ] {
            let law = spec.tail_law();
            assert!(!law.has_power_tail, "{spec} must have no power tail");
            assert!(law.exponent_b.is_none());
        }
    }

    #[test]
    fn tail_law_coefficient_consistency() {
        // predicted_neglog_coefficient = C·exp(ln Γ(b)) whenever present.
        for spec in [BETA, SBETA, KUMA, SKUMA, CB] {
            let law = spec.tail_law();
            let expected =
                law.coefficient_c.unwrap() * ln_gamma(law.exponent_b.unwrap()).unwrap().exp();
            assert_eq!(law.predicted_neglog_coefficient.unwrap(), expected, "{spec}");
        }
    }

    #[test]
    fn asymptotic_law_reference_values() {
        let out = KUMA.asymptotic_neg_log(4).unwrap();
        assert_eq!(out.law, AsymptoticLawKind::PowerLaw);
        // αβΓ(α)k^(−α) = 0.5·2·Γ(0.5)·4^(−0.5) = √π/2.
        assert_close(
            out.value,
            std::f64::consts::PI.sqrt() / 2.0,
            1e-13,
            "kuma k=4",
        );
        let out = SKUMA.asymptotic_neg_log(1).unwrap();
        assert_close(out.value, 5.6049912163979287, 1e-12, "skuma coefficient");
        let skuma_shallow = DistributionSpec::ScaledKumaraswamy {
            alpha: 0.35,
            beta: 2.0,
            scale: 0.2,
        };
        let out = skuma_shallow.asymptotic_neg_log(1).unwrap();
        assert_close(out.value, 3.1305526440457460, 1e-12, "skuma(0.35,2,0.2) coefficient");
        let out = CB.asymptotic_neg_log(1).unwrap();
        assert_close(out.value, 2.1182446509680090 * 0.7, 1e-13, "cb coefficient");
        let cb25 = DistributionSpec::ContinuousBernoulli { lambda: 0.25 };
        let out = cb25.asymptotic_neg_log(1_000_000).unwrap();
        assert_close(out.value, 1.6479184330021645e-6, 1e-16, "cb(0.25) k=1e6");
        // Oracle: the quadrature value at k = 10⁶ agrees to ~1/k.
        let quadrature = cb25.expected_neg_log_pass_at_k(1_000_000).unwrap();
        assert!(
            (quadrature / out.value - 1.0).abs() < 1e-3,
            "cb(0.25) asymptote {} vs quadrature {quadrature}",
            out.value
        );
        assert_eq!(
            DistributionSpec::Delta { p: 0.3 }.asymptotic_neg_log(5).unwrap().law,
            AsymptoticLawKind::Exponential
        );
        assert_eq!(
            DistributionSpec::Uniform { alpha: 0.2, beta: 0.7 }
                .asymptotic_neg_log(5)
                .unwrap()
                .law,
            AsymptoticLawKind::Exponential
        );
        let out = DistributionSpec::Uniform { alpha: 0.0, beta: 0.5 }
            .asymptotic_neg_log(100)
            .unwrap();
        assert_eq!(out.law, AsymptoticLawKind::PowerLaw);
        assert_close(out.value, 0.02, 1e-15, "uniform(0,0.5) k=100");
        let out = RECIP.asymptotic_neg_log(2000).unwrap();
        assert_eq!(out.law, AsymptoticLawKind::ExponentialOverK);
        // (1−a)^(k+1)/((k+1)·a·ln(b/a)) tracks the true log-scale value to
        // O(1/k) by Watson's lemma.
        let true_ln = RECIP.expected_neg_log_pass_at_k(2000).unwrap().ln();
        assert!(
            (out.value.ln() - true_ln).abs() < 0.02,
            "reciprocal asymptote ln {} vs true ln {true_ln}",
            out.value.ln()
        );
    }

    #[test]
    fn power_tails_predict_the_neg_log_coefficient() {
        // For every family with a power tail, −log pass@k divided by
        // C·Γ(b)·k^(−b) approaches 1 monotonically; small exponents need
        // larger k for the 5% window.
        let cases: [(&DistributionSpec, [u64; 3]); 6] = [
            (&KUMA, [1000, 10_000, 100_000]),
            (&SKUMA, [1000, 10_000, 100_000]),
            (&BETA, [10_000, 100_000, 1_000_000]),
            (&SBETA, [10_000, 100_000, 1_000_000]),
            (&CB, [1000, 10_000, 100_000]),
            (
                &DistributionSpec::Uniform { alpha: 0.0, beta: 0.5 },
                [1000, 10_000, 100_000],
            ),
        ];
        for (spec, ks) in cases {
            let law = spec.tail_law();
            let (b, coefficient) = (
                law.exponent_b.unwrap(),
                law.predicted_neglog_coefficient.unwrap(),
            );
            let ratios: Vec<f64> = ks
                .iter()
                .map(|&k| {
                    spec.expected_neg_log_pass_at_k(k).unwrap()
                        / (coefficient * (k as f64).powf(-b))
                })
                .collect();
            assert!(
                (ratios[2] - 1.0).abs() <= 0.05,
                "{spec}: final ratio {} outside [0.95, 1.05]",
                ratios[2]
            );
            assert!(
                (ratios[0] - 1.0).abs() > (ratios[1] - 1.0).abs()
                    && (ratios[1] - 1.0).abs() > (ratios[2] - 1.0).abs(),
                "{spec}: ratios {ratios:?} must close in on 1 monotonically"
            );
        }
    }

    #[test]
    fn power_tail_ratio_reference_values() {
        let cases: [(&DistributionSpec, [(u64, f64); 3], f64); 4] = [
            (
                &KUMA,
                [
                    (1000, 1.0098498570667564),
                    (10_000, 1.0031873966791536),
                    (100_000, 1.0010150872047979),
                ],
                1e-7,
            ),
            (
                &SKUMA,
                [
                    (1000, 1.0321762927482901),
                    (10_000, 1.0101898364302890),
                    (100_000, 1.0032212333748496),
                ],
                1e-7,
            ),
            (
                &BETA,
                [
                    (10_000, 1.0386662006623396),
                    (100_000, 1.0189088720460807),
                    (1_000_000, 1.0093606428923623),
                ],
                1e-9,
            ),
            (
                &DistributionSpec::Uniform { alpha: 0.0, beta: 0.5 },
                [
                    (1000, 1.0000003333335333),
                    (10_000, 1.0000000033333334),
                    (100_000, 1.0000000000333333),
                ],
                1e-12,
            ),
        ];
        for (spec, points, tolerance) in cases {
            let law = spec.tail_law();
            let (b, coefficient) = (
                law.exponent_b.unwrap(),
                law.predicted_neglog_coefficient.unwrap(),
            );
            for (k, expected) in points {
                let ratio = spec.expected_neg_log_pass_at_k(k).unwrap()
                    / (coefficient * (k as f64).powf(-b));
                assert_close(ratio, expected, tolerance, &format!("{spec} ratio k={k}"));
            }
        }
    }

    #[test]
    fn families_without_power_tails_have_diverging_log_log_slopes() {
        // The other direction: point masses and supports bounded away from
        // zero give log(−log pass@k) vs log k slopes that blow up with k
        // instead of settling at a constant −b.
        let octave_slope = |spec: &DistributionSpec, k: u64| -> f64 {
            let up = spec.expected_neg_log_pass_at_k(2 * k).unwrap().ln();
            let down = spec.expected_neg_log_pass_at_k(k / 2).unwrap().ln();
            (up - down) / (4.0f64).ln()
        };
        let delta = DistributionSpec::Delta { p: 0.3 };
        let s100 = octave_slope(&delta, 100);
        let s1000 = octave_slope(&delta, 1000);
        assert_close(s100, -38.592987968718460, 1e-9 * 38.6, "delta slope k=100");
        assert_close(s1000, -385.92987962231868, 1e-9 * 386.0, "delta slope k=1000");
        assert!(s1000.abs() > 5.0 * s100.abs());

        let s100 = octave_slope(&RECIP, 100);
        let s1000 = octave_slope(&RECIP, 1000);
        assert_close(s100, -12.317249727166605, 1e-5, "reciprocal slope k=100");
        assert_close(s1000, -114.99185831465825, 1e-4, "reciprocal slope k=1000");
        assert!(s1000.abs() > 5.0 * s100.abs());

        // Contrast: a power-tail family's slope settles near −b.
        let sk100 = octave_slope(&KUMA, 100);
        let sk1000 = octave_slope(&KUMA, 1000);
        assert!((sk100 + 0.5).abs() < 0.02, "kuma slope {sk100}");
        assert!((sk1000 + 0.5).abs() < 0.005, "kuma slope {sk1000}");
    }

    #[test]
    fn display_names_parameters() {
        assert_eq!(SKUMA.to_string(), "scaled_kumaraswamy(alpha=0.5, beta=2, scale=0.1)");
        assert_eq!(
            DistributionSpec::Delta { p: 0.25 }.to_string(),
            "delta(p=0.25)"
        );
    }
}
