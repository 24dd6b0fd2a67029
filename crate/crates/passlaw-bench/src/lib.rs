//! Shared fixtures for the criterion benchmarks in `benches/`.

use passlaw::distributions::DistributionSpec;
use passlaw::ingest::BenchmarkData;
use passlaw::synthbench::{generate_benchmark, SyntheticGroundTruth};

/// A deterministic heavy-tailed benchmark of the given size.
pub fn synthetic_fixture(problems: u64, samples: u64) -> BenchmarkData {
    let latent = DistributionSpec::ScaledBeta {
        alpha: 0.35,
        beta: 2.0,
        scale: 0.2,
    };
    let truth = SyntheticGroundTruth::new(latent, problems, samples, 7)
        .expect("fixture specification is valid");
    generate_benchmark(&truth).expect("fixture generation succeeds")
}
