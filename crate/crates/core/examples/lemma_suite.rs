//! Runs the white-box lemma checks against a distribution and noise model
//! and prints every check with its margin.
//!
//! ```text
//! cargo run --release --example lemma_suite -- [samples]
//! ```

use halfspace_al::diagnostics::{verify_lemma_suite, SuiteSettings};
use halfspace_al::distributions::{Family, WellBehavedDistribution};
use halfspace_al::oracles::{GroundTruth, NoiseModel};
use halfspace_al::stream;

fn main() -> halfspace_al::Result<()> {
    let samples: u64 = std::env::args().nth(1).map_or(200_000, |s| s.parse().expect("samples"));
    let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 10)?;
    let truth = GroundTruth::random(10, &mut stream(1, 0));
    let settings = SuiteSettings { samples, ..SuiteSettings::default() };
    let report = verify_lemma_suite(&dist, &NoiseModel::MassartConstant { eta: 0.2 }, &truth, &settings, 1)?;
    for c in &report.checks {
        println!(
            "{:<4} {:<40} measured {:>12.5e}  bound {:>12.5e}  margin {:>+11.3e}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.measured,
            c.bound,
            c.margin
        );
    }
    println!("{} checks, {} failed", report.checks.len(), report.failures().count());
    Ok(())
}
