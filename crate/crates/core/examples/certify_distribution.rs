//! Certifies the (L, R, U, β) constants of each supported family and shows
//! a deliberately wrong set of constants being rejected.
//!
//! ```text
//! cargo run --release --example certify_distribution
//! ```

use halfspace_al::distributions::{Family, WellBehavedDistribution};
use halfspace_al::report::Report;
use halfspace_al::stream;

fn show(label: &str, report: &Report) {
    println!("{label}: {}", if report.passed() { "certified" } else { "rejected" });
    for c in &report.checks {
        println!("  {:<4} {:<28} margin {:+.3e}", if c.passed { "ok" } else { "FAIL" }, c.name, c.margin);
    }
}

fn main() -> halfspace_al::Result<()> {
    for family in [Family::IsotropicGaussian, Family::UniformBall] {
        for dim in [2, 10] {
            let dist = WellBehavedDistribution::new(family, dim)?;
            let p = dist.params();
            let report = dist.certify_parameters(&mut stream(2, 0), 200_000);
            show(
                &format!(
                    "{family:?} d={dim} L={:.4} R={:.4} U={:.4} beta={:.4}",
                    p.density_lower, p.radius, p.density_upper, p.tail_scale
                ),
                &report,
            );
        }
    }
    let mut p = WellBehavedDistribution::new(Family::IsotropicGaussian, 10)?.params();
    p.tail_scale *= 0.1;
    let wrong = WellBehavedDistribution::with_params(Family::IsotropicGaussian, 10, p)?;
    show("Gaussian with beta shrunk tenfold", &wrong.certify_parameters(&mut stream(2, 0), 200_000));
    Ok(())
}
