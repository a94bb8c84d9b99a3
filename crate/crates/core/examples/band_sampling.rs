//! Draws from the band {|⟨ŵ,x⟩| ≤ b} with both samplers and compares the
//! unlabeled-draw cost each one records.
//!
//! ```text
//! cargo run --release --example band_sampling
//! ```

use halfspace_al::distributions::{random_unit_vector, Family, WellBehavedDistribution};
use halfspace_al::oracles::{BandSampler, GroundTruth, LabelingEnvironment, NoiseModel};
use halfspace_al::stream;

fn main() -> halfspace_al::Result<()> {
    let dim = 8;
    let draws = 20_000;
    println!("family              sampler      b       P(band)   ex/draw   max|<w,x>|");
    for family in [Family::IsotropicGaussian, Family::UniformBall] {
        let dist = WellBehavedDistribution::new(family, dim)?;
        for b in [0.5, 0.05] {
            for sampler in [BandSampler::Rejection, BandSampler::Conditional] {
                let mut rng = stream(11, 0);
                let truth = GroundTruth::random(dim, &mut rng);
                let w = random_unit_vector(&mut rng, dim);
                let mut env = LabelingEnvironment::new(
                    dist.clone(),
                    NoiseModel::MassartConstant { eta: 0.1 },
                    truth,
                    sampler,
                )?;
                let mut x = vec![0.0; dim];
                let mut widest = 0.0f64;
                for _ in 0..draws {
                    env.sample_band(w.as_slice(), b, &mut rng, &mut x)?;
                    let m: f64 = x.iter().zip(w.as_slice()).map(|(a, c)| a * c).sum();
                    widest = widest.max(m.abs());
                }
                println!(
                    "{:<19} {:<12} {:<7} {:<9.5} {:<9.2} {:.4}",
                    format!("{family:?}"),
                    format!("{sampler:?}"),
                    b,
                    dist.band_probability(b)?,
                    env.ledger().ex_calls as f64 / draws as f64,
                    widest
                );
            }
        }
    }
    Ok(())
}
