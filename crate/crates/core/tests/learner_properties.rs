//! Statistical and structural properties of the learner.

use halfspace_al::diagnostics::estimate_psi;
use halfspace_al::distributions::{random_unit_vector, Family, WellBehavedDistribution};
use halfspace_al::experiment::Profile;
use halfspace_al::learner::{learn, make_schedule, optimize_observed, Aggregation, Mode, Multipliers, NoiseRegime};
use halfspace_al::oracles::{BandSampler, GroundTruth, LabelingEnvironment, NoiseModel};
use halfspace_al::stream;
use proptest::prelude::*;

/// Across 50 epochs started at distance 4r from w*, the average of ψ over
/// the iterates is at most ψ at the start in at least 90% of runs.
#[test]
fn optimize_descends_in_psi() {
    let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 5).unwrap();
    let noise = NoiseModel::MassartConstant { eta: 0.1 };
    let schedule = make_schedule(
        &NoiseRegime::Massart { eta: 0.1 },
        &dist,
        0.1,
        0.05,
        None,
        &Profile::Desk.multipliers(),
    )
    .unwrap();
    let plan = *schedule.epoch(1);
    let budget = 100_000u64;
    let mut descended = 0;
    for seed in 0..50 {
        let mut rng = stream(seed, 0);
        let truth = GroundTruth::random(5, &mut rng);
        let u = random_unit_vector(&mut rng, 5);
        let start: Vec<f64> = truth
            .w_star()
            .as_slice()
            .iter()
            .zip(u.as_slice())
            .map(|(w, d)| w + 4.0 * plan.proximity * d)
            .collect();
        let mut env = LabelingEnvironment::new(dist.clone(), noise, truth.clone(), BandSampler::Conditional).unwrap();
        let mut iterates = Vec::new();
        optimize_observed(&start, &plan, Aggregation::Average, Mode::Dense, &mut env, &mut rng, &mut |w| {
            iterates.push(w.to_vec())
        })
        .unwrap();
        assert_eq!(iterates.len() as u64, plan.queries);

        // Same total sample budget on both sides, spread over the iterates.
        let mut est_rng = stream(seed, 1);
        let per_iterate = (budget / plan.queries).max(1);
        let average = iterates
            .iter()
            .map(|w| estimate_psi(w, plan.bandwidth, &dist, &noise, &truth, per_iterate, &mut est_rng).unwrap().value)
            .sum::<f64>()
            / iterates.len() as f64;
        let initial = estimate_psi(&start, plan.bandwidth, &dist, &noise, &truth, budget, &mut est_rng).unwrap();
        if average <= initial.value {
            descended += 1;
        }
    }
    assert!(descended >= 45, "descent in only {descended}/50 runs");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    /// Every run spends exactly its schedule and keeps every iterate in its ball.
    #[test]
    fn learn_spends_exactly_the_schedule(
        dim in 2usize..7,
        eta in 0.0f64..0.35,
        epsilon in 0.2f64..0.5,
        seed in any::<u64>(),
        ball in any::<bool>(),
    ) {
        let family = if ball { Family::UniformBall } else { Family::IsotropicGaussian };
        let dist = WellBehavedDistribution::new(family, dim).unwrap();
        let multipliers = Multipliers { queries: 1.0 / 256.0, step: 32.0, ..Multipliers::default() };
        let schedule = make_schedule(&NoiseRegime::Massart { eta }, &dist, epsilon, 0.05, None, &multipliers).unwrap();
        let mut rng = stream(seed, 0);
        let truth = GroundTruth::random(dim, &mut rng);
        let mut env = LabelingEnvironment::new(dist, NoiseModel::MassartConstant { eta }, truth, BandSampler::Conditional).unwrap();
        let out = learn(&schedule, &mut env, &mut rng).unwrap();
        prop_assert_eq!(out.ledger.label_calls, schedule.total_labels());
        prop_assert!(out.max_excess_distance <= 1e-9);
        prop_assert!(out.ledger.ex_calls >= out.ledger.label_calls);
        prop_assert_eq!(out.trace.len(), schedule.refine_epochs + 1);
    }
}
