//! The active learner: initialization followed by k_ε refinement epochs.
//!
//! Every label is obtained through [`LabelingEnvironment::query_label`], and
//! every epoch spends exactly its planned budget, so the label complexity of
//! a run equals [`Schedule::total_labels`].

mod bregman;
mod initialize;
mod optimize;
mod schedule;

pub use bregman::{
    bregman_step, conjugate_potential, inverse_mirror_map, mirror_map, norm_exponent, potential, step_objective,
    BregmanSolution, SparseConstraint, BREGMAN_TOLERANCE,
};
pub use initialize::{erm_select, initialize, InitOutcome};
pub use optimize::{optimize, optimize_observed, Aggregation, EpochOutcome, Mode};
pub use schedule::{
    init_proximity, make_schedule, refine_proximity, trial_count, EpochPlan, Multipliers,
    NoiseRegime, Schedule,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::WellBehavedDistribution;
use crate::error::Result;
use crate::geometry::WeightVector;
use crate::oracles::{LabelingEnvironment, NoiseModel, QueryLedger};

/// Everything needed to build a schedule for one learning problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub dist: WellBehavedDistribution,
    pub noise: NoiseModel,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub sparsity: Option<usize>,
    #[serde(default)]
    pub multipliers: Multipliers,
    /// Schedule regime; defaults to the one `noise` certifies directly.
    #[serde(default)]
    pub regime: Option<NoiseRegime>,
}

impl LearnerConfig {
    pub fn regime(&self) -> NoiseRegime {
        self.regime.unwrap_or_else(|| NoiseRegime::for_noise(&self.noise))
    }

    pub fn schedule(&self) -> Result<Schedule> {
        make_schedule(
            &self.regime(),
            &self.dist,
            self.epsilon,
            self.delta,
            self.sparsity,
            &self.multipliers,
        )
    }
}

/// State after one stage of a run. Epoch 0 is initialization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    pub epoch: usize,
    pub proximity: f64,
    pub bandwidth: f64,
    pub queries: u64,
    pub cumulative_labels: u64,
    pub cumulative_ex_calls: u64,
    /// Angle to w*, present only when the environment is in audit mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub angle: Option<f64>,
}

/// Result of a full run.
#[derive(Clone, Debug, PartialEq)]
pub struct LearnOutcome {
    pub output: WeightVector,
    pub ledger: QueryLedger,
    pub trace: Vec<EpochTrace>,
    /// Largest ‖w_t − w₁‖ − 4r over every epoch of the run (≤ 0 when feasible).
    pub max_excess_distance: f64,
}

/// Runs initialization and the refinement epochs 1..=k_ε.
pub fn learn<R: Rng + ?Sized>(
    schedule: &Schedule,
    env: &mut LabelingEnvironment,
    rng: &mut R,
) -> Result<LearnOutcome> {
    let mode = schedule.sparse_level().map_or(Mode::Dense, Mode::Sparse);
    let init = initialize(schedule, env, rng)?;
    let mut max_excess = init.max_excess_distance;
    let mut v = init.output.into_weight().into_vec();
    let mut trace = Vec::with_capacity(schedule.refine_epochs + 1);
    let ledger = env.ledger();
    trace.push(EpochTrace {
        epoch: 0,
        proximity: 0.25,
        bandwidth: schedule.epoch(0).bandwidth,
        queries: ledger.label_calls,
        cumulative_labels: ledger.label_calls,
        cumulative_ex_calls: ledger.ex_calls,
        angle: env.audit_angle(&v),
    });
    for j in 1..=schedule.refine_epochs {
        let plan = schedule.epoch(j);
        let epoch = optimize(&v, plan, Aggregation::Average, mode, env, rng)?;
        max_excess = max_excess.max(epoch.max_distance - 4.0 * plan.proximity);
        v = epoch.output.into_vec();
        let ledger = env.ledger();
        trace.push(EpochTrace {
            epoch: j,
            proximity: plan.proximity,
            bandwidth: plan.bandwidth,
            queries: plan.queries,
            cumulative_labels: ledger.label_calls,
            cumulative_ex_calls: ledger.ex_calls,
            angle: env.audit_angle(&v),
        });
    }
    Ok(LearnOutcome {
        output: WeightVector::new(v)?,
        ledger: env.ledger(),
        trace,
        max_excess_distance: max_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;
    use crate::oracles::{BandSampler, GroundTruth};
    use rand::SeedableRng;

    #[test]
    fn ledger_matches_schedule_exactly() {
        let config = LearnerConfig {
            dist: WellBehavedDistribution::new(Family::IsotropicGaussian, 3).unwrap(),
            noise: NoiseModel::MassartConstant { eta: 0.1 },
            epsilon: 0.3,
            delta: 0.09,
            sparsity: None,
            multipliers: Multipliers {
                queries: 1.0 / 256.0,
                step: 32.0,
                ..Multipliers::default()
            },
            regime: None,
        };
        let schedule = config.schedule().unwrap();
        let mut rng = crate::Stream::seed_from_u64(9);
        let truth = GroundTruth::random(3, &mut rng);
        let mut env = LabelingEnvironment::new(config.dist.clone(), config.noise, truth, BandSampler::Conditional)
            .unwrap()
            .with_audit(true);
        let out = learn(&schedule, &mut env, &mut rng).unwrap();
        assert_eq!(out.ledger.label_calls, schedule.total_labels());
        assert_eq!(out.trace.len(), schedule.refine_epochs + 1);
        assert_eq!(out.trace.last().unwrap().cumulative_labels, schedule.total_labels());
        assert!(out.trace.iter().all(|t| t.angle.is_some()));
        assert!(out.max_excess_distance <= 1e-9);
    }
}
