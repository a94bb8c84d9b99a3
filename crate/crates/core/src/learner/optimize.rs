//! One refinement epoch: projected online gradient descent on band-restricted
//! labeled examples, or its p-norm mirror-descent variant for sparse targets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::bregman::{bregman_step, norm_exponent, SparseConstraint, BREGMAN_TOLERANCE};
use super::schedule::EpochPlan;
use crate::error::{invalid, Result};
use crate::geometry::{self, WeightVector};
use crate::oracles::LabelingEnvironment;

/// How the iterates of an epoch are combined into its output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// (1/T) Σ ŵ_t.
    Average,
    /// σ·ŵ_τ with τ uniform on [T] and σ uniform on {−1, +1}.
    Random,
}

/// Dense online gradient descent or s-sparse mirror descent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Dense,
    Sparse(usize),
}

/// Result of one epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochOutcome {
    pub output: WeightVector,
    /// max_t ‖w_t − w₁‖ over all iterates, including the last update.
    pub max_distance: f64,
    /// max_t ‖u_t − HT_s(w₁)‖₁ in sparse mode.
    pub max_l1_distance: Option<f64>,
    /// Labels queried in this epoch; always the plan's T.
    pub labels: u64,
}

/// Runs one epoch from `start` with the given plan.
///
/// `observer` sees every iterate w_1..w_T before it is used for sampling.
pub fn optimize_observed<R: Rng + ?Sized>(
    start: &[f64],
    plan: &EpochPlan,
    aggregation: Aggregation,
    mode: Mode,
    env: &mut LabelingEnvironment,
    rng: &mut R,
    observer: &mut dyn FnMut(&[f64]),
) -> Result<EpochOutcome> {
    let d = env.dim();
    if start.len() != d {
        return Err(invalid(format!("start has dimension {}, expected {d}", start.len())));
    }
    if !(plan.proximity > 0.0 && plan.proximity <= 0.25) {
        return Err(invalid(format!("proximity must lie in (0, 1/4], got {}", plan.proximity)));
    }
    if plan.queries == 0 {
        return Err(invalid("an epoch needs at least one query"));
    }
    let radius = 4.0 * plan.proximity;
    let t_total = plan.queries;
    // Drawn up front so the iterate stream never has to be stored.
    let (chosen, sign) = match aggregation {
        Aggregation::Random => (rng.random_range(0..t_total), if rng.random::<bool>() { 1.0 } else { -1.0 }),
        Aggregation::Average => (0, 1.0),
    };

    let sparse = match mode {
        Mode::Sparse(s) if s >= 1 && s < d => Some(s),
        Mode::Sparse(0) => return Err(invalid("sparsity must be at least 1")),
        _ => None,
    };
    let constraint = match sparse {
        Some(s) => {
            let thresholded = geometry::hard_threshold(&start, s)?.into_vec();
            let mut l1_radius = 8.0 * plan.proximity * (2.0 * s as f64).sqrt();
            // ‖w₁ − HT_s(w₁)‖ ≤ ‖w₁ − w*‖ for s-sparse w*, so the two balls meet
            // whenever the epoch's precondition holds. When they do not (as
            // on initialization paths far from w*), the ℓ₁ ball is dropped
            // for the epoch and only the ℓ₂ ball constrains the iterates.
            let mut nearest = start.to_vec();
            geometry::project_l1_ball_in_place(&mut nearest, &thresholded, l1_radius);
            if geometry::distance(&nearest, start) > radius {
                l1_radius = f64::INFINITY;
            }
            Some(SparseConstraint {
                ball_center: start.to_vec(),
                ball_radius: radius,
                l1_radius,
                l1_center: thresholded,
            })
        }
        None => None,
    };
    let p = norm_exponent(d);

    let mut w = match &constraint {
        Some(c) => c.l1_center.clone(),
        None => start.to_vec(),
    };
    let anchor = w.clone();
    let mut unit = vec![0.0; d];
    let mut acc = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut gradient = vec![0.0; d];
    let mut max_distance = geometry::distance(&w, start);
    let mut max_l1 = constraint.as_ref().map(|c| geometry::distance_l1(&w, &c.l1_center));

    for t in 0..t_total {
        observer(&w);
        geometry::normalize_into(&w, &mut unit);
        match aggregation {
            Aggregation::Average => acc.iter_mut().zip(&unit).for_each(|(a, u)| *a += u),
            Aggregation::Random => {
                if t == chosen {
                    acc.copy_from_slice(&unit);
                }
            }
        }
        env.sample_band(&w, plan.bandwidth, rng, &mut x)?;
        let y = f64::from(env.query_label(&x, rng));
        match &constraint {
            None => {
                for (wi, xi) in w.iter_mut().zip(&x) {
                    *wi += plan.step * y * xi;
                }
                geometry::project_l2_ball_in_place(&mut w, start, radius);
            }
            Some(c) => {
                for (g, xi) in gradient.iter_mut().zip(&x) {
                    *g = -y * xi;
                }
                w = bregman_step(&w, &gradient, plan.step, c, &anchor, p, BREGMAN_TOLERANCE)?.point;
                if let Some(m) = max_l1.as_mut() {
                    *m = m.max(geometry::distance_l1(&w, &c.l1_center));
                }
            }
        }
        max_distance = max_distance.max(geometry::distance(&w, start));
    }

    let output = match aggregation {
        Aggregation::Average => acc.iter().map(|a| a / t_total as f64).collect(),
        Aggregation::Random => acc.iter().map(|a| sign * a).collect(),
    };
    Ok(EpochOutcome {
        output: WeightVector::new(output)?,
        max_distance,
        max_l1_distance: max_l1,
        labels: t_total,
    })
}

/// Runs one epoch from `start` with the given plan.
pub fn optimize<R: Rng + ?Sized>(
    start: &[f64],
    plan: &EpochPlan,
    aggregation: Aggregation,
    mode: Mode,
    env: &mut LabelingEnvironment,
    rng: &mut R,
) -> Result<EpochOutcome> {
    optimize_observed(start, plan, aggregation, mode, env, rng, &mut |_| {})
}
