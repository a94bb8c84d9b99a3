//! Label-efficient initialization: N independent descents from the origin,
//! then selection of the candidate with the lowest error on a fresh labeled
//! sample.

use rand::Rng;

use super::optimize::{optimize, Aggregation, Mode};
use super::schedule::Schedule;
use crate::error::{invalid, Result};
use crate::geometry::{self, UnitVector, WeightVector};
use crate::oracles::{sign, LabelingEnvironment};

/// Output of initialization.
#[derive(Clone, Debug, PartialEq)]
pub struct InitOutcome {
    /// û₀.
    pub output: UnitVector,
    /// Final vector of every trial, in trial order.
    pub candidates: Vec<WeightVector>,
    /// Index of the selected candidate.
    pub selected: usize,
    /// Selection-sample mistakes of each candidate.
    pub mistakes: Vec<u64>,
    /// Largest ‖w_t − w₁‖ − 4r seen in any epoch (≤ 0 when feasible).
    pub max_excess_distance: f64,
}

/// Index of the smallest entry; ties go to the lowest index.
fn argmin_lowest(values: &[u64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// The candidate with the fewest mistakes sign⟨u,x⟩ ≠ y on `sample`; ties go
/// to the lowest index.
pub fn erm_select(candidates: &[impl AsRef<[f64]>], sample: &[(Vec<f64>, i8)]) -> Result<usize> {
    if candidates.is_empty() || sample.is_empty() {
        return Err(invalid("selection needs at least one candidate and one example"));
    }
    let mistakes: Vec<u64> = candidates
        .iter()
        .map(|u| {
            sample
                .iter()
                .filter(|(x, y)| sign(geometry::dot(u.as_ref(), x)) != *y)
                .count() as u64
        })
        .collect();
    Ok(argmin_lowest(&mistakes))
}

/// Runs both stages of initialization with the schedule's epochs 0..=k₀.
pub fn initialize<R: Rng + ?Sized>(
    schedule: &Schedule,
    env: &mut LabelingEnvironment,
    rng: &mut R,
) -> Result<InitOutcome> {
    let d = env.dim();
    let mode = schedule.sparse_level().map_or(Mode::Dense, Mode::Sparse);
    let mut candidates = Vec::with_capacity(schedule.trials);
    let mut max_excess = f64::NEG_INFINITY;
    for _ in 0..schedule.trials {
        let mut v = vec![0.0; d];
        for j in 0..=schedule.init_epochs {
            let plan = schedule.epoch(j);
            let aggregation = if j == 0 { Aggregation::Random } else { Aggregation::Average };
            let epoch = optimize(&v, plan, aggregation, mode, env, rng)?;
            max_excess = max_excess.max(epoch.max_distance - 4.0 * plan.proximity);
            v = epoch.output.into_vec();
        }
        candidates.push(WeightVector::new(v)?);
    }

    // Streamed so the selection sample is never stored.
    let mut mistakes = vec![0u64; candidates.len()];
    let mut x = vec![0.0; d];
    for _ in 0..schedule.selection_sample {
        env.draw_unlabeled(rng, &mut x);
        let y = env.query_label(&x, rng);
        for (m, u) in mistakes.iter_mut().zip(&candidates) {
            if sign(geometry::dot(u.as_slice(), &x)) != y {
                *m += 1;
            }
        }
    }
    let selected = argmin_lowest(&mistakes);
    Ok(InitOutcome {
        output: geometry::normalize(&candidates[selected])?,
        candidates,
        selected,
        mistakes,
        max_excess_distance: max_excess,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_candidate_is_selected() {
        let sample = vec![(vec![1.0, 0.0], 1i8)];
        assert_eq!(erm_select(&[vec![0.0, 1.0]], &sample).unwrap(), 0);
        assert!(erm_select(&Vec::<Vec<f64>>::new(), &sample).is_err());
        assert!(erm_select(&[vec![0.0, 1.0]], &[]).is_err());
    }

    #[test]
    fn separator_beats_its_negation() {
        use crate::distributions::{Family, WellBehavedDistribution};
        use rand::SeedableRng;
        let dist = WellBehavedDistribution::new(Family::IsotropicGaussian, 3).unwrap();
        let mut rng = crate::Stream::seed_from_u64(0);
        let w = vec![0.6, -0.8, 0.0];
        let sample: Vec<(Vec<f64>, i8)> = (0..100)
            .map(|_| {
                let x = dist.sample(&mut rng).into_vec();
                let y = sign(geometry::dot(&w, &x));
                (x, y)
            })
            .collect();
        let neg: Vec<f64> = w.iter().map(|c| -c).collect();
        assert_eq!(erm_select(&[neg.clone(), w.clone()], &sample).unwrap(), 1);
        assert_eq!(erm_select(&[w, neg], &sample).unwrap(), 0);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        // Every labeling of four points on which e₁ and e₂ make the same
        // number of mistakes.
        let cands = [vec![1.0, 0.0], vec![0.0, 1.0]];
        let points = [vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let mut found = false;
        for labels in 0u8..16 {
            let sample: Vec<(Vec<f64>, i8)> = points
                .iter()
                .enumerate()
                .map(|(i, x)| (x.clone(), if labels >> i & 1 == 1 { 1 } else { -1 }))
                .collect();
            let errs: Vec<usize> = cands
                .iter()
                .map(|u| sample.iter().filter(|(x, y)| sign(geometry::dot(u, x)) != *y).count())
                .collect();
            if errs[0] == errs[1] {
                found = true;
                assert_eq!(erm_select(&cands, &sample).unwrap(), 0);
                let swapped = [cands[1].clone(), cands[0].clone()];
                assert_eq!(erm_select(&swapped, &sample).unwrap(), 0);
            }
        }
        assert!(found);
        assert_eq!(argmin_lowest(&[3, 1, 1, 2]), 1);
    }
}
