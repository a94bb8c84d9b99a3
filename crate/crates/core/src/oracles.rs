//! The labeling oracle, its noise models, the hidden optimum and the ledger
//! that counts unlabeled draws and label queries.
//!
//! [`LabelingEnvironment`] is the only thing the learner sees: it hands out
//! unlabeled points, band-restricted points and noisy labels, and keeps the
//! Bayes-optimal halfspace private.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::distributions::WellBehavedDistribution;
use crate::error::{invalid, Error, Result};
use crate::geometry::{self, UnitVector, WeightVector};

/// The Bayes-optimal halfspace w*, optionally declared s-sparse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    w_star: UnitVector,
    sparsity: Option<usize>,
}

impl GroundTruth {
    pub fn new(w_star: UnitVector, sparsity: Option<usize>) -> Result<Self> {
        if let Some(s) = sparsity {
            if s == 0 {
                return Err(invalid("sparsity must be at least 1"));
            }
            let nnz = w_star.as_slice().iter().filter(|&&c| c != 0.0).count();
            if nnz > s {
                return Err(invalid(format!("w* has {nnz} nonzeros, declared sparsity {s}")));
            }
        }
        Ok(Self { w_star, sparsity })
    }

    /// A uniformly random direction (the law of e₁ under a random rotation).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        Self {
            w_star: crate::distributions::random_unit_vector(rng, dim),
            sparsity: None,
        }
    }

    /// `s` nonzeros ±1/√s at uniformly random coordinates.
    pub fn random_sparse<R: Rng + ?Sized>(dim: usize, s: usize, rng: &mut R) -> Result<Self> {
        if s == 0 || s > dim {
            return Err(invalid(format!("sparsity {s} outside 1..={dim}")));
        }
        let mut coords = vec![0.0; dim];
        let value = 1.0 / (s as f64).sqrt();
        for i in sample_indices(rng, dim, s) {
            coords[i] = if rng.random::<bool>() { value } else { -value };
        }
        Ok(Self {
            w_star: geometry::normalize(&coords)?,
            sparsity: Some(s),
        })
    }

    pub fn w_star(&self) -> &UnitVector {
        &self.w_star
    }

    pub fn sparsity(&self) -> Option<usize> {
        self.sparsity
    }

    pub fn dim(&self) -> usize {
        self.w_star.dim()
    }

    /// ⟨w*, x⟩.
    pub fn margin(&self, x: &[f64]) -> f64 {
        geometry::dot(self.w_star.as_slice(), x)
    }
}

/// Conditional flip probability η(x) as a function of the margin ⟨w*, x⟩.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// η(x) = η.
    MassartConstant { eta: f64 },
    /// η(x) = η·1{|⟨w*,x⟩| ≤ τ}.
    MassartBand { eta: f64, tau: f64 },
    /// η(x) = 1/2 − min(1/2, B|⟨w*,x⟩|^{(1−α)/α}), the equality case of the
    /// geometric Tsybakov condition.
    GeometricTsybakov { b: f64, alpha: f64 },
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::MassartConstant { eta } => check_massart_eta(eta),
            NoiseModel::MassartBand { eta, tau } => {
                check_massart_eta(eta)?;
                if !tau.is_finite() || tau < 0.0 {
                    return Err(invalid(format!("band half-width must be finite and ≥ 0, got {tau}")));
                }
                Ok(())
            }
            NoiseModel::GeometricTsybakov { b, alpha } => {
                if !(b > 0.0 && b.is_finite()) {
                    return Err(invalid(format!("B must be positive, got {b}")));
                }
                if !(alpha > 0.0 && alpha <= 1.0) {
                    return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
                }
                Ok(())
            }
        }
    }

    /// η at a point whose margin to w* is `margin`.
    #[inline]
    pub fn flip_probability(&self, margin: f64) -> f64 {
        match *self {
            NoiseModel::MassartConstant { eta } => eta,
            NoiseModel::MassartBand { eta, tau } => {
                if margin.abs() <= tau {
                    eta
                } else {
                    0.0
                }
            }
            NoiseModel::GeometricTsybakov { b, alpha } => {
                if alpha == 1.0 {
                    return 0.0;
                }
                let gap = b * margin.abs().powf((1.0 - alpha) / alpha);
                0.5 - gap.min(0.5)
            }
        }
    }

    /// Upper bound on η(x) over all x, when the model is Massart.
    pub fn massart_bound(&self) -> Option<f64> {
        match *self {
            NoiseModel::MassartConstant { eta } | NoiseModel::MassartBand { eta, .. } => Some(eta),
            NoiseModel::GeometricTsybakov { .. } => None,
        }
    }
}

fn check_massart_eta(eta: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eta) {
        return Err(invalid(format!("eta must lie in [0, 1/2), got {eta}")));
    }
    Ok(())
}

/// η(x) for the given model and optimum.
pub fn eta(model: &NoiseModel, truth: &GroundTruth, x: &impl AsRef<[f64]>) -> f64 {
    model.flip_probability(truth.margin(x.as_ref()))
}

/// sign with sign(0) = +1.
#[inline]
pub fn sign(v: f64) -> i8 {
    if v >= 0.0 {
        1
    } else {
        -1
    }
}

/// Counts of unlabeled draws and label queries. `label_calls` is the label
/// complexity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub ex_calls: u64,
    pub label_calls: u64,
}

/// One noisy label: sign⟨w*,x⟩, flipped with probability η(x).
pub fn query_label<R: Rng + ?Sized>(
    model: &NoiseModel,
    truth: &GroundTruth,
    x: &impl AsRef<[f64]>,
    rng: &mut R,
    ledger: &mut QueryLedger,
) -> i8 {
    ledger.label_calls += 1;
    let margin = truth.margin(x.as_ref());
    let clean = sign(margin);
    let flip = model.flip_probability(margin);
    // Always consume one uniform so the stream position is label-independent.
    let u = rng.random::<f64>();
    if u < flip {
        -clean
    } else {
        clean
    }
}

/// Attempt cap ⌈50/p⌉ with floor 10⁴ for a band of mass `p`.
pub fn default_max_attempts(band_mass: f64) -> u64 {
    let cap = (50.0 / band_mass).ceil();
    if cap.is_finite() && cap < u64::MAX as f64 {
        (cap as u64).max(10_000)
    } else {
        u64::MAX
    }
}

/// Draws from `dist` until |⟨ŵ,x⟩| ≤ b, charging every draw to `ex_calls`.
pub fn rejection_sample_band<R: Rng + ?Sized>(
    dist: &WellBehavedDistribution,
    direction: &UnitVector,
    b: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
    max_attempts: u64,
) -> Result<WeightVector> {
    if b.is_nan() || b <= 0.0 {
        return Err(invalid(format!("bandwidth must be positive, got {b}")));
    }
    let mut x = vec![0.0; dist.dim()];
    rejection_into(dist, direction.as_slice(), b, rng, ledger, max_attempts, &mut x)?;
    Ok(WeightVector::from_vec_unchecked(x))
}

fn rejection_into<R: Rng + ?Sized>(
    dist: &WellBehavedDistribution,
    direction: &[f64],
    b: f64,
    rng: &mut R,
    ledger: &mut QueryLedger,
    max_attempts: u64,
    out: &mut [f64],
) -> Result<()> {
    for _ in 0..max_attempts {
        ledger.ex_calls += 1;
        dist.sample_into(rng, out);
        if geometry::dot(out, direction).abs() <= b {
            return Ok(());
        }
    }
    Err(Error::BandTooThin {
        bandwidth: b,
        attempts: max_attempts,
    })
}

/// The coefficient 4Uβ(1/B)^{α/(1−α)} of the plain Tsybakov bound implied by a
/// geometric Tsybakov generator (up to its logarithmic factor); zero at α = 1.
pub fn effective_tsybakov_a(b: f64, alpha: f64, dist: &WellBehavedDistribution) -> Result<f64> {
    NoiseModel::GeometricTsybakov { b, alpha }.validate()?;
    if alpha == 1.0 {
        return Ok(0.0);
    }
    let p = dist.params();
    Ok(4.0 * p.density_upper * p.tail_scale * (1.0 / b).powf(alpha / (1.0 - alpha)))
}

/// How band-restricted points are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandSampler {
    /// Literal rejection sampling, one distribution draw per attempt.
    Rejection,
    /// Same joint law of (attempt count, accepted point): the attempt count is
    /// drawn from Geometric(p) and the point from the exact conditional law.
    #[default]
    Conditional,
}

/// The learner's view of the world: EX, the band sampler and O.
#[derive(Clone, Debug)]
pub struct LabelingEnvironment {
    dist: WellBehavedDistribution,
    noise: NoiseModel,
    truth: GroundTruth,
    sampler: BandSampler,
    ledger: QueryLedger,
    audit: bool,
    cached_band: Option<(f64, f64)>,
    direction: Vec<f64>,
}

impl LabelingEnvironment {
    pub fn new(
        dist: WellBehavedDistribution,
        noise: NoiseModel,
        truth: GroundTruth,
        sampler: BandSampler,
    ) -> Result<Self> {
        noise.validate()?;
        if truth.dim() != dist.dim() {
            return Err(invalid(format!(
                "w* has dimension {}, distribution has {}",
                truth.dim(),
                dist.dim()
            )));
        }
        let dim = dist.dim();
        Ok(Self {
            dist,
            noise,
            truth,
            sampler,
            ledger: QueryLedger::default(),
            audit: false,
            cached_band: None,
            direction: vec![0.0; dim],
        })
    }

    /// Enables [`Self::audit_angle`] for traces and benchmarks.
    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    pub fn distribution(&self) -> &WellBehavedDistribution {
        &self.dist
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn sampler(&self) -> BandSampler {
        self.sampler
    }

    pub fn ledger(&self) -> QueryLedger {
        self.ledger
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    /// One call to EX.
    pub fn draw_unlabeled<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut [f64]) {
        self.ledger.ex_calls += 1;
        self.dist.sample_into(rng, out);
    }

    /// One call to O.
    pub fn query_label<R: Rng + ?Sized>(&mut self, x: &[f64], rng: &mut R) -> i8 {
        query_label(&self.noise, &self.truth, &x, rng, &mut self.ledger)
    }

    /// A point from the band {|⟨ŵ,x⟩| ≤ b} around the normalization of `w`.
    /// Depends on `w` only through ŵ.
    pub fn sample_band<R: Rng + ?Sized>(
        &mut self,
        w: &[f64],
        b: f64,
        rng: &mut R,
        out: &mut [f64],
    ) -> Result<()> {
        if b.is_nan() || b <= 0.0 {
            return Err(invalid(format!("bandwidth must be positive, got {b}")));
        }
        geometry::normalize_into(w, &mut self.direction);
        let mass = self.band_mass(b)?;
        let max_attempts = default_max_attempts(mass);
        match self.sampler {
            BandSampler::Rejection => rejection_into(
                &self.dist,
                &self.direction,
                b,
                rng,
                &mut self.ledger,
                max_attempts,
                out,
            ),
            BandSampler::Conditional => {
                let attempts = if mass >= 1.0 {
                    1
                } else {
                    let failures = Geometric::new(mass)
                        .map_err(|e| invalid(format!("band mass {mass}: {e}")))?
                        .sample(rng);
                    failures.saturating_add(1)
                };
                if attempts > max_attempts {
                    self.ledger.ex_calls += max_attempts;
                    return Err(Error::BandTooThin {
                        bandwidth: b,
                        attempts: max_attempts,
                    });
                }
                self.ledger.ex_calls += attempts;
                self.dist.sample_band_into(&self.direction, b, rng, out);
                Ok(())
            }
        }
    }

    fn band_mass(&mut self, b: f64) -> Result<f64> {
        if let Some((cached_b, mass)) = self.cached_band {
            if cached_b == b {
                return Ok(mass);
            }
        }
        let mass = self.dist.band_probability(b)?;
        if mass <= 0.0 {
            return Err(Error::BandTooThin {
                bandwidth: b,
                attempts: 0,
            });
        }
        self.cached_band = Some((b, mass));
        Ok(mass)
    }

    /// Angle between `v` and w*, available only in audit mode.
    pub fn audit_angle(&self, v: &[f64]) -> Option<f64> {
        if self.audit {
            geometry::angle(&v, self.truth.w_star()).ok()
        } else {
            None
        }
    }
}
