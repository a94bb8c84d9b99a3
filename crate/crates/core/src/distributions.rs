//! Unlabeled-data generators with certified well-behavedness parameters.
//!
//! A distribution is well behaved with parameters (L, R, U, β) when every
//! 2-d projection has a density bounded by U everywhere and by L from below
//! on the radius-R disk, and every 1-d projection obeys the tail bound
//! P(|⟨w,x⟩| ≥ t) ≤ exp(1 − t/β). Both supported families are isotropic and
//! spherically symmetric, which makes band masses and disagreement
//! probabilities available in closed form.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erf;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::geometry::{self, UnitVector, WeightVector};
use crate::report::{Check, Report};

/// Tail-bound grid used by certification.
pub const TAIL_GRID: [f64; 12] = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0];

/// Relative slack on closed-form certification checks (rounding only).
const CLOSED_FORM_SLACK: f64 = 1e-12;

/// Relative tolerance reported alongside Monte Carlo density estimates.
pub const DENSITY_ESTIMATE_TOLERANCE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// N(0, I_d).
    IsotropicGaussian,
    /// Uniform on the ball of radius √(d+2), which has identity covariance.
    UniformBall,
}

/// The (L, R, U, β) constants of a well-behaved distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistParams {
    /// L: lower bound on 2-d projected densities over the radius-R disk.
    pub density_lower: f64,
    /// R: radius of the disk on which `density_lower` holds.
    pub radius: f64,
    /// U: upper bound on 2-d projected densities.
    pub density_upper: f64,
    /// β: scale of the sub-exponential 1-d tail.
    pub tail_scale: f64,
}

impl DistParams {
    fn validate(&self) -> Result<()> {
        let all = [
            self.density_lower,
            self.radius,
            self.density_upper,
            self.tail_scale,
        ];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(invalid(format!("parameters must be positive and finite: {self:?}")));
        }
        if self.density_lower > self.density_upper {
            return Err(invalid("density lower bound exceeds upper bound"));
        }
        Ok(())
    }
}

/// An unlabeled sampler together with the parameters it is claimed to satisfy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct WellBehavedDistribution {
    family: Family,
    dim: usize,
    params: DistParams,
}

#[derive(Deserialize)]
struct RawDistribution {
    family: Family,
    dim: usize,
    #[serde(default)]
    params: Option<DistParams>,
}

impl TryFrom<RawDistribution> for WellBehavedDistribution {
    type Error = crate::Error;
    fn try_from(raw: RawDistribution) -> Result<Self> {
        match raw.params {
            Some(p) => Self::with_params(raw.family, raw.dim, p),
            None => Self::new(raw.family, raw.dim),
        }
    }
}

/// The certified default constants for a family in dimension `dim`.
///
/// Gaussian: U and L are the 2-d standard normal density at the origin and at
/// radius R = 1, β = 1. Uniform ball of radius ρ = √(d+2): the 2-d marginal
/// density is d/(2πρ²)·(1 − |z|²/ρ²)^{(d−2)/2}, evaluated at 0 and at R = 1;
/// β = 1 holds because the 1-d marginal is lighter-tailed than the Gaussian.
pub fn default_params(family: Family, dim: usize) -> Result<DistParams> {
    if dim < 2 {
        return Err(invalid(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(match family {
        Family::IsotropicGaussian => {
            let u = 1.0 / (2.0 * PI);
            DistParams {
                density_lower: u * (-0.5f64).exp(),
                radius: 1.0,
                density_upper: u,
                tail_scale: 1.0,
            }
        }
        Family::UniformBall => {
            let d = dim as f64;
            let rho2 = d + 2.0;
            let u = d / (2.0 * PI * rho2);
            DistParams {
                density_lower: u * (1.0 - 1.0 / rho2).powf((d - 2.0) / 2.0),
                radius: 1.0,
                density_upper: u,
                tail_scale: 1.0,
            }
        }
    })
}

impl WellBehavedDistribution {
    /// A distribution with its certified default parameters.
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        let params = default_params(family, dim)?;
        Ok(Self { family, dim, params })
    }

    /// A distribution with caller-supplied parameters. Only positivity and
    /// L ≤ U are enforced here; [`Self::certify_parameters`] decides whether
    /// the claim is true.
    pub fn with_params(family: Family, dim: usize, params: DistParams) -> Result<Self> {
        default_params(family, dim)?;
        params.validate()?;
        Ok(Self { family, dim, params })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> DistParams {
        self.params
    }

    /// Both supported families are spherically symmetric.
    pub fn is_spherically_symmetric(&self) -> bool {
        matches!(self.family, Family::IsotropicGaussian | Family::UniformBall)
    }

    fn ball_radius(&self) -> f64 {
        (self.dim as f64 + 2.0).sqrt()
    }

    /// One i.i.d. draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> WeightVector {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        WeightVector::from_vec_unchecked(out)
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match self.family {
            Family::IsotropicGaussian => {
                for c in out.iter_mut() {
                    *c = rng.sample(StandardNormal);
                }
            }
            Family::UniformBall => {
                let radius = self.ball_radius() * rng.random::<f64>().powf(1.0 / self.dim as f64);
                uniform_direction_into(rng, out);
                out.iter_mut().for_each(|c| *c *= radius);
            }
        }
    }

    /// P(|⟨ŵ,x⟩| ≤ b) for any unit ŵ.
    pub fn band_probability(&self, b: f64) -> Result<f64> {
        if b.is_nan() || b <= 0.0 {
            return Err(invalid(format!("bandwidth must be positive, got {b}")));
        }
        Ok(match self.family {
            Family::IsotropicGaussian => {
                if b.is_infinite() {
                    1.0
                } else {
                    erf(b / std::f64::consts::SQRT_2)
                }
            }
            Family::UniformBall => {
                let rho = self.ball_radius();
                if b >= rho {
                    1.0
                } else {
                    // x₁²/ρ² ~ Beta(1/2, (d+1)/2).
                    beta_reg(0.5, (self.dim as f64 + 1.0) / 2.0, (b / rho).powi(2))
                }
            }
        })
    }

    /// P(|⟨w,x⟩| ≥ t) for unit w.
    pub fn tail_probability(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        1.0 - self.band_probability(t).unwrap_or(1.0)
    }

    /// Density of a 2-d projection at distance `radius` from the origin.
    pub fn projected_density(&self, radius: f64) -> f64 {
        match self.family {
            Family::IsotropicGaussian => (-0.5 * radius * radius).exp() / (2.0 * PI),
            Family::UniformBall => {
                let d = self.dim as f64;
                let rho2 = d + 2.0;
                let s = 1.0 - radius * radius / rho2;
                if s <= 0.0 {
                    0.0
                } else {
                    d / (2.0 * PI * rho2) * s.powf((d - 2.0) / 2.0)
                }
            }
        }
    }

    /// Peak of the 1-d projected density, attained at the origin.
    pub fn marginal_density_peak(&self) -> f64 {
        match self.family {
            Family::IsotropicGaussian => 1.0 / (2.0 * PI).sqrt(),
            Family::UniformBall => {
                let d = self.dim as f64;
                (ln_gamma(d / 2.0 + 1.0) - ln_gamma(d / 2.0 + 0.5)).exp()
                    / (PI.sqrt() * self.ball_radius())
            }
        }
    }

    /// P(sign⟨u,x⟩ ≠ sign⟨v,x⟩) = θ(u,v)/π under spherical symmetry.
    pub fn exact_disagreement(
        &self,
        u: &impl AsRef<[f64]>,
        v: &impl AsRef<[f64]>,
    ) -> Result<f64> {
        if !self.is_spherically_symmetric() {
            return Err(crate::Error::Unsupported(
                "closed-form disagreement needs a spherically symmetric family".into(),
            ));
        }
        Ok(geometry::angle(u, v)? / PI)
    }

    /// Draws x from the band conditional law D_{X | |⟨ŵ,x⟩| ≤ b} directly,
    /// without simulating rejected draws.
    pub(crate) fn sample_band_into<R: Rng + ?Sized>(
        &self,
        direction: &[f64],
        b: f64,
        rng: &mut R,
        out: &mut [f64],
    ) {
        match self.family {
            Family::IsotropicGaussian => {
                let z = truncated_standard_normal(b, rng);
                for c in out.iter_mut() {
                    *c = rng.sample(StandardNormal);
                }
                let along = geometry::dot(out, direction);
                for (c, w) in out.iter_mut().zip(direction) {
                    *c += (z - along) * w;
                }
            }
            Family::UniformBall => {
                let rho = self.ball_radius();
                let d = self.dim as f64;
                let worst_accept = (1.0 - (b / rho).min(1.0).powi(2)).powf((d - 1.0) / 2.0);
                if b >= rho || worst_accept < 0.05 {
                    loop {
                        self.sample_into(rng, out);
                        if geometry::dot(out, direction).abs() <= b {
                            return;
                        }
                    }
                }
                // 1-d marginal density ∝ (1 − z²/ρ²)^{(d−1)/2} on |z| ≤ b.
                let z = loop {
                    let z = rng.random_range(-b..=b);
                    let accept = (1.0 - z * z / (rho * rho)).powf((d - 1.0) / 2.0);
                    if rng.random::<f64>() < accept {
                        break z;
                    }
                };
                // Remaining coordinates: uniform in the (d−1)-ball of radius √(ρ² − z²).
                loop {
                    for c in out.iter_mut() {
                        *c = rng.sample(StandardNormal);
                    }
                    let along = geometry::dot(out, direction);
                    for (c, w) in out.iter_mut().zip(direction) {
                        *c -= along * w;
                    }
                    if geometry::norm(out) > 0.0 {
                        break;
                    }
                }
                let n = geometry::norm(out);
                let radius =
                    (rho * rho - z * z).sqrt() * rng.random::<f64>().powf(1.0 / (d - 1.0));
                for (c, w) in out.iter_mut().zip(direction) {
                    *c = *c / n * radius + z * w;
                }
            }
        }
    }

    /// Verifies the stored (L, R, U, β) claim.
    ///
    /// Gating checks use the closed-form projected density (radially
    /// decreasing, so its extremes on the disk are at 0 and at R) and the
    /// exact 1-d tail on [`TAIL_GRID`]. Two Monte Carlo density estimates on a
    /// random 2-d subspace are attached as informational checks with
    /// [`DENSITY_ESTIMATE_TOLERANCE`] relative slack.
    pub fn certify_parameters<R: Rng + ?Sized>(&self, rng: &mut R, samples: usize) -> Report {
        let p = self.params;
        let mut report = Report::default();

        let peak = self.projected_density(0.0);
        report.push(Check::at_most(
            "density_upper",
            peak,
            p.density_upper,
            CLOSED_FORM_SLACK * p.density_upper,
        ));
        let edge = self.projected_density(p.radius);
        report.push(
            Check::at_least(
                "density_lower",
                edge,
                p.density_lower,
                CLOSED_FORM_SLACK * p.density_lower,
            )
            .with_detail(format!("minimum over the disk of radius {}", p.radius)),
        );

        let (worst_t, worst_prob, worst_bound) = TAIL_GRID
            .iter()
            .map(|&t| (t, self.tail_probability(t), (1.0 - t / p.tail_scale).exp()))
            // Tightest in ratio; absolute gaps all vanish far in the tail.
            .min_by(|a, b| (a.2 / a.1).total_cmp(&(b.2 / b.1)))
            .expect("grid is nonempty");
        report.push(
            Check::at_most("tail", worst_prob, worst_bound, CLOSED_FORM_SLACK)
                .with_detail(format!("tightest grid point t = {worst_t}")),
        );

        if samples > 0 {
            let (center, ring) = self.estimate_projected_density(rng, samples, p.radius);
            report.push(
                Check::at_most(
                    "density_upper_estimate",
                    center,
                    p.density_upper,
                    DENSITY_ESTIMATE_TOLERANCE * p.density_upper,
                )
                .informational()
                .with_detail(format!("{samples} projected samples, disk at the origin")),
            );
            report.push(
                Check::at_least(
                    "density_lower_estimate",
                    ring,
                    p.density_lower,
                    DENSITY_ESTIMATE_TOLERANCE * p.density_lower,
                )
                .informational()
                .with_detail(format!("{samples} projected samples, annulus at radius {}", p.radius)),
            );
        }
        report
    }

    /// Histogram density estimates of a random 2-d projection at the origin
    /// (disk of radius h) and on the circle of radius `radius` (annulus of
    /// width 2h), with h = 0.1.
    fn estimate_projected_density<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        samples: usize,
        radius: f64,
    ) -> (f64, f64) {
        let h = 0.1;
        let mut e1 = vec![0.0; self.dim];
        let mut e2 = vec![0.0; self.dim];
        uniform_direction_into(rng, &mut e1);
        loop {
            uniform_direction_into(rng, &mut e2);
            let along = geometry::dot(&e1, &e2);
            for (a, b) in e2.iter_mut().zip(&e1) {
                *a -= along * b;
            }
            let n = geometry::norm(&e2);
            if n > 1e-6 {
                e2.iter_mut().for_each(|c| *c /= n);
                break;
            }
        }
        let mut x = vec![0.0; self.dim];
        let (mut near_origin, mut near_ring) = (0u64, 0u64);
        for _ in 0..samples {
            self.sample_into(rng, &mut x);
            let z = geometry::dot(&x, &e1).hypot(geometry::dot(&x, &e2));
            if z <= h {
                near_origin += 1;
            }
            if (z - radius).abs() <= h {
                near_ring += 1;
            }
        }
        let n = samples as f64;
        let ring_area = PI * ((radius + h).powi(2) - (radius - h).max(0.0).powi(2));
        (
            near_origin as f64 / (n * PI * h * h),
            near_ring as f64 / (n * ring_area),
        )
    }
}

/// Fills `out` with a uniformly random unit vector.
pub(crate) fn uniform_direction_into<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    loop {
        for c in out.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        let n = geometry::norm(out);
        if n > 1e-12 {
            out.iter_mut().for_each(|c| *c /= n);
            return;
        }
    }
}

/// A uniformly random unit vector in ℝ^dim.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> UnitVector {
    let mut out = vec![0.0; dim];
    uniform_direction_into(rng, &mut out);
    UnitVector::from_vec_unchecked(out)
}

/// Z ~ N(0,1) conditioned on |Z| ≤ b, by rejection from a uniform proposal
/// (b ≤ 1, acceptance ≥ e^{−1/2}) or from the normal itself (acceptance ≥ 0.68).
fn truncated_standard_normal<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    if b <= 1.0 {
        loop {
            let z = rng.random_range(-b..=b);
            if rng.random::<f64>() <= (-0.5 * z * z).exp() {
                return z;
            }
        }
    }
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= b {
            return z;
        }
    }
}
