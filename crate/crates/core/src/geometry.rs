//! Vector primitives: normalization, angles, Euclidean and ℓ₁ projections,
//! and hard thresholding.
//!
//! Vectors are dense `f64` coordinate arrays. [`WeightVector`] is any finite
//! vector of dimension at least two; [`UnitVector`] additionally carries the
//! guarantee that its Euclidean norm is one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Tolerance on `‖u‖₂ - 1` accepted by [`UnitVector::new`].
pub const UNIT_NORM_TOLERANCE: f64 = 1e-12;

/// A finite vector in ℝ^d with d ≥ 2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

/// A vector in ℝ^d with unit Euclidean norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct UnitVector(Vec<f64>);

impl WeightVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(invalid(format!(
                "dimension must be at least 2, got {}",
                coords.len()
            )));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(invalid(format!("coordinate {i} is not finite")));
        }
        Ok(Self(coords))
    }

    /// The zero vector, panicking if `dim < 2`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 2, "dimension must be at least 2");
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn norm_l1(&self) -> f64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0.0)
    }

    pub fn dot(&self, other: &impl AsRef<[f64]>) -> f64 {
        dot(&self.0, other.as_ref())
    }

    /// `self - other`, coordinate-wise.
    pub fn sub(&self, other: &impl AsRef<[f64]>) -> WeightVector {
        let other = other.as_ref();
        assert_eq!(self.dim(), other.len(), "dimension mismatch");
        Self(self.0.iter().zip(other).map(|(a, b)| a - b).collect())
    }

    pub fn scaled(&self, factor: f64) -> WeightVector {
        Self(self.0.iter().map(|c| c * factor).collect())
    }

    /// Number of nonzero coordinates.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&c| c != 0.0).count()
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        debug_assert!(coords.len() >= 2);
        Self(coords)
    }
}

impl UnitVector {
    /// Wraps `coords`, rejecting vectors whose norm is not one within
    /// [`UNIT_NORM_TOLERANCE`].
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let w = WeightVector::new(coords)?;
        let n = w.norm();
        if (n - 1.0).abs() > UNIT_NORM_TOLERANCE {
            return Err(invalid(format!("norm is {n}, expected 1")));
        }
        Ok(Self(w.0))
    }

    /// The canonical basis vector e_{index}.
    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(dim >= 2 && index < dim);
        let mut coords = vec![0.0; dim];
        coords[index] = 1.0;
        Self(coords)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_weight(&self) -> WeightVector {
        WeightVector(self.0.clone())
    }

    pub fn into_weight(self) -> WeightVector {
        WeightVector(self.0)
    }

    pub fn dot(&self, other: &impl AsRef<[f64]>) -> f64 {
        dot(&self.0, other.as_ref())
    }

    pub fn negated(&self) -> UnitVector {
        Self(self.0.iter().map(|c| -c).collect())
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }
}

impl AsRef<[f64]> for WeightVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for UnitVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl TryFrom<Vec<f64>> for UnitVector {
    type Error = crate::Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl From<UnitVector> for Vec<f64> {
    fn from(u: UnitVector) -> Self {
        u.0
    }
}

impl From<UnitVector> for WeightVector {
    fn from(u: UnitVector) -> Self {
        WeightVector(u.0)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[inline]
pub(crate) fn distance_l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Writes ŵ into `out`; the zero vector maps to e₁.
#[inline]
pub(crate) fn normalize_into(w: &[f64], out: &mut [f64]) {
    let n = norm(w);
    if n == 0.0 {
        out.fill(0.0);
        out[0] = 1.0;
    } else {
        for (o, c) in out.iter_mut().zip(w) {
            *o = c / n;
        }
    }
}

/// ℓ₂-normalization ŵ = w/‖w‖₂, with the zero vector mapped to e₁.
pub fn normalize(w: &impl AsRef<[f64]>) -> Result<UnitVector> {
    let w = w.as_ref();
    if w.len() < 2 {
        return Err(invalid("dimension must be at least 2"));
    }
    if w.iter().any(|c| !c.is_finite()) {
        return Err(invalid("cannot normalize a vector with non-finite coordinates"));
    }
    let mut out = vec![0.0; w.len()];
    normalize_into(w, &mut out);
    if out.iter().any(|c| !c.is_finite()) {
        return Err(invalid("norm overflowed during normalization"));
    }
    Ok(UnitVector(out))
}

/// The angle θ(u, v) ∈ [0, π].
pub fn angle(u: &impl AsRef<[f64]>, v: &impl AsRef<[f64]>) -> Result<f64> {
    let (u, v) = (u.as_ref(), v.as_ref());
    if u.len() != v.len() {
        return Err(invalid("dimension mismatch"));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(invalid("angle is undefined for the zero vector"));
    }
    if !(nu.is_finite() && nv.is_finite()) {
        return Err(invalid("non-finite input"));
    }
    let cos = (dot(u, v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// θ̃(u, v) = min(θ, π − θ) ∈ [0, π/2]; invariant under flipping either sign.
pub fn tilde_angle(u: &impl AsRef<[f64]>, v: &impl AsRef<[f64]>) -> Result<f64> {
    let theta = angle(u, v)?;
    Ok(theta.min(PI - theta))
}

#[inline]
pub(crate) fn project_l2_ball_in_place(w: &mut [f64], center: &[f64], radius: f64) {
    let dist = distance(w, center);
    if dist > radius {
        let scale = radius / dist;
        for (wi, ci) in w.iter_mut().zip(center) {
            *wi = ci + scale * (*wi - ci);
        }
    }
}

/// Euclidean projection of `w` onto the ball {v : ‖v − center‖ ≤ radius}.
pub fn project_l2_ball(
    w: &impl AsRef<[f64]>,
    center: &impl AsRef<[f64]>,
    radius: f64,
) -> Result<WeightVector> {
    let (w, center) = (w.as_ref(), center.as_ref());
    if w.len() != center.len() {
        return Err(invalid("dimension mismatch"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be positive, got {radius}")));
    }
    let mut out = WeightVector::new(w.to_vec())?;
    WeightVector::new(center.to_vec())?;
    project_l2_ball_in_place(&mut out.0, center, radius);
    Ok(out)
}

/// Euclidean projection onto the ℓ₁ ball {v : ‖v − center‖₁ ≤ radius},
/// by the sort-and-threshold method.
pub(crate) fn project_l1_ball_in_place(w: &mut [f64], center: &[f64], radius: f64) {
    let l1 = distance_l1(w, center);
    if l1 <= radius {
        return;
    }
    let mut mags: Vec<f64> = w.iter().zip(center).map(|(a, c)| (a - c).abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (k as f64 + 1.0);
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    for (wi, ci) in w.iter_mut().zip(center) {
        let v = *wi - ci;
        *wi = ci + v.signum() * (v.abs() - theta).max(0.0);
    }
}

/// Keeps the `s` largest-magnitude coordinates of `w` and zeros the rest.
/// Magnitude ties go to the lower coordinate index.
pub fn hard_threshold(w: &impl AsRef<[f64]>, s: usize) -> Result<WeightVector> {
    let w = w.as_ref();
    if s == 0 {
        return Err(invalid("sparsity level must be at least 1"));
    }
    let w = WeightVector::new(w.to_vec())?;
    if s >= w.dim() {
        return Ok(w);
    }
    let mut order: Vec<usize> = (0..w.dim()).collect();
    order.sort_by(|&i, &j| w.0[j].abs().total_cmp(&w.0[i].abs()).then(i.cmp(&j)));
    let mut out = vec![0.0; w.dim()];
    for &i in &order[..s] {
        out[i] = w.0[i];
    }
    Ok(WeightVector(out))
}
