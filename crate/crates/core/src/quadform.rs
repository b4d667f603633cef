//! The quadratic form `⟨D_p ξ, ξ⟩` on the zero-sum hyperplane `F₀`.
//!
//! The form is restricted to `F₀` through an explicit orthonormal basis
//! `B` (Helmert vectors), so `M = Bᵀ D_p B` is an `(m−1)×(m−1)` symmetric
//! matrix whose largest eigenvalue decides the p-negative type of the
//! space:
//!
//! * `λ_max < −ε` — strict p-negative type,
//! * `|λ_max| ≤ ε` — p-negative type, but not strict,
//! * `λ_max > ε` — not of p-negative type.
//!
//! Spectra are computed on the distance matrix rescaled to unit diameter.
//! Scaling every distance by `c` multiplies `M` by `c^p`, so signs and
//! relative tolerances are unaffected while large exponents stay in range.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{dist_pow, is_ultrametric, MetricError, MetricSpace};

/// Relative slack on `Σ ξ_i` for a [`BalancedVector`].
pub const BALANCE_REL_TOL: f64 = 1e-12;
/// Default classification tolerance, relative to the largest entry of `M`.
pub const CLASSIFY_REL_TOL: f64 = 1e-9;
pub const DEFAULT_CAP: f64 = 64.0;
pub const DEFAULT_WIDTH_TOL: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadFormError {
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("vector has length {found}, space has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("vector components sum to {sum}, not zero")]
    NotBalanced { sum: f64 },
    #[error("F₀ needs dimension m >= 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("symmetric eigensolver did not converge at p = {0}")]
    EigenFailure(f64),
    #[error("search cap must be positive, got {0}")]
    InvalidCap(f64),
    #[error("bracket width tolerance must be positive, got {0}")]
    InvalidWidthTolerance(f64),
    #[error("classification tolerance must be nonnegative, got {0}")]
    InvalidTolerance(f64),
}

/// A vector in the zero-sum hyperplane `F₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct BalancedVector(DVector<f64>);

impl BalancedVector {
    /// Accepts `v` when `|Σ v_i| <= 1e-12 · ‖v‖_∞`.
    pub fn new(v: DVector<f64>) -> Result<Self, QuadFormError> {
        let sum = v.sum();
        if !v.iter().all(|x| x.is_finite()) || sum.abs() > BALANCE_REL_TOL * v.amax() {
            return Err(QuadFormError::NotBalanced { sum });
        }
        Ok(BalancedVector(v))
    }

    pub fn from_slice(v: &[f64]) -> Result<Self, QuadFormError> {
        Self::new(DVector::from_column_slice(v))
    }

    /// Orthogonal projection onto `F₀` (subtracts the mean).
    pub fn project(v: &DVector<f64>) -> Self {
        let mean = v.mean();
        BalancedVector(v.map(|x| x - mean))
    }

    pub fn zeros(m: usize) -> Self {
        BalancedVector(DVector::zeros(m))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    /// Unit-length copy; `None` for the zero vector.
    pub fn normalized(&self) -> Option<Self> {
        let n = self.0.norm();
        (n > 0.0 && n.is_finite()).then(|| BalancedVector(&self.0 / n))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Classification {
    /// Strict p-negative type.
    Strict,
    /// p-negative type but not strict.
    Boundary,
    /// Not of p-negative type.
    NotNegType,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Classification::Strict => "STRICT",
            Classification::Boundary => "BOUNDARY",
            Classification::NotNegType => "NOT_NEG_TYPE",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadFormReport {
    pub p: f64,
    /// Largest eigenvalue of the form restricted to `F₀`.
    pub lambda_max: f64,
    pub classification: Classification,
    /// Unit vector in `F₀` attaining `lambda_max`.
    pub direction: BalancedVector,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SupremalStatus {
    Finite,
    InfiniteUltrametric,
    ExceedsCap,
}

/// Bracket on the supremal p-negative type.
///
/// For `Finite`, `lo <= ℘ <= hi`. For `ExceedsCap`, `lo = cap` and
/// `hi = ∞`. For `InfiniteUltrametric`, both are `∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupremalResult {
    pub status: SupremalStatus,
    pub lo: f64,
    pub hi: f64,
    pub cap: f64,
    pub width_tol: f64,
    /// Number of restricted eigenvalue evaluations.
    pub evaluations: usize,
}

impl SupremalResult {
    /// Bracket midpoint, when the bracket is finite.
    pub fn estimate(&self) -> Option<f64> {
        (self.status == SupremalStatus::Finite).then_some(0.5 * (self.lo + self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupremalOptions {
    pub cap: f64,
    pub width_tol: f64,
}

impl Default for SupremalOptions {
    fn default() -> Self {
        SupremalOptions { cap: DEFAULT_CAP, width_tol: DEFAULT_WIDTH_TOL }
    }
}

/// Helmert basis of `F₀` as the columns of an `m×(m−1)` matrix.
///
/// Column `k−1` is `(1,…,1,−k,0,…,0)/√(k(k+1))` with `k` leading ones.
pub fn basis_matrix(m: usize) -> Result<DMatrix<f64>, QuadFormError> {
    if m < 2 {
        return Err(QuadFormError::DimensionTooSmall(m));
    }
    Ok(DMatrix::from_fn(m, m - 1, |i, c| {
        let k = c + 1;
        let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
        if i < k {
            scale
        } else if i == k {
            -(k as f64) * scale
        } else {
            0.0
        }
    }))
}

/// Orthonormal basis of `F₀`.
pub fn balanced_basis(m: usize) -> Result<Vec<BalancedVector>, QuadFormError> {
    let b = basis_matrix(m)?;
    Ok(b.column_iter().map(|c| BalancedVector(c.into_owned())).collect())
}

/// `Σ_{i,j} D[i][j] ξ_i ξ_j`, summing each unordered pair twice.
pub(crate) fn form_value(entries: &DMatrix<f64>, xi: &[f64]) -> f64 {
    let m = xi.len();
    let mut acc = 0.0;
    for i in 0..m {
        if xi[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in (i + 1)..m {
            row += entries[(i, j)] * xi[j];
        }
        acc += xi[i] * row;
    }
    2.0 * acc
}

/// `⟨D_p ξ, ξ⟩`.
pub fn quad_form(space: &MetricSpace, p: f64, xi: &BalancedVector) -> Result<f64, QuadFormError> {
    if xi.len() != space.len() {
        return Err(QuadFormError::LengthMismatch { expected: space.len(), found: xi.len() });
    }
    let dp = crate::metric::power_matrix(space, p)?;
    Ok(form_value(&dp.entries, xi.as_slice()))
}

/// Largest eigenpair of the restricted form on the unit-diameter rescaling.
pub(crate) struct RestrictedSpectrum {
    pub lambda_max: f64,
    pub direction: DVector<f64>,
    pub max_entry: f64,
    /// `diam^p`; multiply normalized quantities by this to recover true units.
    pub unit: f64,
}

pub(crate) fn restricted_spectrum(space: &MetricSpace, p: f64) -> Result<RestrictedSpectrum, QuadFormError> {
    if p.is_nan() || p < 0.0 || p.is_infinite() {
        return Err(MetricError::NegativeExponent(p).into());
    }
    let m = space.len();
    let diam = space.max_distance();
    let dp = space.distances().map(|d| dist_pow(d / diam, p));
    let b = basis_matrix(m)?;
    let restricted = b.transpose() * &dp * &b;
    let restricted = 0.5 * (&restricted + restricted.transpose());
    let max_entry = restricted.amax();
    let eig =
        SymmetricEigen::try_new(restricted, f64::EPSILON, EIGEN_MAX_ITER).ok_or(QuadFormError::EigenFailure(p))?;
    let (k, &lambda_max) =
        eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).ok_or(QuadFormError::EigenFailure(p))?;
    if !lambda_max.is_finite() {
        return Err(QuadFormError::EigenFailure(p));
    }
    let mut direction = &b * eig.eigenvectors.column(k);
    // Fix the sign so the first nonzero component is positive.
    if let Some(first) = direction.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            direction.neg_mut();
        }
    }
    let n = direction.norm();
    direction /= n;
    Ok(RestrictedSpectrum { lambda_max, direction, max_entry, unit: dist_pow(diam, p).max(f64::MIN_POSITIVE) })
}

/// Three-way p-negative type classification.
///
/// `epsilon` is an absolute tolerance on `λ_max`; by default it is
/// `1e-9 ·` the largest entry of the restricted matrix.
pub fn classify(space: &MetricSpace, p: f64, epsilon: Option<f64>) -> Result<QuadFormReport, QuadFormError> {
    if let Some(e) = epsilon {
        if !(e >= 0.0) || e.is_infinite() {
            return Err(QuadFormError::InvalidTolerance(e));
        }
    }
    let s = restricted_spectrum(space, p)?;
    let eps_unit = match epsilon {
        Some(e) => e / s.unit,
        None => CLASSIFY_REL_TOL * s.max_entry,
    };
    let classification = classify_value(s.lambda_max, eps_unit);
    Ok(QuadFormReport {
        p,
        lambda_max: s.lambda_max * s.unit,
        classification,
        direction: BalancedVector::project(&s.direction),
        epsilon: epsilon.unwrap_or(eps_unit * s.unit),
    })
}

fn classify_value(lambda: f64, eps: f64) -> Classification {
    if lambda < -eps {
        Classification::Strict
    } else if lambda > eps {
        Classification::NotNegType
    } else {
        Classification::Boundary
    }
}

/// Brackets the supremal p-negative type by doubling then bisection.
///
/// Ultrametric spaces short-circuit to `InfiniteUltrametric`. Otherwise the
/// sign of `λ_max` is probed at `p = 1, 2, 4, …` (clamped to `cap`), and the
/// first sign change is bisected until `hi − lo <= width_tol`.
pub fn supremal(space: &MetricSpace, options: SupremalOptions) -> Result<SupremalResult, QuadFormError> {
    let SupremalOptions { cap, width_tol } = options;
    if !(cap > 0.0) || cap.is_infinite() {
        return Err(QuadFormError::InvalidCap(cap));
    }
    if !(width_tol > 0.0) {
        return Err(QuadFormError::InvalidWidthTolerance(width_tol));
    }
    let mut result = SupremalResult {
        status: SupremalStatus::InfiniteUltrametric,
        lo: f64::INFINITY,
        hi: f64::INFINITY,
        cap,
        width_tol,
        evaluations: 0,
    };
    if is_ultrametric(space) {
        return Ok(result);
    }

    let positive = |p: f64, evaluations: &mut usize| -> Result<bool, QuadFormError> {
        *evaluations += 1;
        Ok(restricted_spectrum(space, p)?.lambda_max > 0.0)
    };
    let mut evaluations = 0usize;

    // λ_max(0) < 0 for every finite metric space.
    let mut lo = 0.0;
    let mut p = cap.min(1.0);
    let hi = loop {
        if positive(p, &mut evaluations)? {
            break Some(p);
        }
        lo = p;
        if p >= cap {
            break None;
        }
        p = (2.0 * p).min(cap);
    };

    let Some(mut hi) = hi else {
        result.status = SupremalStatus::ExceedsCap;
        result.lo = cap;
        result.evaluations = evaluations;
        return Ok(result);
    };

    while hi - lo > width_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if positive(mid, &mut evaluations)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    result.status = SupremalStatus::Finite;
    result.lo = lo;
    result.hi = hi;
    result.evaluations = evaluations;
    Ok(result)
}

/// Whether the space embeds isometrically in Hilbert space, i.e. whether it
/// is of 2-negative type.
pub fn hilbert_embeddable(space: &MetricSpace) -> Result<bool, QuadFormError> {
    if is_ultrametric(space) {
        return Ok(true);
    }
    Ok(classify(space, 2.0, None)?.classification != Classification::NotNegType)
}
