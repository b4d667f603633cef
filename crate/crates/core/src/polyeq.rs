//! Signed simplices, p-simplex gaps and p-polygonal equalities.
//!
//! A signed simplex `Q = [x_i(m_i); y_j(n_j)]` induces the vector
//! `ξ_Q = Σ m_i e_{x_i} − Σ n_j e_{y_j}`, and for every `p >= 0`
//!
//! ```text
//! ⟨D_p ξ_Q, ξ_Q⟩ = −2 γ_p(Q)
//! ```
//!
//! since the diagonal of `D_p` vanishes. Reduction, nondegeneracy and the
//! witness constructions are all phrased through this vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

use crate::metric::{dist_pow, power_matrix, MetricSpace};
use crate::quadform::{
    classify, form_value, BalancedVector, Classification, QuadFormError, QuadFormReport, SupremalResult, SupremalStatus,
};

/// Relative slack on `Σ m_i − Σ n_j`.
pub const WEIGHT_REL_TOL: f64 = 1e-12;
/// Components below this fraction of `‖ξ‖_∞` are dropped when building a simplex.
pub const CLEANUP_REL_TOL: f64 = 1e-12;
pub const VERIFY_REL_TOL: f64 = 1e-9;
/// `D_p` counts as singular when `σ_min <= 1e-9 · σ_max`.
pub const SINGULAR_REL_TOL: f64 = 1e-9;
/// Accepted residual of a boundary witness, relative to `max D_p`.
pub const BOUNDARY_RESIDUAL_REL_TOL: f64 = 1e-6;
/// Accepted `|Σ ξ_i|` for a unit kernel or inverse candidate before projection.
const CANDIDATE_BALANCE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolyEqError {
    #[error(transparent)]
    QuadForm(#[from] QuadFormError),
    #[error("point index {index} out of range for a space with {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("weights are unbalanced: left sums to {left}, right sums to {right}")]
    UnbalancedWeights { left: f64, right: f64 },
    #[error("the zero vector does not define a simplex")]
    ZeroVector,
    #[error("vector has length {found}, space has {expected} points")]
    LengthMismatch { expected: usize, found: usize },
    #[error("invalid anchor pair ({0}, {1})")]
    InvalidPair(usize, usize),
    #[error("report was computed at p = {report}, not p = {requested}")]
    ExponentMismatch { requested: f64, report: f64 },
    #[error("verification tolerance must be nonnegative, got {0}")]
    InvalidTolerance(f64),
    #[error("{0}")]
    NotApplicable(String),
    #[error("interpolating quadratic has no root in (0, 1)")]
    NoRootInUnitInterval,
    #[error("no witness candidate at p = {0} met the residual tolerance")]
    NoWitnessFound(f64),
}

/// `Q = [x_i(m_i); y_j(n_j)]` as `(point index, weight)` lists.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignedSimplex {
    pub left: Vec<(usize, f64)>,
    pub right: Vec<(usize, f64)>,
}

impl SignedSimplex {
    pub fn new(left: Vec<(usize, f64)>, right: Vec<(usize, f64)>) -> Self {
        SignedSimplex { left, right }
    }

    fn check_indices(&self, len: usize) -> Result<(), PolyEqError> {
        match self.left.iter().chain(&self.right).find(|(i, _)| *i >= len) {
            Some(&(index, _)) => Err(PolyEqError::IndexOutOfRange { index, len }),
            None => Ok(()),
        }
    }

    fn check_balance(&self) -> Result<(), PolyEqError> {
        let left: f64 = self.left.iter().map(|w| w.1).sum();
        let right: f64 = self.right.iter().map(|w| w.1).sum();
        let scale: f64 = self.left.iter().chain(&self.right).map(|w| w.1.abs()).sum();
        if !(left - right).is_finite() || (left - right).abs() > WEIGHT_REL_TOL * scale {
            return Err(PolyEqError::UnbalancedWeights { left, right });
        }
        Ok(())
    }

    fn max_weight(&self) -> f64 {
        self.left.iter().chain(&self.right).fold(0.0, |acc, w| acc.max(w.1.abs()))
    }

    /// Distinct points and strictly positive weights.
    pub fn is_completely_refined(&self) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        self.left.iter().chain(&self.right).all(|&(i, w)| w > 0.0 && seen.insert(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReducedKind {
    Degenerate,
    CompletelyRefined,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedForm {
    pub kind: ReducedKind,
    /// Present iff `kind` is `CompletelyRefined`.
    pub simplex: Option<SignedSimplex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WitnessMethod {
    Ivt,
    Kernel,
    Inverse,
    EigenDirection,
}

impl fmt::Display for WitnessMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WitnessMethod::Ivt => "IVT",
            WitnessMethod::Kernel => "KERNEL",
            WitnessMethod::Inverse => "INVERSE",
            WitnessMethod::EigenDirection => "EIGEN_DIRECTION",
        })
    }
}

/// A nonzero `ξ ∈ F₀` with `⟨D_p ξ, ξ⟩ ≈ 0` and the simplex it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessReport {
    pub p: f64,
    /// Unit vector in `F₀`.
    pub xi: BalancedVector,
    /// Completely refined.
    pub simplex: SignedSimplex,
    /// `|⟨D_p ξ, ξ⟩|`.
    pub residual: f64,
    pub method: WitnessMethod,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// Cross-side sum `Σ m_i n_j d(x_i, y_j)^p`.
    pub lhs: f64,
    /// Same-side sums.
    pub rhs: f64,
    /// `γ_p(Q) = lhs − rhs`.
    pub gap: f64,
    pub holds: bool,
    pub nontrivial: bool,
    /// Absolute tolerance applied to `|lhs − rhs|`.
    pub tolerance: f64,
}

impl Verification {
    /// A nontrivial p-polygonal equality.
    pub fn is_nontrivial_equality(&self) -> bool {
        self.holds && self.nontrivial
    }
}

/// Both sides of the polygonal equality for `Q`.
fn sides(space: &MetricSpace, p: f64, q: &SignedSimplex) -> (f64, f64) {
    let d = |a: usize, b: usize| dist_pow(space.dist(a, b), p);
    let mut cross = 0.0;
    for &(x, m) in &q.left {
        for &(y, n) in &q.right {
            cross += m * n * d(x, y);
        }
    }
    let same = |side: &[(usize, f64)]| {
        let mut acc = 0.0;
        for (k, &(a, wa)) in side.iter().enumerate() {
            for &(b, wb) in &side[k + 1..] {
                acc += wa * wb * d(a, b);
            }
        }
        acc
    };
    (cross, same(&q.left) + same(&q.right))
}

fn check_exponent(p: f64) -> Result<(), PolyEqError> {
    if p.is_nan() || p < 0.0 || p.is_infinite() {
        return Err(QuadFormError::Metric(crate::metric::MetricError::NegativeExponent(p)).into());
    }
    Ok(())
}

/// The p-simplex gap `γ_p(Q)`.
pub fn gap(space: &MetricSpace, p: f64, q: &SignedSimplex) -> Result<f64, PolyEqError> {
    check_exponent(p)?;
    q.check_indices(space.len())?;
    let (lhs, rhs) = sides(space, p, q);
    Ok(lhs - rhs)
}

fn induced_vector(len: usize, q: &SignedSimplex) -> DVector<f64> {
    let mut xi = DVector::zeros(len);
    for &(i, w) in &q.left {
        xi[i] += w;
    }
    for &(j, w) in &q.right {
        xi[j] -= w;
    }
    xi
}

/// `ξ_Q`: left weights minus right weights at each point, zero elsewhere.
pub fn simplex_to_vector(space: &MetricSpace, q: &SignedSimplex) -> Result<BalancedVector, PolyEqError> {
    q.check_indices(space.len())?;
    q.check_balance()?;
    let xi = induced_vector(space.len(), q);
    // Balanced up to rounding of the weights; projecting would smear the
    // zero padding, so fall back to it only if the sum check fails.
    Ok(BalancedVector::new(xi.clone()).unwrap_or_else(|_| BalancedVector::project(&xi)))
}

/// Sign split of a nonzero balanced vector into a completely refined simplex.
///
/// Components with `|ξ_i| <= 1e-12 · ‖ξ‖_∞` are dropped; their total is
/// folded into the largest component so the result stays balanced.
pub fn vector_to_simplex(space: &MetricSpace, xi: &BalancedVector) -> Result<SignedSimplex, PolyEqError> {
    if xi.len() != space.len() {
        return Err(PolyEqError::LengthMismatch { expected: space.len(), found: xi.len() });
    }
    let top = xi.max_abs();
    if !(top > 0.0) {
        return Err(PolyEqError::ZeroVector);
    }
    let theta = CLEANUP_REL_TOL * top;
    let v = xi.as_slice();
    let mut kept: Vec<f64> = v.iter().map(|&x| if x.abs() > theta { x } else { 0.0 }).collect();
    let dropped: f64 = v.iter().zip(&kept).map(|(a, b)| a - b).sum();
    if dropped != 0.0 {
        let k = v.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|(k, _)| k).unwrap_or(0);
        kept[k] += dropped;
    }
    let mut simplex = SignedSimplex::default();
    for (i, &x) in kept.iter().enumerate() {
        if x > 0.0 {
            simplex.left.push((i, x));
        } else if x < 0.0 {
            simplex.right.push((i, -x));
        }
    }
    Ok(simplex)
}

/// Reduces `Q` through its induced vector: zero means degenerate, anything
/// else is the sign split of the vector. Preserves `γ_p` for every `p`.
///
/// The vector counts as zero when `‖ξ_Q‖_∞ <= 1e-12 · max |weight|`.
pub fn reduce(space: &MetricSpace, q: &SignedSimplex) -> Result<ReducedForm, PolyEqError> {
    let xi = simplex_to_vector(space, q)?;
    if xi.max_abs() <= CLEANUP_REL_TOL * q.max_weight() {
        return Ok(ReducedForm { kind: ReducedKind::Degenerate, simplex: None });
    }
    Ok(ReducedForm { kind: ReducedKind::CompletelyRefined, simplex: Some(vector_to_simplex(space, &xi)?) })
}

pub fn is_nondegenerate(space: &MetricSpace, q: &SignedSimplex) -> Result<bool, PolyEqError> {
    Ok(reduce(space, q)?.kind == ReducedKind::CompletelyRefined)
}

/// Checks the polygonal equality for `Q` at exponent `p`.
///
/// `tol` is relative to `max(|lhs|, |rhs|, 1)` and defaults to `1e-9`.
pub fn verify_equality(
    space: &MetricSpace,
    p: f64,
    q: &SignedSimplex,
    tol: Option<f64>,
) -> Result<Verification, PolyEqError> {
    check_exponent(p)?;
    let tol = tol.unwrap_or(VERIFY_REL_TOL);
    if !(tol >= 0.0) {
        return Err(PolyEqError::InvalidTolerance(tol));
    }
    q.check_indices(space.len())?;
    q.check_balance()?;
    let (lhs, rhs) = sides(space, p, q);
    let tolerance = tol * lhs.abs().max(rhs.abs()).max(1.0);
    let gap = lhs - rhs;
    Ok(Verification {
        lhs,
        rhs,
        gap,
        holds: gap.abs() <= tolerance,
        nontrivial: is_nondegenerate(space, q)?,
        tolerance,
    })
}

/// Builds the report for a candidate direction: cleans it into a simplex,
/// renormalizes, and measures the residual against the true `D_p`.
fn finish(
    space: &MetricSpace,
    p: f64,
    dp: &DMatrix<f64>,
    candidate: &BalancedVector,
    method: WitnessMethod,
) -> Result<WitnessReport, PolyEqError> {
    let unit = candidate.normalized().ok_or(PolyEqError::ZeroVector)?;
    let cleaned = simplex_to_vector(space, &vector_to_simplex(space, &unit)?)?;
    let xi = cleaned.normalized().ok_or(PolyEqError::ZeroVector)?;
    let simplex = vector_to_simplex(space, &xi)?;
    let residual = form_value(dp, xi.as_slice()).abs();
    let (lhs, rhs) = sides(space, p, &simplex);
    Ok(WitnessReport { p, xi, simplex, residual, method, lhs, rhs })
}

/// Default anchor pair `(x₁, x₂)` for [`witness_ivt`].
pub const DEFAULT_ANCHOR: (usize, usize) = (0, 1);

/// Nontrivial polygonal equality for a space that is not of p-negative type.
///
/// Interpolates between `ξ₀ = e₁ − e₂` (negative form value) and the
/// report's extremal direction `ξ₁` (positive form value). The form along
/// `ξ_t = (1−t)ξ₀ + tξ₁` is a quadratic in `t`; its root in `(0,1)` gives
/// the witness.
pub fn witness_ivt(space: &MetricSpace, p: f64, report: &QuadFormReport) -> Result<WitnessReport, PolyEqError> {
    witness_ivt_with_anchor(space, p, report, DEFAULT_ANCHOR)
}

pub fn witness_ivt_with_anchor(
    space: &MetricSpace,
    p: f64,
    report: &QuadFormReport,
    anchor: (usize, usize),
) -> Result<WitnessReport, PolyEqError> {
    let m = space.len();
    let (a, b) = anchor;
    if a >= m || b >= m || a == b {
        return Err(PolyEqError::InvalidPair(a, b));
    }
    if report.p != p {
        return Err(PolyEqError::ExponentMismatch { requested: p, report: report.p });
    }
    if report.classification != Classification::NotNegType {
        return Err(PolyEqError::NotApplicable(not_applicable_message(report)));
    }
    if report.direction.len() != m {
        return Err(PolyEqError::LengthMismatch { expected: m, found: report.direction.len() });
    }
    let dp = power_matrix(space, p).map_err(QuadFormError::from)?.entries;
    let xi1 = report.direction.as_vector();
    let mut xi0 = DVector::zeros(m);
    xi0[a] = 1.0;
    xi0[b] = -1.0;

    let d_xi1 = &dp * xi1;
    let form0 = -2.0 * dp[(a, b)];
    let form1 = form_value(&dp, xi1.as_slice());
    let cross = d_xi1[a] - d_xi1[b];
    if !(form1 > 0.0) {
        return Err(PolyEqError::NoRootInUnitInterval);
    }

    // q(t) = form0 (1−t)² + 2 cross t(1−t) + form1 t²
    let qa = form0 - 2.0 * cross + form1;
    let qb = 2.0 * (cross - form0);
    let qc = form0;
    let scale = form0.abs().max(cross.abs()).max(form1.abs());
    let t = unit_interval_root(qa, qb, qc, scale).ok_or(PolyEqError::NoRootInUnitInterval)?;

    let xi_t = xi0 * (1.0 - t) + xi1 * t;
    // ξ_t = 0 would force ξ₁ ∝ e₁ − e₂, whose form value is negative.
    assert!(xi_t.amax() > 0.0, "interpolated witness vanished");
    finish(space, p, &dp, &BalancedVector::project(&xi_t), WitnessMethod::Ivt)
}

/// Root of `a t² + b t + c` in `(0,1)`, the smaller one if both qualify.
fn unit_interval_root(a: f64, b: f64, c: f64, scale: f64) -> Option<f64> {
    let inside = |t: f64| t > 0.0 && t < 1.0;
    if a.abs() <= 1e-14 * scale {
        let t = -c / b;
        return (t.is_finite() && inside(t)).then_some(t);
    }
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots.into_iter().filter(|t| t.is_finite() && inside(*t)).min_by(f64::total_cmp)
}

fn not_applicable_message(report: &QuadFormReport) -> String {
    match report.classification {
        Classification::Strict => {
            format!("strict {}-negative type: no nontrivial {}-polygonal equality", report.p, report.p)
        }
        Classification::Boundary => {
            format!("{}-negative type but not strict: use the boundary constructions", report.p)
        }
        Classification::NotNegType => format!("not of {}-negative type", report.p),
    }
}

/// Witness candidates for a space on the boundary of p-negative type:
/// a null vector of `D_p`, then `D_p⁻¹ 𝟙`, then the extremal direction.
fn boundary_witness(space: &MetricSpace, p: f64, report: &QuadFormReport) -> Result<WitnessReport, PolyEqError> {
    let dp = power_matrix(space, p).map_err(QuadFormError::from)?.entries;
    let max_entry = dp.amax();
    let accept = BOUNDARY_RESIDUAL_REL_TOL * max_entry;
    let normalized = &dp / max_entry;

    let mut candidates: Vec<(WitnessMethod, BalancedVector)> = Vec::with_capacity(3);
    let eig = SymmetricEigen::new(normalized.clone());
    let (small, large) =
        eig.eigenvalues.iter().fold((f64::INFINITY, 0.0f64), |(s, l), v| (s.min(v.abs()), l.max(v.abs())));
    if small <= SINGULAR_REL_TOL * large {
        let k = eig.eigenvalues.iamin();
        let v = eig.eigenvectors.column(k).into_owned();
        if v.sum().abs() <= CANDIDATE_BALANCE_TOL {
            candidates.push((WitnessMethod::Kernel, BalancedVector::project(&v)));
        }
    } else if let Some(v) = normalized.clone().lu().solve(&DVector::from_element(space.len(), 1.0)) {
        let n = v.norm();
        if n.is_finite() && n > 0.0 && (v.sum() / n).abs() <= CANDIDATE_BALANCE_TOL {
            candidates.push((WitnessMethod::Inverse, BalancedVector::project(&(v / n))));
        }
    }
    candidates.push((WitnessMethod::EigenDirection, report.direction.clone()));

    for (method, xi) in candidates {
        if let Ok(w) = finish(space, p, &dp, &xi, method) {
            if w.residual <= accept {
                return Ok(w);
            }
        }
    }
    Err(PolyEqError::NoWitnessFound(p))
}

/// Witness at a fixed exponent: declines for strict p-negative type, uses
/// the interpolation construction when the form takes positive values and
/// the boundary constructions otherwise.
pub fn witness_at(space: &MetricSpace, p: f64, epsilon: Option<f64>) -> Result<WitnessReport, PolyEqError> {
    let report = classify(space, p, epsilon)?;
    match report.classification {
        Classification::Strict => Err(PolyEqError::NotApplicable(not_applicable_message(&report))),
        Classification::NotNegType => witness_ivt(space, p, &report),
        Classification::Boundary => boundary_witness(space, p, &report),
    }
}

/// Witness at the midpoint of a finite supremal bracket.
pub fn witness_at_supremal(space: &MetricSpace, sup: &SupremalResult) -> Result<WitnessReport, PolyEqError> {
    let p = match sup.status {
        SupremalStatus::Finite => 0.5 * (sup.lo + sup.hi),
        SupremalStatus::InfiniteUltrametric => {
            return Err(PolyEqError::NotApplicable(
                "ultrametric space: strict p-negative type for every p, no nontrivial polygonal equality".into(),
            ))
        }
        SupremalStatus::ExceedsCap => {
            return Err(PolyEqError::NotApplicable(format!(
                "supremal p-negative type exceeds the search cap {}",
                sup.cap
            )))
        }
    };
    let report = classify(space, p, None)?;
    boundary_witness(space, p, &report)
}

/// The set of exponents admitting a nontrivial polygonal equality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolygonalInterval {
    Empty,
    /// `[℘, ∞)` with `lo <= ℘ <= hi`.
    ClosedRay {
        lo: f64,
        hi: f64,
    },
    /// `[℘, ∞)` with `℘ > cap`.
    BeyondCap {
        cap: f64,
    },
}

impl PolygonalInterval {
    /// Whether `p` lies in the interval; `None` when the bracket cannot decide.
    pub fn contains(&self, p: f64) -> Option<bool> {
        match *self {
            PolygonalInterval::Empty => Some(false),
            PolygonalInterval::ClosedRay { lo, hi } => {
                if p >= hi {
                    Some(true)
                } else if p < lo {
                    Some(false)
                } else {
                    None
                }
            }
            PolygonalInterval::BeyondCap { cap } => (p <= cap).then_some(false),
        }
    }
}

impl fmt::Display for PolygonalInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PolygonalInterval::Empty => f.write_str("∅"),
            PolygonalInterval::ClosedRay { lo, hi } => write!(f, "[{:.4}, ∞)", 0.5 * (lo + hi)),
            PolygonalInterval::BeyondCap { cap } => write!(f, "[>{cap}, ∞)"),
        }
    }
}

pub fn polygonal_interval(sup: &SupremalResult) -> PolygonalInterval {
    match sup.status {
        SupremalStatus::Finite => PolygonalInterval::ClosedRay { lo: sup.lo, hi: sup.hi },
        SupremalStatus::InfiniteUltrametric => PolygonalInterval::Empty,
        SupremalStatus::ExceedsCap => PolygonalInterval::BeyondCap { cap: sup.cap },
    }
}
