//! Negative type and polygonal equalities of finite metric spaces.
//!
//! * [`metric`] builds and validates finite metric spaces and their
//!   p-distance matrices.
//! * [`quadform`] classifies p-negative type through the restricted
//!   quadratic form and brackets the supremal p-negative type `℘(X)`.
//! * [`polyeq`] handles signed simplices, p-simplex gaps and the
//!   construction and verification of nontrivial p-polygonal equalities.
//! * [`cli`] is the file-level surface used by the `negtype` binary.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod metric;
pub mod polyeq;
pub mod quadform;

pub use metric::{power_matrix, validate_metric, MetricError, MetricSpace, NormOrder, PowerMatrix};
pub use polyeq::{
    gap, is_nondegenerate, polygonal_interval, reduce, simplex_to_vector, vector_to_simplex, verify_equality,
    witness_at, witness_at_supremal, witness_ivt, PolyEqError, PolygonalInterval, ReducedForm, ReducedKind,
    SignedSimplex, Verification, WitnessMethod, WitnessReport,
};
pub use quadform::{
    balanced_basis, classify, hilbert_embeddable, quad_form, supremal, BalancedVector, Classification, QuadFormError,
    QuadFormReport, SupremalOptions, SupremalResult, SupremalStatus,
};
