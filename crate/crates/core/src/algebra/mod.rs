//! Moment expressions, formula assembly, basis conversion and evaluation.

pub mod conversion;
pub mod evaluate;
pub mod expression;
pub mod formula;
pub mod polynomial;

pub use conversion::{
    conversion_matrix, specialize_all_uniform, specialize_uniform, to_i_basis, to_v_basis, to_v_basis_partial, uniform_gram_moments,
    ConversionMatrix, PhaseAssignment,
};
pub use evaluate::{evaluate, Bindings};
pub use expression::{classify, parse_expression, AspectRatio, Attributes, Classification, MomentExpression, Space, UNIFORM};
pub use formula::{mixed_moment_formula, moment_formula, normalize, Basis, Normalization, MAX_PIPELINE_ORDER};
pub use polynomial::{emit, to_json, to_latex, to_text, Format, Monomial, MomentPolynomial};
