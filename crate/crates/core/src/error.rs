use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("sample count {got} does not match grid node count {expected}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite {what} at node {node}")]
    NonFinite { what: &'static str, node: usize },

    #[error("support value {value} at node {node} is not positive")]
    NonPositiveSupport { node: usize, value: f64 },

    #[error("body is not uniformly convex: min curvature radius {margin:e} at node {node} (theta={theta:.6}, phi={phi:.6})")]
    NonConvex { node: usize, margin: f64, theta: f64, phi: f64 },

    #[error("direction has no node in its open hemisphere")]
    EmptyHemisphere,

    #[error("invalid integrand: {0}")]
    Integrand(String),

    #[error("integrand evaluation failed at node {node}: {source}")]
    IntegrandAt {
        node: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("{0} must be positive (got {1})")]
    NonPositiveValue(&'static str, f64),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("flow breakdown at t={t}: {reason}")]
    Breakdown { t: f64, reason: String },
}
