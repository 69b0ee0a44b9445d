//! Cartan calculus on Lie algebroids over a single chart, with almost contact,
//! contact, Sasakian and Kenmotsu structures checked numerically on sample grids.
//!
//! Coefficient functions are symbolic [`Expr`]s that are differentiated exactly;
//! every identity is then evaluated pointwise on a [`SampleGrid`] and recorded in
//! a [`Report`].

#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod algebroid;
pub mod bigtangent;
pub mod contact;
pub mod expr;
pub mod fixtures;
pub mod grid;
mod linalg;
pub mod product;
pub mod report;
pub mod riemann;
pub mod tensor;

pub use algebroid::LieAlgebroid;
pub use algebroid::Convention;
pub use contact::{AlmostContactStructure, Classification, Flags};
pub use expr::{parse, Expr};
pub use grid::{ChartBox, SampleGrid};
pub use report::{Check, CheckKind, Report};
pub use riemann::{BundleMetric, Connection};
pub use tensor::{TensorField, TensorValue, Variance};

use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("unsupported tensor variance: {0}")]
    Variance(String),
    #[error("even rank {0}: an odd rank 2m+1 is required")]
    EvenRank(usize),
    #[error("structure functions are not skew: C^{c}_{{{a}{b}}} != -C^{c}_{{{b}{a}}}")]
    NotSkew { a: usize, b: usize, c: usize },
    #[error("metric is not symmetric at ({a}, {b})")]
    AsymmetricMetric { a: usize, b: usize },
    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {eigenvalue:e})")]
    NotPositiveDefinite { point: Vec<f64>, eigenvalue: f64 },
    #[error("singular linear system at {point:?}: {reason}")]
    Singular { point: Vec<f64>, reason: String },
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("evaluation failed at {point:?}: {source}")]
    Eval { point: Vec<f64>, source: expr::EvalError },
    #[error(transparent)]
    Parse(#[from] expr::ParseError),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn eval(point: &[f64], source: expr::EvalError) -> Error {
        Error::Eval { point: point.to_vec(), source }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
