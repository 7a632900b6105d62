//! Numerical lab for analytic function spaces on the unit disk: closed-form
//! function trees, radial weights, mixed and sup-type norms, generalized
//! integration operators and a limsup ladder for essential-norm estimates.

// `!(x < y)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod essnorm;
pub mod extremals;
pub mod fnspec;
pub mod integop;
pub mod norms;
pub mod quadrature;
pub mod sampler;
pub mod weights;

pub use error::{Error, Result};
pub use fnspec::{AnalyticFunction, Node, SelfMap};
pub use integop::OperatorSpec;
pub use weights::{NormalWeight, RadialWeight, WeightKind};
