//! Finite optimal transport with exact duality certificates.
//!
//! The crate solves the Kantorovich problem on finite spaces exactly
//! ([`primal`]), produces dual potentials in canonical c-transform form
//! ([`dual`], [`ctransform`]), certifies optimality ([`certify`]), studies
//! Lipschitz regularizations of the cost ([`envelope`]) and cross-checks
//! everything against a brute-force vertex enumerator ([`oracle`]).
//!
//! All algorithms are generic over [`num::Scalar`]: [`num::Rational`] for
//! exact arithmetic and `f64` for tolerance-based runs.

pub mod certify;
pub mod ctransform;
pub mod dual;
pub mod envelope;
pub mod error;
pub mod instance;
pub mod json;
pub mod matrix;
pub mod num;
pub mod oracle;
pub mod primal;

pub use error::{Axis, Error, Result};
pub use instance::{
    dual_value, plan_cost, product_plan, validate_instance, CostMatrix, DualPotentials, FiniteSpace, Instance,
    Marginal, TransportPlan, ValidatedInstance,
};
pub use matrix::Matrix;
pub use num::{Extended, Mode, Rational, Scalar};
