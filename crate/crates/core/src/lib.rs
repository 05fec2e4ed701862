//! Calculus of variations over mollifier-regularized fields.
//!
//! Fields are represented by smooth representatives `f * η_ε` of generalized
//! functions. Integration domains are replaced by regularized indicator
//! windows so that boundary terms of variations become explicit kernels.

pub mod error;
pub mod generalized;
pub mod mollifiers;
pub mod ocontrol;
pub mod oscillator;
pub mod pathintegral;
pub mod quadrature;
pub mod scalarfield;
pub mod tensorfield;
pub mod variation;

pub use error::{Error, Result};
pub use generalized::Window;
pub use mollifiers::{Mollifier, MollifierFamily, MollifierKind};
