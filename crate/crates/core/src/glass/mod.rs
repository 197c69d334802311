//! Semi-empirical polynomial load/generation templates in rectangular
//! state variables.

mod basis;
mod template;

pub use basis::{basis_vector, monomial_count, monomial_label, MonomialBasis, MAX_ORDER};
pub use template::{CurrentDependentStamp, Domain, GlassKind, GlassStamp, GlassTemplate};
