//! Numerical toolkit for SG-classical symbols and phase functions on the
//! radially compactified phase space `B^d × B^s`.

pub mod expr;

pub use expr::{EvalError, Expression, Jet, ParseError};
pub mod compact;
pub mod extrap;
pub mod sample;
pub mod symbols;
pub mod classical;
pub mod phase;
pub mod stationary;
pub mod lagrangian;
pub mod equiv;
pub mod oscint;
