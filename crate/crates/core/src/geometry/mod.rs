//! Bodies, hyperplanes and their metric quantities.

mod body;
pub mod bodyfile;
pub mod fd;
mod hyperplane;
mod psi;

pub use body::{BodyKind, BodyModel, BoundingBox, ImplicitPolynomial, Monomial, TubeBody};
pub use hyperplane::Hyperplane;
pub use psi::PsiSpec;

pub(crate) use hyperplane::{dot, norm};
pub(crate) use psi::radial_profile;

/// Dimension of the `x`-factor of a tube body.
pub const TUBE_X_DIM: usize = 3;
