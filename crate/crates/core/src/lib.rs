//! Cut volumes of smooth bodies by hyperplanes, local lacuna classification
//! at tangencies, and a numerical probe for algebraic volume functions.

pub mod error;
pub mod geometry;
pub mod probe;
pub mod quad;
pub mod rng;
pub mod special;
pub mod tangency;
pub mod volume;

pub use error::{Error, Result};
pub use geometry::{BodyKind, BodyModel, BoundingBox, Hyperplane, PsiSpec, TubeBody, TUBE_X_DIM};
pub use probe::{AlgebraicityReport, DomainSpec, Verdict};
pub use tangency::{ScanSummary, TangencyReport};
pub use volume::{CutVolumes, SectionEstimate, TubeConstants, TubeCut, VolumeEstimate};
