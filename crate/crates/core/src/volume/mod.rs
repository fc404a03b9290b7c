//! The two-valued cut-volume function: Monte Carlo estimators, exact ball
//! and ellipsoid oracles, and the closed forms for tube bodies.

pub mod exact;
pub mod mc;
pub mod tube;

pub use exact::{ball_cut_volume, ellipsoid_cut_volume, exact_cap_volume, exact_cut_volumes};
pub use mc::{
    mc_cut_volumes, mc_section_volume, mc_volume, CutVolumes, McOptions, PointStream, SectionEstimate, VolumeEstimate,
};
pub use tube::{
    tube_constants, tube_constants_mc, tube_cut_volumes, tube_cut_volumes_with, tube_section_volume,
    tube_section_volume_with, tube_validity, TubeConstants, TubeCut,
};
