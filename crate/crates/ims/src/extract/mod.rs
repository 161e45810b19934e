//! Recovering maps from the zero set of a product section.

mod crossing;
mod distortion;
mod index;
mod map;
mod transfer;
mod zero;

pub use crossing::{overlay_text, write_overlay, Crossing, EdgeQuad};
pub use distortion::{distortion_report, triangle_singular_values, DistortionReport, FaceDistortion, FaceStatus, Histogram};
pub use index::{principal_angle, slice_index_form, AngularForm, IndexForm, INTEGRALITY_TOL};
pub use map::{
    locate_slice_zero, point_weights, whitney_phase, CorrespondenceMap, Direction, PointImage, ProductView,
    SliceExtraction, SliceZero,
};
pub use transfer::{pull_back_uvs, spherical_uvs, write_geometry_transfer, write_texture_transfer};
pub use zero::{find_triangle_zero, relative_residual, SingularTriangle, HOMOTOPY_STEPS, MIN_HOMOTOPY_STEP, ZERO_TOL};
