//! Discrete complex line bundles: connections, prescribed curvature and the
//! associated finite-element operators.

mod connection;
mod fem;

pub use connection::{
    half_levi_civita_curvature, levi_civita, prescribe_curvature, spin_connection, surface_connection,
    vector_field_connection, Connection, CurvatureSolver,
};
pub use fem::{build_fem_matrices, f0, f1, f2, face_stencil, OperatorSet};
pub(crate) use fem::face_inputs;
