//! Energies and operators on the product A×B in tensor-factored form.

mod energy;
mod pinning;
mod section;
mod slice;

pub use energy::{dirichlet_apply, dirichlet_energy, gl_energy_and_gradient, mass_apply, GlEvaluation};
pub use pinning::{build_pinning_potential, CurvePair, PinningPotential};
pub use section::Section;
#[allow(unused_imports)]
pub(crate) use section::{parse_header, real_inner};
pub use slice::{build_slice_connection, slicewise_laplacian_apply, SliceConnection, SliceTargets};
