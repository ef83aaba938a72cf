//! Inversion of the weighted conical Radon transform C_k.

mod kernel;

pub use kernel::{default_n_gamma, kernel_table, vline_from_cone, KernelTable};
mod method1;

pub use method1::invert_cone_method1;
mod method2;

pub use method2::{
    backproject_radon, cone_moments, second_derivative_row, cone_moments_with, invert_cone_method2, psi_moments, Method2Config,
    Method2Intermediate, Method2Output,
};
mod direct;

pub use direct::{invert_cone_direct, DIRECT_MAX_VOXELS};
mod adjoint;
mod stability;

pub use adjoint::{adjoint_cone, cone_cell_measure};
pub use stability::{sobolev_minus_1, sobolev_minus_1_padded, stability_norms, StabilityNorms};
