//! Chebyshev polynomials on all real arguments and the discrete Hilbert transform.

mod chebyshev;
mod hilbert;

pub use chebyshev::{cheb_t, cheb_u, ChebBranchSpec, ChebKind};
pub use hilbert::{hilbert_uniform, spectral_derivative};
