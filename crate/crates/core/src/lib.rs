//! Forward models and inversions for the V-line transform on the unit circle and
//! the weighted conical Radon transform with vertices on the unit cylinder.

pub mod conical;
pub mod error;
pub mod forward;
pub mod grid;
pub mod io;
pub mod quad;
pub mod special;

pub use error::{CrtError, Result};
pub mod metrics;
pub mod noise;
pub mod phantom;
pub mod vline;
