use crate::error::{bad_grid, invalid, Result};
use crate::grid::{ConeData, Volume3D};
use crate::vline::{invert_vline, VlineInversionConfig};

use super::kernel::{vline_from_cone, KernelTable};

/// Reconstruction through V-line data: recover V f_z for every z node, invert each
/// slice in 2D and stack the slices on the cone grid's z nodes.
pub fn invert_cone_method1(c: &ConeData, kt: &KernelTable, vcfg: &VlineInversionConfig) -> Result<Volume3D> {
    if c.k_weight == 0 {
        return invalid("Method 1 needs k_weight >= 1");
    }
    let z = &c.grid.z_nodes;
    if z.len() < 2 {
        return bad_grid("Method 1 needs at least two z nodes");
    }
    let sinos = vline_from_cone(c, kt)?;
    let n = vcfg.output_size;
    let mut vol = Volume3D::zeros(n, n, z.len(), 1.0, z[0], z[z.len() - 1])?;
    let slices: Vec<_> = {
        use rayon::prelude::*;
        sinos.par_iter().map(|s| invert_vline(s, vcfg)).collect::<Result<_>>()?
    };
    for (iz, img) in slices.into_iter().enumerate() {
        vol.values[iz * n * n..(iz + 1) * n * n].copy_from_slice(&img.values);
    }
    Ok(vol)
}
