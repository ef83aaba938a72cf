//! Sampled-data containers and grid helpers shared by every operator.

mod polar;

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{bad_grid, Result};

pub use polar::{cartesian_to_polar, polar_to_cartesian};

/// Containers whose samples can be accessed as one flat slice.
pub trait Sampled {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
}

macro_rules! impl_sampled {
    ($t:ty, $field:ident) => {
        impl Sampled for $t {
            fn values(&self) -> &[f64] {
                &self.$field
            }
            fn values_mut(&mut self) -> &mut [f64] {
                &mut self.$field
            }
        }
    };
}

/// `n` equispaced nodes from `a` to `b` inclusive.
pub fn uniform_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + i as f64 * h).collect()
}

/// `n` cell midpoints of the uniform partition of (a, b).
pub fn midpoint_nodes(a: f64, b: f64, n: usize) -> Vec<f64> {
    let h = (b - a) / n as f64;
    (0..n).map(|i| a + (i as f64 + 0.5) * h).collect()
}

/// Opening angles ψ_j = arcsin(j/(n+1)), j = 1..n, so that sin ψ is uniform.
pub fn arcsine_psi_nodes(n: usize) -> Vec<f64> {
    let m = (n + 1) as f64;
    (1..=n).map(|j| (j as f64 / m).asin()).collect()
}

fn check_increasing(name: &str, nodes: &[f64], lo: f64, hi: f64) -> Result<()> {
    if nodes.is_empty() {
        return bad_grid(format!("{name} is empty"));
    }
    if nodes.iter().any(|v| !v.is_finite() || *v <= lo || *v >= hi) {
        return bad_grid(format!("{name} must lie in the open interval ({lo}, {hi})"));
    }
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return bad_grid(format!("{name} must be strictly increasing"));
    }
    Ok(())
}

fn check_uniform(name: &str, nodes: &[f64]) -> Result<()> {
    if nodes.len() < 2 {
        return Ok(());
    }
    let h = nodes[1] - nodes[0];
    if h <= 0.0 {
        return bad_grid(format!("{name} must be increasing"));
    }
    for (i, v) in nodes.iter().enumerate() {
        if (v - (nodes[0] + i as f64 * h)).abs() > 1e-9 * (1.0 + h.abs() * i as f64) {
            return bad_grid(format!("{name} must be uniform"));
        }
    }
    Ok(())
}

/// Rectangle-rule cell widths for increasing nodes inside [lo, hi]: each node owns
/// the interval between the midpoints to its neighbours, outer cells reach the ends.
pub fn cell_widths(nodes: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|j| {
            let left = if j == 0 { lo } else { 0.5 * (nodes[j - 1] + nodes[j]) };
            let right = if j + 1 == n { hi } else { 0.5 * (nodes[j] + nodes[j + 1]) };
            right - left
        })
        .collect()
}

#[inline]
fn sym_node(i: usize, n: usize, extent: f64) -> f64 {
    extent * ((2 * i) as f64 - (n - 1) as f64) / (n - 1) as f64
}

// ---------------------------------------------------------------------------
// 2D image
// ---------------------------------------------------------------------------

/// Samples of a planar density on the square [−extent, extent]², row-major in y.
#[derive(Debug, Clone, PartialEq)]
pub struct Image2D {
    pub n_x: usize,
    pub n_y: usize,
    pub extent: f64,
    pub values: Vec<f64>,
}

impl_sampled!(Image2D, values);

impl Image2D {
    pub fn zeros(n_x: usize, n_y: usize, extent: f64) -> Result<Self> {
        if n_x < 3 || n_y < 3 {
            return bad_grid(format!("image needs at least 3x3 samples, got {n_x}x{n_y}"));
        }
        if !(extent > 0.0) {
            return bad_grid("image extent must be positive");
        }
        Ok(Self { n_x, n_y, extent, values: vec![0.0; n_x * n_y] })
    }

    pub fn from_fn(n_x: usize, n_y: usize, extent: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut img = Self::zeros(n_x, n_y, extent)?;
        for iy in 0..n_y {
            let y = img.y(iy);
            for ix in 0..n_x {
                img.values[iy * n_x + ix] = f(img.x(ix), y);
            }
        }
        Ok(img)
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.extent / (self.n_x - 1) as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * self.extent / (self.n_y - 1) as f64
    }

    /// Node coordinates are computed symmetrically so that x(i) = −x(n−1−i) exactly.
    pub fn x(&self, ix: usize) -> f64 {
        sym_node(ix, self.n_x, self.extent)
    }

    pub fn y(&self, iy: usize) -> f64 {
        sym_node(iy, self.n_y, self.extent)
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.n_x + ix]
    }

    /// Bilinear interpolation; zero outside the sampled square.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let fx = (x + self.extent) / self.dx();
        let fy = (y + self.extent) / self.dy();
        if !(fx >= 0.0 && fy >= 0.0) || fx > (self.n_x - 1) as f64 || fy > (self.n_y - 1) as f64 {
            return 0.0;
        }
        let ix = (fx as usize).min(self.n_x - 2);
        let iy = (fy as usize).min(self.n_y - 2);
        let tx = fx - ix as f64;
        let ty = fy - iy as f64;
        let v = &self.values;
        let r0 = iy * self.n_x + ix;
        let r1 = r0 + self.n_x;
        (1.0 - ty) * ((1.0 - tx) * v[r0] + tx * v[r0 + 1]) + ty * ((1.0 - tx) * v[r1] + tx * v[r1 + 1])
    }
}

// ---------------------------------------------------------------------------
// 3D volume
// ---------------------------------------------------------------------------

/// Samples of a density on [−e, e]² × [z_min, z_max], index (iz, iy, ix) row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    pub extent_xy: f64,
    pub z_min: f64,
    pub z_max: f64,
    pub values: Vec<f64>,
}

impl_sampled!(Volume3D, values);

impl Volume3D {
    pub fn zeros(n_x: usize, n_y: usize, n_z: usize, extent_xy: f64, z_min: f64, z_max: f64) -> Result<Self> {
        if n_x < 2 || n_y < 2 || n_z < 2 {
            return bad_grid("volume needs at least 2 samples per axis");
        }
        if !(extent_xy > 0.0) || !(z_min < z_max) {
            return bad_grid("volume needs extent_xy > 0 and z_min < z_max");
        }
        Ok(Self { n_x, n_y, n_z, extent_xy, z_min, z_max, values: vec![0.0; n_x * n_y * n_z] })
    }

    /// Cube of `n` samples per axis on [−1, 1]³.
    pub fn cube(n: usize) -> Result<Self> {
        Self::zeros(n, n, n, 1.0, -1.0, 1.0)
    }

    pub fn same_grid(&self) -> Self {
        Self { values: vec![0.0; self.values.len()], ..*self }
    }

    pub fn fill(&mut self, f: impl Fn(f64, f64, f64) -> f64) {
        for iz in 0..self.n_z {
            let z = self.z(iz);
            for iy in 0..self.n_y {
                let y = self.y(iy);
                for ix in 0..self.n_x {
                    let i = self.index(ix, iy, iz);
                    self.values[i] = f(self.x(ix), y, z);
                }
            }
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.extent_xy / (self.n_x - 1) as f64
    }
    pub fn dy(&self) -> f64 {
        2.0 * self.extent_xy / (self.n_y - 1) as f64
    }
    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_z - 1) as f64
    }
    pub fn x(&self, ix: usize) -> f64 {
        sym_node(ix, self.n_x, self.extent_xy)
    }
    pub fn y(&self, iy: usize) -> f64 {
        sym_node(iy, self.n_y, self.extent_xy)
    }
    pub fn z(&self, iz: usize) -> f64 {
        self.z_min + iz as f64 * self.dz()
    }
    pub fn voxel_volume(&self) -> f64 {
        self.dx() * self.dy() * self.dz()
    }
    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (iz * self.n_y + iy) * self.n_x + ix
    }

    /// Trilinear stencil for point `p`: eight (flat index, weight) pairs, or `None`
    /// when the point lies outside the sampled box.
    #[inline]
    pub fn stencil(&self, p: [f64; 3]) -> Option<[(usize, f64); 8]> {
        let fx = (p[0] + self.extent_xy) / self.dx();
        let fy = (p[1] + self.extent_xy) / self.dy();
        let fz = (p[2] - self.z_min) / self.dz();
        if !(fx >= 0.0 && fy >= 0.0 && fz >= 0.0)
            || fx > (self.n_x - 1) as f64
            || fy > (self.n_y - 1) as f64
            || fz > (self.n_z - 1) as f64
        {
            return None;
        }
        let ix = (fx as usize).min(self.n_x - 2);
        let iy = (fy as usize).min(self.n_y - 2);
        let iz = (fz as usize).min(self.n_z - 2);
        let (tx, ty, tz) = (fx - ix as f64, fy - iy as f64, fz - iz as f64);
        let b = self.index(ix, iy, iz);
        let sy = self.n_x;
        let sz = self.n_x * self.n_y;
        Some([
            (b, (1.0 - tx) * (1.0 - ty) * (1.0 - tz)),
            (b + 1, tx * (1.0 - ty) * (1.0 - tz)),
            (b + sy, (1.0 - tx) * ty * (1.0 - tz)),
            (b + sy + 1, tx * ty * (1.0 - tz)),
            (b + sz, (1.0 - tx) * (1.0 - ty) * tz),
            (b + sz + 1, tx * (1.0 - ty) * tz),
            (b + sz + sy, (1.0 - tx) * ty * tz),
            (b + sz + sy + 1, tx * ty * tz),
        ])
    }

    /// Trilinear interpolation; zero outside the sampled box.
    pub fn sample(&self, p: [f64; 3]) -> f64 {
        match self.stencil(p) {
            Some(st) => st.iter().map(|&(i, w)| w * self.values[i]).sum(),
            None => 0.0,
        }
    }

    /// z-slice `iz` as a 2D image (requires a square xy grid).
    pub fn slice(&self, iz: usize) -> Image2D {
        let n = self.n_x * self.n_y;
        Image2D {
            n_x: self.n_x,
            n_y: self.n_y,
            extent: self.extent_xy,
            values: self.values[iz * n..(iz + 1) * n].to_vec(),
        }
    }
}

// ---------------------------------------------------------------------------
// Polar coefficients
// ---------------------------------------------------------------------------

/// Angular Fourier coefficients F_n(r_i), n ∈ [−n_max, n_max), r_i = i/m, i ∈ [0, m].
#[derive(Debug, Clone, PartialEq)]
pub struct PolarCoefficients {
    pub n_max: usize,
    pub m: usize,
    pub coeffs: Vec<Complex64>,
}

impl PolarCoefficients {
    pub fn zeros(n_max: usize, m: usize) -> Self {
        Self { n_max, m, coeffs: vec![Complex64::new(0.0, 0.0); 2 * n_max * (m + 1)] }
    }

    pub fn orders(&self) -> std::ops::Range<i64> {
        -(self.n_max as i64)..self.n_max as i64
    }

    #[inline]
    pub fn index(&self, n: i64, i: usize) -> usize {
        (n + self.n_max as i64) as usize * (self.m + 1) + i
    }

    pub fn get(&self, n: i64, i: usize) -> Complex64 {
        self.coeffs[self.index(n, i)]
    }

    pub fn set(&mut self, n: i64, i: usize, v: Complex64) {
        let k = self.index(n, i);
        self.coeffs[k] = v;
    }

    pub fn radius(&self, i: usize) -> f64 {
        i as f64 / self.m as f64
    }

    /// Row of coefficients for order `n` over all radii.
    pub fn row(&self, n: i64) -> &[Complex64] {
        let s = self.index(n, 0);
        &self.coeffs[s..s + self.m + 1]
    }
}

// ---------------------------------------------------------------------------
// V-line sinogram
// ---------------------------------------------------------------------------

/// Samples of a V-line (or one-sided X-ray) transform over φ_k = 2πk/n_phi and ψ_j.
#[derive(Debug, Clone, PartialEq)]
pub struct VlineSinogram {
    pub n_phi: usize,
    pub psi_nodes: Vec<f64>,
    pub data: Vec<f64>,
}

impl_sampled!(VlineSinogram, data);

impl VlineSinogram {
    pub fn new(n_phi: usize, psi_nodes: Vec<f64>, data: Vec<f64>) -> Result<Self> {
        if n_phi < 2 {
            return bad_grid("sinogram needs at least 2 vertex angles");
        }
        check_increasing("psi_nodes", &psi_nodes, 0.0, PI / 2.0)?;
        if data.len() != n_phi * psi_nodes.len() {
            return bad_grid(format!(
                "sinogram data has {} samples, expected {}",
                data.len(),
                n_phi * psi_nodes.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return bad_grid("sinogram data must be finite");
        }
        Ok(Self { n_phi, psi_nodes, data })
    }

    pub fn zeros(n_phi: usize, psi_nodes: Vec<f64>) -> Result<Self> {
        let len = n_phi * psi_nodes.len();
        Self::new(n_phi, psi_nodes, vec![0.0; len])
    }

    pub fn n_psi(&self) -> usize {
        self.psi_nodes.len()
    }

    pub fn phi(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_phi as f64
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.data[k * self.n_psi() + j]
    }
}

// ---------------------------------------------------------------------------
// Cone data
// ---------------------------------------------------------------------------

/// Sampling grid of cone data: vertex angle φ_i = 2πi/n_phi, height z, tilt β, opening ψ.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeGrid {
    pub n_phi: usize,
    pub z_nodes: Vec<f64>,
    pub beta_nodes: Vec<f64>,
    pub psi_nodes: Vec<f64>,
}

impl ConeGrid {
    pub fn new(n_phi: usize, z_nodes: Vec<f64>, beta_nodes: Vec<f64>, psi_nodes: Vec<f64>) -> Result<Self> {
        if n_phi < 1 || z_nodes.is_empty() {
            return bad_grid("cone grid needs at least one φ and one z node");
        }
        check_uniform("z_nodes", &z_nodes)?;
        check_increasing("beta_nodes", &beta_nodes, 0.0, PI)?;
        check_increasing("psi_nodes", &psi_nodes, 0.0, PI)?;
        Ok(Self { n_phi, z_nodes, beta_nodes, psi_nodes })
    }

    /// Uniform z on [z_min, z_max], midpoint β and ψ grids on (0, π).
    pub fn regular(n_phi: usize, n_z: usize, z_min: f64, z_max: f64, n_beta: usize, n_psi: usize) -> Result<Self> {
        Self::new(
            n_phi,
            uniform_nodes(z_min, z_max, n_z),
            midpoint_nodes(0.0, PI, n_beta),
            midpoint_nodes(0.0, PI, n_psi),
        )
    }

    pub fn phi(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n_phi as f64
    }
    pub fn n_z(&self) -> usize {
        self.z_nodes.len()
    }
    pub fn n_beta(&self) -> usize {
        self.beta_nodes.len()
    }
    pub fn n_psi(&self) -> usize {
        self.psi_nodes.len()
    }
    pub fn len(&self) -> usize {
        self.n_phi * self.n_z() * self.n_beta() * self.n_psi()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn dz(&self) -> f64 {
        if self.n_z() < 2 {
            1.0
        } else {
            self.z_nodes[1] - self.z_nodes[0]
        }
    }
    #[inline]
    pub fn index(&self, ip: usize, iz: usize, ib: usize, is: usize) -> usize {
        ((ip * self.n_z() + iz) * self.n_beta() + ib) * self.n_psi() + is
    }
}

/// Samples of C_k f over a [`ConeGrid`], index (φ, z, β, ψ) row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeData {
    pub grid: ConeGrid,
    pub k_weight: u32,
    pub data: Vec<f64>,
}

impl_sampled!(ConeData, data);

impl ConeData {
    pub fn zeros(grid: ConeGrid, k_weight: u32) -> Self {
        let n = grid.len();
        Self { grid, k_weight, data: vec![0.0; n] }
    }

    pub fn new(grid: ConeGrid, k_weight: u32, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return bad_grid(format!("cone data has {} samples, expected {}", data.len(), grid.len()));
        }
        Ok(Self { grid, k_weight, data })
    }

    pub fn get(&self, ip: usize, iz: usize, ib: usize, is: usize) -> f64 {
        self.data[self.grid.index(ip, iz, ib, is)]
    }

    /// The ψ-row at fixed (φ, z, β).
    pub fn psi_row(&self, ip: usize, iz: usize, ib: usize) -> &[f64] {
        let s = self.grid.index(ip, iz, ib, 0);
        &self.data[s..s + self.grid.n_psi()]
    }
}

// ---------------------------------------------------------------------------
// 3D Radon data
// ---------------------------------------------------------------------------

/// Samples over directions ω = a(φ_i, β_j) and uniform offsets s, index (φ, β, s).
#[derive(Debug, Clone, PartialEq)]
pub struct RadonData3D {
    pub n_phi: usize,
    pub beta_nodes: Vec<f64>,
    pub s_nodes: Vec<f64>,
    pub data: Vec<f64>,
}

impl_sampled!(RadonData3D, data);

impl RadonData3D {
    pub fn zeros(n_phi: usize, beta_nodes: Vec<f64>, s_nodes: Vec<f64>) -> Result<Self> {
        check_uniform("s_nodes", &s_nodes)?;
        if s_nodes.len() < 8 {
            return bad_grid("RadonData3D needs at least 8 offsets");
        }
        let n = n_phi * beta_nodes.len() * s_nodes.len();
        Ok(Self { n_phi, beta_nodes, s_nodes, data: vec![0.0; n] })
    }

    pub fn ds(&self) -> f64 {
        self.s_nodes[1] - self.s_nodes[0]
    }
    pub fn phi(&self, i: usize) -> f64 {
        2.0 * PI * i as f64 / self.n_phi as f64
    }
    pub fn n_s(&self) -> usize {
        self.s_nodes.len()
    }
    #[inline]
    pub fn index(&self, ip: usize, ib: usize, is: usize) -> usize {
        (ip * self.beta_nodes.len() + ib) * self.n_s() + is
    }
    pub fn row(&self, ip: usize, ib: usize) -> &[f64] {
        let s = self.index(ip, ib, 0);
        &self.data[s..s + self.n_s()]
    }
    pub fn row_mut(&mut self, ip: usize, ib: usize) -> &mut [f64] {
        let s = self.index(ip, ib, 0);
        let n = self.n_s();
        &mut self.data[s..s + n]
    }
}
