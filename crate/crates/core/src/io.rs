//! The CRTD container: one binary layout for every sampled object.
//!
//! ```text
//! "CRTD"  u16 version = 1  u16 ndim  u32 dims[ndim]
//! f64 payload[prod(dims)]              (little-endian, row-major)
//! u32 len  UTF-8 JSON object[len]      (flat key/value metadata)
//! ```
//!
//! Metadata key `kind` names the container; the remaining keys carry the grid.

use std::path::Path;

use num_complex::Complex64;
use serde_json::{Map, Value};

use crate::error::{CrtError, Result};
use crate::grid::{ConeData, ConeGrid, Image2D, PolarCoefficients, RadonData3D, VlineSinogram, Volume3D};

pub const MAGIC: &[u8; 4] = b"CRTD";
pub const VERSION: u16 = 1;
const MAX_NDIM: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct DataFile {
    pub dims: Vec<usize>,
    pub payload: Vec<f64>,
    pub metadata: Map<String, Value>,
}

fn format_err<T>(offset: usize, msg: impl Into<String>) -> Result<T> {
    Err(CrtError::Format { offset, msg: msg.into() })
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return format_err(self.pos, format!("truncated {what}: need {n} bytes, {} left", self.bytes.len() - self.pos));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

impl DataFile {
    pub fn new(dims: Vec<usize>, payload: Vec<f64>, metadata: Map<String, Value>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if dims.is_empty() || dims.len() > MAX_NDIM || n != payload.len() {
            return Err(CrtError::InvalidArgument(format!(
                "dims {dims:?} do not describe a payload of {} values",
                payload.len()
            )));
        }
        Ok(Self { dims, payload, metadata })
    }

    pub fn kind(&self) -> Option<&str> {
        self.metadata.get("kind").and_then(Value::as_str)
    }

    pub fn encode(&self) -> Vec<u8> {
        let meta = serde_json::to_vec(&self.metadata).expect("metadata map serializes");
        let mut out = Vec::with_capacity(8 + 4 * self.dims.len() + 8 * self.payload.len() + 4 + meta.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u16).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &self.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor { bytes, pos: 0 };
        if c.take(4, "magic")? != MAGIC {
            return format_err(0, "bad magic, expected \"CRTD\"");
        }
        let version = c.u16("version")?;
        if version != VERSION {
            return format_err(4, format!("unsupported version {version}"));
        }
        let ndim = c.u16("ndim")? as usize;
        if ndim == 0 || ndim > MAX_NDIM {
            return format_err(6, format!("ndim {ndim} outside 1..={MAX_NDIM}"));
        }
        let mut dims = Vec::with_capacity(ndim);
        let mut count: usize = 1;
        for i in 0..ndim {
            let at = c.pos;
            let d = c.u32("dims")? as usize;
            count = match count.checked_mul(d) {
                Some(v) => v,
                None => return format_err(at, format!("dims[{i}] overflows the payload size")),
            };
            dims.push(d);
        }
        let start = c.pos;
        let Some(len) = count.checked_mul(8) else { return format_err(start, "payload size overflows") };
        let raw = c.take(len, "payload")?;
        let payload = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        let meta_len = c.u32("metadata length")? as usize;
        let json_at = c.pos;
        let json = c.take(meta_len, "metadata")?;
        let value: Value = serde_json::from_slice(json)
            .or_else(|e| format_err(json_at + e.column().saturating_sub(1), format!("metadata is not JSON: {e}")))?;
        let Value::Object(metadata) = value else { return format_err(json_at, "metadata must be a JSON object") };
        if let Some((k, _)) = metadata.iter().find(|(_, v)| !is_flat(v)) {
            return format_err(json_at, format!("metadata key {k:?} is nested; only scalars and number lists are allowed"));
        }
        if c.pos != bytes.len() {
            return format_err(c.pos, format!("{} trailing bytes after metadata", bytes.len() - c.pos));
        }
        Ok(Self { dims, payload, metadata })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::decode(&std::fs::read(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }
}

fn is_flat(v: &Value) -> bool {
    match v {
        Value::Object(_) => false,
        Value::Array(a) => a.iter().all(|x| !matches!(x, Value::Object(_) | Value::Array(_))),
        _ => true,
    }
}

// ---------------------------------------------------------------------------
// Metadata helpers

fn meta(kind: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("kind".into(), kind.into());
    m
}

fn invalid_meta<T>(msg: impl Into<String>) -> Result<T> {
    Err(CrtError::InvalidArgument(msg.into()))
}

fn get_f64(m: &Map<String, Value>, key: &str) -> Result<f64> {
    match m.get(key).and_then(Value::as_f64) {
        Some(v) => Ok(v),
        None => invalid_meta(format!("metadata needs number {key:?}")),
    }
}

fn get_u64(m: &Map<String, Value>, key: &str) -> Result<u64> {
    match m.get(key).and_then(Value::as_u64) {
        Some(v) => Ok(v),
        None => invalid_meta(format!("metadata needs non-negative integer {key:?}")),
    }
}

fn get_nodes(m: &Map<String, Value>, key: &str) -> Result<Vec<f64>> {
    let Some(Value::Array(a)) = m.get(key) else { return invalid_meta(format!("metadata needs node list {key:?}")) };
    a.iter().map(|v| v.as_f64().map_or_else(|| invalid_meta(format!("{key:?} must hold numbers")), Ok)).collect()
}

fn nodes(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| x.into()).collect())
}

fn expect_kind(f: &DataFile, kind: &str, ndim: usize) -> Result<()> {
    match f.kind() {
        Some(k) if k == kind => {}
        other => return invalid_meta(format!("expected a {kind} file, found kind {other:?}")),
    }
    if f.dims.len() != ndim {
        return invalid_meta(format!("{kind} needs {ndim} dims, file has {:?}", f.dims));
    }
    Ok(())
}

fn expect_dims(f: &DataFile, want: &[usize]) -> Result<()> {
    if f.dims != want {
        return invalid_meta(format!("dims {:?} disagree with the metadata grid {want:?}", f.dims));
    }
    Ok(())
}

/// Conversion between a typed container and its CRTD representation.
pub trait Container: Sized {
    const KIND: &'static str;
    fn to_file(&self) -> DataFile;
    fn from_file(f: &DataFile) -> Result<Self>;

    fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_file().write(path)
    }
    fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file(&DataFile::read(path)?)
    }
}

impl Container for Image2D {
    const KIND: &'static str = "image2d";
    fn to_file(&self) -> DataFile {
        let mut m = meta(Self::KIND);
        m.insert("extent".into(), self.extent.into());
        DataFile { dims: vec![self.n_y, self.n_x], payload: self.values.clone(), metadata: m }
    }
    fn from_file(f: &DataFile) -> Result<Self> {
        expect_kind(f, Self::KIND, 2)?;
        let mut img = Image2D::zeros(f.dims[1], f.dims[0], get_f64(&f.metadata, "extent")?)?;
        img.values.copy_from_slice(&f.payload);
        Ok(img)
    }
}

impl Container for Volume3D {
    const KIND: &'static str = "volume3d";
    fn to_file(&self) -> DataFile {
        let mut m = meta(Self::KIND);
        m.insert("extent".into(), self.extent_xy.into());
        m.insert("z_min".into(), self.z_min.into());
        m.insert("z_max".into(), self.z_max.into());
        DataFile { dims: vec![self.n_z, self.n_y, self.n_x], payload: self.values.clone(), metadata: m }
    }
    fn from_file(f: &DataFile) -> Result<Self> {
        expect_kind(f, Self::KIND, 3)?;
        let m = &f.metadata;
        let mut v = Volume3D::zeros(
            f.dims[2],
            f.dims[1],
            f.dims[0],
            get_f64(m, "extent")?,
            get_f64(m, "z_min")?,
            get_f64(m, "z_max")?,
        )?;
        v.values.copy_from_slice(&f.payload);
        Ok(v)
    }
}

impl Container for VlineSinogram {
    const KIND: &'static str = "sinogram";
    fn to_file(&self) -> DataFile {
        let mut m = meta(Self::KIND);
        m.insert("psi_nodes".into(), nodes(&self.psi_nodes));
        DataFile { dims: vec![self.n_phi, self.n_psi()], payload: self.data.clone(), metadata: m }
    }
    fn from_file(f: &DataFile) -> Result<Self> {
        expect_kind(f, Self::KIND, 2)?;
        let psi = get_nodes(&f.metadata, "psi_nodes")?;
        expect_dims(f, &[f.dims[0], psi.len()])?;
        VlineSinogram::new(f.dims[0], psi, f.payload.clone())
    }
}

impl Container for ConeData {
    const KIND: &'static str = "cone";
    fn to_file(&self) -> DataFile {
        let g = &self.grid;
        let mut m = meta(Self::KIND);
        m.insert("k_weight".into(), self.k_weight.into());
        m.insert("z_nodes".into(), nodes(&g.z_nodes));
        m.insert("beta_nodes".into(), nodes(&g.beta_nodes));
        m.insert("psi_nodes".into(), nodes(&g.psi_nodes));
        DataFile { dims: vec![g.n_phi, g.n_z(), g.n_beta(), g.n_psi()], payload: self.data.clone(), metadata: m }
    }
    fn from_file(f: &DataFile) -> Result<Self> {
        expect_kind(f, Self::KIND, 4)?;
        let m = &f.metadata;
        let grid = ConeGrid::new(f.dims[0], get_nodes(m, "z_nodes")?, get_nodes(m, "beta_nodes")?, get_nodes(m, "psi_nodes")?)?;
        expect_dims(f, &[grid.n_phi, grid.n_z(), grid.n_beta(), grid.n_psi()])?;
        let k = u32::try_from(get_u64(m, "k_weight")?).or_else(|_| invalid_meta("k_weight out of range"))?;
        ConeData::new(grid, k, f.payload.clone())
    }
}

impl Container for RadonData3D {
    const KIND: &'static str = "radon3d";
    fn to_file(&self) -> DataFile {
        let mut m = meta(Self::KIND);
        m.insert("beta_nodes".into(), nodes(&self.beta_nodes));
        m.insert("s_nodes".into(), nodes(&self.s_nodes));
        DataFile { dims: vec![self.n_phi, self.beta_nodes.len(), self.n_s()], payload: self.data.clone(), metadata: m }
    }
    fn from_file(f: &DataFile) -> Result<Self> {
        expect_kind(f, Self::KIND, 3)?;
        let mut r = RadonData3D::zeros(f.dims[0], get_nodes(&f.metadata, "beta_nodes")?, get_nodes(&f.metadata, "s_nodes")?)?;
        expect_dims(f, &[r.n_phi, r.beta_nodes.len(), r.n_s()])?;
        r.data.copy_from_slice(&f.payload);
        Ok(r)
    }
}

impl Container for PolarCoefficients {
    const KIND: &'static str = "polar";
    /// Layout (order n + n_max, radius i, re/im).
    fn to_file(&self) -> DataFile {
        let payload = self.coeffs.iter().flat_map(|c| [c.re, c.im]).collect();
        DataFile { dims: vec![2 * self.n_max, self.m + 1, 2], payload, metadata: meta(Self::KIND) }
    }
    fn from_file(f: &DataFile) -> Result<Self> {
        expect_kind(f, Self::KIND, 3)?;
        if f.dims[0] % 2 != 0 || f.dims[1] < 1 || f.dims[2] != 2 {
            return invalid_meta(format!("polar coefficients need dims (2·n_max, m+1, 2), got {:?}", f.dims));
        }
        let mut p = PolarCoefficients::zeros(f.dims[0] / 2, f.dims[1] - 1);
        for (c, pair) in p.coeffs.iter_mut().zip(f.payload.chunks_exact(2)) {
            *c = Complex64::new(pair[0], pair[1]);
        }
        Ok(p)
    }
}
