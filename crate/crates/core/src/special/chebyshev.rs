/// Inputs within this distance of ±1 are evaluated with the exact limit values.
const SNAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChebKind {
    FirstKind,
    SecondKind,
}

/// A (kind, order) pair. Order −1 is only meaningful for the second kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChebBranchSpec {
    pub kind: ChebKind,
    pub order: i32,
}

impl ChebBranchSpec {
    pub fn new(kind: ChebKind, order: i32) -> Option<Self> {
        let ok = match kind {
            ChebKind::FirstKind => order >= 0,
            ChebKind::SecondKind => order >= -1,
        };
        ok.then_some(Self { kind, order })
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self.kind {
            ChebKind::FirstKind => cheb_t(self.order as u32, z),
            ChebKind::SecondKind => cheb_u(self.order, z),
        }
    }
}

#[inline]
fn parity(k: i64) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Chebyshev polynomial of the first kind, T_k(z), for any real z.
///
/// Uses cos(k·arccos z) on [−1, 1] and the cosh(k·arccosh |z|) branch outside,
/// with sign (−1)^k for z < −1.
pub fn cheb_t(k: u32, z: f64) -> f64 {
    let kf = k as f64;
    let a = z.abs();
    if (a - 1.0).abs() < SNAP {
        return if z > 0.0 { 1.0 } else { parity(k as i64) };
    }
    if a < 1.0 {
        (kf * z.acos()).cos()
    } else {
        let v = (kf * a.acosh()).cosh();
        if z > 0.0 {
            v
        } else {
            parity(k as i64) * v
        }
    }
}

/// Chebyshev polynomial of the second kind, U_k(z), with U_{−1} ≡ 0.
pub fn cheb_u(k: i32, z: f64) -> f64 {
    if k < 0 {
        return 0.0;
    }
    let k1 = (k + 1) as f64;
    let a = z.abs();
    if (a - 1.0).abs() < SNAP {
        return if z > 0.0 { k1 } else { parity(k as i64) * k1 };
    }
    if a < 1.0 {
        let t = z.acos();
        (k1 * t).sin() / t.sin()
    } else {
        let t = a.acosh();
        let v = (k1 * t).sinh() / t.sinh();
        if z > 0.0 {
            v
        } else {
            parity(k as i64) * v
        }
    }
}
