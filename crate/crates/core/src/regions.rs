//! Exponent regions in the `(1/r, 1/s)` square, in exact rational arithmetic.

use num_rational::Rational64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Q = Rational64;

fn q(a: i64, b: i64) -> Q {
    Q::new(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    Lac,
    Full,
    LacDual,
    FullDual,
}

impl RegionKind {
    pub const ALL: [RegionKind; 4] = [RegionKind::Lac, RegionKind::Full, RegionKind::LacDual, RegionKind::FullDual];

    pub fn name(self) -> &'static str {
        match self {
            RegionKind::Lac => "lac",
            RegionKind::Full => "full",
            RegionKind::LacDual => "lac_dual",
            RegionKind::FullDual => "full_dual",
        }
    }

    pub fn dual(self) -> RegionKind {
        match self {
            RegionKind::Lac => RegionKind::LacDual,
            RegionKind::LacDual => RegionKind::Lac,
            RegionKind::Full => RegionKind::FullDual,
            RegionKind::FullDual => RegionKind::Full,
        }
    }
}

impl std::str::FromStr for RegionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        RegionKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown region `{s}`")))
    }
}

/// A closed convex polygon given by its named vertices. Repeated vertices
/// are kept, so degenerate cases keep their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentRegion {
    pub dim: usize,
    pub kind: RegionKind,
    pub vertices: Vec<(Q, Q)>,
    pub closed: bool,
}

fn check_dim(n: usize) -> Result<i64> {
    if n == 2 || n == 3 {
        Ok(n as i64)
    } else {
        Err(Error::InvalidGrid(format!("dimension {n} not in {{2, 3}}")))
    }
}

/// Vertices `P₁..P₄` of the full region.
pub fn full_vertices(n: usize) -> Result<[(Q, Q); 4]> {
    let n = check_dim(n)?;
    let d = n * n + 1;
    Ok([
        (q(0, 1), q(1, 1)),
        (q(n - 1, n), q(1, n)),
        (q(n - 1, n), q(n - 1, n)),
        (q(n * n - n, d), q(n * n - n + 2, d)),
    ])
}

pub fn region(n: usize, kind: RegionKind) -> Result<ExponentRegion> {
    let m = check_dim(n)?;
    let vertices = match kind {
        RegionKind::Lac => vec![(q(0, 1), q(1, 1)), (q(1, 1), q(0, 1)), (q(m, m + 1), q(m, m + 1))],
        RegionKind::LacDual => vec![(q(0, 1), q(0, 1)), (q(1, 1), q(1, 1)), (q(m, m + 1), q(1, m + 1))],
        RegionKind::Full => full_vertices(n)?.to_vec(),
        RegionKind::FullDual => {
            let d = m * m + 1;
            vec![
                (q(0, 1), q(0, 1)),
                (q(m - 1, m), q(m - 1, m)),
                (q(m - 1, m), q(1, m)),
                (q(m * m - m, d), q(m - 1, d)),
            ]
        }
    };
    Ok(ExponentRegion { dim: n, kind, vertices, closed: true })
}

fn cross(o: (Q, Q), a: (Q, Q), b: (Q, Q)) -> Q {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

impl ExponentRegion {
    /// `(x, 1 - y)` applied to every vertex.
    pub fn dual(&self) -> ExponentRegion {
        ExponentRegion {
            dim: self.dim,
            kind: self.kind.dual(),
            vertices: self.vertices.iter().map(|&(x, y)| (x, Q::one() - y)).collect(),
            closed: self.closed,
        }
    }

    /// Distinct vertices in counter-clockwise hull order, collinear points dropped.
    pub fn hull(&self) -> Vec<(Q, Q)> {
        let mut pts = self.vertices.clone();
        pts.sort();
        pts.dedup();
        if pts.len() < 3 {
            return pts;
        }
        let mut lower: Vec<(Q, Q)> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= Q::zero() {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<(Q, Q)> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= Q::zero() {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        lower
    }

    /// Membership in the closed polygon, or its interior when `strict`.
    pub fn contains(&self, point: (Q, Q), strict: bool) -> bool {
        let h = self.hull();
        if h.len() < 3 {
            return !strict && h.contains(&point);
        }
        (0..h.len()).all(|i| {
            let c = cross(h[i], h[(i + 1) % h.len()], point);
            if strict {
                c > Q::zero()
            } else {
                c >= Q::zero()
            }
        })
    }

    /// [`contains`](Self::contains) for a floating point pair, compared
    /// against the exact edges in `f64`.
    pub fn contains_f64(&self, point: (f64, f64), strict: bool) -> bool {
        let h: Vec<(f64, f64)> = self.hull().iter().map(|&(x, y)| (to_f64(x), to_f64(y))).collect();
        if h.len() < 3 {
            return false;
        }
        (0..h.len()).all(|i| {
            let (a, b) = (h[i], h[(i + 1) % h.len()]);
            let c = (b.0 - a.0) * (point.1 - a.1) - (b.1 - a.1) * (point.0 - a.0);
            if strict {
                c > 0.0
            } else {
                c >= 0.0
            }
        })
    }

    /// Closed outline for plotting, in hull order with the first vertex repeated.
    pub fn outline(&self) -> Vec<(f64, f64)> {
        let mut h: Vec<(f64, f64)> = self.hull().iter().map(|&(x, y)| (to_f64(x), to_f64(y))).collect();
        if let Some(&first) = h.first() {
            h.push(first);
        }
        h
    }

    pub fn document(&self) -> RegionDocument {
        RegionDocument {
            version: REGION_FORMAT_VERSION,
            n: self.dim,
            region: self.kind.name().to_string(),
            closed: self.closed,
            vertices: self.vertices.iter().map(|&(x, y)| [x.to_string(), y.to_string()]).collect(),
            vertices_f64: self.vertices.iter().map(|&(x, y)| [to_f64(x), to_f64(y)]).collect(),
        }
    }
}

pub const REGION_FORMAT_VERSION: u32 = 1;

/// JSON form: exact vertices as `"p/q"` strings plus decimal copies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionDocument {
    pub version: u32,
    pub n: usize,
    pub region: String,
    pub closed: bool,
    pub vertices: Vec<[String; 2]>,
    pub vertices_f64: Vec<[f64; 2]>,
}

impl RegionDocument {
    pub fn to_region(&self) -> Result<ExponentRegion> {
        if self.version != REGION_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported region version {}", self.version)));
        }
        let parse = |s: &str| s.parse::<Q>().map_err(|e| Error::Format(format!("vertex `{s}`: {e}")));
        let vertices = self.vertices.iter().map(|[x, y]| Ok((parse(x)?, parse(y)?))).collect::<Result<Vec<_>>>()?;
        Ok(ExponentRegion { dim: self.n, kind: self.region.parse()?, vertices, closed: self.closed })
    }
}

pub fn to_f64(x: Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// Exact conversion of a dyadic or otherwise representable `f64`, for
/// feeding experiment exponents into rational membership tests.
pub fn from_f64(x: f64) -> Result<Q> {
    Q::approximate_float(x).ok_or_else(|| Error::Domain(format!("{x} has no rational approximation")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Curve {
    Lac,
    Full,
    Psi,
}

impl Curve {
    /// Closed domain of `x = 1/r`.
    pub fn domain(self, n: usize) -> Result<(Q, Q)> {
        let m = check_dim(n)?;
        Ok(match self {
            Curve::Lac => (q(0, 1), q(1, 1)),
            Curve::Full | Curve::Psi => (q(0, 1), q(m - 1, m)),
        })
    }
}

/// `1/φ(1/r)` for the lacunary, full and restricted curves.
///
/// The lacunary curve breaks at `n/(n+1)`, where both branches equal `n/(n+1)`.
/// The full curve runs through `P₁`, `P₄`, `P₃`, and `ψ` is the line through
/// `P₁` and `P₃`.
pub fn phi_curve(n: usize, which: Curve, x: Q) -> Result<Q> {
    let m = check_dim(n)?;
    let (lo, hi) = which.domain(n)?;
    if x < lo || x > hi {
        return Err(Error::Domain(format!("x = {x} outside [{lo}, {hi}]")));
    }
    let one = Q::one();
    Ok(match which {
        Curve::Lac => {
            if x <= q(m, m + 1) {
                one - x / m
            } else {
                Q::from_integer(m) * (one - x)
            }
        }
        Curve::Psi => one - x / (m - 1),
        Curve::Full => {
            let [p1, _, p3, p4] = full_vertices(n)?;
            let (a, b) = if x <= p4.0 { (p1, p4) } else { (p4, p3) };
            a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
        }
    })
}

/// `max{x + n y, n x + y} - n`; zero on the boundary lines of the
/// lacunary region through `(0, 1)` and `(1, 0)`, positive outside.
pub fn annulus_excess(n: usize, x: f64, y: f64) -> f64 {
    let n = n as f64;
    (x + n * y).max(n * x + y) - n
}

/// `(n+1)x/2 + (n-1)y/2 - (n-1)`; zero on the line `P₃P₄`.
pub fn knapp_excess(n: usize, x: f64, y: f64) -> f64 {
    let n = n as f64;
    0.5 * (n + 1.0) * x + 0.5 * (n - 1.0) * y - (n - 1.0)
}

/// Exact version of [`knapp_excess`] scaled by two.
pub fn knapp_form(n: usize, p: (Q, Q)) -> Q {
    let m = n as i64;
    Q::from_integer(m + 1) * p.0 + Q::from_integer(m - 1) * p.1 - Q::from_integer(2 * (m - 1))
}
