//! Node rules: Gauss–Legendre on `[-1, 1]`, uniform rules on the circle and a
//! polar product rule on the 2-sphere.
//!
//! Sphere rules are global and fixed for a given size, so an average built
//! from them is exactly linear in the input.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use crate::grid::{GridSpec, Idx};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// `P_m` from the Chebyshev-like initial guess.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Unit directions with weights summing to one.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dim: usize,
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    /// Polar rows `(θ, first node, node count)`; empty for the circle.
    pub rows: Vec<(f64, usize, usize)>,
    /// Row spacing in `θ` (sphere) or node spacing in angle (circle).
    pub step: f64,
}

impl SphereRule {
    /// `m` equally spaced angles `2πk/m` with weight `1/m`.
    pub fn circle(m: usize) -> SphereRule {
        let dirs = (0..m)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / m as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect();
        SphereRule { dim: 2, dirs, weights: vec![1.0 / m as f64; m], rows: Vec::new(), step: 2.0 * PI / m as f64 }
    }

    /// `rows` bands of equal `θ` width, each weighted by its exact area and
    /// split into about `2 rows sin θ` equal `φ` cells. Odd rows are offset by
    /// half a cell.
    pub fn polar(rows: usize) -> SphereRule {
        let dt = PI / rows as f64;
        let mut dirs = Vec::new();
        let mut weights = Vec::new();
        let mut row_info = Vec::with_capacity(rows);
        for i in 0..rows {
            let th = (i as f64 + 0.5) * dt;
            let area = ((th - 0.5 * dt).cos() - (th + 0.5 * dt).cos()) / 2.0;
            let count = ((2.0 * rows as f64 * th.sin()).ceil() as usize).max(3);
            row_info.push((th, dirs.len(), count));
            let off = if i % 2 == 1 { 0.5 } else { 0.0 };
            for j in 0..count {
                let ph = 2.0 * PI * (j as f64 + off) / count as f64;
                dirs.push([th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                weights.push(area / count as f64);
            }
        }
        SphereRule { dim: 3, dirs, weights, rows: row_info, step: dt }
    }

    /// Smallest cached rule whose node spacing on a sphere of radius `t` is
    /// at most `gap`.
    pub fn for_radius(dim: usize, t: f64, gap: f64) -> Arc<SphereRule> {
        let m = ((2.0 * PI * t / gap).ceil() as usize).max(8);
        // round up to a multiple of 8 so nearby radii share a rule
        let m = m.div_ceil(8) * 8;
        let key = (dim, if dim == 2 { m } else { m / 2 });
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<SphereRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("rule cache poisoned");
        map.entry(key)
            .or_insert_with(|| Arc::new(if dim == 2 { SphereRule::circle(key.1) } else { SphereRule::polar(key.1) }))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.dirs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dirs.is_empty()
    }

    /// Visit nodes whose direction lies within angle `alpha` of the unit
    /// vector `u`, plus possibly a few more. With `alpha ≥ π` every node is
    /// visited.
    pub fn for_each_in_cone(&self, u: &[f64; 3], alpha: f64, mut f: impl FnMut(usize)) {
        if alpha >= PI {
            (0..self.len()).for_each(f);
            return;
        }
        if self.dim == 2 {
            let m = self.len() as i64;
            let center = u[1].atan2(u[0]) / self.step;
            let half = alpha / self.step + 1.0;
            let lo = (center - half).floor() as i64;
            let hi = (center + half).ceil() as i64;
            let hi = hi.min(lo + m - 1);
            for k in lo..=hi {
                f(k.rem_euclid(m) as usize);
            }
            return;
        }
        let th_u = u[2].clamp(-1.0, 1.0).acos();
        let ph_u = u[1].atan2(u[0]);
        let (st_u, ct_u) = (th_u.sin(), th_u.cos());
        for &(th, first, count) in &self.rows {
            if (th - th_u).abs() > alpha + self.step {
                continue;
            }
            let (st, ct) = (th.sin(), th.cos());
            let denom = st * st_u;
            // widen by one band so rows near the cone edge keep their nodes
            let slack = self.step;
            let c = if denom > 1e-12 { ((alpha + slack).min(PI).cos() - ct * ct_u) / denom } else { -2.0 };
            if c > 1.0 {
                continue;
            }
            if c <= -1.0 {
                (first..first + count).for_each(&mut f);
                continue;
            }
            let half = c.acos();
            let cell = 2.0 * PI / count as f64;
            let off = self.dirs[first][1].atan2(self.dirs[first][0]);
            let lo = ((ph_u - half - off) / cell).floor() as i64 - 1;
            let hi = ((ph_u + half - off) / cell).ceil() as i64 + 1;
            let hi = hi.min(lo + count as i64 - 1);
            for k in lo..=hi {
                f(first + k.rem_euclid(count as i64) as usize);
            }
        }
    }
}

/// Whether cell `idx` has the origin as a vertex (the lattice is centered,
/// so these are the `2^n` cells around the origin).
pub fn touches_origin(spec: &GridSpec, idx: &Idx) -> bool {
    let c = spec.center_of(idx);
    let half = 0.5 * spec.spacing();
    (0..spec.dim()).all(|a| (c[a].abs() - half).abs() < 1e-9 * half)
}

/// Mean of a radial function over a cell with a vertex at the origin.
///
/// The cell `[0,h]^n` splits into `n` pyramids `{x_k = max}`; on each,
/// `x = z(a, 1)` with `a ∈ [0,1]^{n-1}` and `|x| = z c(a)`. `moment(c)` must
/// return `∫_0^h F(z c) z^{n-1} dz`, which callers supply in closed form for
/// singular `F`.
pub fn origin_cell_average(spec: &GridSpec, moment: impl Fn(f64) -> f64) -> f64 {
    let d = spec.dim();
    let (x, w) = gauss_legendre(12);
    let mut acc = 0.0;
    match d {
        2 => {
            for (xa, wa) in x.iter().zip(&w) {
                let a = 0.5 * (xa + 1.0);
                acc += 0.5 * wa * moment((1.0 + a * a).sqrt());
            }
        }
        _ => {
            for (xa, wa) in x.iter().zip(&w) {
                for (xb, wb) in x.iter().zip(&w) {
                    let a = 0.5 * (xa + 1.0);
                    let b = 0.5 * (xb + 1.0);
                    acc += 0.25 * wa * wb * moment((1.0 + a * a + b * b).sqrt());
                }
            }
        }
    }
    d as f64 * acc / spec.cell_volume()
}

/// `∫_0^h G(z) dz` by Gauss–Legendre after `z = h u²`, which tames an
/// integrable endpoint behaviour at zero.
pub fn radial_moment(h: f64, g: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(32);
    x.iter()
        .zip(&w)
        .map(|(xi, wi)| {
            let u = 0.5 * (xi + 1.0);
            let z = h * u * u;
            0.5 * wi * g(z) * 2.0 * h * u
        })
        .sum()
}
