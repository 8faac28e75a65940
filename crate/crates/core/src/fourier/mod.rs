//! The sphere multiplier `dσ̂`, its decay and translation symbols, and a
//! smooth Littlewood–Paley partition.
//!
//! Convention: `f̂(ξ) = ∫ f(x) e^{-i x·ξ} dx`, so `dσ̂(ξ) = sin|ξ|/|ξ|` in
//! three dimensions and `J₀(|ξ|)` in two.

pub mod fft;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};
use crate::quadrature::gauss_legendre;

pub use fft::{apply_radial_multiplier, fft_nd, frequency, frequency_norms, MultiplierPlan, Spectrum};

fn cached_gl(m: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("rule cache poisoned");
    map.entry(m).or_insert_with(|| Arc::new(gauss_legendre(m))).clone()
}

/// `(dσ̂(x), d/dx dσ̂(x))` by quadrature over the sphere.
///
/// On the circle: periodic trapezoid with at least 2048 nodes and enough
/// beyond `x` that the aliasing terms `J_M(x)` vanish to double precision.
/// On the 2-sphere: the zonal reduction `∫_0^1 cos(xu) du` by Gauss–Legendre.
pub fn sphere_symbol_with_derivative(dim: usize, x: f64) -> (f64, f64) {
    let x = x.abs();
    if dim == 2 {
        let m = (x + 12.0 * x.cbrt() + 64.0).ceil().max(2048.0) as usize;
        let m = m.div_ceil(4) * 4;
        // symmetric in θ ↦ -θ and θ ↦ π - θ up to sign; sum a quarter turn
        let q = m / 4;
        let mut v = 0.0;
        let mut d = 0.0;
        for k in 0..q {
            let c = (2.0 * PI * (k as f64 + 0.5) / m as f64).cos();
            v += 2.0 * (x * c).cos();
            d -= 2.0 * c * (x * c).sin();
        }
        // the other half of the circle repeats with c ↦ -c
        (2.0 * v / m as f64, 2.0 * d / m as f64)
    } else {
        let m = ((0.75 * x).ceil() as usize + 24).div_ceil(16) * 16;
        let rule = cached_gl(m);
        let (nodes, weights) = (&rule.0, &rule.1);
        let mut v = 0.0;
        let mut d = 0.0;
        for (z, w) in nodes.iter().zip(weights) {
            let u = 0.5 * (z + 1.0);
            v += w * (x * u).cos();
            d -= w * u * (x * u).sin();
        }
        (0.5 * v, 0.5 * d)
    }
}

/// `dσ̂(ξ)` for `|ξ| = xi_norm`, normalized so that `dσ̂(0) = 1`.
pub fn sphere_symbol(dim: usize, xi_norm: f64) -> Result<f64> {
    if dim != 2 && dim != 3 {
        return Err(Error::Domain(format!("dimension {dim} not in {{2,3}}")));
    }
    Ok(sphere_symbol_with_derivative(dim, xi_norm).0)
}

/// Tabulated `dσ̂` with cubic Hermite interpolation, for multiplier use.
#[derive(Debug, Clone)]
pub struct SphereSymbol {
    dim: usize,
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

/// Table spacing in `|ξ|`; Hermite error is below `step^4/384`.
pub const SYMBOL_STEP: f64 = 1.0 / 32.0;

impl SphereSymbol {
    pub fn new(dim: usize, x_max: f64) -> SphereSymbol {
        let count = (x_max / SYMBOL_STEP).ceil() as usize + 2;
        let mut values = Vec::with_capacity(count);
        let mut derivs = Vec::with_capacity(count);
        for k in 0..count {
            let (v, d) = sphere_symbol_with_derivative(dim, k as f64 * SYMBOL_STEP);
            values.push(v);
            derivs.push(d);
        }
        SphereSymbol { dim, step: SYMBOL_STEP, values, derivs }
    }

    /// Shared table covering at least `[0, x_max]`.
    pub fn shared(dim: usize, x_max: f64) -> Arc<SphereSymbol> {
        static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<SphereSymbol>>>> = OnceLock::new();
        let top = x_max.max(16.0).log2().ceil() as u32;
        let key = (dim, top as u64);
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("symbol cache poisoned");
        map.entry(key).or_insert_with(|| Arc::new(SphereSymbol::new(dim, 2f64.powi(top as i32)))).clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x_max(&self) -> f64 {
        (self.values.len() - 2) as f64 * self.step
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.abs();
        let u = x / self.step;
        let k = u.floor() as usize;
        if k + 1 >= self.values.len() {
            return sphere_symbol_with_derivative(self.dim, x).0;
        }
        let t = u - k as f64;
        let (p0, p1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.derivs[k] * self.step, self.derivs[k + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
    }

    /// CSV with columns `xi,value`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["xi", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([format!("{}", k as f64 * self.step), format!("{v}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Rows `(R, |dσ̂(R)| R^{(n-1)/2})` for `R = 0, step, 2 step, …, ≤ r_max`.
pub fn symbol_decay_profile(spec: &GridSpec, r_max: f64, step: f64) -> Result<Vec<(f64, f64)>> {
    if r_max > spec.nyquist() {
        return Err(Error::Domain(format!("R_max {r_max} exceeds the Nyquist frequency {}", spec.nyquist())));
    }
    if !(step > 0.0) {
        return Err(Error::Domain("profile step must be positive".into()));
    }
    let d = spec.dim();
    let count = (r_max / step).floor() as usize;
    Ok((0..=count)
        .map(|k| {
            let r = k as f64 * step;
            (r, sphere_symbol_with_derivative(d, r).0.abs() * r.powf((d as f64 - 1.0) / 2.0))
        })
        .collect())
}

/// CSV with columns `xi,value` for a decay profile.
pub fn write_profile_csv<W: Write>(rows: &[(f64, f64)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["xi", "value"])?;
    for (x, v) in rows {
        w.write_record([format!("{x}"), format!("{v}")])?;
    }
    w.flush()?;
    Ok(())
}

/// `sup_ξ |(1 - e^{i y·ξ}) dσ̂(ξ)|` over the frequency lattice of `spec`.
pub fn continuity_symbol_norm(spec: &GridSpec, y: &[f64]) -> Result<f64> {
    let d = spec.dim();
    let ny: f64 = y.iter().take(d).map(|v| v * v).sum::<f64>().sqrt();
    if ny > 1.0 {
        return Err(Error::Domain(format!("|y| = {ny} exceeds 1")));
    }
    if ny == 0.0 {
        return Ok(0.0);
    }
    let n = spec.points();
    let h = spec.spacing();
    let table = SphereSymbol::shared(d, spec.nyquist() * (d as f64).sqrt());
    let axis: Vec<f64> = (0..n).map(|k| fft::frequency(k, n, h)).collect();
    let mut best = 0.0f64;
    for flat in 0..spec.len() {
        let idx = spec.unflat(flat);
        let mut dot = 0.0;
        let mut r2 = 0.0;
        for a in 0..d {
            let xi = axis[idx[a] as usize];
            dot += y[a] * xi;
            r2 += xi * xi;
        }
        let v = 2.0 * (0.5 * dot).sin().abs() * table.eval(r2.sqrt()).abs();
        best = best.max(v);
    }
    Ok(best)
}

/// Smooth step: 0 for `t ≤ 0`, 1 for `t ≥ 1`, built from `exp(-1/t)`.
pub fn smooth_step(t: f64) -> f64 {
    let e = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let a = e(t);
    let b = e(1.0 - t);
    if a + b == 0.0 {
        return if t > 0.5 { 1.0 } else { 0.0 };
    }
    a / (a + b)
}

/// `χ = 1` on `[0, 1]`, `0` on `[5/4, ∞)`, smooth and decreasing between.
pub fn lp_chi(u: f64) -> f64 {
    1.0 - smooth_step(4.0 * (u - 1.0))
}

/// `ζ(u) = χ(u/2) - χ(u)`: supported in `[1, 5/2]` and equal to 1 on `[5/4, 2]`.
pub fn lp_zeta(u: f64) -> f64 {
    lp_chi(u / 2.0) - lp_chi(u)
}

/// Cutoff of piece `j` at `|ξ|`: `χ(|ξ|/2)` for `j = 0`, `ζ(|ξ|/2^j)` after.
/// The sum over `j ≤ J` telescopes to `χ(|ξ|/2^{J+1})`.
pub fn lp_cutoff(j: u32, xi: f64) -> f64 {
    if j == 0 {
        lp_chi(xi / 2.0)
    } else {
        lp_zeta(xi / 2f64.powi(j as i32))
    }
}

/// Number of pieces needed so the cutoffs sum to one on the whole lattice.
pub fn lp_piece_count(spec: &GridSpec) -> u32 {
    let top = spec.nyquist() * (spec.dim() as f64).sqrt();
    (top.log2().ceil().max(0.0) as u32) + 1
}

/// One Littlewood–Paley piece.
#[derive(Debug, Clone)]
pub struct LPPiece {
    pub index: u32,
    pub function: GridFunction,
}

/// `f_j` with `f̂_j = ζ(|ξ|/2^j) f̂` on the periodic lattice; `Σ_j f_j = f`.
pub fn lp_pieces(f: &GridFunction) -> Result<Vec<LPPiece>> {
    let plan = MultiplierPlan::new(f, false)?;
    (0..lp_piece_count(f.spec()))
        .map(|j| Ok(LPPiece { index: j, function: plan.apply(|xi| lp_cutoff(j, xi))? }))
        .collect()
}

/// Finite-difference estimate of `‖∂_t A_t f_j‖_{L²(ℝⁿ × [1,2])} / ‖f‖₂`,
/// by Plancherel on the periodic lattice, where the pieces `f_j` live.
pub fn radial_derivative_bound(f: &GridFunction, j: u32, t_grid: &[f64]) -> Result<f64> {
    if t_grid.len() < 2 {
        return Err(Error::InsufficientRadialResolution);
    }
    let limit = 2f64.powi(-(j as i32) - 2);
    for w in t_grid.windows(2) {
        if !(w[1] > w[0]) || w[1] - w[0] > limit * (1.0 + 1e-12) {
            return Err(Error::InsufficientRadialResolution);
        }
    }
    if t_grid[0] < 1.0 - 1e-12 || t_grid[t_grid.len() - 1] > 2.0 + 1e-12 {
        return Err(Error::Domain("radii must lie in [1, 2]".into()));
    }
    let spec = *f.spec();
    let norm2: f64 = f.values().iter().map(|v| v * v).sum::<f64>() * spec.cell_volume();
    if norm2 == 0.0 {
        return Ok(0.0);
    }
    let plan = MultiplierPlan::new(f, false)?;
    let work = *plan.work_spec();
    let (coef, norms) = plan.coefficients();
    let table = SphereSymbol::shared(spec.dim(), work.nyquist() * (spec.dim() as f64).sqrt() * 2.0);
    let mut total = 0.0;
    for (c, &xi) in coef.iter().zip(norms) {
        let cut = lp_cutoff(j, xi);
        if cut == 0.0 {
            continue;
        }
        let a = c.norm_sqr() * cut * cut;
        let mut dsum = 0.0;
        let mut prev = table.eval(t_grid[0] * xi);
        for w in t_grid.windows(2) {
            let next = table.eval(w[1] * xi);
            let dt = w[1] - w[0];
            dsum += (next - prev).powi(2) / dt;
            prev = next;
        }
        total += a * dsum;
    }
    let scale = work.cell_volume() / work.len() as f64;
    Ok((total * scale / norm2).sqrt())
}

/// Uniform radii on `[1, 2]` with step `step`.
pub fn radius_grid(step: f64) -> Vec<f64> {
    let k = (1.0 / step).ceil() as usize;
    (0..=k).map(|i| 1.0 + i as f64 / k as f64).collect()
}

/// [`radial_derivative_bound`] with the radius step halved, starting at the
/// coarsest admissible one, until two estimates agree to `tol` relative.
pub fn radial_derivative_bound_stable(f: &GridFunction, j: u32, tol: f64) -> Result<f64> {
    let mut step = 2f64.powi(-(j as i32) - 2);
    let mut prev = radial_derivative_bound(f, j, &radius_grid(step))?;
    for _ in 0..8 {
        step /= 2.0;
        let next = radial_derivative_bound(f, j, &radius_grid(step))?;
        if (next - prev).abs() <= tol * next.abs() {
            return Ok(next);
        }
        prev = next;
    }
    Ok(prev)
}
