//! Multidimensional FFTs on lattices and the continuous-transform scaling.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// In-place FFT over every axis of an `N^dim` row-major array. The inverse
/// divides by `N^dim`.
pub fn fft_nd(data: &mut [Complex64], points: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::<f64>::new();
    let plan = if inverse { planner.plan_fft_inverse(points) } else { planner.plan_fft_forward(points) };
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); points];
    for axis in 0..dim {
        let stride = points.pow((dim - 1 - axis) as u32);
        if stride == 1 {
            for chunk in data.chunks_exact_mut(points) {
                plan.process(chunk);
            }
            continue;
        }
        let block = stride * points;
        for start in (0..total).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                for (k, v) in line.iter_mut().enumerate() {
                    *v = data[base + k * stride];
                }
                plan.process(&mut line);
                for (k, v) in line.iter().enumerate() {
                    data[base + k * stride] = *v;
                }
            }
        }
    }
    if inverse {
        let s = 1.0 / total as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Angular frequency of DFT index `k` on an axis with `n` points of spacing `h`.
#[inline]
pub fn frequency(k: usize, n: usize, h: f64) -> f64 {
    let kk = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
    2.0 * PI * kk / (n as f64 * h)
}

/// `|ξ|` for every flat index of the frequency lattice.
pub fn frequency_norms(spec: &GridSpec) -> Vec<f64> {
    let n = spec.points();
    let h = spec.spacing();
    let axis: Vec<f64> = (0..n).map(|k| frequency(k, n, h)).collect();
    (0..spec.len())
        .map(|flat| {
            let idx = spec.unflat(flat);
            (0..spec.dim()).map(|a| axis[idx[a] as usize].powi(2)).sum::<f64>().sqrt()
        })
        .collect()
}

/// Samples of `f̂(ξ) = ∫ f(x) e^{-i x·ξ} dx` at the lattice frequencies
/// `2πk/(Nh)`, from the midpoint rule.
#[derive(Debug, Clone)]
pub struct Spectrum {
    spec: GridSpec,
    data: Vec<Complex64>,
}

impl Spectrum {
    pub fn of(f: &GridFunction) -> Spectrum {
        let spec = *f.spec();
        let mut data: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut data, spec.points(), spec.dim(), false);
        let n = spec.points();
        let h = spec.spacing();
        let x0 = spec.center(0);
        let hd = spec.cell_volume();
        for (flat, v) in data.iter_mut().enumerate() {
            let idx = spec.unflat(flat);
            let phase: f64 = (0..spec.dim()).map(|a| frequency(idx[a] as usize, n, h) * x0).sum();
            *v *= Complex64::from_polar(hd, -phase);
        }
        Spectrum { spec, data }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    /// Lattice Plancherel pairing `(2π)^{-n} Σ f̂ conj(ĝ) Δξ^n`.
    pub fn inner(&self, o: &Spectrum) -> Result<Complex64> {
        if self.spec != o.spec {
            return Err(Error::GridMismatch);
        }
        let s: Complex64 = self.data.iter().zip(&o.data).map(|(a, b)| a * b.conj()).sum();
        Ok(s * self.measure())
    }

    /// `(2π)^{-n} Δξ^n = (Nh)^{-n}`.
    pub fn measure(&self) -> f64 {
        (self.spec.points() as f64 * self.spec.spacing()).powi(-(self.spec.dim() as i32))
    }
}

/// Lattice with twice the points and twice the extent, same spacing.
pub fn padded_spec(spec: &GridSpec) -> Result<GridSpec> {
    GridSpec::new(spec.dim(), spec.points() * 2, spec.extent() * 2.0)
}

/// Embed `f` in the centre of the padded lattice.
pub fn pad(f: &GridFunction) -> Result<GridFunction> {
    let spec = *f.spec();
    let big = padded_spec(&spec)?;
    let off = (spec.points() / 2) as i64;
    let mut v = vec![0.0; big.len()];
    for (k, &x) in f.values().iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        let mut idx = spec.unflat(k);
        for a in idx.iter_mut().take(spec.dim()) {
            *a += off;
        }
        v[big.flat(&idx).expect("inside padded lattice")] = x;
    }
    GridFunction::from_values(big, v)
}

/// Inverse of [`pad`].
pub fn crop(big: &[f64], spec: &GridSpec) -> Result<GridFunction> {
    let bspec = padded_spec(spec)?;
    let off = (spec.points() / 2) as i64;
    let mut v = vec![0.0; spec.len()];
    for (k, out) in v.iter_mut().enumerate() {
        let mut idx = spec.unflat(k);
        for a in idx.iter_mut().take(spec.dim()) {
            *a += off;
        }
        *out = big[bspec.flat(&idx).expect("inside padded lattice")];
    }
    GridFunction::from_values(*spec, v)
}

/// Apply the radial multiplier `m(|ξ|)`, periodically on the lattice itself
/// or on the 2× zero-padded lattice.
pub fn apply_radial_multiplier(f: &GridFunction, padded: bool, m: impl Fn(f64) -> f64) -> Result<GridFunction> {
    MultiplierPlan::new(f, padded)?.apply(m)
}

/// Cached transform of one input, reused across many radial multipliers.
pub struct MultiplierPlan {
    original: GridSpec,
    work: GridSpec,
    padded: bool,
    data: Vec<Complex64>,
    norms: Vec<f64>,
}

impl MultiplierPlan {
    pub fn new(f: &GridFunction, padded: bool) -> Result<Self> {
        let w = if padded { pad(f)? } else { f.clone() };
        let work = *w.spec();
        let mut data: Vec<Complex64> = w.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        fft_nd(&mut data, work.points(), work.dim(), false);
        Ok(MultiplierPlan { original: *f.spec(), work, padded, data, norms: frequency_norms(&work) })
    }

    pub fn work_spec(&self) -> &GridSpec {
        &self.work
    }

    pub fn apply(&self, m: impl Fn(f64) -> f64) -> Result<GridFunction> {
        let mut data: Vec<Complex64> = self.data.iter().zip(&self.norms).map(|(v, &xi)| v * m(xi)).collect();
        fft_nd(&mut data, self.work.points(), self.work.dim(), true);
        let re: Vec<f64> = data.iter().map(|c| c.re).collect();
        if self.padded {
            crop(&re, &self.original)
        } else {
            GridFunction::from_values(self.work, re)
        }
    }

    /// Raw DFT coefficients and their `|ξ|`.
    pub fn coefficients(&self) -> (&[Complex64], &[f64]) {
        (&self.data, &self.norms)
    }
}
