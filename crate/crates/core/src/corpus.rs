//! Seeded test functions: indicators of balls, annuli, rectangles and random
//! cell unions, smooth bumps, and random fields with flat octave energy.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::fourier::{fft_nd, frequency_norms};
use crate::grid::{GridFunction, GridSpec, IndexBox, Indicator, Shape};

/// Deterministic generator for a given seed.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `exp(-|x - c|² / w²)`.
pub fn gaussian(spec: GridSpec, center: [f64; 3], width: f64) -> GridFunction {
    let d = spec.dim();
    GridFunction::from_fn(spec, |x| {
        let r2: f64 = (0..d).map(|a| (x[a] - center[a]).powi(2)).sum();
        (-r2 / (width * width)).exp()
    })
}

/// `(1 - |x - c|²/ρ²)^2_+`, a compactly supported smooth-ish bump.
pub fn bump(spec: GridSpec, center: [f64; 3], radius: f64) -> GridFunction {
    let d = spec.dim();
    GridFunction::from_fn(spec, |x| {
        let r2: f64 = (0..d).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>() / (radius * radius);
        if r2 < 1.0 {
            (1.0 - r2).powi(2)
        } else {
            0.0
        }
    })
}

/// Real field with `|f̂(ξ)| ∝ |ξ|^{-n/2}` for `1 ≤ |ξ|` and random phases,
/// so each frequency octave carries about the same energy.
pub fn octave_balanced(spec: GridSpec, seed: u64) -> GridFunction {
    let mut r = rng(seed);
    let d = spec.dim() as f64;
    let mut data: Vec<Complex64> = frequency_norms(&spec)
        .into_iter()
        .map(|xi| {
            if xi < 1.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(xi.powf(-d / 2.0), r.gen_range(0.0..std::f64::consts::TAU))
            }
        })
        .collect();
    fft_nd(&mut data, spec.points(), spec.dim(), true);
    let v: Vec<f64> = data.iter().map(|c| c.re).collect();
    let g = GridFunction::from_values(spec, v).expect("length matches");
    let s = g.sup_norm();
    g.scale(1.0 / s)
}

/// Kinds of random indicator in the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    Ball,
    Annulus,
    Rectangle,
    CellUnion,
}

/// Random indicator with support inside `window` (cell box).
pub fn random_indicator(spec: GridSpec, window: &IndexBox, kind: IndicatorKind, r: &mut impl Rng) -> GridFunction {
    let d = spec.dim();
    let (lo, hi) = window.coord_bounds(&spec);
    let side = (0..d).map(|a| hi[a] - lo[a]).fold(f64::INFINITY, f64::min);
    let mut center = [0.0; 3];
    for a in 0..d {
        center[a] = r.gen_range(lo[a] + 0.25 * side..hi[a] - 0.25 * side);
    }
    let g = match kind {
        IndicatorKind::Ball => {
            let radius = r.gen_range(0.05..0.25) * side;
            Indicator::new(spec, Shape::Ball { center, radius }).to_grid()
        }
        IndicatorKind::Annulus => {
            let outer = r.gen_range(0.1..0.25) * side;
            let inner = outer * r.gen_range(0.3..0.9);
            Indicator::new(spec, Shape::Shell { center, inner, outer }).to_grid()
        }
        IndicatorKind::Rectangle => {
            let mut a0 = [0.0; 3];
            let mut b0 = [0.0; 3];
            for a in 0..d {
                let half = r.gen_range(0.02..0.25) * side;
                a0[a] = center[a] - half;
                b0[a] = center[a] + half;
            }
            Indicator::new(spec, Shape::Block { lo: a0, hi: b0 }).to_grid()
        }
        IndicatorKind::CellUnion => {
            let mut v = vec![0.0; spec.len()];
            let cells = window.intersect(&spec.domain());
            let density = r.gen_range(0.01..0.2);
            cells.for_each(|idx| {
                if r.gen_bool(density) {
                    v[spec.flat(&idx).expect("in domain")] = 1.0;
                }
            });
            GridFunction::from_values(spec, v).expect("length matches")
        }
    };
    g.restrict(window)
}

/// `count` pairs of random indicators inside `window`, kinds cycling.
pub fn indicator_pairs(spec: GridSpec, window: &IndexBox, count: usize, seed: u64) -> Vec<(GridFunction, GridFunction)> {
    let kinds = [IndicatorKind::Ball, IndicatorKind::Annulus, IndicatorKind::Rectangle, IndicatorKind::CellUnion];
    let mut r = rng(seed);
    (0..count)
        .map(|i| {
            let a = random_indicator(spec, window, kinds[i % 4], &mut r);
            let b = random_indicator(spec, window, kinds[(i / 4 + i + 1) % 4], &mut r);
            (a, b)
        })
        .collect()
}
