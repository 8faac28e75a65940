//! Sharpness examples and log-log exponent fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{domination_with, maximal_pairing, DominationOperator, DominationOptions};
use crate::grid::{lp_norm, translate, GridFunction, GridSpec, Indicator, Shape};
use crate::operators::{spherical_average, AverageOptions, RadiusNet};
use crate::quadrature::{gauss_legendre, origin_cell_average, radial_moment, touches_origin};
use crate::regions::{annulus_excess, knapp_excess, region, RegionKind};

/// Default `c` in `g_δ = 1_{|x| < cδ}`.
pub const ANNULUS_C: f64 = 0.5;
/// Default `C` in the Knapp rectangle `R₁`.
pub const KNAPP_C: f64 = 4.0;

/// `f_δ = 1_{||x| - 1| < δ}` and `g_δ = 1_{|x| < cδ}` as lazy indicators.
pub fn annulus_fields(spec: GridSpec, delta: f64, c: f64) -> Result<(Indicator, Indicator)> {
    if delta < 4.0 * spec.spacing() {
        return Err(Error::Resolution(format!("δ = {delta} below 4h = {}", 4.0 * spec.spacing())));
    }
    let f = Indicator::new(spec, Shape::Shell { center: [0.0; 3], inner: 1.0 - delta, outer: 1.0 + delta });
    let g = Indicator::new(spec, Shape::Ball { center: [0.0; 3], radius: c * delta });
    Ok((f, g))
}

/// [`annulus_fields`] sampled onto the lattice.
pub fn annulus_pair(spec: GridSpec, delta: f64, c: f64) -> Result<(GridFunction, GridFunction)> {
    let (f, g) = annulus_fields(spec, delta, c)?;
    Ok((f.to_grid(), g.to_grid()))
}

/// `R₁ = [-C√δ, C√δ]^{n-1} × [-Cδ, Cδ]` and `R₂ = [-√δ, √δ]^{n-1} × [4/3, 5/3]`,
/// the last axis being the thin one.
pub fn knapp_fields(spec: GridSpec, delta: f64, c: f64) -> Result<(Indicator, Indicator)> {
    let h = spec.spacing();
    let d = spec.dim();
    let sd = delta.sqrt();
    if c * delta < 2.0 * h || sd < 4.0 * h {
        return Err(Error::Resolution(format!("δ = {delta} not resolved at h = {h}")));
    }
    let mut lo1 = [0.0; 3];
    let mut hi1 = [0.0; 3];
    let mut lo2 = [0.0; 3];
    let mut hi2 = [0.0; 3];
    for a in 0..d - 1 {
        lo1[a] = -c * sd;
        hi1[a] = c * sd;
        lo2[a] = -sd;
        hi2[a] = sd;
    }
    lo1[d - 1] = -c * delta;
    hi1[d - 1] = c * delta;
    lo2[d - 1] = 4.0 / 3.0;
    hi2[d - 1] = 5.0 / 3.0;
    if hi2[d - 1] > spec.extent() || c * sd > spec.extent() {
        return Err(Error::Domain("Knapp rectangles leave the box".into()));
    }
    Ok((
        Indicator::new(spec, Shape::Block { lo: lo1, hi: hi1 }),
        Indicator::new(spec, Shape::Block { lo: lo2, hi: hi2 }),
    ))
}

pub fn knapp_pair(spec: GridSpec, delta: f64, c: f64) -> Result<(GridFunction, GridFunction)> {
    let (a, b) = knapp_fields(spec, delta, c)?;
    Ok((a.to_grid(), b.to_grid()))
}

/// Least-squares line through `(log x, log y)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

impl ExponentFit {
    /// Fit `log y = a + b log x` (natural logs). Needs at least 4 points
    /// with positive coordinates.
    pub fn fit(samples: &[(f64, f64)]) -> Result<ExponentFit> {
        if samples.len() < 4 {
            return Err(Error::TooFewSamples { needed: 4 });
        }
        if samples.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
            return Err(Error::Domain("log-log fit needs positive samples".into()));
        }
        let points: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
        Self::fit_logs(points)
    }

    /// Fit already-logged points.
    pub fn fit_logs(points: Vec<(f64, f64)>) -> Result<ExponentFit> {
        if points.len() < 4 {
            return Err(Error::TooFewSamples { needed: 4 });
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            return Err(Error::Domain("log-log fit needs distinct abscissae".into()));
        }
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let max_residual = points.iter().map(|p| (p.1 - intercept - slope * p.0).abs()).fold(0.0, f64::max);
        Ok(ExponentFit { points, slope, intercept, max_residual })
    }
}

/// Radius of the support of [`stein_function`].
pub const STEIN_RADIUS: f64 = 0.5;

/// `h(x) = 1_{|x| < 1/2} |x|^{1-n} / |log|x||`, cell-averaged: Gauss points
/// in ordinary cells, a radial integral in the cells meeting the origin.
pub fn stein_function(spec: GridSpec) -> GridFunction {
    let d = spec.dim();
    let n = d as f64;
    let hh = spec.spacing();
    let prof = |rho: f64| if rho < STEIN_RADIUS && rho > 0.0 { rho.powf(1.0 - n) / rho.ln().abs() } else { 0.0 };
    let origin = origin_cell_average(&spec, |c| c.powf(1.0 - n) * radial_moment(hh, |z| 1.0 / (z * c).ln().abs()));
    let (gx, gw) = gauss_legendre(3);
    let reach = ((STEIN_RADIUS + hh) / hh).ceil() as i64;
    let mid = spec.points() as i64 / 2;
    let mut v = vec![0.0; spec.len()];
    let mut bx = spec.domain();
    for a in 0..d {
        bx.lo[a] = (mid - reach).max(0);
        bx.hi[a] = (mid + reach).min(spec.points() as i64);
    }
    bx.for_each(|idx| {
        let k = spec.flat(&idx).expect("inside");
        if touches_origin(&spec, &idx) {
            v[k] = origin;
            return;
        }
        let c = spec.center_of(&idx);
        let mut acc = 0.0;
        let m = gx.len();
        for t in 0..m.pow(d as u32) {
            let mut r2 = 0.0;
            let mut wt = 1.0;
            let mut rest = t;
            for ca in c.iter().take(d) {
                let j = rest % m;
                rest /= m;
                let x = ca + 0.5 * hh * gx[j];
                r2 += x * x;
                wt *= 0.5 * gw[j];
            }
            acc += wt * prof(r2.sqrt());
        }
        v[k] = acc;
    });
    GridFunction::from_values(spec, v).expect("length")
}

/// Discrete `‖h‖_p`, for refinement logs.
pub fn stein_norm(spec: GridSpec, p: f64) -> Result<f64> {
    lp_norm(&stein_function(spec), p, None)
}

/// Sharpness example driving [`boundary_locator`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Example {
    /// Thin annulus against a small ball, lacunary operator.
    Annulus,
    /// Knapp rectangles, full operator on `[1, 2)`.
    Knapp,
}

impl Example {
    pub fn name(self) -> &'static str {
        match self {
            Example::Annulus => "annulus",
            Example::Knapp => "knapp",
        }
    }

    /// Blow-up exponent expected from the example at `(x, y) = (1/r, 1/s)`,
    /// zero where the example imposes no constraint.
    pub fn predicted(self, n: usize, x: f64, y: f64) -> f64 {
        match self {
            Example::Annulus => annulus_excess(n, x, y).max(0.0),
            Example::Knapp => knapp_excess(n, x, y).max(0.0),
        }
    }

    pub fn fields(self, spec: GridSpec, delta: f64, c: f64) -> Result<(Indicator, Indicator)> {
        match self {
            Example::Annulus => annulus_fields(spec, delta, c),
            Example::Knapp => knapp_fields(spec, delta, c),
        }
    }

    pub fn operator(self, spec: &GridSpec) -> Result<DominationOperator> {
        Ok(match self {
            Example::Annulus => DominationOperator::Lacunary { j_range: (-2, 0) },
            Example::Knapp => DominationOperator::Full { net: RadiusNet::half_open(1.0, 2.0, spec.spacing() / 2.0)? },
        })
    }

    /// `c` for the annulus, `C` for Knapp.
    pub fn default_constant(self) -> f64 {
        match self {
            Example::Annulus => ANNULUS_C,
            Example::Knapp => KNAPP_C,
        }
    }
}

/// Geometric sweep `2^{-k/per_octave}` for `k` from `k_min` to `k_max`.
pub fn delta_sweep(k_min: u32, k_max: u32, per_octave: u32) -> Vec<f64> {
    (k_min..=k_max).map(|k| 2f64.powf(-(k as f64) / per_octave as f64)).collect()
}

/// Fitted `ε` in `C_emp(δ) ~ δ^{-ε}` at one exponent pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub x: f64,
    pub y: f64,
    pub eps: f64,
    pub predicted: f64,
    pub max_residual: f64,
    /// `(δ, C_emp)` samples.
    pub samples: Vec<(f64, f64)>,
}

/// Sweep `δ` for every `(1/r, 1/s)` in `r_grid × s_grid` and fit the growth
/// of `C_emp`. The maximal function is evaluated once per `δ`.
pub fn boundary_locator(
    example: Example,
    spec: GridSpec,
    deltas: &[f64],
    r_grid: &[f64],
    s_grid: &[f64],
    c: f64,
    averages: &AverageOptions,
) -> Result<Vec<BoundaryPoint>> {
    if deltas.len() < 4 {
        return Err(Error::TooFewSamples { needed: 4 });
    }
    let op = example.operator(&spec)?;
    let opts = DominationOptions { averages: *averages, check_region: false };
    let pairs: Vec<(f64, f64)> = r_grid.iter().flat_map(|&r| s_grid.iter().map(move |&s| (r, s))).collect();
    let mut samples = vec![Vec::new(); pairs.len()];
    for &delta in deltas {
        let (f, g) = example.fields(spec, delta, c)?;
        let pairing = maximal_pairing(&f, &g, &op, averages)?;
        for (k, &(r, s)) in pairs.iter().enumerate() {
            let dom = domination_with(&f, &g, &op, &pairing, r, s, &opts)?;
            samples[k].push((delta, dom.c_emp));
        }
    }
    pairs
        .iter()
        .zip(samples)
        .map(|(&(r, s), smp)| {
            let fit = ExponentFit::fit(&smp)?;
            let (x, y) = (1.0 / r, 1.0 / s);
            Ok(BoundaryPoint {
                x,
                y,
                eps: -fit.slope,
                predicted: example.predicted(spec.dim(), x, y),
                max_residual: fit.max_residual,
                samples: smp,
            })
        })
        .collect()
}

/// Output of [`continuity_sharpness_experiment`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuitySharpness {
    /// `‖A_1 f_δ - τ_y A_1 f_δ‖_s / ‖f_δ‖_r`.
    pub ratio: f64,
    /// `‖A_1 f_δ‖_s / ‖f_δ‖_r`.
    pub untranslated: f64,
    pub clipped: bool,
}

/// Translate `A_1 f_δ` for the annulus `f_δ` by `y ≫ δ` at a boundary point
/// of one of the regions and compare with the untranslated ratio.
pub fn continuity_sharpness_experiment(
    spec: GridSpec,
    boundary_point: (f64, f64),
    y: &[f64],
    delta: f64,
    averages: &AverageOptions,
) -> Result<ContinuitySharpness> {
    let d = spec.dim();
    let (x, yy) = boundary_point;
    let on_boundary = RegionKind::ALL.iter().any(|&k| {
        region(d, k).is_ok_and(|reg| reg.contains_f64((x, yy), false) && !reg.contains_f64((x, yy), true))
    });
    if !on_boundary {
        return Err(Error::Domain(format!("({x}, {yy}) is not on a region boundary")));
    }
    let ny = y.iter().take(d).map(|v| v * v).sum::<f64>().sqrt();
    let (r, s) = (1.0 / x, 1.0 / yy);
    let (f, _) = annulus_pair(spec, delta, ANNULUS_C)?;
    let den = lp_norm(&f, r, None)?;
    let a = spherical_average(&f, 1.0, averages)?;
    let untranslated = lp_norm(&a, s, None)? / den;
    if ny == 0.0 {
        return Ok(ContinuitySharpness { ratio: 0.0, untranslated, clipped: false });
    }
    if delta > ny / 8.0 {
        return Err(Error::Domain(format!("δ = {delta} exceeds |y|/8 = {}", ny / 8.0)));
    }
    let t = translate(&a, y)?;
    let ratio = lp_norm(&a.sub(&t.function)?, s, None)? / den;
    Ok(ContinuitySharpness { ratio, untranslated, clipped: t.clipped })
}
