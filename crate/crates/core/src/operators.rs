//! Spherical averages `A_t`, the lacunary and full maximal functions, their
//! localized dyadic pieces and the continuity maximal operator.
//!
//! The quadrature method samples the input at fixed sphere nodes. Rules are
//! chosen once per evaluation (sized for the largest radius involved), so
//! every average is exactly linear. For each target point the nodes are
//! filtered to the cone that can reach the input's support box, and along
//! each node direction only radii inside the box are sampled. When the input
//! is constant on its support box the box interval is added to a difference
//! array over the net, which makes a whole radial profile cost one slab test
//! per ray.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};
use crate::fourier::{MultiplierPlan, SphereSymbol};
use crate::grid::{translate, Abs, Field, GridFunction, GridSpec, Idx, IndexBox, Restricted};
use crate::quadrature::SphereRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Quadrature,
    Multiplier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Value of the cell containing the node.
    Nearest,
    /// Multilinear interpolation between cell centers.
    Bilinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageOptions {
    pub method: Method,
    pub sampling: Sampling,
    /// Largest node spacing on the sphere, in cells.
    pub node_gap: f64,
}

impl AverageOptions {
    /// Multiplier in three dimensions, nearest-cell quadrature in two.
    pub fn for_dim(dim: usize) -> Self {
        if dim == 3 {
            Self::multiplier()
        } else {
            Self::quadrature()
        }
    }
    pub fn quadrature() -> Self {
        AverageOptions { method: Method::Quadrature, sampling: Sampling::Nearest, node_gap: 0.5 }
    }
    pub fn multiplier() -> Self {
        AverageOptions { method: Method::Multiplier, sampling: Sampling::Nearest, node_gap: 0.5 }
    }
    pub fn with_sampling(mut self, s: Sampling) -> Self {
        self.sampling = s;
        self
    }
}

/// Sorted radii covering `[t_min, t_max]` with spacing at most `step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusNet {
    pub interval: (f64, f64),
    pub step: f64,
    pub samples: Vec<f64>,
}

impl RadiusNet {
    /// `t_min + k step` up to `t_max`, with `t_max` appended if missed.
    pub fn new(t_min: f64, t_max: f64, step: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_max >= t_min && step > 0.0) {
            return Err(Error::Domain(format!("bad net [{t_min}, {t_max}] step {step}")));
        }
        let k = ((t_max - t_min) / step + 1e-9).floor() as usize;
        let mut samples: Vec<f64> = (0..=k).map(|i| t_min + i as f64 * step).collect();
        if t_max - samples[k] > 1e-9 * step {
            samples.push(t_max);
        }
        Ok(RadiusNet { interval: (t_min, t_max), step, samples })
    }

    /// `t_min + k step < t_max`, for the half-open ranges of the unit-scale
    /// operators.
    pub fn half_open(t_min: f64, t_max: f64, step: f64) -> Result<Self> {
        let mut net = RadiusNet::new(t_min, t_max, step)?;
        while net.samples.len() > 1 && *net.samples.last().expect("nonempty") >= t_max - 1e-12 * t_max {
            net.samples.pop();
        }
        Ok(net)
    }

    /// Step `h/2` on the lattice of `spec`.
    pub fn for_grid(spec: &GridSpec, t_min: f64, t_max: f64) -> Result<Self> {
        RadiusNet::new(t_min, t_max, spec.spacing() / 2.0)
    }

    pub fn single(t: f64) -> Result<Self> {
        RadiusNet::new(t, t, 1.0)
    }

    /// Same interval, half the step.
    pub fn refined(&self) -> Result<Self> {
        RadiusNet::new(self.interval.0, self.interval.1, self.step / 2.0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
    pub fn t_max(&self) -> f64 {
        *self.samples.last().expect("nonempty net")
    }
    pub fn t_min(&self) -> f64 {
        self.samples[0]
    }

    /// Largest gap between consecutive samples.
    pub fn max_gap(&self) -> f64 {
        self.samples.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    fn check_step(&self, spec: &GridSpec, limit: f64) -> Result<()> {
        let limit = limit.min(spec.spacing() / 2.0);
        if self.len() > 1 && self.max_gap() > limit * (1.0 + 1e-9) {
            return Err(Error::NetTooCoarse { step: self.max_gap(), limit });
        }
        Ok(())
    }
}

/// Pointwise supremum and the radius attaining it.
#[derive(Debug, Clone)]
pub struct MaximalResult {
    pub values: GridFunction,
    pub argmax_radius: Option<GridFunction>,
}

fn check_radius(spec: &GridSpec, r: f64, method: Method) -> Result<()> {
    if !(r >= spec.spacing()) {
        return Err(Error::RadiusBelowResolution);
    }
    let cap = match method {
        Method::Quadrature => 2.0 * spec.extent(),
        Method::Multiplier => 0.5 * spec.extent(),
    };
    if r > cap * (1.0 + 1e-12) {
        return Err(Error::RadiusExceedsDomain);
    }
    Ok(())
}

/// Ray sampler for one input and one node rule.
pub struct RayEvaluator<'a, F: Field + ?Sized> {
    f: &'a F,
    spec: GridSpec,
    rule: Arc<SphereRule>,
    sampling: Sampling,
    sup: IndexBox,
    lo: [f64; 3],
    hi: [f64; 3],
    uniform: Option<f64>,
    ball_center: [f64; 3],
    ball_radius: f64,
}

impl<'a, F: Field + ?Sized> RayEvaluator<'a, F> {
    /// Rule sized so nodes on the sphere of radius `t_max` are at most
    /// `node_gap · h` apart.
    pub fn new(f: &'a F, t_max: f64, opts: &AverageOptions) -> Self {
        let spec = *f.grid();
        let d = spec.dim();
        let rule = SphereRule::for_radius(d, t_max, opts.node_gap * spec.spacing());
        let mut sup = f.support().intersect(&spec.domain());
        let mut uniform = f.uniform_value();
        if opts.sampling == Sampling::Bilinear && !sup.is_empty() {
            for a in 0..d {
                sup.lo[a] -= 1;
                sup.hi[a] += 1;
            }
            uniform = None;
        }
        let (lo, hi) = sup.coord_bounds(&spec);
        let mut ball_center = [0.0; 3];
        let mut r2 = 0.0;
        for a in 0..d {
            ball_center[a] = 0.5 * (lo[a] + hi[a]);
            r2 += (0.5 * (hi[a] - lo[a])).powi(2);
        }
        RayEvaluator {
            f,
            spec,
            rule,
            sampling: opts.sampling,
            sup,
            lo,
            hi,
            uniform,
            ball_center,
            ball_radius: r2.sqrt(),
        }
    }

    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }

    #[inline]
    fn cell(&self, p: &[f64; 3]) -> Idx {
        let mut c = [0i64; 3];
        for (a, ca) in c.iter_mut().enumerate().take(self.spec.dim()) {
            *ca = self.spec.cell_of(p[a]);
        }
        c
    }

    #[inline]
    fn sample(&self, p: &[f64; 3]) -> f64 {
        match self.sampling {
            Sampling::Nearest => self.f.at(&self.cell(p)),
            Sampling::Bilinear => {
                let d = self.spec.dim();
                let h = self.spec.spacing();
                let l = self.spec.extent();
                let mut base = [0i64; 3];
                let mut frac = [0.0; 3];
                for a in 0..d {
                    let u = (p[a] + l) / h - 0.5;
                    let b = u.floor();
                    base[a] = b as i64;
                    frac[a] = u - b;
                }
                let mut acc = 0.0;
                for corner in 0..(1usize << d) {
                    let mut idx = base;
                    let mut w = 1.0;
                    for a in 0..d {
                        if corner >> a & 1 == 1 {
                            idx[a] += 1;
                            w *= frac[a];
                        } else {
                            w *= 1.0 - frac[a];
                        }
                    }
                    if w != 0.0 {
                        acc += w * self.f.at(&idx);
                    }
                }
                acc
            }
        }
    }

    #[inline]
    fn point(x: &[f64; 3], w: &[f64; 3], t: f64) -> [f64; 3] {
        [x[0] + t * w[0], x[1] + t * w[1], x[2] + t * w[2]]
    }

    #[inline]
    fn inside(&self, x: &[f64; 3], w: &[f64; 3], t: f64) -> bool {
        match self.sampling {
            Sampling::Nearest => self.sup.contains(&self.cell(&Self::point(x, w, t))),
            Sampling::Bilinear => true,
        }
    }

    /// Add `A_t f(x)` for every `t` in `net` (sorted) into `out`.
    pub fn profile(&self, x: &[f64; 3], net: &[f64], out: &mut [f64]) {
        if self.sup.is_empty() || net.is_empty() {
            return;
        }
        let d = self.spec.dim();
        let t_min = net[0];
        let t_max = net[net.len() - 1];
        let mut u = [0.0; 3];
        let mut dist2 = 0.0;
        for a in 0..d {
            u[a] = self.ball_center[a] - x[a];
            dist2 += u[a] * u[a];
        }
        let dist = dist2.sqrt();
        let slack = self.spec.spacing();
        if dist - self.ball_radius > t_max + slack || dist + self.ball_radius < t_min - slack {
            return;
        }
        let alpha = if dist <= self.ball_radius + slack {
            std::f64::consts::PI
        } else {
            for v in u.iter_mut().take(d) {
                *v /= dist;
            }
            ((self.ball_radius + slack) / dist).min(1.0).asin() + 1e-9
        };
        let eps = 1e-9 * self.spec.spacing();
        let mut diff = vec![0.0; if self.uniform.is_some() { net.len() + 1 } else { 0 }];
        self.rule.for_each_in_cone(&u, alpha, |k| {
            let w = &self.rule.dirs[k];
            // slab intersection with the support box
            let mut r_in = f64::NEG_INFINITY;
            let mut r_out = f64::INFINITY;
            for a in 0..d {
                if w[a].abs() < 1e-15 {
                    if x[a] < self.lo[a] || x[a] >= self.hi[a] {
                        return;
                    }
                    continue;
                }
                let p = (self.lo[a] - x[a]) / w[a];
                let q = (self.hi[a] - x[a]) / w[a];
                r_in = r_in.max(p.min(q));
                r_out = r_out.min(p.max(q));
            }
            if r_out < t_min - eps || r_in > t_max + eps || r_in > r_out + eps {
                return;
            }
            let mut i0 = net.partition_point(|&t| t < r_in - eps);
            let mut i1 = net.partition_point(|&t| t < r_out + eps);
            while i0 < i1 && !self.inside(x, w, net[i0]) {
                i0 += 1;
            }
            while i1 > i0 && !self.inside(x, w, net[i1 - 1]) {
                i1 -= 1;
            }
            if i0 >= i1 {
                return;
            }
            let wt = self.rule.weights[k];
            match self.uniform {
                Some(c) => {
                    diff[i0] += wt * c;
                    diff[i1] -= wt * c;
                }
                None => {
                    for i in i0..i1 {
                        out[i] += wt * self.sample(&Self::point(x, w, net[i]));
                    }
                }
            }
        });
        if self.uniform.is_some() {
            let mut run = 0.0;
            for (o, dv) in out.iter_mut().zip(&diff) {
                run += dv;
                *o += run;
            }
        }
    }

    /// Direct node sum `Σ_k w_k f(x + t ω_k)` with no filtering.
    pub fn direct(&self, x: &[f64; 3], t: f64) -> f64 {
        self.rule
            .dirs
            .iter()
            .zip(&self.rule.weights)
            .map(|(w, wt)| wt * self.sample(&Self::point(x, w, t)))
            .sum()
    }
}

/// Cells whose spheres of radius `≤ t_max` can reach the support of `f`.
pub fn reach(f: &(impl Field + ?Sized), t_max: f64) -> IndexBox {
    let spec = f.grid();
    let sup = f.support().intersect(&spec.domain());
    if sup.is_empty() {
        return IndexBox::empty();
    }
    let k = (t_max / spec.spacing()).ceil() as i64 + 2;
    let mut b = sup;
    for a in 0..spec.dim() {
        b.lo[a] -= k;
        b.hi[a] += k;
    }
    b.intersect(&spec.domain())
}

fn box_cells(b: &IndexBox) -> Vec<Idx> {
    let mut v = Vec::with_capacity(b.count() as usize);
    b.for_each(|i| v.push(i));
    v
}

/// Run the quadrature engine over `targets` and reduce each radial profile.
pub fn map_profiles<F, T, R>(f: &F, net: &RadiusNet, targets: &[Idx], opts: &AverageOptions, reduce: R) -> Vec<T>
where
    F: Field + ?Sized,
    T: Send,
    R: Fn(&Idx, &[f64]) -> T + Sync,
{
    let ev = RayEvaluator::new(f, net.t_max(), opts);
    let spec = *f.grid();
    targets
        .par_iter()
        .map_init(
            || vec![0.0; net.len()],
            |buf, idx| {
                buf.iter_mut().for_each(|v| *v = 0.0);
                ev.profile(&spec.center_of(idx), &net.samples, buf);
                reduce(idx, buf)
            },
        )
        .collect()
}

/// `A_r f` at the listed cells by quadrature.
pub fn average_at<F: Field + ?Sized>(f: &F, r: f64, targets: &[Idx], opts: &AverageOptions) -> Result<Vec<f64>> {
    check_radius(f.grid(), r, Method::Quadrature)?;
    let net = RadiusNet::single(r)?;
    Ok(map_profiles(f, &net, targets, opts, |_, p| p[0]))
}

fn scatter(spec: &GridSpec, targets: &[Idx], vals: &[f64]) -> GridFunction {
    let mut v = vec![0.0; spec.len()];
    for (idx, x) in targets.iter().zip(vals) {
        v[spec.flat(idx).expect("target inside domain")] = *x;
    }
    GridFunction::from_values(*spec, v).expect("length matches")
}

fn symbol_for(spec: &GridSpec, r: f64) -> Arc<SphereSymbol> {
    // padded lattice has the same spacing, so the same top frequency
    SphereSymbol::shared(spec.dim(), r * spec.nyquist() * (spec.dim() as f64).sqrt() + 1.0)
}

/// `A_r f` on the whole lattice.
pub fn spherical_average<F: Field + ?Sized>(f: &F, r: f64, opts: &AverageOptions) -> Result<GridFunction> {
    let spec = *f.grid();
    check_radius(&spec, r, opts.method)?;
    match opts.method {
        Method::Quadrature => {
            let targets = box_cells(&reach(f, r));
            let vals = average_at(f, r, &targets, opts)?;
            Ok(scatter(&spec, &targets, &vals))
        }
        Method::Multiplier => {
            let g = GridFunction::from_field(f);
            let plan = MultiplierPlan::new(&g, true)?;
            let table = symbol_for(&spec, r);
            plan.apply(|xi| table.eval(r * xi))
        }
    }
}

/// `A_t f` for each net radius, by multiplier, as full lattice functions.
pub fn multiplier_stack<F: Field + ?Sized>(f: &F, radii: &[f64]) -> Result<Vec<GridFunction>> {
    let spec = *f.grid();
    for &r in radii {
        check_radius(&spec, r, Method::Multiplier)?;
    }
    let g = GridFunction::from_field(f);
    let plan = MultiplierPlan::new(&g, true)?;
    let table = symbol_for(&spec, radii.iter().cloned().fold(0.0, f64::max));
    radii.iter().map(|&r| plan.apply(|xi| table.eval(r * xi))).collect()
}

fn pointwise_max(spec: &GridSpec, stack: impl Iterator<Item = (f64, GridFunction)>) -> MaximalResult {
    let mut best = vec![f64::NEG_INFINITY; spec.len()];
    let mut arg = vec![0.0; spec.len()];
    for (t, g) in stack {
        for ((b, a), v) in best.iter_mut().zip(arg.iter_mut()).zip(g.values()) {
            if *v > *b {
                *b = *v;
                *a = t;
            }
        }
    }
    MaximalResult {
        values: GridFunction::from_values(*spec, best.into_iter().map(|v| v.max(0.0)).collect()).expect("length"),
        argmax_radius: Some(GridFunction::from_values(*spec, arg).expect("length")),
    }
}

/// Admissible lacunary exponents: `h < 2^j ≤ L/2` (quadrature allows `2L`).
fn lacunary_radii(spec: &GridSpec, j_range: (i32, i32), method: Method) -> Result<Vec<f64>> {
    let radii: Vec<f64> = (j_range.0..=j_range.1)
        .map(|j| 2f64.powi(j))
        .filter(|&r| check_radius(spec, r, method).is_ok())
        .collect();
    if radii.is_empty() {
        return Err(Error::EmptyRange);
    }
    Ok(radii)
}

/// `sup_j A_{2^j}|f|` over `j_range` (inclusive), each radius with its own rule.
pub fn lacunary_maximal<F: Field + ?Sized>(f: &F, j_range: (i32, i32), opts: &AverageOptions) -> Result<MaximalResult> {
    let spec = *f.grid();
    let radii = lacunary_radii(&spec, j_range, opts.method)?;
    let af = Abs(f);
    match opts.method {
        Method::Quadrature => {
            let stack = radii
                .iter()
                .map(|&r| Ok((r, spherical_average(&af, r, opts)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(pointwise_max(&spec, stack.into_iter()))
        }
        Method::Multiplier => {
            let stack = multiplier_stack(&af, &radii)?;
            Ok(pointwise_max(&spec, radii.into_iter().zip(stack)))
        }
    }
}

/// `sup_j A_{2^j}|f|(x)` at the listed cells.
pub fn lacunary_maximal_at<F: Field + ?Sized>(
    f: &F,
    j_range: (i32, i32),
    targets: &[Idx],
    opts: &AverageOptions,
) -> Result<Vec<f64>> {
    let radii = lacunary_radii(f.grid(), j_range, Method::Quadrature)?;
    let af = Abs(f);
    let mut best = vec![0.0f64; targets.len()];
    for r in radii {
        let v = average_at(&af, r, targets, opts)?;
        for (b, x) in best.iter_mut().zip(v) {
            *b = b.max(x);
        }
    }
    Ok(best)
}

/// `(sup_j A_{2^j}|f|(x), argmax radius)` at the listed cells; one profile
/// per target with the rule of the largest radius. Ties go to the smallest
/// radius.
pub fn lacunary_argmax_at<F: Field + ?Sized>(
    f: &F,
    j_range: (i32, i32),
    targets: &[Idx],
    opts: &AverageOptions,
) -> Result<Vec<(f64, f64)>> {
    let radii = lacunary_radii(f.grid(), j_range, Method::Quadrature)?;
    let net = RadiusNet { interval: (radii[0], radii[radii.len() - 1]), step: 0.0, samples: radii };
    let af = Abs(f);
    Ok(map_profiles(&af, &net, targets, opts, |_, p| {
        let mut best = (0.0, net.samples[0]);
        for (v, t) in p.iter().zip(&net.samples) {
            if *v > best.0 {
                best = (*v, *t);
            }
        }
        best
    }))
}

/// `sup_{t ∈ net} A_t|f|` with the maximizing radius. Ties go to the
/// smallest radius.
pub fn full_maximal<F: Field + ?Sized>(f: &F, net: &RadiusNet, opts: &AverageOptions) -> Result<MaximalResult> {
    let spec = *f.grid();
    net.check_step(&spec, f64::INFINITY)?;
    check_radius(&spec, net.t_min(), opts.method)?;
    check_radius(&spec, net.t_max(), opts.method)?;
    let af = Abs(f);
    match opts.method {
        Method::Quadrature => {
            let targets = box_cells(&reach(&af, net.t_max()));
            let res = full_maximal_at(&af, net, &targets, opts)?;
            let vals: Vec<f64> = res.iter().map(|p| p.0).collect();
            let args: Vec<f64> = res.iter().map(|p| p.1).collect();
            Ok(MaximalResult { values: scatter(&spec, &targets, &vals), argmax_radius: Some(scatter(&spec, &targets, &args)) })
        }
        Method::Multiplier => {
            let g = GridFunction::from_field(&af);
            let plan = MultiplierPlan::new(&g, true)?;
            let table = symbol_for(&spec, net.t_max());
            let stack = net.samples.iter().map(|&t| (t, plan.apply(|xi| table.eval(t * xi)).expect("same lattice")));
            Ok(pointwise_max(&spec, stack))
        }
    }
}

/// `(sup_{t ∈ net} A_t|f|(x), argmax)` at the listed cells, by quadrature.
pub fn full_maximal_at<F: Field + ?Sized>(
    f: &F,
    net: &RadiusNet,
    targets: &[Idx],
    opts: &AverageOptions,
) -> Result<Vec<(f64, f64)>> {
    let spec = *f.grid();
    check_radius(&spec, net.t_min(), Method::Quadrature)?;
    check_radius(&spec, net.t_max(), Method::Quadrature)?;
    let af = Abs(f);
    Ok(map_profiles(&af, net, targets, opts, |_, p| {
        let mut best = (0.0, net.samples[0]);
        for (v, t) in p.iter().zip(&net.samples) {
            if *v > best.0 {
                best = (*v, *t);
            }
        }
        best
    }))
}

/// Output of [`localized_average`] and [`localized_maximal`].
#[derive(Debug, Clone)]
pub struct Localized {
    pub values: GridFunction,
    /// Nonzero output cells outside `Q`.
    pub leaked_cells: usize,
}

/// Radius `2^{q-2}` used by `A_Q`.
pub fn localized_radius(q: &DyadicCube) -> f64 {
    2f64.powi(q.level - 2)
}

fn localized_setup<'a, F: Field + ?Sized>(f: &'a F, q: &DyadicCube) -> Result<(Restricted<'a, F>, IndexBox)> {
    let spec = f.grid();
    let cube = q.cells(spec)?;
    if !(localized_radius(q) > spec.spacing()) {
        return Err(Error::CubeBelowResolution);
    }
    let third = q.middle_third_cells(spec)?;
    Ok((Restricted { inner: f, window: third }, cube))
}

fn count_leak(g: &GridFunction, cube: &IndexBox) -> usize {
    let spec = g.spec();
    g.values().iter().enumerate().filter(|(k, v)| **v != 0.0 && !cube.contains(&spec.unflat(*k))).count()
}

/// `A_Q f = A_{2^{q-2}}(f 1_{Q/3})`, evaluated wherever it can be nonzero.
pub fn localized_average<F: Field + ?Sized>(f: &F, q: &DyadicCube, opts: &AverageOptions) -> Result<Localized> {
    let (fq, cube) = localized_setup(f, q)?;
    let values = spherical_average(&fq, localized_radius(q), opts)?;
    let leaked_cells = if opts.method == Method::Quadrature { count_leak(&values, &cube) } else { 0 };
    Ok(Localized { values, leaked_cells })
}

/// `M̃_Q f = sup_{2^{q-3} ≤ t < 2^{q-2}} A_t(|f| 1_{Q/3})` over a net of step `step`.
pub fn localized_maximal<F: Field + ?Sized>(f: &F, q: &DyadicCube, step: f64, opts: &AverageOptions) -> Result<Localized> {
    let (fq, cube) = localized_setup(f, q)?;
    let net = RadiusNet::half_open(2f64.powi(q.level - 3), localized_radius(q), step)?;
    let res = full_maximal(&fq, &net, opts)?;
    let leaked_cells = if opts.method == Method::Quadrature { count_leak(&res.values, &cube) } else { 0 };
    Ok(Localized { values: res.values, leaked_cells })
}

/// Largest `max - min` of `p` over index windows whose radii differ by less than `delta`.
fn window_oscillation(p: &[f64], t: &[f64], delta: f64) -> f64 {
    use std::collections::VecDeque;
    let mut maxq: VecDeque<usize> = VecDeque::new();
    let mut minq: VecDeque<usize> = VecDeque::new();
    let mut best = 0.0f64;
    let mut start = 0;
    for j in 0..p.len() {
        while t[j] - t[start] >= delta {
            start += 1;
        }
        while maxq.back().is_some_and(|&b| p[b] <= p[j]) {
            maxq.pop_back();
        }
        maxq.push_back(j);
        while minq.back().is_some_and(|&b| p[b] >= p[j]) {
            minq.pop_back();
        }
        minq.push_back(j);
        while maxq.front().is_some_and(|&b| b < start) {
            maxq.pop_front();
        }
        while minq.front().is_some_and(|&b| b < start) {
            minq.pop_front();
        }
        best = best.max(p[maxq[0]] - p[minq[0]]);
    }
    best
}

/// `sup_{s,t ∈ net, |s-t| < δ} |A_t f - A_s f|` pointwise.
pub fn continuity_maximal<F: Field + ?Sized>(f: &F, delta: f64, net: &RadiusNet, opts: &AverageOptions) -> Result<GridFunction> {
    let spec = *f.grid();
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("δ = {delta} must be positive")));
    }
    net.check_step(&spec, delta / 4.0)?;
    match opts.method {
        Method::Quadrature => {
            check_radius(&spec, net.t_max(), Method::Quadrature)?;
            let targets = box_cells(&reach(f, net.t_max()));
            let vals = map_profiles(f, net, &targets, opts, |_, p| window_oscillation(p, &net.samples, delta));
            Ok(scatter(&spec, &targets, &vals))
        }
        Method::Multiplier => {
            let stack = multiplier_stack(f, &net.samples)?;
            let mut out = vec![0.0; spec.len()];
            let mut p = vec![0.0; net.len()];
            for (k, o) in out.iter_mut().enumerate() {
                for (pi, g) in p.iter_mut().zip(&stack) {
                    *pi = g.values()[k];
                }
                *o = window_oscillation(&p, &net.samples, delta);
            }
            GridFunction::from_values(spec, out)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuityMode {
    /// `‖A_1 f - τ_y A_1 f‖_s`
    Single,
    /// `‖sup_{1≤t≤2} |A_t f - τ_y A_t f|‖_s`
    UnitSup,
}

/// Ratio of a translation difference norm to `‖f‖_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuityNorm {
    pub ratio: f64,
    /// Some translated sample left the box.
    pub clipped: bool,
}

/// `‖A_1 f - τ_y A_1 f‖_s / ‖f‖_r`, or the unit-scale supremum version.
pub fn translation_continuity_norm(
    f: &GridFunction,
    y: &[f64],
    r: f64,
    s: f64,
    mode: ContinuityMode,
    opts: &AverageOptions,
) -> Result<ContinuityNorm> {
    let spec = *f.spec();
    let ny: f64 = y.iter().take(spec.dim()).map(|v| v * v).sum::<f64>().sqrt();
    if ny > 1.0 + 1e-12 {
        return Err(Error::Domain(format!("|y| = {ny} exceeds 1")));
    }
    let denom = crate::grid::lp_norm(f, r, None)?;
    if denom == 0.0 {
        return Ok(ContinuityNorm { ratio: 0.0, clipped: false });
    }
    let (diff, clipped) = match mode {
        ContinuityMode::Single => {
            let a = spherical_average(f, 1.0, opts)?;
            let t = translate(&a, y)?;
            (a.sub(&t.function)?, t.clipped)
        }
        ContinuityMode::UnitSup => {
            let net = RadiusNet::for_grid(&spec, 1.0, 2.0)?;
            let stack = match opts.method {
                Method::Multiplier => multiplier_stack(f, &net.samples)?,
                Method::Quadrature => {
                    net.samples.iter().map(|&t| spherical_average(f, t, opts)).collect::<Result<Vec<_>>>()?
                }
            };
            let mut best = vec![0.0f64; spec.len()];
            let mut clipped = false;
            for a in &stack {
                let t = translate(a, y)?;
                clipped |= t.clipped;
                for ((b, u), v) in best.iter_mut().zip(a.values()).zip(t.function.values()) {
                    *b = b.max((u - v).abs());
                }
            }
            (GridFunction::from_values(spec, best)?, clipped)
        }
    };
    let num = crate::grid::lp_norm(&diff, s, None)?;
    Ok(ContinuityNorm { ratio: num / denom, clipped })
}
