//! Uniform lattices on `[-L, L)^n`, sampled functions, norms and translations.
//!
//! Cell `i` along an axis has center `-L + (i + 1/2) h` with `h = 2L/N`.
//! Integrals are midpoint sums `Σ f(x_cell) h^n`. Outside the box every
//! function is zero.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicCube;
use crate::error::{Error, Result};

/// Multi-index of a lattice cell. Axes beyond `dim` are zero.
pub type Idx = [i64; 3];

/// Lattice description: dimension, half-width `L`, points per axis `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpecRaw", into = "GridSpecRaw")]
pub struct GridSpec {
    dim: usize,
    extent: f64,
    points: usize,
    spacing: f64,
}

#[derive(Serialize, Deserialize)]
struct GridSpecRaw {
    dim: usize,
    extent: f64,
    points: usize,
}

impl TryFrom<GridSpecRaw> for GridSpec {
    type Error = Error;
    fn try_from(r: GridSpecRaw) -> Result<Self> {
        GridSpec::new(r.dim, r.points, r.extent)
    }
}

impl From<GridSpec> for GridSpecRaw {
    fn from(s: GridSpec) -> Self {
        GridSpecRaw { dim: s.dim, extent: s.extent, points: s.points }
    }
}

impl GridSpec {
    /// `N` must be a power of two and `h = 2L/N` must be a power of two as
    /// well, so that dyadic cubes of side `≥ h` are unions of whole cells.
    pub fn new(dim: usize, points: usize, extent: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{2,3}}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("N = {points} is not a power of two ≥ 4")));
        }
        if !(extent > 0.0) || !extent.is_finite() {
            return Err(Error::InvalidGrid(format!("extent {extent} not positive")));
        }
        let spacing = 2.0 * extent / points as f64;
        let lg = spacing.log2().round();
        if (2f64.powf(lg) - spacing).abs() > 1e-15 * spacing {
            return Err(Error::InvalidGrid(format!("spacing {spacing} is not a power of two")));
        }
        let total = (points as u128).pow(dim as u32);
        if total > 1u128 << 31 {
            return Err(Error::InvalidGrid("lattice too large".into()));
        }
        Ok(GridSpec { dim, extent, points, spacing })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    /// Half-width `L`.
    pub fn extent(&self) -> f64 {
        self.extent
    }
    /// Points per axis `N`.
    pub fn points(&self) -> usize {
        self.points
    }
    /// Cell side `h`.
    pub fn spacing(&self) -> f64 {
        self.spacing
    }
    /// `log2 h`, the finest dyadic level.
    pub fn resolution_level(&self) -> i32 {
        self.spacing.log2().round() as i32
    }
    /// Volume of one cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }
    /// Number of cells, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    /// Largest frequency on each axis of the DFT lattice, `π/h`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing
    }

    pub fn center(&self, i: i64) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.spacing
    }

    pub fn center_of(&self, idx: &Idx) -> [f64; 3] {
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.center(idx[a]);
        }
        x
    }

    /// Cell containing the coordinate `x` (may lie outside the box).
    #[inline]
    pub fn cell_of(&self, x: f64) -> i64 {
        ((x + self.extent) / self.spacing).floor() as i64
    }

    #[inline]
    pub fn flat(&self, idx: &Idx) -> Option<usize> {
        let n = self.points as i64;
        let mut k = 0i64;
        for &i in idx.iter().take(self.dim) {
            if i < 0 || i >= n {
                return None;
            }
            k = k * n + i;
        }
        Some(k as usize)
    }

    pub fn unflat(&self, mut k: usize) -> Idx {
        let mut idx = [0i64; 3];
        for a in (0..self.dim).rev() {
            idx[a] = (k % self.points) as i64;
            k /= self.points;
        }
        idx
    }

    /// The whole lattice as an index box.
    pub fn domain(&self) -> IndexBox {
        let mut hi = [1i64; 3];
        for h in hi.iter_mut().take(self.dim) {
            *h = self.points as i64;
        }
        IndexBox { lo: [0; 3], hi }
    }

    /// Cells whose centers lie in the closed coordinate box `[lo, hi]`.
    pub fn cells_in_closed_box(&self, lo: &[f64], hi: &[f64]) -> IndexBox {
        let mut b = IndexBox { lo: [0; 3], hi: [1; 3] };
        for a in 0..self.dim {
            let first = ((lo[a] + self.extent) / self.spacing - 0.5).ceil() as i64;
            let last = ((hi[a] + self.extent) / self.spacing - 0.5).floor() as i64;
            b.lo[a] = first;
            b.hi[a] = last + 1;
        }
        b
    }

    /// Same lattice with `N` doubled and `L` unchanged.
    pub fn refined(&self) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.points * 2, self.extent)
    }
}


/// Half-open box of cell indices `lo ≤ i < hi`. Unused axes span `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexBox {
    pub lo: Idx,
    pub hi: Idx,
}

impl IndexBox {
    pub fn empty() -> Self {
        IndexBox { lo: [0; 3], hi: [0; 3] }
    }
    pub fn is_empty(&self) -> bool {
        (0..3).any(|a| self.hi[a] <= self.lo[a])
    }
    pub fn intersect(&self, o: &IndexBox) -> IndexBox {
        let mut b = *self;
        for a in 0..3 {
            b.lo[a] = b.lo[a].max(o.lo[a]);
            b.hi[a] = b.hi[a].min(o.hi[a]);
        }
        if b.is_empty() {
            IndexBox::empty()
        } else {
            b
        }
    }
    pub fn contains(&self, idx: &Idx) -> bool {
        (0..3).all(|a| idx[a] >= self.lo[a] && idx[a] < self.hi[a])
    }
    pub fn contains_box(&self, o: &IndexBox) -> bool {
        o.is_empty() || (0..3).all(|a| o.lo[a] >= self.lo[a] && o.hi[a] <= self.hi[a])
    }
    pub fn count(&self) -> u64 {
        if self.is_empty() {
            return 0;
        }
        (0..3).map(|a| (self.hi[a] - self.lo[a]) as u64).product()
    }
    /// Visit every index in row-major order.
    pub fn for_each(&self, mut f: impl FnMut(Idx)) {
        if self.is_empty() {
            return;
        }
        for i in self.lo[0]..self.hi[0] {
            for j in self.lo[1]..self.hi[1] {
                for k in self.lo[2]..self.hi[2] {
                    f([i, j, k]);
                }
            }
        }
    }
    /// Coordinate box `[lo, hi]` covered by the cells (cell faces, not centers).
    pub fn coord_bounds(&self, spec: &GridSpec) -> ([f64; 3], [f64; 3]) {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for a in 0..spec.dim() {
            lo[a] = -spec.extent() + self.lo[a] as f64 * spec.spacing();
            hi[a] = -spec.extent() + self.hi[a] as f64 * spec.spacing();
        }
        (lo, hi)
    }
}

/// Anything that can be read cell by cell on a lattice.
///
/// `support` must contain every nonzero cell. When `uniform_value` returns
/// `Some(c)` the field equals `c` on every cell of `support` that lies in
/// the domain, which lets ray code treat it as a box indicator.
pub trait Field: Sync {
    fn grid(&self) -> &GridSpec;
    fn at(&self, idx: &Idx) -> f64;
    fn support(&self) -> IndexBox;
    fn uniform_value(&self) -> Option<f64> {
        None
    }
}

/// `f · 1_B` for an index box `B`.
pub struct Restricted<'a, F: Field + ?Sized> {
    pub inner: &'a F,
    pub window: IndexBox,
}

impl<'a, F: Field + ?Sized> Field for Restricted<'a, F> {
    fn grid(&self) -> &GridSpec {
        self.inner.grid()
    }
    #[inline]
    fn at(&self, idx: &Idx) -> f64 {
        if self.window.contains(idx) {
            self.inner.at(idx)
        } else {
            0.0
        }
    }
    fn support(&self) -> IndexBox {
        self.inner.support().intersect(&self.window)
    }
    fn uniform_value(&self) -> Option<f64> {
        self.inner.uniform_value()
    }
}

/// `|f|`.
pub struct Abs<'a, F: Field + ?Sized>(pub &'a F);

impl<'a, F: Field + ?Sized> Field for Abs<'a, F> {
    fn grid(&self) -> &GridSpec {
        self.0.grid()
    }
    #[inline]
    fn at(&self, idx: &Idx) -> f64 {
        self.0.at(idx).abs()
    }
    fn support(&self) -> IndexBox {
        self.0.support()
    }
    fn uniform_value(&self) -> Option<f64> {
        self.0.uniform_value().map(f64::abs)
    }
}

/// Real samples on a lattice, row-major, last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
    support: IndexBox,
    uniform: Option<f64>,
}

impl GridFunction {
    pub fn from_values(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                spec.len(),
                values.len()
            )));
        }
        let mut g = GridFunction { spec, values, support: IndexBox::empty(), uniform: None };
        g.refresh();
        Ok(g)
    }

    pub fn zeros(spec: GridSpec) -> Self {
        GridFunction { spec, values: vec![0.0; spec.len()], support: IndexBox::empty(), uniform: None }
    }

    pub fn constant(spec: GridSpec, c: f64) -> Self {
        GridFunction::from_values(spec, vec![c; spec.len()]).expect("length matches")
    }

    /// Sample `f` at every cell center.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Self {
        let mut v = Vec::with_capacity(spec.len());
        for k in 0..spec.len() {
            let idx = spec.unflat(k);
            let x = spec.center_of(&idx);
            v.push(f(&x[..spec.dim()]));
        }
        GridFunction::from_values(spec, v).expect("length matches")
    }

    /// Copy any field onto its lattice.
    pub fn from_field<F: Field + ?Sized>(field: &F) -> Self {
        let spec = *field.grid();
        let mut v = vec![0.0; spec.len()];
        let sup = field.support().intersect(&spec.domain());
        sup.for_each(|idx| {
            let k = spec.flat(&idx).expect("inside domain");
            v[k] = field.at(&idx);
        });
        GridFunction::from_values(spec, v).expect("length matches")
    }

    fn refresh(&mut self) {
        let spec = self.spec;
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        let mut any = false;
        for (k, &v) in self.values.iter().enumerate() {
            if v != 0.0 {
                any = true;
                let idx = spec.unflat(k);
                for a in 0..spec.dim() {
                    lo[a] = lo[a].min(idx[a]);
                    hi[a] = hi[a].max(idx[a] + 1);
                }
            }
        }
        if !any {
            self.support = IndexBox::empty();
            self.uniform = None;
            return;
        }
        for a in spec.dim()..3 {
            lo[a] = 0;
            hi[a] = 1;
        }
        self.support = IndexBox { lo, hi };
        let first = self.values[spec.flat(&lo).expect("in domain")];
        let mut uniform = true;
        self.support.for_each(|idx| {
            if uniform && self.values[spec.flat(&idx).expect("in domain")] != first {
                uniform = false;
            }
        });
        self.uniform = if uniform { Some(first) } else { None };
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    /// Bounding box of the nonzero samples.
    pub fn support_hint(&self) -> Option<IndexBox> {
        if self.support.is_empty() {
            None
        } else {
            Some(self.support)
        }
    }

    pub fn get(&self, idx: &Idx) -> f64 {
        match self.spec.flat(idx) {
            Some(k) => self.values[k],
            None => 0.0,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction::from_values(self.spec, self.values.iter().map(|&v| f(v)).collect())
            .expect("same length")
    }

    pub fn zip_with(&self, o: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        if self.spec != o.spec {
            return Err(Error::GridMismatch);
        }
        GridFunction::from_values(
            self.spec,
            self.values.iter().zip(&o.values).map(|(&a, &b)| f(a, b)).collect(),
        )
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    pub fn add(&self, o: &GridFunction) -> Result<GridFunction> {
        self.zip_with(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &GridFunction) -> Result<GridFunction> {
        self.zip_with(o, |a, b| a - b)
    }

    pub fn mul(&self, o: &GridFunction) -> Result<GridFunction> {
        self.zip_with(o, |a, b| a * b)
    }

    /// `f · 1_B`.
    pub fn restrict(&self, window: &IndexBox) -> GridFunction {
        let mut v = vec![0.0; self.values.len()];
        window.intersect(&self.spec.domain()).for_each(|idx| {
            let k = self.spec.flat(&idx).expect("in domain");
            v[k] = self.values[k];
        });
        GridFunction::from_values(self.spec, v).expect("same length")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `Σ f h^n`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spec.cell_volume()
    }

    /// Number of nonzero cells.
    pub fn support_count(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

impl Field for GridFunction {
    fn grid(&self) -> &GridSpec {
        &self.spec
    }
    #[inline]
    fn at(&self, idx: &Idx) -> f64 {
        let n = self.spec.points as i64;
        let mut k = 0i64;
        for &i in idx.iter().take(self.spec.dim) {
            if i < 0 || i >= n {
                return 0.0;
            }
            k = k * n + i;
        }
        self.values[k as usize]
    }
    fn support(&self) -> IndexBox {
        self.support
    }
    fn uniform_value(&self) -> Option<f64> {
        self.uniform
    }
}

/// Shapes tested at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// `|x - center| < radius`
    Ball { center: [f64; 3], radius: f64 },
    /// `inner < |x - center| < outer`
    Shell { center: [f64; 3], inner: f64, outer: f64 },
    /// closed coordinate box `lo ≤ x ≤ hi`
    Block { lo: [f64; 3], hi: [f64; 3] },
}

/// Indicator of a [`Shape`] evaluated on demand, never stored densely.
///
/// Useful when the lattice is too fine to allocate but the function is
/// cheap to test.
#[derive(Debug, Clone, Copy)]
pub struct Indicator {
    spec: GridSpec,
    shape: Shape,
    support: IndexBox,
}

impl Indicator {
    pub fn new(spec: GridSpec, shape: Shape) -> Self {
        let d = spec.dim();
        let (lo, hi) = match shape {
            Shape::Ball { center, radius } => {
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for a in 0..d {
                    lo[a] = center[a] - radius;
                    hi[a] = center[a] + radius;
                }
                (lo, hi)
            }
            Shape::Shell { center, outer, .. } => {
                let mut lo = [0.0; 3];
                let mut hi = [0.0; 3];
                for a in 0..d {
                    lo[a] = center[a] - outer;
                    hi[a] = center[a] + outer;
                }
                (lo, hi)
            }
            Shape::Block { lo, hi } => (lo, hi),
        };
        let support = spec.cells_in_closed_box(&lo, &hi).intersect(&spec.domain());
        Indicator { spec, shape, support }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn contains_point(&self, x: &[f64; 3]) -> bool {
        let d = self.spec.dim();
        let dist = |c: &[f64; 3]| -> f64 { (0..d).map(|a| (x[a] - c[a]).powi(2)).sum::<f64>().sqrt() };
        match &self.shape {
            Shape::Ball { center, radius } => dist(center) < *radius,
            Shape::Shell { center, inner, outer } => {
                let r = dist(center);
                r > *inner && r < *outer
            }
            Shape::Block { lo, hi } => (0..d).all(|a| x[a] >= lo[a] && x[a] <= hi[a]),
        }
    }

    pub fn to_grid(&self) -> GridFunction {
        GridFunction::from_field(self)
    }
}

impl Field for Indicator {
    fn grid(&self) -> &GridSpec {
        &self.spec
    }
    #[inline]
    fn at(&self, idx: &Idx) -> f64 {
        if !self.support.contains(idx) {
            return 0.0;
        }
        if self.contains_point(&self.spec.center_of(idx)) {
            1.0
        } else {
            0.0
        }
    }
    fn support(&self) -> IndexBox {
        self.support
    }
    fn uniform_value(&self) -> Option<f64> {
        match self.shape {
            Shape::Block { .. } if !self.support.is_empty() => Some(1.0),
            _ => None,
        }
    }
}

/// `⟨f⟩_{Q,r}` together with the cube and exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalAverage {
    pub value: f64,
    pub cube: DyadicCube,
    pub exponent: f64,
}

/// `(|Q|^{-1} Σ_{x ∈ Q} |f(x)|^r h^n)^{1/r}`, with `|Q|` the geometric volume.
pub fn local_average<F: Field + ?Sized>(f: &F, q: &DyadicCube, r: f64) -> Result<LocalAverage> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent(format!("r = {r} < 1")));
    }
    let spec = f.grid();
    let cells = q.cells(spec)?;
    let inside = cells.intersect(&spec.domain());
    if inside.is_empty() {
        return Err(Error::CubeBelowResolution);
    }
    let mut s = 0.0;
    inside.intersect(&f.support()).for_each(|idx| s += f.at(&idx).abs().powf(r));
    let vol = q.volume(spec.dim());
    let value = (s * spec.cell_volume() / vol).powf(1.0 / r);
    Ok(LocalAverage { value, cube: *q, exponent: r })
}

/// `(Σ |f|^p w h^n)^{1/p}`; `p = ∞` gives the sup norm.
pub fn lp_norm(f: &GridFunction, p: f64, w: Option<&GridFunction>) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidExponent(format!("p = {p} < 1")));
    }
    if let Some(w) = w {
        if w.spec() != f.spec() {
            return Err(Error::GridMismatch);
        }
        if w.values().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidWeight);
        }
    }
    if p.is_infinite() {
        return Ok(f.sup_norm());
    }
    let s: f64 = match w {
        None => f.values().iter().map(|v| v.abs().powf(p)).sum(),
        Some(w) => f.values().iter().zip(w.values()).map(|(v, w)| v.abs().powf(p) * w).sum(),
    };
    Ok((s * f.spec().cell_volume()).powf(1.0 / p))
}

/// `Σ f g h^n`.
pub fn inner(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    if f.spec() != g.spec() {
        return Err(Error::GridMismatch);
    }
    Ok(f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum::<f64>() * f.spec().cell_volume())
}

/// Result of [`translate`]: `clipped` is set when nonzero samples left the box.
#[derive(Debug, Clone)]
pub struct Translated {
    pub function: GridFunction,
    pub clipped: bool,
}

/// `τ_y f(x) = f(x - y)` for `y` a multiple of `h` on every axis.
pub fn translate(f: &GridFunction, y: &[f64]) -> Result<Translated> {
    let spec = f.spec();
    let h = spec.spacing();
    let mut cells = [0i64; 3];
    for a in 0..spec.dim() {
        let k = (y[a] / h).round();
        if (k * h - y[a]).abs() > 1e-9 * h {
            return Err(Error::NotLatticeVector);
        }
        cells[a] = k as i64;
    }
    Ok(translate_cells(f, &cells))
}

/// Translation by a whole number of cells per axis.
pub fn translate_cells(f: &GridFunction, shift: &Idx) -> Translated {
    let spec = *f.spec();
    let mut v = vec![0.0; spec.len()];
    let mut clipped = false;
    if let Some(sup) = f.support_hint() {
        sup.for_each(|idx| {
            let val = f.get(&idx);
            if val == 0.0 {
                return;
            }
            let mut t = idx;
            for a in 0..spec.dim() {
                t[a] += shift[a];
            }
            match spec.flat(&t) {
                Some(k) => v[k] = val,
                None => clipped = true,
            }
        });
    }
    Translated { function: GridFunction::from_values(spec, v).expect("same length"), clipped }
}

/// Prefix sums of `|f|^r` for O(2^n) box sums.
#[derive(Debug, Clone)]
pub struct BlockSums {
    spec: GridSpec,
    stride: usize,
    table: Vec<f64>,
}

impl BlockSums {
    pub fn new<F: Field + ?Sized>(f: &F, r: f64) -> Self {
        let spec = *f.grid();
        let n = spec.points();
        let s = n + 1;
        let d = spec.dim();
        let mut table = vec![0.0; s.pow(d as u32)];
        let sup = f.support().intersect(&spec.domain());
        sup.for_each(|idx| {
            let mut k = 0usize;
            for &i in idx.iter().take(d) {
                k = k * s + (i as usize + 1);
            }
            let v = f.at(&idx).abs();
            table[k] = if r == 1.0 { v } else { v.powf(r) };
        });
        // running sums along each axis
        for axis in 0..d {
            let step = s.pow((d - 1 - axis) as u32);
            for k in 0..table.len() {
                if (k / step) % s != 0 {
                    table[k] += table[k - step];
                }
            }
        }
        BlockSums { spec, stride: s, table }
    }

    /// `Σ_{cells in b ∩ domain} |f|^r` (no `h^n` factor).
    pub fn sum(&self, b: &IndexBox) -> f64 {
        let d = self.spec.dim();
        let n = self.spec.points() as i64;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..d {
            let l = b.lo[a].clamp(0, n);
            let h = b.hi[a].clamp(0, n);
            if h <= l {
                return 0.0;
            }
            lo[a] = l as usize;
            hi[a] = h as usize;
        }
        let s = self.stride;
        let mut total = 0.0;
        for corner in 0..(1usize << d) {
            let mut k = 0usize;
            let mut sign = 1.0;
            for a in 0..d {
                let take_lo = corner >> a & 1 == 1;
                k = k * s + if take_lo { lo[a] } else { hi[a] };
                if take_lo {
                    sign = -sign;
                }
            }
            total += sign * self.table[k];
        }
        total.max(0.0)
    }
}

const MAGIC: &[u8; 8] = b"SPHLGRID";
const FORMAT_VERSION: u32 = 1;

/// Binary container: magic `SPHLGRID`, `u32` version, `u32` dim, `u64` N,
/// `f64` L, then `N^dim` little-endian `f64` samples in row-major order.
pub fn write_binary<W: Write>(f: &GridFunction, mut out: W) -> Result<()> {
    let spec = f.spec();
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(spec.dim() as u32).to_le_bytes())?;
    out.write_all(&(spec.points() as u64).to_le_bytes())?;
    out.write_all(&spec.extent().to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * f.values().len());
    for v in f.values() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut inp: R) -> Result<GridFunction> {
    let mut magic = [0u8; 8];
    inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    inp.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    inp.read_exact(&mut b4)?;
    let dim = u32::from_le_bytes(b4) as usize;
    inp.read_exact(&mut b8)?;
    let points = u64::from_le_bytes(b8) as usize;
    inp.read_exact(&mut b8)?;
    let extent = f64::from_le_bytes(b8);
    let spec = GridSpec::new(dim, points, extent)?;
    let mut raw = vec![0u8; 8 * spec.len()];
    inp.read_exact(&mut raw)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    GridFunction::from_values(spec, values)
}

/// Largest lattice accepted by [`write_csv`].
pub const CSV_MAX_CELLS: usize = 1 << 16;

/// CSV with columns `i0,i1[,i2],x0,x1[,x2],value`.
pub fn write_csv<W: Write>(f: &GridFunction, out: W) -> Result<()> {
    let spec = f.spec();
    if spec.len() > CSV_MAX_CELLS {
        return Err(Error::Format(format!("CSV export limited to {CSV_MAX_CELLS} cells")));
    }
    let d = spec.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..d).map(|a| format!("i{a}")).collect();
    header.extend((0..d).map(|a| format!("x{a}")));
    header.push("value".into());
    w.write_record(&header)?;
    for (k, v) in f.values().iter().enumerate() {
        let idx = spec.unflat(k);
        let x = spec.center_of(&idx);
        let mut rec: Vec<String> = idx[..d].iter().map(|i| i.to_string()).collect();
        rec.extend(x[..d].iter().map(|c| format!("{c}")));
        rec.push(format!("{v}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
