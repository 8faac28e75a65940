use crate::dyadic::collection::{DensitySet, SparseCollection, SparseCube};
use crate::dyadic::cube::DyadicCube;
use crate::error::{Error, Result};
use crate::grid::{BlockSums, Field, GridSpec, IndexBox};

/// Default stopping threshold `2·4^n`.
pub fn default_threshold(dim: usize) -> f64 {
    2.0 * 4f64.powi(dim as i32)
}

/// Default `σ = s(1 + 10^-3)` for the second function's stopping test.
pub fn default_sigma(s: f64) -> f64 {
    s * (1.0 + 1e-3)
}

/// Largest cube count a single construction may produce.
pub const MAX_CUBES: usize = 1 << 20;

/// Block sums of `|f1|^r` and `|f2|^σ`, shared by every stopping test.
pub struct StoppingData {
    spec: GridSpec,
    pub r: f64,
    pub sigma: f64,
    s1: BlockSums,
    s2: BlockSums,
    max1: f64,
    max2: f64,
}

/// Result of one stopping step below a cube.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingStep {
    pub children: Vec<DyadicCube>,
    /// Threshold actually used after doubling.
    pub threshold: f64,
    pub escalations: u32,
    /// Some floor cube could still have a finer stopping subcube.
    pub truncated: bool,
}

impl StoppingData {
    pub fn new<F1: Field + ?Sized, F2: Field + ?Sized>(f1: &F1, f2: &F2, r: f64, sigma: f64) -> Result<Self> {
        if f1.grid() != f2.grid() {
            return Err(Error::GridMismatch);
        }
        if !(r >= 1.0) || !(sigma >= 1.0) {
            return Err(Error::InvalidExponent(format!("r = {r}, σ = {sigma}")));
        }
        let spec = *f1.grid();
        let max_of = |f: &dyn Fn(&crate::grid::Idx) -> f64, sup: IndexBox| {
            let mut m = 0.0f64;
            sup.intersect(&spec.domain()).for_each(|i| m = m.max(f(&i).abs()));
            m
        };
        let max1 = max_of(&|i| f1.at(i), f1.support());
        let max2 = max_of(&|i| f2.at(i), f2.support());
        Ok(StoppingData {
            spec,
            r,
            sigma,
            s1: BlockSums::new(f1, r),
            s2: BlockSums::new(f2, sigma),
            max1,
            max2,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// `(⟨f1⟩_{Q,r}, ⟨f2⟩_{Q,σ})`.
    pub fn averages(&self, q: &DyadicCube) -> Result<(f64, f64)> {
        let cells = q.cells(&self.spec)?;
        let scale = self.spec.cell_volume() / q.volume(self.spec.dim());
        let a = (self.s1.sum(&cells) * scale).powf(1.0 / self.r);
        let b = (self.s2.sum(&cells) * scale).powf(1.0 / self.sigma);
        Ok((a, b))
    }

    fn raw(&self, q: &DyadicCube) -> Result<(f64, f64)> {
        let cells = q.cells(&self.spec)?;
        Ok((self.s1.sum(&cells), self.s2.sum(&cells)))
    }

    /// Maximal proper subcubes `P` of `q0` with level `≥ q_min` whose
    /// averages exceed `c` times those of `q0`, with `c` doubled until the
    /// union has measure below `|q0|/2`.
    pub fn step(&self, q0: &DyadicCube, c: f64, q_min: i32) -> Result<StoppingStep> {
        if !(c > 1.0) {
            return Err(Error::ThresholdTooSmall);
        }
        if q_min < self.spec.resolution_level() {
            return Err(Error::CubeBelowResolution);
        }
        let d = self.spec.dim();
        let (a1, a2) = self.averages(q0)?;
        let mut c = c;
        let mut escalations = 0;
        loop {
            let (children, truncated) = self.scan(q0, c * a1, c * a2, q_min)?;
            let measure: f64 = children.iter().map(|p| p.volume(d)).sum();
            if measure < 0.5 * q0.volume(d) {
                return Ok(StoppingStep { children, threshold: c, escalations, truncated });
            }
            c *= 2.0;
            escalations += 1;
        }
    }

    fn scan(&self, q0: &DyadicCube, t1: f64, t2: f64, q_min: i32) -> Result<(Vec<DyadicCube>, bool)> {
        let d = self.spec.dim();
        let hd = self.spec.cell_volume();
        let mut out = Vec::new();
        let mut truncated = false;
        if q0.level <= q_min {
            truncated = self.floor_active(q0, t1, t2)?;
            return Ok((out, truncated));
        }
        let mut stack = q0.children(d);
        while let Some(p) = stack.pop() {
            let (s1, s2) = self.raw(&p)?;
            if s1 == 0.0 && s2 == 0.0 {
                continue;
            }
            let vol = p.volume(d);
            let a1 = (s1 * hd / vol).powf(1.0 / self.r);
            let a2 = (s2 * hd / vol).powf(1.0 / self.sigma);
            if a1 > t1 || a2 > t2 {
                out.push(p);
            } else if p.level > q_min {
                stack.extend(p.children(d));
            } else if !truncated && self.floor_active(&p, t1, t2)? {
                truncated = true;
            }
        }
        out.sort();
        Ok((out, truncated))
    }

    /// Whether a single cell inside `p` would already exceed a threshold.
    fn floor_active(&self, p: &DyadicCube, t1: f64, t2: f64) -> Result<bool> {
        if self.max1 <= t1 && self.max2 <= t2 {
            return Ok(false);
        }
        let cells = p.cells(&self.spec)?.intersect(&self.spec.domain());
        let mut hit = false;
        cells.for_each(|idx| {
            if hit {
                return;
            }
            let b = IndexBox { lo: idx, hi: [idx[0] + 1, idx[1] + 1, idx[2] + 1] };
            let v1 = self.s1.sum(&b).powf(1.0 / self.r);
            let v2 = self.s2.sum(&b).powf(1.0 / self.sigma);
            hit = v1 > t1 || v2 > t2;
        });
        Ok(hit)
    }
}

/// Maximal subcubes of `q0` where `⟨f1⟩_{P,r} > C⟨f1⟩_{q0,r}` or
/// `⟨f2⟩_{P,s} > C⟨f2⟩_{q0,s}`, searched down to the lattice resolution.
/// Only cells inside `q0` are read, so both functions are effectively
/// restricted to `q0`. The threshold is used as given.
pub fn stopping_children<F1: Field + ?Sized, F2: Field + ?Sized>(
    f1: &F1,
    f2: &F2,
    q0: &DyadicCube,
    r: f64,
    s: f64,
    c: f64,
) -> Result<Vec<DyadicCube>> {
    if !(c > 1.0) {
        return Err(Error::ThresholdTooSmall);
    }
    let data = StoppingData::new(f1, f2, r, s)?;
    let (a1, a2) = data.averages(q0)?;
    let (children, _) = data.scan(q0, c * a1, c * a2, data.spec.resolution_level())?;
    Ok(children)
}

/// Parameters of [`build_sparse_collection`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildParams {
    pub r: f64,
    /// Exponent for the second function's stopping test (`σ > s`).
    pub sigma: f64,
    pub threshold: f64,
    pub min_level: i32,
}

impl BuildParams {
    pub fn new(dim: usize, r: f64, s: f64, min_level: i32) -> Self {
        BuildParams { r, sigma: default_sigma(s), threshold: default_threshold(dim), min_level }
    }
}

/// Recursive stopping-time construction below `root`: add the root, find its
/// stopping children, recurse into each. `E_S` is `S` minus its children.
pub fn build_sparse_collection<F1: Field + ?Sized, F2: Field + ?Sized>(
    f1: &F1,
    f2: &F2,
    root: &DyadicCube,
    params: &BuildParams,
) -> Result<SparseCollection> {
    let data = StoppingData::new(f1, f2, params.r, params.sigma)?;
    build_from_data(&data, root, params)
}

/// Same as [`build_sparse_collection`] with precomputed block sums.
pub fn build_from_data(data: &StoppingData, root: &DyadicCube, params: &BuildParams) -> Result<SparseCollection> {
    if params.min_level < data.spec.resolution_level() || root.level < params.min_level {
        return Err(Error::CubeBelowResolution);
    }
    let mut out = SparseCollection::new(data.spec);
    let mut queue = vec![*root];
    while let Some(s) = queue.pop() {
        let step = data.step(&s, params.threshold, params.min_level)?;
        out.truncated |= step.truncated;
        out.escalations += step.escalations;
        queue.extend(step.children.iter().copied());
        out.cubes.push(SparseCube { cube: s, density: DensitySet::Minus { removed: step.children }, m_set: None });
        if out.cubes.len() > MAX_CUBES {
            return Err(Error::Domain("sparse collection exceeds size limit".into()));
        }
    }
    out.cubes.sort_by(|a, b| b.cube.level.cmp(&a.cube.level).then(a.cube.cmp(&b.cube)));
    Ok(out)
}

/// `Σ_Q ⟨φ⟩_{Q,s}|Q| / (⟨φ⟩_{Q0,t}|Q0|)` with `Q0` the largest cube of the
/// collection, which must contain all others.
pub fn carleson_embedding_check<F: Field + ?Sized>(sc: &SparseCollection, phi: &F, s: f64, t: f64) -> Result<f64> {
    if !(s >= 1.0 && s < t) {
        return Err(Error::InvalidExponent(format!("need 1 ≤ s < t, got s = {s}, t = {t}")));
    }
    let spec = &sc.grid;
    let d = spec.dim();
    let top = sc.cubes.iter().map(|c| c.cube).max_by_key(|c| c.level).ok_or(Error::Domain("empty collection".into()))?;
    let top_cells = top.cells(spec)?;
    for c in &sc.cubes {
        if !top_cells.contains_box(&c.cube.cells(spec)?) {
            return Err(Error::Domain("collection is not inside a single top cube".into()));
        }
    }
    let ss = BlockSums::new(phi, s);
    let hd = spec.cell_volume();
    let mut num = 0.0;
    for c in &sc.cubes {
        let v = c.cube.volume(d);
        num += (ss.sum(&c.cube.cells(spec)?) * hd / v).powf(1.0 / s) * v;
    }
    let ts = BlockSums::new(phi, t);
    let v0 = top.volume(d);
    let den = (ts.sum(&top_cells) * hd / v0).powf(1.0 / t) * v0;
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok(num / den)
}
