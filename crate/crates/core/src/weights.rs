//! Muckenhoupt and reverse Hölder constants over shifted dyadic cubes, power
//! weights, and refinement-trend probes for the maximal operators.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyadic::{grid_count, DyadicCube};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, BlockSums, GridFunction, GridSpec, IndexBox};
use crate::operators::{full_maximal, lacunary_maximal, AverageOptions, RadiusNet};
use crate::quadrature::{origin_cell_average, touches_origin};

/// A strictly positive weight with cached duals and computed constants.
#[derive(Debug, Clone)]
pub struct WeightProfile {
    pub w: GridFunction,
    sigma: HashMap<u64, GridFunction>,
    /// Constants computed so far, keyed like `"A_2"`, `"A_1"`, `"RH_1.5"`.
    pub constants: BTreeMap<String, f64>,
}

impl WeightProfile {
    pub fn new(w: GridFunction) -> Result<Self> {
        if w.values().iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidWeight);
        }
        Ok(WeightProfile { w, sigma: HashMap::new(), constants: BTreeMap::new() })
    }

    pub fn spec(&self) -> &GridSpec {
        self.w.spec()
    }

    /// `σ = w^{1-p'}`, cached per `p`.
    pub fn dual_sigma(&mut self, p: f64) -> Result<&GridFunction> {
        if !(p > 1.0) {
            return Err(Error::InvalidExponent(format!("p = {p} must exceed 1")));
        }
        let e = 1.0 - p / (p - 1.0);
        let w = &self.w;
        Ok(self.sigma.entry(p.to_bits()).or_insert_with(|| w.map(|v| v.powf(e))))
    }
}

/// All cubes of all shifted grids with level in `[floor, top]` whose cells
/// lie inside the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CubeFamily {
    pub floor: i32,
    pub top: i32,
}

impl CubeFamily {
    /// From single cells up to half the box.
    pub fn for_grid(spec: &GridSpec) -> Self {
        let res = spec.resolution_level();
        CubeFamily { floor: res, top: res + (spec.points() as f64).log2() as i32 - 1 }
    }

    pub fn with_floor(spec: &GridSpec, floor: i32) -> Result<Self> {
        if floor < spec.resolution_level() {
            return Err(Error::CubeBelowResolution);
        }
        let f = Self::for_grid(spec);
        Ok(CubeFamily { floor, top: f.top.max(floor) })
    }

    /// Cell boxes of the level-`q` cubes, all shifts.
    fn boxes(&self, spec: &GridSpec, q: i32) -> Result<Vec<IndexBox>> {
        let dom = spec.domain();
        let mut out = Vec::new();
        for shift in 0..grid_count(spec.dim()) {
            for c in DyadicCube::covering(spec, shift, q, &dom)? {
                let b = c.cells(spec)?;
                if dom.contains_box(&b) {
                    out.push(b);
                }
            }
        }
        Ok(out)
    }
}

fn sup_over<F: Fn(&IndexBox) -> f64 + Sync + Send>(boxes: &[IndexBox], f: F) -> f64 {
    boxes.par_iter().map(f).reduce(|| 0.0, f64::max)
}

/// `sup_Q ⟨w⟩_Q ⟨σ⟩_Q^{p-1}` over `family`.
pub fn ap_constant(w: &mut WeightProfile, p: f64, family: &CubeFamily) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::InvalidExponent(format!("p = {p}; use a1_constant at p = 1")));
    }
    let spec = *w.spec();
    let ws = BlockSums::new(&w.w, 1.0);
    let ss = BlockSums::new(w.dual_sigma(p)?, 1.0);
    let mut best = 0.0f64;
    for q in family.floor..=family.top {
        let boxes = family.boxes(&spec, q)?;
        let n = boxes.first().map_or(1.0, |b| b.count() as f64);
        best = best.max(sup_over(&boxes, |b| (ws.sum(b) / n) * (ss.sum(b) / n).powf(p - 1.0)));
    }
    w.constants.insert(format!("A_{p}"), best);
    Ok(best)
}

/// `sup_Q ⟨w⟩_Q / min_Q w`.
pub fn a1_constant(w: &mut WeightProfile, family: &CubeFamily) -> Result<f64> {
    let spec = *w.spec();
    let d = spec.dim();
    let n = spec.points();
    let ws = BlockSums::new(&w.w, 1.0);
    // min over [i, i+k)^n, valid wherever the block fits
    let mut pool: Vec<f64> = w.w.values().to_vec();
    let mut k = 1usize;
    let res = spec.resolution_level();
    let mut best = 0.0f64;
    let stride = |a: usize| n.pow((d - 1 - a) as u32);
    for q in res..=family.top {
        let side = 1usize << (q - res);
        while k < side {
            let mut next = pool.clone();
            for (flat, v) in next.iter_mut().enumerate() {
                let mut idx = [0usize; 3];
                let mut rest = flat;
                for a in 0..d {
                    idx[a] = rest / stride(a);
                    rest %= stride(a);
                }
                for mask in 1..1usize << d {
                    let mut off = 0;
                    let mut ok = true;
                    for a in 0..d {
                        if mask >> a & 1 == 1 {
                            if idx[a] + k >= n {
                                ok = false;
                                break;
                            }
                            off += k * stride(a);
                        }
                    }
                    if ok {
                        *v = v.min(pool[flat + off]);
                    }
                }
            }
            pool = next;
            k *= 2;
        }
        if q < family.floor {
            continue;
        }
        let boxes = family.boxes(&spec, q)?;
        let cnt = (side as f64).powi(d as i32);
        best = best.max(sup_over(&boxes, |b| {
            let lo = spec.flat(&b.lo).expect("box inside domain");
            ws.sum(b) / cnt / pool[lo]
        }));
    }
    w.constants.insert("A_1".into(), best);
    Ok(best)
}

/// `sup_Q ⟨w⟩_{Q,r} / ⟨w⟩_Q`.
pub fn rh_constant(w: &mut WeightProfile, r: f64, family: &CubeFamily) -> Result<f64> {
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent(format!("r = {r} < 1")));
    }
    let spec = *w.spec();
    let w1 = BlockSums::new(&w.w, 1.0);
    let wr = BlockSums::new(&w.w, r);
    let mut best = 0.0f64;
    for q in family.floor..=family.top {
        let boxes = family.boxes(&spec, q)?;
        let n = boxes.first().map_or(1.0, |b| b.count() as f64);
        best = best.max(sup_over(&boxes, |b| (wr.sum(b) / n).powf(1.0 / r) / (w1.sum(b) / n)));
    }
    w.constants.insert(format!("RH_{r}"), best);
    Ok(best)
}

/// `|x|^a` sampled at cell centers; the `2^n` cells meeting the origin get
/// their exact cell mean. Needs `a > -n`.
pub fn power_weight(spec: GridSpec, a: f64) -> Result<GridFunction> {
    let n = spec.dim() as f64;
    if !(a > -n) || !a.is_finite() {
        return Err(Error::InvalidWeight);
    }
    let h = spec.spacing();
    let origin = origin_cell_average(&spec, |c| c.powf(a) * h.powf(a + n) / (a + n));
    let mut v = Vec::with_capacity(spec.len());
    for k in 0..spec.len() {
        let idx = spec.unflat(k);
        if touches_origin(&spec, &idx) {
            v.push(origin);
        } else {
            let x = spec.center_of(&idx);
            v.push(x.iter().map(|c| c * c).sum::<f64>().sqrt().powf(a));
        }
    }
    GridFunction::from_values(spec, v)
}

/// Weights that can be rebuilt on every refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    Unit,
    Power { a: f64 },
}

impl WeightSpec {
    pub fn build(&self, spec: GridSpec) -> Result<WeightProfile> {
        let w = match self {
            WeightSpec::Unit => GridFunction::constant(spec, 1.0),
            WeightSpec::Power { a } => power_weight(spec, *a)?,
        };
        WeightProfile::new(w)
    }

    pub fn label(&self) -> String {
        match self {
            WeightSpec::Unit => "1".into(),
            WeightSpec::Power { a } => format!("|x|^{a}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    Divergent,
    Inconclusive,
}

impl Verdict {
    /// `Divergent` if every step grows by more than `factor`, `Stable` if the
    /// series stays within a factor `factor`, otherwise `Inconclusive`.
    pub fn from_series(values: &[f64], factor: f64) -> Verdict {
        if values.len() < 2 {
            return Verdict::Inconclusive;
        }
        if values.windows(2).all(|w| w[1] > factor * w[0]) {
            return Verdict::Divergent;
        }
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(0.0, f64::max);
        if lo > 0.0 && hi / lo < factor {
            Verdict::Stable
        } else {
            Verdict::Inconclusive
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Stable => "stable",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// A constant tracked across grid refinements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTrend {
    pub points: Vec<usize>,
    pub values: Vec<f64>,
    pub verdict: Verdict,
}

/// Refinement chain `base, base.refined(), …` with `count` refinements.
pub fn refinement_chain(base: GridSpec, count: usize) -> Result<Vec<GridSpec>> {
    let mut out = vec![base];
    for _ in 0..count {
        let next = out.last().expect("nonempty").refined()?;
        out.push(next);
    }
    Ok(out)
}

/// Evaluate `constant` on `weight` over a refinement chain.
pub fn constant_trend(
    weight: &WeightSpec,
    grids: &[GridSpec],
    factor: f64,
    constant: impl Fn(&mut WeightProfile) -> Result<f64>,
) -> Result<RefinementTrend> {
    let mut values = Vec::new();
    for g in grids {
        let mut w = weight.build(*g)?;
        values.push(constant(&mut w)?);
    }
    Ok(RefinementTrend { points: grids.iter().map(|g| g.points()).collect(), verdict: Verdict::from_series(&values, factor), values })
}

/// Constants of `w = u1^{1/ρ} u2^{1 - p/r}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub u1_a1: RefinementTrend,
    pub u2_a1: RefinementTrend,
    /// `[w]_{A_{p/r}}` per grid.
    pub ap: RefinementTrend,
    /// `[w]_{RH_ρ}` per grid.
    pub rh: RefinementTrend,
}

/// Form `w = u1^{1/ρ} u2^{1-p/r}` on every grid of the chain and track
/// `[w]_{A_{p/r}}` and `[w]_{RH_ρ}`. Fails if `u1` or `u2` is visibly not in `A_1`.
pub fn factorization_check(
    u1: &WeightSpec,
    u2: &WeightSpec,
    rho: f64,
    r: f64,
    p: f64,
    grids: &[GridSpec],
    factor: f64,
) -> Result<FactorizationReport> {
    if !(rho >= 1.0 && r > 1.0 && p > r) || !rho.is_finite() {
        return Err(Error::InvalidExponent(format!("need ρ ≥ 1 and 1 < r < p, got ρ = {rho}, r = {r}, p = {p}")));
    }
    let fam = |g: &GridSpec| CubeFamily::for_grid(g);
    let u1_a1 = constant_trend(u1, grids, factor, |w| a1_constant(w, &fam(w.spec())))?;
    let u2_a1 = constant_trend(u2, grids, factor, |w| a1_constant(w, &fam(w.spec())))?;
    if u1_a1.verdict == Verdict::Divergent || u2_a1.verdict == Verdict::Divergent {
        return Err(Error::InvalidWeight);
    }
    let e2 = 1.0 - p / r;
    let mut ap = Vec::new();
    let mut rh = Vec::new();
    for g in grids {
        let a = u1.build(*g)?;
        let b = u2.build(*g)?;
        let w = a.w.zip_with(&b.w, |x, y| x.powf(1.0 / rho) * y.powf(e2))?;
        let mut wp = WeightProfile::new(w)?;
        ap.push(ap_constant(&mut wp, p / r, &fam(g))?);
        rh.push(rh_constant(&mut wp, rho, &fam(g))?);
    }
    let points: Vec<usize> = grids.iter().map(|g| g.points()).collect();
    Ok(FactorizationReport {
        u1_a1,
        u2_a1,
        ap: RefinementTrend { points: points.clone(), verdict: Verdict::from_series(&ap, factor), values: ap },
        rh: RefinementTrend { points, verdict: Verdict::from_series(&rh, factor), values: rh },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeOperator {
    Lacunary,
    Full,
}

impl ProbeOperator {
    pub fn name(self) -> &'static str {
        match self {
            ProbeOperator::Lacunary => "lacunary",
            ProbeOperator::Full => "full",
        }
    }
}

/// A corpus function rebuilt on every grid of a refinement chain.
pub struct CorpusItem {
    pub name: String,
    pub build: Box<dyn Fn(GridSpec) -> Result<GridFunction> + Send + Sync>,
}

impl CorpusItem {
    pub fn new(name: &str, build: impl Fn(GridSpec) -> Result<GridFunction> + Send + Sync + 'static) -> Self {
        CorpusItem { name: name.to_string(), build: Box::new(build) }
    }

    /// Indicator of the `2^n` cells around the origin; shrinks with `h`.
    pub fn point_mass() -> Self {
        CorpusItem::new("point_mass", |spec| {
            let v = (0..spec.len()).map(|k| f64::from(u8::from(touches_origin(&spec, &spec.unflat(k))))).collect();
            GridFunction::from_values(spec, v)
        })
    }

    /// Indicator of a fixed ball about the origin.
    pub fn ball(radius: f64) -> Self {
        CorpusItem::new(&format!("ball_{radius}"), move |spec| {
            Ok(GridFunction::from_fn(spec, |x| f64::from(x.iter().map(|c| c * c).sum::<f64>() < radius * radius)))
        })
    }
}

/// Probe parameters shared by every case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub grids: Vec<GridSpec>,
    pub averages: AverageOptions,
    /// Largest radius; the smallest is `h`.
    pub t_max: f64,
    /// Growth factor separating the verdicts.
    pub factor: f64,
}

/// One row of the verdict table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub weight: String,
    pub p: f64,
    pub operator: String,
    pub refinement: usize,
    pub points: usize,
    /// Corpus maximum of `‖Mf‖_{L^p(w)} / ‖f‖_{L^p(w)}`.
    pub ratio: f64,
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub weight: WeightSpec,
    pub p: f64,
    pub operator: ProbeOperator,
    /// Per grid, per corpus item.
    pub ratios: Vec<Vec<f64>>,
    pub maxima: Vec<f64>,
    pub verdict: Verdict,
}

impl ProbeReport {
    pub fn rows(&self, grids: &[GridSpec]) -> Vec<ProbeRow> {
        self.maxima
            .iter()
            .enumerate()
            .map(|(k, &m)| ProbeRow {
                weight: self.weight.label(),
                p: self.p,
                operator: self.operator.name().into(),
                refinement: k,
                points: grids[k].points(),
                ratio: m,
                verdict: self.verdict.name().into(),
            })
            .collect()
    }
}

/// `M f` on the whole lattice for the probe's radius range.
pub fn probe_maximal(op: ProbeOperator, f: &GridFunction, cfg: &ProbeConfig) -> Result<GridFunction> {
    let spec = f.spec();
    let h = spec.spacing();
    match op {
        ProbeOperator::Lacunary => {
            let j0 = h.log2().floor() as i32 + 1;
            let j1 = cfg.t_max.log2().floor() as i32;
            Ok(lacunary_maximal(f, (j0, j1), &cfg.averages)?.values)
        }
        ProbeOperator::Full => {
            let net = RadiusNet::for_grid(spec, h, cfg.t_max)?;
            Ok(full_maximal(f, &net, &cfg.averages)?.values)
        }
    }
}

/// Run several `(w, p)` cases on one corpus; each maximal function is
/// computed once per grid and shared by all cases.
pub fn probe_table(
    op: ProbeOperator,
    cases: &[(WeightSpec, f64)],
    corpus: &[CorpusItem],
    cfg: &ProbeConfig,
) -> Result<Vec<ProbeReport>> {
    if cases.iter().any(|c| !(c.1 > 1.0)) {
        return Err(Error::InvalidExponent("probe needs p > 1".into()));
    }
    if cfg.grids.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2 });
    }
    let mut ratios = vec![vec![vec![0.0; corpus.len()]; cfg.grids.len()]; cases.len()];
    for (gi, g) in cfg.grids.iter().enumerate() {
        let weights: Vec<GridFunction> = cases.iter().map(|c| Ok(c.0.build(*g)?.w)).collect::<Result<_>>()?;
        for (ci, item) in corpus.iter().enumerate() {
            let f = (item.build)(*g)?;
            let mf = probe_maximal(op, &f, cfg)?;
            for (k, (w, (_, p))) in weights.iter().zip(cases).enumerate() {
                let den = lp_norm(&f, *p, Some(w))?;
                ratios[k][gi][ci] = if den > 0.0 { lp_norm(&mf, *p, Some(w))? / den } else { 0.0 };
            }
        }
    }
    Ok(cases
        .iter()
        .zip(ratios)
        .map(|(&(weight, p), r)| {
            let maxima: Vec<f64> = r.iter().map(|row| row.iter().cloned().fold(0.0, f64::max)).collect();
            ProbeReport { weight, p, operator: op, verdict: Verdict::from_series(&maxima, cfg.factor), ratios: r, maxima }
        })
        .collect())
}

/// Refinement trend of `‖Mf‖_{L^p(w)}/‖f‖_{L^p(w)}` over the corpus.
pub fn weighted_boundedness_probe(
    op: ProbeOperator,
    weight: &WeightSpec,
    p: f64,
    corpus: &[CorpusItem],
    cfg: &ProbeConfig,
) -> Result<ProbeReport> {
    Ok(probe_table(op, &[(*weight, p)], corpus, cfg)?.remove(0))
}

pub fn write_probe_csv<W: std::io::Write>(rows: &[ProbeRow], out: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}
