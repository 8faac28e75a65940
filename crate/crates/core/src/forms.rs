//! `(r, s)` and `(r, s)_m` sparse forms and the domination experiment.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::dyadic::{
    build_from_data, certify_sparsity, grid_count, BuildParams, DensitySet, DyadicCube, SparseCollection, SparseCube,
    StoppingData,
};
use crate::error::{Error, Result};
use crate::grid::{lp_norm, Abs, BlockSums, Field, GridFunction, GridSpec, Idx};
use crate::operators::{full_maximal_at, lacunary_argmax_at, AverageOptions, RadiusNet};
use crate::regions::{region, RegionKind};

/// `Σ_S |S|⟨f⟩_{S,r}⟨g 1_{F_S}⟩_{S,s}` with its terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseFormValue {
    pub grid: GridSpec,
    pub value: f64,
    pub per_cube_terms: Vec<(DyadicCube, f64)>,
    pub r: f64,
    pub s: f64,
    pub m_sets: bool,
}

fn check_exponents(r: f64, s: f64) -> Result<()> {
    if !(r >= 1.0 && s >= 1.0 && r.is_finite() && s.is_finite()) {
        return Err(Error::InvalidExponent(format!("need 1 ≤ r, s < ∞, got r = {r}, s = {s}")));
    }
    Ok(())
}

/// Evaluate the sparse form of `sc` on `(f, g)`. With `use_m_sets` the
/// second average is over `g 1_{F_S}`, otherwise over `g 1_S`.
pub fn evaluate_form<F: Field + ?Sized, G: Field + ?Sized>(
    sc: &SparseCollection,
    f: &F,
    g: &G,
    r: f64,
    s: f64,
    use_m_sets: bool,
) -> Result<SparseFormValue> {
    check_exponents(r, s)?;
    let spec = sc.grid;
    if *f.grid() != spec || *g.grid() != spec {
        return Err(Error::GridMismatch);
    }
    if use_m_sets && !sc.cubes.iter().all(|c| c.m_set.is_some()) {
        return Err(Error::MissingMSets);
    }
    let d = spec.dim();
    let hd = spec.cell_volume();
    let fs = BlockSums::new(f, r);
    let gs = if use_m_sets { None } else { Some(BlockSums::new(g, s)) };
    let mut per_cube_terms = Vec::with_capacity(sc.len());
    let mut value = 0.0;
    for c in &sc.cubes {
        let cells = c.cube.cells(&spec)?;
        let vol = c.cube.volume(d);
        let af = (fs.sum(&cells) * hd / vol).powf(1.0 / r);
        let gsum = match (&gs, &c.m_set) {
            (Some(gs), _) => gs.sum(&cells),
            (None, Some(m)) => m.iter().map(|&k| g.at(&spec.unflat(k as usize)).abs().powf(s)).sum(),
            (None, None) => unreachable!("checked above"),
        };
        let ag = (gsum * hd / vol).powf(1.0 / s);
        let term = vol * af * ag;
        value += term;
        per_cube_terms.push((c.cube, term));
    }
    Ok(SparseFormValue { grid: spec, value, per_cube_terms, r, s, m_sets: use_m_sets })
}

/// Maximal operator tested by [`domination_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominationOperator {
    /// `sup_{j0 ≤ j ≤ j1} A_{2^j}`.
    Lacunary { j_range: (i32, i32) },
    /// `sup` over a radius net.
    Full { net: RadiusNet },
}

impl DominationOperator {
    fn region(&self) -> RegionKind {
        match self {
            DominationOperator::Lacunary { .. } => RegionKind::Lac,
            DominationOperator::Full { .. } => RegionKind::Full,
        }
    }

    /// Level `q` of the dyadic piece carrying radius `t`: `t = 2^{q-2}` for
    /// the lacunary operator, `2^{q-3} ≤ t < 2^{q-2}` for the full one.
    fn level_of(&self, t: f64) -> i32 {
        match self {
            DominationOperator::Lacunary { .. } => t.log2().round() as i32 + 2,
            DominationOperator::Full { .. } => t.log2().floor() as i32 + 3,
        }
    }

    fn levels(&self) -> Result<(i32, i32)> {
        match self {
            DominationOperator::Lacunary { j_range } => {
                if j_range.0 > j_range.1 {
                    return Err(Error::EmptyRange);
                }
                Ok((j_range.0 + 2, j_range.1 + 2))
            }
            DominationOperator::Full { net } => Ok((self.level_of(net.t_min()), self.level_of(net.t_max()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominationOptions {
    pub averages: AverageOptions,
    /// Reject exponents outside the open region of the operator.
    pub check_region: bool,
}

impl Default for DominationOptions {
    fn default() -> Self {
        DominationOptions { averages: AverageOptions::quadrature(), check_region: true }
    }
}

/// Outcome of [`domination_experiment`].
#[derive(Debug, Clone)]
pub struct Domination {
    /// `⟨Mf, g⟩ / Σ_grids Λ`.
    pub c_emp: f64,
    pub pairing: f64,
    pub form: f64,
    /// One collection per shifted grid, each with `F_S` sets.
    pub collections: Vec<SparseCollection>,
    pub forms: Vec<SparseFormValue>,
}

/// `⟨M f, g⟩` together with the maximizing radius at every cell of `supp g`.
#[derive(Debug, Clone)]
pub struct Pairing {
    pub targets: Vec<Idx>,
    /// `(M f(x), argmax radius)` per target.
    pub maxima: Vec<(f64, f64)>,
    pub value: f64,
}

pub fn maximal_pairing<F: Field + ?Sized, G: Field + ?Sized>(
    f: &F,
    g: &G,
    op: &DominationOperator,
    opts: &AverageOptions,
) -> Result<Pairing> {
    let spec = *f.grid();
    if *g.grid() != spec {
        return Err(Error::GridMismatch);
    }
    let mut targets: Vec<Idx> = Vec::new();
    g.support().intersect(&spec.domain()).for_each(|i| {
        if g.at(&i) != 0.0 {
            targets.push(i)
        }
    });
    let maxima = match op {
        DominationOperator::Lacunary { j_range } => lacunary_argmax_at(f, *j_range, &targets, opts)?,
        DominationOperator::Full { net } => full_maximal_at(f, net, &targets, opts)?,
    };
    let value = targets.iter().zip(&maxima).map(|(i, m)| g.at(i).abs() * m.0).sum::<f64>() * spec.cell_volume();
    Ok(Pairing { targets, maxima, value })
}

/// Compare `⟨M f, g⟩` with the `(r, s)_m` forms of the stopping collections.
///
/// `M f(x) = Σ_grids A_{Q(x)} f(x)` with `Q(x)` the cube of the maximizing
/// radius's level that contains `x`. Each shifted grid is processed from the
/// top-level cubes meeting `supp g`, and `F_S` collects the points whose
/// `Q(x)` has `S` as its smallest collection ancestor.
pub fn domination_experiment<F: Field + ?Sized, G: Field + ?Sized>(
    f: &F,
    g: &G,
    op: &DominationOperator,
    r: f64,
    s: f64,
    opts: &DominationOptions,
) -> Result<Domination> {
    check_exponents(r, s)?;
    check_region(f.grid().dim(), op, r, s, opts)?;
    let pairing = maximal_pairing(f, g, op, &opts.averages)?;
    domination_with(f, g, op, &pairing, r, s, opts)
}

fn check_region(d: usize, op: &DominationOperator, r: f64, s: f64, opts: &DominationOptions) -> Result<()> {
    if opts.check_region {
        let reg = region(d, op.region())?;
        if !reg.contains_f64((1.0 / r, 1.0 / s), true) {
            return Err(Error::OutsideRegion);
        }
    }
    Ok(())
}

/// [`domination_experiment`] with a precomputed [`Pairing`], so several
/// exponent pairs can share one maximal-function evaluation.
pub fn domination_with<F: Field + ?Sized, G: Field + ?Sized>(
    f: &F,
    g: &G,
    op: &DominationOperator,
    pairing: &Pairing,
    r: f64,
    s: f64,
    opts: &DominationOptions,
) -> Result<Domination> {
    check_exponents(r, s)?;
    let spec = *f.grid();
    if *g.grid() != spec {
        return Err(Error::GridMismatch);
    }
    let d = spec.dim();
    check_region(d, op, r, s, opts)?;
    let (_, q_top) = op.levels()?;
    let targets = &pairing.targets;
    let af = Abs(f);
    let ag = Abs(g);
    let params = BuildParams::new(d, r, s, spec.resolution_level());
    let data = StoppingData::new(&af, &ag, params.r, params.sigma)?;
    let mut collections = Vec::new();
    let mut forms = Vec::new();
    for shift in 0..grid_count(d) {
        let mut roots = BTreeSet::new();
        for i in targets {
            roots.insert(DyadicCube::containing_cell(&spec, shift, q_top, i)?);
        }
        let mut sc = SparseCollection::new(spec);
        for root in &roots {
            sc.extend(build_from_data(&data, root, &params)?)?;
        }
        let index = sc.index();
        let mut m: Vec<Vec<u32>> = vec![Vec::new(); sc.len()];
        for (i, (_, t)) in targets.iter().zip(&pairing.maxima) {
            let q = op.level_of(*t).min(q_top);
            let cube = DyadicCube::containing_cell(&spec, shift, q, i)?;
            let owner = sc.owner_of(&index, &cube, q_top).ok_or_else(|| Error::Domain("target outside roots".into()))?;
            m[owner].push(spec.flat(i).expect("target in domain") as u32);
        }
        for (c, mut set) in sc.cubes.iter_mut().zip(m) {
            set.sort_unstable();
            c.m_set = Some(set);
        }
        forms.push(evaluate_form(&sc, f, g, r, s, true)?);
        collections.push(sc);
    }
    let form: f64 = forms.iter().map(|v| v.value).sum();
    let value = pairing.value;
    let c_emp = if form > 0.0 { value / form } else if value == 0.0 { 0.0 } else { f64::INFINITY };
    Ok(Domination { c_emp, pairing: value, form, collections, forms })
}

/// `max Λ_{r,s}(f, g) / (‖f‖_p ‖g‖_{p'})` over `corpus` for the plain form of `sc`.
pub fn form_lp_bound_check(
    sc: &SparseCollection,
    r: f64,
    s: f64,
    p: f64,
    corpus: &[(GridFunction, GridFunction)],
) -> Result<f64> {
    check_exponents(r, s)?;
    let s_dual = if s == 1.0 { f64::INFINITY } else { s / (s - 1.0) };
    if !(r < p && p < s_dual) {
        return Err(Error::InvalidExponent(format!("need r < p < s', got r = {r}, p = {p}, s' = {s_dual}")));
    }
    let p_dual = p / (p - 1.0);
    let mut best = 0.0f64;
    for (f, g) in corpus {
        let den = lp_norm(f, p, None)? * lp_norm(g, p_dual, None)?;
        if den == 0.0 {
            continue;
        }
        best = best.max(evaluate_form(sc, f, g, r, s, false)?.value / den);
    }
    Ok(best)
}

/// A single collection dominating several forms on the same `(f, g)`.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub form: SparseFormValue,
    pub collection: SparseCollection,
    /// `max_i Λ_i / Λ`.
    pub c_max: f64,
    /// `Σ_i Λ_i / Λ`.
    pub c_sum: f64,
    /// Cubes whose density set could not be repaired.
    pub dropped: usize,
}

/// Union the cubes of `forms` (keeping the largest term of a repeated cube)
/// and rebuild density sets greedily, smallest cubes first: `E_S` is `S`
/// minus every cell already claimed. Cubes left with `|E_S| ≤ |S|/4` are
/// dropped. Terms are reused, so the inputs must share `f`, `g`, `r`, `s`.
pub fn one_form_reduction_check(forms: &[SparseFormValue]) -> Result<Reduction> {
    let first = forms.first().ok_or_else(|| Error::Domain("no forms to reduce".into()))?;
    let spec = first.grid;
    if forms.iter().any(|f| f.grid != spec) {
        return Err(Error::GridMismatch);
    }
    let mut terms: HashMap<DyadicCube, f64> = HashMap::new();
    for f in forms {
        for &(c, t) in &f.per_cube_terms {
            let e = terms.entry(c).or_insert(t);
            *e = e.max(t);
        }
    }
    let mut cubes: Vec<DyadicCube> = terms.keys().copied().collect();
    cubes.sort_by(|a, b| a.level.cmp(&b.level).then(a.cmp(b)));
    let mut claimed: std::collections::HashSet<Idx> = std::collections::HashSet::new();
    let mut kept = Vec::new();
    let mut dropped = 0;
    for c in cubes {
        let cells = c.cells(&spec)?;
        let total = cells.count();
        let mut free = 0u64;
        cells.for_each(|i| free += u64::from(!claimed.contains(&i)));
        if 4 * free <= total {
            dropped += 1;
            continue;
        }
        let density = DensitySet::mask_from(cells, |i| !claimed.contains(i));
        cells.for_each(|i| {
            claimed.insert(i);
        });
        kept.push(SparseCube { cube: c, density, m_set: None });
    }
    kept.sort_by(|a, b| b.cube.level.cmp(&a.cube.level).then(a.cube.cmp(&b.cube)));
    let per_cube_terms: Vec<(DyadicCube, f64)> = kept.iter().map(|c| (c.cube, terms[&c.cube])).collect();
    let value: f64 = per_cube_terms.iter().map(|t| t.1).sum();
    let collection = SparseCollection { grid: spec, cubes: kept, truncated: false, escalations: 0 };
    debug_assert!(certify_sparsity(&collection, 0.25).map(|c| c.sparse).unwrap_or(false));
    let max_in = forms.iter().map(|f| f.value).fold(0.0, f64::max);
    let sum_in: f64 = forms.iter().map(|f| f.value).sum();
    let ratio = |x: f64| if value > 0.0 { x / value } else if x == 0.0 { 1.0 } else { f64::INFINITY };
    Ok(Reduction {
        form: SparseFormValue { grid: spec, value, per_cube_terms, r: first.r, s: first.s, m_sets: false },
        collection,
        c_max: ratio(max_in),
        c_sum: ratio(sum_in),
        dropped,
    })
}
