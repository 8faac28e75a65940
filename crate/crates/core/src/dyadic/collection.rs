use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::dyadic::cube::DyadicCube;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Idx, IndexBox};

/// Cells of a density set `E_S ⊆ S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DensitySet {
    /// `S` minus the union of the listed cubes.
    Minus { removed: Vec<DyadicCube> },
    /// Explicit mask over `box_`, one bit per cell, row-major.
    Mask {
        #[serde(rename = "box")]
        box_: IndexBox,
        bits: Vec<u64>,
    },
}

/// One cube of a sparse collection with its density set and optional m-set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCube {
    pub cube: DyadicCube,
    pub density: DensitySet,
    /// Flat domain indices of the cells of `F_S`, sorted. Only cells where the
    /// second function is nonzero are ever recorded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_set: Option<Vec<u32>>,
}

/// Cubes plus disjoint density sets `E_S` and optional disjoint m-sets `F_S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseCollection {
    pub grid: GridSpec,
    pub cubes: Vec<SparseCube>,
    /// Recursion hit the floor level while finer stopping cubes existed.
    #[serde(default)]
    pub truncated: bool,
    /// How many times the stopping threshold was doubled.
    #[serde(default)]
    pub escalations: u32,
}

/// Failure found by [`certify_sparsity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Witness {
    /// Two density sets share a cell.
    Overlap { first: DyadicCube, second: DyadicCube, cell: Idx },
    /// `|E_S| ≤ η|S|`.
    Thin { cube: DyadicCube, count: u64, total: u64 },
    /// `E_S ⊄ S`, or the set is malformed.
    Malformed { cube: DyadicCube },
    /// Two m-sets share a cell.
    MOverlap { first: DyadicCube, second: DyadicCube, cell: u32 },
    /// An m-set cell lies outside its cube.
    MOutside { cube: DyadicCube, cell: u32 },
}

/// Outcome of [`certify_sparsity`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub sparse: bool,
    pub witness: Option<Witness>,
}

impl DensitySet {
    /// Visit the cells of `E_S`.
    pub fn for_each_cell(&self, cube: &DyadicCube, spec: &GridSpec, mut f: impl FnMut(Idx)) -> Result<()> {
        match self {
            DensitySet::Minus { removed } => {
                let cells = cube.cells(spec)?;
                let mut hole = vec![false; cells.count() as usize];
                let slot = |idx: &Idx| -> usize {
                    let mut k = 0i64;
                    for a in 0..3 {
                        k = k * (cells.hi[a] - cells.lo[a]) + (idx[a] - cells.lo[a]);
                    }
                    k as usize
                };
                for r in removed {
                    r.cells(spec)?.intersect(&cells).for_each(|idx| hole[slot(&idx)] = true);
                }
                let mut k = 0usize;
                cells.for_each(|idx| {
                    if !hole[k] {
                        f(idx)
                    }
                    k += 1;
                });
            }
            DensitySet::Mask { box_, bits } => {
                let mut k = 0usize;
                box_.for_each(|idx| {
                    if bits.get(k / 64).is_some_and(|w| w >> (k % 64) & 1 == 1) {
                        f(idx)
                    }
                    k += 1;
                });
            }
        }
        Ok(())
    }

    pub fn count(&self, cube: &DyadicCube, spec: &GridSpec) -> Result<u64> {
        match self {
            DensitySet::Minus { .. } => {
                let mut n = 0;
                self.for_each_cell(cube, spec, |_| n += 1)?;
                Ok(n)
            }
            DensitySet::Mask { bits, .. } => Ok(bits.iter().map(|w| w.count_ones() as u64).sum()),
        }
    }

    /// Build a mask over `box_` from a membership predicate.
    pub fn mask_from(box_: IndexBox, mut member: impl FnMut(&Idx) -> bool) -> DensitySet {
        let n = box_.count() as usize;
        let mut bits = vec![0u64; n.div_ceil(64)];
        let mut k = 0usize;
        box_.for_each(|idx| {
            if member(&idx) {
                bits[k / 64] |= 1 << (k % 64);
            }
            k += 1;
        });
        DensitySet::Mask { box_, bits }
    }
}

impl SparseCollection {
    pub fn new(grid: GridSpec) -> Self {
        SparseCollection { grid, cubes: Vec::new(), truncated: false, escalations: 0 }
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn has_m_sets(&self) -> bool {
        !self.cubes.is_empty() && self.cubes.iter().all(|c| c.m_set.is_some())
    }

    /// Lookup table from cube to position.
    pub fn index(&self) -> HashMap<DyadicCube, usize> {
        self.cubes.iter().enumerate().map(|(i, c)| (c.cube, i)).collect()
    }

    /// Position of the smallest collection cube of the same grid containing
    /// `q`, found by walking ancestors up to `top_level`.
    pub fn owner_of(&self, index: &HashMap<DyadicCube, usize>, q: &DyadicCube, top_level: i32) -> Option<usize> {
        let d = self.grid.dim();
        let mut c = *q;
        loop {
            if let Some(&i) = index.get(&c) {
                return Some(i);
            }
            if c.level >= top_level {
                return None;
            }
            c = c.parent(d);
        }
    }

    /// Merge another collection on the same lattice.
    pub fn extend(&mut self, other: SparseCollection) -> Result<()> {
        if other.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        self.truncated |= other.truncated;
        self.escalations += other.escalations;
        self.cubes.extend(other.cubes);
        Ok(())
    }

    /// Versioned JSON document.
    pub fn to_json(&self) -> Result<String> {
        let doc = CollectionDocument::from_collection(self)?;
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(s: &str) -> Result<SparseCollection> {
        let doc: CollectionDocument = serde_json::from_str(s)?;
        doc.into_collection()
    }
}

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form: summary counts for readers plus the exact sets for
/// re-certification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollectionDocument {
    pub schema_version: u32,
    pub grid: GridSpec,
    pub truncated: bool,
    pub escalations: u32,
    pub cubes: Vec<CubeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CubeRecord {
    pub shift: u16,
    pub level: i32,
    pub coords: Vec<i64>,
    pub density_cell_count: u64,
    pub m_cell_count: Option<u64>,
    pub density: DensitySet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_set: Option<Vec<u32>>,
}

impl CollectionDocument {
    pub fn from_collection(c: &SparseCollection) -> Result<Self> {
        let d = c.grid.dim();
        let cubes = c
            .cubes
            .iter()
            .map(|s| {
                Ok(CubeRecord {
                    shift: s.cube.shift,
                    level: s.cube.level,
                    coords: s.cube.coords[..d].to_vec(),
                    density_cell_count: s.density.count(&s.cube, &c.grid)?,
                    m_cell_count: s.m_set.as_ref().map(|m| m.len() as u64),
                    density: s.density.clone(),
                    m_set: s.m_set.clone(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(CollectionDocument {
            schema_version: SCHEMA_VERSION,
            grid: c.grid,
            truncated: c.truncated,
            escalations: c.escalations,
            cubes,
        })
    }

    pub fn into_collection(self) -> Result<SparseCollection> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Format(format!("unsupported schema version {}", self.schema_version)));
        }
        let d = self.grid.dim();
        let cubes = self
            .cubes
            .into_iter()
            .map(|r| {
                if r.coords.len() != d {
                    return Err(Error::Format("coordinate length differs from dimension".into()));
                }
                let mut coords = [0i64; 3];
                coords[..d].copy_from_slice(&r.coords);
                Ok(SparseCube { cube: DyadicCube::new(r.shift, r.level, coords), density: r.density, m_set: r.m_set })
            })
            .collect::<Result<_>>()?;
        Ok(SparseCollection { grid: self.grid, cubes, truncated: self.truncated, escalations: self.escalations })
    }
}

/// Cell ownership map over a bounding box, used to detect overlaps.
struct Owners {
    bbox: IndexBox,
    owner: Vec<u32>,
}

impl Owners {
    fn new(bbox: IndexBox) -> Result<Self> {
        let n = bbox.count();
        if n > 1 << 30 {
            return Err(Error::Domain("collection spans too many cells to certify".into()));
        }
        Ok(Owners { bbox, owner: vec![u32::MAX; n as usize] })
    }

    fn slot(&self, idx: &Idx) -> usize {
        let b = &self.bbox;
        let mut k = 0i64;
        for a in 0..3 {
            k = k * (b.hi[a] - b.lo[a]) + (idx[a] - b.lo[a]);
        }
        k as usize
    }

    /// Claim a cell; returns the previous owner if any.
    fn claim(&mut self, idx: &Idx, who: u32) -> Option<u32> {
        let k = self.slot(idx);
        let prev = self.owner[k];
        if prev != u32::MAX && prev != who {
            return Some(prev);
        }
        self.owner[k] = who;
        None
    }
}

fn hull(boxes: impl Iterator<Item = IndexBox>) -> IndexBox {
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    let mut any = false;
    for b in boxes {
        if b.is_empty() {
            continue;
        }
        any = true;
        for a in 0..3 {
            lo[a] = lo[a].min(b.lo[a]);
            hi[a] = hi[a].max(b.hi[a]);
        }
    }
    if any {
        IndexBox { lo, hi }
    } else {
        IndexBox::empty()
    }
}

/// Exact check that the `E_S` are pairwise disjoint subsets of their cubes
/// with `|E_S| > η|S|`, and that any m-sets are disjoint subsets of their
/// cubes. Returns the first violation found.
pub fn certify_sparsity(s: &SparseCollection, eta: f64) -> Result<Certificate> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Domain(format!("density {eta} not in (0,1)")));
    }
    let spec = &s.grid;
    let boxes: Vec<IndexBox> = s.cubes.iter().map(|c| c.cube.cells(spec)).collect::<Result<_>>()?;
    let mut owners = Owners::new(hull(boxes.iter().copied()))?;
    for (i, sc) in s.cubes.iter().enumerate() {
        let cells = boxes[i];
        let total = cells.count();
        let mut count = 0u64;
        let mut outside = false;
        let mut clash: Option<(u32, Idx)> = None;
        let valid = match &sc.density {
            DensitySet::Minus { removed } => removed.iter().all(|r| r.cells(spec).is_ok_and(|b| cells.contains_box(&b))),
            DensitySet::Mask { box_, bits } => *box_ == cells && bits.len() == (total as usize).div_ceil(64),
        };
        if !valid {
            return Ok(Certificate { sparse: false, witness: Some(Witness::Malformed { cube: sc.cube }) });
        }
        sc.density.for_each_cell(&sc.cube, spec, |idx| {
            if !cells.contains(&idx) {
                outside = true;
                return;
            }
            count += 1;
            if clash.is_none() {
                if let Some(prev) = owners.claim(&idx, i as u32) {
                    clash = Some((prev, idx));
                }
            }
        })?;
        if outside {
            return Ok(Certificate { sparse: false, witness: Some(Witness::Malformed { cube: sc.cube }) });
        }
        if let Some((prev, cell)) = clash {
            return Ok(Certificate {
                sparse: false,
                witness: Some(Witness::Overlap { first: s.cubes[prev as usize].cube, second: sc.cube, cell }),
            });
        }
        if !(count as f64 > eta * total as f64) {
            return Ok(Certificate { sparse: false, witness: Some(Witness::Thin { cube: sc.cube, count, total }) });
        }
    }
    // m-sets live on domain cells only
    let mut m_owner: HashMap<u32, usize> = HashMap::new();
    for (i, sc) in s.cubes.iter().enumerate() {
        let Some(m) = &sc.m_set else { continue };
        for &k in m {
            let idx = spec.unflat(k as usize);
            if k as usize >= spec.len() || !boxes[i].contains(&idx) {
                return Ok(Certificate { sparse: false, witness: Some(Witness::MOutside { cube: sc.cube, cell: k }) });
            }
            if let Some(&prev) = m_owner.get(&k) {
                return Ok(Certificate {
                    sparse: false,
                    witness: Some(Witness::MOverlap { first: s.cubes[prev].cube, second: sc.cube, cell: k }),
                });
            }
            m_owner.insert(k, i);
        }
    }
    Ok(Certificate { sparse: true, witness: None })
}
