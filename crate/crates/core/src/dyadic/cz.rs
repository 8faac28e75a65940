use std::collections::BTreeMap;

use crate::dyadic::cube::DyadicCube;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, IndexBox};

/// `f1 = good + Σ_k bad_by_level[k]` with each bad piece mean zero on its cubes.
#[derive(Debug, Clone)]
pub struct CZDecomposition {
    pub good: GridFunction,
    /// Keyed by cube level `k` (side `2^k`).
    pub bad_by_level: BTreeMap<i32, GridFunction>,
    pub bad_cubes: Vec<DyadicCube>,
    /// `‖good‖_∞ / ⟨|f1|⟩_{Q0}`; zero when the root average vanishes.
    pub good_sup_ratio: f64,
}

impl CZDecomposition {
    /// `good + Σ_k B_k`.
    pub fn reconstruct(&self) -> GridFunction {
        let mut acc = self.good.clone();
        for b in self.bad_by_level.values() {
            acc = acc.add(b).expect("same lattice");
        }
        acc
    }
}

/// Replace `f1` by its mean on every bad cube. Means are taken over the
/// cells of `P` inside the domain so that each bad piece sums to zero
/// exactly.
pub fn cz_decompose(f1: &GridFunction, q0: &DyadicCube, bad: &[DyadicCube]) -> Result<CZDecomposition> {
    let spec = *f1.spec();
    let domain = spec.domain();
    let root = q0.cells(&spec)?;
    let boxes: Vec<IndexBox> = bad.iter().map(|p| p.cells(&spec)).collect::<Result<_>>()?;
    for (i, b) in boxes.iter().enumerate() {
        if !root.contains_box(b) {
            return Err(Error::OverlappingCubes);
        }
        for c in &boxes[..i] {
            if !b.intersect(c).is_empty() {
                return Err(Error::OverlappingCubes);
            }
        }
    }
    let mut good = f1.values().to_vec();
    let mut by_level: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
    for (p, b) in bad.iter().zip(&boxes) {
        let cells = b.intersect(&domain);
        let n = cells.count();
        if n == 0 {
            continue;
        }
        let mut sum = 0.0;
        cells.for_each(|idx| sum += f1.get(&idx));
        let mean = sum / n as f64;
        let piece = by_level.entry(p.level).or_insert_with(|| vec![0.0; spec.len()]);
        cells.for_each(|idx| {
            let k = spec.flat(&idx).expect("in domain");
            piece[k] = good[k] - mean;
            good[k] = mean;
        });
    }
    let good = GridFunction::from_values(spec, good)?;
    let mut root_sum = 0.0;
    let root_in = root.intersect(&domain);
    root_in.for_each(|idx| root_sum += f1.get(&idx).abs());
    let root_avg = root_sum * spec.cell_volume() / q0.volume(spec.dim());
    let good_sup_ratio = if root_avg > 0.0 { good.sup_norm() / root_avg } else { 0.0 };
    let bad_by_level = by_level
        .into_iter()
        .map(|(k, v)| Ok((k, GridFunction::from_values(spec, v)?)))
        .collect::<Result<_>>()?;
    Ok(CZDecomposition { good, bad_by_level, bad_cubes: bad.to_vec(), good_sup_ratio })
}
