use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Idx, IndexBox};

/// A cube of one of the `3^n` shifted dyadic grids.
///
/// On axis `a` with digit `t = (shift / 3^a) % 3` the level-`q` intervals are
/// `[2^q (m + (-1)^q t/3), 2^q (m + (-1)^q t/3 + 1))`. The alternating sign
/// makes every grid nested across levels, and at each level the offsets run
/// over `{0, ±2^q/3}` modulo `2^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub shift: u16,
    pub level: i32,
    pub coords: [i64; 3],
}

/// Number of shifted grids in dimension `dim`.
pub fn grid_count(dim: usize) -> u16 {
    3u16.pow(dim as u32)
}

#[inline]
fn level_sign(level: i32) -> i64 {
    if level.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

impl DyadicCube {
    pub fn new(shift: u16, level: i32, coords: [i64; 3]) -> Self {
        DyadicCube { shift, level, coords }
    }

    /// Shift digit on `axis`, in `{0, 1, 2}`.
    pub fn digit(&self, axis: usize) -> i64 {
        (self.shift as i64 / 3i64.pow(axis as u32)) % 3
    }

    pub fn side(&self) -> f64 {
        2f64.powi(self.level)
    }

    pub fn volume(&self, dim: usize) -> f64 {
        2f64.powi(self.level * dim as i32)
    }

    /// Lower corner coordinate on `axis`.
    pub fn lower(&self, axis: usize) -> f64 {
        let t = self.digit(axis) * level_sign(self.level);
        self.side() * (self.coords[axis] as f64 + t as f64 / 3.0)
    }

    pub fn center(&self, dim: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (a, ca) in c.iter_mut().enumerate().take(dim) {
            *ca = self.lower(a) + 0.5 * self.side();
        }
        c
    }

    pub fn children(&self, dim: usize) -> Vec<DyadicCube> {
        let s = level_sign(self.level);
        let mut base = [0i64; 3];
        for (a, b) in base.iter_mut().enumerate().take(dim) {
            *b = 2 * self.coords[a] + s * self.digit(a);
        }
        (0..1usize << dim)
            .map(|mask| {
                let mut c = [0i64; 3];
                for a in 0..dim {
                    c[a] = base[a] + (mask >> (dim - 1 - a) & 1) as i64;
                }
                DyadicCube { shift: self.shift, level: self.level - 1, coords: c }
            })
            .collect()
    }

    pub fn parent(&self, dim: usize) -> DyadicCube {
        let s = level_sign(self.level + 1);
        let mut c = [0i64; 3];
        for a in 0..dim {
            c[a] = (self.coords[a] - s * self.digit(a)).div_euclid(2);
        }
        DyadicCube { shift: self.shift, level: self.level + 1, coords: c }
    }

    /// Ancestor at `level ≥ self.level`.
    pub fn ancestor(&self, dim: usize, level: i32) -> DyadicCube {
        let mut c = *self;
        while c.level < level {
            c = c.parent(dim);
        }
        c
    }

    /// Same grid and `o ⊆ self`.
    pub fn contains_cube(&self, dim: usize, o: &DyadicCube) -> bool {
        o.shift == self.shift && o.level <= self.level && o.ancestor(dim, self.level) == *self
    }

    /// Cell ratio `2^q / h`, or an error below resolution.
    pub fn cells_per_side(&self, spec: &GridSpec) -> Result<i64> {
        let res = spec.resolution_level();
        if self.level < res {
            return Err(Error::CubeBelowResolution);
        }
        Ok(1i64 << (self.level - res))
    }

    /// Cells whose centers lie in the cube. On the infinite lattice this is
    /// always a block of exactly `(2^q/h)^n` cells; it may reach outside the
    /// domain.
    pub fn cells(&self, spec: &GridSpec) -> Result<IndexBox> {
        let k = self.cells_per_side(spec)?;
        let n = spec.points() as i64;
        let s = level_sign(self.level);
        let mut b = IndexBox { lo: [0; 3], hi: [1; 3] };
        for a in 0..spec.dim() {
            // 6i > 6Km + 2Kst + 3N - 3; the right side is odd so ties cannot occur.
            let num = 6 * k * self.coords[a] + 2 * k * s * self.digit(a) + 3 * n - 3;
            let start = num.div_euclid(6) + 1;
            b.lo[a] = start;
            b.hi[a] = start + k;
        }
        Ok(b)
    }

    /// Cells whose centers lie in the middle third `Q/3`.
    pub fn middle_third_cells(&self, spec: &GridSpec) -> Result<IndexBox> {
        let k = self.cells_per_side(spec)?;
        let n = spec.points() as i64;
        let s = level_sign(self.level);
        let mut b = IndexBox { lo: [0; 3], hi: [1; 3] };
        for a in 0..spec.dim() {
            let base = 6 * k * self.coords[a] + 2 * k * s * self.digit(a) + 3 * n - 3;
            // center ≥ lower + side/3 and center < lower + 2 side/3
            let lo = (base + 2 * k).div_euclid(6) + 1;
            let hi = (base + 4 * k).div_euclid(6) + 1;
            b.lo[a] = lo;
            b.hi[a] = hi;
        }
        Ok(b)
    }

    /// The level-`level` cube of grid `shift` containing the center of cell `idx`.
    pub fn containing_cell(spec: &GridSpec, shift: u16, level: i32, idx: &Idx) -> Result<DyadicCube> {
        let probe = DyadicCube { shift, level, coords: [0; 3] };
        let k = probe.cells_per_side(spec)?;
        let n = spec.points() as i64;
        let s = level_sign(level);
        let mut coords = [0i64; 3];
        for (a, c) in coords.iter_mut().enumerate().take(spec.dim()) {
            let num = 6 * idx[a] - 2 * k * s * probe.digit(a) - 3 * n + 3;
            *c = num.div_euclid(6 * k);
        }
        Ok(DyadicCube { shift, level, coords })
    }

    /// The level-`level` cube of grid `shift` containing the point `x`.
    pub fn containing_point(dim: usize, shift: u16, level: i32, x: &[f64]) -> DyadicCube {
        let probe = DyadicCube { shift, level, coords: [0; 3] };
        let side = 2f64.powi(level);
        let s = level_sign(level);
        let mut coords = [0i64; 3];
        for a in 0..dim {
            coords[a] = (x[a] / side - (s * probe.digit(a)) as f64 / 3.0).floor() as i64;
        }
        DyadicCube { shift, level, coords }
    }

    /// All level-`level` cubes of grid `shift` meeting the cells of `region`.
    pub fn covering(spec: &GridSpec, shift: u16, level: i32, region: &IndexBox) -> Result<Vec<DyadicCube>> {
        if region.is_empty() {
            return Ok(Vec::new());
        }
        let d = spec.dim();
        let mut hi_idx = region.hi;
        for v in hi_idx.iter_mut().take(d) {
            *v -= 1;
        }
        let lo = DyadicCube::containing_cell(spec, shift, level, &region.lo)?;
        let hi = DyadicCube::containing_cell(spec, shift, level, &hi_idx)?;
        let mut out = Vec::new();
        let mut range = IndexBox { lo: lo.coords, hi: hi.coords };
        for a in 0..3 {
            range.hi[a] += 1;
            if a >= d {
                range.lo[a] = 0;
                range.hi[a] = 1;
            }
        }
        range.for_each(|c| out.push(DyadicCube { shift, level, coords: c }));
        Ok(out)
    }
}
