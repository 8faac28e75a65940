use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sphlab::extremals::Example;
use sphlab::grid::GridSpec;
use sphlab::regions::{region, RegionKind};
use sphlab::weights::ProbeOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Domination,
    Sharpness,
    Continuity,
    Weights,
    Regions,
    Decay,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Domination => "domination",
            ExperimentKind::Sharpness => "sharpness",
            ExperimentKind::Continuity => "continuity",
            ExperimentKind::Weights => "weights",
            ExperimentKind::Regions => "regions",
            ExperimentKind::Decay => "decay",
        }
    }
}

/// `δ_k = 2^{-k/per_octave}` for `k_min ≤ k ≤ k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub k_min: u32,
    pub k_max: u32,
    #[serde(default = "one")]
    pub per_octave: u32,
}

fn one() -> u32 {
    1
}

/// One `(a, p)` probe; `a` absent means the unit weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightCase {
    #[serde(default)]
    pub a: Option<f64>,
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightCorpus {
    /// Point mass and a ball of radius 1/4.
    Standard,
    /// The Stein function alone.
    Stein,
}

/// Everything a run needs. Missing sections fall back to defaults that are
/// valid for the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Bundle directory name below the output root; defaults to the experiment.
    #[serde(default)]
    pub id: Option<String>,
    pub n: usize,
    #[serde(rename = "N", default = "default_points")]
    pub points: usize,
    #[serde(rename = "L", default = "default_extent")]
    pub extent: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,

    /// Sharpness example for domination and sharpness runs.
    #[serde(default)]
    pub example: Option<Example>,
    /// `C` (Knapp) or `c` (annulus).
    #[serde(default)]
    pub constant: Option<f64>,
    /// `(1/r, 1/s)` pairs.
    #[serde(default)]
    pub pairs: Vec<[f64; 2]>,
    #[serde(default)]
    pub deltas: Option<Sweep>,
    /// Extra seeded indicator pairs for domination runs.
    #[serde(default)]
    pub random_pairs: usize,
    /// Write every sparse collection as JSON.
    #[serde(default)]
    pub save_collections: bool,
    /// Write `f_δ`, `g_δ` as binary grids (and CSV when small).
    #[serde(default)]
    pub save_grids: bool,

    #[serde(default)]
    pub boundary_point: Option<[f64; 2]>,
    #[serde(default)]
    pub delta: Option<f64>,
    /// Translation lengths along the first axis.
    #[serde(default)]
    pub y: Vec<f64>,

    #[serde(default)]
    pub operator: Option<ProbeOperator>,
    #[serde(default)]
    pub weights: Vec<WeightCase>,
    #[serde(default = "default_refinements")]
    pub refinements: usize,
    #[serde(default = "default_weight_corpus")]
    pub corpus: WeightCorpus,
    #[serde(default = "one_f64")]
    pub t_max: f64,

    #[serde(default)]
    pub r_max: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
}

fn default_points() -> usize {
    256
}
fn default_extent() -> f64 {
    2.0
}
fn default_refinements() -> usize {
    2
}
fn default_weight_corpus() -> WeightCorpus {
    WeightCorpus::Standard
}
fn one_f64() -> f64 {
    1.0
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn id(&self) -> String {
        self.id.clone().unwrap_or_else(|| self.experiment.name().to_string())
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec::new(self.n, self.points, self.extent).expect("validated")
    }

    pub fn example(&self) -> Example {
        self.example.unwrap_or(Example::Annulus)
    }

    pub fn constant(&self) -> f64 {
        self.constant.unwrap_or_else(|| self.example().default_constant())
    }

    pub fn sweep(&self) -> Vec<f64> {
        let s = self.deltas.unwrap_or(Sweep { k_min: 2, k_max: 5, per_octave: 1 });
        sphlab::extremals::delta_sweep(s.k_min, s.k_max, s.per_octave)
    }

    /// Every violated precondition, not just the first.
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if let Err(e) = GridSpec::new(self.n, self.points, self.extent) {
            errs.push(format!("grid: {e}"));
        }
        if !(2..=3).contains(&self.n) {
            errs.push(format!("n = {} (need 2 or 3)", self.n));
        }
        if let Some(id) = &self.id {
            if id.is_empty() || id.contains(['/', '\\']) || id.starts_with('.') {
                errs.push(format!("id `{id}` is not a plain directory name"));
            }
        }
        let h = 2.0 * self.extent / self.points as f64;
        match self.experiment {
            ExperimentKind::Domination | ExperimentKind::Sharpness => {
                let deltas = self.sweep();
                if let Some(s) = self.deltas {
                    if s.per_octave == 0 || s.k_min > s.k_max {
                        errs.push("deltas: need per_octave ≥ 1 and k_min ≤ k_max".into());
                    }
                }
                if self.experiment == ExperimentKind::Sharpness && deltas.len() < 4 {
                    errs.push(format!("deltas: {} points, a fit needs at least 4", deltas.len()));
                }
                if self.pairs.is_empty() && self.random_pairs == 0 {
                    errs.push("pairs: empty".into());
                }
                if !(self.constant() > 0.0) {
                    errs.push(format!("constant = {} must be positive", self.constant()));
                }
                for &[x, y] in &self.pairs {
                    if !(x > 0.0 && x <= 1.0 && y > 0.0 && y <= 1.0) {
                        errs.push(format!("pair ({x}, {y}) outside (0, 1]²"));
                    }
                    if self.experiment == ExperimentKind::Domination && (2..=3).contains(&self.n) {
                        let kind = match self.example() {
                            Example::Annulus => RegionKind::Lac,
                            Example::Knapp => RegionKind::Full,
                        };
                        let reg = region(self.n, kind).expect("n checked");
                        if !reg.contains_f64((x, y), true) {
                            errs.push(format!("pair ({x}, {y}) is not inside the open {} region", kind.name()));
                        }
                    }
                }
                let c = self.constant();
                for &d in &deltas {
                    let ok = match self.example() {
                        Example::Annulus => d >= 4.0 * h && 1.0 + d + 4.0 * h <= self.extent,
                        Example::Knapp => c * d >= 2.0 * h && d.sqrt() >= 4.0 * h && c * d.sqrt() <= self.extent && self.extent >= 5.0 / 3.0,
                    };
                    if !ok {
                        errs.push(format!("δ = {d} is not resolved by N = {} on [-{}, {}]", self.points, self.extent, self.extent));
                    }
                }
            }
            ExperimentKind::Continuity => {
                match self.boundary_point {
                    None => errs.push("boundary_point: missing".into()),
                    Some([x, y]) if (2..=3).contains(&self.n) => {
                        let on = RegionKind::ALL.iter().any(|&k| {
                            let reg = region(self.n, k).expect("n checked");
                            reg.contains_f64((x, y), false) && !reg.contains_f64((x, y), true)
                        });
                        if !on {
                            errs.push(format!("boundary_point ({x}, {y}) is not on a region boundary"));
                        }
                    }
                    _ => {}
                }
                match self.delta {
                    None => errs.push("delta: missing".into()),
                    Some(d) => {
                        if d < 4.0 * h {
                            errs.push(format!("delta = {d} below 4h = {}", 4.0 * h));
                        }
                        for &y in &self.y {
                            if y != 0.0 && d > y.abs() / 8.0 {
                                errs.push(format!("delta = {d} exceeds |y|/8 for y = {y}"));
                            }
                        }
                    }
                }
                if self.y.is_empty() {
                    errs.push("y: empty".into());
                }
            }
            ExperimentKind::Weights => {
                if self.weights.is_empty() {
                    errs.push("weights: empty".into());
                }
                for w in &self.weights {
                    if !(w.p > 1.0) {
                        errs.push(format!("weight p = {} (need p > 1)", w.p));
                    }
                    if let Some(a) = w.a {
                        if !(a > -(self.n as f64)) {
                            errs.push(format!("|x|^{a} is not locally integrable"));
                        }
                    }
                }
                if self.refinements < 2 {
                    errs.push("refinements: need at least 2 grids".into());
                }
                if !(self.t_max > 0.0) {
                    errs.push("t_max must be positive".into());
                }
            }
            ExperimentKind::Regions => {}
            ExperimentKind::Decay => {
                let step = self.step.unwrap_or(0.25);
                if !(step > 0.0) {
                    errs.push("step must be positive".into());
                }
                if let Some(r) = self.r_max {
                    if !(r > 0.0) {
                        errs.push("r_max must be positive".into());
                    }
                }
            }
        }
        errs
    }
}
