use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sphlab::corpus::indicator_pairs;
use sphlab::dyadic::certify_sparsity;
use sphlab::extremals::{continuity_sharpness_experiment, stein_function, Example, ExponentFit};
use sphlab::forms::{domination_with, maximal_pairing, DominationOptions};
use sphlab::fourier::{symbol_decay_profile, write_profile_csv};
use sphlab::grid::{write_binary, write_csv, Field, GridFunction, CSV_MAX_CELLS};
use sphlab::operators::AverageOptions;
use sphlab::regions::{region, RegionDocument, RegionKind};
use sphlab::weights::{probe_table, refinement_chain, write_probe_csv, CorpusItem, ProbeConfig, ProbeOperator, WeightSpec};

use crate::config::{ExperimentConfig, ExperimentKind, WeightCorpus};

/// One module-level check made during a run.
#[derive(Debug, Clone, Serialize)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Files written into the bundle plus the checks that decide the exit code.
#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub invariants: Vec<Invariant>,
}

impl Outcome {
    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.invariants.push(Invariant { name: name.into(), passed, detail: detail.into() });
    }

    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|i| i.passed)
    }
}

/// Row of `rows.csv` for domination and sharpness runs.
#[derive(Debug, Serialize)]
struct ExperimentRow {
    experiment: String,
    n: usize,
    #[serde(rename = "N")]
    points: usize,
    delta: Option<f64>,
    r: f64,
    s: f64,
    value: f64,
    #[serde(rename = "C_emp")]
    c_emp: f64,
}

#[derive(Debug, Serialize)]
struct FitRow {
    example: String,
    n: usize,
    #[serde(rename = "1/r")]
    x: f64,
    #[serde(rename = "1/s")]
    y: f64,
    slope: f64,
    predicted: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct ContinuityRow {
    n: usize,
    #[serde(rename = "N")]
    points: usize,
    delta: f64,
    r: f64,
    s: f64,
    y: f64,
    ratio: f64,
    untranslated: f64,
    clipped: bool,
}

/// Versioned file holding every region of one dimension.
#[derive(Debug, Serialize, serde::Deserialize)]
pub struct RegionsFile {
    pub version: u32,
    pub n: usize,
    pub regions: Vec<RegionDocument>,
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn execute(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut out = Outcome::default();
    match cfg.experiment {
        ExperimentKind::Domination | ExperimentKind::Sharpness => domination(cfg, dir, &mut out)?,
        ExperimentKind::Continuity => continuity(cfg, dir, &mut out)?,
        ExperimentKind::Weights => weights(cfg, dir, &mut out)?,
        ExperimentKind::Regions => {
            let path = dir.join("regions.json");
            let file = regions_file(cfg.n, &mut out)?;
            fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")?;
            out.files.push(path);
        }
        ExperimentKind::Decay => decay(cfg, dir, &mut out)?,
    }
    Ok(out)
}

fn save_grid(dir: &Path, name: &str, f: &GridFunction, out: &mut Outcome) -> Result<()> {
    let bin = dir.join(format!("{name}.grid"));
    write_binary(f, BufWriter::new(File::create(&bin)?))?;
    out.files.push(bin);
    if f.spec().len() <= CSV_MAX_CELLS {
        let path = dir.join(format!("{name}.csv"));
        write_csv(f, File::create(&path)?)?;
        out.files.push(path);
    }
    Ok(())
}

fn domination(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let spec = cfg.grid();
    let example = cfg.example();
    let op = example.operator(&spec)?;
    let sharp = cfg.experiment == ExperimentKind::Sharpness;
    let opts = DominationOptions { averages: AverageOptions::quadrature(), check_region: !sharp };
    let deltas = cfg.sweep();
    let id = cfg.id();
    let mut rows = Vec::new();
    let mut samples = vec![Vec::new(); cfg.pairs.len()];
    if cfg.save_collections {
        fs::create_dir_all(dir.join("collections"))?;
    }

    let mut run_pair = |label: &str,
                        delta: Option<f64>,
                        f: &dyn Field,
                        g: &dyn Field,
                        pairs: &[[f64; 2]],
                        out: &mut Outcome,
                        samples: Option<&mut Vec<Vec<(f64, f64)>>>|
     -> Result<()> {
        let pairing = maximal_pairing(f, g, &op, &opts.averages)?;
        let mut samples = samples;
        for (k, &[x, y]) in pairs.iter().enumerate() {
            let dom = domination_with(f, g, &op, &pairing, 1.0 / x, 1.0 / y, &opts)?;
            rows.push(ExperimentRow {
                experiment: id.clone(),
                n: spec.dim(),
                points: spec.points(),
                delta,
                r: 1.0 / x,
                s: 1.0 / y,
                value: dom.pairing,
                c_emp: dom.c_emp,
            });
            if let Some(s) = samples.as_deref_mut() {
                s[k].push((delta.expect("swept"), dom.c_emp));
            }
            if !sharp {
                let bad: Vec<usize> = dom
                    .collections
                    .iter()
                    .enumerate()
                    .filter(|(_, sc)| !certify_sparsity(sc, 0.25).map(|c| c.sparse).unwrap_or(false))
                    .map(|(i, _)| i)
                    .collect();
                out.check(
                    format!("sparse {label} pair {k}"),
                    bad.is_empty(),
                    format!("{} collections, not 1/4-sparse: {bad:?}", dom.collections.len()),
                );
                out.check(format!("finite C_emp {label} pair {k}"), dom.c_emp.is_finite(), format!("{}", dom.c_emp));
            }
            if cfg.save_collections {
                for (gi, sc) in dom.collections.iter().enumerate() {
                    let path = dir.join("collections").join(format!("{label}_p{k}_g{gi}.json"));
                    fs::write(&path, sc.to_json()?)?;
                    out.files.push(path);
                }
            }
        }
        Ok(())
    };

    if !cfg.pairs.is_empty() {
        for (di, &delta) in deltas.iter().enumerate() {
            let (f, g) = example.fields(spec, delta, cfg.constant())?;
            if cfg.save_grids {
                save_grid(dir, &format!("f_d{di}"), &f.to_grid(), out)?;
                save_grid(dir, &format!("g_d{di}"), &g.to_grid(), out)?;
            }
            run_pair(&format!("d{di}"), Some(delta), &f, &g, &cfg.pairs, out, Some(&mut samples))?;
        }
    }
    if cfg.random_pairs > 0 {
        // seeded indicator pairs in the middle half of the box
        let half = spec.extent() / 2.0;
        let window = spec.cells_in_closed_box(&[-half; 3][..spec.dim()], &[half; 3][..spec.dim()]);
        let pairs = if cfg.pairs.is_empty() { vec![default_pair(example, spec.dim())] } else { cfg.pairs.clone() };
        for (k, (f, g)) in indicator_pairs(spec, &window, cfg.random_pairs, cfg.seed).into_iter().enumerate() {
            run_pair(&format!("random{k}"), None, &f, &g, &pairs, out, None)?;
        }
    }
    let rows_path = dir.join("rows.csv");
    write_rows(&rows_path, &rows)?;
    out.files.push(rows_path);

    if deltas.len() >= 4 && !cfg.pairs.is_empty() {
        let mut fits = Vec::new();
        for (&[x, y], smp) in cfg.pairs.iter().zip(&samples) {
            let fit = ExponentFit::fit(smp)?;
            fits.push(FitRow {
                example: example.name().into(),
                n: spec.dim(),
                x,
                y,
                slope: fit.slope,
                predicted: -example.predicted(spec.dim(), x, y),
                residual: fit.max_residual,
            });
            if sharp {
                out.check(format!("fit residual ({x}, {y})"), fit.max_residual < 0.1, format!("{}", fit.max_residual));
            }
        }
        let path = dir.join("fits.csv");
        write_rows(&path, &fits)?;
        out.files.push(path);
    }
    Ok(())
}

/// An interior exponent pair used when only random pairs are requested.
fn default_pair(example: Example, n: usize) -> [f64; 2] {
    match (example, n) {
        (Example::Annulus, 2) => [0.5, 0.7],
        (Example::Annulus, _) => [0.5, 0.6],
        (Example::Knapp, 2) => [0.4, 0.7],
        (Example::Knapp, _) => [0.4, 0.7],
    }
}

fn continuity(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let spec = cfg.grid();
    let [x, y0] = cfg.boundary_point.expect("validated");
    let delta = cfg.delta.expect("validated");
    let opts = AverageOptions::quadrature();
    let mut rows = Vec::new();
    for &y in &cfg.y {
        let mut v = vec![0.0; spec.dim()];
        v[0] = y;
        let res = continuity_sharpness_experiment(spec, (x, y0), &v, delta, &opts)?;
        if y != 0.0 {
            out.check(
                format!("no gain at |y| = {y}"),
                res.ratio >= 0.5 * res.untranslated && !res.clipped,
                format!("ratio {} untranslated {} clipped {}", res.ratio, res.untranslated, res.clipped),
            );
        }
        rows.push(ContinuityRow {
            n: spec.dim(),
            points: spec.points(),
            delta,
            r: 1.0 / x,
            s: 1.0 / y0,
            y,
            ratio: res.ratio,
            untranslated: res.untranslated,
            clipped: res.clipped,
        });
    }
    let path = dir.join("continuity.csv");
    write_rows(&path, &rows)?;
    out.files.push(path);
    Ok(())
}

fn weights(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let spec = cfg.grid();
    let pcfg = ProbeConfig {
        grids: refinement_chain(spec, cfg.refinements)?,
        averages: AverageOptions::quadrature(),
        t_max: cfg.t_max,
        factor: 2.0,
    };
    let corpus = match cfg.corpus {
        WeightCorpus::Standard => vec![CorpusItem::point_mass(), CorpusItem::ball(0.25)],
        WeightCorpus::Stein => vec![CorpusItem::new("stein", |s| Ok(stein_function(s)))],
    };
    let cases: Vec<(WeightSpec, f64)> = cfg
        .weights
        .iter()
        .map(|w| (w.a.map_or(WeightSpec::Unit, |a| WeightSpec::Power { a }), w.p))
        .collect();
    let ops = match cfg.operator {
        Some(op) => vec![op],
        None => vec![ProbeOperator::Full, ProbeOperator::Lacunary],
    };
    let mut rows = Vec::new();
    for op in ops {
        for rep in probe_table(op, &cases, &corpus, &pcfg)? {
            let finite = rep.maxima.iter().all(|m| m.is_finite() && *m >= 0.0);
            out.check(format!("finite ratios {} {} p={}", op.name(), rep.weight.label(), rep.p), finite, format!("{:?}", rep.maxima));
            rows.extend(rep.rows(&pcfg.grids));
        }
    }
    let path = dir.join("weights.csv");
    write_probe_csv(&rows, File::create(&path)?)?;
    out.files.push(path);
    Ok(())
}

/// All four regions of dimension `n`, with the structural checks recorded.
pub fn regions_file(n: usize, out: &mut Outcome) -> Result<RegionsFile> {
    let mut docs = Vec::new();
    for kind in RegionKind::ALL {
        let reg = region(n, kind)?;
        let back = reg.document().to_region()?;
        out.check(format!("{} round trip", kind.name()), back == reg, "");
        let mut a = reg.dual().vertices;
        let mut b = region(n, kind.dual())?.vertices;
        a.sort();
        b.sort();
        out.check(format!("{} dual", kind.name()), a == b, "");
        docs.push(reg.document());
    }
    let lac = region(n, RegionKind::Lac)?;
    let full = region(n, RegionKind::Full)?;
    out.check("full inside lacunary", full.vertices.iter().all(|&v| lac.contains(v, false)), "");
    let hull = full.hull().len();
    out.check("full hull size", hull == if n == 2 { 3 } else { 4 }, format!("{hull} vertices"));
    Ok(RegionsFile { version: 1, n, regions: docs })
}

fn decay(cfg: &ExperimentConfig, dir: &Path, out: &mut Outcome) -> Result<()> {
    let spec = cfg.grid();
    let r_max = cfg.r_max.unwrap_or_else(|| spec.nyquist().min(100.0));
    let rows = symbol_decay_profile(&spec, r_max, cfg.step.unwrap_or(0.25))?;
    if spec.dim() == 3 {
        let err = rows.iter().map(|(r, v)| (v - r.sin().abs()).abs()).fold(0.0, f64::max);
        out.check("n=3 profile is |sin R|", err < 1e-10, format!("max error {err:e}"));
    } else {
        let worst = rows.iter().filter(|r| r.0 >= 2.0).map(|r| r.1).fold(0.0, f64::max);
        out.check("n=2 profile bounded", worst <= 1.0, format!("max {worst}"));
    }
    let path = dir.join("decay.csv");
    write_profile_csv(&rows, File::create(&path)?)?;
    out.files.push(path);
    Ok(())
}
