use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sphlab::extremals::ExponentFit;

use crate::run::RegionsFile;

#[derive(Serialize)]
struct OutlineRow {
    n: usize,
    region: String,
    order: usize,
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
struct SampleRow {
    delta: Option<f64>,
    r: f64,
    s: f64,
    #[serde(rename = "C_emp")]
    c_emp: f64,
}

#[derive(Serialize)]
struct FitPlotRow {
    #[serde(rename = "1/r")]
    x: f64,
    #[serde(rename = "1/s")]
    y: f64,
    kind: &'static str,
    log_delta: f64,
    log_c_emp: f64,
}

fn write<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn regions(bundle: &Path, target: &Path) -> Result<()> {
    let src = bundle.join("regions.json");
    let text = fs::read_to_string(&src).with_context(|| format!("reading {}", src.display()))?;
    let file: RegionsFile = serde_json::from_str(&text)?;
    let mut rows = Vec::new();
    for doc in &file.regions {
        let reg = doc.to_region()?;
        for (order, (x, y)) in reg.outline().into_iter().enumerate() {
            rows.push(OutlineRow { n: file.n, region: doc.region.clone(), order, x, y });
        }
    }
    write(target, &rows)
}

/// Scatter of `(log δ, log C_emp)` per exponent pair plus the two ends of
/// the fitted line.
fn fits(bundle: &Path, target: &Path) -> Result<()> {
    let src = bundle.join("rows.csv");
    let mut reader = csv::Reader::from_path(&src).with_context(|| format!("reading {}", src.display()))?;
    let mut groups: BTreeMap<(u64, u64), Vec<(f64, f64)>> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: SampleRow = row?;
        if let Some(d) = row.delta {
            groups.entry(((1.0 / row.r).to_bits(), (1.0 / row.s).to_bits())).or_default().push((d, row.c_emp));
        }
    }
    if groups.is_empty() {
        bail!("{} has no δ sweep to fit", src.display());
    }
    let mut rows = Vec::new();
    for ((xb, yb), samples) in groups {
        let (x, y) = (f64::from_bits(xb), f64::from_bits(yb));
        let fit = ExponentFit::fit(&samples)?;
        for &(ld, lc) in &fit.points {
            rows.push(FitPlotRow { x, y, kind: "sample", log_delta: ld, log_c_emp: lc });
        }
        let lo = fit.points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi = fit.points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        for ld in [lo, hi] {
            rows.push(FitPlotRow { x, y, kind: "fit", log_delta: ld, log_c_emp: fit.intercept + fit.slope * ld });
        }
    }
    write(target, &rows)
}

fn decay(bundle: &Path, target: &Path) -> Result<()> {
    let src = bundle.join("decay.csv");
    let text = fs::read_to_string(&src).with_context(|| format!("reading {}", src.display()))?;
    if !text.starts_with("xi,value") {
        bail!("{} is not a decay profile", src.display());
    }
    fs::write(target, text)?;
    Ok(())
}

pub fn plotdata(bundle: &Path, figure: &str, out: Option<&Path>) -> Result<ExitCode> {
    if !bundle.is_dir() {
        bail!("bundle {} does not exist", bundle.display());
    }
    let target: PathBuf = out.map(Path::to_path_buf).unwrap_or_else(|| bundle.join(format!("plot_{figure}.csv")));
    match figure {
        "regions" => regions(bundle, &target)?,
        "fits" => fits(bundle, &target)?,
        "decay" => decay(bundle, &target)?,
        other => bail!("unknown figure `{other}` (expected regions, fits or decay)"),
    }
    println!("{}", target.display());
    Ok(ExitCode::SUCCESS)
}
