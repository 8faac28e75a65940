use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use sphlab::dyadic::{certify_sparsity, SparseCollection};

use sphlab_cli::config::ExperimentConfig;
use sphlab_cli::run::{self, Invariant, Outcome};
use sphlab_cli::plot;

#[derive(Parser)]
#[command(name = "sphlab", version, about = "Spherical maximal function experiments")]
struct Cli {
    /// Experiment recipe (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed in the recipe.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output root; the recipe's `out`, then `sphlab-out`, when unset.
    #[arg(long, global = true, env = "SPHLAB_OUT")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in the recipe and write a result bundle.
    Run,
    /// Emit the data behind a figure from an existing bundle.
    Plotdata {
        /// Bundle directory written by `run`.
        bundle: PathBuf,
        /// One of `regions`, `fits`, `decay`.
        figure: String,
        /// Target file; defaults to `plot_<figure>.csv` inside the bundle.
        #[arg(long)]
        to: Option<PathBuf>,
    },
    /// Re-check a serialized sparse collection.
    Certify {
        collection: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        eta: f64,
    },
    /// Print or write the exponent regions of one dimension.
    Regions {
        #[arg(long, default_value_t = 2)]
        n: usize,
    },
}

#[derive(Serialize)]
struct Manifest {
    experiment: String,
    id: String,
    config_hash: String,
    config: String,
    seed: u64,
    versions: Versions,
    wall_time_seconds: f64,
    files: Vec<FileHash>,
    invariants: Vec<Invariant>,
    passed: bool,
}

#[derive(Serialize)]
struct Versions {
    sphlab: &'static str,
    sphlab_cli: &'static str,
}

#[derive(Serialize)]
struct FileHash {
    path: String,
    sha256: String,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn output_root(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .unwrap_or_else(|| PathBuf::from("sphlab-out"))
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli.config.as_ref().context("`run` needs --config <recipe.toml>")?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn write_manifest(dir: &Path, cfg: &ExperimentConfig, outcome: &Outcome, seconds: f64) -> Result<()> {
    // the output location is not part of the experiment
    let mut canonical = cfg.clone();
    canonical.out = None;
    let text = canonical.to_toml();
    let mut files = Vec::new();
    for f in &outcome.files {
        let bytes = fs::read(f)?;
        let rel = f.strip_prefix(dir).unwrap_or(f);
        files.push(FileHash { path: rel.display().to_string(), sha256: sha256_hex(&bytes) });
    }
    let manifest = Manifest {
        experiment: cfg.experiment.name().into(),
        id: cfg.id(),
        config_hash: sha256_hex(text.as_bytes()),
        config: text,
        seed: cfg.seed,
        versions: Versions { sphlab: sphlab::VERSION, sphlab_cli: env!("CARGO_PKG_VERSION") },
        wall_time_seconds: seconds,
        files,
        invariants: outcome.invariants.clone(),
        passed: outcome.passed(),
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(())
}

fn cmd_run(cli: &Cli) -> Result<ExitCode> {
    let cfg = load_config(cli)?;
    let problems = cfg.validate();
    if !problems.is_empty() {
        for p in &problems {
            eprintln!("invalid config: {p}");
        }
        return Ok(ExitCode::from(2));
    }
    let dir = output_root(cli, Some(&cfg)).join(cfg.id());
    let t0 = Instant::now();
    let outcome = run::execute(&cfg, &dir)?;
    write_manifest(&dir, &cfg, &outcome, t0.elapsed().as_secs_f64())?;
    for inv in outcome.invariants.iter().filter(|i| !i.passed) {
        eprintln!("invariant failed: {} {}", inv.name, inv.detail);
    }
    println!("{}", dir.display());
    Ok(if outcome.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_certify(path: &Path, eta: f64) -> Result<ExitCode> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let sc = SparseCollection::from_json(&text)?;
    let cert = certify_sparsity(&sc, eta)?;
    if cert.sparse {
        println!("sparse: {} cubes, η = {eta}", sc.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("not sparse at η = {eta}: {:?}", cert.witness);
        Ok(ExitCode::from(1))
    }
}

fn cmd_regions(cli: &Cli, n: usize) -> Result<ExitCode> {
    if !(2..=3).contains(&n) {
        bail!("regions are tabulated for n = 2 and n = 3, got {n}");
    }
    let mut outcome = Outcome::default();
    let file = run::regions_file(n, &mut outcome)?;
    let text = serde_json::to_string_pretty(&file)? + "\n";
    if cli.out.is_some() {
        let root = output_root(cli, None);
        fs::create_dir_all(&root)?;
        let path = root.join(format!("regions_n{n}.json"));
        fs::write(&path, text)?;
        println!("{}", path.display());
    } else {
        print!("{text}");
    }
    Ok(if outcome.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Run => cmd_run(&cli),
        Command::Plotdata { bundle, figure, to } => plot::plotdata(bundle, figure, to.as_deref()),
        Command::Certify { collection, eta } => cmd_certify(collection, *eta),
        Command::Regions { n } => cmd_regions(&cli, *n),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
