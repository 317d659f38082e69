use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rotcd::experiment::{self, RunConfig};
use rotcd::models::ModelKind;
use rotcd::optimizer::{ActionBackend, ProtocolKind};
use rotcd::validation;

#[derive(Parser, Debug)]
#[command(name = "rotcd", version, about = "Rotated-ansatz counterdiabatic driving")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Optimize and simulate every requested protocol on one instance.
    Run(Options),
    /// Disorder-averaged final fidelities over a range of sizes.
    Scaling(Options),
    /// Run the built-in numerical verification suites.
    Validate {
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Options {
    /// JSON file with run settings; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    n_logical: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Grid intervals for the sequential optimization [default: 100].
    #[arg(long)]
    m_points: Option<usize>,
    /// Integrator steps over [0, tau] [default: 2000].
    #[arg(long)]
    steps: Option<usize>,
    /// Comma-separated subset of ua, local-cd, ra, exact-cd.
    #[arg(long, value_delimiter = ',')]
    protocols: Option<Vec<ProtocolKind>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    /// Comma-separated problem sizes for `scaling`.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    backend: Option<ActionBackend>,
    /// Use the larger default size range.
    #[arg(long)]
    full: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl Options {
    fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.model {
            cfg.model = v;
        }
        if let Some(v) = self.n {
            cfg.n = Some(v);
        }
        if let Some(v) = self.n_logical {
            cfg.n_logical = Some(v);
        }
        if let Some(v) = self.tau {
            cfg.tau = v;
        }
        if let Some(v) = self.m_points {
            cfg.m_points = v;
        }
        if let Some(v) = self.steps {
            cfg.steps = v;
        }
        if let Some(v) = &self.protocols {
            cfg.protocols = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.instances {
            cfg.instances = v;
        }
        if let Some(v) = &self.sizes {
            cfg.sizes = Some(v.clone());
        }
        if let Some(v) = self.backend {
            cfg.backend = v;
        }
        cfg.full |= self.full;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(opts: &Options) -> Result<()> {
    let cfg = opts.resolve()?;
    let out = experiment::run(&cfg)?;
    out.write(&opts.out)?;
    for r in &out.runs {
        println!(
            "{:<9} F = {:.6}  F~ = {:.6}",
            r.kind.as_str(),
            r.fidelity.final_f(),
            r.fidelity.final_f_tilde()
        );
    }
    println!("wrote {}", opts.out.display());
    Ok(())
}

fn scaling(opts: &Options) -> Result<()> {
    let cfg = opts.resolve()?;
    let out = experiment::scaling(&cfg)?;
    out.write(&opts.out)?;
    print!("{}", out.to_csv());
    println!("wrote {}", opts.out.display());
    Ok(())
}

fn validate(out: Option<&Path>) -> Result<bool> {
    let reports = validation::run_all()?;
    for r in &reports {
        println!(
            "{} {:<36} max deviation {:.3e} (tolerance {:.1e}, {} checks)",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.max_deviation,
            r.tolerance,
            r.checks
        );
    }
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        let mut s = serde_json::to_string_pretty(&reports)?;
        s.push('\n');
        std::fs::write(dir.join("validation.json"), s)?;
    }
    Ok(reports.iter().all(|r| r.passed))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(o) => run(o).map(|_| true),
        Command::Scaling(o) => scaling(o).map(|_| true),
        Command::Validate { out } => validate(out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
