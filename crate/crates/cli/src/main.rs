use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use sff_core::config::{parse_pairs, ExperimentConfig};
use sff_core::{emit_results, read_metadata, run_experiment};

#[derive(Parser)]
#[command(name = "sff", version, about = "Spectral form factor of coupled chaotic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write the results.
    Run(Box<RunArgs>),
    /// Rerun the experiment recorded in a metadata file.
    Rerun {
        /// `sff.json` written by a previous run.
        metadata: PathBuf,
        /// Output directory (defaults to the recorded one).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// rmte or rotors.
    #[arg(long)]
    model: Option<String>,
    /// Subsystem dimension.
    #[arg(long = "N")]
    n: Option<String>,
    /// Number of subsystems (rmte only).
    #[arg(long = "L")]
    l: Option<String>,
    /// Coupling strength (rmte).
    #[arg(long)]
    epsilon: Option<String>,
    /// Coupling strength (rotors).
    #[arg(long)]
    gamma: Option<String>,
    /// uniform_pi, cosine_of_uniform, gaussian or gaussian:<sigma>.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    realizations: Option<String>,
    /// Largest time; defaults to 3 N^L.
    #[arg(long)]
    tmax: Option<String>,
    /// Comma-separated moment orders.
    #[arg(long)]
    moments: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Odd window, `auto` or `auto:<cap>`.
    #[arg(long)]
    window: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Also write the perturbative prediction.
    #[arg(long)]
    perturbative: bool,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<String>,
    /// Rotor kick strengths.
    #[arg(long)]
    k1: Option<String>,
    #[arg(long)]
    k2: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> BTreeMap<String, String> {
        let flags = [
            ("model", &self.model),
            ("N", &self.n),
            ("L", &self.l),
            ("epsilon", &self.epsilon),
            ("gamma", &self.gamma),
            ("dist", &self.dist),
            ("realizations", &self.realizations),
            ("tmax", &self.tmax),
            ("moments", &self.moments),
            ("seed", &self.seed),
            ("window", &self.window),
            ("out", &self.out),
            ("format", &self.format),
            ("workers", &self.workers),
            ("k1", &self.k1),
            ("k2", &self.k2),
        ];
        let mut map: BTreeMap<String, String> = flags
            .into_iter()
            .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
            .collect();
        if self.perturbative {
            map.insert("perturbative".into(), "true".into());
        }
        map
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        let overrides = self.overrides();
        let cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let mut pairs = parse_pairs(&text).with_context(|| path.display().to_string())?;
                pairs.extend(overrides);
                ExperimentConfig::from_pairs(&pairs)?
            }
            None => ExperimentConfig::from_pairs(&overrides)?,
        };
        Ok(cfg)
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let bundle = run_experiment(cfg)?;
    let files = emit_results(&bundle, cfg.format, &cfg.out)?;
    let s = &bundle.scales;
    eprintln!(
        "{} realizations, N = {}, L = {}: Gamma = {}, tau_SH = {}, tau_Th = {}",
        cfg.realizations,
        cfg.n,
        cfg.l,
        s.gamma,
        s.tau_sh,
        s.tau_th.map_or("undefined".to_string(), |x| x.to_string()),
    );
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => args.resolve().and_then(|cfg| execute(&cfg)),
        Command::Rerun { metadata, out, workers } => read_metadata(&metadata)
            .map_err(anyhow::Error::from)
            .and_then(|meta| {
                let mut cfg = meta.config;
                if let Some(out) = out {
                    cfg.out = out;
                }
                if let Some(w) = workers {
                    cfg.workers = w;
                }
                execute(&cfg)
            }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
