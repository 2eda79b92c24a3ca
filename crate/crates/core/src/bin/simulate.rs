use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use cdma_nash::harness::{emit_records, run_experiment, ExperimentConfig};
use cdma_nash::Error;

/// Monte-Carlo experiments for equilibrium power allocation in uplink CDMA.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// theory-vs-sim, utility-vs-L, inverse-power-vs-alpha, ordering-gain-vs-L or property-suite
    #[arg(long)]
    experiment: Option<String>,
    /// Number of users
    #[arg(long = "K")]
    k: Option<String>,
    /// Spreading length
    #[arg(long = "N")]
    n: Option<String>,
    /// Path count, or a comma-separated list
    #[arg(long = "L")]
    l: Option<String>,
    #[arg(long)]
    sigma2: Option<String>,
    /// Bits per packet
    #[arg(long = "M")]
    m: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// mf, mmse, opt, mf-sic, mmse-sic (comma-separated) or all
    #[arg(long)]
    filter: Option<String>,
    /// random, decreasing or increasing
    #[arg(long)]
    ordering: Option<String>,
    /// Comma-separated loads
    #[arg(long = "alpha-sweep")]
    alpha_sweep: Option<String>,
    /// Output file; standard output when absent
    #[arg(long)]
    output: Option<String>,
    /// csv or json (one object per line)
    #[arg(long)]
    format: Option<String>,
    /// Worker threads
    #[arg(long)]
    workers: Option<String>,
    /// Power ceiling; allocations above it are flagged infeasible
    #[arg(long)]
    pmax: Option<String>,
    /// Mean total channel energy
    #[arg(long)]
    rho: Option<String>,
    /// key = value file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Cli {
    fn flags(&self) -> [(&'static str, &Option<String>); 16] {
        [
            ("experiment", &self.experiment),
            ("K", &self.k),
            ("N", &self.n),
            ("L", &self.l),
            ("sigma2", &self.sigma2),
            ("M", &self.m),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("filter", &self.filter),
            ("ordering", &self.ordering),
            ("alpha-sweep", &self.alpha_sweep),
            ("output", &self.output),
            ("format", &self.format),
            ("workers", &self.workers),
            ("pmax", &self.pmax),
            ("rho", &self.rho),
        ]
    }

    fn config(&self) -> Result<ExperimentConfig, Error> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_kv_file(path)?;
        }
        for (key, value) in self.flags() {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match cli.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("simulate: {e}");
            return ExitCode::from(if matches!(e, Error::Io { .. }) { 1 } else { 2 });
        }
    };
    let result = run_experiment(&cfg).and_then(|recs| emit_records(&recs, cfg.format, cfg.output.as_deref()));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Usage(_)) => {
            eprintln!("simulate: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("simulate: {e}");
            ExitCode::from(1)
        }
    }
}
