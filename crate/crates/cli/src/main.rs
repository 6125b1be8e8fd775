use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qrpm::harness::{self, ExperimentConfig};

#[derive(Parser)]
#[command(name = "qrpm", version, about = "Classical simulator of the quantum random power method")]
struct Cli {
    /// Worker threads for replicas and sweep points.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML, or JSON by extension).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::from_path(&self.config)
            .with_context(|| format!("loading {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the power iteration at every sweep point.
    Run(Common),
    /// Full-cache perturbation table.
    Table(Common),
    /// Run a named property suite.
    Check {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dump Fejér coefficients for every sweep point.
    Expand(Common),
    /// Fill or inspect element caches.
    #[command(subcommand)]
    Cache(CacheCommand),
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Estimate every element and write cache.csv per point.
    Fill(Common),
    /// Summarize a cache.csv file.
    Inspect { path: PathBuf },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Run(c) => {
            let cfg = c.load()?;
            for s in harness::cmd_run(&cfg)? {
                let fid = s.fidelity_mean.map(|f| format!("{f:.6}")).unwrap_or_else(|| "n/a".into());
                println!("{} fidelity_mean={fid} rayleigh_mean={:.6} cache_sha256={}", s.point, s.rayleigh_mean, s.cache_sha256);
            }
            println!("wrote {}", cfg.output_dir.display());
        }
        Command::Table(c) => {
            let cfg = c.load()?;
            for (v, r) in harness::cmd_table(&cfg)? {
                println!(
                    "parameter={v} lhs={:.6} rhs={:.6} lam1_tilde={:.6} lam2_tilde={:.6} overlap={:.6}",
                    r.e_norm,
                    r.half_gap,
                    r.lam1_tilde,
                    r.lam2_tilde,
                    r.min_overlap()
                );
            }
            println!("wrote {}", cfg.output_dir.join("table.csv").display());
        }
        Command::Check { suite, seed } => {
            let report = harness::cmd_check(&suite, seed)?;
            println!("{}", report.line());
            if !report.passed {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Expand(c) => {
            for p in harness::cmd_expand(&c.load()?)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Cache(CacheCommand::Fill(c)) => {
            for (p, sha) in harness::cmd_cache_fill(&c.load()?)? {
                println!("{} sha256={sha}", p.display());
            }
        }
        Command::Cache(CacheCommand::Inspect { path }) => {
            let s = harness::cmd_cache_inspect(&path)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}
