use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use pbnlc_cli::results::PlotKind;
use pbnlc_cli::sim::{make_luts, run_grid};
use pbnlc_cli::{ExperimentConfig, ResultSet};

#[derive(Parser)]
#[command(name = "pbnlc", version, about = "Perturbation-based nonlinearity compensation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment configuration.
    #[arg(short, long)]
    config: PathBuf,
    /// Override a config key, e.g. `--set spans=[20] --set n_symbols=4096`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(&self.config, &self.overrides)
            .with_context(|| format!("loading {}", self.config.display()))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build coefficient tables for every distance in the config.
    MakeLut(ConfigArgs),
    /// BER versus launch power for every engine and distance.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Result CSV.
        #[arg(short, long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Maximum reach per engine over the distance grid.
    Reach {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(short, long, default_value = "reach.csv")]
        out: PathBuf,
    },
    /// Plot-ready CSV from a result file.
    PlotData {
        /// Result CSV written by `run` or `reach`.
        results: PathBuf,
        /// `ber_vs_power` or `reach_vs_power`.
        #[arg(long, default_value = "ber_vs_power")]
        kind: PlotKind,
        #[arg(long, default_value_t = pbnlc::metrics::FEC_BER)]
        fec_ber: f64,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

fn sweep(cfg: &ExperimentConfig, out: &PathBuf) -> Result<ResultSet> {
    let records = run_grid(cfg)?;
    let rs = ResultSet {
        fingerprint: cfg.fingerprint(),
        records,
    };
    rs.save(out)?;
    println!("wrote {} records to {}", rs.records.len(), out.display());
    Ok(rs)
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::MakeLut(args) => {
            let cfg = args.load()?;
            for r in make_luts(&cfg)? {
                println!(
                    "{:<12} {:>3} spans  {:>10} tuples  {:>8} kept  {:>8} clusters  {}",
                    r.order.as_str(),
                    r.spans,
                    r.tuples,
                    r.kept,
                    r.clusters,
                    r.path.display()
                );
            }
        }
        Command::Run { cfg, out } => {
            let cfg = cfg.load()?;
            let rs = sweep(&cfg, &out)?;
            for (engine, d, t) in rs.thresholds(cfg.fec_ber) {
                match t {
                    Ok(p) => println!("{engine:<4} {:>6.0} km  threshold {p:+.2} dBm", d / 1e3),
                    Err(e) => println!("{engine:<4} {:>6.0} km  threshold n/a ({e})", d / 1e3),
                }
            }
        }
        Command::Reach { cfg, out } => {
            let cfg = cfg.load()?;
            let rs = sweep(&cfg, &out)?;
            for (engine, r) in rs.reach(cfg.fec_ber) {
                match r {
                    Ok(r) => println!(
                        "{engine:<4} reach {:>6.0} km at {:+.2} dBm",
                        r.max_reach / 1e3,
                        r.optimal_power
                    ),
                    Err(e) => println!("{engine:<4} reach n/a ({e})"),
                }
            }
        }
        Command::PlotData {
            results,
            kind,
            fec_ber,
            out,
        } => {
            let rs = ResultSet::load(&results)?;
            let text = rs.plot_data(kind, fec_ber)?;
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}
