//! `padic-qft`: batch front-end for the workbench. Every run writes CSV
//! data plus a `<command>.manifest.json` echoing the resolved config.
//!
//! Exit status: 0 on success, 2 on invalid input, 3 when a numerical
//! acceptance check fails.

mod commands;
mod config;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::output::{Run, Status};

#[derive(Parser, Debug)]
#[command(name = "padic-qft", version, about = "Desk-scale numerics for p-adic Euclidean quantum fields")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override for the command's acceptance tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true, env = "PADIC_QFT_OUT_DIR", default_value = "padic-qft-out")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Green function on the window with its decay scan.
    #[command(visible_alias = "covariance")]
    Green(GreenArgs),
    /// White-noise samples, optionally convolved with a Green function.
    Sample(SampleArgs),
    /// Schwinger functions from the analytic, Monte Carlo or chaos route.
    Schwinger(SchwingerArgs),
    /// Cluster-property ladder.
    Cluster(ClusterArgs),
    /// Wick-calculus checks on the interaction density.
    Wick(WickArgs),
    /// Positive-definiteness check of a candidate Levy exponent.
    LevyCheck(LevyCheckArgs),
    /// Fast transform against the naive DFT.
    Bench(BenchArgs),
    /// Quick pass over the invariant suite.
    Selftest,
    /// Runs a JSON run config `{command, params, seed, out, tol}`.
    Run {
        #[arg(long)]
        config: String,
    },
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GreenArgs {
    #[arg(long, default_value_t = 3)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    #[arg(long = "K", default_value_t = 6)]
    pub k: u32,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub m: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, value_enum, default_value_t = VariantArg::LPower)]
    pub variant: VariantArg,
    /// Terms of `l` as JSON (inline or a path); the catalog form when absent.
    #[arg(long)]
    pub poly: Option<String>,
    /// Path for the lattice values; the decay scan goes next to it as `<stem>.decay.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantArg {
    LPower,
    ShiftedPower,
    Bessel,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleArgs {
    #[arg(long, default_value_t = 3)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    #[arg(long = "K", default_value_t = 2)]
    pub k: u32,
    /// Levy spec JSON; Gaussian white noise when absent.
    #[arg(long, visible_alias = "spec")]
    pub levy: Option<String>,
    /// Green config JSON; samples are convolved with it when given.
    #[arg(long, visible_alias = "convolve")]
    pub green: Option<String>,
    #[arg(long, visible_alias = "samples", default_value_t = 1)]
    pub replicas: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SourceArg {
    Analytic,
    Mc,
    Chaos,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SchwingerArgs {
    #[arg(long, value_enum, default_value_t = SourceArg::Analytic)]
    pub source: SourceArg,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    /// Interaction `H` JSON; zero when absent.
    #[arg(long)]
    pub h: Option<String>,
    /// Levy spec for the Monte Carlo source.
    #[arg(long)]
    pub levy: Option<String>,
    #[arg(long)]
    pub green: String,
    /// Comma-separated field CSVs.
    #[arg(long)]
    pub funcs: Option<String>,
    #[arg(long, default_value_t = 20_000)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ClusterArgs {
    /// Largest ladder step `j`, with `lambda = p^{-j}`.
    #[arg(long, default_value_t = 4)]
    pub ladder: u32,
    /// Integer coordinates of `a`.
    #[arg(long, default_value = "1")]
    pub direction: String,
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub green: String,
    /// Field CSVs for the fixed block.
    #[arg(long)]
    pub f: Option<String>,
    /// Field CSVs for the translated block.
    #[arg(long)]
    pub g: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum WickCheck {
    Ttransform,
    Os1,
    Homomorphism,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WickArgs {
    #[arg(long)]
    pub h: Option<String>,
    #[arg(long)]
    pub green: String,
    #[arg(long, default_value_t = 4)]
    pub nmax: usize,
    #[arg(long, value_enum, default_value_t = WickCheck::Ttransform)]
    pub check: WickCheck,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LevyCheckArgs {
    /// Interaction `H` JSON, checked through `-H(it) - t^2/2`.
    #[arg(long, conflicts_with = "levy")]
    pub h: Option<String>,
    #[arg(long)]
    pub levy: Option<String>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 3)]
    pub p: u64,
    #[arg(long = "N", default_value_t = 1)]
    pub n: usize,
    /// Sizes `p^{2KN}` for `K = 1..=kmax`.
    #[arg(long, default_value_t = 4)]
    pub kmax: u32,
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    command: String,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out: Option<PathBuf>,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    threads: Option<usize>,
}

/// Turns a run config into the equivalent argument list.
fn run_config_args(cfg: &RunConfig) -> Result<Vec<String>> {
    if cfg.command == "run" {
        bail!("a run config cannot invoke run");
    }
    let mut args = vec!["padic-qft".to_string()];
    if let Some(s) = cfg.seed {
        args.extend(["--seed".into(), s.to_string()]);
    }
    if let Some(o) = &cfg.out {
        args.extend(["--out-dir".into(), o.display().to_string()]);
    }
    if let Some(t) = cfg.tol {
        args.extend(["--tol".into(), t.to_string()]);
    }
    if let Some(t) = cfg.threads {
        args.extend(["--threads".into(), t.to_string()]);
    }
    args.push(cfg.command.clone());
    for (key, value) in &cfg.params {
        let flag = format!("--{}", key.replace('_', "-"));
        let text = match value {
            serde_json::Value::Bool(true) => {
                args.push(flag);
                continue;
            }
            serde_json::Value::Bool(false) | serde_json::Value::Null => continue,
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Number(n) => n.to_string(),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|v| match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect::<Vec<_>>()
                .join(","),
            obj @ serde_json::Value::Object(_) => obj.to_string(),
        };
        args.extend([flag, text]);
    }
    Ok(args)
}

fn dispatch(cli: Cli) -> Result<Status> {
    if let Some(n) = cli.threads {
        // Fails only if a pool already exists, which is harmless here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let name = match &cli.command {
        Command::Green(_) => "green",
        Command::Sample(_) => "sample",
        Command::Schwinger(_) => "schwinger",
        Command::Cluster(_) => "cluster",
        Command::Wick(_) => "wick",
        Command::LevyCheck(_) => "levy-check",
        Command::Bench(_) => "bench",
        Command::Selftest => "selftest",
        Command::Run { config } => {
            let text = config::json_arg(config)?;
            let cfg: RunConfig = serde_json::from_str(&text).context("parsing run config")?;
            let inner = Cli::try_parse_from(run_config_args(&cfg)?)
                .map_err(|e| anyhow::anyhow!(e.to_string().trim_start_matches("error: ").to_string()))?;
            return dispatch(inner);
        }
    };
    let mut run = Run::new(cli.out_dir.clone(), name, cli.seed, cli.tol, cli.threads);
    match cli.command {
        Command::Green(a) => commands::green(&mut run, &a),
        Command::Sample(a) => commands::sample(&mut run, &a),
        Command::Schwinger(a) => commands::schwinger(&mut run, &a),
        Command::Cluster(a) => commands::cluster(&mut run, &a),
        Command::Wick(a) => commands::wick(&mut run, &a),
        Command::LevyCheck(a) => commands::levy_check(&mut run, &a),
        Command::Bench(a) => commands::bench(&mut run, &a),
        Command::Selftest => selftest::run(&mut run),
        Command::Run { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_becomes_flags() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"command": "bench", "params": {"p": 2, "kmax": 2}, "seed": 5, "out": "o"}"#).unwrap();
        let args = run_config_args(&cfg).unwrap();
        assert_eq!(args, ["padic-qft", "--seed", "5", "--out-dir", "o", "bench", "--kmax", "2", "--p", "2"]);
        assert!(Cli::try_parse_from(args).is_ok());
    }
}
