//! `gtasep` — command-line front end of the laboratory.
//!
//! Subcommands: simulate, exact-dist, limit-dist, chart, kpz-sweep,
//! trans-sweep, compare.  Configuration is TOML (or JSON with the same
//! schema); every number printed is reproducible by the corresponding
//! library call.  Exit codes: 0 ok, 1 declared tolerance failed, 2 error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use gtasep_core::exact::{joint_distribution, TruncationPolicy};
use gtasep_core::harness::{
    density_profile_check, kpz_sweep, ring_stationary_check, theorem1_vs_mc, trans_sweep,
    ComparisonReport, KpzSweepConfig, TransSweepConfig,
};
use gtasep_core::limits::{
    fredholm_det, ContinuumFredholmProblem, GridKind, GridSpec, LimitKernelId,
};
use gtasep_core::model::{InitialCondition, ModelParams, TaggedQuery};
use gtasep_core::sim::simulate_tagged;
use gtasep_core::stationary::{chart_from_fugacity, kpz_invariants, Fugacity};

#[derive(Parser)]
#[command(name = "gtasep", about = "generalized-update TASEP laboratory", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample tagged-particle positions; writes CSV plus a JSON sidecar.
    Simulate(SimulateArgs),
    /// Exact joint distribution of tagged positions (Fredholm determinant).
    ExactDist(ExactArgs),
    /// Continuum limit-kernel gap probability.
    LimitDist(LimitArgs),
    /// Stationary chart over a fugacity grid, as CSV.
    Chart(ChartArgs),
    /// KPZ-regime convergence ladder (exact law vs Airy one-point law).
    KpzSweep(ConfigArgs),
    /// Transitional-regime ladder (Monte Carlo vs transitional kernels).
    TransSweep(ConfigArgs),
    /// Generic comparison driven by a config file.
    Compare(ConfigArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    mu: f64,
    /// step | alternating
    #[arg(long)]
    ic: String,
    #[arg(long)]
    t: u64,
    /// comma-separated tagged indices, strictly increasing
    #[arg(long)]
    tagged: String,
    #[arg(long)]
    samples: usize,
    /// mandatory for reproducibility
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    margin: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ExactArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    ic: String,
    #[arg(long)]
    t: u64,
    /// query as "n:a,n:a,..."
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 0)]
    margin: u64,
    /// rerun with doubled margin and nodes, fail on disagreement
    #[arg(long, default_value_t = false)]
    validate: bool,
}

#[derive(Args)]
struct LimitArgs {
    /// airy2 | airy1 | trans-step | trans-alt | x1 | gauss-n
    #[arg(long)]
    kernel: String,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// comma-separated time points
    #[arg(long)]
    times: String,
    /// comma-separated thresholds
    #[arg(long)]
    thresholds: String,
    /// gauss | uniform
    #[arg(long, default_value = "gauss")]
    grid: String,
    #[arg(long, default_value_t = 48)]
    nodes: usize,
    #[arg(long, default_value_t = 12.0)]
    window: f64,
}

#[derive(Args)]
struct ChartArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    mu: f64,
    #[arg(long, default_value_t = 40)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML (or JSON) configuration file
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

/// Generic comparison config: which comparison plus its parameters.
#[derive(Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
enum CompareConfig {
    McVsExact {
        params: ModelParams,
        ic: String,
        t: u64,
        indices: (i64, i64),
        grid: usize,
        samples: usize,
        seed: u64,
    },
    KpzSweep(KpzSweepConfig),
    TransSweep(TransSweepConfig),
    DensityProfile {
        params: ModelParams,
        t: u64,
        samples: usize,
        seed: u64,
        chi_bin: f64,
        edge_margin: f64,
        tolerance: f64,
    },
    RingStationary {
        params: ModelParams,
        sites: u64,
        particles: u64,
        replicas: usize,
        t_measure: u64,
        seed: u64,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("GTASEP_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn parse_ic(s: &str) -> Result<InitialCondition> {
    match s {
        "step" => Ok(InitialCondition::Step),
        "alternating" | "alt" => Ok(InitialCondition::Alternating),
        other => bail!("unknown initial condition '{other}' (step|alternating)"),
    }
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .map(|x| x.trim().parse::<T>().context("bad list entry"))
        .collect()
}

fn load_config<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(toml::from_str(&text)?)
    }
}

fn write_report(report: &ComparisonReport, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let json = serde_json::to_string_pretty(report)?;
    fs::write(out.join(format!("{}.json", report.label)), &json)?;
    fs::write(out.join(format!("{}.csv", report.label)), report.plot_csv())?;
    println!("{json}");
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Simulate(a) => {
            let params = ModelParams::new(a.p, a.mu)?;
            let ic = parse_ic(&a.ic)?;
            let tagged: Vec<i64> = parse_list(&a.tagged)?;
            let batch = simulate_tagged(&ic, &params, a.t, &tagged, a.samples, a.seed, a.margin)?;
            fs::create_dir_all(&a.out)?;
            let mut csv = fs::File::create(a.out.join("batch.csv"))?;
            batch.write_csv(&mut csv)?;
            let mut side = fs::File::create(a.out.join("batch.json"))?;
            writeln!(side, "{}", serde_json::to_string_pretty(&batch.sidecar_json())?)?;
            println!(
                "wrote {} samples of {:?} to {:?}",
                batch.len(),
                batch.indices,
                a.out
            );
            Ok(true)
        }
        Command::ExactDist(a) => {
            let params = ModelParams::new(a.p, a.mu)?;
            let ic = parse_ic(&a.ic)?;
            let entries: Result<Vec<(i64, i64)>> = a
                .query
                .split(',')
                .map(|pair| {
                    let (n, thr) = pair
                        .split_once(':')
                        .context("query entries look like n:a")?;
                    Ok((n.trim().parse()?, thr.trim().parse()?))
                })
                .collect();
            let query = TaggedQuery::new(entries?)?;
            let policy = TruncationPolicy {
                margin: a.margin,
                validate: a.validate,
                ..Default::default()
            };
            let start = Instant::now();
            let jd = joint_distribution(&ic, a.t, &query, &params, &policy)?;
            let out = serde_json::json!({
                "value": jd.value,
                "matrix_dim": jd.dim,
                "contour_nodes": jd.nodes,
                "stability": jd.stability,
                "elapsed_ms": start.elapsed().as_millis() as u64,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::LimitDist(a) => {
            let kernel = match a.kernel.as_str() {
                "airy2" => LimitKernelId::Airy2,
                "airy1" => LimitKernelId::Airy1,
                "trans-step" => LimitKernelId::TransStep,
                "trans-alt" => LimitKernelId::TransAlt { tau: a.tau },
                "x1" => LimitKernelId::X1,
                "gauss-n" => LimitKernelId::GaussN,
                other => bail!("unknown kernel '{other}'"),
            };
            let times: Vec<f64> = parse_list(&a.times)?;
            let thresholds: Vec<f64> = parse_list(&a.thresholds)?;
            let kind = match a.grid.as_str() {
                "gauss" => GridKind::Gauss,
                "uniform" => GridKind::Uniform,
                other => bail!("unknown grid kind '{other}'"),
            };
            let problem = ContinuumFredholmProblem::new(
                kernel,
                times,
                thresholds,
                GridSpec {
                    kind,
                    nodes: a.nodes,
                    window: a.window,
                },
            )?;
            let start = Instant::now();
            let value = fredholm_det(&problem)?;
            let out = serde_json::json!({
                "value": value,
                "grid": {"kind": a.grid, "nodes": a.nodes, "window": a.window},
                "elapsed_ms": start.elapsed().as_millis() as u64,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(true)
        }
        Command::Chart(a) => {
            let params = ModelParams::new(a.p, a.mu)?;
            let mut csv = String::from("z_c,c,j_inf,chi,theta,kappa_f,kappa_c,lambda_tilde,A\n");
            for k in 1..a.points {
                let z = k as f64 / a.points as f64;
                let chart = chart_from_fugacity(Fugacity(z), &params);
                let inv = kpz_invariants(Fugacity(z), &params);
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    chart.z_c,
                    chart.c,
                    chart.j_inf,
                    chart.chi,
                    chart.theta,
                    chart.kappa_f,
                    chart.kappa_c,
                    inv.lambda_tilde,
                    inv.amplitude
                ));
            }
            match a.out {
                Some(path) => fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::KpzSweep(a) => {
            let cfg: KpzSweepConfig = load_config(&a.config)?;
            let report = kpz_sweep(&cfg)?;
            let pass = report.pass;
            write_report(&report, &a.out)?;
            Ok(pass)
        }
        Command::TransSweep(a) => {
            let cfg: TransSweepConfig = load_config(&a.config)?;
            let report = trans_sweep(&cfg)?;
            let pass = report.pass;
            write_report(&report, &a.out)?;
            Ok(pass)
        }
        Command::Compare(a) => {
            let cfg: CompareConfig = load_config(&a.config)?;
            let report = match cfg {
                CompareConfig::McVsExact {
                    params,
                    ic,
                    t,
                    indices,
                    grid,
                    samples,
                    seed,
                } => theorem1_vs_mc(&parse_ic(&ic)?, &params, t, indices, grid, samples, seed)?,
                CompareConfig::KpzSweep(c) => kpz_sweep(&c)?,
                CompareConfig::TransSweep(c) => trans_sweep(&c)?,
                CompareConfig::DensityProfile {
                    params,
                    t,
                    samples,
                    seed,
                    chi_bin,
                    edge_margin,
                    tolerance,
                } => {
                    let (sup, rows) =
                        density_profile_check(&params, t, samples, seed, chi_bin, edge_margin)?;
                    let coverage = rows
                        .iter()
                        .map(|&(chi, emp, th)| gtasep_core::harness::CoveragePoint {
                            label: format!("chi={chi:.3}"),
                            reference: th,
                            estimate: emp,
                            ci_lo: emp,
                            ci_hi: emp,
                            covered: (emp - th).abs() <= tolerance,
                        })
                        .collect();
                    ComparisonReport {
                        label: "density-profile".into(),
                        sup_cdf_distance: Some(sup),
                        ks_statistic: None,
                        ks_noise_floor: None,
                        coverage,
                        ladder: Vec::new(),
                        ladder_monotone: None,
                        tolerance: Some(tolerance),
                        pass: sup <= tolerance,
                    }
                }
                CompareConfig::RingStationary {
                    params,
                    sites,
                    particles,
                    replicas,
                    t_measure,
                    seed,
                } => {
                    let check = ring_stationary_check(
                        &params, sites, particles, replicas, t_measure, seed,
                    )?;
                    ComparisonReport {
                        label: "ring-stationary".into(),
                        sup_cdf_distance: None,
                        ks_statistic: None,
                        ks_noise_floor: None,
                        coverage: vec![gtasep_core::harness::CoveragePoint {
                            label: "current".into(),
                            reference: check.j_inf,
                            estimate: check.current,
                            ci_lo: check.current - 3.0 * check.current_se,
                            ci_hi: check.current + 3.0 * check.current_se,
                            covered: check.within_sigmas <= 3.0,
                        }],
                        ladder: vec![],
                        ladder_monotone: None,
                        tolerance: Some(0.01),
                        pass: check.within_sigmas <= 3.0 && check.chi2_pvalue > 0.01,
                    }
                }
            };
            if report.coverage.is_empty() && report.ladder.is_empty() {
                bail!("empty comparison set");
            }
            let pass = report.pass;
            write_report(&report, &a.out)?;
            Ok(pass)
        }
    }
}
