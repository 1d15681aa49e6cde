use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use vaxtender::analysis::{
    beta_sweep, gantt_svg, robustness, schedule_similarity, solve_instance, SolutionFile, SolveReport, TenderSchedule,
};
use vaxtender::bnb::{MilpStatus, SolveParams};
use vaxtender::exec;
use vaxtender::forecast::{fit_alpha, read_series_csv, ses_forecast, write_series_csv};
use vaxtender::instance::{instance_from_json, validate_instance, Instance};
use vaxtender::model::mps::export_mps;
use vaxtender::model::{build_model, model_to_dump, BuildOptions};

#[derive(Parser)]
#[command(name = "vaxtender", version, about = "Coordinated vaccine tender scheduling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an instance file and list every violated invariant.
    Validate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Solve an instance; writes solution.json, report.json and schedule.svg.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Write the built model as MPS or JSON.
    Export {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// `mps` or `json`.
        #[arg(long, default_value = "mps")]
        format: String,
        #[command(flatten)]
        coverage: CoverageArgs,
    },
    /// Extend an observed `period,value` series by simple exponential smoothing.
    Forecast {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Smoothing factor in (0,1]; fitted on a grid when omitted.
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        horizon: usize,
    },
    /// Re-solve the instance for each shortage penalty β.
    Sweep {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated β values.
        #[arg(long, value_delimiter = ',', required = true)]
        betas: Vec<f64>,
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Print the cosine similarity of two schedule or report files.
    Compare { left: PathBuf, right: PathBuf },
    /// Similarity of the schedule under random demand and capacity noise.
    Robustness {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        samples: usize,
        /// Maximum relative change of each demand entry, in percent.
        #[arg(long, default_value_t = 10.0)]
        demand_pct: f64,
        #[arg(long, default_value_t = 10.0)]
        capacity_pct: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        solve: SolveArgs,
    },
}

#[derive(Args, Clone, Copy)]
struct CoverageArgs {
    /// Count only tenders still running toward coverage (default).
    #[arg(long, conflicts_with = "paper_literal_coverage")]
    strict_coverage: bool,
    /// Count every tender started within the last L periods toward coverage.
    #[arg(long)]
    paper_literal_coverage: bool,
}

impl CoverageArgs {
    fn options(self) -> BuildOptions {
        BuildOptions { strict_coverage: !self.paper_literal_coverage }
    }
}

#[derive(Args, Clone)]
struct SolveArgs {
    /// Relative optimality gap.
    #[arg(long, default_value_t = 1e-6)]
    gap: f64,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    #[command(flatten)]
    coverage: CoverageArgs,
}

impl SolveArgs {
    fn params(&self) -> Result<SolveParams> {
        let time_limit = match self.time_limit {
            Some(s) if !(s.is_finite() && s > 0.0) => bail!("--time-limit must be a positive number of seconds"),
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        let params = SolveParams { rel_gap: self.gap, time_limit, node_limit: self.node_limit, ..Default::default() };
        params.validate()?;
        Ok(params)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).format_timestamp(None).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<u8> {
    match command {
        Command::Validate { instance } => {
            load_instance(&instance)?;
            println!("ok");
            Ok(0)
        }
        Command::Solve { instance, out, solve } => cmd_solve(&instance, &out, &solve),
        Command::Export { instance, out, format, coverage } => cmd_export(&instance, &out, &format, coverage),
        Command::Forecast { input, out, alpha, horizon } => cmd_forecast(&input, &out, alpha, horizon),
        Command::Sweep { instance, out, betas, solve } => {
            let inst = load_instance(&instance)?;
            let params = solve.params()?;
            let result =
                exec::with_threads(solve.jobs, || beta_sweep(&inst, &betas, solve.coverage.options(), &params))?;
            for e in &result.entries {
                match (&e.total_unvaccinated, &e.error) {
                    (Some(total), _) => log::info!("beta={} unvaccinated={total}", e.beta),
                    (None, Some(err)) => log::warn!("beta={} failed: {err}", e.beta),
                    _ => {}
                }
            }
            write_file(&out, &to_json(&result)?)?;
            Ok(0)
        }
        Command::Compare { left, right } => {
            let sim = schedule_similarity(&load_schedule(&left)?, &load_schedule(&right)?)?;
            println!("{sim:.6}");
            Ok(0)
        }
        Command::Robustness { instance, out, samples, demand_pct, capacity_pct, seed, solve } => {
            let inst = load_instance(&instance)?;
            let params = solve.params()?;
            let result = exec::with_threads(solve.jobs, || {
                robustness(&inst, samples, demand_pct, capacity_pct, seed, solve.coverage.options(), &params)
            })?;
            if let (Some(lo), Some(hi)) = (result.min_similarity, result.max_similarity) {
                log::info!("similarity range [{lo:.6}, {hi:.6}]");
            }
            write_file(&out, &to_json(&result)?)?;
            Ok(0)
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = instance_from_json(&text).with_context(|| format!("loading {}", path.display()))?;
    let report = validate_instance(&inst);
    if !report.is_empty() {
        bail!("{}: invalid instance: {report}", path.display());
    }
    Ok(inst)
}

/// The schedule part of a solve report.
#[derive(Deserialize)]
struct ReportSchedule {
    instance: String,
    schedule: BTreeMap<String, Vec<(usize, usize)>>,
}

/// Accepts a bare schedule or a solve report.
fn load_schedule(path: &Path) -> Result<TenderSchedule> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(s) = serde_json::from_str::<TenderSchedule>(&text) {
        return Ok(s);
    }
    let r: ReportSchedule = serde_json::from_str(&text)
        .with_context(|| format!("{}: expected a schedule or solve report", path.display()))?;
    Ok(TenderSchedule { instance: r.instance, tenders: r.schedule })
}

fn exit_code(status: MilpStatus) -> u8 {
    match status {
        MilpStatus::Optimal | MilpStatus::GapReached => 0,
        MilpStatus::Infeasible => 2,
        MilpStatus::TimeLimit | MilpStatus::NodeLimit => 3,
    }
}

fn cmd_solve(instance: &Path, out: &Path, args: &SolveArgs) -> Result<u8> {
    let inst = load_instance(instance)?;
    let params = args.params()?;
    let solved = exec::with_threads(args.jobs, || solve_instance(&inst, args.coverage.options(), &params))?;
    let sol = &solved.solution;
    log::info!(
        "status={} objective={} gap={:.3e} nodes={}",
        serde_json::to_string(&sol.status)?.trim_matches('"'),
        sol.objective,
        sol.gap,
        sol.nodes
    );
    let report = SolveReport::new(&inst, &solved.model, sol, params.int_tol)?;
    let solution = to_json(&SolutionFile::new(&inst, &solved.model, sol))?;
    let report_json = to_json(&report)?;
    let svg = gantt_svg(&report.schedule(), inst.num_periods);
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    write_file(&out.join("solution.json"), &solution)?;
    write_file(&out.join("report.json"), &report_json)?;
    write_file(&out.join("schedule.svg"), &svg)?;
    Ok(exit_code(sol.status))
}

fn cmd_export(instance: &Path, out: &Path, format: &str, coverage: CoverageArgs) -> Result<u8> {
    let inst = load_instance(instance)?;
    let model = build_model(&inst, coverage.options())?;
    let text = match format {
        "mps" => export_mps(&model)?,
        "json" => to_json(&model_to_dump(&model))?,
        other => bail!("unknown export format {other:?} (expected mps or json)"),
    };
    write_file(out, &text)?;
    Ok(0)
}

fn cmd_forecast(input: &Path, out: &Path, alpha: Option<f64>, horizon: usize) -> Result<u8> {
    let file = fs::File::open(input).with_context(|| format!("reading {}", input.display()))?;
    let rows = read_series_csv(file).with_context(|| format!("parsing {}", input.display()))?;
    let obs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let alpha = match alpha {
        Some(a) => a,
        None => {
            let a = fit_alpha(&obs, None)?;
            log::info!("fitted alpha={a}");
            a
        }
    };
    let series = ses_forecast(&obs, alpha, horizon, None)?;
    let last = rows.last().map_or(0, |r| r.0);
    let forecast: Vec<(usize, f64)> = series.forecast.iter().enumerate().map(|(i, &v)| (last + 1 + i, v)).collect();
    let mut buf = Vec::new();
    write_series_csv(&mut buf, &forecast)?;
    write_file(out, std::str::from_utf8(&buf)?)?;
    Ok(0)
}

fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}
