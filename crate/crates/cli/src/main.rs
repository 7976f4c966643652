//! Command-line front end for the precoding-index puzzle: scoring, solving,
//! closed-form constructions, alignment verification and dominance sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_rational::Ratio;

use dofpuzzle_core::alignment::{self, Backend, VerificationReport, VerifyOptions, DEFAULT_COLUMN_CAP};
use dofpuzzle_core::constructions::{
    classic_g, classic_score, corollary_g, corollary_score, dominance_check, dominance_csv, dominance_dat, MRule,
    SymmetricFamily,
};
use dofpuzzle_core::puzzle::{self, ScoreValue};
use dofpuzzle_core::solver::{self, SolveConfig, SolveMode, SolveReport, DEFAULT_BRUTE_FORCE_CAP};
use dofpuzzle_core::{ChannelSpec, Error, IndexMatrix};

#[derive(Parser, Debug)]
#[command(name = "dofpuzzle", version, about = "Precoding-index puzzle solver and interference-alignment verifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score an index matrix against a channel spec.
    Score {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        g: PathBuf,
    },
    /// Search for a score-maximizing index matrix.
    Solve {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
        mode: ModeArg,
        /// Wall-clock budget in seconds.
        #[arg(long)]
        budget: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Largest label the search may use (defaults to the message count).
        #[arg(long)]
        max_label: Option<u32>,
        /// Random restarts for the heuristic.
        #[arg(long, default_value_t = 64)]
        restarts: usize,
        /// Largest message support the brute-force mode accepts.
        #[arg(long, default_value_t = DEFAULT_BRUTE_FORCE_CAP)]
        brute_cap: usize,
        /// Write the best matrix here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Build the closed-form matrix for the symmetric band family.
    Construct {
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Variant::Corollary)]
        variant: Variant,
        /// Write the matrix here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the family's channel spec here.
        #[arg(long)]
        spec_out: Option<PathBuf>,
    },
    /// Build the alignment scheme and check every receiver for full column rank.
    Verify {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        g: PathBuf,
        #[arg(long, default_value_t = 1)]
        eta: u32,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = BackendArg::Exact)]
        backend: BackendArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = DEFAULT_COLUMN_CAP)]
        column_cap: usize,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Compare both closed forms for every m in 1..=K.
    Sweep {
        #[arg(long = "K")]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Exact,
    Heuristic,
    Brute,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Variant {
    Corollary,
    Classic,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum BackendArg {
    Exact,
    Float,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Dat,
}

/// Outcome of a command that ran to completion.
enum Status {
    Success,
    Failure,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::Failure) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::InvalidIndexMatrix(_)) | Some(Error::Refused(_)) => 1,
        _ => 2,
    }
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Score { spec, g } => score_cmd(&spec, &g),
        Command::Solve {
            spec,
            mode,
            budget,
            seed,
            jobs,
            max_label,
            restarts,
            brute_cap,
            out,
            json,
        } => {
            let time_budget = budget
                .map(|s| Duration::try_from_secs_f64(s).map_err(|_| Error::InvalidArgument(format!("bad budget {s}"))))
                .transpose()?;
            let config = SolveConfig {
                mode: match mode {
                    ModeArg::Exact => SolveMode::Exact,
                    ModeArg::Heuristic => SolveMode::Heuristic,
                    ModeArg::Brute => SolveMode::BruteForce,
                },
                max_label,
                time_budget,
                seed,
                parallelism: jobs,
                restarts,
                brute_force_cap: brute_cap,
            };
            solve_cmd(&spec, &config, out.as_deref(), json)
        }
        Command::Construct {
            k,
            m,
            variant,
            out,
            spec_out,
        } => construct_cmd(k, m, variant, out.as_deref(), spec_out.as_deref()),
        Command::Verify {
            spec,
            g,
            eta,
            trials,
            backend,
            seed,
            jobs,
            column_cap,
            json,
        } => {
            let opts = VerifyOptions {
                eta,
                trials,
                backend: match backend {
                    BackendArg::Exact => Backend::Exact,
                    BackendArg::Float => Backend::Float,
                },
                seed,
                column_cap,
                parallelism: jobs,
            };
            verify_cmd(&spec, &g, &opts, json)
        }
        Command::Sweep { k, out, format } => sweep_cmd(k, out.as_deref(), format),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_spec(path: &Path) -> Result<ChannelSpec> {
    ChannelSpec::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn load_g(path: &Path) -> Result<IndexMatrix> {
    IndexMatrix::parse(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn fraction(r: Ratio<u64>) -> String {
    let value = *r.numer() as f64 / *r.denom() as f64;
    format!("{}/{} ({value:.6})", r.numer(), r.denom())
}

fn row_table(score: &ScoreValue) -> String {
    let mut out = String::from("row  support  interference  load\n");
    for (p, row) in score.per_row.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>3}  {:>7}  {:>12}  {:>4}",
            p + 1,
            row.row_support,
            row.interference_count,
            row.load()
        );
    }
    out
}

fn score_cmd(spec_path: &Path, g_path: &Path) -> Result<Status> {
    let spec = load_spec(spec_path)?;
    let g = load_g(g_path)?;
    let violations = puzzle::validate(&g, &spec)?;
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("violation: {v}");
        }
        return Err(Error::InvalidIndexMatrix(violations).into());
    }
    let score = puzzle::score(&g, &spec)?;
    println!("score: {}", fraction(score.ratio()));
    print!("{}", row_table(&score));
    Ok(Status::Success)
}

fn render_solve(report: &SolveReport) -> String {
    let mode = match report.mode {
        SolveMode::Exact => "exact",
        SolveMode::Heuristic => "heuristic",
        SolveMode::BruteForce => "brute",
    };
    let mut out = String::new();
    let _ = writeln!(out, "mode: {mode}");
    let _ = writeln!(out, "optimal: {}", report.optimal);
    let _ = writeln!(out, "nodes explored: {}", report.nodes_explored);
    let _ = writeln!(out, "score: {}", fraction(report.best_score.ratio()));
    let _ = writeln!(out, "best G:");
    let _ = write!(out, "{}", report.best_g);
    out.push_str(&row_table(&report.best_score));
    out
}

fn solve_cmd(spec_path: &Path, config: &SolveConfig, out: Option<&Path>, json: bool) -> Result<Status> {
    let spec = load_spec(spec_path)?;
    let report = solver::solve(&spec, config)?;
    eprintln!("elapsed: {:.3}s", report.elapsed.as_secs_f64());
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", render_solve(&report));
    }
    if let Some(path) = out {
        write(path, &report.best_g.to_plain())?;
    }
    Ok(Status::Success)
}

fn construct_cmd(k: usize, m: usize, variant: Variant, out: Option<&Path>, spec_out: Option<&Path>) -> Result<Status> {
    let fam = SymmetricFamily::new(k, m)?;
    let spec = fam.spec();
    let (name, g, formula) = match variant {
        Variant::Corollary => ("corollary", corollary_g(&fam), corollary_score(&fam)),
        Variant::Classic => ("classic", classic_g(&fam), classic_score(&fam)),
    };
    let recomputed = puzzle::score(&g, &spec)?;
    println!("variant: {name}");
    println!("K = {k}, m = {m}");
    println!("G:");
    print!("{g}");
    println!("formula score: {}", fraction(formula.ratio()));
    println!("recomputed score: {}", fraction(recomputed.ratio()));
    print!("{}", row_table(&recomputed));
    if let Some(path) = out {
        write(path, &g.to_plain())?;
    }
    if let Some(path) = spec_out {
        write(path, &spec.to_plain())?;
    }
    if formula.ratio() == recomputed.ratio() {
        Ok(Status::Success)
    } else {
        eprintln!("formula and recomputed scores disagree");
        Ok(Status::Failure)
    }
}

fn render_verify(report: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "eta = {}, Gamma = {}, T = {}, p_max = {}, trials = {}",
        report.eta,
        report.gamma,
        report.t,
        report.p_max + 1,
        report.trials
    );
    out.push_str("  p  desired_cols  interference_cols      T  rank        dof_ratio\n");
    for r in &report.per_receiver {
        let rank = if r.ranks.iter().all(Option::is_some) {
            let min = r.ranks.iter().flatten().min().copied().unwrap_or(0);
            min.to_string()
        } else {
            "-".to_string()
        };
        let _ = writeln!(
            out,
            "{:>3}  {:>12}  {:>17}  {:>5}  {:>4}  {}",
            r.rx + 1,
            r.desired_cols,
            r.interference_cols,
            r.rows,
            rank,
            fraction(r.dof_ratio)
        );
    }
    let _ = writeln!(out, "span containment: {}", if report.containment_ok { "ok" } else { "FAILED" });
    for &p in &report.structural_failures {
        let r = &report.per_receiver[p];
        let _ = writeln!(
            out,
            "structural failure: receiver {} needs {} columns but T = {}",
            p + 1,
            r.total_cols,
            report.t
        );
    }
    for &(p, q) in &report.property_one_violations {
        let _ = writeln!(out, "desired link ({}, {}) lies in its own interference set", p + 1, q + 1);
    }
    for v in &report.violations {
        let _ = writeln!(out, "violation: {v}");
    }
    for f in &report.rank_failures {
        let _ = writeln!(
            out,
            "rank deficiency: receiver {} rank {} < {} in trial {} (seed {})",
            f.rx + 1,
            f.rank,
            f.cols,
            f.trial,
            f.trial_seed
        );
    }
    let _ = writeln!(out, "sum dof ratio: {}", fraction(report.dof_sum));
    let _ = writeln!(out, "limit as eta grows: {}", fraction(report.dof_limit_sum));
    let _ = writeln!(out, "overall: {}", report.overall);
    out
}

fn verify_cmd(spec_path: &Path, g_path: &Path, opts: &VerifyOptions, json: bool) -> Result<Status> {
    let spec = load_spec(spec_path)?;
    let g = load_g(g_path)?;
    let clock = Instant::now();
    let report = alignment::verify(&spec, &g, opts)?;
    eprintln!("elapsed: {:.3}s", clock.elapsed().as_secs_f64());
    if json {
        println!("{}", report.to_json());
    } else {
        print!("{}", render_verify(&report));
    }
    Ok(if report.passed() { Status::Success } else { Status::Failure })
}

fn sweep_cmd(k: usize, out: Option<&Path>, format: Format) -> Result<Status> {
    if k == 0 {
        return Err(Error::InvalidArgument("K must be at least 1".into()).into());
    }
    let rows = dominance_check([k], &MRule::All)?;
    let text = match format {
        Format::Csv => dominance_csv(&rows),
        Format::Dat => dominance_dat(&rows),
    };
    match out {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    Ok(Status::Success)
}
