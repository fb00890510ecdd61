use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, LevelFilter};

use arq_cli::report::{bounds_block, certificate_block, write_trace_csv};
use arq_cli::run::{run_solve, run_sweep, write_sweep_csv};
use arq_cli::spec::{parse_list, read_config_file};
use arq_cli::verify::{all_verified, verify_certificate};
use arq_cli::{ExperimentSpec, HarnessError, Result};
use arq_core::diagnostics::{compute_bounds, ProblemConstants};
use arq_core::Certificate;

#[derive(Parser)]
#[command(name = "arq", version, about = "Adaptive regularization with dynamic accuracy: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and verify its certificate.
    Solve(Common),
    /// Run a grid of accuracy targets and report evaluation counts against bounds.
    Sweep(SweepArgs),
    /// Check a point (or a fresh solve) against the exact optimality conditions.
    Verify(VerifyArgs),
    /// Print the theoretical constants as key = value lines.
    Bounds(BoundsArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// exact, truncation or bounded_random.
    #[arg(long)]
    noise: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated targets (one per order, or one for all).
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long)]
    q: Option<usize>,
    /// File of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Comma-separated starting point.
    #[arg(long)]
    x0: Option<String>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Number of seeds per grid point.
    #[arg(long, default_value_t = 1)]
    runs: usize,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Point to verify; a solve is run when omitted.
    #[arg(long)]
    x: Option<String>,
    /// Radii per order, default all ones.
    #[arg(long)]
    delta: Option<String>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    /// Lipschitz constant L_f; estimated from a solve when omitted.
    #[arg(long)]
    lf: Option<f64>,
    /// Lipschitz constant of the p-th derivative, default L_f.
    #[arg(long)]
    lfp: Option<f64>,
    /// f(x0) - f_low.
    #[arg(long)]
    gap: Option<f64>,
}

fn build_spec(c: &Common) -> Result<ExperimentSpec> {
    let mut spec = ExperimentSpec::default();
    if let Some(path) = &c.config {
        spec.apply_all(&read_config_file(path)?)?;
    }
    let flags: [(&str, Option<String>); 10] = [
        ("x0", c.x0.clone()),
        ("problem", c.problem.clone()),
        ("dim", c.dim.map(|v| v.to_string())),
        ("noise", c.noise.clone()),
        ("seed", c.seed.map(|v| v.to_string())),
        ("eps", c.eps.clone()),
        ("p", c.p.map(|v| v.to_string())),
        ("q", c.q.map(|v| v.to_string())),
        ("out", c.out.as_ref().map(|v| v.display().to_string())),
        ("jobs", c.jobs.map(|v| v.to_string())),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            spec.set(k, &v)?;
        }
    }
    Ok(spec)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_solve(c: &Common) -> Result<i32> {
    let spec = build_spec(c)?;
    let rec = run_solve(&spec)?;
    let bounds = bounds_block(&rec.bounds);
    let cert = rec
        .certificate
        .as_ref()
        .map(|cert| certificate_block(cert, &rec.verification));
    if let Some(dir) = &spec.out {
        write_trace_csv(create(dir, "trace.csv")?, &rec.trace)?;
        std::fs::write(dir.join("bounds.txt"), &bounds)?;
        if let Some(text) = &cert {
            std::fs::write(dir.join("certificate.txt"), text)?;
        }
    }
    println!(
        "iterations = {}\nsuccessful = {}\nunsuccessful = {}\naccuracy_improving = {}\nvalue_evals = {}\nderiv_evals = {}",
        rec.trace.len() - 1,
        rec.counts.successful,
        rec.counts.unsuccessful,
        rec.counts.accuracy_improving,
        rec.value_evals,
        rec.deriv_evals
    );
    match cert {
        Some(text) => {
            print!("{text}");
            Ok(0)
        }
        None => {
            eprintln!("iteration budget of {} exhausted", rec.config.max_iters);
            Ok(2)
        }
    }
}

fn cmd_sweep(a: &SweepArgs) -> Result<i32> {
    let mut spec = build_spec(&a.common)?;
    spec.eps_grid = std::mem::take(&mut spec.eps);
    spec.runs = a.runs;
    let summary = run_sweep(&spec)?;
    match &spec.out {
        Some(dir) => write_sweep_csv(create(dir, "sweep.csv")?, &summary.rows)?,
        None => write_sweep_csv(std::io::stdout().lock(), &summary.rows)?,
    }
    println!(
        "value_slope = {}\nderiv_slope = {}\nslope_limit = {}",
        summary.value_slope, summary.deriv_slope, summary.slope_limit
    );
    Ok(0)
}

fn cmd_verify(a: &VerifyArgs) -> Result<i32> {
    let spec = build_spec(&a.common)?;
    let checks = match &a.x {
        Some(x) => {
            let problem = spec.build_problem()?;
            let x_eps = parse_list("x", x)?;
            if x_eps.len() != problem.dim() {
                return Err(HarnessError::InvalidArgument(format!(
                    "point has {} entries, problem dimension is {}",
                    x_eps.len(),
                    problem.dim()
                )));
            }
            let config = spec.build_config()?;
            let delta_eps = match &a.delta {
                Some(d) => parse_list("delta", d)?,
                None => vec![1.0; config.q],
            };
            if delta_eps.len() != config.q {
                return Err(HarnessError::InvalidArgument(format!("delta needs {} entries", config.q)));
            }
            let cert = Certificate {
                x_eps,
                delta_eps,
                epsilons: config.epsilons,
                measured: Vec::new(),
                verified_exact: None,
            };
            let checks = verify_certificate(problem.as_ref(), &cert);
            print!("{}", certificate_block(&cert, &checks));
            checks
        }
        None => {
            let rec = run_solve(&spec)?;
            let Some(cert) = &rec.certificate else {
                eprintln!("iteration budget exhausted before certification");
                return Ok(2);
            };
            print!("{}", certificate_block(cert, &rec.verification));
            rec.verification
        }
    };
    Ok(if all_verified(&checks) { 0 } else { 4 })
}

fn cmd_bounds(a: &BoundsArgs) -> Result<i32> {
    let spec = build_spec(&a.common)?;
    let report = match (a.lf, a.gap) {
        (Some(lf), Some(gap)) => compute_bounds(
            &spec.build_config()?,
            ProblemConstants {
                l_f: lf,
                l_fp: a.lfp.unwrap_or(lf),
                f0_minus_flow: gap,
            },
        )?,
        _ => run_solve(&spec)?.bounds,
    };
    let text = bounds_block(&report);
    if let Some(dir) = &spec.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("bounds.txt"), &text)?;
    }
    print!("{text}");
    Ok(0)
}

fn init_logging() {
    let level = match std::env::var("ARQ_LOG").as_deref() {
        Ok("trace") => LevelFilter::Trace,
        Ok("info") => LevelFilter::Info,
        _ => LevelFilter::Off,
    };
    env_logger::Builder::new().filter_level(level).init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(c) => cmd_solve(c),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bounds(a) => cmd_bounds(a),
    };
    let code = match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    info!("exit code {code}");
    ExitCode::from(code as u8)
}
