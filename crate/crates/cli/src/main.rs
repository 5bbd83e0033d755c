//! `cpop`: solve, benchmark and verify moment relaxations of complex polynomial problems.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand};
use cpop_core::generators::{generate, Family};
use cpop_core::io::{self, IoError, ProblemFile};
use cpop_core::relax::{complexity_stats, Hierarchy};
use cpop_core::report::{run, verify, RunError, RunOptions, RunReport, VERIFY_TOL};
use cpop_core::sdp::{Orientation, SdpOptions, SolverStatus};
use cpop_core::tolerances::SDP_TOL;
use cpop_core::CpopInstance;
use num_complex::Complex64;

const BENCH_SAMPLES: usize = 10_000;
/// Tolerances for accepting a sampled point as a minimizer.
const FEAS_TOL: f64 = 1e-6;
const ATTAIN_TOL: f64 = 1e-3;

/// Process exit codes.
mod exit {
    pub const OTHER: u8 = 1;
    // 2 is clap's usage error.
    pub const SOLVER: u8 = 3;
    pub const EXTRACTION: u8 = 4;
    pub const PARSE: u8 = 5;
    pub const VERIFY: u8 = 6;
}

#[derive(Parser)]
#[command(name = "cpop", version, about = "Moment-HSOS relaxations for complex polynomial optimization")]
#[command(after_help = "Exit codes: 0 optimal, 1 other error, 2 usage, 3 solver failure, 4 extraction failure, 5 parse error, 6 verification mismatch.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Relaxation order.
    #[arg(long, short = 'r')]
    order: usize,
    #[arg(long, default_value = "real")]
    hierarchy: Hierarchy,
    /// Relative stopping tolerance of the interior-point solver.
    #[arg(long, env = "CPOP_TOL", default_value_t = SDP_TOL)]
    tol: f64,
    /// Run the optimality analysis and extract minimizers.
    #[arg(long)]
    extract: bool,
    /// Write the run report (JSON) to this file.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    orientation: OrientationArg,
    /// Wall-clock limit for the solver, in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Write the standard-form problem in SDPA sparse format.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Multistart samples for a feasible upper bound (sphere and torus sets only).
    /// `bench` uses 10000 when this is zero.
    #[arg(long, default_value_t = 0)]
    samples: usize,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum OrientationArg {
    Auto,
    Substitution,
    MomentBlocks,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Auto => Orientation::Auto,
            OrientationArg::Substitution => Orientation::Substitution,
            OrientationArg::MomentBlocks => Orientation::MomentBlocks,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Generate, solve and report a benchmark instance (extraction always on).
    Bench {
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        args: SolveArgs,
    },
    /// Print moment-matrix sizes and variable counts of the three hierarchies.
    Stats {
        #[arg(long)]
        n: usize,
        #[arg(long, short = 'r')]
        order: usize,
    },
    /// Re-check a report without solving.
    Verify { report: PathBuf },
    /// Write a benchmark instance as a problem file.
    Generate {
        family: Family,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output if omitted.
        #[arg(long, short = 'o')]
        output: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    msg: String,
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::Io { .. } => exit::OTHER,
            _ => exit::PARSE,
        };
        Self { code, msg: e.to_string() }
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Io(e) => e.into(),
            RunError::Mismatch(msg) => Self { code: exit::VERIFY, msg },
            other => Self { code: exit::OTHER, msg: other.to_string() },
        }
    }
}

fn other(msg: impl ToString) -> Failure {
    Failure { code: exit::OTHER, msg: msg.to_string() }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| other(format!("cannot write {}: {e}", path.display())))
}

fn options(args: &SolveArgs, extract: bool, samples: usize) -> RunOptions {
    RunOptions {
        hierarchy: args.hierarchy,
        order: args.order,
        sdp: SdpOptions {
            tol: args.tol,
            time_limit: args.time_limit.map(Duration::from_secs_f64),
            orientation: args.orientation.into(),
            dump: args.dump.clone(),
            ..SdpOptions::default()
        },
        extract,
        samples,
        seed: 0,
    }
}

fn format_point(z: &[Complex64]) -> String {
    z.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect::<Vec<_>>().join(", ")
}

/// A sampled point counts as a minimizer when it is feasible and attains the bound.
fn sample_attains_bound(rep: &RunReport) -> bool {
    rep.sampled.as_ref().is_some_and(|a| {
        a.violation <= FEAS_TOL && (a.objective - rep.value).abs() <= ATTAIN_TOL * rep.value.abs().max(1.0)
    })
}

fn print_summary(rep: &RunReport) {
    println!("instance      {}", rep.problem.name);
    println!("hierarchy     {} (order {})", rep.hierarchy, rep.order);
    println!("blocks        {:?}", rep.block_sides);
    let s = &rep.solver;
    println!(
        "solver        {} after {} iterations, pinf {:.2e}, dinf {:.2e}, gap {:.2e}, {:.2} s",
        s.status, s.iterations, s.primal_infeasibility, s.dual_infeasibility, s.relative_gap, s.seconds
    );
    println!("bound         {:.10}", rep.value);
    if rep.reported != rep.value {
        println!("sqrt(bound)   {:.10}", rep.reported);
    }
    if let Some(c) = &rep.certificate {
        println!("certificate   residual {:.2e} ({})", c.residual, if c.valid { "valid" } else { "invalid" });
    }
    if let Some(a) = &rep.sampled {
        println!("sampled       {:.10} viol={:.1e} z=[{}]", a.objective, a.violation, format_point(&a.point));
    }
    if let Some(e) = &rep.extraction {
        if let Some(f) = &e.flatness {
            println!("flatness      t = {}, rank {} / {}", f.t, f.rank_t, f.rank_low);
        }
        println!("rank M_1      {}", e.rank_m1);
        println!("extraction    {}", e.message);
        for a in &e.atoms {
            println!(
                "  atom w={:.4} f={:.8} viol={:.1e} z=[{}]",
                a.weight,
                a.objective,
                a.violation,
                format_point(&a.point)
            );
        }
    }
    println!("wall time     {:.2} s", rep.wall_seconds);
}

fn solve_and_report(inst: &CpopInstance, args: &SolveArgs, extract: bool, samples: usize) -> Result<(), Failure> {
    let rep = run(inst, &options(args, extract, samples))?;
    print_summary(&rep);
    if let Some(path) = &args.report {
        write_file(path, &rep.to_json())?;
    }
    if rep.solver.status != SolverStatus::Optimal {
        return Err(Failure { code: exit::SOLVER, msg: format!("solver stopped with status {}", rep.solver.status) });
    }
    match &rep.extraction {
        Some(e) if e.atoms.is_empty() && !sample_attains_bound(&rep) => Err(Failure { code: exit::EXTRACTION, msg: e.message.clone() }),
        _ => Ok(()),
    }
}

fn execute(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Solve { file, args } => {
            let inst = io::load(&file)?;
            solve_and_report(&inst, &args, args.extract, args.samples)
        }
        Command::Bench { family, n, seed, args } => {
            let inst = generate(family, n, seed).map_err(other)?;
            let samples = if args.samples == 0 { BENCH_SAMPLES } else { args.samples };
            solve_and_report(&inst, &args, true, samples)
        }
        Command::Stats { n, order } => {
            let s = complexity_stats(n, order);
            println!("{:<8} {:>14} {:>20}", "", "n_sdp", "m_sdp");
            for (name, (side, m)) in [("R-HSOS", s.real_hsos), ("C-HSOS", s.complex_hsos), ("R-SOS", s.real_sos)] {
                println!("{name:<8} {side:>14} {m:>20}");
            }
            Ok(())
        }
        Command::Verify { report } => {
            let text = fs::read_to_string(&report).map_err(|source| IoError::Io { path: report.clone(), source })?;
            let rep = RunReport::from_json(&text)?;
            let v = verify(&rep)?;
            println!("objective            {:.10}", v.feasibility.objective);
            println!("min eigenvalue       {:.3e}", v.feasibility.min_eigenvalue());
            println!("equality violation   {:.3e}", v.feasibility.max_equality_violation);
            if let Some(c) = &v.certificate {
                println!("certificate residual {:.3e}", c.residual);
            }
            for a in &v.atoms {
                println!("atom violation       {:.3e}, objective {:.10}", a.violation, a.objective);
            }
            println!("max deviation        {:.3e}", v.max_deviation);
            if v.max_deviation > VERIFY_TOL {
                return Err(Failure { code: exit::VERIFY, msg: format!("recorded values differ by {:.3e}", v.max_deviation) });
            }
            Ok(())
        }
        Command::Generate { family, n, seed, output } => {
            let inst = generate(family, n, seed).map_err(other)?;
            let text = io::render(&ProblemFile::from_instance(&inst));
            match output {
                Some(path) => write_file(&path, &text),
                None => {
                    print!("{text}");
                    Ok(())
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
