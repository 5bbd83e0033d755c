//! Interior-point solution of LMI programs.

mod dump;
mod ipm;
mod presolve;

use std::path::Path;
use std::time::{Duration, Instant};

use faer::Mat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::min_eigenvalue;
use crate::relax::LmiProgram;
use crate::tolerances::{SDP_MAX_ITER, SDP_TOL};


#[derive(Debug, Error)]
pub enum SdpError {
    #[error("requested orientation is not available for this program")]
    OrientationUnavailable,
    #[error("i/o error writing debug dump: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverStatus {
    Optimal,
    MaxIterations,
    TimeLimit,
    InfeasibleSuspected,
    NumericalFailure,
}

impl std::fmt::Display for SolverStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Optimal => "optimal",
            Self::MaxIterations => "max-iterations",
            Self::TimeLimit => "time-limit",
            Self::InfeasibleSuspected => "infeasible-suspected",
            Self::NumericalFailure => "numerical-failure",
        })
    }
}

/// Where the moment blocks live in the standard-form pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// Smaller Schur complement wins; substitution is rejected if it causes fill.
    #[default]
    Auto,
    /// Equalities eliminated, moments are free multipliers.
    Substitution,
    /// Moment blocks are the primal cone variable.
    MomentBlocks,
}

#[derive(Debug, Clone)]
pub struct SdpOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub time_limit: Option<Duration>,
    pub orientation: Orientation,
    /// Writes the standard-form problem in SDPA sparse format before solving.
    pub dump: Option<std::path::PathBuf>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        Self {
            tol: SDP_TOL,
            max_iter: SDP_MAX_ITER,
            time_limit: None,
            orientation: Orientation::Auto,
            dump: None,
        }
    }
}

/// Per-iteration log, in the units of the standard-form problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterRecord {
    pub iteration: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    /// `<X, S>`
    pub complementarity: f64,
    /// `<R_d, X> - l^T R_p`; the gap equals `complementarity + residual_correction`.
    pub residual_correction: f64,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolverStatus,
    /// Objective of the program at `x` (moment side).
    pub primal_objective: f64,
    /// Lower bound certified by the Gram blocks and multipliers.
    pub dual_objective: f64,
    /// Program variables.
    pub x: Vec<f64>,
    /// One positive semidefinite multiplier per block.
    pub gram: Vec<Mat<f64>>,
    /// One multiplier per equality row.
    pub multipliers: Vec<f64>,
    /// Largest unexplained objective coefficient of the dual certificate.
    pub certificate_residual: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub relative_gap: f64,
    pub orientation: Orientation,
    pub schur_size: usize,
    pub seconds: f64,
    pub history: Vec<IterRecord>,
}

impl SdpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolverStatus::Optimal
    }

    fn infeasible(nv: usize, nblocks: usize, nrows: usize, t0: Instant) -> Self {
        Self {
            status: SolverStatus::InfeasibleSuspected,
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            x: vec![0.0; nv],
            gram: (0..nblocks).map(|_| Mat::zeros(0, 0)).collect(),
            multipliers: vec![0.0; nrows],
            certificate_residual: f64::NAN,
            iterations: 0,
            primal_infeasibility: f64::INFINITY,
            dual_infeasibility: f64::NAN,
            relative_gap: f64::NAN,
            orientation: Orientation::Auto,
            schur_size: 0,
            seconds: t0.elapsed().as_secs_f64(),
            history: Vec::new(),
        }
    }
}

/// Solves `min objective s.t. blocks >= 0, equalities = 0`.
pub fn solve(prog: &LmiProgram, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let t0 = Instant::now();
    let deadline = opts.time_limit.map(|d| t0 + d);
    let ech = presolve::Echelon::build(prog);
    if ech.inconsistent.is_some() {
        return Ok(SdpSolution::infeasible(prog.num_vars(), prog.blocks.len(), prog.equalities.len(), t0));
    }
    let conv = presolve::convert(prog, &ech, opts.orientation).ok_or(SdpError::OrientationUnavailable)?;
    if let Some(path) = &opts.dump {
        // SDPA objective is -<C, X>.
        let sign = match conv.recovery {
            presolve::Recovery::Substitution { .. } => 1.0,
            presolve::Recovery::MomentBlocks { .. } => -1.0,
        };
        dump::write_sdpa(&conv.std, conv.offset, sign, Path::new(path))?;
    }
    let out = ipm::solve_std(
        &conv.std,
        &ipm::IpmParams { tol: opts.tol, max_iter: opts.max_iter, deadline },
    );
    let x = conv.recovery.variables(&out.x, &out.lambda);
    let gram = match conv.recovery {
        presolve::Recovery::Substitution { .. } => out.x,
        presolve::Recovery::MomentBlocks { .. } => out.s,
    };

    // r_v = c_v - sum_b <G_b, F_{b,v}>, then E^T mu = r by back substitution.
    let mut r = vec![0.0; prog.num_vars()];
    for &(v, c) in &prog.objective.terms {
        r[v] += c;
    }
    let mut gram_const = 0.0;
    for (blk, g) in prog.blocks.iter().zip(&gram) {
        for e in &blk.entries {
            let m = if e.i == e.j { 1.0 } else { 2.0 };
            let gij = m * g[(e.i, e.j)];
            gram_const += gij * e.form.constant;
            for &(v, c) in &e.form.terms {
                r[v] -= gij * c;
            }
        }
    }
    let multipliers = ech.multipliers(&mut r, prog.equalities.len());
    let certificate_residual = r.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let eq_const: f64 = prog
        .equalities
        .iter()
        .zip(&multipliers)
        .map(|(row, mu)| mu * row.form.constant)
        .sum();
    let dual_objective = prog.objective.constant - gram_const - eq_const;
    let last = out.history.last().cloned();
    Ok(SdpSolution {
        status: out.status,
        primal_objective: prog.objective.eval(&x),
        dual_objective,
        x,
        gram,
        multipliers,
        certificate_residual,
        iterations: out.iterations,
        primal_infeasibility: last.as_ref().map_or(f64::NAN, |h| h.primal_infeasibility),
        dual_infeasibility: last.as_ref().map_or(f64::NAN, |h| h.dual_infeasibility),
        relative_gap: last.as_ref().map_or(f64::NAN, |h| h.relative_gap),
        orientation: conv.recovery.orientation(),
        schur_size: conv.std.num_rows(),
        seconds: t0.elapsed().as_secs_f64(),
        history: out.history,
    })
}

/// Feasibility of a variable vector for a program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Feasibility {
    /// Smallest eigenvalue of each block.
    pub block_min_eigenvalues: Vec<f64>,
    /// Largest absolute equality residual.
    pub max_equality_violation: f64,
    pub objective: f64,
}

impl Feasibility {
    pub fn min_eigenvalue(&self) -> f64 {
        self.block_min_eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Numeric value of block `b` at `x`.
pub fn block_value(prog: &LmiProgram, b: usize, x: &[f64]) -> Mat<f64> {
    let blk = &prog.blocks[b];
    let mut m = Mat::<f64>::zeros(blk.side, blk.side);
    for e in &blk.entries {
        let v = e.form.eval(x);
        m[(e.i, e.j)] = v;
        m[(e.j, e.i)] = v;
    }
    m
}

pub fn certify_feasibility(prog: &LmiProgram, x: &[f64]) -> Feasibility {
    Feasibility {
        block_min_eigenvalues: (0..prog.blocks.len()).map(|b| min_eigenvalue(&block_value(prog, b, x))).collect(),
        max_equality_violation: prog.equalities.iter().map(|r| r.form.eval(x).abs()).fold(0.0, f64::max),
        objective: prog.objective.eval(x),
    }
}
