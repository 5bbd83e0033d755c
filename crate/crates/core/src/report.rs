//! Solve pipeline and self-contained run reports.
//!
//! A report stores the problem, the program variables and the dual data, so [`verify`]
//! rebuilds the program and recomputes every recorded residual without solving again.

use std::time::Instant;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::{self, certificate_from_parts, ExtractError, FlatnessReport};
use crate::io::{IoError, ProblemFile};
use crate::moment::AtomicMeasure;
use crate::poly::{to_real_pop, CpopInstance, PolyError};
use crate::relax::{build_relaxation, real_moments_from_solution, Hierarchy, LmiProgram, RelaxError};
use crate::sampler::local_upper_bound;
use crate::sdp::{certify_feasibility, solve, Feasibility, Orientation, SdpError, SdpOptions, SdpSolution, SolverStatus};
use crate::tolerances::RANK_TOL;

/// Largest disagreement tolerated by [`verify`].
pub const VERIFY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("report mismatch: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub hierarchy: Hierarchy,
    pub order: usize,
    pub sdp: SdpOptions,
    pub extract: bool,
    /// Multistart samples for the feasible upper bound; zero disables sampling.
    pub samples: usize,
    pub seed: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { hierarchy: Hierarchy::Real, order: 1, sdp: SdpOptions::default(), extract: false, samples: 0, seed: 0 }
    }
}

/// Non-finite floats are written as strings so reports stay valid JSON.
mod lenient {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        match *v {
            v if v.is_finite() => s.serialize_f64(v),
            v if v.is_nan() => s.serialize_str("nan"),
            v if v > 0.0 => s.serialize_str("inf"),
            _ => s.serialize_str("-inf"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "nan" => Ok(f64::NAN),
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!("invalid float '{other}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverSummary {
    pub status: SolverStatus,
    pub iterations: usize,
    #[serde(with = "lenient")]
    pub primal_objective: f64,
    #[serde(with = "lenient")]
    pub dual_objective: f64,
    #[serde(with = "lenient")]
    pub primal_infeasibility: f64,
    #[serde(with = "lenient")]
    pub dual_infeasibility: f64,
    #[serde(with = "lenient")]
    pub relative_gap: f64,
    pub orientation: Orientation,
    pub schur_size: usize,
    pub seconds: f64,
}

impl From<&SdpSolution> for SolverSummary {
    fn from(s: &SdpSolution) -> Self {
        Self {
            status: s.status,
            iterations: s.iterations,
            primal_objective: s.primal_objective,
            dual_objective: s.dual_objective,
            primal_infeasibility: s.primal_infeasibility,
            dual_infeasibility: s.dual_infeasibility,
            relative_gap: s.relative_gap,
            orientation: s.orientation,
            schur_size: s.schur_size,
            seconds: s.seconds,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertificateSummary {
    #[serde(with = "lenient")]
    pub residual: f64,
    pub scale: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    pub weight: f64,
    pub point: Vec<Complex64>,
    /// Largest constraint violation at the point.
    pub violation: f64,
    /// Objective at the point, in the stated sense.
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtractionSummary {
    pub flatness: Option<FlatnessReport>,
    pub rank_m1: usize,
    pub certified_optimal: bool,
    pub message: String,
    pub atoms: Vec<AtomRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub problem: ProblemFile,
    pub hierarchy: Hierarchy,
    pub order: usize,
    /// Lower bound of the minimization form.
    #[serde(with = "lenient")]
    pub bound: f64,
    /// Bound in the stated sense.
    #[serde(with = "lenient")]
    pub value: f64,
    /// `value` after the problem's transform (square root for squared moduli).
    #[serde(with = "lenient")]
    pub reported: f64,
    pub solver: SolverSummary,
    pub block_sides: Vec<usize>,
    pub feasibility: Feasibility,
    pub certificate: Option<CertificateSummary>,
    pub extraction: Option<ExtractionSummary>,
    /// Best sampled feasible point (unit weight).
    pub sampled: Option<AtomRecord>,
    pub wall_seconds: f64,
    pub x: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// Dense dual block of each LMI block.
    pub gram: Vec<Vec<Vec<f64>>>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| IoError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })
    }

    pub fn instance(&self) -> Result<CpopInstance, IoError> {
        self.problem.to_instance()
    }

    fn gram_matrices(&self) -> Vec<Mat<f64>> {
        self.gram
            .iter()
            .map(|g| Mat::from_fn(g.len(), g.len(), |i, j| g[i][j]))
            .collect()
    }
}

fn point_record(inst: &CpopInstance, weight: f64, point: Vec<Complex64>) -> AtomRecord {
    AtomRecord { weight, violation: inst.max_violation(&point), objective: inst.objective_at(&point), point }
}

fn atom_records(inst: &CpopInstance, mu: &AtomicMeasure) -> Vec<AtomRecord> {
    mu.atoms.iter().map(|a| point_record(inst, a.weight, a.point.clone())).collect()
}

/// Rank-one extraction over the realified variables, mapped back to `z = x + i x'`.
fn analyze_rpop(inst: &CpopInstance, prog: &LmiProgram, sol: &SdpSolution, opt: f64) -> Result<ExtractionSummary, ExtractError> {
    let n = inst.n;
    let m = 2 * n;
    let y = real_moments_from_solution(prog, &sol.x);
    let rank = |t: usize| extract::real_moment_matrix(&y, m, t).map(|mt| extract::numerical_rank_real(&mt, RANK_TOL));
    let (rank_m1, _) = rank(1)?;
    let pop = to_real_pop(inst).map_err(|e| ExtractError::ExtractionFailure(e.to_string()))?;
    let d_k = pop.ineqs.iter().chain(&pop.eqs).map(|g| g.degree().div_ceil(2)).max().unwrap_or(0).max(1);
    let t = prog.order;
    let (rank_t, singular_values) = rank(t)?;
    let rank_low = rank(t.saturating_sub(d_k))?.0;
    let flat = rank_t == rank_low;
    let flatness = Some(FlatnessReport { t, rank_t, rank_low, flat, hyponormal: None, singular_values });
    let attempt = extract::extract_rank1_real(&y, m, 1).and_then(|x| {
        let z: Vec<Complex64> = (0..n).map(|j| Complex64::new(x[j], x[n + j])).collect();
        let mu = AtomicMeasure::dirac(z);
        extract::validate_measure(inst, &mu, opt).map(|_| mu)
    });
    let certified = flat && rank_t == 1 && attempt.is_ok();
    let (atoms, message) = match attempt {
        Ok(mu) if certified => (atom_records(inst, &mu), "global optimality certified by flatness".to_string()),
        Ok(mu) => (atom_records(inst, &mu), "feasible atoms attain the bound".to_string()),
        Err(e) => (Vec::new(), e.to_string()),
    };
    Ok(ExtractionSummary { flatness, rank_m1, certified_optimal: certified, message, atoms })
}

fn extraction_summary(inst: &CpopInstance, prog: &LmiProgram, sol: &SdpSolution, opt: f64) -> ExtractionSummary {
    if prog.hierarchy == Hierarchy::Rpop {
        return analyze_rpop(inst, prog, sol, opt).unwrap_or_else(|e| ExtractionSummary {
            flatness: None,
            rank_m1: 0,
            certified_optimal: false,
            message: e.to_string(),
            atoms: Vec::new(),
        });
    }
    let y = extract::solution_moments(prog, sol);
    let ext = extract::analyze(inst, &y, prog.order, opt);
    ExtractionSummary {
        atoms: ext.measure.as_ref().map(|mu| atom_records(inst, mu)).unwrap_or_default(),
        flatness: ext.flatness,
        rank_m1: ext.rank_m1,
        certified_optimal: ext.certified_optimal,
        message: ext.message,
    }
}

fn certificate_summary(inst: &CpopInstance, prog: &LmiProgram, gram: &[Mat<f64>], multipliers: &[f64], gamma: f64) -> Option<CertificateSummary> {
    if !gamma.is_finite() || gram.iter().zip(&prog.blocks).any(|(g, b)| g.nrows() != b.side) {
        return None;
    }
    certificate_from_parts(inst, prog, gram, multipliers, gamma)
        .ok()
        .map(|c| CertificateSummary { residual: c.residual, scale: c.scale, valid: c.valid })
}

/// Builds, solves and analyzes one relaxation.
pub fn run(inst: &CpopInstance, opts: &RunOptions) -> Result<RunReport, RunError> {
    let t0 = Instant::now();
    let prog = build_relaxation(inst, opts.order, opts.hierarchy)?;
    let sol = solve(&prog, &opts.sdp)?;
    let bound = sol.dual_objective;
    let value = inst.unnegate(bound);
    let certificate = certificate_summary(inst, &prog, &sol.gram, &sol.multipliers, bound);
    let converged = matches!(sol.status, SolverStatus::Optimal | SolverStatus::MaxIterations | SolverStatus::NumericalFailure);
    let extraction = (opts.extract && converged && bound.is_finite()).then(|| extraction_summary(inst, &prog, &sol, bound));
    let sampled = (opts.samples > 0)
        .then(|| local_upper_bound(inst, opts.samples, opts.seed))
        .flatten()
        .map(|(_, z)| point_record(inst, 1.0, z));
    Ok(RunReport {
        problem: ProblemFile::from_instance(inst),
        hierarchy: opts.hierarchy,
        order: opts.order,
        bound,
        value,
        reported: inst.transform.apply(value),
        solver: SolverSummary::from(&sol),
        block_sides: prog.block_sides(),
        feasibility: certify_feasibility(&prog, &sol.x),
        certificate,
        extraction,
        sampled,
        wall_seconds: t0.elapsed().as_secs_f64(),
        x: sol.x,
        multipliers: sol.multipliers,
        gram: sol.gram.iter().map(|g| (0..g.nrows()).map(|i| (0..g.ncols()).map(|j| g[(i, j)]).collect()).collect()).collect(),
    })
}

/// Outcome of re-checking a report.
#[derive(Debug, Clone, Serialize)]
pub struct Verification {
    /// Largest difference between recorded and recomputed quantities.
    pub max_deviation: f64,
    pub feasibility: Feasibility,
    pub certificate: Option<CertificateSummary>,
    pub atoms: Vec<AtomRecord>,
}

fn deviation(a: f64, b: f64) -> f64 {
    if a.is_nan() && b.is_nan() || a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Recomputes feasibility, certificate residual and atom checks from the stored data.
pub fn verify(report: &RunReport) -> Result<Verification, RunError> {
    let inst = report.instance()?;
    let prog = build_relaxation(&inst, report.order, report.hierarchy)?;
    if prog.num_vars() != report.x.len() || prog.equalities.len() != report.multipliers.len() || prog.blocks.len() != report.gram.len() {
        return Err(RunError::Mismatch("program shape differs from the recorded solution".into()));
    }
    if prog.block_sides() != report.block_sides {
        return Err(RunError::Mismatch("block sides differ".into()));
    }
    let feasibility = certify_feasibility(&prog, &report.x);
    let certificate = certificate_summary(&inst, &prog, &report.gram_matrices(), &report.multipliers, report.bound);
    let atoms: Vec<AtomRecord> = report
        .extraction
        .iter()
        .flat_map(|e| &e.atoms)
        .map(|a| point_record(&inst, a.weight, a.point.clone()))
        .collect();

    let rec = &report.feasibility;
    let mut devs = vec![
        deviation(feasibility.objective, rec.objective),
        deviation(feasibility.max_equality_violation, rec.max_equality_violation),
    ];
    if feasibility.block_min_eigenvalues.len() != rec.block_min_eigenvalues.len() {
        return Err(RunError::Mismatch("block count differs".into()));
    }
    devs.extend(feasibility.block_min_eigenvalues.iter().zip(&rec.block_min_eigenvalues).map(|(a, b)| deviation(*a, *b)));
    match (&certificate, &report.certificate) {
        (Some(a), Some(b)) => {
            devs.push(deviation(a.residual, b.residual));
            if a.valid != b.valid {
                return Err(RunError::Mismatch("certificate validity differs".into()));
            }
        }
        (None, None) => {}
        _ => return Err(RunError::Mismatch("certificate presence differs".into())),
    }
    let recorded = report.extraction.iter().flat_map(|e| &e.atoms);
    for (a, b) in atoms.iter().zip(recorded) {
        devs.push(deviation(a.violation, b.violation));
        devs.push(deviation(a.objective, b.objective));
    }
    if let Some(b) = &report.sampled {
        let a = point_record(&inst, b.weight, b.point.clone());
        devs.push(deviation(a.violation, b.violation));
        devs.push(deviation(a.objective, b.objective));
    }
    let max_deviation = devs.into_iter().fold(0.0, f64::max);
    Ok(Verification { max_deviation, feasibility, certificate, atoms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::unimodular_example;

    #[test]
    fn report_round_trips_and_verifies() {
        let inst = unimodular_example();
        let opts = RunOptions { order: 1, extract: true, ..RunOptions::default() };
        let rep = run(&inst, &opts).unwrap();
        assert_eq!(rep.solver.status, SolverStatus::Optimal);
        assert!((rep.bound + 3.75).abs() < 1e-5, "{}", rep.bound);
        let ext = rep.extraction.as_ref().unwrap();
        assert_eq!(ext.atoms.len(), 2, "{}", ext.message);
        assert!(rep.certificate.unwrap().valid);

        let back = RunReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(back.x, rep.x);
        assert_eq!(back.gram, rep.gram);
        assert_eq!(back.extraction.as_ref().unwrap().atoms, ext.atoms);
        let v = verify(&back).unwrap();
        assert!(v.max_deviation <= VERIFY_TOL, "{}", v.max_deviation);
    }

    #[test]
    fn verify_detects_tampering() {
        let inst = unimodular_example();
        let mut rep = run(&inst, &RunOptions::default()).unwrap();
        rep.x[1] += 1e-3;
        assert!(verify(&rep).unwrap().max_deviation > VERIFY_TOL);
    }

    #[test]
    fn rpop_reports_rank_one_atom() {
        let inst = crate::generators::reformulated_complex();
        let opts = RunOptions { hierarchy: Hierarchy::Rpop, order: 2, extract: true, ..RunOptions::default() };
        let rep = run(&inst, &opts).unwrap();
        assert!((rep.bound + 0.414213).abs() < 1e-5, "{}", rep.bound);
        let ext = rep.extraction.as_ref().unwrap();
        assert_eq!(ext.atoms.len(), 1, "{}", ext.message);
        assert!(verify(&rep).unwrap().max_deviation <= VERIFY_TOL);
    }

    #[test]
    fn non_finite_floats_survive() {
        #[derive(Serialize, Deserialize)]
        struct W(#[serde(with = "lenient")] f64);
        for v in [f64::NAN, f64::INFINITY, f64::NEG_INFINITY, 1.5] {
            let s = serde_json::to_string(&W(v)).unwrap();
            let back: W = serde_json::from_str(&s).unwrap();
            assert!(back.0 == v || v.is_nan() && back.0.is_nan());
        }
    }
}
