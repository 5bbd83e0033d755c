//! Rank and flatness tests, atom extraction, and dual certificates.

use std::collections::HashMap;

use faer::linalg::solvers::{Solve, SolveLstsq};
use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{herm_eigen, herm_eigenvalues, sym_eigen, sym_eigenvalues};
use crate::moment::{
    enumerate_basis, instantiate, moment_matrix_symbolic, moments_of_measure, Atom, AtomicMeasure,
    MomentKey, Moments,
};
use crate::poly::{to_real_pop, CPoly, CpopInstance, ExponentPair, Monomial, RealPop};
use crate::relax::{Hierarchy, LmiProgram, Part, RowOrigin};
use crate::sdp::SdpSolution;
use crate::tolerances::{
    ATOM_FEAS_TOL, ATOM_OBJ_TOL, COMMUTE_TOL, JOINT_DIAG_TOL, RANK_TOL, SHIFT_FORM_TOL, SHIFT_SUM_TOL,
};

/// Smallest eigenvalue accepted in the hyponormality block matrix.
pub const HYPONORMAL_FLOOR: f64 = 1e-8;

/// Moment agreement required after rank-one extraction.
pub const RANK1_MOMENT_TOL: f64 = 1e-5;

/// Moment agreement required after flat extraction.
pub const FLAT_MOMENT_TOL: f64 = 1e-4;

/// Commutation defect tolerated between numerically computed shift operators.
pub const SHIFT_COMMUTE_TOL: f64 = 1e-5;

/// Smallest admissible pivot of the rank-two factorization.
pub const PIVOT_TOL: f64 = 1e-8;

/// Certificate residual allowed relative to the largest objective coefficient.
pub const CERT_TOL: f64 = 1e-6;

const JOINT_DIAG_SEED: u64 = 0x5eed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("order {t} is below d_K = {d_k}")]
    OrderTooLow { t: usize, d_k: usize },
    #[error("moment {0} is not available")]
    MissingMoment(String),
    #[error("moment matrix has numerical rank {found}, expected {expected}")]
    RankMismatch { found: usize, expected: usize },
    #[error("shift matrices fit neither normal form (best error {0:.2e})")]
    ClassificationFailure(f64),
    #[error("degenerate first-order moment matrix (pivot {0:.2e})")]
    DegenerateM1(f64),
    #[error("extraction failed: {0}")]
    ExtractionFailure(String),
    #[error("extracted atom rejected: violation {violation:.2e}, objective gap {gap:.2e}")]
    AtomRejected { violation: f64, gap: f64 },
    #[error("certificates are not available for the {0} hierarchy")]
    UnsupportedHierarchy(Hierarchy),
}

/// Number of singular values above `tol * max(1, sigma_1)`, with the values in decreasing order.
pub fn numerical_rank(m: &Mat<Complex64>, tol: f64) -> (usize, Vec<f64>) {
    rank_from_eigenvalues(herm_eigenvalues(m), tol)
}

/// [`numerical_rank`] for a real symmetric matrix.
pub fn numerical_rank_real(m: &Mat<f64>, tol: f64) -> (usize, Vec<f64>) {
    rank_from_eigenvalues(sym_eigenvalues(m), tol)
}

fn rank_from_eigenvalues(eigs: Vec<f64>, tol: f64) -> (usize, Vec<f64>) {
    let mut sv: Vec<f64> = eigs.into_iter().map(f64::abs).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let cut = tol * sv.first().copied().unwrap_or(0.0).max(1.0);
    (sv.iter().filter(|&&s| s > cut).count(), sv)
}

/// Numeric `M_t(y)`.
pub fn moment_matrix(y: &Moments, n: usize, t: usize) -> Result<Mat<Complex64>, ExtractError> {
    instantiate(&moment_matrix_symbolic(&enumerate_basis(n, t)), y)
        .ok_or_else(|| ExtractError::MissingMoment(format!("of order {t}")))
}

fn moment_at(y: &Moments, beta: &Monomial, gamma: &Monomial) -> Result<Complex64, ExtractError> {
    y.at(beta, gamma).ok_or_else(|| ExtractError::MissingMoment(format!("{:?}", ExponentPair::new(beta.clone(), gamma.clone()))))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlatnessReport {
    pub t: usize,
    pub rank_t: usize,
    pub rank_low: usize,
    pub flat: bool,
    /// One entry per variable; `None` when not tested.
    pub hyponormal: Option<Vec<bool>>,
    pub singular_values: Vec<f64>,
}

/// Compares `rank M_t(y)` with `rank M_{t-d_K}(y)`.
pub fn check_flatness(y: &Moments, n: usize, t: usize, d_k: usize, tol: f64) -> Result<FlatnessReport, ExtractError> {
    if t < d_k {
        return Err(ExtractError::OrderTooLow { t, d_k });
    }
    let (rank_t, singular_values) = numerical_rank(&moment_matrix(y, n, t)?, tol);
    let (rank_low, _) = numerical_rank(&moment_matrix(y, n, t - d_k)?, tol);
    Ok(FlatnessReport { t, rank_t, rank_low, flat: rank_t == rank_low, hyponormal: None, singular_values })
}

/// Smallest flat order in `max(d_K, d_min)..=r`, if any.
pub fn find_flat_order(y: &Moments, n: usize, r: usize, d_k: usize, d_min: usize, tol: f64) -> Option<FlatnessReport> {
    (d_k.max(d_min)..=r).find_map(|t| check_flatness(y, n, t, d_k, tol).ok().filter(|f| f.flat))
}

/// PSD test of `[[M, M(z̄_i y)], [M(z_i y), M(|z_i|^2 y)]]` at order `t - d_K`, per variable.
pub fn check_hyponormality(y: &Moments, n: usize, t: usize, d_k: usize) -> Result<Vec<bool>, ExtractError> {
    if t < d_k {
        return Err(ExtractError::OrderTooLow { t, d_k });
    }
    let basis = enumerate_basis(n, t - d_k);
    let v = basis.entries();
    let s = v.len();
    (0..n)
        .map(|i| {
            let e = Monomial::unit(n, i);
            let mut m = Mat::<Complex64>::zeros(2 * s, 2 * s);
            for a in 0..s {
                for b in 0..s {
                    let ea = v[a].times(&e);
                    let eb = v[b].times(&e);
                    m[(a, b)] = moment_at(y, &v[a], &v[b])?;
                    m[(a, s + b)] = moment_at(y, &v[a], &eb)?;
                    m[(s + a, b)] = moment_at(y, &ea, &v[b])?;
                    m[(s + a, s + b)] = moment_at(y, &ea, &eb)?;
                }
            }
            let min = herm_eigenvalues(&m).into_iter().fold(f64::INFINITY, f64::min);
            Ok(min >= -HYPONORMAL_FLOOR)
        })
        .collect()
}

/// Single atom `z_i = y_{e_i,0} / y_{0,0}`, checked against the moments up to order `t`.
pub fn extract_rank1(y: &Moments, n: usize, t: usize) -> Result<AtomicMeasure, ExtractError> {
    let (rank, _) = numerical_rank(&moment_matrix(y, n, t)?, RANK_TOL);
    if rank != 1 {
        return Err(ExtractError::RankMismatch { found: rank, expected: 1 });
    }
    let one = Monomial::one(n);
    let y00 = moment_at(y, &one, &one)?;
    let point = (0..n)
        .map(|i| Ok(moment_at(y, &Monomial::unit(n, i), &one)? / y00))
        .collect::<Result<Vec<_>, ExtractError>>()?;
    let mu = AtomicMeasure::dirac(point);
    let (diff, _) = moments_of_measure(&mu, t).max_diff(y);
    if diff > RANK1_MOMENT_TOL * y00.norm().max(1.0) {
        return Err(ExtractError::ExtractionFailure(format!("atom misses the moments by {diff:.2e}")));
    }
    Ok(mu)
}

/// Real moment matrix of order `t` for moments `y_alpha` of a real polynomial problem.
pub fn real_moment_matrix(y: &HashMap<Monomial, f64>, m: usize, t: usize) -> Result<Mat<f64>, ExtractError> {
    let basis = enumerate_basis(m, t);
    let v = basis.entries();
    let mut out = Mat::<f64>::zeros(v.len(), v.len());
    for a in 0..v.len() {
        for b in a..v.len() {
            let k = v[a].times(&v[b]);
            let val = *y.get(&k).ok_or_else(|| ExtractError::MissingMoment(format!("{k:?}")))?;
            out[(a, b)] = val;
            out[(b, a)] = val;
        }
    }
    Ok(out)
}

/// Rank-one extraction for a real polynomial problem: `x_i = y_{e_i} / y_0`.
pub fn extract_rank1_real(y: &HashMap<Monomial, f64>, m: usize, t: usize) -> Result<Vec<f64>, ExtractError> {
    let mt = real_moment_matrix(y, m, t)?;
    let (rank, _) = numerical_rank_real(&mt, RANK_TOL);
    if rank != 1 {
        return Err(ExtractError::RankMismatch { found: rank, expected: 1 });
    }
    let y0 = mt[(0, 0)];
    let x: Vec<f64> = (1..=m).map(|i| mt[(0, i)] / y0).collect();
    let basis = enumerate_basis(m, t);
    let worst = basis
        .entries()
        .iter()
        .enumerate()
        .flat_map(|(a, va)| basis.entries().iter().enumerate().map(move |(b, vb)| (a, b, va.times(vb))))
        .map(|(a, b, k)| (mt[(a, b)] / y0 - k.eval_real(&x)).abs())
        .fold(0.0, f64::max);
    if worst > RANK1_MOMENT_TOL {
        return Err(ExtractError::ExtractionFailure(format!("atom misses the moments by {worst:.2e}")));
    }
    Ok(x)
}

/// Normal form shared by a commuting family of real 2x2 shift matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftCase {
    /// `[[a, b], [b, d]]`: two real atoms.
    Symmetric,
    /// `[[a, -b], [b, a]]`: a conjugate pair.
    RotationScaling,
}

/// Classifies real 2x2 shift matrices with `sum T_i^T T_i = R I`.
pub fn classify_shift_pair(ts: &[Mat<f64>], r: f64) -> Result<ShiftCase, ExtractError> {
    let mut gram = Mat::<f64>::zeros(2, 2);
    for t in ts {
        if t.nrows() != 2 || t.ncols() != 2 {
            return Err(ExtractError::ExtractionFailure("shift matrices must be 2x2".into()));
        }
        gram += t.transpose() * t;
    }
    for (i, a) in ts.iter().enumerate() {
        for b in &ts[i + 1..] {
            let c = a * b - b * a;
            let defect = (0..2).flat_map(|p| (0..2).map(move |q| (p, q))).map(|(p, q)| c[(p, q)].abs()).fold(0.0, f64::max);
            if defect > COMMUTE_TOL {
                return Err(ExtractError::ExtractionFailure(format!("shift matrices do not commute ({defect:.2e})")));
            }
        }
    }
    let sum_defect = (gram[(0, 0)] - r).abs().max((gram[(1, 1)] - r).abs()).max(gram[(0, 1)].abs());
    if sum_defect > SHIFT_SUM_TOL * r.abs().max(f64::MIN_POSITIVE) {
        return Err(ExtractError::ExtractionFailure(format!("sum of T^T T deviates from R I by {sum_defect:.2e}")));
    }
    let sym_err = ts.iter().map(|t| 0.5 * (t[(0, 1)] - t[(1, 0)]).abs()).fold(0.0, f64::max);
    let rot_err = ts
        .iter()
        .map(|t| {
            let a = 0.5 * (t[(0, 0)] + t[(1, 1)]);
            let b = 0.5 * (t[(1, 0)] - t[(0, 1)]);
            (t[(0, 0)] - a).abs().max((t[(0, 1)] + b).abs())
        })
        .fold(0.0, f64::max);
    if sym_err <= SHIFT_FORM_TOL && sym_err <= rot_err {
        Ok(ShiftCase::Symmetric)
    } else if rot_err <= SHIFT_FORM_TOL {
        Ok(ShiftCase::RotationScaling)
    } else {
        Err(ExtractError::ClassificationFailure(sym_err.min(rot_err)))
    }
}

/// `L` of shape `(n+1) x 2` with `M_1 = L L^T`, first row `(1, 0)`.
///
/// The second column is the scaled residual column of the largest residual diagonal,
/// signed so that its first nonzero entry is positive.
pub fn pinned_rank2_factor(m1: &Mat<f64>) -> Result<Mat<f64>, ExtractError> {
    let s = m1.nrows();
    let y00 = m1[(0, 0)];
    if y00 <= PIVOT_TOL {
        return Err(ExtractError::DegenerateM1(y00));
    }
    let mut l = Mat::<f64>::zeros(s, 2);
    let root = y00.sqrt();
    for i in 0..s {
        l[(i, 0)] = m1[(i, 0)] / root;
    }
    let (p, pivot) = (0..s)
        .map(|i| (i, m1[(i, i)] - l[(i, 0)] * l[(i, 0)]))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((0, 0.0));
    if pivot <= PIVOT_TOL {
        return Err(ExtractError::DegenerateM1(pivot));
    }
    let root = pivot.sqrt();
    for i in 0..s {
        l[(i, 1)] = (m1[(i, p)] - l[(i, 0)] * l[(p, 0)]) / root;
    }
    l[(0, 1)] = 0.0;
    let scale = (0..s).map(|i| l[(i, 1)].abs()).fold(0.0, f64::max);
    if let Some(first) = (0..s).map(|i| l[(i, 1)]).find(|v| v.abs() > 1e-12 * scale.max(1.0)) {
        if first < 0.0 {
            for i in 0..s {
                l[(i, 1)] = -l[(i, 1)];
            }
        }
    }
    Ok(l)
}

/// `1/2 delta_z + 1/2 delta_z̄` read off the pinned factor of the real `M_1(y)`.
pub fn conjugate_pair_from_m1(m1: &Mat<f64>) -> Result<AtomicMeasure, ExtractError> {
    let l = pinned_rank2_factor(m1)?;
    let scale = l[(0, 0)];
    let z: Vec<Complex64> = (1..m1.nrows()).map(|i| Complex64::new(l[(i, 0)], l[(i, 1)]) / scale).collect();
    let zbar = z.iter().map(|v| v.conj()).collect();
    Ok(AtomicMeasure { atoms: vec![Atom { weight: 0.5, point: z }, Atom { weight: 0.5, point: zbar }] })
}

/// Checks every atom for feasibility and for attaining `opt` (minimization sense).
pub fn validate_measure(inst: &CpopInstance, mu: &AtomicMeasure, opt: f64) -> Result<(), ExtractError> {
    let f = inst.min_objective();
    for a in &mu.atoms {
        let violation = inst.max_violation(&a.point);
        let gap = (f.evaluate(&a.point).re - opt).abs();
        if !(violation <= ATOM_FEAS_TOL && gap <= ATOM_OBJ_TOL * (1.0 + opt.abs())) {
            return Err(ExtractError::AtomRejected { violation, gap });
        }
    }
    Ok(())
}

/// Accepts a measure when its moments reproduce `y` up to order `t`.
pub fn moment_check(y: &Moments, t: usize) -> impl Fn(&AtomicMeasure) -> Result<(), ExtractError> + '_ {
    move |mu| {
        let (diff, _) = moments_of_measure(mu, t).max_diff(&restrict(y, mu.atoms.first().map_or(1, |a| a.point.len()), t));
        let ymax = y.iter().map(|(_, v)| v.norm()).fold(1.0, f64::max);
        if diff > FLAT_MOMENT_TOL * ymax {
            return Err(ExtractError::ExtractionFailure(format!("atoms miss the moments by {diff:.2e}")));
        }
        Ok(())
    }
}

/// Rank-two extraction: the conjugate-pair factorization of `M_1` first, then two atoms from
/// the classified shift operators at the smallest flat order in `max(d_K, d_min)..=r`.
///
/// `accept` decides whether a candidate measure is returned.
pub fn extract_rank2(
    y: &Moments,
    n: usize,
    r: usize,
    d_k: usize,
    d_min: usize,
    accept: &dyn Fn(&AtomicMeasure) -> Result<(), ExtractError>,
) -> Result<AtomicMeasure, ExtractError> {
    let m1 = moment_matrix(y, n, 1)?.map(|v| v.re);
    let first = conjugate_pair_from_m1(&m1).and_then(|mu| accept(&mu).map(|_| mu));
    let err = match first {
        Ok(mu) => return Ok(mu),
        Err(e) => e,
    };
    let Some(flat) = find_flat_order(y, n, r, d_k, d_min, RANK_TOL) else {
        return Err(err);
    };
    if flat.rank_t != 2 {
        return Err(ExtractError::RankMismatch { found: flat.rank_t, expected: 2 });
    }
    let shifts = shift_operators(y, n, flat.t, 2)?;
    let real: Vec<Mat<f64>> = shifts.iter().map(|s| s.map(|v| v.re)).collect();
    let imag = shifts.iter().flat_map(|s| s.col_iter().flat_map(|c| c.iter().map(|v| v.im.abs()).collect::<Vec<_>>())).fold(0.0, f64::max);
    if imag > SHIFT_FORM_TOL {
        return Err(ExtractError::ExtractionFailure("shift operators are not real".into()));
    }
    let radius: f64 = real.iter().map(|t| t[(0, 0)].powi(2) + t[(0, 1)].powi(2) + t[(1, 0)].powi(2) + t[(1, 1)].powi(2)).sum::<f64>() / 2.0;
    let case = classify_shift_pair(&real, radius)?;
    let mu = match case {
        ShiftCase::Symmetric => {
            let mut rng = ChaCha8Rng::seed_from_u64(JOINT_DIAG_SEED);
            let c: Vec<f64> = real.iter().map(|_| rng.random_range(0.5..1.5)).collect();
            let mut sym = Mat::<f64>::from_fn(2, 2, |p, q| real.iter().zip(&c).map(|(t, ci)| ci * t[(p, q)]).sum());
            crate::linalg::symmetrize(&mut sym);
            let (_, q) = sym_eigen(&sym).ok_or_else(|| ExtractError::ExtractionFailure("eigendecomposition failed".into()))?;
            let points: Vec<Vec<Complex64>> = (0..2)
                .map(|k| {
                    let (u, v) = (q[(0, k)], q[(1, k)]);
                    let norm = u * u + v * v;
                    real.iter()
                        .map(|t| Complex64::from((u * (t[(0, 0)] * u + t[(0, 1)] * v) + v * (t[(1, 0)] * u + t[(1, 1)] * v)) / norm))
                        .collect()
                })
                .collect();
            with_weights(y, n, flat.t, points)?
        }
        ShiftCase::RotationScaling => {
            let z: Vec<Complex64> = real.iter().map(|t| Complex64::new(0.5 * (t[(0, 0)] + t[(1, 1)]), 0.5 * (t[(1, 0)] - t[(0, 1)]))).collect();
            let zbar = z.iter().map(|v| v.conj()).collect();
            with_weights(y, n, flat.t, vec![z, zbar])?
        }
    };
    accept(&mu)?;
    Ok(mu)
}

/// Shift operators `N_i` on the column space of `M_t(y) = P P^*` with `P` of rank `s`:
/// least-squares solutions of `P_low N_i = P_{shift i}` over the rows of degree `< t`.
pub fn shift_operators(y: &Moments, n: usize, t: usize, s: usize) -> Result<Vec<Mat<Complex64>>, ExtractError> {
    if t == 0 {
        return Err(ExtractError::OrderTooLow { t, d_k: 1 });
    }
    let basis = enumerate_basis(n, t);
    let mt = moment_matrix(y, n, t)?;
    let side = mt.nrows();
    let is_real = (0..side).all(|i| (0..side).all(|j| mt[(i, j)].im == 0.0));
    let fail = || ExtractError::ExtractionFailure("eigendecomposition failed".into());
    // A real sequence keeps real factors, so real shifts stay real.
    let (vals, vecs) = if is_real {
        let (vals, vecs) = sym_eigen(&mt.map(|v| v.re)).ok_or_else(fail)?;
        (vals, vecs.map(|&v| Complex64::from(v)))
    } else {
        herm_eigen(&mt).ok_or_else(fail)?
    };
    // Eigenvalues ascend; keep the top s.
    let p = Mat::<Complex64>::from_fn(side, s, |i, k| {
        let j = side - s + k;
        vecs[(i, j)] * vals[j].max(0.0).sqrt()
    });
    let low = basis.prefix_len(t - 1);
    let p_low = Mat::<Complex64>::from_fn(low, s, |i, k| p[(i, k)]);
    let qr = p_low.qr();
    (0..n)
        .map(|i| {
            let e = Monomial::unit(n, i);
            let rows: Vec<usize> = basis.entries()[..low]
                .iter()
                .map(|m| basis.position(&m.times(&e)).expect("shifted monomial stays within order t"))
                .collect();
            let rhs = Mat::<Complex64>::from_fn(low, s, |a, k| p[(rows[a], k)]);
            Ok(qr.solve_lstsq(&rhs))
        })
        .collect()
}

fn max_abs(m: &Mat<Complex64>) -> f64 {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| (i, j))).map(|(i, j)| m[(i, j)].norm()).fold(0.0, f64::max)
}

/// Atoms from one joint diagonalization of the shift operators with combination `c`.
fn diagonalize(shifts: &[Mat<Complex64>], c: &[f64]) -> Result<Vec<Vec<Complex64>>, ExtractError> {
    let s = shifts[0].nrows();
    let comb = Mat::<Complex64>::from_fn(s, s, |i, j| shifts.iter().zip(c).map(|(t, &ci)| t[(i, j)] * ci).sum());
    let eig = comb.eigen().map_err(|_| ExtractError::ExtractionFailure("eigendecomposition failed".into()))?;
    let q = eig.U().to_owned();
    let lu = q.partial_piv_lu();
    let diag: Vec<Mat<Complex64>> = shifts.iter().map(|t| lu.solve(t * &q)).collect();
    let off = diag
        .iter()
        .map(|d| (0..s).flat_map(|i| (0..s).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| d[(i, j)].norm()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let scale = diag.iter().map(max_abs).fold(1.0, f64::max);
    if !off.is_finite() || off > JOINT_DIAG_TOL * scale {
        return Err(ExtractError::ExtractionFailure(format!("shift operators are not jointly diagonalizable ({off:.2e})")));
    }
    Ok((0..s).map(|k| diag.iter().map(|d| d[(k, k)]).collect()).collect())
}

/// Real nonnegative weights fitting `y_{alpha,0}` for `|alpha| <= t`.
fn with_weights(y: &Moments, n: usize, t: usize, points: Vec<Vec<Complex64>>) -> Result<AtomicMeasure, ExtractError> {
    let basis = enumerate_basis(n, t);
    let one = Monomial::one(n);
    let rows = basis.len();
    let s = points.len();
    let mut a = Mat::<f64>::zeros(2 * rows, s);
    let mut b = Mat::<f64>::zeros(2 * rows, 1);
    for (i, m) in basis.entries().iter().enumerate() {
        let v = moment_at(y, m, &one)?;
        b[(i, 0)] = v.re;
        b[(rows + i, 0)] = v.im;
        for (k, z) in points.iter().enumerate() {
            let w = m.eval(z);
            a[(i, k)] = w.re;
            a[(rows + i, k)] = w.im;
        }
    }
    let w = a.qr().solve_lstsq(&b);
    let atoms = points.into_iter().enumerate().map(|(k, point)| Atom { weight: w[(k, 0)], point }).collect();
    Ok(AtomicMeasure { atoms })
}

/// General flat extraction: `s = rank M_t(y)` atoms from the joint diagonalization of the
/// shift operators, cross-checked with a second random combination.
pub fn extract_flat(y: &Moments, n: usize, t: usize, d_k: usize) -> Result<AtomicMeasure, ExtractError> {
    let flat = check_flatness(y, n, t, d_k, RANK_TOL)?;
    if !flat.flat {
        return Err(ExtractError::ExtractionFailure(format!(
            "not flat at order {t}: ranks {} and {}",
            flat.rank_t, flat.rank_low
        )));
    }
    let s = flat.rank_t;
    let shifts = shift_operators(y, n, t, s)?;
    for (i, a) in shifts.iter().enumerate() {
        for b in &shifts[i + 1..] {
            let defect = max_abs(&(a * b - b * a));
            if defect > SHIFT_COMMUTE_TOL * max_abs(a).max(max_abs(b)).max(1.0).powi(2) {
                return Err(ExtractError::ExtractionFailure(format!("shift operators do not commute ({defect:.2e})")));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(JOINT_DIAG_SEED);
    let mut draw = || (0..n).map(|_| rng.random_range(0.5..1.5)).collect::<Vec<f64>>();
    let (c1, c2) = (draw(), draw());
    let first = diagonalize(&shifts, &c1)?;
    let second = diagonalize(&shifts, &c2)?;
    let scale = first.iter().flatten().map(|v| v.norm()).fold(1.0, f64::max);
    if hausdorff(&first, &second) > JOINT_DIAG_TOL * scale {
        return Err(ExtractError::ExtractionFailure("joint diagonalizations disagree".into()));
    }
    let mu = with_weights(y, n, t, first)?;
    let (diff, _) = moments_of_measure(&mu, t).max_diff(&restrict(y, n, t));
    let ymax = y.iter().map(|(_, v)| v.norm()).fold(1.0, f64::max);
    if diff > FLAT_MOMENT_TOL * ymax {
        return Err(ExtractError::ExtractionFailure(format!("atoms miss the moments by {diff:.2e}")));
    }
    Ok(mu)
}

fn restrict(y: &Moments, n: usize, t: usize) -> Moments {
    let mut out = Moments::new();
    for k in crate::moment::keys_up_to(n, t) {
        if let Some(v) = y.get(&crate::moment::OrientedKey { key: k.clone(), conj: false }) {
            out.insert(k, v);
        }
    }
    out
}

/// Hausdorff distance between two point sets in `C^n` (max-norm on coordinates).
pub fn hausdorff(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> f64 {
    let dist = |p: &Vec<Complex64>, q: &Vec<Complex64>| p.iter().zip(q).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let one_way = |a: &[Vec<Complex64>], b: &[Vec<Complex64>]| {
        a.iter().map(|p| b.iter().map(|q| dist(p, q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// `(y + ȳ) / 2`.
pub fn symmetrize_moments(y: &Moments) -> Moments {
    y.symmetrized()
}

/// Outcome of the optimality analysis of a solved relaxation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Extraction {
    pub flatness: Option<FlatnessReport>,
    /// Rank of `M_1(y)`.
    pub rank_m1: usize,
    pub measure: Option<AtomicMeasure>,
    /// Set when flatness holds and the atoms were validated.
    pub certified_optimal: bool,
    pub message: String,
}

/// Scans for flatness, tests hyponormality, and extracts atoms (HSOS hierarchies).
///
/// `opt` is the bound in the minimization sense.
pub fn analyze(inst: &CpopInstance, y: &Moments, r: usize, opt: f64) -> Extraction {
    let n = inst.n;
    let d = inst.degree_stats();
    let rank_m1 = moment_matrix(y, n, 1).map(|m| numerical_rank(&m, RANK_TOL).0).unwrap_or(0);
    let mut flatness = find_flat_order(y, n, r, d.d_k, d.d_min, RANK_TOL);
    if let Some(f) = flatness.as_mut() {
        f.hyponormal = check_hyponormality(y, n, f.t, d.d_k).ok();
    }
    let accept = |mu: &AtomicMeasure| validate_measure(inst, mu, opt);
    let attempt = match &flatness {
        Some(f) if f.rank_t == 1 => extract_rank1(y, n, f.t).and_then(|mu| validate_measure(inst, &mu, opt).map(|_| mu)),
        // Generic pairs are neither conjugate nor real; the general flat extraction covers them.
        Some(f) if f.rank_t == 2 => extract_rank2(y, n, r, d.d_k, d.d_min, &accept)
            .or_else(|e| extract_flat(y, n, f.t, d.d_k).and_then(|mu| accept(&mu).map(|_| mu)).map_err(|_| e)),
        Some(f) => extract_flat(y, n, f.t, d.d_k).and_then(|mu| validate_measure(inst, &mu, opt).map(|_| mu)),
        // The rank-two factorization can succeed without flatness.
        None if rank_m1 == 2 => extract_rank2(y, n, r, d.d_k, d.d_min, &accept),
        None if rank_m1 == 1 => extract_rank1(y, n, 1).and_then(|mu| validate_measure(inst, &mu, opt).map(|_| mu)),
        None => Err(ExtractError::ExtractionFailure("no flat order; no certificate of optimality".into())),
    };
    let certified = flatness.is_some() && attempt.is_ok();
    let (measure, message) = match attempt {
        Ok(mu) if certified => (Some(mu), "global optimality certified by flatness".to_string()),
        Ok(mu) => (Some(mu), "feasible atoms attain the bound".to_string()),
        Err(e) => (None, e.to_string()),
    };
    Extraction { flatness, rank_m1, measure, certified_optimal: certified, message }
}

/// Dual certificate `f - gamma = sum_b sigma_b g_b + sum_i tau_i h_i` (with `g_0 = 1`).
#[derive(Debug, Clone)]
pub struct Certificate {
    pub hierarchy: Hierarchy,
    pub gamma: f64,
    /// Hermitian Gram matrix of each `sigma_b`, indexed by the block's monomial basis.
    pub grams: Vec<Mat<Complex64>>,
    /// Multiplier polynomial of each equality (HSOS hierarchies).
    pub taus: Vec<CPoly>,
    /// Largest coefficient of the residual polynomial.
    pub residual: f64,
    /// Largest objective coefficient.
    pub scale: f64,
    pub valid: bool,
}

/// Builds the certificate from the dual blocks and equality multipliers of a solution.
///
/// For the real hierarchy the moments only see `(p + p(z̄, z)) / 2`, so the residual is
/// measured after that symmetrization; the complex hierarchy is checked coefficient-wise.
pub fn recover_certificate(inst: &CpopInstance, prog: &LmiProgram, sol: &SdpSolution) -> Result<Certificate, ExtractError> {
    certificate_from_parts(inst, prog, &sol.gram, &sol.multipliers, sol.dual_objective)
}

/// [`recover_certificate`] from stored dual data.
pub fn certificate_from_parts(
    inst: &CpopInstance,
    prog: &LmiProgram,
    gram: &[Mat<f64>],
    multipliers: &[f64],
    gamma: f64,
) -> Result<Certificate, ExtractError> {
    match prog.hierarchy {
        Hierarchy::Rpop => {
            let pop = to_real_pop(inst).map_err(|e| ExtractError::ExtractionFailure(e.to_string()))?;
            real_pop_certificate_from_parts(&pop, prog, gram, multipliers, gamma)
        }
        h => {
            let n = inst.n;
            let grams: Vec<Mat<Complex64>> = prog
                .blocks
                .iter()
                .zip(gram)
                .map(|(blk, g)| match h {
                    Hierarchy::Complex => {
                        let s = blk.side / 2;
                        Mat::from_fn(s, s, |a, b| {
                            Complex64::new(g[(a, b)] + g[(s + a, s + b)], g[(a, s + b)] - g[(s + a, b)])
                        })
                    }
                    _ => g.map(|&v| Complex64::from(v)),
                })
                .collect();
            let mut taus = vec![CPoly::zero(n); inst.eqs.len()];
            let mut acc: Vec<HashMap<ExponentPair, Complex64>> = vec![HashMap::new(); inst.eqs.len()];
            for (row, &mu) in prog.equalities.iter().zip(multipliers) {
                if let RowOrigin::Localizing { constraint, i, j, part } = row.origin {
                    let h = &inst.eqs[constraint];
                    let basis = enumerate_basis(n, prog.order - h.degree());
                    let v = basis.entries();
                    let m = ExponentPair::new(v[i].clone(), v[j].clone());
                    let half = Complex64::from(0.5 * mu);
                    let (c, cc) = match part {
                        Part::Re => (half, half),
                        Part::Im => (half / Complex64::i(), -half / Complex64::i()),
                    };
                    *acc[constraint].entry(m.clone()).or_default() += c;
                    *acc[constraint].entry(m.swapped()).or_default() += cc;
                }
            }
            for (tau, terms) in taus.iter_mut().zip(acc) {
                *tau = CPoly::from_terms(n, terms).expect("arity matches");
            }
            let mut cert = Certificate {
                hierarchy: h,
                gamma,
                grams,
                taus,
                residual: f64::NAN,
                scale: 0.0,
                valid: false,
            };
            let orders: Vec<usize> = prog.blocks.iter().map(|b| b.basis_order).collect();
            certificate_residual(inst, &orders, &mut cert);
            Ok(cert)
        }
    }
}

/// Recomputes `residual`, `scale` and `valid` from the certificate data.
pub fn certificate_residual(inst: &CpopInstance, orders: &[usize], cert: &mut Certificate) {
    let n = inst.n;
    let f = inst.min_objective();
    let mut res: HashMap<ExponentPair, Complex64> = f.terms().map(|(k, c)| (k.clone(), *c)).collect();
    *res.entry(ExponentPair::one(n)).or_default() -= cert.gamma;
    let one = CPoly::constant(n, 1.0);
    let weights = std::iter::once(&one).chain(&inst.ineqs);
    for ((g, gram), &t) in weights.zip(&cert.grams).zip(orders) {
        let basis = enumerate_basis(n, t);
        let v = basis.entries();
        for a in 0..v.len() {
            for b in 0..v.len() {
                let w = gram[(a, b)];
                if w == Complex64::from(0.0) {
                    continue;
                }
                let m = ExponentPair::new(v[a].clone(), v[b].clone());
                for (k, c) in g.terms() {
                    *res.entry(m.times(k)).or_default() -= w * c;
                }
            }
        }
    }
    for (tau, h) in cert.taus.iter().zip(&inst.eqs) {
        for (ka, ca) in tau.terms() {
            for (kb, cb) in h.terms() {
                *res.entry(ka.times(kb)).or_default() -= ca * cb;
            }
        }
    }
    let residual = match cert.hierarchy {
        Hierarchy::Real => res
            .iter()
            .map(|(k, c)| (0.5 * (c + res.get(&k.swapped()).copied().unwrap_or_default())).norm())
            .fold(0.0, f64::max),
        _ => res.values().map(|c| c.norm()).fold(0.0, f64::max),
    };
    cert.scale = f.max_abs_coeff();
    cert.residual = residual;
    cert.valid = residual <= CERT_TOL * cert.scale.max(1.0);
}

/// Real-coefficient certificate from a complex one: `sigma' = (sigma(z, z̄) + sigma(z̄, z)) / 2`.
pub fn symmetrize_certificate(inst: &CpopInstance, orders: &[usize], cert: &Certificate) -> Certificate {
    let grams = cert.grams.iter().map(|g| g.map(|v| Complex64::from(v.re))).collect();
    let taus = cert.taus.iter().map(|t| CPoly::from_terms(t.n(), t.terms().map(|(k, c)| (k.clone(), Complex64::from(c.re)))).expect("arity matches")).collect();
    let mut out = Certificate { hierarchy: Hierarchy::Real, grams, taus, ..cert.clone() };
    certificate_residual(inst, orders, &mut out);
    out
}

/// Certificate for the real-variable hierarchy; the Gram matrices are real.
pub fn recover_real_pop_certificate(pop: &RealPop, prog: &LmiProgram, sol: &SdpSolution) -> Result<Certificate, ExtractError> {
    real_pop_certificate_from_parts(pop, prog, &sol.gram, &sol.multipliers, sol.dual_objective)
}

fn real_pop_certificate_from_parts(
    pop: &RealPop,
    prog: &LmiProgram,
    gram: &[Mat<f64>],
    multipliers: &[f64],
    gamma: f64,
) -> Result<Certificate, ExtractError> {
    if prog.hierarchy != Hierarchy::Rpop {
        return Err(ExtractError::UnsupportedHierarchy(prog.hierarchy));
    }
    let m = pop.m;
    let f = pop.min_objective();
    let mut res: HashMap<Monomial, f64> = f.terms().map(|(k, c)| (k.clone(), *c)).collect();
    *res.entry(Monomial::one(m)).or_default() -= gamma;
    let one = crate::poly::RPoly::from_terms(m, [(Monomial::one(m), 1.0)]);
    let weights = std::iter::once(&one).chain(&pop.ineqs);
    for ((g, gram), blk) in weights.zip(gram).zip(&prog.blocks) {
        let basis = enumerate_basis(m, blk.basis_order);
        let v = basis.entries();
        for a in 0..v.len() {
            for b in 0..v.len() {
                let w = gram[(a, b)];
                let k0 = v[a].times(&v[b]);
                for (k, c) in g.terms() {
                    *res.entry(k0.times(k)).or_default() -= w * c;
                }
            }
        }
    }
    for (row, &mu) in prog.equalities.iter().zip(multipliers) {
        if let RowOrigin::Localizing { constraint, i, j, .. } = row.origin {
            let h = &pop.eqs[constraint];
            let basis = enumerate_basis(m, prog.order - h.degree().div_ceil(2));
            let k0 = basis.entries()[i].times(&basis.entries()[j]);
            for (k, c) in h.terms() {
                *res.entry(k0.times(k)).or_default() -= mu * c;
            }
        }
    }
    let scale = f.terms().map(|(_, c)| c.abs()).fold(0.0, f64::max);
    let residual = res.values().map(|c| c.abs()).fold(0.0, f64::max);
    Ok(Certificate {
        hierarchy: Hierarchy::Rpop,
        gamma,
        grams: gram.iter().map(|g| g.map(|&v| Complex64::from(v))).collect(),
        taus: Vec::new(),
        residual,
        scale,
        valid: residual <= CERT_TOL * scale.max(1.0),
    })
}

/// Moments of a solved HSOS program; the real hierarchy yields a real sequence.
pub fn solution_moments(prog: &LmiProgram, sol: &SdpSolution) -> Moments {
    crate::relax::moments_from_solution(prog, &sol.x)
}

/// Canonical key of `y_{beta,gamma}`.
pub fn key(beta: &[u8], gamma: &[u8]) -> MomentKey {
    MomentKey::of(&Monomial::from_slice(beta), &Monomial::from_slice(gamma)).key
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::unimodular_example;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn printed_m1() -> Mat<f64> {
        let rows = [
            [1.0, -0.250013, -0.875003, -0.875003],
            [-0.250013, 1.0, -0.249981, -0.249981],
            [-0.875003, -0.249981, 1.0, 1.0],
            [-0.875003, -0.249981, 1.0, 1.0],
        ];
        Mat::from_fn(4, 4, |i, j| rows[i][j])
    }

    fn sphere_atom(seed: u64, n: usize, radius: f64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        z.into_iter().map(|v| v * (radius / norm)).collect()
    }

    #[test]
    fn rank_of_identity() {
        let m = Mat::<Complex64>::identity(5, 5);
        assert_eq!(numerical_rank(&m, RANK_TOL).0, 5);
    }

    #[test]
    fn printed_m1_has_rank_two() {
        let (rank, sv) = numerical_rank_real(&printed_m1(), RANK_TOL);
        assert!(rank >= 2);
        assert!(sv[2] <= 1e-4, "{sv:?}");
        assert_eq!(numerical_rank_real(&printed_m1(), 1e-4).0, 2);
    }

    #[test]
    fn pinned_factor_matches_printed_factor() {
        let l = pinned_rank2_factor(&printed_m1()).unwrap();
        let expect = [[1.0, 0.0], [-0.250013, 0.968242], [-0.875003, -0.484117], [-0.875003, -0.484117]];
        for i in 0..4 {
            for j in 0..2 {
                assert!((l[(i, j)] - expect[i][j]).abs() < 1e-4, "L[{i},{j}] = {}", l[(i, j)]);
            }
        }
        let mu = conjugate_pair_from_m1(&printed_m1()).unwrap();
        let z = &mu.atoms[0].point;
        let want = [c(-0.250013, 0.968242), c(-0.875003, -0.484117), c(-0.875003, -0.484117)];
        for (a, b) in z.iter().zip(want) {
            assert!((a - b).norm() < 1e-4);
        }
        let inst = unimodular_example();
        assert!((inst.objective_at(z) + 3.75).abs() < 1e-4);
    }

    #[test]
    fn rank_one_round_trip() {
        let z = vec![c(1.0, 2.0), c(0.0, -1.0)];
        for r in 1..=3 {
            let y = moments_of_measure(&AtomicMeasure::dirac(z.clone()), r);
            assert_eq!(numerical_rank(&moment_matrix(&y, 2, r).unwrap(), RANK_TOL).0, 1);
            let mu = extract_rank1(&y, 2, r).unwrap();
            assert!(hausdorff(&[mu.atoms[0].point.clone()], &[z.clone()]) < 1e-10);
        }
    }

    #[test]
    fn rank_one_rejects_two_atoms() {
        let mu = AtomicMeasure {
            atoms: vec![Atom { weight: 0.5, point: vec![c(1.0, 0.0)] }, Atom { weight: 0.5, point: vec![c(0.0, 1.0)] }],
        };
        let y = moments_of_measure(&mu, 2);
        assert_eq!(extract_rank1(&y, 1, 2), Err(ExtractError::RankMismatch { found: 2, expected: 1 }));
    }

    #[test]
    fn classify_exact_forms() {
        let rot = Mat::from_fn(2, 2, |i, j| [[0.0, -1.0], [1.0, 0.0]][i][j]);
        assert_eq!(classify_shift_pair(&[rot], 1.0), Ok(ShiftCase::RotationScaling));
        let d1 = Mat::from_fn(2, 2, |i, j| [[1.0, 0.0], [0.0, 0.0]][i][j]);
        let d2 = Mat::from_fn(2, 2, |i, j| [[0.0, 0.0], [0.0, 1.0]][i][j]);
        assert_eq!(classify_shift_pair(&[d1, d2], 1.0), Ok(ShiftCase::Symmetric));
        let bad = Mat::from_fn(2, 2, |i, j| [[1.0, 0.5], [0.0, 1.0]][i][j]);
        assert!(classify_shift_pair(&[bad], 1.0).is_err());
    }

    #[test]
    fn single_atom_is_flat() {
        let y = moments_of_measure(&AtomicMeasure::dirac(vec![c(0.6, 0.8)]), 2);
        let f = check_flatness(&y, 1, 2, 2, RANK_TOL).unwrap();
        assert!(f.flat);
        assert_eq!(f.rank_t, 1);
        assert_eq!(check_flatness(&y, 1, 1, 2, RANK_TOL).unwrap_err(), ExtractError::OrderTooLow { t: 1, d_k: 2 });
    }

    #[test]
    fn conjugate_pair_round_trip() {
        let z = sphere_atom(3, 3, 1.0);
        let zbar: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        let mu = AtomicMeasure { atoms: vec![Atom { weight: 0.5, point: z.clone() }, Atom { weight: 0.5, point: zbar.clone() }] };
        let y = moments_of_measure(&mu, 3);
        let f = check_flatness(&y, 3, 3, 2, RANK_TOL).unwrap();
        assert!(f.flat && f.rank_t == 2);
        let out = extract_rank2(&y, 3, 3, 2, 2, &moment_check(&y, 3)).unwrap();
        let pts: Vec<Vec<Complex64>> = out.atoms.iter().map(|a| a.point.clone()).collect();
        assert!(hausdorff(&pts, &[z, zbar]) < 1e-8);
        let shifts = shift_operators(&y, 3, 3, 2).unwrap();
        let real: Vec<Mat<f64>> = shifts.iter().map(|s| s.map(|v| v.re)).collect();
        assert_eq!(classify_shift_pair(&real, 1.0), Ok(ShiftCase::RotationScaling));
    }

    #[test]
    fn two_real_atoms_round_trip() {
        let a = vec![c(0.6, 0.0), c(0.8, 0.0)];
        let b = vec![c(-1.0, 0.0), c(0.0, 0.0)];
        let mu = AtomicMeasure { atoms: vec![Atom { weight: 0.3, point: a.clone() }, Atom { weight: 0.7, point: b.clone() }] };
        let y = moments_of_measure(&mu, 3);
        let out = extract_rank2(&y, 2, 3, 2, 2, &moment_check(&y, 3)).unwrap();
        let pts: Vec<Vec<Complex64>> = out.atoms.iter().map(|a| a.point.clone()).collect();
        assert!(hausdorff(&pts, &[a, b]) < 1e-8);
        let mut w: Vec<f64> = out.atoms.iter().map(|a| a.weight).collect();
        w.sort_by(f64::total_cmp);
        assert!((w[0] - 0.3).abs() < 1e-8 && (w[1] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn three_atoms_flat_extraction() {
        let pts: Vec<Vec<Complex64>> = (0..3).map(|k| sphere_atom(10 + k, 2, 1.0)).collect();
        let mu = AtomicMeasure {
            atoms: pts.iter().zip([0.2, 0.3, 0.5]).map(|(p, w)| Atom { weight: w, point: p.clone() }).collect(),
        };
        let y = moments_of_measure(&mu, 3);
        let out = extract_flat(&y, 2, 3, 2).unwrap();
        let got: Vec<Vec<Complex64>> = out.atoms.iter().map(|a| a.point.clone()).collect();
        assert!(hausdorff(&got, &pts) < 1e-6);
        assert!((out.total_weight() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn flat_agrees_with_rank_one() {
        let z = vec![c(0.3, -0.4), c(0.1, 0.2)];
        let y = moments_of_measure(&AtomicMeasure::dirac(z.clone()), 2);
        let a = extract_flat(&y, 2, 2, 2).unwrap();
        let b = extract_rank1(&y, 2, 2).unwrap();
        assert!(hausdorff(&[a.atoms[0].point.clone()], &[b.atoms[0].point.clone()]) < 1e-8);
    }

    #[test]
    fn hyponormality() {
        let mu = AtomicMeasure {
            atoms: vec![Atom { weight: 0.4, point: vec![c(1.0, 0.5), c(-0.2, 0.1)] }, Atom { weight: 0.6, point: vec![c(0.0, -1.0), c(0.7, 0.7)] }],
        };
        let y = moments_of_measure(&mu, 3);
        assert_eq!(check_hyponormality(&y, 2, 3, 2).unwrap(), vec![true, true]);
        let mut bad = Moments::new();
        bad.insert(key(&[0], &[0]), c(1.0, 0.0));
        bad.insert(key(&[1], &[0]), c(0.0, 0.0));
        bad.insert(key(&[1], &[1]), c(-1.0, 0.0));
        assert_eq!(check_hyponormality(&bad, 1, 2, 2).unwrap(), vec![false]);
        assert!(check_hyponormality(&bad, 1, 1, 2).is_err());
    }

    #[test]
    fn symmetrization_of_a_dirac() {
        let z = vec![c(0.5, 0.5), c(-0.3, 0.9)];
        let y = moments_of_measure(&AtomicMeasure::dirac(z.clone()), 2);
        let zbar = z.iter().map(|v| v.conj()).collect();
        let pair = AtomicMeasure { atoms: vec![Atom { weight: 0.5, point: z }, Atom { weight: 0.5, point: zbar }] };
        let (diff, all) = symmetrize_moments(&y).max_diff(&moments_of_measure(&pair, 2));
        assert!(all && diff < 1e-14);
        let once = symmetrize_moments(&y);
        assert_eq!(symmetrize_moments(&once), once);
    }

    fn solved(inst: &CpopInstance, r: usize, h: Hierarchy) -> (LmiProgram, SdpSolution) {
        let prog = crate::relax::build_relaxation(inst, r, h).unwrap();
        let sol = crate::sdp::solve(&prog, &crate::sdp::SdpOptions::default()).unwrap();
        assert!(sol.is_optimal(), "{:?}", sol.status);
        (prog, sol)
    }

    #[test]
    fn certificate_of_modulus_on_circle() {
        let n = 1;
        let h = &CPoly::abs2(n, 0) - &CPoly::constant(n, 1.0);
        let inst = CpopInstance::new("circle", crate::poly::Sense::Min, CPoly::abs2(n, 0), vec![], vec![h]).unwrap();
        let (prog, sol) = solved(&inst, 1, Hierarchy::Real);
        let cert = recover_certificate(&inst, &prog, &sol).unwrap();
        assert!((cert.gamma - 1.0).abs() < 1e-7);
        assert!(cert.valid, "residual {}", cert.residual);
        let sigma0 = cert.grams[0].col_iter().flat_map(|c| c.iter().map(|v| v.norm()).collect::<Vec<_>>()).fold(0.0, f64::max);
        assert!(sigma0 < 1e-6);
        let tau = cert.taus[0].coeff(&ExponentPair::one(n));
        assert!((tau.re - 1.0).abs() < 1e-6, "{tau}");
    }

    #[test]
    fn certificate_of_unimodular_example() {
        let inst = unimodular_example();
        for h in [Hierarchy::Real, Hierarchy::Complex] {
            let (prog, sol) = solved(&inst, 1, h);
            let cert = recover_certificate(&inst, &prog, &sol).unwrap();
            assert!((cert.gamma + 3.75).abs() < 1e-5);
            assert!(cert.residual <= 1e-5, "{h}: {}", cert.residual);
        }
    }

    #[test]
    fn symmetrized_complex_certificate() {
        let inst = crate::generators::generate(crate::generators::Family::RandomQuadratic, 3, 7).unwrap();
        let (prog, sol) = solved(&inst, 1, Hierarchy::Complex);
        let cert = recover_certificate(&inst, &prog, &sol).unwrap();
        assert!(cert.valid, "complex residual {}", cert.residual);
        let orders: Vec<usize> = prog.blocks.iter().map(|b| b.basis_order).collect();
        let sym = symmetrize_certificate(&inst, &orders, &cert);
        assert!(sym.valid, "symmetrized residual {}", sym.residual);
        let (rprog, rsol) = solved(&inst, 1, Hierarchy::Real);
        let real = recover_certificate(&inst, &rprog, &rsol).unwrap();
        assert!(real.valid, "real residual {}", real.residual);
        assert!((real.gamma - cert.gamma).abs() < 1e-6);
    }
}
