//! Infeasible primal-dual path following for
//! `min <C,X> s.t. <A_j,X> = b_j, X >= 0` and `max b^T l s.t. C - sum l_j A_j = S >= 0`,
//! with Nesterov-Todd scaling and Mehrotra's predictor-corrector.

use std::time::Instant;

use faer::diag::Diag;
use faer::linalg::cholesky::{lblt as bunch_kaufman, llt};
use faer::dyn_stack::{MemBuffer, MemStack};
use faer::perm::PermRef;
use faer::{Conj, Mat, Par};
use log::debug;

use super::{IterRecord, SolverStatus};
use crate::linalg::{
    cholesky, congruence_inv, dot, fro_norm, gemm, gemm_tn, identity, min_eigenvalue, sandwich,
    symmetrize,
};


/// Entry of a constraint matrix; `p <= q`, value of `A[p,q] = A[q,p]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AEntry {
    pub blk: u32,
    pub p: u32,
    pub q: u32,
    pub v: f64,
}

/// Standard-form block SDP.
#[derive(Debug, Clone, Default)]
pub(crate) struct StdSdp {
    pub sides: Vec<usize>,
    /// Upper-triangle entries of `C` per block.
    pub c: Vec<Vec<(usize, usize, f64)>>,
    pub a: Vec<Vec<AEntry>>,
    pub b: Vec<f64>,
}

impl StdSdp {
    pub fn num_rows(&self) -> usize {
        self.a.len()
    }
}

pub(crate) struct IpmParams {
    pub tol: f64,
    pub max_iter: usize,
    pub deadline: Option<Instant>,
}

pub(crate) struct IpmOutput {
    pub x: Vec<Mat<f64>>,
    pub s: Vec<Mat<f64>>,
    pub lambda: Vec<f64>,
    pub status: SolverStatus,
    pub iterations: usize,
    pub history: Vec<IterRecord>,
}

/// Per-block view of the constraints: `(row, entries)` with entries `(p, q, m*v)`.
struct BlockRows {
    rows: Vec<(usize, Vec<(usize, usize, f64)>)>,
}

struct Scaled {
    sides: Vec<usize>,
    c: Vec<Mat<f64>>,
    blocks: Vec<BlockRows>,
    /// Entries per row, multiplicity-weighted, for `A(X)`.
    rows: Vec<Vec<AEntry>>,
    b: Vec<f64>,
    row_norm: Vec<f64>,
    nb: f64,
    nc: f64,
}

fn scale(p: &StdSdp) -> Scaled {
    let nblk = p.sides.len();
    let row_norm: Vec<f64> = p
        .a
        .iter()
        .map(|r| {
            let s: f64 = r.iter().map(|e| if e.p == e.q { e.v * e.v } else { 2.0 * e.v * e.v }).sum();
            s.sqrt().max(1e-300)
        })
        .collect();
    let b1: Vec<f64> = p.b.iter().zip(&row_norm).map(|(b, n)| b / n).collect();
    let nb = b1.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let mut c: Vec<Mat<f64>> = p.sides.iter().map(|&s| Mat::zeros(s, s)).collect();
    for (k, entries) in p.c.iter().enumerate() {
        for &(i, j, v) in entries {
            c[k][(i, j)] += v;
            if i != j {
                c[k][(j, i)] += v;
            }
        }
    }
    // Normalizing to unit norm (not a floor of one) makes the iterates invariant under
    // scaling of the objective.
    let cn = c.iter().map(|m| dot(m, m)).sum::<f64>().sqrt();
    let nc = if cn > 0.0 { cn } else { 1.0 };
    for m in &mut c {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                m[(i, j)] /= nc;
            }
        }
    }
    let b: Vec<f64> = b1.iter().map(|v| v / nb).collect();
    let mut blocks: Vec<BlockRows> = (0..nblk).map(|_| BlockRows { rows: Vec::new() }).collect();
    let mut rows = Vec::with_capacity(p.a.len());
    for (j, r) in p.a.iter().enumerate() {
        let inv = 1.0 / row_norm[j];
        let scaled: Vec<AEntry> = r.iter().map(|e| AEntry { v: e.v * inv, ..*e }).collect();
        for e in &scaled {
            let br = &mut blocks[e.blk as usize].rows;
            let m = if e.p == e.q { 1.0 } else { 2.0 };
            match br.last_mut() {
                Some((jj, list)) if *jj == j => list.push((e.p as usize, e.q as usize, m * e.v)),
                _ => br.push((j, vec![(e.p as usize, e.q as usize, m * e.v)])),
            }
        }
        rows.push(scaled);
    }
    Scaled { sides: p.sides.clone(), c, blocks, rows, b, row_norm, nb, nc }
}

impl Scaled {
    fn a_op(&self, x: &[Mat<f64>]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|e| {
                        let v = x[e.blk as usize][(e.p as usize, e.q as usize)];
                        if e.p == e.q { e.v * v } else { 2.0 * e.v * v }
                    })
                    .sum()
            })
            .collect()
    }

    fn at_op(&self, l: &[f64]) -> Vec<Mat<f64>> {
        let mut out: Vec<Mat<f64>> = self.sides.iter().map(|&s| Mat::zeros(s, s)).collect();
        for (r, &lj) in self.rows.iter().zip(l) {
            if lj == 0.0 {
                continue;
            }
            for e in r {
                let m = &mut out[e.blk as usize];
                m[(e.p as usize, e.q as usize)] += lj * e.v;
                if e.p != e.q {
                    m[(e.q as usize, e.p as usize)] += lj * e.v;
                }
            }
        }
        out
    }
}

struct Nt {
    g: Mat<f64>,
    ginv: Mat<f64>,
    w: Mat<f64>,
    d: Vec<f64>,
    lx: Mat<f64>,
    ls: Mat<f64>,
}

fn nt_scaling(x: &Mat<f64>, s: &Mat<f64>) -> Option<Nt> {
    let lx = cholesky(x)?;
    let ls = cholesky(s)?;
    let m = gemm_tn(ls.as_ref(), lx.as_ref());
    let svd = m.svd().ok()?;
    let n = x.nrows();
    let d: Vec<f64> = (0..n).map(|i| svd.S().column_vector()[i]).collect();
    if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    // G = L V D^{-1/2},  G^{-1} = D^{-1/2} U^T R^T
    let mut g = gemm(lx.as_ref(), svd.V());
    let mut ginv = gemm_tn(svd.U(), ls.transpose());
    for (i, &di) in d.iter().enumerate() {
        let f = 1.0 / di.sqrt();
        for r in 0..n {
            g[(r, i)] *= f;
        }
        for c in 0..n {
            ginv[(i, c)] *= f;
        }
    }
    let mut w = gemm(g.as_ref(), g.transpose());
    symmetrize(&mut w);
    Some(Nt { g, ginv, w, d, lx, ls })
}

/// Largest `a` with `lower-factored M + a dM >= 0`, infinity if unbounded.
fn max_step(l: &Mat<f64>, dm: &Mat<f64>) -> f64 {
    let e = min_eigenvalue(&congruence_inv(l, dm));
    if e.is_nan() {
        0.0
    } else if e < 0.0 {
        -1.0 / e
    } else {
        f64::INFINITY
    }
}

enum Schur {
    /// Lower triangle holds the Cholesky factor; the rest is scratch.
    Llt(Mat<f64>),
    /// Pivoted symmetric indefinite factorization, used when Cholesky breaks down.
    Lblt { l: Mat<f64>, diag: Diag<f64>, subdiag: Diag<f64>, fwd: Vec<usize>, bwd: Vec<usize> },
}

impl Schur {
    fn solve_factor(&self, rhs: &[f64]) -> Vec<f64> {
        match self {
            Schur::Llt(h) => {
                let m = rhs.len();
                let mut y = rhs.to_vec();
                for j in 0..m {
                    y[j] /= h[(j, j)];
                    let yj = y[j];
                    for i in j + 1..m {
                        y[i] -= h[(i, j)] * yj;
                    }
                }
                for i in (0..m).rev() {
                    let mut s = y[i];
                    for k in i + 1..m {
                        s -= h[(k, i)] * y[k];
                    }
                    y[i] = s / h[(i, i)];
                }
                y
            }
            Schur::Lblt { l, diag, subdiag, fwd, bwd } => {
                let m = rhs.len();
                let mut x = Mat::<f64>::from_fn(m, 1, |i, _| rhs[i]);
                let perm = PermRef::new_checked(fwd, bwd, m);
                let mut buf = MemBuffer::new(bunch_kaufman::solve::solve_in_place_scratch::<usize, f64>(m, 1, Par::Seq));
                bunch_kaufman::solve::solve_in_place_with_conj(
                    l.as_ref(),
                    diag.as_ref(),
                    subdiag.as_ref(),
                    Conj::No,
                    perm,
                    x.as_mut(),
                    Par::Seq,
                    MemStack::new(&mut buf),
                );
                (0..m).map(|i| x[(i, 0)]).collect()
            }
        }
    }

    /// Solve with one round of iterative refinement against the exact operator `apply`.
    fn solve(&self, rhs: &[f64], apply: impl Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut x = self.solve_factor(rhs);
        let ax = apply(&x);
        let r: Vec<f64> = rhs.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let dx = self.solve_factor(&r);
        for (xi, di) in x.iter_mut().zip(dx) {
            *xi += di;
        }
        x
    }
}

/// `A(W A^T(l) W)`
fn schur_apply(p: &Scaled, nts: &[Nt], l: &[f64]) -> Vec<f64> {
    let at = p.at_op(l);
    let wm: Vec<Mat<f64>> = at.iter().zip(nts).map(|(m, nt)| sandwich(nt.w.as_ref(), m.as_ref())).collect();
    p.a_op(&wm)
}

/// Dense `H_ij = <A_i, W A_j W>` with the diagonal returned separately.
fn assemble_schur(p: &Scaled, nts: &[Nt], m: usize) -> (Mat<f64>, Vec<f64>) {
    // Upper triangle accumulates H; the diagonal is kept separately.
    let mut h = Mat::<f64>::zeros(m, m);
    let mut diag = vec![0.0; m];
    for (k, br) in p.blocks.iter().enumerate() {
        let s = p.sides[k];
        let w = &nts[k].w;
        let wf: Vec<f64> = (0..s * s).map(|idx| w[(idx / s, idx % s)]).collect();
        let nrows = br.rows.len();
        // Suffix sums of entry counts.
        let mut tail = vec![0usize; nrows + 1];
        for a in (0..nrows).rev() {
            tail[a] = tail[a + 1] + br.rows[a].1.len();
        }
        let mut t = Mat::<f64>::zeros(s, s);
        for a in 0..nrows {
            let (ia, ref ea) = br.rows[a];
            let ka = ea.len() as f64;
            let sparse_cost = 4.0 * ka * tail[a] as f64;
            let dense_cost = (4.0 * ka * (s * s) as f64).min(2.0 * (s as f64).powi(3)) + 2.0 * tail[a] as f64;
            if sparse_cost <= dense_cost {
                for (jb, eb) in &br.rows[a..] {
                    let mut acc = 0.0;
                    for &(pp, qq, va) in ea {
                        let rq = &wf[qq * s..qq * s + s];
                        let rp = &wf[pp * s..pp * s + s];
                        for &(rr, ss, vb) in eb {
                            acc += va * vb * (rq[rr] * rp[ss] + rq[ss] * rp[rr]);
                        }
                    }
                    add_upper(&mut h, &mut diag, ia, *jb, 0.5 * acc);
                }
            } else {
                // T = W A_a W
                if 4.0 * ka * (s * s) as f64 <= 2.0 * (s as f64).powi(3) {
                    t.fill(0.0);
                    for &(pp, qq, va) in ea {
                        // multiplicity-weighted value: A[p,q] = va / m
                        let v = if pp == qq { va } else { 0.5 * va };
                        for c in 0..s {
                            let wpc = wf[pp * s + c] * v;
                            let wqc = wf[qq * s + c] * v;
                            for r in 0..s {
                                let val = wf[qq * s + r] * wpc
                                    + if pp != qq { wf[pp * s + r] * wqc } else { 0.0 };
                                t[(r, c)] += val;
                            }
                        }
                    }
                } else {
                    let mut am = Mat::<f64>::zeros(s, s);
                    for &(pp, qq, va) in ea {
                        let v = if pp == qq { va } else { 0.5 * va };
                        am[(pp, qq)] += v;
                        if pp != qq {
                            am[(qq, pp)] += v;
                        }
                    }
                    t = sandwich(w.as_ref(), am.as_ref());
                }
                for (jb, eb) in &br.rows[a..] {
                    let acc: f64 = eb.iter().map(|&(rr, ss, vb)| vb * t[(rr, ss)]).sum();
                    add_upper(&mut h, &mut diag, ia, *jb, acc);
                }
            }
        }
    }
    for j in 0..m {
        h[(j, j)] = diag[j];
        for i in 0..j {
            h[(j, i)] = h[(i, j)];
        }
    }
    (h, diag)
}

/// Factors the Schur complement. Pivots that vanish relative to the largest diagonal
/// entry are replaced by a huge value, which removes the corresponding direction
/// instead of amplifying rounding noise.
fn form_schur(p: &Scaled, nts: &[Nt], m: usize) -> Option<Schur> {
    let (mut h, _) = assemble_schur(p, nts, m);
    let mut buf = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(m, Par::Seq, Default::default()));
    let llt = llt::factor::cholesky_in_place(
        h.as_mut(),
        Default::default(),
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    );
    if llt.is_ok() {
        return Some(Schur::Llt(h));
    }
    debug!("schur cholesky failed, using pivoted factorization");
    let (mut l, _) = assemble_schur(p, nts, m);
    let mut subdiag = Diag::<f64>::zeros(m);
    let mut fwd = vec![0usize; m];
    let mut bwd = vec![0usize; m];
    let mut buf = MemBuffer::new(bunch_kaufman::factor::cholesky_in_place_scratch::<usize, f64>(
        m,
        Par::Seq,
        Default::default(),
    ));
    bunch_kaufman::factor::cholesky_in_place(
        l.as_mut(),
        subdiag.as_mut(),
        &mut fwd,
        &mut bwd,
        Par::Seq,
        MemStack::new(&mut buf),
        Default::default(),
    );
    let mut diag = Diag::<f64>::zeros(m);
    for i in 0..m {
        diag[i] = l[(i, i)];
        l[(i, i)] = 1.0;
        for j in i + 1..m {
            l[(i, j)] = 0.0;
        }
    }
    if (0..m).any(|i| !diag[i].is_finite() || !subdiag[i].is_finite()) {
        return None;
    }
    Some(Schur::Lblt { l, diag, subdiag, fwd, bwd })
}

fn add_upper(h: &mut Mat<f64>, diag: &mut [f64], i: usize, j: usize, v: f64) {
    if i == j {
        diag[i] += v;
    } else {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        h[(a, b)] += v;
    }
}

struct Direction {
    dx: Vec<Mat<f64>>,
    dl: Vec<f64>,
    ds: Vec<Mat<f64>>,
}

/// Solves the scaled Newton system for a complementarity right-hand side `rc`
/// (in the NT-scaled space, where the current point is `diag(d)`).
fn direction(p: &Scaled, nts: &[Nt], schur: &Schur, rp: &[f64], rd: &[Mat<f64>], rc: &[Mat<f64>]) -> Direction {
    let nblk = nts.len();
    let mut u = Vec::with_capacity(nblk);
    let mut wrw = Vec::with_capacity(nblk);
    for k in 0..nblk {
        let d = &nts[k].d;
        let s = d.len();
        let mut t = Mat::<f64>::zeros(s, s);
        for j in 0..s {
            for i in 0..s {
                t[(i, j)] = 2.0 * rc[k][(i, j)] / (d[i] + d[j]);
            }
        }
        u.push(sandwich(nts[k].g.as_ref(), t.as_ref()));
        wrw.push(sandwich(nts[k].w.as_ref(), rd[k].as_ref()));
    }
    let diff: Vec<Mat<f64>> = u.iter().zip(&wrw).map(|(a, b)| a - b).collect();
    let adiff = p.a_op(&diff);
    let rhs: Vec<f64> = rp.iter().zip(&adiff).map(|(a, b)| a - b).collect();
    let dl = schur.solve(&rhs, |v| schur_apply(p, nts, v));
    let atdl = p.at_op(&dl);
    let ds: Vec<Mat<f64>> = rd.iter().zip(&atdl).map(|(a, b)| a - b).collect();
    let dx = (0..nblk)
        .map(|k| {
            let mut v = &u[k] - &sandwich(nts[k].w.as_ref(), ds[k].as_ref());
            symmetrize(&mut v);
            v
        })
        .collect();
    Direction { dx, dl, ds }
}

fn inner(a: &[Mat<f64>], b: &[Mat<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot(x, y)).sum()
}

fn norm_blocks(a: &[Mat<f64>]) -> f64 {
    a.iter().map(|m| fro_norm(m).powi(2)).sum::<f64>().sqrt()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn solve_std(prob: &StdSdp, params: &IpmParams) -> IpmOutput {
    let p = scale(prob);
    let m = prob.num_rows();
    let nblk = p.sides.len();
    let nu: f64 = p.sides.iter().sum::<usize>() as f64;

    // Identity-scaled starting point.
    let mut x = Vec::with_capacity(nblk);
    let mut s = Vec::with_capacity(nblk);
    for k in 0..nblk {
        let side = p.sides[k];
        let n = side as f64;
        let mut xi: f64 = 10f64.max(n.sqrt());
        let mut eta: f64 = 10f64.max(n.sqrt()).max(fro_norm(&p.c[k]));
        for (j, r) in p.rows.iter().enumerate() {
            let nrm: f64 = r
                .iter()
                .filter(|e| e.blk as usize == k)
                .map(|e| if e.p == e.q { e.v * e.v } else { 2.0 * e.v * e.v })
                .sum::<f64>()
                .sqrt();
            if nrm > 0.0 {
                xi = xi.max(n * (1.0 + p.b[j].abs()) / (1.0 + nrm));
                eta = eta.max(nrm);
            }
        }
        let mut xm = identity(side);
        let mut sm = identity(side);
        for i in 0..side {
            xm[(i, i)] = xi;
            sm[(i, i)] = eta;
        }
        x.push(xm);
        s.push(sm);
    }
    let mut l = vec![0.0; m];

    let bnorm = 1.0 + norm(&p.b);
    let cnorm = 1.0 + norm_blocks(&p.c);
    let unit = p.nb * p.nc;
    let mut history = Vec::new();
    let mut status = SolverStatus::MaxIterations;
    let mut gamma = 0.9;
    let mut iterations = 0;
    let mut best: Option<(f64, Vec<Mat<f64>>, Vec<f64>, Vec<Mat<f64>>)> = None;
    let mut stall = 0;

    for iter in 0..=params.max_iter {
        iterations = iter;
        let ax = p.a_op(&x);
        let rp: Vec<f64> = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let atl = p.at_op(&l);
        let rd: Vec<Mat<f64>> = (0..nblk).map(|k| &(&p.c[k] - &atl[k]) - &s[k]).collect();
        let pobj = inner(&p.c, &x);
        let dobj: f64 = p.b.iter().zip(&l).map(|(a, b)| a * b).sum();
        let comp = inner(&x, &s);
        let mu = comp / nu;
        let pinf = norm(&rp) / bnorm;
        let dinf = norm_blocks(&rd) / cnorm;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        history.push(IterRecord {
            iteration: iter,
            primal_objective: pobj * unit,
            dual_objective: dobj * unit,
            primal_infeasibility: pinf,
            dual_infeasibility: dinf,
            relative_gap: gap,
            complementarity: comp * unit,
            residual_correction: (inner(&rd, &x) - l.iter().zip(&rp).map(|(a, b)| a * b).sum::<f64>()) * unit,
        });
        debug!(
            "it {iter:3} pobj {:+.10e} dobj {:+.10e} gap {gap:.2e} pinf {pinf:.2e} dinf {dinf:.2e} mu {mu:.2e}",
            pobj * unit,
            dobj * unit
        );
        let err = gap.max(pinf).max(dinf);
        if best.as_ref().is_none_or(|b| err < b.0) {
            best = Some((err, x.clone(), l.clone(), s.clone()));
            stall = 0;
        } else {
            stall += 1;
        }
        if err <= params.tol {
            status = SolverStatus::Optimal;
            break;
        }
        if iter == params.max_iter {
            break;
        }
        if params.deadline.is_some_and(|d| Instant::now() >= d) {
            status = SolverStatus::TimeLimit;
            break;
        }
        let xnorm = norm_blocks(&x);
        let snorm = norm_blocks(&s);
        // Diverging iterates with vanishing residuals indicate an unbounded optimal face, not
        // infeasibility; those keep iterating until the gap closes or progress stalls.
        if (xnorm > 1e12 || snorm > 1e12) && pinf.max(dinf) > params.tol.sqrt() {
            status = SolverStatus::InfeasibleSuspected;
            break;
        }
        if stall >= 8 {
            status = SolverStatus::NumericalFailure;
            break;
        }

        let nts: Option<Vec<Nt>> = (0..nblk).map(|k| nt_scaling(&x[k], &s[k])).collect();
        let Some(nts) = nts else {
            status = SolverStatus::NumericalFailure;
            break;
        };
        let Some(schur) = form_schur(&p, &nts, m) else {
            status = SolverStatus::NumericalFailure;
            break;
        };

        // Predictor.
        let rc_aff: Vec<Mat<f64>> = nts
            .iter()
            .map(|nt| {
                let n = nt.d.len();
                Mat::from_fn(n, n, |i, j| if i == j { -nt.d[i] * nt.d[i] } else { 0.0 })
            })
            .collect();
        let aff = direction(&p, &nts, &schur, &rp, &rd, &rc_aff);
        let ap = (0..nblk).map(|k| max_step(&nts[k].lx, &aff.dx[k])).fold(1.0f64, f64::min);
        let ad = (0..nblk).map(|k| max_step(&nts[k].ls, &aff.ds[k])).fold(1.0f64, f64::min);
        let mut comp_aff = 0.0;
        for k in 0..nblk {
            let xa = &x[k] + &(&aff.dx[k] * faer::Scale(ap));
            let sa = &s[k] + &(&aff.ds[k] * faer::Scale(ad));
            comp_aff += dot(&xa, &sa);
        }
        let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
        let sigma = (comp_aff / comp).max(0.0).powf(expon).min(1.0);

        // Corrector.
        let rc: Vec<Mat<f64>> = (0..nblk)
            .map(|k| {
                let nt = &nts[k];
                let dxt = sandwich(nt.ginv.as_ref(), aff.dx[k].as_ref());
                let dst = sandwich(nt.g.transpose(), aff.ds[k].as_ref());
                let prod = gemm(dxt.as_ref(), dst.as_ref());
                let n = nt.d.len();
                Mat::from_fn(n, n, |i, j| {
                    let sym = 0.5 * (prod[(i, j)] + prod[(j, i)]);
                    let diag = if i == j { sigma * mu - nt.d[i] * nt.d[i] } else { 0.0 };
                    diag - sym
                })
            })
            .collect();
        let dir = direction(&p, &nts, &schur, &rp, &rd, &rc);
        let mp = (0..nblk).map(|k| max_step(&nts[k].lx, &dir.dx[k])).fold(f64::INFINITY, f64::min);
        let md = (0..nblk).map(|k| max_step(&nts[k].ls, &dir.ds[k])).fold(f64::INFINITY, f64::min);
        let alpha_p = (gamma * mp).min(1.0);
        let alpha_d = (gamma * md).min(1.0);
        for k in 0..nblk {
            x[k] = &x[k] + &(&dir.dx[k] * faer::Scale(alpha_p));
            s[k] = &s[k] + &(&dir.ds[k] * faer::Scale(alpha_d));
            symmetrize(&mut x[k]);
            symmetrize(&mut s[k]);
        }
        for (li, di) in l.iter_mut().zip(&dir.dl) {
            *li += alpha_d * di;
        }
        gamma = 0.9 + 0.09 * alpha_p.min(alpha_d);
        debug!("    alpha_p {alpha_p:.3} alpha_d {alpha_d:.3} sigma {sigma:.2e}");
    }

    if status != SolverStatus::Optimal {
        if let Some((_, bx, bl, bs)) = best {
            x = bx;
            l = bl;
            s = bs;
        }
    }
    // Undo scaling.
    for xm in &mut x {
        for j in 0..xm.ncols() {
            for i in 0..xm.nrows() {
                xm[(i, j)] *= p.nb;
            }
        }
    }
    for sm in &mut s {
        for j in 0..sm.ncols() {
            for i in 0..sm.nrows() {
                sm[(i, j)] *= p.nc;
            }
        }
    }
    let lambda = l.iter().zip(&p.row_norm).map(|(v, n)| v * p.nc / n).collect();
    IpmOutput { x, s, lambda, status, iterations, history }
}
