//! Equality handling and conversion of an LMI program to standard form.
//!
//! Two conversions are available. `Substitution` eliminates the equalities by
//! expressing pivot moments through free ones; the moment blocks become dual slacks and
//! the free moments are (negated) dual multipliers. `MomentBlocks` makes the blocks the
//! primal variable and imposes the equalities and the entry-sharing pattern as linear
//! rows; it avoids fill when substitution would densify the blocks.

use std::collections::BTreeMap;

use faer::Mat;

use super::ipm::{AEntry, StdSdp};
use super::Orientation;
use crate::relax::{AffineForm, LmiProgram};
use crate::tolerances::ECHELON_DROP;

type Sparse = Vec<(usize, f64)>;

fn axpy(a: &Sparse, alpha: f64, b: &Sparse) -> Sparse {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j >= b.len() || (i < a.len() && a[i].0 < b[j].0);
        let take_b = i >= a.len() || (j < b.len() && b[j].0 < a[i].0);
        if take_a {
            out.push(a[i]);
            i += 1;
        } else if take_b {
            out.push((b[j].0, alpha * b[j].1));
            j += 1;
        } else {
            let v = a[i].1 + alpha * b[j].1;
            if v != 0.0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Row echelon form of the equality rows by leading-term reduction.
/// The leading term of a row is its largest variable index.
pub(crate) struct Echelon {
    /// Reduced rows with their constants; the last term is the pivot.
    pub rows: Vec<(Sparse, f64)>,
    /// Each reduced row as a combination of the original rows.
    pub combos: Vec<Sparse>,
    pub pivot_row: Vec<Option<usize>>,
    /// Index of an original row reducing to `0 = c != 0`, if any.
    pub inconsistent: Option<usize>,
}

impl Echelon {
    pub fn build(prog: &LmiProgram) -> Self {
        let nv = prog.num_vars();
        let mut ech = Echelon {
            rows: Vec::new(),
            combos: Vec::new(),
            pivot_row: vec![None; nv],
            inconsistent: None,
        };
        for (ri, row) in prog.equalities.iter().enumerate() {
            let mut terms: Sparse = row.form.terms.clone();
            let mut constant = row.form.constant;
            let mut combo: Sparse = vec![(ri, 1.0)];
            let scale = terms.iter().map(|t| t.1.abs()).fold(constant.abs(), f64::max);
            loop {
                let Some(&(lead, c)) = terms.last() else { break };
                if c.abs() <= ECHELON_DROP * scale {
                    terms.pop();
                    continue;
                }
                match ech.pivot_row[lead] {
                    Some(k) => {
                        let (ref pr, pc) = ech.rows[k];
                        let f = -c / pr.last().unwrap().1;
                        terms = axpy(&terms, f, pr);
                        // The pivot cancels exactly in exact arithmetic.
                        terms.retain(|t| t.0 != lead);
                        constant += f * pc;
                        combo = axpy(&combo, f, &ech.combos[k]);
                    }
                    None => break,
                }
            }
            match terms.last() {
                Some(&(lead, _)) => {
                    ech.pivot_row[lead] = Some(ech.rows.len());
                    ech.rows.push((terms, constant));
                    ech.combos.push(combo);
                }
                None => {
                    if constant.abs() > 1e-9 * scale.max(1.0) && ech.inconsistent.is_none() {
                        ech.inconsistent = Some(ri);
                    }
                }
            }
        }
        ech
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Solves `E^T mu = r` through the echelon rows, leaving the unexplained part in `r`.
    pub fn multipliers(&self, r: &mut [f64], num_rows: usize) -> Vec<f64> {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by_key(|&k| std::cmp::Reverse(self.rows[k].0.last().unwrap().0));
        let mut mu = vec![0.0; num_rows];
        for k in order {
            let (ref terms, _) = self.rows[k];
            let &(p, cp) = terms.last().unwrap();
            let nu = r[p] / cp;
            if nu == 0.0 {
                continue;
            }
            for &(v, c) in terms {
                r[v] -= nu * c;
            }
            r[p] = 0.0;
            for &(orig, t) in &self.combos[k] {
                mu[orig] += nu * t;
            }
        }
        mu
    }
}

/// Maps solver output back to program variables and Gram blocks.
pub(crate) enum Recovery {
    Substitution {
        /// Per variable: constant and terms over free variables.
        nf: Vec<(f64, Sparse)>,
    },
    MomentBlocks {
        /// Per variable: `(block, i, j, coeff, constant)` with `y = (X_ij - constant) / coeff`.
        reps: Vec<(usize, usize, usize, f64, f64)>,
    },
}

impl Recovery {
    pub fn variables(&self, x: &[Mat<f64>], lambda: &[f64]) -> Vec<f64> {
        match self {
            Recovery::Substitution { nf } => nf
                .iter()
                .map(|(c, t)| c + t.iter().map(|&(k, a)| -a * lambda[k]).sum::<f64>())
                .collect(),
            Recovery::MomentBlocks { reps } => reps
                .iter()
                .map(|&(b, i, j, c, k)| (x[b][(i, j)] - k) / c)
                .collect(),
        }
    }

    pub fn orientation(&self) -> Orientation {
        match self {
            Recovery::Substitution { .. } => Orientation::Substitution,
            Recovery::MomentBlocks { .. } => Orientation::MomentBlocks,
        }
    }
}

pub(crate) struct Converted {
    pub std: StdSdp,
    /// Objective of the program = `offset + sign * <C, X>` at the optimum.
    pub offset: f64,
    pub recovery: Recovery,
}

/// Normal forms of all variables in terms of free (non-pivot) ones, or `None`
/// if the total size exceeds `budget`.
fn normal_forms(prog: &LmiProgram, ech: &Echelon, budget: usize) -> Option<(Vec<(f64, Sparse)>, usize)> {
    let nv = prog.num_vars();
    let mut free_index = vec![usize::MAX; nv];
    let mut nfree = 0;
    for v in 0..nv {
        if ech.pivot_row[v].is_none() {
            free_index[v] = nfree;
            nfree += 1;
        }
    }
    let mut nf: Vec<(f64, Sparse)> = Vec::with_capacity(nv);
    let mut total = 0usize;
    for v in 0..nv {
        match ech.pivot_row[v] {
            None => nf.push((0.0, vec![(free_index[v], 1.0)])),
            Some(k) => {
                let (ref terms, constant) = ech.rows[k];
                let cp = terms.last().unwrap().1;
                let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
                let mut c0 = constant;
                for &(u, cu) in &terms[..terms.len() - 1] {
                    let (nc, ref nt) = nf[u];
                    c0 += cu * nc;
                    for &(f, a) in nt {
                        *acc.entry(f).or_default() += cu * a;
                    }
                }
                let t: Sparse = acc.into_iter().filter(|t| t.1 != 0.0).map(|(f, a)| (f, -a / cp)).collect();
                total += t.len();
                if total > budget {
                    return None;
                }
                nf.push((-c0 / cp, t));
            }
        }
    }
    Some((nf, nfree))
}

fn substitute(form: &AffineForm, nf: &[(f64, Sparse)]) -> (f64, BTreeMap<usize, f64>) {
    let mut c = form.constant;
    let mut acc = BTreeMap::new();
    for &(v, a) in &form.terms {
        let (nc, ref nt) = nf[v];
        c += a * nc;
        for &(f, b) in nt {
            *acc.entry(f).or_insert(0.0) += a * b;
        }
    }
    (c, acc)
}

fn to_substitution(prog: &LmiProgram, nf: Vec<(f64, Sparse)>, nfree: usize) -> Converted {
    let sides = prog.block_sides();
    let mut c: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); sides.len()];
    let mut a: Vec<Vec<AEntry>> = vec![Vec::new(); nfree];
    for (bi, blk) in prog.blocks.iter().enumerate() {
        for e in &blk.entries {
            let (k0, terms) = substitute(&e.form, &nf);
            if k0 != 0.0 {
                c[bi].push((e.i, e.j, k0));
            }
            for (f, v) in terms {
                if v != 0.0 {
                    a[f].push(AEntry { blk: bi as u32, p: e.i as u32, q: e.j as u32, v });
                }
            }
        }
    }
    let (c0, obj) = substitute(&prog.objective, &nf);
    let mut b = vec![0.0; nfree];
    for (f, v) in obj {
        b[f] = v;
    }
    // S = C - sum l_k A_k = F0 + sum x_k F_k with l = -x; min c^T x = c0 - max b^T l.
    Converted {
        std: StdSdp { sides, c, a, b },
        offset: c0,
        recovery: Recovery::Substitution { nf },
    }
}

fn upper_positions(sides: &[usize]) -> usize {
    sides.iter().map(|s| s * (s + 1) / 2).sum()
}

fn representatives(prog: &LmiProgram) -> Option<Vec<(usize, usize, usize, f64, f64)>> {
    let mut reps: Vec<Option<(usize, usize, usize, f64, f64)>> = vec![None; prog.num_vars()];
    for (bi, blk) in prog.blocks.iter().enumerate() {
        for e in &blk.entries {
            if let [(v, c)] = e.form.terms[..] {
                if reps[v].is_none() {
                    reps[v] = Some((bi, e.i, e.j, c, e.form.constant));
                }
            }
        }
    }
    reps.into_iter().collect()
}

fn push_x(row: &mut BTreeMap<(usize, usize, usize), f64>, b: usize, i: usize, j: usize, coeff: f64) {
    *row.entry((b, i, j)).or_insert(0.0) += coeff;
}

/// Converts a coefficient on `X_ij` into the symmetric matrix entry convention.
fn finish_row(row: BTreeMap<(usize, usize, usize), f64>) -> Vec<AEntry> {
    row.into_iter()
        .filter(|(_, v)| *v != 0.0)
        .map(|((b, i, j), v)| AEntry {
            blk: b as u32,
            p: i as u32,
            q: j as u32,
            v: if i == j { v } else { 0.5 * v },
        })
        .collect()
}

fn to_moment_blocks(prog: &LmiProgram, ech: &Echelon, reps: Vec<(usize, usize, usize, f64, f64)>) -> Converted {
    let sides = prog.block_sides();
    let mut is_rep: Vec<Vec<bool>> = sides.iter().map(|&s| vec![false; s * s]).collect();
    for &(b, i, j, _, _) in &reps {
        is_rep[b][i * sides[b] + j] = true;
    }
    let mut a = Vec::new();
    let mut rhs = Vec::new();
    // y_v in terms of X: (X[rep] - k) / c
    let lin = |form_terms: &[(usize, f64)], row: &mut BTreeMap<(usize, usize, usize), f64>| -> f64 {
        let mut shift = 0.0;
        for &(u, cu) in form_terms {
            let (b, i, j, c, k) = reps[u];
            push_x(row, b, i, j, cu / c);
            shift += cu * k / c;
        }
        shift
    };
    for (bi, blk) in prog.blocks.iter().enumerate() {
        let s = blk.side;
        let mut forms: Vec<Option<&AffineForm>> = vec![None; s * s];
        for e in &blk.entries {
            forms[e.i * s + e.j] = Some(&e.form);
        }
        for i in 0..s {
            for j in i..s {
                if is_rep[bi][i * s + j] {
                    continue;
                }
                let mut row = BTreeMap::new();
                push_x(&mut row, bi, i, j, 1.0);
                let mut b = 0.0;
                if let Some(f) = forms[i * s + j] {
                    let mut neg = BTreeMap::new();
                    let shift = lin(&f.terms, &mut neg);
                    for (key, v) in neg {
                        *row.entry(key).or_insert(0.0) -= v;
                    }
                    b = f.constant - shift;
                }
                a.push(finish_row(row));
                rhs.push(b);
            }
        }
    }
    for (terms, constant) in &ech.rows {
        let mut row = BTreeMap::new();
        let shift = lin(terms, &mut row);
        a.push(finish_row(row));
        rhs.push(-constant + shift);
    }
    let mut crow = BTreeMap::new();
    let shift = lin(&prog.objective.terms, &mut crow);
    let mut c: Vec<Vec<(usize, usize, f64)>> = vec![Vec::new(); sides.len()];
    for e in finish_row(crow) {
        c[e.blk as usize].push((e.p as usize, e.q as usize, e.v));
    }
    Converted {
        std: StdSdp { sides, c, a, b: rhs },
        offset: prog.objective.constant - shift,
        recovery: Recovery::MomentBlocks { reps },
    }
}

/// Picks an orientation and converts. Returns `None` only if a forced orientation is unavailable.
pub(crate) fn convert(prog: &LmiProgram, ech: &Echelon, choice: Orientation) -> Option<Converted> {
    let nv = prog.num_vars();
    let sides = prog.block_sides();
    let m_sub = nv - ech.rank();
    let reps = representatives(prog);
    let m_blk = reps.as_ref().map(|_| upper_positions(&sides) - nv + ech.rank());
    let budget = match choice {
        Orientation::Substitution => usize::MAX,
        _ => 4 * nv + 1000,
    };
    let want_sub = match choice {
        Orientation::Substitution => true,
        Orientation::MomentBlocks => false,
        Orientation::Auto => m_blk.is_none_or(|mb| m_sub <= mb),
    };
    if want_sub {
        if let Some((nf, nfree)) = normal_forms(prog, ech, budget) {
            log::debug!("substitution: {nfree} free variables");
            return Some(to_substitution(prog, nf, nfree));
        }
        if choice == Orientation::Substitution {
            return None;
        }
        log::debug!("substitution rejected for fill");
    }
    let reps = reps?;
    log::debug!("moment blocks: {} rows", m_blk.unwrap_or(0));
    Some(to_moment_blocks(prog, ech, reps))
}
