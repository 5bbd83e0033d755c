//! Moment relaxations compiled into linear matrix inequality programs.

use std::collections::{HashMap, HashSet};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moment::{
    enumerate_basis, localizing_matrix_symbolic, moment_matrix_symbolic, MomentForm, MomentKey,
    SymbolicMatrix,
};
use crate::poly::{to_real_pop, CpopInstance, Monomial, PolyError, RPoly, RealPop};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelaxError {
    #[error("relaxation order {order} is below the minimal order {d_min}")]
    OrderTooSmall { order: usize, d_min: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hierarchy {
    /// Real moment sequence with `y_{b,g} = y_{g,b}`.
    Real,
    /// Hermitian moment sequence, embedded as a real program of twice the size.
    Complex,
    /// Classical real moment hierarchy over `2n` real variables.
    Rpop,
}

impl std::str::FromStr for Hierarchy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "real" => Ok(Self::Real),
            "complex" => Ok(Self::Complex),
            "rpop" => Ok(Self::Rpop),
            other => Err(format!("unknown hierarchy '{other}' (expected real, complex or rpop)")),
        }
    }
}

impl std::fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Real => "real",
            Self::Complex => "complex",
            Self::Rpop => "rpop",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Part {
    Re,
    Im,
}

/// Meaning of a scalar variable of the program.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VarLabel {
    Moment { key: MomentKey, part: Part },
    Real(Monomial),
}

/// `constant + sum coeff * x_var`, terms sorted by variable and merged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineForm {
    pub fn from_terms(constant: f64, mut terms: Vec<(usize, f64)>) -> Self {
        terms.sort_by_key(|t| t.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += c,
                _ => merged.push((v, c)),
            }
        }
        merged.retain(|t| t.1 != 0.0);
        Self { constant, terms: merged }
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(v, c)| c * x[v]).sum::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockOrigin {
    Moment,
    Localizing(usize),
}

#[derive(Debug, Clone)]
pub struct BlockEntry {
    pub i: usize,
    pub j: usize,
    pub form: AffineForm,
}

/// Symmetric block `F(x) >= 0`; zero entries are omitted, only `i <= j` is stored.
#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub side: usize,
    pub entries: Vec<BlockEntry>,
    pub origin: BlockOrigin,
    /// Order of the monomial basis indexing the block.
    pub basis_order: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowOrigin {
    Normalization,
    Localizing { constraint: usize, i: usize, j: usize, part: Part },
}

#[derive(Debug, Clone)]
pub struct EqualityRow {
    pub form: AffineForm,
    pub origin: RowOrigin,
}

/// `min objective(x)  s.t.  blocks(x) >= 0, equalities(x) = 0`.
#[derive(Debug, Clone)]
pub struct LmiProgram {
    pub hierarchy: Hierarchy,
    pub order: usize,
    /// Complex variables (`Real`, `Complex`) or real variables (`Rpop`).
    pub nvars_poly: usize,
    pub vars: Vec<VarLabel>,
    pub objective: AffineForm,
    pub blocks: Vec<LmiBlock>,
    pub equalities: Vec<EqualityRow>,
    var_index: HashMap<VarLabel, usize>,
}

impl LmiProgram {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn var(&self, label: &VarLabel) -> Option<usize> {
        self.var_index.get(label).copied()
    }

    pub fn block_sides(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.side).collect()
    }

    /// Index of `y_{0,0}` (or `y_0`).
    pub fn unit_var(&self) -> usize {
        self.equalities
            .iter()
            .find(|r| r.origin == RowOrigin::Normalization)
            .and_then(|r| r.form.terms.first().map(|t| t.0))
            .expect("program has a normalization row")
    }
}

/// Table of `(n_sdp, m_sdp)` for the three hierarchies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityStats {
    pub n: usize,
    pub r: usize,
    pub real_hsos: (u128, u128),
    pub complex_hsos: (u128, u128),
    pub real_sos: (u128, u128),
}

pub fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k.min(n));
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

/// Moment-matrix side and number of scalar moment variables per hierarchy.
pub fn complexity_stats(n: usize, r: usize) -> ComplexityStats {
    let c = binomial(n + r, r);
    ComplexityStats {
        n,
        r,
        real_hsos: (c, c * (c + 1) / 2),
        complex_hsos: (2 * c, c * c),
        real_sos: (binomial(2 * n + r, r), binomial(2 * n + 2 * r, 2 * r)),
    }
}

/// Deduplicates equality rows that are scalar multiples of each other.
#[derive(Default)]
struct RowSet {
    seen: HashSet<(Vec<(usize, i64)>, i64)>,
}

impl RowSet {
    fn insert(&mut self, f: &AffineForm) -> bool {
        let lead = match f.terms.last() {
            Some(t) => t.1,
            None => return self.seen.insert((Vec::new(), quantize(f.constant.signum()))),
        };
        let key: Vec<(usize, i64)> = f.terms.iter().map(|&(v, c)| (v, quantize(c / lead))).collect();
        self.seen.insert((key, quantize(f.constant / lead)))
    }
}

fn quantize(x: f64) -> i64 {
    (x * 1e12).round() as i64
}

struct Builder {
    hierarchy: Hierarchy,
    vars: Vec<VarLabel>,
    index: HashMap<VarLabel, usize>,
}

impl Builder {
    fn with_keys(hierarchy: Hierarchy, mut keys: Vec<MomentKey>) -> Self {
        keys.sort();
        keys.dedup();
        let mut vars = Vec::new();
        for k in keys {
            let diag = k.is_diagonal();
            vars.push(VarLabel::Moment { key: k.clone(), part: Part::Re });
            if hierarchy == Hierarchy::Complex && !diag {
                vars.push(VarLabel::Moment { key: k, part: Part::Im });
            }
        }
        let index = vars.iter().enumerate().map(|(i, v)| (v.clone(), i)).collect();
        Self { hierarchy, vars, index }
    }

    fn re(&self, k: &MomentKey) -> usize {
        self.index[&VarLabel::Moment { key: k.clone(), part: Part::Re }]
    }

    fn im(&self, k: &MomentKey) -> Option<usize> {
        self.index.get(&VarLabel::Moment { key: k.clone(), part: Part::Im }).copied()
    }

    /// Real and imaginary parts of a moment form as affine forms.
    fn split(&self, form: &MomentForm) -> (AffineForm, AffineForm) {
        let mut re = Vec::with_capacity(form.len() * 2);
        let mut im = Vec::with_capacity(form.len() * 2);
        for (ok, c) in form {
            let r = self.re(&ok.key);
            match self.hierarchy {
                Hierarchy::Real => {
                    re.push((r, c.re));
                    im.push((r, c.im));
                }
                _ => {
                    // y = Re + s i Im with s = -1 for the conjugate orientation.
                    re.push((r, c.re));
                    im.push((r, c.im));
                    if let Some(iv) = self.im(&ok.key) {
                        let s = if ok.conj { -1.0 } else { 1.0 };
                        re.push((iv, -s * c.im));
                        im.push((iv, s * c.re));
                    }
                }
            }
        }
        (AffineForm::from_terms(0.0, re), AffineForm::from_terms(0.0, im))
    }

    fn block(&self, sym: &SymbolicMatrix, origin: BlockOrigin, basis_order: usize) -> LmiBlock {
        let s = sym.side();
        let mut entries = Vec::new();
        match self.hierarchy {
            Hierarchy::Real | Hierarchy::Rpop => {
                for (i, j, form) in sym.iter_upper() {
                    let (re, _) = self.split(form);
                    if !re.is_zero() {
                        entries.push(BlockEntry { i, j, form: re });
                    }
                }
                LmiBlock { side: s, entries, origin, basis_order }
            }
            Hierarchy::Complex => {
                // [[A, -B], [B, A]] with M = A + iB.
                let mut b_lower: Vec<BlockEntry> = Vec::new();
                for (i, j, form) in sym.iter_upper() {
                    let (re, im) = self.split(form);
                    if !re.is_zero() {
                        entries.push(BlockEntry { i, j, form: re.clone() });
                        entries.push(BlockEntry { i: s + i, j: s + j, form: re });
                    }
                    if i != j && !im.is_zero() {
                        // top-right (i, s+j) = -B_ij, (j, s+i) = -B_ji = B_ij
                        let neg = AffineForm::from_terms(
                            -im.constant,
                            im.terms.iter().map(|&(v, c)| (v, -c)).collect(),
                        );
                        entries.push(BlockEntry { i, j: s + j, form: neg });
                        b_lower.push(BlockEntry { i: j, j: s + i, form: im });
                    }
                }
                entries.extend(b_lower);
                entries.sort_by_key(|e| (e.i, e.j));
                LmiBlock { side: 2 * s, entries, origin, basis_order }
            }
        }
    }
}

fn check_order(inst: &CpopInstance, r: usize) -> Result<(), RelaxError> {
    inst.validate()?;
    let d = inst.degree_stats();
    if r < d.d_min {
        return Err(RelaxError::OrderTooSmall { order: r, d_min: d.d_min });
    }
    Ok(())
}

fn build_hsos(inst: &CpopInstance, r: usize, hierarchy: Hierarchy) -> Result<LmiProgram, RelaxError> {
    check_order(inst, r)?;
    if hierarchy == Hierarchy::Real {
        inst.require_real_coeffs()?;
    }
    let n = inst.n;
    let basis = enumerate_basis(n, r);
    let moment = moment_matrix_symbolic(&basis);
    let keys: Vec<MomentKey> = moment.iter_upper().map(|(_, _, f)| f[0].0.key.clone()).collect();
    let b = Builder::with_keys(hierarchy, keys);

    let f = inst.min_objective();
    let obj_form: MomentForm = f.terms().map(|(k, c)| (MomentKey::orient(k.clone()), *c)).collect();
    let objective = b.split(&obj_form).0;

    let mut blocks = vec![b.block(&moment, BlockOrigin::Moment, r)];
    for (gi, g) in inst.ineqs.iter().enumerate() {
        let t = r - g.degree();
        let sym = localizing_matrix_symbolic(g, &enumerate_basis(n, t));
        blocks.push(b.block(&sym, BlockOrigin::Localizing(gi), t));
    }

    let mut rows = RowSet::default();
    let y00 = b.re(&MomentKey::orient(crate::poly::ExponentPair::one(n)).key);
    let norm = AffineForm::from_terms(-1.0, vec![(y00, 1.0)]);
    rows.insert(&norm);
    let mut equalities = vec![EqualityRow { form: norm, origin: RowOrigin::Normalization }];
    for (hi, h) in inst.eqs.iter().enumerate() {
        let t = r - h.degree();
        let sym = localizing_matrix_symbolic(h, &enumerate_basis(n, t));
        for (i, j, form) in sym.iter_upper() {
            let (re, im) = b.split(form);
            // Real-coefficient rows have no imaginary part; purely imaginary ones no real part.
            let parts = [(Part::Re, re), (Part::Im, im)];
            for (part, f) in &parts {
                if !f.is_zero() && rows.insert(f) {
                    equalities.push(EqualityRow {
                        form: f.clone(),
                        origin: RowOrigin::Localizing { constraint: hi, i, j, part: *part },
                    });
                }
            }
        }
    }

    Ok(LmiProgram {
        hierarchy,
        order: r,
        nvars_poly: n,
        vars: b.vars,
        objective,
        blocks,
        equalities,
        var_index: b.index,
    })
}

/// Real moment relaxation of order `r`.
pub fn build_real_relaxation(inst: &CpopInstance, r: usize) -> Result<LmiProgram, RelaxError> {
    build_hsos(inst, r, Hierarchy::Real)
}

/// Complex moment relaxation of order `r`, embedded in real arithmetic.
pub fn build_complex_relaxation(inst: &CpopInstance, r: usize) -> Result<LmiProgram, RelaxError> {
    build_hsos(inst, r, Hierarchy::Complex)
}

/// Classical real moment relaxation of the realified instance.
pub fn build_rpop_relaxation(inst: &CpopInstance, r: usize) -> Result<LmiProgram, RelaxError> {
    check_order(inst, r)?;
    build_real_pop_relaxation(&to_real_pop(inst)?, r)
}

pub fn build_relaxation(
    inst: &CpopInstance,
    r: usize,
    hierarchy: Hierarchy,
) -> Result<LmiProgram, RelaxError> {
    match hierarchy {
        Hierarchy::Real => build_real_relaxation(inst, r),
        Hierarchy::Complex => build_complex_relaxation(inst, r),
        Hierarchy::Rpop => build_rpop_relaxation(inst, r),
    }
}

fn half_degree(p: &RPoly) -> usize {
    p.degree().div_ceil(2)
}

/// Lasserre relaxation of order `r` for a real polynomial problem.
pub fn build_real_pop_relaxation(pop: &RealPop, r: usize) -> Result<LmiProgram, RelaxError> {
    let d_min = std::iter::once(&pop.objective)
        .chain(&pop.ineqs)
        .chain(&pop.eqs)
        .map(half_degree)
        .max()
        .unwrap_or(0);
    if r < d_min {
        return Err(RelaxError::OrderTooSmall { order: r, d_min });
    }
    let m = pop.m;
    let basis = enumerate_basis(m, r);
    let v = basis.entries();
    let mut monos: Vec<Monomial> = Vec::new();
    for a in 0..v.len() {
        for b in a..v.len() {
            monos.push(v[a].times(&v[b]));
        }
    }
    monos.sort();
    monos.dedup();
    let vars: Vec<VarLabel> = monos.into_iter().map(VarLabel::Real).collect();
    let index: HashMap<VarLabel, usize> = vars.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    let var = |m: Monomial| index[&VarLabel::Real(m)];

    let loc_form = |g: &RPoly, a: &Monomial, b: &Monomial| {
        AffineForm::from_terms(0.0, g.terms().map(|(k, c)| (var(a.times(b).times(k)), *c)).collect())
    };

    let obj = pop.min_objective();
    let objective = AffineForm::from_terms(0.0, obj.terms().map(|(k, c)| (var(k.clone()), *c)).collect());
    let one = RPoly::from_terms(m, [(Monomial::one(m), 1.0)]);

    let make_block = |g: &RPoly, t: usize, origin: BlockOrigin| {
        let bb = enumerate_basis(m, t);
        let w = bb.entries();
        let mut entries = Vec::new();
        for i in 0..w.len() {
            for j in i..w.len() {
                let form = loc_form(g, &w[i], &w[j]);
                if !form.is_zero() {
                    entries.push(BlockEntry { i, j, form });
                }
            }
        }
        LmiBlock { side: w.len(), entries, origin, basis_order: t }
    };

    let mut blocks = vec![make_block(&one, r, BlockOrigin::Moment)];
    for (gi, g) in pop.ineqs.iter().enumerate() {
        blocks.push(make_block(g, r - half_degree(g), BlockOrigin::Localizing(gi)));
    }

    let mut rows = RowSet::default();
    let norm = AffineForm::from_terms(-1.0, vec![(var(Monomial::one(m)), 1.0)]);
    rows.insert(&norm);
    let mut equalities = vec![EqualityRow { form: norm, origin: RowOrigin::Normalization }];
    for (hi, h) in pop.eqs.iter().enumerate() {
        let bb = enumerate_basis(m, r - half_degree(h));
        let w = bb.entries();
        for i in 0..w.len() {
            for j in i..w.len() {
                let f = loc_form(h, &w[i], &w[j]);
                if !f.is_zero() && rows.insert(&f) {
                    equalities.push(EqualityRow {
                        form: f,
                        origin: RowOrigin::Localizing { constraint: hi, i, j, part: Part::Re },
                    });
                }
            }
        }
    }

    Ok(LmiProgram {
        hierarchy: Hierarchy::Rpop,
        order: r,
        nvars_poly: m,
        vars,
        objective,
        blocks,
        equalities,
        var_index: index,
    })
}

/// Complex moment values `y` read off a primal point of an HSOS program.
pub fn moments_from_solution(prog: &LmiProgram, x: &[f64]) -> crate::moment::Moments {
    let mut y = crate::moment::Moments::new();
    for (i, label) in prog.vars.iter().enumerate() {
        if let VarLabel::Moment { key, part: Part::Re } = label {
            let im = prog
                .var(&VarLabel::Moment { key: key.clone(), part: Part::Im })
                .map_or(0.0, |j| x[j]);
            y.insert(key.clone(), Complex64::new(x[i], im));
        }
    }
    y
}

/// Real moments `y_alpha` of an RPOP program.
pub fn real_moments_from_solution(prog: &LmiProgram, x: &[f64]) -> HashMap<Monomial, f64> {
    prog.vars
        .iter()
        .zip(x)
        .filter_map(|(l, v)| match l {
            VarLabel::Real(m) => Some((m.clone(), *v)),
            _ => None,
        })
        .collect()
}

/// Variable vector realizing a given moment sequence (HSOS hierarchies).
pub fn solution_from_moments(prog: &LmiProgram, y: &crate::moment::Moments) -> Option<Vec<f64>> {
    prog.vars
        .iter()
        .map(|l| match l {
            VarLabel::Moment { key, part } => {
                let v = y.get(&crate::moment::OrientedKey { key: key.clone(), conj: false })?;
                Some(match part {
                    Part::Re => v.re,
                    Part::Im => v.im,
                })
            }
            VarLabel::Real(_) => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{CPoly, Sense};

    fn sphere_quadratic() -> CpopInstance {
        let n = 2;
        let f = &(&CPoly::z(n, 0) * &CPoly::zbar(n, 1)) + &(&CPoly::z(n, 1) * &CPoly::zbar(n, 0));
        let h = &(&CPoly::abs2(n, 0) + &CPoly::abs2(n, 1)) - &CPoly::constant(n, 1.0);
        CpopInstance::new("q", Sense::Min, f, vec![], vec![h]).unwrap()
    }

    #[test]
    fn sphere_quadratic_shapes() {
        let inst = sphere_quadratic();
        let p = build_real_relaxation(&inst, 1).unwrap();
        assert_eq!(p.block_sides(), vec![3]);
        assert_eq!(p.num_vars(), 6);
        assert_eq!(p.equalities.iter().filter(|r| r.origin == RowOrigin::Normalization).count(), 1);
        let c = build_complex_relaxation(&inst, 1).unwrap();
        assert_eq!(c.block_sides(), vec![6]);
        assert_eq!(c.num_vars(), 9);
    }

    #[test]
    fn order_below_minimum_is_rejected() {
        let inst = sphere_quadratic();
        assert!(matches!(
            build_real_relaxation(&inst, 0),
            Err(RelaxError::OrderTooSmall { order: 0, d_min: 1 })
        ));
    }

    #[test]
    fn complex_coefficients_rejected_by_real_hierarchy() {
        let n = 1;
        let i = Complex64::new(0.0, 1.0);
        let f = &CPoly::z(n, 0).scale(i) + &CPoly::zbar(n, 0).scale(-i);
        let inst = CpopInstance::new("c", Sense::Min, f, vec![], vec![]).unwrap();
        assert!(build_real_relaxation(&inst, 1).is_err());
        assert!(build_complex_relaxation(&inst, 1).is_ok());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), 10);
        assert_eq!(binomial(30, 15), 155117520);
        assert_eq!(binomial(3, 0), 1);
    }

    #[test]
    fn complexity_table_small() {
        let s = complexity_stats(2, 1);
        assert_eq!(s.real_hsos, (3, 6));
        assert_eq!(s.complex_hsos, (6, 9));
        assert_eq!(s.real_sos, (5, 15));
    }
}
