//! Monomial bases, moment keys and symbolic moment/localizing matrices.

use std::collections::HashMap;

use faer::Mat;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::poly::{CPoly, ExponentPair, Monomial};

/// Holomorphic monomials of degree at most `order`, in canonical order.
#[derive(Debug, Clone)]
pub struct MonomialBasis {
    n: usize,
    order: usize,
    entries: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl MonomialBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Monomial] {
        &self.entries
    }

    pub fn position(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Number of entries of degree at most `t`.
    pub fn prefix_len(&self, t: usize) -> usize {
        self.entries.partition_point(|m| m.degree() <= t)
    }
}

fn push_degree(n: usize, d: usize, prefix: &mut Vec<u8>, out: &mut Vec<Monomial>) {
    if prefix.len() + 1 == n {
        prefix.push(d as u8);
        out.push(Monomial::from_slice(prefix));
        prefix.pop();
        return;
    }
    for e in (0..=d).rev() {
        prefix.push(e as u8);
        push_degree(n, d - e, prefix, out);
        prefix.pop();
    }
}

/// All exponent vectors `beta` in `N^n` with `|beta| <= r`.
pub fn enumerate_basis(n: usize, r: usize) -> MonomialBasis {
    assert!(n > 0, "basis needs at least one variable");
    let mut entries = Vec::new();
    let mut prefix = Vec::with_capacity(n);
    for d in 0..=r {
        push_degree(n, d, &mut prefix, &mut entries);
    }
    let index = entries.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
    MonomialBasis { n, order: r, entries, index }
}

/// Canonical representative of the pair `{(beta, gamma), (gamma, beta)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MomentKey(ExponentPair);

/// A key together with the orientation in which it was requested.
///
/// `conj` is set when the requested pair is the swap of the canonical one, so that
/// the complex moment `y_{beta,gamma}` equals the conjugate of the stored value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrientedKey {
    pub key: MomentKey,
    pub conj: bool,
}

impl MomentKey {
    pub fn orient(pair: ExponentPair) -> OrientedKey {
        let swapped = pair.swapped();
        if swapped < pair {
            OrientedKey { key: MomentKey(swapped), conj: true }
        } else {
            OrientedKey { key: MomentKey(pair), conj: false }
        }
    }

    pub fn of(beta: &Monomial, gamma: &Monomial) -> OrientedKey {
        Self::orient(ExponentPair::new(beta.clone(), gamma.clone()))
    }

    pub fn pair(&self) -> &ExponentPair {
        &self.0
    }

    pub fn is_diagonal(&self) -> bool {
        self.0.beta == self.0.gamma
    }

    pub fn degree(&self) -> usize {
        self.0.degree()
    }
}

/// Linear form in moments: `sum c * y_key` (oriented).
pub type MomentForm = Vec<(OrientedKey, Complex64)>;

/// Symmetric/Hermitian matrix of moment forms; only the upper triangle is stored.
#[derive(Debug, Clone)]
pub struct SymbolicMatrix {
    side: usize,
    upper: Vec<MomentForm>,
}

impl SymbolicMatrix {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn entry(&self, i: usize, j: usize) -> &MomentForm {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[upper_offset(self.side, i) + (j - i)]
    }

    /// `(i, j, form)` for `i <= j`, row-major.
    pub fn iter_upper(&self) -> impl Iterator<Item = (usize, usize, &MomentForm)> {
        let side = self.side;
        (0..side)
            .flat_map(move |i| (i..side).map(move |j| (i, j)))
            .zip(self.upper.iter())
            .map(|((i, j), f)| (i, j, f))
    }
}

fn upper_offset(side: usize, i: usize) -> usize {
    // Rows 0..i hold side + (side - 1) + ... + (side - i + 1) entries.
    i * side - i * i.saturating_sub(1) / 2
}

/// `M_t(y)` with entry `(a, b) = y_{v_a, v_b}`.
pub fn moment_matrix_symbolic(basis: &MonomialBasis) -> SymbolicMatrix {
    let v = basis.entries();
    let mut upper = Vec::with_capacity(v.len() * (v.len() + 1) / 2);
    for a in 0..v.len() {
        for b in a..v.len() {
            upper.push(vec![(MomentKey::of(&v[a], &v[b]), Complex64::new(1.0, 0.0))]);
        }
    }
    SymbolicMatrix { side: v.len(), upper }
}

/// `M_t(g y)` with entry `(a, b) = sum g_{b',g'} y_{v_a + b', v_b + g'}`.
pub fn localizing_matrix_symbolic(g: &CPoly, basis: &MonomialBasis) -> SymbolicMatrix {
    let v = basis.entries();
    let mut upper = Vec::with_capacity(v.len() * (v.len() + 1) / 2);
    for a in 0..v.len() {
        for b in a..v.len() {
            let form = g
                .terms()
                .map(|(k, c)| (MomentKey::of(&v[a].times(&k.beta), &v[b].times(&k.gamma)), *c))
                .collect();
            upper.push(form);
        }
    }
    SymbolicMatrix { side: v.len(), upper }
}

/// Moment values indexed by canonical key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Moments {
    values: HashMap<MomentKey, Complex64>,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, key: MomentKey, v: Complex64) {
        self.values.insert(key, v);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MomentKey, &Complex64)> {
        self.values.iter()
    }

    /// Value at an oriented key, `None` if the key is absent.
    pub fn get(&self, k: &OrientedKey) -> Option<Complex64> {
        self.values.get(&k.key).map(|v| if k.conj { v.conj() } else { *v })
    }

    /// `y_{beta, gamma}`.
    pub fn at(&self, beta: &Monomial, gamma: &Monomial) -> Option<Complex64> {
        self.get(&MomentKey::of(beta, gamma))
    }

    pub fn eval_form(&self, form: &MomentForm) -> Option<Complex64> {
        form.iter().map(|(k, c)| self.get(k).map(|v| c * v)).sum()
    }

    /// `L_y(p)`.
    pub fn riesz(&self, p: &CPoly) -> Option<Complex64> {
        p.terms()
            .map(|(k, c)| self.get(&MomentKey::orient(k.clone())).map(|v| c * v))
            .sum()
    }

    /// Conjugation-symmetrized sequence `(y + ȳ) / 2`.
    pub fn symmetrized(&self) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|(k, v)| (k.clone(), Complex64::new(v.re, 0.0)))
                .collect(),
        }
    }

    /// Largest `|v_a - v_b|` over the common keys of `a`, and whether every key of `a` is in `b`.
    pub fn max_diff(&self, other: &Self) -> (f64, bool) {
        let mut worst: f64 = 0.0;
        let mut all = true;
        for (k, v) in &self.values {
            match other.values.get(k) {
                Some(w) => worst = worst.max((v - w).norm()),
                None => all = false,
            }
        }
        (worst, all)
    }
}

/// Numeric Hermitian matrix from a symbolic one.
pub fn instantiate(sym: &SymbolicMatrix, y: &Moments) -> Option<Mat<Complex64>> {
    let s = sym.side();
    let mut m = Mat::<Complex64>::zeros(s, s);
    for (i, j, form) in sym.iter_upper() {
        let v = y.eval_form(form)?;
        if i == j {
            m[(i, i)] = Complex64::new(v.re, 0.0);
        } else {
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    Some(m)
}

/// Real part of [`instantiate`]; the form used by the real hierarchy.
pub fn instantiate_real(sym: &SymbolicMatrix, y: &Moments) -> Option<Mat<f64>> {
    let s = sym.side();
    let mut m = Mat::<f64>::zeros(s, s);
    for (i, j, form) in sym.iter_upper() {
        let v = y.eval_form(form)?.re;
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    Some(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub weight: f64,
    pub point: Vec<Complex64>,
}

/// Finite positive combination of Dirac measures.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    pub atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn dirac(point: Vec<Complex64>) -> Self {
        Self { atoms: vec![Atom { weight: 1.0, point }] }
    }

    pub fn total_weight(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }
}

/// Every canonical key with `|beta|, |gamma| <= r`.
pub fn keys_up_to(n: usize, r: usize) -> Vec<MomentKey> {
    let basis = enumerate_basis(n, r);
    let v = basis.entries();
    let mut keys = Vec::new();
    for a in v {
        for b in v {
            let k = MomentKey::of(a, b);
            if !k.conj {
                keys.push(k.key);
            }
        }
    }
    keys.sort();
    keys.dedup();
    keys
}

/// `y_{beta,gamma} = sum_k w_k z_k^beta conj(z_k)^gamma` for `|beta|, |gamma| <= r`.
pub fn moments_of_measure(mu: &AtomicMeasure, r: usize) -> Moments {
    let n = mu.atoms.first().map_or(1, |a| a.point.len());
    let mut y = Moments::new();
    for k in keys_up_to(n, r) {
        let v = mu.atoms.iter().map(|a| a.weight * k.pair().eval(&a.point)).sum();
        y.insert(k, v);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Monomial;

    #[test]
    fn basis_order_and_size() {
        let b = enumerate_basis(2, 1);
        let e: Vec<&[u8]> = b.entries().iter().map(|m| m.exps()).collect();
        assert_eq!(e, vec![&[0, 0][..], &[1, 0], &[0, 1]]);
        assert_eq!(enumerate_basis(3, 2).len(), 10);
        assert_eq!(enumerate_basis(4, 5).len(), 126);
        let b = enumerate_basis(3, 3);
        assert!(b.entries().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(b.prefix_len(1), 4);
    }

    #[test]
    fn key_orientation() {
        let a = Monomial::from_slice(&[1, 0]);
        let b = Monomial::from_slice(&[0, 1]);
        let k1 = MomentKey::of(&a, &b);
        let k2 = MomentKey::of(&b, &a);
        assert_eq!(k1.key, k2.key);
        assert_ne!(k1.conj, k2.conj);
        assert!(!MomentKey::of(&a, &a).conj);
    }

    #[test]
    fn moment_matrix_of_dirac_is_rank_one() {
        let z = vec![Complex64::new(0.3, 0.4), Complex64::new(-0.5, 0.1)];
        let mu = AtomicMeasure::dirac(z.clone());
        let y = moments_of_measure(&mu, 2);
        let basis = enumerate_basis(2, 2);
        let m = instantiate(&moment_matrix_symbolic(&basis), &y).unwrap();
        let v: Vec<Complex64> = basis.entries().iter().map(|b| b.eval(&z)).collect();
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                assert!((m[(i, j)] - v[i] * v[j].conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn localizing_entry_matches_riesz() {
        let n = 2;
        let g = &CPoly::constant(n, 1.0) - &CPoly::abs2(n, 0);
        let basis = enumerate_basis(n, 1);
        let sym = localizing_matrix_symbolic(&g, &basis);
        let mu = AtomicMeasure {
            atoms: vec![
                Atom { weight: 0.25, point: vec![Complex64::new(0.1, 0.2), Complex64::new(0.5, -0.3)] },
                Atom { weight: 0.75, point: vec![Complex64::new(-0.4, 0.0), Complex64::new(0.2, 0.9)] },
            ],
        };
        let y = moments_of_measure(&mu, 2);
        let m = instantiate(&sym, &y).unwrap();
        for (i, a) in basis.entries().iter().enumerate() {
            for (j, b) in basis.entries().iter().enumerate() {
                let mono = CPoly::term(n, ExponentPair::new(a.clone(), b.clone()), 1.0);
                let want = y.riesz(&(&g * &mono)).unwrap();
                assert!((m[(i, j)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn key_count_matches_formula() {
        for n in 1..=3 {
            for r in 0..=3 {
                let c = enumerate_basis(n, r).len();
                assert_eq!(keys_up_to(n, r).len(), c * (c + 1) / 2);
            }
        }
    }
}
