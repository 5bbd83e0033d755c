//! Polynomials in `(z, z̄)` and their real counterparts.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;
use thiserror::Error;

use crate::tolerances::{COEFF_PRUNE, IMAG_RESIDUE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolyError {
    #[error("arity mismatch: {left} vs {right} variables")]
    ArityMismatch { left: usize, right: usize },
    #[error("{what} is not self-conjugate at term {term}")]
    NotSelfConjugate { what: String, term: String },
    #[error("{what} has non-real coefficient at term {term}")]
    NonRealCoefficient { what: String, term: String },
    #[error("imaginary residue {0:.3e} after real substitution")]
    ImaginaryResidue(f64),
}

/// Exponent vector over `n` variables.
///
/// Ordered by total degree, then lexicographically with the first variable largest,
/// so `1 < z1 < z2 < z1^2 < z1 z2 < z2^2`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial(SmallVec<[u8; 8]>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Self(SmallVec::from_elem(0, n))
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut m = Self::one(n);
        m.0[i] = 1;
        m
    }

    pub fn from_slice(e: &[u8]) -> Self {
        Self(SmallVec::from_slice(e))
    }

    pub fn exps(&self) -> &[u8] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// Product of monomials (sum of exponents).
    pub fn times(&self, other: &Self) -> Self {
        debug_assert_eq!(self.arity(), other.arity());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `z^self` at a complex point.
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        self.0
            .iter()
            .zip(z)
            .filter(|(&e, _)| e > 0)
            .fold(Complex64::new(1.0, 0.0), |acc, (&e, zi)| acc * zi.powu(e as u32))
    }

    /// `x^self` at a real point.
    pub fn eval_real(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, xi)| xi.powi(e as i32))
            .product()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// The monomial `z^beta z̄^gamma`.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExponentPair {
    pub beta: Monomial,
    pub gamma: Monomial,
}

impl ExponentPair {
    pub fn new(beta: Monomial, gamma: Monomial) -> Self {
        debug_assert_eq!(beta.arity(), gamma.arity());
        Self { beta, gamma }
    }

    pub fn one(n: usize) -> Self {
        Self::new(Monomial::one(n), Monomial::one(n))
    }

    pub fn arity(&self) -> usize {
        self.beta.arity()
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.gamma.clone(), self.beta.clone())
    }

    pub fn times(&self, other: &Self) -> Self {
        Self::new(self.beta.times(&other.beta), self.gamma.times(&other.gamma))
    }

    pub fn total_degree(&self) -> usize {
        self.beta.degree() + self.gamma.degree()
    }

    /// `max(|beta|, |gamma|)`.
    pub fn degree(&self) -> usize {
        self.beta.degree().max(self.gamma.degree())
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let zc: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        self.beta.eval(z) * self.gamma.eval(&zc)
    }
}

impl Ord for ExponentPair {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| self.beta.cmp(&other.beta))
            .then_with(|| self.gamma.cmp(&other.gamma))
    }
}

impl PartialOrd for ExponentPair {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for ExponentPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?},{:?})", self.beta, self.gamma)
    }
}

fn prune(c: Complex64) -> Option<Complex64> {
    let re = if c.re.abs() < COEFF_PRUNE { 0.0 } else { c.re };
    let im = if c.im.abs() < COEFF_PRUNE { 0.0 } else { c.im };
    if re == 0.0 && im == 0.0 {
        None
    } else {
        Some(Complex64::new(re, im))
    }
}

/// Polynomial `sum c_{beta,gamma} z^beta z̄^gamma` with complex coefficients.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CPoly {
    n: usize,
    terms: BTreeMap<ExponentPair, Complex64>,
}

impl CPoly {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: BTreeMap::new() }
    }

    pub fn constant(n: usize, c: impl Into<Complex64>) -> Self {
        Self::term(n, ExponentPair::one(n), c)
    }

    pub fn term(n: usize, pair: ExponentPair, c: impl Into<Complex64>) -> Self {
        let mut p = Self::zero(n);
        p.add_term(pair, c.into());
        p
    }

    /// `z_i`
    pub fn z(n: usize, i: usize) -> Self {
        Self::term(n, ExponentPair::new(Monomial::unit(n, i), Monomial::one(n)), 1.0)
    }

    /// `z̄_i`
    pub fn zbar(n: usize, i: usize) -> Self {
        Self::term(n, ExponentPair::new(Monomial::one(n), Monomial::unit(n, i)), 1.0)
    }

    /// `|z_i|^2`
    pub fn abs2(n: usize, i: usize) -> Self {
        Self::term(n, ExponentPair::new(Monomial::unit(n, i), Monomial::unit(n, i)), 1.0)
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (ExponentPair, Complex64)>,
    {
        let mut p = Self::zero(n);
        for (pair, c) in terms {
            if pair.arity() != n {
                return Err(PolyError::ArityMismatch { left: n, right: pair.arity() });
            }
            p.add_term(pair, c);
        }
        Ok(p)
    }

    fn add_term(&mut self, pair: ExponentPair, c: Complex64) {
        let entry = self.terms.entry(pair);
        match entry {
            std::collections::btree_map::Entry::Occupied(mut o) => {
                match prune(*o.get() + c) {
                    Some(v) => *o.get_mut() = v,
                    None => {
                        o.remove();
                    }
                }
            }
            std::collections::btree_map::Entry::Vacant(v) => {
                if let Some(c) = prune(c) {
                    v.insert(c);
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentPair, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, pair: &ExponentPair) -> Complex64 {
        self.terms.get(pair).copied().unwrap_or_default()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `max(|beta|, |gamma|)` over the support; zero for the zero polynomial.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(ExponentPair::degree).max().unwrap_or(0)
    }

    pub fn conjugate(&self) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(k, c)| (k.swapped(), c.conj())).collect(),
        }
    }

    /// First term whose conjugate partner does not match, if any.
    pub fn self_conjugacy_violation(&self) -> Option<&ExponentPair> {
        self.terms.iter().find_map(|(k, c)| {
            let partner = self.terms.get(&k.swapped()).copied().unwrap_or_default();
            (partner != c.conj()).then_some(k)
        })
    }

    pub fn is_self_conjugate(&self) -> bool {
        self.self_conjugacy_violation().is_none()
    }

    /// `(p + p̄) / 2`, exactly self-conjugate.
    pub fn self_conjugate_part(&self) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * 0.5);
            out.add_term(k.swapped(), c.conj() * 0.5);
        }
        out
    }

    /// `(p - p̄) / (2i)`, the imaginary part as a self-conjugate polynomial.
    pub fn imaginary_part(&self) -> Self {
        let mut out = Self::zero(self.n);
        let half_i = Complex64::new(0.0, 0.5);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c / half_i * 0.25);
            out.add_term(k.swapped(), -(c.conj() / half_i) * 0.25);
        }
        out
    }

    pub fn has_real_coeffs(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0)
    }

    pub fn evaluate(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.n, "point has wrong arity");
        let zc: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        self.terms
            .iter()
            .map(|(k, c)| c * k.beta.eval(z) * k.gamma.eval(&zc))
            .sum()
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c * s);
        }
        out
    }

    pub fn try_add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), *c);
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_arity(other)?;
        let mut acc: BTreeMap<ExponentPair, Complex64> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                *acc.entry(ka.times(kb)).or_default() += ca * cb;
            }
        }
        Ok(Self {
            n: self.n,
            terms: acc.into_iter().filter_map(|(k, c)| prune(c).map(|c| (k, c))).collect(),
        })
    }

    pub fn pow(&self, k: u32) -> Self {
        (0..k).fold(Self::constant(self.n, 1.0), |acc, _| &acc * self)
    }

    /// Wirtinger derivative with respect to `z̄_j`.
    pub fn d_zbar(&self, j: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (k, c) in &self.terms {
            let e = k.gamma.exps()[j];
            if e > 0 {
                let mut g = k.gamma.clone();
                g.0[j] -= 1;
                out.add_term(ExponentPair::new(k.beta.clone(), g), c * e as f64);
            }
        }
        out
    }

    fn check_arity(&self, other: &Self) -> Result<(), PolyError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(PolyError::ArityMismatch { left: self.n, right: other.n })
        }
    }
}

impl fmt::Debug for CPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

// Operator forms panic on arity mismatch; use `try_add`/`try_mul` to get a `Result`.
impl Add for &CPoly {
    type Output = CPoly;
    fn add(self, rhs: &CPoly) -> CPoly {
        self.try_add(rhs).expect("polynomial arity mismatch")
    }
}

impl Sub for &CPoly {
    type Output = CPoly;
    fn sub(self, rhs: &CPoly) -> CPoly {
        self.try_add(&-rhs).expect("polynomial arity mismatch")
    }
}

impl Mul for &CPoly {
    type Output = CPoly;
    fn mul(self, rhs: &CPoly) -> CPoly {
        self.try_mul(rhs).expect("polynomial arity mismatch")
    }
}

impl Neg for &CPoly {
    type Output = CPoly;
    fn neg(self) -> CPoly {
        self.scale(-1.0)
    }
}

impl Add for CPoly {
    type Output = CPoly;
    fn add(self, rhs: CPoly) -> CPoly {
        &self + &rhs
    }
}

impl Sub for CPoly {
    type Output = CPoly;
    fn sub(self, rhs: CPoly) -> CPoly {
        &self - &rhs
    }
}

impl Mul for CPoly {
    type Output = CPoly;
    fn mul(self, rhs: CPoly) -> CPoly {
        &self * &rhs
    }
}

/// Degree data of an instance; `d_k = max(2, d_g, d_h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub d_f: usize,
    pub d_g: usize,
    pub d_h: usize,
    pub d_k: usize,
    pub d_min: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Min,
    Max,
}

/// How a reported bound maps to the quantity of interest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueTransform {
    #[default]
    Identity,
    /// The objective is a squared modulus; compare square roots.
    Sqrt,
}

impl ValueTransform {
    pub fn apply(self, v: f64) -> f64 {
        match self {
            Self::Identity => v,
            Self::Sqrt => v.max(0.0).sqrt(),
        }
    }
}

/// `min/max f  s.t.  g_i >= 0, h_j = 0` with self-conjugate data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpopInstance {
    pub name: String,
    pub n: usize,
    pub sense: Sense,
    pub objective: CPoly,
    pub ineqs: Vec<CPoly>,
    pub eqs: Vec<CPoly>,
    #[serde(default)]
    pub transform: ValueTransform,
}

impl CpopInstance {
    /// Validates arity and self-conjugacy of every polynomial.
    pub fn new(
        name: impl Into<String>,
        sense: Sense,
        objective: CPoly,
        ineqs: Vec<CPoly>,
        eqs: Vec<CPoly>,
    ) -> Result<Self, PolyError> {
        let inst = Self {
            name: name.into(),
            n: objective.n(),
            sense,
            objective,
            ineqs,
            eqs,
            transform: ValueTransform::Identity,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_transform(mut self, t: ValueTransform) -> Self {
        self.transform = t;
        self
    }

    pub fn validate(&self) -> Result<(), PolyError> {
        for (what, p) in self.named_polys() {
            if p.n() != self.n {
                return Err(PolyError::ArityMismatch { left: self.n, right: p.n() });
            }
            if let Some(k) = p.self_conjugacy_violation() {
                return Err(PolyError::NotSelfConjugate { what, term: format!("{k:?}") });
            }
        }
        Ok(())
    }

    /// Rejects complex coefficients; required by the real moment hierarchy.
    /// An equality may instead have purely imaginary coefficients (the imaginary part of a
    /// real-coefficient polynomial): its zero set is still invariant under conjugation.
    pub fn require_real_coeffs(&self) -> Result<(), PolyError> {
        let imaginary = |p: &CPoly| !p.is_empty() && p.terms().all(|(_, c)| c.re == 0.0);
        for (what, p) in self.named_polys() {
            if what.starts_with("equality") && imaginary(p) {
                continue;
            }
            if let Some((k, _)) = p.terms().find(|(_, c)| c.im != 0.0) {
                return Err(PolyError::NonRealCoefficient { what, term: format!("{k:?}") });
            }
        }
        Ok(())
    }

    fn named_polys(&self) -> impl Iterator<Item = (String, &CPoly)> {
        std::iter::once(("objective".to_string(), &self.objective))
            .chain(self.ineqs.iter().enumerate().map(|(i, p)| (format!("inequality {i}"), p)))
            .chain(self.eqs.iter().enumerate().map(|(i, p)| (format!("equality {i}"), p)))
    }

    /// Objective of the equivalent minimization problem.
    pub fn min_objective(&self) -> CPoly {
        match self.sense {
            Sense::Min => self.objective.clone(),
            Sense::Max => -&self.objective,
        }
    }

    /// Maps a minimization value back to the stated sense.
    pub fn unnegate(&self, v: f64) -> f64 {
        match self.sense {
            Sense::Min => v,
            Sense::Max => -v,
        }
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let d_f = self.objective.degree();
        let d_g = self.ineqs.iter().map(CPoly::degree).max().unwrap_or(0);
        let d_h = self.eqs.iter().map(CPoly::degree).max().unwrap_or(0);
        DegreeStats {
            d_f,
            d_g,
            d_h,
            d_k: 2.max(d_g).max(d_h),
            d_min: d_f.max(d_g).max(d_h),
        }
    }

    pub fn objective_at(&self, z: &[Complex64]) -> f64 {
        self.objective.evaluate(z).re
    }

    /// Largest constraint violation at `z`: `max(-g_i, |h_j|)`, floored at zero.
    pub fn max_violation(&self, z: &[Complex64]) -> f64 {
        let g = self.ineqs.iter().map(|g| (-g.evaluate(z).re).max(0.0));
        let h = self.eqs.iter().map(|h| h.evaluate(z).norm());
        g.chain(h).fold(0.0, f64::max)
    }
}

/// Real polynomial over `m` variables.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct RPoly {
    m: usize,
    terms: BTreeMap<Monomial, f64>,
}

impl RPoly {
    pub fn zero(m: usize) -> Self {
        Self { m, terms: BTreeMap::new() }
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, f64)>>(m: usize, terms: I) -> Self {
        let mut p = Self::zero(m);
        for (k, c) in terms {
            assert_eq!(k.arity(), m, "monomial arity mismatch");
            p.add_term(k, c);
        }
        p
    }

    fn add_term(&mut self, k: Monomial, c: f64) {
        let v = self.terms.get(&k).copied().unwrap_or(0.0) + c;
        if v.abs() < COEFF_PRUNE {
            self.terms.remove(&k);
        } else {
            self.terms.insert(k, v);
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &f64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, k: &Monomial) -> f64 {
        self.terms.get(k).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(k, c)| c * k.eval_real(x)).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_terms(self.m, self.terms.iter().map(|(k, c)| (k.clone(), c * s)))
    }
}

impl fmt::Debug for RPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.terms.iter()).finish()
    }
}

/// Real polynomial optimization problem over `m` real variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealPop {
    pub name: String,
    pub m: usize,
    pub sense: Sense,
    pub objective: RPoly,
    pub ineqs: Vec<RPoly>,
    pub eqs: Vec<RPoly>,
}

impl RealPop {
    pub fn min_objective(&self) -> RPoly {
        match self.sense {
            Sense::Min => self.objective.clone(),
            Sense::Max => self.objective.scale(-1.0),
        }
    }

    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let g = self.ineqs.iter().map(|g| (-g.evaluate(x)).max(0.0));
        let h = self.eqs.iter().map(|h| h.evaluate(x).abs());
        g.chain(h).fold(0.0, f64::max)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Expands a self-conjugate polynomial under `z_j = x_j + i x_{n+j}`.
pub fn to_real_poly(p: &CPoly) -> Result<RPoly, PolyError> {
    let n = p.n();
    let mut acc: BTreeMap<Monomial, Complex64> = BTreeMap::new();
    let i = Complex64::new(0.0, 1.0);
    for (k, c) in p.terms() {
        // Per variable: (x + iy)^b (x - iy)^g as a list of (x-exp, y-exp, coeff).
        let mut partial: Vec<(Monomial, Complex64)> = vec![(Monomial::one(2 * n), *c)];
        for j in 0..n {
            let b = k.beta.exps()[j] as u32;
            let g = k.gamma.exps()[j] as u32;
            if b == 0 && g == 0 {
                continue;
            }
            let mut factor: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
            for s in 0..=b {
                for t in 0..=g {
                    let coeff = binomial(b, s)
                        * binomial(g, t)
                        * i.powu(s)
                        * (-i).powu(t);
                    let ey = s + t;
                    let ex = b + g - ey;
                    *factor.entry((ex, ey)).or_default() += coeff;
                }
            }
            let mut next = Vec::with_capacity(partial.len() * factor.len());
            for (mono, cc) in &partial {
                for (&(ex, ey), fc) in &factor {
                    let mut e = mono.clone();
                    e.0[j] += ex as u8;
                    e.0[n + j] += ey as u8;
                    next.push((e, cc * fc));
                }
            }
            partial = next;
        }
        for (mono, cc) in partial {
            *acc.entry(mono).or_default() += cc;
        }
    }
    let scale = p.max_abs_coeff().max(1.0);
    let mut out = RPoly::zero(2 * n);
    for (k, c) in acc {
        if c.im.abs() > IMAG_RESIDUE * scale {
            return Err(PolyError::ImaginaryResidue(c.im.abs()));
        }
        out.add_term(k, c.re);
    }
    Ok(out)
}

/// Real-variable form of an instance (`2n` real variables).
pub fn to_real_pop(inst: &CpopInstance) -> Result<RealPop, PolyError> {
    inst.validate()?;
    Ok(RealPop {
        name: inst.name.clone(),
        m: 2 * inst.n,
        sense: inst.sense,
        objective: to_real_poly(&inst.objective)?,
        ineqs: inst.ineqs.iter().map(to_real_poly).collect::<Result<_, _>>()?,
        eqs: inst.eqs.iter().map(to_real_poly).collect::<Result<_, _>>()?,
    })
}
