//! Benchmark instance families and fixed example instances.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::moment::enumerate_basis;
use crate::poly::{CPoly, CpopInstance, ExponentPair, Monomial, RPoly, RealPop, Sense, ValueTransform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RandomQuadratic,
    RandomQuartic,
    Smale,
    Mordell,
    PolyphaseEnergy,
    PolyphasePeak,
    /// Three unit-modulus variables with a linear term; `n` is ignored.
    Unimodular,
    /// Two complex variables from a four-variable real problem; `n` is ignored.
    Reformulated,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::RandomQuadratic,
        Family::RandomQuartic,
        Family::Smale,
        Family::Mordell,
        Family::PolyphaseEnergy,
        Family::PolyphasePeak,
        Family::Unimodular,
        Family::Reformulated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::RandomQuadratic => "random-quadratic",
            Family::RandomQuartic => "random-quartic",
            Family::Smale => "smale",
            Family::Mordell => "mordell",
            Family::PolyphaseEnergy => "polyphase-energy",
            Family::PolyphasePeak => "polyphase-peak",
            Family::Unimodular => "unimodular",
            Family::Reformulated => "reformulated",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = GenError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| GenError::UnknownFamily(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GenError {
    #[error("unknown family {0:?}")]
    UnknownFamily(String),
    #[error("{family} requires {range}, got n = {n}")]
    SizeOutOfRange { family: Family, range: &'static str, n: usize },
}

/// Builds an instance of `family`; `seed` is used by the random families only.
pub fn generate(family: Family, n: usize, seed: u64) -> Result<CpopInstance, GenError> {
    let need = |ok: bool, range| if ok { Ok(()) } else { Err(GenError::SizeOutOfRange { family, range, n }) };
    match family {
        Family::RandomQuadratic => need(n >= 1, "n >= 1").map(|_| random_quadratic(n, seed)),
        Family::RandomQuartic => need(n >= 1, "n >= 1").map(|_| random_quartic(n, seed)),
        Family::Smale => need(n >= 2, "n >= 2").map(|_| smale(n)),
        Family::Mordell => need((3..=5).contains(&n), "3 <= n <= 5").map(|_| mordell(n)),
        Family::PolyphaseEnergy => need(n >= 4, "n >= 4").map(|_| polyphase_energy(n)),
        Family::PolyphasePeak => need(n >= 4, "n >= 4").map(|_| polyphase_peak(n)),
        Family::Unimodular => Ok(unimodular_example()),
        Family::Reformulated => Ok(reformulated_complex()),
    }
}

fn sphere(n: usize, vars: usize, radius2: f64) -> CPoly {
    let mut h = CPoly::constant(n, -radius2);
    for i in 0..vars {
        h = &h + &CPoly::abs2(n, i);
    }
    h
}

fn hermitian_form(n: usize, d: usize, seed: u64) -> CPoly {
    let basis = enumerate_basis(n, d);
    let s = basis.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = vec![0.0; s * s];
    for a in 0..s {
        for b in a..s {
            let v: f64 = rng.random_range(-1.0..=1.0);
            q[a * s + b] = v;
            q[b * s + a] = v;
        }
    }
    // [z]_d^* Q [z]_d = sum_ab Q_ab conj(z^a) z^b
    let mono = basis.entries();
    let terms = (0..s).flat_map(|a| {
        let q = &q;
        (0..s).map(move |b| (ExponentPair::new(mono[b].clone(), mono[a].clone()), Complex64::from(q[a * s + b])))
    });
    CPoly::from_terms(n, terms.collect::<Vec<_>>()).expect("basis arity matches")
}

/// `[z]_1^* Q [z]_1` on the unit sphere, `Q` symmetric with entries uniform on `[-1, 1]`.
pub fn random_quadratic(n: usize, seed: u64) -> CpopInstance {
    let f = hermitian_form(n, 1, seed);
    CpopInstance::new(format!("random-quadratic-n{n}-s{seed}"), Sense::Min, f, vec![], vec![sphere(n, n, 1.0)])
        .expect("generated data is self-conjugate")
}

/// `[z]_2^* Q [z]_2` on the unit sphere.
pub fn random_quartic(n: usize, seed: u64) -> CpopInstance {
    let f = hermitian_form(n, 2, seed);
    CpopInstance::new(format!("random-quartic-n{n}-s{seed}"), Sense::Min, f, vec![], vec![sphere(n, n, 1.0)])
        .expect("generated data is self-conjugate")
}

/// Elementary symmetric polynomials `e_0..=e_k` of the first `k` variables.
fn elementary_symmetric(nv: usize, k: usize) -> Vec<CPoly> {
    let mut e = vec![CPoly::constant(nv, 1.0)];
    e.extend((0..k).map(|_| CPoly::zero(nv)));
    for i in 0..k {
        let zi = CPoly::z(nv, i);
        for j in (1..=i + 1).rev() {
            e[j] = &e[j] + &(&e[j - 1] * &zi);
        }
    }
    e
}

/// Smale mean value problem: maximize `|u|^2` subject to `|H(z_i)|^2 >= |u|^2`,
/// where `p(z) = (n+1) prod (z - z_i)` has `p(0) = 1`, `H(y) = (1/y) int_0^y p` and the
/// critical points lie on the sphere `sum |z_i|^2 = n (1/(n+1))^(2/n)`.
/// Variables are `z_1..z_n, u`; the reported value is the square root.
///
/// The constant coefficient of `H` is written as the literal `1`; the product equality
/// makes it agree with `(n+1) (-1)^n z_1...z_n` on the feasible set.
pub fn smale(n: usize) -> CpopInstance {
    let nv = n + 1;
    let u = n;
    let e = elementary_symmetric(nv, n);
    let sign = |k: usize| if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
    let mut ineqs = Vec::with_capacity(n);
    for i in 0..n {
        let zi = CPoly::z(nv, i);
        let mut h = CPoly::constant(nv, 1.0);
        for k in 1..=n {
            let c = (n + 1) as f64 * sign(k) / (k + 1) as f64;
            h = &h + &(&e[n - k] * &zi.pow(k as u32)).scale(c);
        }
        ineqs.push(&(&h * &h.conjugate()) - &CPoly::abs2(nv, u));
    }
    let target = if n % 2 == 0 { 1.0 } else { -1.0 } / (n + 1) as f64;
    let prod = &e[n] - &CPoly::constant(nv, target);
    let radius2 = n as f64 * (1.0 / (n + 1) as f64).powf(2.0 / n as f64);
    let eqs = vec![prod.self_conjugate_part(), prod.imaginary_part(), sphere(nv, n, radius2)];
    CpopInstance::new(format!("smale-n{n}"), Sense::Max, CPoly::abs2(nv, u), ineqs, eqs)
        .expect("generated data is self-conjugate")
        .with_transform(ValueTransform::Sqrt)
}

/// Feasible point of [`smale`] attaining `n/(n+1)`: the critical points of `z^(n+1) + z`.
pub fn smale_extremal_point(n: usize) -> Vec<Complex64> {
    let r = (1.0 / (n + 1) as f64).powf(1.0 / n as f64);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(r, std::f64::consts::PI * (2 * k + 1) as f64 / n as f64))
        .collect();
    z.push(Complex64::from(n as f64 / (n + 1) as f64));
    z
}

/// Mordell's inequality problem with `z_n = -(z_1 + ... + z_{n-1})` eliminated:
/// maximize `prod_{i<j} |z_i - z_j|^2 prod_i |z_i + s|^2` on `sum |z_i|^2 + |s|^2 = n`.
pub fn mordell(n: usize) -> CpopInstance {
    let m = n - 1;
    let s = (0..m).fold(CPoly::zero(m), |acc, i| &acc + &CPoly::z(m, i));
    let abs2 = |p: &CPoly| p * &p.conjugate();
    let mut f = CPoly::constant(m, 1.0);
    for i in 0..m {
        for j in i + 1..m {
            f = &f * &abs2(&(&CPoly::z(m, i) - &CPoly::z(m, j)));
        }
        f = &f * &abs2(&(&CPoly::z(m, i) + &s));
    }
    let h = &sphere(m, m, n as f64) + &abs2(&s);
    CpopInstance::new(format!("mordell-n{n}"), Sense::Max, f, vec![], vec![h]).expect("generated data is self-conjugate")
}

/// Aperiodic autocorrelation `A(j) = sum_i z_i z̄_{i+j}` over the first `n` of `nv` variables.
fn autocorrelation(nv: usize, n: usize, j: usize) -> CPoly {
    (0..n - j).fold(CPoly::zero(nv), |acc, i| &acc + &(&CPoly::z(nv, i) * &CPoly::zbar(nv, i + j)))
}

fn unit_moduli(nv: usize, n: usize) -> Vec<CPoly> {
    (0..n).map(|i| &CPoly::abs2(nv, i) - &CPoly::constant(nv, 1.0)).collect()
}

/// Sidelobe energy `sum_{j=1}^{n-2} |A(j)|^2` of a unimodular code.
pub fn polyphase_energy(n: usize) -> CpopInstance {
    let f = (1..=n - 2).fold(CPoly::zero(n), |acc, j| {
        let a = autocorrelation(n, n, j);
        &acc + &(&a * &a.conjugate())
    });
    CpopInstance::new(format!("polyphase-energy-n{n}"), Sense::Min, f, vec![], unit_moduli(n, n))
        .expect("generated data is self-conjugate")
}

/// Peak sidelobe: minimize `|u|^2` subject to `|u|^2 >= |A(j)|^2`, `j = 1..=n-2`.
/// Variables are `z_1..z_n, u`; the reported value is the square root.
pub fn polyphase_peak(n: usize) -> CpopInstance {
    let nv = n + 1;
    let u = CPoly::abs2(nv, n);
    let ineqs = (1..=n - 2)
        .map(|j| {
            let a = autocorrelation(nv, n, j);
            &u - &(&a * &a.conjugate())
        })
        .collect();
    CpopInstance::new(format!("polyphase-peak-n{n}"), Sense::Min, u.clone(), ineqs, unit_moduli(nv, n))
        .expect("generated data is self-conjugate")
        .with_transform(ValueTransform::Sqrt)
}

fn pair(b: &[u8], g: &[u8]) -> ExponentPair {
    ExponentPair::new(Monomial::from_slice(b), Monomial::from_slice(g))
}

/// Three unit-modulus variables; the order-1 bound is `-3.75`, attained by a conjugate pair.
pub fn unimodular_example() -> CpopInstance {
    let c = Complex64::from;
    let mut terms = vec![
        (pair(&[1, 0, 0], &[0, 1, 0]), c(0.5)),
        (pair(&[1, 0, 0], &[0, 0, 1]), c(0.5)),
        (pair(&[0, 1, 0], &[1, 0, 0]), c(0.5)),
        (pair(&[0, 1, 0], &[0, 1, 0]), c(0.25)),
        (pair(&[0, 1, 0], &[0, 0, 1]), c(0.25)),
        (pair(&[0, 0, 1], &[1, 0, 0]), c(0.5)),
        (pair(&[0, 0, 1], &[0, 1, 0]), c(0.25)),
    ];
    for i in 0..3 {
        let mut e = [0u8; 3];
        e[i] = 1;
        terms.push((pair(&e, &[0, 0, 0]), c(1.0)));
        terms.push((pair(&[0, 0, 0], &e), c(1.0)));
    }
    let f = CPoly::from_terms(3, terms).expect("arity 3");
    CpopInstance::new("unimodular", Sense::Min, f, vec![], unit_moduli(3, 3)).expect("self-conjugate")
}

/// Complex form of [`reformulated_real`] under `z_1 = x_1 + i x_3`, `z_2 = x_2 + i x_4`.
pub fn reformulated_complex() -> CpopInstance {
    let c = Complex64::from;
    let f = CPoly::from_terms(
        2,
        [
            (pair(&[0, 0], &[0, 0]), c(3.0)),
            (pair(&[1, 0], &[1, 0]), c(-1.0)),
            (pair(&[1, 0], &[0, 2]), c(0.5)),
            (pair(&[0, 2], &[1, 0]), c(0.5)),
        ],
    )
    .expect("arity 2");
    let g = &CPoly::z(2, 1) + &CPoly::zbar(2, 1);
    let h1 = CPoly::from_terms(
        2,
        [
            (pair(&[1, 0], &[1, 0]), c(1.0)),
            (pair(&[2, 0], &[0, 0]), c(-0.25)),
            (pair(&[0, 0], &[2, 0]), c(-0.25)),
            (pair(&[0, 0], &[0, 0]), c(-1.0)),
        ],
    )
    .expect("arity 2");
    let h2 = CPoly::from_terms(
        2,
        [
            (pair(&[0, 2], &[0, 0]), c(1.0)),
            (pair(&[0, 0], &[0, 2]), c(1.0)),
            (pair(&[0, 1], &[0, 1]), c(-2.0)),
        ],
    )
    .expect("arity 2");
    let h3 = sphere(2, 2, 3.0);
    CpopInstance::new("reformulated", Sense::Min, f, vec![g], vec![h1, h2, h3]).expect("self-conjugate")
}

/// `min 3 - x1^2 - x3^2 + x1 x2^2 + 2 x2 x3 x4 - x1 x4^2` subject to `x2 >= 0`,
/// `x1^2 + 3 x3^2 = 2`, `x4 = 0`, `|x|^2 = 3`.
pub fn reformulated_real() -> RealPop {
    let p = |terms: &[(&[u8], f64)]| RPoly::from_terms(4, terms.iter().map(|(e, c)| (Monomial::from_slice(e), *c)));
    RealPop {
        name: "reformulated-real".into(),
        m: 4,
        sense: Sense::Min,
        objective: p(&[
            (&[0, 0, 0, 0], 3.0),
            (&[2, 0, 0, 0], -1.0),
            (&[0, 0, 2, 0], -1.0),
            (&[1, 2, 0, 0], 1.0),
            (&[0, 1, 1, 1], 2.0),
            (&[1, 0, 0, 2], -1.0),
        ]),
        ineqs: vec![p(&[(&[0, 1, 0, 0], 1.0)])],
        eqs: vec![
            p(&[(&[2, 0, 0, 0], 1.0), (&[0, 0, 2, 0], 3.0), (&[0, 0, 0, 0], -2.0)]),
            p(&[(&[0, 0, 0, 1], 1.0)]),
            p(&[
                (&[2, 0, 0, 0], 1.0),
                (&[0, 2, 0, 0], 1.0),
                (&[0, 0, 2, 0], 1.0),
                (&[0, 0, 0, 2], 1.0),
                (&[0, 0, 0, 0], -3.0),
            ]),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::to_real_pop;

    #[test]
    fn random_families_are_reproducible_and_real() {
        for f in [random_quadratic(3, 7), random_quartic(2, 7)] {
            assert!(f.objective.is_self_conjugate() && f.objective.has_real_coeffs());
        }
        assert_eq!(random_quartic(3, 11), random_quartic(3, 11));
        assert_ne!(random_quartic(3, 11), random_quartic(3, 12));
    }

    #[test]
    fn smale_extremal_point_is_feasible() {
        for n in 2..=5 {
            let inst = smale(n);
            let z = smale_extremal_point(n);
            assert!(inst.max_violation(&z) < 1e-10, "n={n}: {}", inst.max_violation(&z));
            let v = inst.transform.apply(inst.objective_at(&z));
            assert!((v - n as f64 / (n + 1) as f64).abs() < 1e-12);
            // |H(z_i)| = n/(n+1) makes every modulus constraint active.
            for g in &inst.ineqs {
                assert!(g.evaluate(&z).re.abs() < 1e-10);
            }
        }
    }

    #[test]
    fn mordell_degree() {
        assert_eq!(mordell(3).degree_stats().d_f, 3);
        assert_eq!(mordell(4).degree_stats().d_f, 6);
    }

    #[test]
    fn polyphase_energy_degree_and_barker_value() {
        let inst = polyphase_energy(4);
        assert_eq!(inst.degree_stats().d_f, 2);
        // Barker code of length 4 has sidelobes (-1, 0, 1) up to sign; j = 1, 2 only.
        let z: Vec<Complex64> = [1.0, 1.0, -1.0, 1.0].iter().map(|&v| Complex64::from(v)).collect();
        assert!((inst.objective_at(&z) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unimodular_example_value_at_printed_point() {
        let inst = unimodular_example();
        let a = Complex64::new(-0.250013, 0.968242);
        let b = Complex64::new(-0.875003, -0.484117);
        assert!((inst.objective_at(&[a, b, b]) + 3.75).abs() < 1e-4);
    }

    #[test]
    fn reformulated_pair_agree() {
        let c = to_real_pop(&reformulated_complex()).unwrap();
        let r = reformulated_real();
        assert_eq!(c.objective, r.objective);
        // Constraints agree up to positive scaling, except x4 = 0 which becomes -4 x4^2 = 0.
        let x = [1.1, 0.4, -0.3, 0.7];
        assert!((c.ineqs[0].evaluate(&x) - 2.0 * r.ineqs[0].evaluate(&x)).abs() < 1e-12);
        assert!((c.eqs[0].evaluate(&x) - 0.5 * r.eqs[0].evaluate(&x)).abs() < 1e-12);
        assert!((c.eqs[1].evaluate(&x) + 4.0 * r.eqs[1].evaluate(&x).powi(2)).abs() < 1e-12);
        assert!((c.eqs[2].evaluate(&x) - r.eqs[2].evaluate(&x)).abs() < 1e-12);
    }
}
