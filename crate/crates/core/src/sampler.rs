//! Multistart sampling for feasible points on spheres and tori.
//!
//! The best sampled value is an upper bound on the minimum (a lower bound on the maximum).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::poly::{CPoly, CpopInstance, ExponentPair, Monomial, Sense};

/// Feasible set recognized by the sampler.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    /// `sum_i |z_i|^2 = radius2` over all variables.
    Sphere { radius2: f64 },
    /// `|z_i| = 1` for every variable.
    Torus,
    /// `|z_i| = 1` for the first `n - 1` variables; the last variable `u` enters as
    /// `min |u|^2` subject to `|u|^2 >= q_j(z)`.
    TorusEpigraph { bounds: Vec<CPoly> },
}

fn abs2_term(n: usize, i: usize) -> ExponentPair {
    ExponentPair::new(Monomial::unit(n, i), Monomial::unit(n, i))
}

/// `p == sum_{i in vars} |z_i|^2 - c`; returns `c`.
fn sphere_radius(p: &CPoly, vars: usize) -> Option<f64> {
    let n = p.n();
    let c = -p.coeff(&ExponentPair::one(n));
    let squares = (0..vars).all(|i| p.coeff(&abs2_term(n, i)) == Complex64::from(1.0));
    let count = vars + usize::from(c.re != 0.0);
    (squares && p.len() == count && c.im == 0.0 && c.re > 0.0).then_some(c.re)
}

fn uses_var(p: &CPoly, i: usize) -> bool {
    p.terms().any(|(k, _)| k.beta.exps()[i] > 0 || k.gamma.exps()[i] > 0)
}

pub fn detect_geometry(inst: &CpopInstance) -> Option<Geometry> {
    let n = inst.n;
    if inst.ineqs.is_empty() && inst.eqs.len() == 1 {
        if let Some(radius2) = sphere_radius(&inst.eqs[0], n) {
            return Some(Geometry::Sphere { radius2 });
        }
    }
    let unit = |p: &CPoly, i: usize| {
        let q = p - &CPoly::abs2(n, i);
        q.len() == 1 && q.coeff(&ExponentPair::one(n)) == Complex64::from(-1.0)
    };
    let torus_on = |k: usize| inst.eqs.len() == k && (0..k).all(|i| inst.eqs.iter().any(|h| unit(h, i)));
    if inst.ineqs.is_empty() && torus_on(n) {
        return Some(Geometry::Torus);
    }
    let u = n - 1;
    let u2 = CPoly::abs2(n, u);
    if n >= 2 && inst.sense == Sense::Min && inst.objective == u2 && torus_on(u) {
        let bounds: Option<Vec<CPoly>> = inst
            .ineqs
            .iter()
            .map(|g| {
                let q = &u2 - g;
                (!uses_var(&q, u)).then_some(q)
            })
            .collect();
        return bounds.map(|bounds| Geometry::TorusEpigraph { bounds });
    }
    None
}

struct Problem<'a> {
    inst: &'a CpopInstance,
    geometry: Geometry,
    f: CPoly,
}

impl Problem<'_> {
    /// Minimization-sense value at a point of the set.
    fn value(&self, z: &[Complex64]) -> f64 {
        match &self.geometry {
            Geometry::TorusEpigraph { bounds } => {
                let mut w = z.to_vec();
                w.push(Complex64::from(0.0));
                bounds.iter().map(|q| q.evaluate(&w).re).fold(0.0, f64::max)
            }
            _ => self.f.evaluate(z).re,
        }
    }

    /// Number of free coordinates.
    fn dim(&self) -> usize {
        match self.geometry {
            Geometry::TorusEpigraph { .. } => self.inst.n - 1,
            _ => self.inst.n,
        }
    }

    fn retract(&self, z: &mut [Complex64]) {
        match self.geometry {
            Geometry::Sphere { radius2 } => {
                let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                let s = radius2.sqrt() / norm.max(f64::MIN_POSITIVE);
                z.iter_mut().for_each(|v| *v *= s);
            }
            _ => z.iter_mut().for_each(|v| *v = Complex64::from_polar(1.0, v.arg())),
        }
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let mut z: Vec<Complex64> = (0..self.dim())
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        self.retract(&mut z);
        z
    }

    /// Completes a point of the free coordinates to a point of the instance.
    fn full_point(&self, z: &[Complex64]) -> Vec<Complex64> {
        match self.geometry {
            Geometry::TorusEpigraph { .. } => {
                let mut w = z.to_vec();
                w.push(Complex64::from(self.value(z).max(0.0).sqrt()));
                w
            }
            _ => z.to_vec(),
        }
    }

    /// Coordinate-wise phase sweeps followed by shrinking random perturbations.
    fn refine(&self, z: &mut Vec<Complex64>, rng: &mut ChaCha8Rng) -> f64 {
        let mut best = self.value(z);
        let mut step = std::f64::consts::PI / 8.0;
        while step > 1e-9 {
            let mut improved = false;
            for i in 0..z.len() {
                for dir in [1.0, -1.0] {
                    let mut w = z.clone();
                    w[i] *= Complex64::from_polar(1.0, dir * step);
                    let v = self.value(&w);
                    if v < best {
                        best = v;
                        *z = w;
                        improved = true;
                    }
                }
            }
            if matches!(self.geometry, Geometry::Sphere { .. }) {
                let scale = step * z.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-3);
                for _ in 0..2 * z.len() {
                    let mut w: Vec<Complex64> = z
                        .iter()
                        .map(|v| v + Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * scale)
                        .collect();
                    self.retract(&mut w);
                    let v = self.value(&w);
                    if v < best {
                        best = v;
                        *z = w;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    }
}

/// Number of best samples that are refined locally.
const REFINED: usize = 8;

/// Best feasible value found from `samples` random points, in the sense of the instance,
/// together with the point; `None` when the constraint set is not recognized.
pub fn local_upper_bound(inst: &CpopInstance, samples: usize, seed: u64) -> Option<(f64, Vec<Complex64>)> {
    let geometry = detect_geometry(inst)?;
    let prob = Problem { inst, geometry, f: inst.min_objective() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<(f64, Vec<Complex64>)> = (0..samples.max(1))
        .map(|_| {
            let z = prob.random_point(&mut rng);
            (prob.value(&z), z)
        })
        .collect();
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    pool.truncate(REFINED);
    let (best, z) = pool
        .into_iter()
        .map(|(_, mut z)| (prob.refine(&mut z, &mut rng), z))
        .min_by(|a, b| a.0.total_cmp(&b.0))?;
    let point = prob.full_point(&z);
    Some((inst.unnegate(best), point))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{generate, mordell, polyphase_energy, polyphase_peak, Family};

    #[test]
    fn geometry_detection() {
        assert!(matches!(detect_geometry(&generate(Family::RandomQuadratic, 3, 1).unwrap()), Some(Geometry::Sphere { .. })));
        assert_eq!(detect_geometry(&polyphase_energy(4)), Some(Geometry::Torus));
        assert!(matches!(detect_geometry(&polyphase_peak(5)), Some(Geometry::TorusEpigraph { .. })));
        assert_eq!(detect_geometry(&mordell(3)), None);
        assert!(local_upper_bound(&mordell(3), 10, 0).is_none());
    }

    #[test]
    fn energy_n4_reaches_half() {
        let inst = polyphase_energy(4);
        let (v, z) = local_upper_bound(&inst, 10_000, 1).unwrap();
        assert!(v <= 0.5 + 1e-3, "{v}");
        assert!(inst.max_violation(&z) < 1e-12);
        assert!((inst.objective_at(&z) - v).abs() < 1e-12);
    }

    /// `min x^T A x + 2 b^T x + c` on `|x| = 1` via the secular equation in the eigenbasis of `A`.
    fn trust_region_min(a: &faer::Mat<f64>, b: &[f64], c: f64) -> f64 {
        let (lam, q) = crate::linalg::sym_eigen(a).unwrap();
        let n = b.len();
        let bt: Vec<f64> = (0..n).map(|k| (0..n).map(|i| q[(i, k)] * b[i]).sum()).collect();
        let norm2 = |mu: f64| bt.iter().zip(&lam).map(|(g, l)| (g / (l - mu)).powi(2)).sum::<f64>();
        let (mut lo, mut hi) = (lam[0] - 1e3, lam[0] - 1e-14);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if norm2(mid) > 1.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mu = 0.5 * (lo + hi);
        let x: Vec<f64> = bt.iter().zip(&lam).map(|(g, l)| -g / (l - mu)).collect();
        x.iter().zip(&lam).map(|(xi, l)| l * xi * xi).sum::<f64>() + 2.0 * x.iter().zip(&bt).map(|(xi, g)| xi * g).sum::<f64>() + c
    }

    #[test]
    fn sphere_quadratic_matches_secular_equation() {
        for seed in 0..3 {
            let inst = generate(Family::RandomQuadratic, 2, seed).unwrap();
            // f = q00 + 2 Re(q0i z_i) + sum q_ij z_i z̄_j with real data; over z = x + iy the
            // minimum is attained with y = 0 or by a real rotation, so the real problem in
            // (x, y) with block-diagonal A and b = (q0, 0) has the same value.
            let coeff = |b: &[u8], g: &[u8]| inst.objective.coeff(&ExponentPair::new(Monomial::from_slice(b), Monomial::from_slice(g))).re;
            let q = [[coeff(&[0, 0], &[0, 0]), coeff(&[1, 0], &[0, 0]), coeff(&[0, 1], &[0, 0])], [0.0, coeff(&[1, 0], &[1, 0]), coeff(&[1, 0], &[0, 1])], [0.0, coeff(&[0, 1], &[1, 0]), coeff(&[0, 1], &[0, 1])]];
            let a = faer::Mat::from_fn(4, 4, |i, j| if i / 2 == j / 2 { q[1 + i % 2][1 + j % 2] } else { 0.0 });
            let b = [q[0][1], q[0][2], 0.0, 0.0];
            let want = trust_region_min(&a, &b, q[0][0]);
            let (got, _) = local_upper_bound(&inst, 2000, seed).unwrap();
            assert!((got - want).abs() < 1e-4, "seed {seed}: {got} vs {want}");
        }
    }
}
