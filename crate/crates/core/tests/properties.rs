//! Property tests for the invariants of polynomials, moments, relaxations, the solver,
//! extraction and the problem/report formats.

use faer::Mat;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cpop_core::extract::{self, classify_shift_pair, hausdorff, ShiftCase};
use cpop_core::generators::{generate, random_quadratic, random_quartic, Family};
use cpop_core::io::{self, ProblemFile};
use cpop_core::linalg::herm_eigenvalues;
use cpop_core::moment::{enumerate_basis, instantiate, localizing_matrix_symbolic, moment_matrix_symbolic, moments_of_measure};
use cpop_core::poly::to_real_poly;
use cpop_core::relax::{binomial, build_relaxation, solution_from_moments};
use cpop_core::report::{run, verify, RunOptions, VERIFY_TOL};
use cpop_core::sampler::local_upper_bound;
use cpop_core::sdp::{certify_feasibility, solve, SdpOptions, SolverStatus};
use cpop_core::{Atom, AtomicMeasure, CPoly, CpopInstance, ExponentPair, Hierarchy, Monomial, Sense};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn term_strategy(n: usize, d: u8) -> impl Strategy<Value = (Vec<u8>, Vec<u8>, f64, f64)> {
    (prop::collection::vec(0..=d, n), prop::collection::vec(0..=d, n), -2.0..2.0f64, -2.0..2.0f64)
}

fn poly_strategy(n: usize) -> impl Strategy<Value = CPoly> {
    prop::collection::vec(term_strategy(n, 2), 0..8).prop_map(move |terms| {
        CPoly::from_terms(
            n,
            terms
                .into_iter()
                .map(|(b, g, re, im)| (ExponentPair::new(Monomial::from_slice(&b), Monomial::from_slice(&g)), c(re, im))),
        )
        .unwrap()
    })
}

fn point_strategy(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.5..1.5f64, -1.5..1.5f64).prop_map(|(a, b)| c(a, b)), n)
}

/// Sum of `|c| |z|^deg` over the terms: the natural size of an evaluation.
fn eval_scale(p: &CPoly, z: &[Complex64]) -> f64 {
    let r = z.iter().map(|v| v.norm()).fold(1.0, f64::max);
    1.0 + p.terms().map(|(k, c)| c.norm() * r.powi(k.total_degree() as i32)).sum::<f64>()
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize, k: usize, on_sphere: bool) -> AtomicMeasure {
    let mut w: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    let atoms = w
        .into_iter()
        .map(|weight| {
            let mut z: Vec<Complex64> = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
            if on_sphere {
                let norm = z.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                z.iter_mut().for_each(|v| *v /= norm);
            }
            Atom { weight, point: z }
        })
        .collect();
    AtomicMeasure { atoms }
}

fn sphere(n: usize) -> CPoly {
    (0..n).fold(CPoly::constant(n, -1.0), |acc, i| &acc + &CPoly::abs2(n, i))
}

fn sphere_problem(n: usize) -> CpopInstance {
    CpopInstance::new("sphere", Sense::Min, CPoly::zero(n), vec![], vec![sphere(n)]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conjugation_is_an_involution(p in poly_strategy(2)) {
        prop_assert_eq!(p.conjugate().conjugate(), p);
    }

    #[test]
    fn self_conjugate_values_are_real(p in poly_strategy(2), z in point_strategy(2)) {
        let q = &p + &p.conjugate();
        prop_assert!(q.is_self_conjugate());
        let v = q.evaluate(&z);
        prop_assert!(v.im.abs() <= 1e-12 * eval_scale(&q, &z), "{v}");
    }

    #[test]
    fn realification_preserves_values(p in poly_strategy(2), z in point_strategy(2)) {
        let q = &p + &p.conjugate();
        let rp = to_real_poly(&q).unwrap();
        let x: Vec<f64> = z.iter().map(|v| v.re).chain(z.iter().map(|v| v.im)).collect();
        let want = q.evaluate(&z).re;
        prop_assert!((rp.evaluate(&x) - want).abs() <= 1e-10 * eval_scale(&q, &z));
    }

    #[test]
    fn explicit_zeros_do_not_change_degrees(p in poly_strategy(2), extra in prop::collection::vec(term_strategy(2, 4), 1..4)) {
        let q = &p + &p.conjugate();
        let padded = CPoly::from_terms(
            2,
            q.terms()
                .map(|(k, c)| (k.clone(), *c))
                .chain(extra.into_iter().map(|(b, g, _, _)| (ExponentPair::new(Monomial::from_slice(&b), Monomial::from_slice(&g)), c(0.0, 0.0)))),
        )
        .unwrap();
        prop_assert_eq!(&padded, &q);
        let a = CpopInstance::new("a", Sense::Min, q.clone(), vec![], vec![]).unwrap();
        let b = CpopInstance::new("b", Sense::Min, padded, vec![], vec![]).unwrap();
        prop_assert_eq!(a.degree_stats(), b.degree_stats());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn measure_moment_matrices_are_psd_with_expected_rank(seed in any::<u64>(), n in 1usize..=2, k in 1usize..=4, r in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, n, k, false);
        let y = moments_of_measure(&mu, r);
        let basis = enumerate_basis(n, r);
        let m = instantiate(&moment_matrix_symbolic(&basis), &y).unwrap();
        let eig = herm_eigenvalues(&m);
        prop_assert!(eig.iter().all(|&e| e >= -1e-10), "{eig:?}");
        let (rank, _) = extract::numerical_rank(&m, 1e-9);
        prop_assert_eq!(rank, k.min(basis.len()));
    }

    #[test]
    fn localizing_matrices_match_direct_sums(seed in any::<u64>(), k in 1usize..=3) {
        let n = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, n, k, false);
        let ball = &CPoly::constant(n, 4.0) - &(&sphere(n) + &CPoly::constant(n, 1.0));
        let g = &ball + &(&CPoly::z(n, 0) + &CPoly::zbar(n, 0)).scale(rng.random_range(-0.5..0.5));
        let basis = enumerate_basis(n, 1);
        let y = moments_of_measure(&mu, 1 + g.degree());
        let got = instantiate(&localizing_matrix_symbolic(&g, &basis), &y).unwrap();
        let v = basis.entries();
        let want = Mat::from_fn(v.len(), v.len(), |i, j| {
            mu.atoms
                .iter()
                .map(|a| a.weight * g.evaluate(&a.point) * v[i].eval(&a.point) * v[j].eval(&a.point).conj())
                .sum::<Complex64>()
        });
        let err = (0..v.len()).flat_map(|i| (0..v.len()).map(move |j| (i, j))).map(|(i, j)| (got[(i, j)] - want[(i, j)]).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-10, "{err}");
        // Atoms in the disc of radius 2 make g positive up to the linear perturbation.
        if mu.atoms.iter().all(|a| g.evaluate(&a.point).re >= 0.0) {
            prop_assert!(herm_eigenvalues(&got).iter().all(|&e| e >= -1e-10));
        }
    }

    #[test]
    fn round_trip_extraction_on_the_sphere(seed in any::<u64>(), n in 2usize..=3, k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, n, k, true);
        let y = moments_of_measure(&mu, 3);
        let ext = extract::analyze(&sphere_problem(n), &y, 3, 0.0);
        let got = ext.measure.expect("atoms recovered");
        prop_assert_eq!(got.atoms.len(), k);
        let a: Vec<Vec<Complex64>> = got.atoms.iter().map(|a| a.point.clone()).collect();
        let b: Vec<Vec<Complex64>> = mu.atoms.iter().map(|a| a.point.clone()).collect();
        prop_assert!(hausdorff(&a, &b) <= 1e-6);
        for atom in &got.atoms {
            let nearest = mu.atoms.iter().min_by(|p, q| {
                hausdorff(&[atom.point.clone()], &[p.point.clone()]).total_cmp(&hausdorff(&[atom.point.clone()], &[q.point.clone()]))
            }).unwrap();
            prop_assert!((atom.weight - nearest.weight).abs() <= 1e-6);
        }
        prop_assert!((got.total_weight() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn measure_moments_are_hyponormal(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, 2, k, false);
        let y = moments_of_measure(&mu, 3);
        prop_assert!(extract::check_hyponormality(&y, 2, 3, 2).unwrap().iter().all(|&b| b));
    }

    #[test]
    fn symmetrization_is_idempotent_and_preserves_real_objectives(seed in any::<u64>(), p in poly_strategy(2)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = moments_of_measure(&random_measure(&mut rng, 2, 3, false), 4);
        let s = extract::symmetrize_moments(&y);
        prop_assert_eq!(extract::symmetrize_moments(&s).max_diff(&s).0, 0.0);
        let real_part = CPoly::from_terms(2, p.terms().map(|(k, c)| (k.clone(), Complex64::from(c.re)))).unwrap();
        let f = &real_part + &real_part.conjugate();
        let (a, b) = (y.riesz(&f).unwrap(), s.riesz(&f).unwrap());
        prop_assert!((a - b).norm() <= 1e-9);
    }

    #[test]
    fn exact_shift_forms_are_classified(t1 in -3.0..3.0f64, t2 in -3.0..3.0f64, rot in -3.0..3.0f64, s in 0.5..2.0f64) {
        // Rotation-scaling family: sum T^T T = (sum a^2 + b^2) I.
        let rs = |a: f64, b: f64| Mat::from_fn(2, 2, |i, j| [[a, -b], [b, a]][i][j]);
        let (a1, b1, a2, b2) = (s * t1.cos(), s * t1.sin(), s * t2.cos(), s * t2.sin());
        if b1.abs() > 1e-3 || b2.abs() > 1e-3 {
            let ts = [rs(a1, b1), rs(a2, b2)];
            prop_assert!(matches!(classify_shift_pair(&ts, 2.0 * s * s), Ok(ShiftCase::RotationScaling)));
        }
        // Symmetric family: Q diag(cos, sin) Q^T and Q diag(cos', sin') Q^T.
        let q = Mat::from_fn(2, 2, |i, j| [[rot.cos(), -rot.sin()], [rot.sin(), rot.cos()]][i][j]);
        let d = |x: f64, y: f64| Mat::from_fn(2, 2, |i, j| if i == j { [x, y][i] } else { 0.0 });
        let (d1, d2) = (d(s * t1.cos(), s * t2.cos()), d(s * t1.sin(), s * t2.sin()));
        let ts = [&(&q * &d1) * q.transpose(), &(&q * &d2) * q.transpose()];
        prop_assert!(matches!(classify_shift_pair(&ts, s * s), Ok(ShiftCase::Symmetric)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn quadratic_relaxations_are_sound(seed in any::<u64>(), n in 2usize..=4) {
        let inst = random_quadratic(n, seed);
        let prog = build_relaxation(&inst, 1, Hierarchy::Real).unwrap();
        let sol = solve(&prog, &SdpOptions::default()).unwrap();
        prop_assert_eq!(sol.status, SolverStatus::Optimal);

        // Weak duality, corrected for the residuals of infeasible iterates.
        let scale = 1.0 + sol.primal_objective.abs();
        for it in &sol.history {
            prop_assert!(it.primal_objective - it.dual_objective - it.residual_correction >= -1e-9 * scale);
        }

        // Lower bound at feasible points, and measure moments are feasible for the program.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, n, 2, true);
        for a in &mu.atoms {
            prop_assert!(sol.dual_objective <= inst.objective_at(&a.point) + 1e-7);
        }
        let x = solution_from_moments(&prog, &moments_of_measure(&mu, 1)).unwrap();
        let feas = certify_feasibility(&prog, &x);
        prop_assert!(feas.min_eigenvalue() >= -1e-9 && feas.max_equality_violation <= 1e-9);

        // Bit-identical reruns.
        let again = solve(&prog, &SdpOptions::default()).unwrap();
        prop_assert_eq!(&again.x, &sol.x);
        prop_assert_eq!(again.history.len(), sol.history.len());

        // Valid certificates reproduce the objective.
        let cert = extract::recover_certificate(&inst, &prog, &sol).unwrap();
        prop_assert!(cert.valid && cert.residual <= 1e-6 * cert.scale.max(1.0), "{}", cert.residual);

        // Sampled feasible values bound the relaxation from above.
        let (ub, _) = local_upper_bound(&inst, 500, seed).unwrap();
        prop_assert!(sol.dual_objective <= ub + 1e-6);
    }

    #[test]
    fn scaling_the_objective_scales_the_optimum(seed in any::<u64>(), n in 2usize..=3) {
        let inst = random_quadratic(n, seed);
        let mut scaled = inst.clone();
        scaled.objective = inst.objective.scale(10.0);
        let opts = SdpOptions::default();
        let solve_inst = |i: &CpopInstance| {
            let prog = build_relaxation(i, 1, Hierarchy::Real).unwrap();
            let sol = solve(&prog, &opts).unwrap();
            (sol, prog)
        };
        let (a, prog) = solve_inst(&inst);
        let (b, _) = solve_inst(&scaled);
        prop_assert!((b.primal_objective - 10.0 * a.primal_objective).abs() <= 1e-7 * (10.0 * a.primal_objective).abs().max(1.0));
        // The minimizer is unique for generic data, so the moments agree.
        let ya = extract::solution_moments(&prog, &a);
        let yb = extract::solution_moments(&prog, &b);
        prop_assert!(ya.max_diff(&yb).0 <= 1e-6, "{}", ya.max_diff(&yb).0);
    }

    #[test]
    fn reports_verify(seed in any::<u64>()) {
        let inst = random_quartic(2, seed);
        let opts = RunOptions { order: 2, extract: true, ..RunOptions::default() };
        let rep = run(&inst, &opts).unwrap();
        let back = cpop_core::report::RunReport::from_json(&rep.to_json()).unwrap();
        prop_assert!(verify(&back).unwrap().max_deviation <= VERIFY_TOL);
    }

    #[test]
    fn problem_files_round_trip(seed in any::<u64>(), n in 1usize..=4) {
        for family in [Family::RandomQuadratic, Family::RandomQuartic] {
            let inst = generate(family, n, seed).unwrap();
            let text = io::render(&ProblemFile::from_instance(&inst));
            let back = io::parse(&text).unwrap().to_instance().unwrap();
            prop_assert_eq!(&back, &inst);
            prop_assert_eq!(io::render(&ProblemFile::from_instance(&back)), text);
        }
    }
}

#[test]
fn basis_sizes_are_binomial() {
    for n in 1..=8 {
        for r in 0..=5 {
            assert_eq!(enumerate_basis(n, r).len() as u128, binomial(n + r, r), "n={n} r={r}");
        }
    }
}

#[test]
fn generated_instances_are_valid_and_reproducible() {
    let sizes = [
        (Family::RandomQuadratic, 3),
        (Family::RandomQuartic, 3),
        (Family::Smale, 3),
        (Family::Mordell, 4),
        (Family::PolyphaseEnergy, 6),
        (Family::PolyphasePeak, 6),
        (Family::Unimodular, 3),
        (Family::Reformulated, 2),
    ];
    for (family, n) in sizes {
        let a = generate(family, n, 11).unwrap();
        a.validate().unwrap();
        a.require_real_coeffs().unwrap();
        assert_eq!(io::render(&ProblemFile::from_instance(&a)), io::render(&ProblemFile::from_instance(&generate(family, n, 11).unwrap())));
    }
}

#[test]
fn relaxation_bounds_increase_with_order() {
    for seed in 0..3 {
        let inst = random_quartic(2, seed);
        let bound = |r| {
            let prog = build_relaxation(&inst, r, Hierarchy::Real).unwrap();
            solve(&prog, &SdpOptions::default()).unwrap().dual_objective
        };
        let (b2, b3) = (bound(2), bound(3));
        assert!(b3 >= b2 - 1e-7, "seed {seed}: {b3} < {b2}");
    }
}
