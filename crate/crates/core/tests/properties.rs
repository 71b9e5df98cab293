use proptest::prelude::*;
use weakprox::algorithm::{self, pair_argmin, LocalityConfig, RunOptions, Schedule};
use weakprox::envelope::{self, ProxQuery};
use weakprox::fixedpoint::{self, SigmaPolicy};
use weakprox::linalg;
use weakprox::problems::{dc_decomposition, make_abs_quadratic, make_example1, Problem};

fn zoo_1d() -> Vec<Problem> {
    vec![make_example1().0, make_abs_quadratic().0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn envelope_below_function(x in -2.5f64..2.5, lambda in 0.01f64..0.45) {
        for p in zoo_1d() {
            let point = [x];
            let e = envelope::envelope_value(&ProxQuery::new(&p, lambda, &point, 3.0), 1e-12).unwrap();
            prop_assert!(e <= p.value(&point) + 1e-12);
        }
    }

    #[test]
    fn dc_reconstruction_exact(x in -3.0f64..3.0) {
        for p in zoo_1d() {
            let dc = dc_decomposition(&p);
            prop_assert!((dc.reconstruct(&[x]) - p.value(&[x])).abs() <= 1e-12 * (1.0 + x * x));
        }
    }

    #[test]
    fn prox_is_optimal_against_nearby_points(x in -2.0f64..2.0, lambda in 0.05f64..0.45, d in -0.5f64..0.5) {
        for p in zoo_1d() {
            let point = [x];
            let q = ProxQuery::new(&p, lambda, &point, 3.0);
            let r = envelope::prox(&q, 1e-12).unwrap();
            prop_assert!(q.objective(&r.y) <= q.objective(&[r.y[0] + d]) + 1e-10);
        }
    }

    #[test]
    fn s_map_monotone_and_lipschitz(z in 0.8f64..1.2, w in 0.8f64..1.2) {
        // ∇e_γf is monotone on B[1, 0.2], so ⟨S(z) − S(w), z − w⟩ ≥ ‖z − w‖²
        let (p, _) = make_example1();
        let cc = fixedpoint::derive_constants(0.1, 0.25, 2.0, 0.2, SigmaPolicy::default()).unwrap();
        let sz = fixedpoint::s_map(&[z], &cc, &p, 1e-12).unwrap()[0];
        let sw = fixedpoint::s_map(&[w], &cc, &p, 1e-12).unwrap()[0];
        let d = z - w;
        prop_assert!((sz - sw) * d >= d * d - 1e-12);
        prop_assert!((sz - sw).abs() <= cc.lipschitz * d.abs() + 1e-12);
    }

    #[test]
    fn phi_contracts(z in 0.8f64..1.2, w in 0.8f64..1.2, x in 0.93f64..1.07) {
        let (p, _) = make_abs_quadratic();
        let cc = fixedpoint::derive_constants(0.1, 0.25, 2.0, 0.2, SigmaPolicy::default()).unwrap();
        let pz = fixedpoint::phi_map(&[z], &[x], &cc, &p, 1e-12).unwrap()[0];
        let pw = fixedpoint::phi_map(&[w], &[x], &cc, &p, 1e-12).unwrap()[0];
        prop_assert!((pz - pw).abs() <= cc.contraction_factor() * (z - w).abs() + 1e-11);
    }

    #[test]
    fn inner_solution_is_the_prox(u in -1.0f64..1.0) {
        let (p, xs) = make_abs_quadratic();
        let cc = fixedpoint::derive_constants(0.2, 0.45, 2.0, 0.4, SigmaPolicy::default()).unwrap();
        let x = [1.0 + u * cc.beta];
        let r = fixedpoint::solve_fixed_point(&x, &cc, &p, &xs.x_bar, 1e-10, None).unwrap();
        let direct = envelope::prox(&ProxQuery::new(&p, 0.45, &x, 1.0), 1e-13).unwrap();
        prop_assert!(linalg::dist(&r.y, &direct.y) <= 1e-8);
        // the fixed point equation itself
        let s = fixedpoint::s_map(&r.z, &cc, &p, 1e-13).unwrap();
        prop_assert!(linalg::dist(&s, &x) <= 1e-8);
    }

    #[test]
    fn run_invariants(u in -1.0f64..1.0, which in 0usize..2) {
        let (p, xs) = if which == 0 { make_example1() } else { make_abs_quadratic() };
        let (gamma, lambda, delta) = if which == 0 { (0.1, 0.25, 0.2) } else { (0.2, 0.45, 0.4) };
        let schedule = Schedule::constant(gamma, lambda, 1.5 * gamma, p.rho());
        let loc = LocalityConfig::derive(xs.x_bar.clone(), delta, &schedule, 1, SigmaPolicy::default()).unwrap();
        let x0 = [1.0 + u * loc.beta];
        let opts = RunOptions::new(1e-6, 200).with_f_star(xs.min_value);
        let r = algorithm::run(&p, &x0, &schedule, &loc, &opts).unwrap();
        let mut sum = 0.0;
        for rec in &r.records {
            prop_assert!(rec.descent_gap >= -1e-8);
            prop_assert!(rec.f_x_next <= rec.f_x_k + 1e-8);
            prop_assert!(rec.fejer_ok);
            prop_assert!(linalg::dist(&rec.x_next, &loc.x_bar) <= loc.beta + 1e-6);
            sum += rec.step_norm * rec.step_norm;
        }
        prop_assert!((sum - r.sum_sq_steps).abs() <= 1e-15);
        prop_assert!(algorithm::check_summability(&r).passed);
        prop_assert!((r.x_final[0] - 1.0).abs() <= 1e-6);
        prop_assert!((r.iterations as f64) < r.complexity_bound.unwrap());
    }

    #[test]
    fn pair_argmin_is_brute_force_argmin(
        z in prop::collection::vec(0.0f64..2.0, 2..20),
        tau in prop::sample::select(vec![1.0f64, 2.0]),
        lam in 0.1f64..20.0,
    ) {
        let sums: Vec<f64> = z.windows(2).map(|w| w[0].powf(tau) + w[1].powf(tau)).collect();
        let min = sums.iter().cloned().fold(f64::INFINITY, f64::min);
        let expected = sums.iter().position(|s| *s == min).unwrap() + 1;
        prop_assert_eq!(pair_argmin(&z, tau), Some(expected));
        let r = algorithm::pair_bound(&z, lam, tau).unwrap();
        let total: f64 = z.iter().map(|v| v.powf(tau)).sum();
        prop_assert_eq!(r.premise_met, total <= lam);
        prop_assert!(r.passed);
    }
}
