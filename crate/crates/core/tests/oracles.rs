//! Library results compared against independent reference computations:
//! dense scans of the prox subproblem, central finite differences, and
//! closed forms worked out by hand.

use approx::assert_abs_diff_eq;
use weakprox::algorithm::{self, LocalityConfig, RunOptions, Schedule, Termination};
use weakprox::envelope::{self, ProxQuery};
use weakprox::fixedpoint::{self, SigmaPolicy};
use weakprox::problems::{make_abs_quadratic, make_example1, make_quadratic, Problem};

/// Minimizes `f(y) + (y − x)²/(2λ)` by scanning `[x − r, x + r]` at pitch `h`
/// and polishing with a second, finer scan around the best cell.
fn scan_prox(p: &Problem, lambda: f64, x: f64, r: f64, h: f64) -> f64 {
    let obj = |y: f64| p.value(&[y]) + (y - x) * (y - x) / (2.0 * lambda);
    let mut best = (f64::INFINITY, x);
    let mut lo = x - r;
    let mut hi = x + r;
    let mut pitch = h;
    for _ in 0..3 {
        let n = ((hi - lo) / pitch).ceil() as usize;
        for i in 0..=n {
            let y = lo + i as f64 * pitch;
            let v = obj(y);
            if v < best.0 {
                best = (v, y);
            }
        }
        lo = best.1 - 2.0 * pitch;
        hi = best.1 + 2.0 * pitch;
        pitch /= 1000.0;
    }
    best.1
}

#[test]
fn abs_quadratic_prox_matches_scan() {
    let (p, _) = make_abs_quadratic();
    for &(x, lambda) in &[
        (1.3, 0.1),
        (0.7, 0.2),
        (1.0, 0.4),
        (1.6, 0.3),
        (-0.4, 0.2),
        (0.05, 0.1),
    ] {
        let point = [x];
        let got = envelope::prox(&ProxQuery::new(&p, lambda, &point, 1.5), 1e-12).unwrap();
        let want = scan_prox(&p, lambda, x, 1.5, 1e-3);
        assert_abs_diff_eq!(got.y[0], want, epsilon = 1e-7);
    }
}

#[test]
fn example1_prox_closed_form_branches() {
    // f + x² is convex, so the subproblem is strongly convex for λ < 1/2:
    // P_λf(x) = 1 on |x − 1| ≤ 2λ, x/(1 + 2λ) above, x/(1 − 2λ) below.
    let (p, _) = make_example1();
    let lambda = 0.2;
    for &(x, want) in &[(1.3, 1.0), (0.65, 1.0), (2.1, 2.1 / 1.4), (0.5, 0.5 / 0.6)] {
        let point = [x];
        let got =
            envelope::numerical_prox(&ProxQuery::new(&p, lambda, &point, 2.0), 1e-12).unwrap();
        assert_abs_diff_eq!(got.y[0], want, epsilon = 1e-9);
        assert_abs_diff_eq!(
            got.y[0],
            scan_prox(&p, lambda, x, 2.0, 1e-3),
            epsilon = 1e-7
        );
    }
}

#[test]
fn envelope_gradient_matches_central_differences() {
    let h = 1e-6;
    let (p, _) = make_abs_quadratic();
    let lambda = 0.3;
    for &x in &[-2.0, -0.5, 0.3, 0.95, 1.2, 2.5] {
        let e = |t: f64| {
            let point = [t];
            envelope::envelope_value(&ProxQuery::new(&p, lambda, &point, 1.5), 1e-13).unwrap()
        };
        let fd = (e(x + h) - e(x - h)) / (2.0 * h);
        let point = [x];
        let g = envelope::envelope_gradient(&ProxQuery::new(&p, lambda, &point, 1.5), 1e-13)
            .unwrap()[0];
        assert!(
            (g - fd).abs() <= 1e-5 * g.abs().max(1.0),
            "x = {x}: {g} vs {fd}"
        );
    }
}

#[test]
fn example1_envelope_is_quadratic_near_minimizer() {
    let (p, _) = make_example1();
    let lambda = 0.1;
    for &x in &[0.95, 1.05, 1.19] {
        let point = [x];
        let e = envelope::envelope_value(&ProxQuery::new(&p, lambda, &point, 0.5), 1e-12).unwrap();
        assert_abs_diff_eq!(
            e,
            1.0 + (x - 1.0) * (x - 1.0) / (2.0 * lambda),
            epsilon = 1e-12
        );
    }
}

#[test]
fn quadratic_envelope_closed_form() {
    // e_λ(½‖·‖²)(x) = ‖x‖²/(2(1 + λ))
    let (p, _) = make_quadratic(&[0.0, 0.0]);
    let x = [0.7, -1.2];
    let lambda = 0.4;
    let q = ProxQuery::new(&p, lambda, &x, 3.0);
    let e = envelope::envelope_value(&q, 1e-12).unwrap();
    assert_abs_diff_eq!(e, (0.49 + 1.44) / (2.0 * 1.4), epsilon = 1e-12);
    let num = envelope::numerical_prox(&q, 1e-10).unwrap();
    assert_abs_diff_eq!(num.y[0], 0.5, epsilon = 1e-8);
    assert_abs_diff_eq!(num.y[1], -6.0 / 7.0, epsilon = 1e-8);
}

#[test]
fn inner_solve_matches_scanned_prox_on_abs_quadratic() {
    let (p, xs) = make_abs_quadratic();
    let cc = fixedpoint::derive_constants(0.2, 0.45, 2.0, 0.4, SigmaPolicy::default()).unwrap();
    for &x in &[1.15, 0.85, 1.1, 0.92] {
        let r = fixedpoint::solve_fixed_point(&[x], &cc, &p, &xs.x_bar, 1e-10, None).unwrap();
        let want = scan_prox(&p, 0.45, x, 1.0, 1e-3);
        assert_abs_diff_eq!(r.y[0], want, epsilon = 1e-7);
        // z = x − (λ − γ)∇e_γf(z) solved by hand where P_γf(z) = 1:
        // z − x = −(λ − γ)(z − 1)/γ
        let c = (0.45 - 0.2) / 0.2;
        assert_abs_diff_eq!(r.z[0], (x + c) / (1.0 + c), epsilon = 1e-8);
    }
}

#[test]
fn abs_quadratic_run_converges_and_respects_bound() {
    let (p, xs) = make_abs_quadratic();
    let schedule = Schedule::constant(0.2, 0.45, 0.3, p.rho());
    let loc = LocalityConfig::derive(xs.x_bar.clone(), 0.4, &schedule, 1, SigmaPolicy::default())
        .unwrap();
    for eps in [1e-1, 1e-2, 1e-3] {
        let opts = RunOptions::new(eps, 1000).with_f_star(xs.min_value);
        let r = algorithm::run(&p, &[1.15], &schedule, &loc, &opts).unwrap();
        assert_eq!(r.termination, Termination::StepBelowEps);
        let bound = 2.0 + (2.0 / 2.0) * (p.value(&[1.15]) - 0.0) / (eps * eps);
        assert!((r.iterations as f64) < bound);
        assert_abs_diff_eq!(r.complexity_bound.unwrap(), bound, epsilon = 1e-9);
    }
}

#[test]
fn quadratic_two_dimensional_run() {
    let (p, xs) = make_quadratic(&[0.0, 0.0]);
    let schedule = Schedule::constant(0.3, 0.8, 0.5, p.rho());
    let loc = LocalityConfig::derive(xs.x_bar.clone(), 1.0, &schedule, 1, SigmaPolicy::default())
        .unwrap();
    let x0 = [loc.beta * 0.6, -loc.beta * 0.5];
    let r = algorithm::run(&p, &x0, &schedule, &loc, &RunOptions::new(1e-9, 500)).unwrap();
    assert_eq!(r.termination, Termination::StepBelowEps);
    for rec in &r.records {
        let factor = 1.8f64.powi(rec.k as i32 + 1);
        assert_abs_diff_eq!(rec.x_next[0], x0[0] / factor, epsilon = 1e-8);
        assert_abs_diff_eq!(rec.x_next[1], x0[1] / factor, epsilon = 1e-8);
    }
}
