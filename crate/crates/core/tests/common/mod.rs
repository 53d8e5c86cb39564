//! Shared helpers for integration suites: problem fixtures and the
//! independent quadrature oracle for update solves.

#![allow(dead_code)]

use modalnf::algebra::C64;
use modalnf::engine::{run, NormalFormResult};
use modalnf::problem::{burgers_problem_text, parse_problem, ProblemSpec};
use num_complex::Complex;

pub fn burgers_spec(n: i32, order: u32) -> ProblemSpec {
    parse_problem(&burgers_problem_text(n, order)).expect("fixture parses")
}

pub fn burgers_result(n: i32, order: u32) -> NormalFormResult {
    let spec = burgers_spec(n, order);
    run(&spec.nonlinearity, order).expect("construction succeeds")
}

/// The general-r fixture at r = 9/8 (gap: alpha = 1/8, beta = 23/8,
/// gamma = 9/8, mu_tilde = 1/4).
pub fn burgers_r98_text(n: i32, order: u32) -> String {
    format!(
        "[model]\n\
         modes = -{n}..{n}\n\
         alpha = 9/8 - j^2\n\
         gap_alpha = 1/8\n\
         gap_beta = 23/8\n\
         gap_gamma = 9/8\n\
         mu_tilde = 1/4\n\
         \n\
         [nonlinearity]\n\
         kind = quadratic_convolution\n\
         b = k*(j-k)\n\
         time_factor = 1/2*t\n\
         \n\
         [run]\n\
         order = {order}\n"
    )
}

fn poly_at(coeffs: &[C64], x: f64) -> C64 {
    let mut acc = Complex::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

fn adaptive_simpson(
    f: &dyn Fn(f64) -> C64,
    a: f64,
    b: f64,
    fa: C64,
    fm: C64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (fa + flm * 4.0 + fm) * ((m - a) / 6.0);
    let right = (fm + frm * 4.0 + fb) * ((b - m) / 6.0);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn integrate_adaptive(f: &dyn Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (fa + fm * 4.0 + fb) * ((b - a) / 6.0);
    adaptive_simpson(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// The exponential-convolution solution of `xi' + mu xi = a`, evaluated by
/// adaptive quadrature of the defining semi-infinite integral:
/// `int_0^inf e^(-mu s) a(t - s) ds` for `Re mu > 0`, and
/// `-int_0^inf e^(mu s) a(t + s) ds` for `Re mu < 0`.
/// Fully independent of the polynomial back-substitution path.
pub fn convolution_quadrature(mu: C64, a_coeffs: &[C64], t: f64) -> C64 {
    assert!(mu.re != 0.0, "quadrature needs a nonzero real part");
    let decay = mu.re.abs();
    let s_max = 120.0 / decay + 40.0;
    let tol = 1e-13;
    if mu.re > 0.0 {
        let g = |s: f64| (-mu * s).exp() * poly_at(a_coeffs, t - s);
        integrate_adaptive(&g, 0.0, s_max, tol)
    } else {
        let g = |s: f64| (mu * s).exp() * poly_at(a_coeffs, t + s);
        -integrate_adaptive(&g, 0.0, s_max, tol)
    }
}
