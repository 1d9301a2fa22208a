//! Adaptive Simpson quadrature.
//!
//! Used as an independent cross-check against the closed forms (transform
//! identities, density normalizations) and for the oscillatory tail in the
//! value-function Fourier identity.

use num_complex::Complex64;

const MAX_DEPTH: u32 = 40;

/// Number of fixed panels laid down before recursion starts; guards against
/// premature convergence on integrands localized deep inside the interval.
const BASE_PANELS: usize = 24;

/// Adaptive Simpson on [a, b] to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let mut total = 0.0;
    let h = (b - a) / BASE_PANELS as f64;
    for i in 0..BASE_PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == BASE_PANELS { b } else { lo + h };
        let fa = f(lo);
        let fb = f(hi);
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        total += simpson_step(
            f,
            lo,
            hi,
            fa,
            fm,
            fb,
            simpson(lo, hi, fa, fm, fb),
            tol / BASE_PANELS as f64,
            MAX_DEPTH,
        );
    }
    total
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson for complex-valued integrands (error measured in modulus).
pub fn integrate_complex<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, tol: f64) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let h = (b - a) / BASE_PANELS as f64;
    for i in 0..BASE_PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == BASE_PANELS { b } else { lo + h };
        let fa = f(lo);
        let fb = f(hi);
        let m = 0.5 * (lo + hi);
        let fm = f(m);
        total += csimpson_step(
            f,
            lo,
            hi,
            fa,
            fm,
            fb,
            csimpson(lo, hi, fa, fm, fb),
            tol / BASE_PANELS as f64,
            MAX_DEPTH,
        );
    }
    total
}

fn csimpson(a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64) -> Complex64 {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn csimpson_step<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = csimpson(a, m, fa, flm, fm);
    let right = csimpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).norm() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    csimpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + csimpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
