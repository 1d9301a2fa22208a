//! The discounted occupation measure of a subordinator:
//! `1/(alpha + phi(lambda)) = int e^{-lambda y} U(dy)` with
//! `phi(lambda) = drift lambda + rate (1 - F(lambda))`.
//!
//! Clearing denominators makes the transform rational, so U is an atom at
//! the origin (only when drift = 0) plus an exponential-polynomial density,
//! in the same term convention as the infimum mixtures.

use num_complex::Complex64;

use crate::error::{FluctError, Result};
use crate::models::LevyModel;
use crate::poly::{cluster_roots, Poly, ROOT_CLUSTER_TOL};
use crate::wiener_hopf::{partial_fraction_coeffs, terms_density, terms_tail_transform};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Occupation measure with total mass `1/alpha`: atom at 0 plus density.
#[derive(Debug, Clone)]
pub struct ResolventMeasure {
    pub alpha: f64,
    pub atom0: f64,
    /// Same (zeta, k, A) convention as the mixtures: density
    /// `sum A (-zeta x)^{k-1}/(k-1)! e^{zeta x}`.
    pub terms: Vec<(Complex64, usize, Complex64)>,
}

impl ResolventMeasure {
    pub fn density(&self, x: f64) -> f64 {
        terms_density(&self.terms, x)
    }

    /// `int_x^inf e^{-beta z} U(dz)` excluding the atom.
    pub fn tail_transform(&self, beta: f64, x: f64) -> f64 {
        terms_tail_transform(&self.terms, beta, x)
    }

    /// Full transform including the atom (the measure of `[0, inf)`).
    pub fn transform(&self, beta: f64) -> f64 {
        self.atom0 + self.tail_transform(beta, 0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.transform(0.0)
    }
}

/// Clears denominators of `1/(alpha + phi(lambda))` and decomposes it.
/// Requires a subordinator; for `alpha = 0` (used by the zero-discount
/// passage limit) the transform keeps a constant density term from the root
/// of phi at the origin, and the total mass is infinite.
pub(crate) fn resolvent_measure(model: &LevyModel, alpha: f64) -> Result<ResolventMeasure> {
    if !model.is_subordinator() {
        return Err(FluctError::ModelClass {
            expected: "subordinator (no Gaussian part, drift >= 0, no downward jumps)",
            detail: "resolvent is defined for nondecreasing paths only".into(),
        });
    }
    if alpha < 0.0 {
        return Err(FluctError::validation("alpha", "discount must be >= 0"));
    }
    let drift = model.drift();
    let (rate, num_up, den_up) = match model.up() {
        Some(j) => {
            let (n, d) = j.law().rational();
            (j.rate(), n, d)
        }
        None => (0.0, Poly::zero(), Poly::one()),
    };
    // G(lambda) = (alpha + rate + drift*lambda) D(lambda) - rate N(lambda)
    let linear = Poly::from_real(&[alpha + rate, drift]);
    let g = linear.mul(&den_up).add(&num_up.scale(c(-rate)));
    let roots = g.roots()?;
    for z in &roots {
        let ok_zero = alpha == 0.0 && z.norm() <= 1e-7 * (1.0 + z.norm());
        if z.re >= -1e-9 && !ok_zero {
            return Err(FluctError::RootConditioning {
                root: *z,
                tolerance: 1e-9,
            });
        }
    }
    let clustered = cluster_roots(&roots, ROOT_CLUSTER_TOL);
    let lead = *g.coeffs.last().expect("cleared transform is nonzero");
    // Atom only when the degrees tie (zero drift).
    let atom0 = if den_up.degree() == g.degree() {
        (den_up.coeffs.last().unwrap() / lead).re
    } else {
        0.0
    };
    let mut num = den_up.scale(c(1.0) / lead);
    if atom0 != 0.0 {
        let mut den_monic = Poly::one();
        for &(z, m) in &clustered {
            for _ in 0..m {
                den_monic = den_monic.mul(&Poly::new(vec![-z, c(1.0)]));
            }
        }
        num = num.add(&den_monic.scale(c(-atom0)));
    }
    let coeffs = partial_fraction_coeffs(&num, &clustered)?;
    let terms = coeffs
        .into_iter()
        .filter(|&(_, _, a)| a.norm() > 1e-14)
        .map(|(zeta, k, cf)| (zeta, k, cf / (-zeta).powi(k as i32 - 1)))
        .collect();
    Ok(ResolventMeasure {
        alpha,
        atom0,
        terms,
    })
}

/// Public entry point: the discounted occupation measure for `alpha > 0`,
/// with its mass checked against `1/alpha`.
pub fn subordinator_resolvent(model: &LevyModel, alpha: f64) -> Result<ResolventMeasure> {
    if alpha <= 0.0 {
        return Err(FluctError::validation("alpha", "discount must be > 0"));
    }
    let u = resolvent_measure(model, alpha)?;
    let mass = u.total_mass();
    if (mass - 1.0 / alpha).abs() > 1e-8 * (1.0 / alpha) {
        return Err(FluctError::IllConditioned {
            detail: format!("resolvent mass {mass} deviates from 1/alpha = {}", 1.0 / alpha),
        });
    }
    Ok(u)
}
