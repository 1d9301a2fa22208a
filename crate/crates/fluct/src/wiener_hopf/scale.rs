//! Spectrally negative machinery: the largest root of `psi = alpha`, the
//! scale function, and the extremum laws it induces.
//!
//! The scale function is characterized by its transform
//! `int_0^inf e^{-lambda x} W(x) dx = 1 / (psi(lambda) - alpha)` for lambda
//! beyond the largest root. With a rational psi the right-hand side splits
//! into partial fractions, so W is a finite sum of exponential-polynomial
//! terms: this module computes that representation and differentiates it to
//! assemble the infimum law
//!
//! ```text
//! P(-inf X_{e_alpha} in dx) = (alpha/phi) dW(x) - alpha W(x) dx.
//! ```

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{FluctError, Result};
use crate::models::LevyModel;
use crate::poly::{cluster_roots, ROOT_CLUSTER_TOL};
use crate::wiener_hopf::{partial_fraction_coeffs, ExpMixture};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn require_scale_class(model: &LevyModel) -> Result<()> {
    if !model.spectrally_negative() {
        return Err(FluctError::ModelClass {
            expected: "spectrally negative (no upward jumps)",
            detail: "model has an upward jump component".into(),
        });
    }
    if model.is_negative_subordinator() {
        return Err(FluctError::ModelClass {
            expected: "spectrally negative, not the negative of a subordinator",
            detail: "paths are nonincreasing; psi has no largest root".into(),
        });
    }
    Ok(())
}

/// Largest real root of `psi(lambda) = alpha`, by Newton from above an upper
/// bound (psi is convex to the right of its last pole, so the iteration is
/// monotone).
pub fn phi_of_alpha(model: &LevyModel, alpha: f64) -> Result<f64> {
    require_scale_class(model)?;
    if alpha < 0.0 {
        return Err(FluctError::validation("alpha", "discount must be >= 0"));
    }
    let mean = model.cumulant_deriv_real(0.0)?;
    if alpha == 0.0 && mean >= 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut guard = 0;
    while model.cumulant_real(hi)? <= alpha {
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(FluctError::IllConditioned {
                detail: "could not bracket the largest root of psi".into(),
            });
        }
    }
    let mut lambda = hi;
    for _ in 0..200 {
        let f = model.cumulant_real(lambda)? - alpha;
        if f.abs() <= 1e-13 * alpha.max(1.0) {
            break;
        }
        let d = model.cumulant_deriv_real(lambda)?;
        lambda -= f / d;
    }
    Ok(lambda)
}

/// `sup X_{e_alpha}` is exponential with rate `phi(alpha)`; returns the rate.
pub fn sup_law_spectrally_negative(model: &LevyModel, alpha: f64) -> Result<f64> {
    if alpha <= 0.0 {
        return Err(FluctError::validation("alpha", "discount must be > 0"));
    }
    phi_of_alpha(model, alpha)
}

/// One exponential-polynomial term `coeff * x^{k-1}/(k-1)! * e^{zeta x}`.
#[derive(Debug, Clone, Copy)]
pub struct ScaleTerm {
    pub zeta: Complex64,
    pub k: usize,
    pub coeff: Complex64,
}

/// Exponential-sum representation of the scale function.
#[derive(Debug, Clone)]
pub struct ScaleFunction {
    pub alpha: f64,
    pub terms: Vec<ScaleTerm>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

impl ScaleFunction {
    pub fn eval(&self, x: f64) -> f64 {
        let mut v = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            v += t.coeff * c(x.powi(t.k as i32 - 1) / factorial(t.k - 1)) * (t.zeta * x).exp();
        }
        v.re
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        let mut v = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            v += t.coeff * t.zeta * c(x.powi(t.k as i32 - 1) / factorial(t.k - 1))
                * (t.zeta * x).exp();
            if t.k >= 2 {
                v += t.coeff * c(x.powi(t.k as i32 - 2) / factorial(t.k - 2)) * (t.zeta * x).exp();
            }
        }
        v.re
    }

    /// W(0): the k = 1 coefficients survive at the origin.
    pub fn value_at_zero(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.k == 1)
            .map(|t| t.coeff)
            .sum::<Complex64>()
            .re
    }
}

/// Exponential-sum scale function by partial fractions of
/// `1/(psi(lambda) - alpha) = D(lambda) / Q(lambda)` over all roots of Q.
pub fn scale_function(model: &LevyModel, alpha: f64) -> Result<ScaleFunction> {
    require_scale_class(model)?;
    if alpha < 0.0 {
        return Err(FluctError::validation("alpha", "discount must be >= 0"));
    }
    if alpha == 0.0 && model.mean() == 0.0 {
        // A double root at the origin is fine (handled as multiplicity 2);
        // only genuinely oscillating zero-mean models reach this branch.
    }
    let q = model.cleared_cumulant_poly(alpha);
    let d = model.down_denominator();
    let roots = q.roots()?;
    let clustered = cluster_roots(&roots, ROOT_CLUSTER_TOL);
    // Normalize so Q is monic times the true leading coefficient: the
    // partial-fraction helper expects the denominator as a root product, so
    // fold Q's leading coefficient into the numerator.
    let lead = *q.coeffs.last().expect("nonzero polynomial");
    let num = d.scale(c(1.0) / lead);
    let coeffs = partial_fraction_coeffs(&num, &clustered)?;
    let terms = coeffs
        .into_iter()
        .filter(|&(_, _, a)| a.norm() > 1e-14)
        .map(|(zeta, k, coeff)| ScaleTerm { zeta, k, coeff })
        .collect();
    Ok(ScaleFunction { alpha, terms })
}

/// The infimum law from the scale representation: atom `(alpha/phi) W(0)`
/// plus the density `(alpha/phi) W'(x) - alpha W(x)`, reassembled termwise
/// into the mixture convention (the growing `phi` term cancels exactly and
/// is dropped).
pub fn inf_law_spectrally_negative(model: &LevyModel, alpha: f64) -> Result<ExpMixture> {
    if alpha <= 0.0 {
        return Err(FluctError::validation("alpha", "discount must be > 0"));
    }
    let phi = phi_of_alpha(model, alpha)?;
    let w = scale_function(model, alpha)?;
    let atom0 = alpha / phi * w.value_at_zero();
    // Collect density coefficients B_{zeta,k} for x^{k-1}/(k-1)! e^{zeta x}.
    let mut map: BTreeMap<(u64, u64, usize), (Complex64, usize, Complex64)> = BTreeMap::new();
    let mut add = |zeta: Complex64, k: usize, b: Complex64| {
        let key = (zeta.re.to_bits(), zeta.im.to_bits(), k);
        map.entry(key)
            .and_modify(|e| e.2 += b)
            .or_insert((zeta, k, b));
    };
    for t in &w.terms {
        add(t.zeta, t.k, t.coeff * (c(alpha / phi) * t.zeta - c(alpha)));
        if t.k >= 2 {
            add(t.zeta, t.k - 1, t.coeff * c(alpha / phi));
        }
    }
    let mut terms = Vec::new();
    let scale_b = map
        .values()
        .map(|&(_, _, b)| b.norm())
        .fold(1.0_f64, f64::max);
    for (_, (zeta, k, b)) in map {
        if zeta.re >= 0.0 {
            // The phi term must cancel; anything left is rounding noise.
            if b.norm() > 1e-9 * scale_b {
                return Err(FluctError::IllConditioned {
                    detail: format!("non-cancelling growing term {b} at zeta = {zeta}"),
                });
            }
            continue;
        }
        if b.norm() <= 1e-14 * scale_b {
            continue;
        }
        terms.push((zeta, k, b / (-zeta).powi(k as i32 - 1)));
    }
    let mix = ExpMixture { atom0, terms };
    mix.validate_normalized(1e-8)?;
    Ok(mix)
}
