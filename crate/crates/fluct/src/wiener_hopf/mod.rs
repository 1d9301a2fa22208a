//! Wiener-Hopf factors for the phase-type jump-diffusion family.
//!
//! For alpha > 0 the law of the running infimum at an independent Exp(alpha)
//! time has transform
//!
//! ```text
//! E[e^{s inf X_{e_alpha}}] = prod_i(-rho_i) prod_j(s - eta_j)
//!                            ---------------------------------
//!                            prod_j(-eta_j) prod_i(s - rho_i)
//! ```
//!
//! where the rho_i are the left-half-plane solutions of `xi(s) = alpha`
//! (xi the cumulant) and the eta_j are the left-half-plane poles of xi (the
//! eigenvalues of the downward subintensity matrix). Partial fractions of
//! this rational function give an atom at zero plus an Erlang-type mixture
//! density for -inf X, which is what every pricing and passage formula
//! downstream consumes.

pub mod resolvent;
pub mod scale;

use num_complex::Complex64;

use crate::error::{FluctError, Result};
use crate::models::LevyModel;
use crate::poly::{cluster_roots, series_div, Poly, ROOT_CLUSTER_TOL};

pub use resolvent::{subordinator_resolvent, ResolventMeasure};
pub use scale::{
    inf_law_spectrally_negative, phi_of_alpha, scale_function, sup_law_spectrally_negative,
    ScaleFunction, ScaleTerm,
};

/// Roots within this distance of the imaginary axis make the half-plane
/// split unreliable and are rejected.
pub const AXIS_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Left-half-plane roots and poles of the killed cumulant, with multiplicity.
#[derive(Debug, Clone)]
pub struct RootSet {
    roots: Vec<(Complex64, usize)>,
    poles: Vec<(Complex64, usize)>,
}

impl RootSet {
    /// Validates half-plane location, conjugate pairing and the structural
    /// count `roots = poles + expected_gap`.
    pub fn new(
        roots: Vec<(Complex64, usize)>,
        poles: Vec<(Complex64, usize)>,
        expected_gap: usize,
        axis_tol: f64,
    ) -> Result<Self> {
        for &(z, _) in roots.iter().chain(poles.iter()) {
            if z.re >= -axis_tol {
                return Err(FluctError::RootConditioning {
                    root: z,
                    tolerance: axis_tol,
                });
            }
        }
        for list in [&roots, &poles] {
            for &(z, m) in list.iter() {
                if z.im != 0.0 {
                    let has_conjugate = list
                        .iter()
                        .any(|&(w, mw)| mw == m && (w - z.conj()).norm() <= 1e-9 * (1.0 + z.norm()));
                    if !has_conjugate {
                        return Err(FluctError::IllConditioned {
                            detail: format!("complex entry {z} lacks a conjugate partner"),
                        });
                    }
                }
            }
        }
        let n_roots: usize = roots.iter().map(|&(_, m)| m).sum();
        let n_poles: usize = poles.iter().map(|&(_, m)| m).sum();
        if n_roots != n_poles + expected_gap {
            return Err(FluctError::RootCountMismatch {
                roots: n_roots,
                poles: n_poles,
                expected_gap,
            });
        }
        Ok(RootSet { roots, poles })
    }

    pub fn roots(&self) -> &[(Complex64, usize)] {
        &self.roots
    }

    pub fn poles(&self) -> &[(Complex64, usize)] {
        &self.poles
    }

    pub fn root_count(&self) -> usize {
        self.roots.iter().map(|&(_, m)| m).sum()
    }

    pub fn pole_count(&self) -> usize {
        self.poles.iter().map(|&(_, m)| m).sum()
    }

    /// CSV with columns re, im, multiplicity, kind.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("re,im,multiplicity,kind\n");
        for &(z, m) in &self.roots {
            out.push_str(&format!("{:.16e},{:.16e},{m},root\n", z.re, z.im));
        }
        for &(z, m) in &self.poles {
            out.push_str(&format!("{:.16e},{:.16e},{m},pole\n", z.re, z.im));
        }
        out
    }
}

/// The expected root-count surplus over the poles: one extra root whenever
/// the process has a small-time downward part (a Gaussian component, or
/// bounded variation with negative drift).
pub fn expected_root_gap(model: &LevyModel) -> usize {
    if model.gaussian() > 0.0 || (model.gaussian() == 0.0 && model.drift() < 0.0) {
        1
    } else {
        0
    }
}

/// Left-half-plane roots of `xi(s) = alpha` and poles of the cumulant, for
/// the infimum factor. `alpha = 0` requires positive mean (the killing time
/// is then almost surely infinite) and deflates the structural root at the
/// origin before the half-plane split.
pub fn phase_type_roots(model: &LevyModel, alpha: f64) -> Result<RootSet> {
    phase_type_roots_with_tol(model, alpha, AXIS_TOL)
}

/// Same as [`phase_type_roots`] with an explicit axis tolerance, so the
/// conditioning threshold can be re-checked at a different value.
pub fn phase_type_roots_with_tol(
    model: &LevyModel,
    alpha: f64,
    axis_tol: f64,
) -> Result<RootSet> {
    if alpha < 0.0 {
        return Err(FluctError::validation("alpha", "discount must be >= 0"));
    }
    if alpha == 0.0 && model.mean() <= 0.0 {
        return Err(FluctError::UnsupportedLimit {
            detail: "alpha = 0 needs E[X_1] > 0 for the infimum law to exist".into(),
        });
    }
    if !model.has_downward_movement() {
        // Nondecreasing paths: the infimum sits at the starting point and the
        // factor is identically 1 (no roots, no poles).
        return RootSet::new(vec![], vec![], 0, axis_tol);
    }
    let p = model.cleared_cumulant_poly(alpha);
    let mut all = p.roots()?;
    let scale = 1.0 + all.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if alpha == 0.0 {
        // xi(0) = 0 always; remove the structural origin root.
        let (idx, _) = all
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
            .expect("cleared polynomial has roots");
        let z = all[idx];
        if z.norm() > 1e-6 * scale {
            return Err(FluctError::IllConditioned {
                detail: format!("expected an origin root at alpha = 0, closest root is {z}"),
            });
        }
        all.remove(idx);
    }
    let mut left = Vec::new();
    for z in all {
        if z.re < -axis_tol {
            left.push(z);
        } else if z.re <= axis_tol {
            return Err(FluctError::RootConditioning {
                root: z,
                tolerance: axis_tol,
            });
        }
    }
    let roots = cluster_roots(&left, ROOT_CLUSTER_TOL);
    let poles = match model.down() {
        Some(j) => cluster_roots(j.law().eigenvalues(), ROOT_CLUSTER_TOL),
        None => vec![],
    };
    RootSet::new(roots, poles, expected_root_gap(model), axis_tol)
}

/// The running-infimum factor as the product formula over a root set.
#[derive(Debug, Clone)]
pub struct RationalFactor {
    root_set: RootSet,
}

/// Wraps a validated root set as the factor `E[e^{s inf X_{e_alpha}}]`.
pub fn minus_factor(root_set: RootSet) -> RationalFactor {
    RationalFactor { root_set }
}

impl RationalFactor {
    pub fn root_set(&self) -> &RootSet {
        &self.root_set
    }

    /// Evaluates the product formula; errors when `s` sits on a pole (one of
    /// the roots rho_i).
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let mut value = Complex64::new(1.0, 0.0);
        for &(rho, m) in self.root_set.roots() {
            let d = s - rho;
            if d.norm() <= 1e-12 * (1.0 + s.norm()) {
                return Err(FluctError::PoleEvaluation {
                    at: s,
                    eigenvalue: rho,
                    distance: d.norm(),
                });
            }
            value *= ((-rho) / d).powi(m as i32);
        }
        for &(eta, m) in self.root_set.poles() {
            value *= ((s - eta) / (-eta)).powi(m as i32);
        }
        Ok(value)
    }

    /// Real-axis value (real part, after verifying the conjugate terms have
    /// cancelled the imaginary part).
    pub fn eval_real(&self, s: f64) -> Result<f64> {
        let v = self.eval(c(s))?;
        debug_assert!(v.im.abs() <= 1e-9 * (1.0 + v.norm()));
        Ok(v.re)
    }

    /// Mass of the atom at zero: the `s -> inf` limit of the factor. Exactly
    /// zero when the root count exceeds the pole count, otherwise the ratio
    /// of the leading products.
    pub fn atom_at_zero(&self) -> f64 {
        if self.root_set.root_count() > self.root_set.pole_count() {
            return 0.0;
        }
        let mut v = Complex64::new(1.0, 0.0);
        for &(rho, m) in self.root_set.roots() {
            v *= (-rho).powi(m as i32);
        }
        for &(eta, m) in self.root_set.poles() {
            v /= (-eta).powi(m as i32);
        }
        debug_assert!(v.im.abs() <= 1e-12 * (1.0 + v.norm()));
        v.re
    }
}

/// Mass of `P(inf X_{e_alpha} = 0)` read off a factor.
pub fn atom_at_zero(factor: &RationalFactor) -> f64 {
    factor.atom_at_zero()
}

/// Atom at zero plus an Erlang-type mixture density for -inf X:
///
/// ```text
/// f(x) = sum_{j,k} A_{j,k} (-rho_j x)^{k-1} / (k-1)! e^{rho_j x},  x > 0
/// ```
#[derive(Debug, Clone)]
pub struct ExpMixture {
    pub atom0: f64,
    /// (rho_j, k, A_{j,k}) triples; complex entries occur in conjugate pairs
    /// so the density is real.
    pub terms: Vec<(Complex64, usize, Complex64)>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Shared closed-form machinery for exponential-polynomial term lists in the
/// A-convention above.
pub(crate) fn terms_density(terms: &[(Complex64, usize, Complex64)], x: f64) -> f64 {
    let mut v = Complex64::new(0.0, 0.0);
    for &(rho, k, a) in terms {
        v += a * (-rho * x).powi(k as i32 - 1) / factorial(k - 1) * (rho * x).exp();
    }
    v.re
}

/// `int_x^inf e^{-beta z} f(z) dz` for the term list, in closed form via the
/// incomplete-gamma expansion (valid for beta >= 0 since Re rho < 0).
pub(crate) fn terms_tail_transform(
    terms: &[(Complex64, usize, Complex64)],
    beta: f64,
    x: f64,
) -> f64 {
    let mut v = Complex64::new(0.0, 0.0);
    for &(rho, k, a) in terms {
        let cfac = c(beta) - rho;
        let mut inner = Complex64::new(0.0, 0.0);
        for i in 0..k {
            inner += c(x.powi((k - 1 - i) as i32) / factorial(k - 1 - i)) / cfac.powi(i as i32 + 1);
        }
        v += a * (-rho).powi(k as i32 - 1) * (-cfac * x).exp() * inner;
    }
    v.re
}

impl ExpMixture {
    /// Density of -inf X at x > 0.
    pub fn density(&self, x: f64) -> f64 {
        terms_density(&self.terms, x)
    }

    /// `int_x^inf e^{-beta z} f(z) dz` in closed form.
    pub fn tail_transform(&self, beta: f64, x: f64) -> f64 {
        terms_tail_transform(&self.terms, beta, x)
    }

    /// Total mass of the density part.
    pub fn density_mass(&self) -> f64 {
        self.tail_transform(0.0, 0.0)
    }

    /// `P(-inf X <= x)` for x >= 0.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atom0 + self.density_mass() - self.tail_transform(0.0, x)
    }

    /// `E[e^{s inf X}] = atom0 + int_0^inf e^{-s z} f(z) dz`.
    pub fn transform(&self, s: f64) -> f64 {
        self.atom0 + self.tail_transform(s, 0.0)
    }

    /// Checks total mass 1 within `tol`.
    pub fn validate_normalized(&self, tol: f64) -> Result<()> {
        let mass = self.atom0 + self.density_mass();
        if (mass - 1.0).abs() > tol {
            return Err(FluctError::IllConditioned {
                detail: format!("mixture mass {mass} deviates from 1 beyond {tol}"),
            });
        }
        Ok(())
    }

    /// CSV: atom0 on the header row, then one row per term.
    pub fn to_csv(&self) -> String {
        let mut out = format!("atom0,{:.16e}\n", self.atom0);
        out.push_str("re_rho,im_rho,k,re_a,im_a\n");
        for &(rho, k, a) in &self.terms {
            out.push_str(&format!(
                "{:.16e},{:.16e},{k},{:.16e},{:.16e}\n",
                rho.re, rho.im, a.re, a.im
            ));
        }
        out
    }
}

/// Partial-fraction coefficients of `num / prod (s - root)^m` at each listed
/// root: returns (root, k, C_{root,k}) with the convention
/// `num/den = sum C_{root,k} / (s - root)^k`. `num` must be proper.
///
/// The coefficients come from exact synthetic-division Taylor shifts of the
/// numerator and the deflated denominator followed by a power-series
/// division; no numeric differentiation is involved.
pub(crate) fn partial_fraction_coeffs(
    num: &Poly,
    den_roots: &[(Complex64, usize)],
) -> Result<Vec<(Complex64, usize, Complex64)>> {
    let mut out = Vec::new();
    for (j, &(rho, m)) in den_roots.iter().enumerate() {
        let mut deflated = Poly::one();
        for (i, &(other, mo)) in den_roots.iter().enumerate() {
            if i == j {
                continue;
            }
            for _ in 0..mo {
                deflated = deflated.mul(&Poly::new(vec![-other, c(1.0)]));
            }
        }
        let num_taylor = num.taylor_at(rho, m - 1);
        let den_taylor = deflated.taylor_at(rho, m - 1);
        let series = series_div(&num_taylor, &den_taylor, m - 1)?;
        for (i, &b) in series.iter().enumerate() {
            // C_{rho, m-i} is the i-th Taylor coefficient of num/deflated.
            out.push((rho, m - i, b));
        }
    }
    Ok(out)
}

/// Decomposes the factor into the atom at zero plus the mixture density.
pub fn partial_fractions(factor: &RationalFactor) -> Result<ExpMixture> {
    let rs = factor.root_set();
    let scale_kappa = {
        let mut v = Complex64::new(1.0, 0.0);
        for &(rho, m) in rs.roots() {
            v *= (-rho).powi(m as i32);
        }
        for &(eta, m) in rs.poles() {
            v /= (-eta).powi(m as i32);
        }
        v
    };
    let mut num = Poly::constant(scale_kappa);
    for &(eta, m) in rs.poles() {
        for _ in 0..m {
            num = num.mul(&Poly::new(vec![-eta, c(1.0)]));
        }
    }
    let atom0 = factor.atom_at_zero();
    if atom0 != 0.0 {
        // Subtract atom0 * den to leave a proper rational part.
        let mut den = Poly::one();
        for &(rho, m) in rs.roots() {
            for _ in 0..m {
                den = den.mul(&Poly::new(vec![-rho, c(1.0)]));
            }
        }
        num = num.add(&den.scale(c(-atom0)));
    }
    let coeffs = partial_fraction_coeffs(&num, rs.roots())?;
    let mut terms = Vec::new();
    let coeff_scale = coeffs
        .iter()
        .map(|&(_, _, a)| a.norm())
        .fold(1.0_f64, f64::max);
    for (rho, k, cjk) in coeffs {
        if cjk.norm() <= 1e-13 * coeff_scale {
            continue;
        }
        // Density convention carries (-rho x)^{k-1}/(k-1)!; the transform of
        // that term is (-rho)^{k-1}/(s-rho)^k, so A = C / (-rho)^{k-1}.
        let a = cjk / (-rho).powi(k as i32 - 1);
        terms.push((rho, k, a));
    }
    let mixture = ExpMixture { atom0, terms };
    // Reconstruction check on a fixed grid: the decomposition must reproduce
    // the product formula.
    for s in [0.0, 0.3, 0.7, 1.0, 1.5, 2.0, 3.0, 5.0, 8.0, 13.0] {
        let direct = factor.eval_real(s)?;
        let rebuilt = mixture.transform(s);
        if (direct - rebuilt).abs() > 1e-8 * (1.0 + direct.abs()) {
            return Err(FluctError::IllConditioned {
                detail: format!(
                    "partial fractions reconstruction off at s = {s}: {rebuilt} vs {direct}"
                ),
            });
        }
    }
    Ok(mixture)
}

/// Both sides of the factorization identity at real theta: the product
/// `Psi_alpha^+(i theta) Psi_alpha^-(i theta)` and `alpha/(alpha + Psi(theta))`.
///
/// The ascending factor is the infimum factor of the dual model evaluated at
/// `-i theta` (sup X = -inf of the dual).
pub fn wh_factorization_sides(
    model: &LevyModel,
    alpha: f64,
    theta: f64,
) -> Result<(Complex64, Complex64)> {
    if alpha <= 0.0 {
        return Err(FluctError::validation("alpha", "discount must be > 0"));
    }
    let minus = minus_factor(phase_type_roots(model, alpha)?);
    let plus = minus_factor(phase_type_roots(&model.dual(), alpha)?);
    let itheta = Complex64::new(0.0, theta);
    let lhs = plus.eval(-itheta)? * minus.eval(itheta)?;
    let psi = model.char_exponent(c(theta))?;
    let rhs = c(alpha) / (c(alpha) + psi);
    Ok((lhs, rhs))
}

/// |Psi_alpha^+(i theta) Psi_alpha^-(i theta) - alpha / (alpha + Psi(theta))|.
pub fn wh_factorization_check(model: &LevyModel, alpha: f64, theta: f64) -> Result<f64> {
    let (lhs, rhs) = wh_factorization_sides(model, alpha, theta)?;
    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{JumpComponent, PhaseType};
    use crate::quad::integrate;

    fn bm() -> LevyModel {
        LevyModel::brownian(2.0, 0.0).unwrap()
    }

    fn bm_exp_down() -> LevyModel {
        LevyModel::new(
            2.0,
            0.0,
            None,
            Some(JumpComponent::new(1.0, PhaseType::exponential(1.0).unwrap()).unwrap()),
        )
        .unwrap()
    }

    fn bv_drift_up() -> LevyModel {
        LevyModel::new(
            0.0,
            1.0,
            None,
            Some(JumpComponent::new(1.0, PhaseType::exponential(1.0).unwrap()).unwrap()),
        )
        .unwrap()
    }

    #[test]
    fn root_counts_for_reference_models() {
        // Cubic numerator: two left roots, one pole.
        let rs = phase_type_roots(&bm_exp_down(), 1.0).unwrap();
        assert_eq!(rs.root_count(), 2);
        assert_eq!(rs.pole_count(), 1);
        // Pure Gaussian: single left root, no poles.
        let rs = phase_type_roots(&bm(), 1.0).unwrap();
        assert_eq!(rs.root_count(), 1);
        assert_eq!(rs.pole_count(), 0);
        assert!((rs.roots()[0].0 - Complex64::new(-1.0, 0.0)).norm() < 1e-10);
    }

    #[test]
    fn bounded_variation_roots_match_quadratic() {
        // drift 1, Exp(1) down at alpha = 2: s^2 - 2s - 2 = 0, left root 1 - sqrt(3).
        let rs = phase_type_roots(&bv_drift_up(), 2.0).unwrap();
        assert_eq!(rs.root_count(), 1);
        assert_eq!(rs.pole_count(), 1);
        let expected = 1.0 - 3.0_f64.sqrt();
        assert!((rs.roots()[0].0.re - expected).abs() < 1e-12);
    }

    #[test]
    fn factor_is_one_at_zero_and_in_unit_interval() {
        for model in [bm(), bm_exp_down(), bv_drift_up()] {
            let f = minus_factor(phase_type_roots(&model, 1.5).unwrap());
            assert_eq!(f.eval_real(0.0).unwrap(), 1.0);
            for s in [0.2, 1.0, 4.0, 25.0] {
                let v = f.eval_real(s).unwrap();
                assert!(v > 0.0 && v <= 1.0, "factor {v} at s={s}");
            }
        }
    }

    #[test]
    fn atom_matches_closed_form_for_bv_model() {
        // alpha = 2: atom = sqrt(3) - 1 = 2 / (1 + sqrt(3)).
        let f = minus_factor(phase_type_roots(&bv_drift_up(), 2.0).unwrap());
        let expected = 3.0_f64.sqrt() - 1.0;
        assert!((f.atom_at_zero() - expected).abs() < 1e-12);
        assert!((expected - 2.0 / (1.0 + 3.0_f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn atom_is_exactly_zero_with_gaussian_part() {
        let f = minus_factor(phase_type_roots(&bm_exp_down(), 2.0).unwrap());
        assert_eq!(f.atom_at_zero(), 0.0);
    }

    #[test]
    fn atom_is_zero_for_negative_drift_bv() {
        let m = LevyModel::new(
            0.0,
            -1.0,
            None,
            Some(JumpComponent::new(1.0, PhaseType::exponential(1.0).unwrap()).unwrap()),
        )
        .unwrap();
        let f = minus_factor(phase_type_roots(&m, 1.0).unwrap());
        assert_eq!(f.atom_at_zero(), 0.0);
    }

    #[test]
    fn exponential_factor_decomposes_to_single_term() {
        // Pure Brownian, alpha = 1: -inf ~ Exp(1).
        let f = minus_factor(phase_type_roots(&bm(), 1.0).unwrap());
        let mix = partial_fractions(&f).unwrap();
        assert_eq!(mix.atom0, 0.0);
        assert_eq!(mix.terms.len(), 1);
        let (rho, k, a) = mix.terms[0];
        assert!((rho - Complex64::new(-1.0, 0.0)).norm() < 1e-10);
        assert_eq!(k, 1);
        assert!((a - Complex64::new(1.0, 0.0)).norm() < 1e-10);
        mix.validate_normalized(1e-10).unwrap();
    }

    #[test]
    fn mixture_mass_plus_atom_is_one() {
        for (model, alpha) in [(bm_exp_down(), 1.0), (bv_drift_up(), 2.0), (bm(), 0.7)] {
            let f = minus_factor(phase_type_roots(&model, alpha).unwrap());
            let mix = partial_fractions(&f).unwrap();
            mix.validate_normalized(1e-8).unwrap();
            // Independent quadrature of the density.
            let mass = integrate(&|x| mix.density(x), 0.0, 80.0, 1e-10);
            assert!((mix.atom0 + mass - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn factor_matches_quadrature_of_mixture() {
        let f = minus_factor(phase_type_roots(&bm_exp_down(), 1.0).unwrap());
        let mix = partial_fractions(&f).unwrap();
        for s in [1.0, 2.0, 5.0] {
            let direct = f.eval_real(s).unwrap();
            let quad =
                mix.atom0 + integrate(&|x| (-s * x).exp() * mix.density(x), 0.0, 80.0, 1e-11);
            assert!((direct - quad).abs() < 1e-6, "s={s}: {direct} vs {quad}");
        }
    }

    #[test]
    fn density_is_real_and_nonnegative_on_grid() {
        let f = minus_factor(phase_type_roots(&bm_exp_down(), 1.0).unwrap());
        let mix = partial_fractions(&f).unwrap();
        for i in 0..200 {
            let x = 0.05 * (i as f64 + 0.5);
            assert!(mix.density(x) >= -1e-10, "density at {x}");
        }
    }

    #[test]
    fn factorization_identity_pure_brownian_is_exact() {
        for theta in [0.5, 1.0, 2.0, 5.0] {
            let r = wh_factorization_check(&bm(), 1.0, theta).unwrap();
            assert!(r < 1e-12, "residual {r} at theta={theta}");
            let r = wh_factorization_check(&bm(), 1.0, -theta).unwrap();
            assert!(r < 1e-12);
        }
        assert!(wh_factorization_check(&bm(), 1.0, 0.0).unwrap() < 1e-14);
    }

    #[test]
    fn factorization_identity_two_sided() {
        let m = LevyModel::new(
            1.0,
            -0.2,
            Some(JumpComponent::new(0.6, PhaseType::exponential(2.0).unwrap()).unwrap()),
            Some(JumpComponent::new(1.0, PhaseType::erlang(2, 2.0).unwrap()).unwrap()),
        )
        .unwrap();
        for theta in [0.5, 1.0, 2.0] {
            let r = wh_factorization_check(&m, 1.0, theta).unwrap();
            assert!(r < 1e-8, "residual {r} at theta={theta}");
        }
    }

    #[test]
    fn subordinator_factor_is_identity() {
        let m = LevyModel::new(
            0.0,
            0.0,
            Some(JumpComponent::new(1.5, PhaseType::exponential(2.0).unwrap()).unwrap()),
            None,
        )
        .unwrap();
        let rs = phase_type_roots(&m, 1.0).unwrap();
        assert_eq!(rs.root_count(), 0);
        assert_eq!(rs.pole_count(), 0);
        let f = minus_factor(rs);
        assert_eq!(f.eval_real(3.0).unwrap(), 1.0);
        assert_eq!(f.atom_at_zero(), 1.0);
    }

    #[test]
    fn csv_emitters_have_expected_shape() {
        let rs = phase_type_roots(&bv_drift_up(), 2.0).unwrap();
        let csv = rs.to_csv();
        assert!(csv.starts_with("re,im,multiplicity,kind\n"));
        assert!(csv.contains(",root\n"));
        assert!(csv.contains(",pole\n"));
        let mix = partial_fractions(&minus_factor(rs)).unwrap();
        let csv = mix.to_csv();
        assert!(csv.starts_with("atom0,"));
        assert!(csv.contains("re_rho,im_rho,k,re_a,im_a\n"));
    }

    #[test]
    fn erlang_down_produces_conjugate_pair() {
        // Gaussian plus Erlang(2) downward jumps: the cleared quartic has a
        // complex conjugate pair among its three left-half-plane roots.
        let m = LevyModel::new(
            1.0,
            0.0,
            None,
            Some(JumpComponent::new(1.0, PhaseType::erlang(2, 2.0).unwrap()).unwrap()),
        )
        .unwrap();
        let rs = phase_type_roots(&m, 1.0).unwrap();
        assert_eq!(rs.root_count(), 3);
        let complex_roots: Vec<_> = rs.roots().iter().filter(|(z, _)| z.im != 0.0).collect();
        assert_eq!(complex_roots.len(), 2, "roots {:?}", rs.roots());
        assert_eq!(complex_roots[0].0, complex_roots[1].0.conj());
        // Density stays real and the mixture still normalizes.
        let mix = partial_fractions(&minus_factor(rs)).unwrap();
        mix.validate_normalized(1e-8).unwrap();
        for i in 1..100 {
            let x = 0.1 * i as f64;
            assert!(mix.density(x) >= -1e-10);
        }
    }

    #[test]
    fn repeated_root_residues_match_derivative_formula() {
        // A double root: R(s) = (-rho)^2 (s - eta) / ((-eta)(s - rho)^2).
        // The deflation route must agree with the residue derivative
        // formula: with g(s) = R(s)(s - rho)^2,
        //   A_{1,2} = g(rho)/(-rho)   and   A_{1,1} = g'(rho).
        let rho = Complex64::new(-1.0, 0.0);
        let eta = Complex64::new(-2.0, 0.0);
        let rs = RootSet::new(vec![(rho, 2)], vec![(eta, 1)], 1, AXIS_TOL).unwrap();
        let f = minus_factor(rs);
        let mix = partial_fractions(&f).unwrap();
        mix.validate_normalized(1e-10).unwrap();
        let g = |s: Complex64| {
            f.eval(s).unwrap() * (s - rho) * (s - rho)
        };
        let h = 1e-5;
        let hc = Complex64::new(h, 0.0);
        let g_at = (g(rho + hc) + g(rho - hc)) * Complex64::new(0.5, 0.0);
        let dg = (g(rho + hc) - g(rho - hc)) / Complex64::new(2.0 * h, 0.0);
        let a2 = mix
            .terms
            .iter()
            .find(|&&(_, k, _)| k == 2)
            .map(|&(_, _, a)| a)
            .expect("k = 2 term");
        let a1 = mix
            .terms
            .iter()
            .find(|&&(_, k, _)| k == 1)
            .map(|&(_, _, a)| a)
            .expect("k = 1 term");
        assert!((a2 - g_at / (-rho)).norm() < 1e-8, "A2 {a2} vs {}", g_at / (-rho));
        assert!((a1 - dg).norm() < 1e-8, "A1 {a1} vs {dg}");
    }

    #[test]
    fn near_repeated_roots_are_merged_before_residues() {
        // Two roots 1e-8 apart cluster into one double root.
        let a = Complex64::new(-1.0 - 5e-9, 0.0);
        let b = Complex64::new(-1.0 + 5e-9, 0.0);
        let clusters = crate::poly::cluster_roots(&[a, b], crate::poly::ROOT_CLUSTER_TOL);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].1, 2);
        assert!((clusters[0].0 - Complex64::new(-1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn equal_counts_double_root_atom() {
        // roots (-1) x2, poles (-2) x2: atom = prod(-rho)/prod(-eta) = 1/4.
        let rs = RootSet::new(
            vec![(Complex64::new(-1.0, 0.0), 2)],
            vec![(Complex64::new(-2.0, 0.0), 2)],
            0,
            AXIS_TOL,
        )
        .unwrap();
        let f = minus_factor(rs);
        assert!((f.atom_at_zero() - 0.25).abs() < 1e-14);
        let mix = partial_fractions(&f).unwrap();
        assert!((mix.atom0 - 0.25).abs() < 1e-14);
        mix.validate_normalized(1e-10).unwrap();
    }

    #[test]
    fn count_mismatch_is_loud() {
        let err = RootSet::new(
            vec![(Complex64::new(-1.0, 0.0), 1)],
            vec![],
            0,
            AXIS_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, FluctError::RootCountMismatch { .. }));
    }
}
