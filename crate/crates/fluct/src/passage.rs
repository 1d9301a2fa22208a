//! First-passage and overshoot transforms.
//!
//! Passage times are strict: `tau_x^+ = inf{t : X_t > x}` and
//! `tau_x^- = inf{t : X_t < x}`. A continuous crossing lands exactly on the
//! barrier (zero overshoot); a jump crossing carries a phase-type overshoot.
//! Downward transforms are assembled canonically from the infimum mixture:
//!
//! ```text
//! E[e^{-a tau_{-x}^- + b X_tau} 1] = E[e^{b inf X} 1(-inf X > x)]
//!                                    -------------------------------
//!                                    E[e^{b inf X}]
//! ```
//!
//! with the strict inequality mattering only at x = 0, where it excludes the
//! atom (so irregular models show a gap of atom0 / transform there).

use num_complex::Complex64;

use crate::error::{FluctError, Result};
use crate::models::LevyModel;
use crate::montecarlo::{
    estimate_passage, sample_sup_and_endpoint, Direction, Estimate, SimConfig,
};
use crate::wiener_hopf::{
    self, minus_factor, partial_fractions, phase_type_roots, phi_of_alpha,
    resolvent::resolvent_measure, scale_function, ExpMixture,
};

/// A discounted overshoot query: discount `alpha`, overshoot exponent
/// `beta`, barrier offset `level` (upward queries cross above `+level`,
/// downward queries cross below `-level`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PassageQuery {
    pub alpha: f64,
    pub beta: f64,
    pub level: f64,
}

impl PassageQuery {
    pub fn new(alpha: f64, beta: f64, level: f64) -> Result<Self> {
        if !(alpha >= 0.0) {
            return Err(FluctError::validation("alpha", "discount must be >= 0"));
        }
        if !(beta >= 0.0) {
            return Err(FluctError::validation(
                "beta",
                "overshoot exponent must be >= 0",
            ));
        }
        Ok(PassageQuery { alpha, beta, level })
    }
}

/// Result of a downward transform; `degenerate` flags models with no
/// downward movement at all (the value is then identically zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DownPassage {
    pub value: f64,
    pub degenerate: bool,
}

/// The infimum mixture used by downward transforms: the scale-function route
/// for spectrally negative models (so cross-checks against the root route
/// stay independent), the root/residue route otherwise. `alpha = 0` always
/// uses the root route on the zero-discount root set.
pub(crate) fn inf_mixture(model: &LevyModel, alpha: f64) -> Result<ExpMixture> {
    if alpha > 0.0 && model.spectrally_negative() && !model.is_negative_subordinator() {
        wiener_hopf::inf_law_spectrally_negative(model, alpha)
    } else {
        partial_fractions(&minus_factor(phase_type_roots(model, alpha)?))
    }
}

/// `E[e^{-alpha tau_x^+ - beta X_tau} 1(tau_x^+ < inf)]` in closed form.
///
/// Supported classes: spectrally negative models (creeping passage,
/// `e^{-(phi(alpha)+beta) x}`) and subordinators (via the discounted
/// occupation measure). Anything else must go through the Monte Carlo
/// estimator.
pub fn up_passage_transform(model: &LevyModel, q: &PassageQuery) -> Result<f64> {
    let x = q.level;
    if x < 0.0 {
        return Err(FluctError::validation("level", "upward barrier needs x >= 0"));
    }
    if model.is_negative_subordinator() {
        // Nonincreasing paths never pass strictly above their start.
        return Ok(0.0);
    }
    if model.spectrally_negative() {
        let phi = phi_of_alpha(model, q.alpha)?;
        return Ok((-(phi + q.beta) * x).exp());
    }
    if model.is_subordinator() {
        if q.alpha == 0.0 && q.beta == 0.0 {
            return Ok(1.0);
        }
        let u = resolvent_measure(model, q.alpha)?;
        let phi_beta = -model.cumulant_real(-q.beta)?;
        // Strict passage: the open interval (x, inf) never includes the atom
        // at the origin.
        return Ok((q.alpha + phi_beta) * u.tail_transform(q.beta, x));
    }
    Err(FluctError::ModelClass {
        expected: "spectrally negative model or subordinator",
        detail: "two-sided models have no closed-form upward transform here; \
                 use the Monte Carlo passage estimator"
            .into(),
    })
}

/// `E[e^{-alpha tau_{-x}^- + beta X_tau} 1(tau_{-x}^- < inf)]` from the
/// infimum mixture. `alpha = 0` requires positive mean.
pub fn down_passage_transform(model: &LevyModel, q: &PassageQuery) -> Result<DownPassage> {
    let x = q.level;
    if x < 0.0 {
        return Err(FluctError::validation("level", "barrier depth needs x >= 0"));
    }
    if !model.has_downward_movement() {
        return Ok(DownPassage {
            value: 0.0,
            degenerate: true,
        });
    }
    if q.alpha == 0.0 && model.mean() <= 0.0 {
        return Err(FluctError::UnsupportedLimit {
            detail: "alpha = 0 downward transforms need E[X_1] > 0".into(),
        });
    }
    let mix = inf_mixture(model, q.alpha)?;
    let denom = mix.transform(q.beta);
    let numer = if x == 0.0 {
        denom - mix.atom0
    } else {
        mix.tail_transform(q.beta, x)
    };
    Ok(DownPassage {
        value: numer / denom,
        degenerate: false,
    })
}

/// Comparison harness output for the printed spectrally negative downward
/// formula against the canonical mixture evaluation.
#[derive(Debug, Clone, Copy)]
pub struct SnPrintedComparison {
    pub printed: f64,
    pub canonical: f64,
    pub abs_gap: f64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Evaluates the scale-function form
///
/// ```text
/// (psi(beta) - alpha) int_x^inf e^{-beta y} W(y) dy
///   - (alpha - psi(beta))/(phi(alpha) - beta) e^{-beta x} W(x)
/// ```
///
/// termwise on the exponential-sum scale representation (the integral
/// converges for beta > phi(alpha); beta = phi(alpha) is a removable
/// singularity handled by the psi'(phi) limit) and reports it against the
/// canonical depth-x mixture value. The two agree on every supported model,
/// which pins the formula to the start-0 / barrier -x convention.
pub fn down_passage_sn_printed(model: &LevyModel, q: &PassageQuery) -> Result<SnPrintedComparison> {
    let (alpha, beta, x) = (q.alpha, q.beta, q.level);
    let phi = phi_of_alpha(model, alpha)?;
    if beta < phi - 1e-9 {
        return Err(FluctError::DivergentIntegral { beta, phi });
    }
    let w = scale_function(model, alpha)?;
    let psi_beta = model.cumulant_real(beta)?;
    let mut first = 0.0;
    for t in &w.terms {
        let c = Complex64::new(beta, 0.0) - t.zeta;
        if c.norm() < 1e-9 {
            // beta == phi on the dominant simple root: (psi(beta) - alpha)/c
            // tends to psi'(phi), so the product has a finite limit.
            first += (t.coeff * model.cumulant_deriv_real(phi)?).re * (-(beta - phi) * x).exp();
            continue;
        }
        let mut inner = Complex64::new(0.0, 0.0);
        for i in 0..t.k {
            let p = t.k - 1 - i;
            inner += Complex64::new(x.powi(p as i32) / factorial(p), 0.0) / c.powi(i as i32 + 1);
        }
        first += (psi_beta - alpha) * (t.coeff * (-c * x).exp() * inner).re;
    }
    let second = if (phi - beta).abs() < 1e-9 {
        -model.cumulant_deriv_real(phi)? * (-beta * x).exp() * w.eval(x)
    } else {
        -(alpha - psi_beta) / (phi - beta) * (-beta * x).exp() * w.eval(x)
    };
    let printed = first + second;
    let canonical = down_passage_transform(model, q)?.value;
    Ok(SnPrintedComparison {
        printed,
        canonical,
        abs_gap: (printed - canonical).abs(),
    })
}

/// Residual of the Laplace-transformed upward identity for spectrally
/// negative models: both sides reduce to `1/(q + phi(alpha))`.
///
/// LHS: `int_0^inf e^{-qx} E[e^{-alpha tau_x^+ - beta (X_tau - x)}] dx`,
/// closed because the passage creeps; RHS is
/// `(1 - Psi_alpha^+(-q)/Psi_alpha^+(-beta)) / (q - beta)` with
/// `Psi_alpha^+(-q) = phi/(phi + q)`.
pub fn pecherskii_rogozin_check(
    model: &LevyModel,
    alpha: f64,
    beta: f64,
    q_transform: f64,
) -> Result<f64> {
    if !(q_transform > 0.0) {
        return Err(FluctError::validation("q", "transform argument must be > 0"));
    }
    let phi = phi_of_alpha(model, alpha)?;
    let lhs = 1.0 / (q_transform + phi);
    let rhs = if (q_transform - beta).abs() < 1e-9 {
        // Removable singularity at q = beta.
        1.0 / (phi + q_transform)
    } else {
        let plus_q = phi / (phi + q_transform);
        let plus_beta = phi / (phi + beta);
        (1.0 - plus_q / plus_beta) / (q_transform - beta)
    };
    Ok((lhs - rhs).abs())
}

/// Subordinator version of the transformed upward identity: the closed form
/// `(phi(q) - phi(beta)) / ((q - beta)(alpha + phi(q)))` against the
/// termwise transform of the occupation-measure formula.
pub fn pecherskii_rogozin_subordinator_check(
    model: &LevyModel,
    alpha: f64,
    beta: f64,
    q_transform: f64,
) -> Result<f64> {
    if !model.is_subordinator() {
        return Err(FluctError::ModelClass {
            expected: "subordinator",
            detail: "this identity variant integrates the occupation measure".into(),
        });
    }
    if !(alpha > 0.0) {
        return Err(FluctError::validation("alpha", "needs alpha > 0"));
    }
    let q = q_transform;
    let phi_q = -model.cumulant_real(-q)?;
    let phi_b = -model.cumulant_real(-beta)?;
    let closed = if (q - beta).abs() < 1e-9 {
        model.cumulant_deriv_real(-beta)? / (alpha + phi_b)
    } else {
        (phi_q - phi_b) / ((q - beta) * (alpha + phi_q))
    };
    // LHS: integrate e^{-(q-beta)x} against the occupation-measure transform
    // of the overshoot, term by term: int_0^inf e^{-(q-zeta)x} x^p dx = p!/(q-zeta)^{p+1}.
    let u = resolvent_measure(model, alpha)?;
    let mut lhs = 0.0;
    for &(zeta, k, a) in &u.terms {
        let c = Complex64::new(beta, 0.0) - zeta;
        let s = Complex64::new(q, 0.0) - zeta;
        let mut term = Complex64::new(0.0, 0.0);
        for i in 0..k {
            let p = (k - 1 - i) as i32;
            term += Complex64::new(1.0, 0.0) / (s.powi(p + 1) * c.powi(i as i32 + 1));
        }
        lhs += (a * (-zeta).powi(k as i32 - 1) * term).re;
    }
    lhs *= alpha + phi_b;
    Ok((lhs - closed).abs())
}

/// `h_{alpha,beta}(x) = E_x[e^{-alpha tau_0^- + beta X_tau}]`: exactly
/// `e^{beta x}` at or below the barrier, and `e^{beta x}` times the depth-x
/// downward transform above it.
pub fn h_alpha_beta(model: &LevyModel, alpha: f64, beta: f64, x: f64) -> Result<f64> {
    if x <= 0.0 {
        return Ok((beta * x).exp());
    }
    let q = PassageQuery::new(alpha, beta, x)?;
    Ok((beta * x).exp() * down_passage_transform(model, &q)?.value)
}

/// Monte Carlo check of the supremum fluctuation identity: the left side is
/// the passage estimator, the right side the ratio
/// `E[e^{-beta sup} 1(sup > x)] / E[e^{-beta sup}]` sampled at the killing
/// time, with a delta-method standard error for the ratio.
#[derive(Debug, Clone, Copy)]
pub struct FluctuationCheck {
    pub lhs: Estimate,
    pub rhs: Estimate,
    pub z_score: f64,
}

pub fn fluctuation_identity_check(
    model: &LevyModel,
    alpha: f64,
    beta: f64,
    x: f64,
    cfg: &SimConfig,
) -> Result<FluctuationCheck> {
    if !(alpha > 0.0) {
        return Err(FluctError::validation("alpha", "the check needs alpha > 0"));
    }
    let lhs = estimate_passage(model, alpha, beta, x, Direction::Up, cfg)?;
    let sups = sample_sup_and_endpoint(model, alpha, cfg)?;
    let n = sups.len() as f64;
    let (mut sn, mut sd, mut snn, mut sdd, mut snd) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(sup, _) in &sups {
        let d = (-beta * sup).exp();
        let nu = if sup > x { d } else { 0.0 };
        sn += nu;
        sd += d;
        snn += nu * nu;
        sdd += d * d;
        snd += nu * d;
    }
    let mean_n = sn / n;
    let mean_d = sd / n;
    let ratio = mean_n / mean_d;
    let var_n = (snn / n - mean_n * mean_n).max(0.0);
    let var_d = (sdd / n - mean_d * mean_d).max(0.0);
    let cov = snd / n - mean_n * mean_d;
    let var_ratio =
        ((var_n - 2.0 * ratio * cov + ratio * ratio * var_d) / (mean_d * mean_d)).max(0.0);
    let rhs = Estimate {
        mean: ratio,
        std_error: (var_ratio / n).sqrt(),
        n: sups.len() as u64,
    };
    let z = (lhs.mean - rhs.mean).abs()
        / (lhs.std_error.powi(2) + rhs.std_error.powi(2))
            .sqrt()
            .max(f64::MIN_POSITIVE);
    Ok(FluctuationCheck {
        lhs,
        rhs,
        z_score: z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{JumpComponent, PhaseType};

    fn bm() -> LevyModel {
        LevyModel::brownian(2.0, 0.0).unwrap()
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

    fn subordinator() -> LevyModel {
        LevyModel::new(
            0.0,
            0.0,
            Some(JumpComponent::new(1.5, PhaseType::exponential(2.0).unwrap()).unwrap()),
            None,
        )
        .unwrap()
    }

    #[test]
    fn brownian_up_passage_closed_form() {
        let q = PassageQuery::new(1.0, 0.0, 1.0).unwrap();
        let v = up_passage_transform(&bm(), &q).unwrap();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn up_passage_at_zero_barrier_is_one() {
        for model in [bm(), bv_drift_up()] {
            let q = PassageQuery::new(1.0, 0.0, 0.0).unwrap();
            assert_eq!(up_passage_transform(&model, &q).unwrap(), 1.0);
        }
    }

    #[test]
    fn subordinator_overshoot_memorylessness() {
        // Exp(eta) jumps, zero drift: the overshoot beyond x is Exp(eta) and
        // independent of tau, so the transform factorizes as
        // e^{-beta x} * eta/(eta+beta) times the beta = 0 one.
        let m = subordinator();
        let eta = 2.0;
        for (alpha, x) in [(1.0, 0.5), (0.7, 1.5)] {
            let beta = 1.3;
            let with_beta =
                up_passage_transform(&m, &PassageQuery::new(alpha, beta, x).unwrap()).unwrap();
            let base =
                up_passage_transform(&m, &PassageQuery::new(alpha, 0.0, x).unwrap()).unwrap();
            let predicted = (-beta * x).exp() * eta / (eta + beta) * base;
            assert!(
                (with_beta - predicted).abs() < 1e-12,
                "alpha={alpha} x={x}: {with_beta} vs {predicted}"
            );
        }
    }

    #[test]
    fn subordinator_zero_barrier_waits_for_first_jump() {
        // Zero drift: tau_0^+ is the first jump, Exp(rate); transform is
        // rate/(rate+alpha) times the jump-size transform.
        let m = subordinator();
        let q = PassageQuery::new(1.0, 0.0, 0.0).unwrap();
        let v = up_passage_transform(&m, &q).unwrap();
        assert!((v - 1.5 / 2.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn two_sided_upward_transform_is_routed_to_mc() {
        let m = LevyModel::new(
            1.0,
            0.0,
            Some(JumpComponent::new(1.0, PhaseType::exponential(1.0).unwrap()).unwrap()),
            Some(JumpComponent::new(1.0, PhaseType::exponential(1.0).unwrap()).unwrap()),
        )
        .unwrap();
        let q = PassageQuery::new(1.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            up_passage_transform(&m, &q),
            Err(FluctError::ModelClass { .. })
        ));
    }

    #[test]
    fn brownian_down_passage_symmetry() {
        let q = PassageQuery::new(1.0, 0.0, 1.0).unwrap();
        let v = down_passage_transform(&bm(), &q).unwrap();
        assert!(!v.degenerate);
        assert!((v.value - (-1.0_f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn regular_model_passes_zero_barrier_immediately() {
        let q = PassageQuery::new(1.0, 0.7, 0.0).unwrap();
        let v = down_passage_transform(&bm(), &q).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn irregular_gap_at_zero_matches_atom() {
        let m = bv_drift_up();
        let q = PassageQuery::new(2.0, 0.0, 0.0).unwrap();
        let v = down_passage_transform(&m, &q).unwrap();
        let atom = 3.0_f64.sqrt() - 1.0;
        // beta = 0: the transform denominator is 1, so the gap is atom0.
        assert!((v.value - (1.0 - atom)).abs() < 1e-12);
    }

    #[test]
    fn no_downward_movement_is_flagged() {
        let q = PassageQuery::new(1.0, 0.0, 1.0).unwrap();
        let v = down_passage_transform(&subordinator(), &q).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn printed_sn_formula_matches_depth_convention() {
        // Closed-form case: sigma2 = 2, alpha = 1, beta = 2, x = 1 gives
        // e^{-3} from W = sinh.
        let q = PassageQuery::new(1.0, 2.0, 1.0).unwrap();
        let cmp = down_passage_sn_printed(&bm(), &q).unwrap();
        assert!((cmp.printed - (-3.0_f64).exp()).abs() < 1e-10, "{cmp:?}");
        assert!(cmp.abs_gap < 1e-10, "{cmp:?}");
        // And on the bounded-variation model.
        let q = PassageQuery::new(2.0, 4.0, 0.7).unwrap();
        let cmp = down_passage_sn_printed(&bv_drift_up(), &q).unwrap();
        assert!(cmp.abs_gap < 1e-9, "{cmp:?}");
    }

    #[test]
    fn printed_sn_formula_rejects_divergent_beta() {
        let q = PassageQuery::new(1.0, 0.5, 1.0).unwrap();
        assert!(matches!(
            down_passage_sn_printed(&bm(), &q),
            Err(FluctError::DivergentIntegral { .. })
        ));
    }

    #[test]
    fn printed_sn_formula_beta_large_decays() {
        let q = PassageQuery::new(1.0, 60.0, 1.0).unwrap();
        let cmp = down_passage_sn_printed(&bm(), &q).unwrap();
        assert!(cmp.printed.abs() < 1e-10);
        assert!(cmp.canonical.abs() < 1e-10);
    }

    #[test]
    fn pecherskii_rogozin_brownian_hand_value() {
        // alpha = 1, beta = 0, q = 1: both sides 1/2.
        let resid = pecherskii_rogozin_check(&bm(), 1.0, 0.0, 1.0).unwrap();
        assert!(resid < 1e-14);
        let phi = phi_of_alpha(&bm(), 1.0).unwrap();
        assert!((1.0 / (1.0 + phi) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn pecherskii_rogozin_removable_singularity() {
        let resid = pecherskii_rogozin_check(&bm(), 1.0, 0.7, 0.7).unwrap();
        assert!(resid < 1e-12);
    }

    #[test]
    fn pecherskii_rogozin_subordinator_identity() {
        let m = subordinator();
        for (alpha, beta, q) in [(1.0, 0.0, 1.0), (0.8, 0.5, 2.0), (2.0, 1.0, 3.0)] {
            let resid = pecherskii_rogozin_subordinator_check(&m, alpha, beta, q).unwrap();
            assert!(resid < 1e-10, "({alpha},{beta},{q}): {resid}");
        }
    }

    #[test]
    fn h_function_below_barrier_is_exponential() {
        assert!((h_alpha_beta(&bm(), 1.0, 1.0, -1.0).unwrap() - (-1.0_f64).exp()).abs() < 1e-15);
        assert_eq!(h_alpha_beta(&bm(), 1.0, 0.5, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn h_function_above_barrier_matches_depth_transform() {
        let v = h_alpha_beta(&bm(), 1.0, 0.0, 1.0).unwrap();
        assert!((v - (-1.0_f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn monotonicity_in_level_alpha_beta() {
        let m = bv_drift_up();
        let mut prev = f64::INFINITY;
        for x in [0.0, 0.5, 1.0, 2.0] {
            let v = down_passage_transform(&m, &PassageQuery::new(1.0, 0.5, x).unwrap())
                .unwrap()
                .value;
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for alpha in [0.5, 1.0, 2.0] {
            let v = down_passage_transform(&m, &PassageQuery::new(alpha, 0.5, 1.0).unwrap())
                .unwrap()
                .value;
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        let mut prev = f64::INFINITY;
        for beta in [0.0, 0.5, 2.0] {
            let v = down_passage_transform(&m, &PassageQuery::new(1.0, beta, 1.0).unwrap())
                .unwrap()
                .value;
            assert!(v <= prev + 1e-12);
            prev = v;
        }
    }

    #[test]
    fn fluctuation_identity_holds_within_monte_carlo_error() {
        let cfg = SimConfig {
            n_paths: 20_000,
            seed: 11,
            shards: 4,
            r0_horizon_epsilon: 1e-6,
        };
        let m = LevyModel::new(
            1.0,
            -0.2,
            Some(JumpComponent::new(0.6, PhaseType::exponential(2.0).unwrap()).unwrap()),
            Some(JumpComponent::new(1.0, PhaseType::erlang(2, 2.0).unwrap()).unwrap()),
        )
        .unwrap();
        let check = fluctuation_identity_check(&m, 1.0, 0.5, 0.7, &cfg).unwrap();
        assert!(check.z_score < 3.0, "{check:?}");
        // beta = 0 reduces to P(sup > x) vs E[e^{-alpha tau_x^+}].
        let check = fluctuation_identity_check(&m, 1.0, 0.0, 0.7, &cfg).unwrap();
        assert!(check.z_score < 3.0, "{check:?}");
    }

    #[test]
    fn fluctuation_identity_at_zero_barrier_upward_regular() {
        let cfg = SimConfig {
            n_paths: 5_000,
            seed: 3,
            shards: 2,
            r0_horizon_epsilon: 1e-6,
        };
        let check = fluctuation_identity_check(&bm(), 1.0, 0.0, 0.0, &cfg).unwrap();
        assert_eq!(check.lhs.mean, 1.0);
        assert_eq!(check.rhs.mean, 1.0);
    }
}
