//! Property tests over randomized models: structural invariants that must
//! hold for any member of the family, not just the named fleet.

use num_complex::Complex64;
use proptest::prelude::*;

use fluct::models::{classify_regularity, JumpComponent, LevyModel, PhaseType, Regularity};
use fluct::wiener_hopf::{
    minus_factor, partial_fractions, phase_type_roots, wh_factorization_check,
};

fn arb_phase_type() -> impl Strategy<Value = PhaseType> {
    // Hyperexponential or Erlang-with-escape structures, small and
    // well-conditioned.
    prop_oneof![
        (0.05f64..0.95, 0.2f64..4.0, 0.2f64..4.0).prop_map(|(w, r1, r2)| {
            PhaseType::hyperexponential(&[w, 1.0 - w], &[r1, r2]).unwrap()
        }),
        (1usize..=3, 0.3f64..4.0).prop_map(|(k, r)| PhaseType::erlang(k, r).unwrap()),
    ]
}

fn arb_model() -> impl Strategy<Value = LevyModel> {
    (
        prop_oneof![Just(0.0f64), 0.2f64..2.0],
        -1.0f64..1.5,
        proptest::option::of((0.2f64..1.5, arb_phase_type())),
        proptest::option::of((0.2f64..1.5, arb_phase_type())),
    )
        .prop_filter_map("non-degenerate", |(g, d, up, down)| {
            let up = up.map(|(r, pt)| JumpComponent::new(r, pt).unwrap());
            let down = down.map(|(r, pt)| JumpComponent::new(r, pt).unwrap());
            LevyModel::new(g, d, up, down).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn char_exponent_is_hermitian_and_contractive(model in arb_model(), theta in 0.05f64..6.0) {
        let plus = model.char_exponent(Complex64::new(theta, 0.0)).unwrap();
        let minus = model.char_exponent(Complex64::new(-theta, 0.0)).unwrap();
        let scale = 1.0 + plus.norm();
        prop_assert!((minus - plus.conj()).norm() < 1e-10 * scale);
        // |E[e^{i theta X_1}]| <= 1 means Re Psi >= 0.
        prop_assert!(plus.re >= -1e-12 * scale);
        prop_assert!(model.char_exponent(Complex64::new(0.0, 0.0)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn laplace_exponent_shares_the_char_exponent_path(model in arb_model(), s in 0.1f64..3.0) {
        prop_assume!(model.spectrally_negative());
        let via_complex = model.laplace_exponent(Complex64::new(s, 0.0)).unwrap();
        let via_real = model.cumulant_real(s).unwrap();
        prop_assert!((via_complex - Complex64::new(via_real, 0.0)).norm()
            <= 1e-12 * (1.0 + via_real.abs()));
    }

    #[test]
    fn factor_is_a_transform_of_a_probability_law(model in arb_model(), alpha in 0.3f64..3.0) {
        let factor = minus_factor(phase_type_roots(&model, alpha).unwrap());
        // A Laplace transform of a law on [0, inf): 1 at the origin,
        // positive and nonincreasing along the real axis.
        prop_assert_eq!(factor.eval_real(0.0).unwrap(), 1.0);
        let mut prev = 1.0f64;
        for i in 1..=10 {
            let v = factor.eval_real(0.7 * i as f64).unwrap();
            prop_assert!(v > 0.0 && v <= prev + 1e-12);
            prev = v;
        }
        let mix = partial_fractions(&factor).unwrap();
        prop_assert!((mix.atom0 + mix.density_mass() - 1.0).abs() < 1e-8);
        // Density stays real-nonnegative on a grid.
        for i in 1..=40 {
            prop_assert!(mix.density(0.15 * i as f64) >= -1e-9);
        }
    }

    #[test]
    fn factorization_identity_on_random_models(model in arb_model(), alpha in 0.3f64..3.0) {
        for theta in [0.5, 1.7] {
            let r = wh_factorization_check(&model, alpha, theta).unwrap();
            prop_assert!(r < 1e-7, "residual {} at theta {}", r, theta);
        }
    }

    #[test]
    fn atom_iff_irregular(model in arb_model(), alpha in 0.3f64..3.0) {
        let atom = minus_factor(phase_type_roots(&model, alpha).unwrap()).atom_at_zero();
        let regular = classify_regularity(&model).regular_downward == Regularity::Regular;
        prop_assert_eq!(regular, atom == 0.0);
    }
}
