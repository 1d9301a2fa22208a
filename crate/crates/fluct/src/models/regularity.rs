//! Path-regularity of 0 for the lower half-line.
//!
//! The point 0 is regular for (-inf, 0) exactly when one of these holds:
//! unbounded variation; bounded variation with negative drift; or bounded
//! variation with zero drift and a divergent small-jump integral test. For
//! the finite-activity family here the first two clauses decide everything:
//! with no Gaussian part and nonnegative drift the path is piecewise linear
//! with nonnegative slope, so it takes a strictly positive time to enter the
//! lower half-line. The integral test is kept for the parametric power-law
//! density and reports `Inconclusive` rather than guessing in the degenerate
//! one-sided case.

use serde::Serialize;

use crate::error::{FluctError, Result};
use crate::models::LevyModel;
use crate::quad::integrate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftSign {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regularity {
    Regular,
    Irregular,
    Inconclusive,
}

/// Which decision rule produced the classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularityClause {
    /// Bounded variation with d < 0.
    NegativeDriftBoundedVariation,
    /// Bounded variation, d = 0, small-jump integral test.
    SmallJumpIntegralTest,
    /// Unbounded variation (a Gaussian component in this family).
    UnboundedVariation,
    /// Finite activity, no Gaussian part, nonnegative drift: piecewise linear
    /// ascent, so downward entry takes positive time.
    FiniteActivityNonnegativeDrift,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub bounded_variation: bool,
    pub drift_sign: DriftSign,
    pub regular_downward: Regularity,
    pub clause: RegularityClause,
    /// Diagnostic for inconclusive outcomes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

fn drift_sign(d: f64) -> DriftSign {
    if d < 0.0 {
        DriftSign::Negative
    } else if d == 0.0 {
        DriftSign::Zero
    } else {
        DriftSign::Positive
    }
}

/// Classifies regularity of 0 for (-inf, 0) from the model structure. Never
/// returns `Inconclusive` for this model family.
pub fn classify_regularity(model: &LevyModel) -> RegularityReport {
    if model.gaussian() > 0.0 {
        return RegularityReport {
            bounded_variation: false,
            drift_sign: drift_sign(model.drift()),
            regular_downward: Regularity::Regular,
            clause: RegularityClause::UnboundedVariation,
            note: None,
        };
    }
    if model.drift() < 0.0 {
        return RegularityReport {
            bounded_variation: true,
            drift_sign: DriftSign::Negative,
            regular_downward: Regularity::Regular,
            clause: RegularityClause::NegativeDriftBoundedVariation,
            note: None,
        };
    }
    RegularityReport {
        bounded_variation: true,
        drift_sign: drift_sign(model.drift()),
        regular_downward: Regularity::Irregular,
        clause: RegularityClause::FiniteActivityNonnegativeDrift,
        note: None,
    }
}

/// Parametric small-jump density `c_- |x|^{-1-a}` on (-cutoff, 0) and
/// `c_+ x^{-1-a}` on (0, cutoff), used only by the integral test.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallJumpDensity {
    pub c_minus: f64,
    pub c_plus: f64,
    pub a_index: f64,
    pub cutoff: f64,
}

impl SmallJumpDensity {
    pub fn new(c_minus: f64, c_plus: f64, a_index: f64, cutoff: f64) -> Result<Self> {
        if !(c_minus >= 0.0) || !(c_plus >= 0.0) || c_minus + c_plus == 0.0 {
            return Err(FluctError::validation(
                "c",
                "intensities must be nonnegative with c_minus + c_plus > 0",
            ));
        }
        if !(a_index > 0.0 && a_index < 2.0) {
            return Err(FluctError::validation(
                "a_index",
                format!("power-law exponent must lie in (0, 2), got {a_index}"),
            ));
        }
        if !(cutoff > 0.0) {
            return Err(FluctError::validation("cutoff", "cutoff must be > 0"));
        }
        Ok(SmallJumpDensity {
            c_minus,
            c_plus,
            a_index,
            cutoff,
        })
    }

    /// Integrated upper tail `int_0^x Pi(y, inf) dy`.
    fn integrated_tail(&self, x: f64) -> f64 {
        let a = self.a_index;
        let x = x.min(self.cutoff);
        self.c_plus / a * (x.powf(1.0 - a) / (1.0 - a) - self.cutoff.powf(-a) * x)
    }
}

/// Numeric divergence test for the bounded-variation zero-drift clause.
///
/// Evaluates partial integrals of `|x| Pi(dx) / int_0^{|x|} Pi(y, inf) dy`
/// over shrinking decades `[upper * 10^{-(k+1)}, upper * 10^{-k}]` and calls
/// the integral divergent when the per-decade increments fail to die out
/// (for this parametric family the integrand behaves like C/|x| near 0, so
/// the increments approach a positive constant).
pub fn integral_test(density: &SmallJumpDensity) -> Result<RegularityReport> {
    if density.a_index >= 1.0 {
        return Err(FluctError::ModelClass {
            expected: "bounded-variation small-jump density (a_index < 1)",
            detail: format!("a_index = {} has unbounded variation", density.a_index),
        });
    }
    let base = RegularityReport {
        bounded_variation: true,
        drift_sign: DriftSign::Zero,
        regular_downward: Regularity::Inconclusive,
        clause: RegularityClause::SmallJumpIntegralTest,
        note: None,
    };
    if density.c_plus == 0.0 {
        return Ok(RegularityReport {
            note: Some(
                "integrated upper tail vanishes (no positive jumps); the test's denominator \
                 is zero, so no conclusion is drawn from it"
                    .into(),
            ),
            ..base
        });
    }
    if density.c_minus == 0.0 {
        return Ok(RegularityReport {
            note: Some("no negative small jumps; the test integrand vanishes".into()),
            ..base
        });
    }
    let upper = density.cutoff.min(1.0);
    let integrand = |x: f64| x * density.c_minus * x.powf(-1.0 - density.a_index)
        / density.integrated_tail(x);
    let mut increments = Vec::new();
    for k in 2..=8 {
        let hi = upper * 10f64.powi(-k + 1);
        let lo = upper * 10f64.powi(-k);
        increments.push(integrate(&integrand, lo, hi, 1e-10));
    }
    let max_inc = increments.iter().cloned().fold(0.0_f64, f64::max);
    let last = *increments.last().unwrap();
    let diverges = max_inc > 1e-12 && last > 0.3 * max_inc;
    if diverges {
        Ok(RegularityReport {
            regular_downward: Regularity::Regular,
            ..base
        })
    } else {
        Ok(RegularityReport {
            note: Some(format!(
                "per-decade increments decay (last/max = {:.3e}); divergence not established",
                last / max_inc.max(f64::MIN_POSITIVE)
            )),
            ..base
        })
    }
}
