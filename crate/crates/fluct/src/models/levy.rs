//! The jump-diffusion model family and its exponents.
//!
//! ```text
//! X_t = drift * t + sigma B_t + sum_{i<=N+(t)} U+_i - sum_{j<=N-(t)} U-_j
//! ```
//!
//! Characteristic exponent (E[e^{i theta X_1}] = e^{-Psi(theta)}):
//!
//! ```text
//! Psi(theta) = -i*drift*theta + sigma2*theta^2/2
//!              + rate+ * (1 - F+(-i theta)) + rate- * (1 - F-(i theta))
//! ```
//!
//! where `F` is the phase-type Laplace transform of the jump magnitude. The
//! cumulant version `xi(s) = log E[e^{s X_1}] = -Psi(-is)` is a rational
//! function of `s`, which is what makes every downstream quantity exactly
//! computable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{FluctError, Result};
use crate::models::phase_type::PhaseType;
use crate::poly::Poly;

/// One compound-Poisson jump stream: arrival rate and magnitude law.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpComponent {
    rate: f64,
    law: PhaseType,
}

impl JumpComponent {
    pub fn new(rate: f64, law: PhaseType) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(FluctError::validation(
                "rate",
                format!("jump rate must be > 0, got {rate}"),
            ));
        }
        Ok(JumpComponent { rate, law })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn law(&self) -> &PhaseType {
        &self.law
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyModel {
    gaussian: f64,
    drift: f64,
    up: Option<JumpComponent>,
    down: Option<JumpComponent>,
}

impl LevyModel {
    pub fn new(
        gaussian: f64,
        drift: f64,
        up: Option<JumpComponent>,
        down: Option<JumpComponent>,
    ) -> Result<Self> {
        if !(gaussian >= 0.0) {
            return Err(FluctError::validation(
                "gaussian",
                format!("variance coefficient must be >= 0, got {gaussian}"),
            ));
        }
        if gaussian == 0.0 && drift == 0.0 && up.is_none() && down.is_none() {
            return Err(FluctError::validation(
                "model",
                "degenerate process: no Gaussian part, no drift, no jumps",
            ));
        }
        Ok(LevyModel {
            gaussian,
            drift,
            up,
            down,
        })
    }

    /// Pure Brownian motion with drift.
    pub fn brownian(gaussian: f64, drift: f64) -> Result<Self> {
        LevyModel::new(gaussian, drift, None, None)
    }

    pub fn gaussian(&self) -> f64 {
        self.gaussian
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn up(&self) -> Option<&JumpComponent> {
        self.up.as_ref()
    }

    pub fn down(&self) -> Option<&JumpComponent> {
        self.down.as_ref()
    }

    /// Finite-activity jumps mean bounded variation iff there is no Gaussian
    /// part.
    pub fn bounded_variation(&self) -> bool {
        self.gaussian == 0.0
    }

    /// No positive jumps.
    pub fn spectrally_negative(&self) -> bool {
        self.up.is_none()
    }

    /// Nondecreasing paths.
    pub fn is_subordinator(&self) -> bool {
        self.gaussian == 0.0 && self.drift >= 0.0 && self.down.is_none()
    }

    /// Nonincreasing paths (the negative of a subordinator).
    pub fn is_negative_subordinator(&self) -> bool {
        self.gaussian == 0.0 && self.drift <= 0.0 && self.up.is_none()
    }

    /// True when the path can move strictly downward at all.
    pub fn has_downward_movement(&self) -> bool {
        self.gaussian > 0.0 || self.drift < 0.0 || self.down.is_some()
    }

    /// E[X_1] = drift + rate+ E[U+] - rate- E[U-].
    pub fn mean(&self) -> f64 {
        let up = self
            .up
            .as_ref()
            .map_or(0.0, |j| j.rate() * j.law().mean());
        let down = self
            .down
            .as_ref()
            .map_or(0.0, |j| j.rate() * j.law().mean());
        self.drift + up - down
    }

    /// The model for -X: negated drift, jump components swapped.
    pub fn dual(&self) -> LevyModel {
        LevyModel {
            gaussian: self.gaussian,
            drift: -self.drift,
            up: self.down.clone(),
            down: self.up.clone(),
        }
    }

    /// Characteristic exponent at (complex) theta.
    pub fn char_exponent(&self, theta: Complex64) -> Result<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        let mut psi = -i * self.drift * theta + 0.5 * self.gaussian * theta * theta;
        if let Some(upc) = &self.up {
            psi += upc.rate() * (Complex64::new(1.0, 0.0) - upc.law().laplace(-i * theta)?);
        }
        if let Some(dnc) = &self.down {
            psi += dnc.rate() * (Complex64::new(1.0, 0.0) - dnc.law().laplace(i * theta)?);
        }
        Ok(psi)
    }

    /// Cumulant xi(s) = log E[e^{s X_1}] = -Psi(-is), defined for any model;
    /// for spectrally negative models this is the Laplace exponent psi.
    pub fn cumulant(&self, s: Complex64) -> Result<Complex64> {
        let i = Complex64::new(0.0, 1.0);
        Ok(-self.char_exponent(-i * s)?)
    }

    /// Laplace exponent of a spectrally negative model (same code path as the
    /// characteristic exponent).
    pub fn laplace_exponent(&self, z: Complex64) -> Result<Complex64> {
        if !self.spectrally_negative() {
            return Err(FluctError::ModelClass {
                expected: "spectrally negative (no upward jumps)",
                detail: "model has an upward jump component".into(),
            });
        }
        self.cumulant(z)
    }

    /// Real-axis cumulant, via real linear algebra.
    pub fn cumulant_real(&self, s: f64) -> Result<f64> {
        let mut v = self.drift * s + 0.5 * self.gaussian * s * s;
        if let Some(upc) = &self.up {
            v += upc.rate() * (upc.law().laplace_real(-s)? - 1.0);
        }
        if let Some(dnc) = &self.down {
            v += dnc.rate() * (dnc.law().laplace_real(s)? - 1.0);
        }
        Ok(v)
    }

    /// d/ds of the real-axis cumulant.
    pub fn cumulant_deriv_real(&self, s: f64) -> Result<f64> {
        let mut v = self.drift + self.gaussian * s;
        if let Some(upc) = &self.up {
            v += -upc.rate() * upc.law().laplace_deriv_real(-s)?;
        }
        if let Some(dnc) = &self.down {
            v += dnc.rate() * dnc.law().laplace_deriv_real(s)?;
        }
        Ok(v)
    }

    /// Clears denominators of `xi(s) - alpha`: returns the polynomial
    ///
    /// ```text
    /// P(s) = (drift s + sigma2 s^2/2 - alpha) D+(-s) D-(s)
    ///        + rate+ (N+(-s) - D+(-s)) D-(s)
    ///        + rate- (N-(s) - D-(s)) D+(-s)
    /// ```
    ///
    /// whose roots are exactly the solutions of `xi(s) = alpha` (plus the
    /// spurious cancelled-pole roots of any reducible phase representation,
    /// which the factor formula cancels again).
    pub fn cleared_cumulant_poly(&self, alpha: f64) -> Poly {
        let base = Poly::from_real(&[-alpha, self.drift, 0.5 * self.gaussian]);
        let (num_up, den_up) = match &self.up {
            Some(j) => {
                let (n, d) = j.law().rational();
                (n.compose_neg(), d.compose_neg())
            }
            None => (Poly::zero(), Poly::one()),
        };
        let (num_dn, den_dn) = match &self.down {
            Some(j) => j.law().rational(),
            None => (Poly::zero(), Poly::one()),
        };
        let mut p = base.mul(&den_up).mul(&den_dn);
        if let Some(j) = &self.up {
            let diff = num_up.add(&den_up.scale(Complex64::new(-1.0, 0.0)));
            p = p.add(&diff.scale(Complex64::new(j.rate(), 0.0)).mul(&den_dn));
        }
        if let Some(j) = &self.down {
            let diff = num_dn.add(&den_dn.scale(Complex64::new(-1.0, 0.0)));
            p = p.add(&diff.scale(Complex64::new(j.rate(), 0.0)).mul(&den_up));
        }
        p
    }

    /// Denominator of the cumulant's downward part: `det(sI - T-)`, or 1 when
    /// there are no downward jumps.
    pub fn down_denominator(&self) -> Poly {
        match &self.down {
            Some(j) => j.law().rational().1,
            None => Poly::one(),
        }
    }
}

// --- JSON schema -----------------------------------------------------------
//
// {"gaussian": number, "drift": number,
//  "up":   {"rate": number, "phases": {"a": [..], "T": [[..]]}} | null,
//  "down": {...} | null}
//
// The exit vector is derived from T, never supplied.

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PhasesJson {
    pub a: Vec<f64>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct JumpJson {
    pub rate: f64,
    pub phases: PhasesJson,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelJson {
    pub gaussian: f64,
    pub drift: f64,
    #[serde(default)]
    pub up: Option<JumpJson>,
    #[serde(default)]
    pub down: Option<JumpJson>,
}

fn build_component(side: &str, j: &JumpJson) -> Result<JumpComponent> {
    let prefix = |field: &str| {
        if field.is_empty() {
            side.to_string()
        } else {
            format!("{side}.{field}")
        }
    };
    let law = PhaseType::new(j.phases.a.clone(), j.phases.t.clone()).map_err(|e| match e {
        FluctError::Validation { field, message } => FluctError::Validation {
            field: prefix(&format!("phases.{field}")),
            message,
        },
        other => other,
    })?;
    if !(j.rate > 0.0) {
        return Err(FluctError::validation(
            prefix("rate"),
            format!("jump rate must be > 0, got {}", j.rate),
        ));
    }
    JumpComponent::new(j.rate, law)
}

impl TryFrom<&ModelJson> for LevyModel {
    type Error = FluctError;

    fn try_from(spec: &ModelJson) -> Result<Self> {
        let up = spec.up.as_ref().map(|j| build_component("up", j)).transpose()?;
        let down = spec
            .down
            .as_ref()
            .map(|j| build_component("down", j))
            .transpose()?;
        LevyModel::new(spec.gaussian, spec.drift, up, down)
    }
}

impl From<&LevyModel> for ModelJson {
    fn from(model: &LevyModel) -> Self {
        let comp = |j: &JumpComponent| JumpJson {
            rate: j.rate(),
            phases: PhasesJson {
                a: j.law().initial().to_vec(),
                t: (0..j.law().phases())
                    .map(|i| {
                        (0..j.law().phases())
                            .map(|k| j.law().subintensity()[(i, k)])
                            .collect()
                    })
                    .collect(),
            },
        };
        ModelJson {
            gaussian: model.gaussian(),
            drift: model.drift(),
            up: model.up().map(comp),
            down: model.down().map(comp),
        }
    }
}

impl LevyModel {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: ModelJson = serde_json::from_str(text)
            .map_err(|e| FluctError::validation("model", format!("JSON parse error: {e}")))?;
        LevyModel::try_from(&spec)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&ModelJson::from(self)).expect("model serializes")
    }
}
