//! Named reference models exercised by the verification command and the
//! acceptance suite: one representative of each supported path regime.

use crate::error::Result;
use crate::models::{JumpComponent, LevyModel, PhaseType};

/// A reference model with the strike/rate its checks run at.
#[derive(Debug, Clone)]
pub struct FleetEntry {
    pub name: &'static str,
    pub model: LevyModel,
    pub strike: f64,
    pub rate: f64,
}

fn exp_down(rate: f64, eta: f64) -> Result<JumpComponent> {
    JumpComponent::new(rate, PhaseType::exponential(eta)?)
}

/// The six reference models:
///
/// - `brownian`: pure Gaussian, the closed-form put benchmark;
/// - `brownian-drift`: Gaussian with drift;
/// - `bv-up`: bounded variation, positive drift, exponential downward jumps
///   (the irregular benchmark with its atom in closed form);
/// - `bv-down`: bounded variation, negative drift (nonincreasing paths,
///   regular by the drift clause);
/// - `two-sided`: Gaussian plus phase-type jumps on both sides;
/// - `subordinator`: drift-free compound Poisson ascent.
pub fn fleet() -> Vec<FleetEntry> {
    vec![
        FleetEntry {
            name: "brownian",
            model: LevyModel::brownian(2.0, 0.0).expect("valid"),
            strike: 2.0,
            rate: 1.0,
        },
        FleetEntry {
            name: "brownian-drift",
            model: LevyModel::brownian(1.0, 0.5).expect("valid"),
            strike: 2.0,
            rate: 1.0,
        },
        FleetEntry {
            name: "bv-up",
            model: LevyModel::new(0.0, 1.0, None, Some(exp_down(1.0, 1.0).expect("valid")))
                .expect("valid"),
            strike: 2.0,
            rate: 2.0,
        },
        FleetEntry {
            name: "bv-down",
            model: LevyModel::new(0.0, -0.5, None, Some(exp_down(1.0, 1.0).expect("valid")))
                .expect("valid"),
            strike: 2.0,
            rate: 1.0,
        },
        FleetEntry {
            name: "two-sided",
            model: LevyModel::new(
                0.8,
                -0.2,
                Some(
                    JumpComponent::new(0.6, PhaseType::exponential(2.0).expect("valid"))
                        .expect("valid"),
                ),
                Some(
                    JumpComponent::new(1.0, PhaseType::erlang(2, 2.0).expect("valid"))
                        .expect("valid"),
                ),
            )
            .expect("valid"),
            strike: 2.0,
            rate: 1.0,
        },
        FleetEntry {
            name: "subordinator",
            model: LevyModel::new(
                0.0,
                0.0,
                Some(
                    JumpComponent::new(1.5, PhaseType::exponential(2.0).expect("valid"))
                        .expect("valid"),
                ),
                None,
            )
            .expect("valid"),
            strike: 2.0,
            rate: 1.0,
        },
    ]
}

/// Looks an entry up by name.
pub fn by_name(name: &str) -> Option<FleetEntry> {
    fleet().into_iter().find(|e| e.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fleet_has_six_members_with_unique_names() {
        let f = fleet();
        assert_eq!(f.len(), 6);
        let mut names: Vec<_> = f.iter().map(|e| e.name).collect();
        names.dedup();
        assert_eq!(names.len(), 6);
    }

    #[test]
    fn fleet_covers_both_regularity_classes() {
        use crate::models::{classify_regularity, Regularity};
        let f = fleet();
        let regular = f
            .iter()
            .filter(|e| classify_regularity(&e.model).regular_downward == Regularity::Regular)
            .count();
        assert!(regular >= 2);
        assert!(regular <= 4);
    }

    #[test]
    fn lookup_by_name() {
        assert!(by_name("brownian").is_some());
        assert!(by_name("unknown").is_none());
    }
}
