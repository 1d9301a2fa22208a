//! Model family: phase-type jump laws, the jump-diffusion process, and
//! path-regularity classification.

pub mod levy;
pub mod phase_type;
pub mod regularity;

pub use levy::{JumpComponent, JumpJson, LevyModel, ModelJson, PhasesJson};
pub use phase_type::{matrix_exp, PhaseType};
pub use regularity::{
    classify_regularity, integral_test, DriftSign, Regularity, RegularityClause,
    RegularityReport, SmallJumpDensity,
};
