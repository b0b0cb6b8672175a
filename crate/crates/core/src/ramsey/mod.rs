//! Spread vectors, equipartition Ramsey checks and the dual encodings.

mod check;
mod dual;
mod instance;
mod spread;

pub use check::{
    enumerate_equi, exhaustive_ramsey_check, falsify_ramsey, ramsey_check, CheckMode, RamseyCheck,
    Verdict, DEFAULT_FALSIFICATION_TRIALS, EXHAUSTIVE_LIMIT,
};
pub use dual::{
    dual_demo, dual_sizes, dualize, gamma_f_theta, is_rigid, is_unital, quo_check, rigid_enumerate,
    section_identity_holds, unital_from_equipartition, DualDemo, QuoCheck, QuoMatrix, QuoMode,
    RigidSurjection, ScaledUnit, DUAL_DEMO_MAX,
};
pub use instance::RamseyInstance;
pub use spread::{
    best_spread_brute, best_spread_dp, spread, spread_vector_search, SpreadFit, SpreadSearch,
    SpreadVector,
};
