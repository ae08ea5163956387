//! Numerical certification of theta-function identities.

mod addition;
mod pairing;
mod report;

pub use addition::{
    verify_addition_converse, verify_addition_forward, verify_doubling, verify_shift, DEFAULT_TOLERANCE,
};
pub use pairing::{
    a_from_c_matrix, ac_admissible, admissible_pair, build_a, build_c, c_from_gradients, c_rank_one_ratio,
    verify_ac, verify_ac_a, verify_ac_b, verify_ac_round_trip, verify_ac_round_trips, verify_cyclic,
    verify_cyclic_family, AcDirection, IndexPlan, JetCache, PairingKind, PairingMatrix, A_FROM_C_FACTOR,
};
pub use report::{Criterion, IdentityReport};
