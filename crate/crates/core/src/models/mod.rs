//! The worked models: each module builds the conditional law for one data
//! situation and exposes plausibility, belief, and interval methods on top
//! of the shared engine.

pub mod bvn;
pub mod data;
pub mod gamma2;
pub mod nile;
pub mod normal_mean;
pub mod student_t;
pub mod vc;
