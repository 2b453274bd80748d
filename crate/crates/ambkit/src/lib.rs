//! Ambiguity attitudes of finite-state preference models: capacities and
//! their derivatives, behavioral tests of ambiguity aversion and prudence,
//! divergence and maxmin models, smooth ambiguity, and an insurance
//! application with ambiguous background risk.

pub mod acts;
pub mod attitudes;
pub mod error;
pub mod insurance;
pub mod io;
pub mod models;
pub mod numerics;
pub mod random;
pub mod setfn;

pub use acts::{Act, Order, TestTriple};
pub use error::{Error, Result};
pub use models::{Preference, PreferenceModel};
pub use numerics::{Interval, SimplexPoint};
pub use setfn::{Capacity, EventSet, StateSpace};
