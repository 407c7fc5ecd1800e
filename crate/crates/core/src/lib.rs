//! Place-value tutoring engine with the study protocol and the analyses that
//! turn recorded sessions into achievement, efficiency, retention and
//! satisfaction tables.

pub mod api;
pub mod clock;
pub mod place;
pub mod rng;
pub mod sim;
pub mod session;
pub mod stats;
pub mod store;
