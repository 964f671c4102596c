//! Matching algorithms for regular graphs and a round-synchronous simulator
//! to measure them.
//!
//! Modules, bottom up:
//!
//! - [`graph`]: simple graphs, random regular generators, validation.
//! - [`sim`]: message-passing rounds with finish-time accounting.
//! - [`luby`]: one-round Luby (distributed and sequential views), color coding,
//!   multi-round driver and survivor instrumentation.
//! - [`warmup`]: degree sampling plus augmenting-path rounds on a hypergraph.
//! - [`fast`]: parameter schedules, the logarithmic-round approximate matcher
//!   and the node-averaged maximal matching driver.
//! - [`oracle`]: exact maximum matchings and the almost-regular lower bound.
//! - [`lowerbound`]: the three gadget families and adversary trials.
//! - [`martingale`]: tail bounds for shifted martingales and Monte Carlo checks.

pub mod error;
pub mod fast;
pub mod graph;
pub mod lowerbound;
pub mod luby;
pub mod martingale;
pub mod matching;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod warmup;

pub use error::{Error, Result};
pub use graph::{Graph, NodeId, Side};
pub use matching::Matching;

/// Exact rational used for reported ratios and bounds.
/// Library version, recorded in experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Rational = num_rational::Ratio<i128>;
