//! Approximate unequal-division (UD) solutions for bargaining networks.
//!
//! The solver runs in two steps. A maximum-weight matching and a dual
//! optimum give a stable outcome (or prove none exists); damped edge
//! rebalancing then moves the allocation to ε-correct division while
//! keeping every iterate stable.
//!
//! * [`instance`]: data model, file formats and generators.
//! * [`verify`]: surplus, stability and division checks.
//! * [`oracle`]: brute-force references for small instances.
//! * [`bp`]: max-product message passing for the matching step.
//! * [`rebalance`]: the rebalancing operators, iteration and `solve`.
//! * [`batch`]: many independent solves at once.

pub mod batch;
pub mod bp;
pub mod error;
pub mod exec;
pub mod instance;
pub mod oracle;
pub mod rebalance;
pub mod verify;

pub use error::{BpError, InstanceError, OracleError, ParseError, SolveError};
pub use exec::Exec;
pub use instance::{Edge, EdgeId, Instance, Matching, NodeId, Outcome};
pub use rebalance::{solve, SolveConfig, SolveResult, SolveStatus};

/// Tolerance for comparisons that are exact in real arithmetic.
pub const DEFAULT_TOL_EQ: f64 = 1e-9;
