//! Solar hosting capacity of radial distribution feeders under CVaR limits
//! on voltage and line flow.
//!
//! Power flow uses the branch-flow (DistFlow) model with its second-order
//! cone relaxation, and the scenario constraints are written in CVaR
//! epigraph form. Two questions are answered:
//!
//! * [`hca::maximize_capacity`]: the largest total installed capacity whose
//!   voltage and flow CVaRs stay within limits over a scenario set.
//! * [`accept::test`]: whether a given capacity vector is acceptable. Answers
//!   are kept in a knowledge base of accepted points (inner hull) and
//!   certificate cuts (outer polytope), so repeated queries skip the solver.
//!
//! Conic programs are solved by a built-in homogeneous self-dual
//! interior-point method ([`conic`]). It returns Farkas certificates when a
//! program is infeasible.
//!
//! ```
//! use hostcap::assemble::RiskParams;
//! use hostcap::demo::three_bus_instance;
//! use hostcap::hca::{maximize_capacity, MaximizeOptions};
//!
//! let (net, scen) = three_bus_instance(50, 1).unwrap();
//! let risk = RiskParams::uniform(0.9).unwrap();
//! let hc = maximize_capacity(&net, &scen, &risk, &MaximizeOptions::default()).unwrap();
//! assert!(hc.violations.within_chance_bounds(&risk));
//! ```
//!
//! The `examples/` directory walks through each piece: `cvar_tail`,
//! `power_flow_oracle`, `maximize_capacity`, `risk_sweep`,
//! `subsample_variance`, `incremental_acceptability`, `validate_solution`,
//! `knowledge_base_persistence` and `conic_certificates`.

pub mod accept;
pub mod assemble;
pub mod cli;
pub mod conic;
pub mod cvar;
pub mod demo;
pub mod error;
pub mod hca;
pub mod network;
pub mod rng;
pub mod scenario;
pub mod validate;

pub use error::{Error, Result};
