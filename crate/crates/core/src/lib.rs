//! Simulation and verification tools for reinforcement learning with
//! corrupted reward channels.
//!
//! - [`crmdp`]: the model, exact planning, simulation and regret.
//! - [`envs`]: concrete environments and random fixture generators.
//! - [`agents`]: Q-learning, softmax Q-learning and explore-then-commit Bayesian agents.
//! - [`quantiliser`]: simple and general quantilising agents and their bounds.
//! - [`decoupled`]: observation graphs, reward reconstruction and exploration.
//! - [`harness`]: experiment configs, multi-run execution and CSV output.

pub mod agents;
pub mod crmdp;
pub mod decoupled;
pub mod envs;
pub mod harness;
pub mod quantiliser;
pub mod rng;

pub use crmdp::{Crmdp, CrmdpError, Dynamics, ObservedMdp};
