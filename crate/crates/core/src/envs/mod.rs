//! Concrete environments and fixture generators.

mod adversarial;
pub mod cirl;
mod gridworld;
pub mod random;
mod small;

use thiserror::Error;

pub use adversarial::{adversarial_class, AdversarialClass, AdversarialClassSpec, ClassMember, MemberKind};
pub use cirl::{cirl_example, CirlExample, Hypothesis};
pub use gridworld::{gridworld, Gridworld, GridworldSpec, Move, TileKind, GOAL_REWARD};
pub use small::{absorbing, loop_crmdp, softmax_counterexample, LOOP_CCW, LOOP_CW};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid layout: {0}")]
    Layout(String),
    #[error("no built-in layout with {0} goal tiles (use 1, 2 or 4)")]
    UnknownLayout(usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error(transparent)]
    Model(#[from] crate::crmdp::CrmdpError),
}
