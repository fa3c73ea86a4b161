//! Neural cellular automata that learn to self-replicate.
//!
//! The crate covers the whole pipeline: the 16-channel lattice and its
//! learned update rule, training by backpropagation through rollouts with
//! batch substitution and target alternation, multi-generation lineages
//! (egg, adult, egg), and drift statistics over those lineages.

pub mod analysis;
pub mod components;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod lineage;
pub mod network;
pub mod real;
pub mod rng;
pub mod sprites;
pub mod training;

pub use dynamics::{rollout, rollout_recorded, step, Trajectory, UpdateKind, UpdateMode};
pub use error::{Error, Result};
pub use grid::{Boundary, ResetRule, CellState, Grid, GridShape, UpdateMask};
pub use network::UpdateNetwork;
pub use rng::RngStream;
