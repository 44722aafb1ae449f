//! Sensor scheduling for a hidden Markov process observed through sensors
//! whose wireless channels are themselves informative.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`] holds the problem instance and its JSON format.
//! * [`stochastics`] has the densities, samplers and the seeded random source.
//! * [`filter`] tracks the belief slot by slot.
//! * [`reward`] defines the per-slot cost.
//! * [`grid`] discretises the belief simplex.
//! * [`solver`] runs value iteration on the grid and computes both bounds.
//! * [`policies`] turns solved tables into executable policies.
//! * [`sim`] evaluates policies by Monte Carlo and runs λ sweeps.

pub mod error;
pub mod filter;
pub mod grid;
pub mod policies;
pub mod reward;
pub mod scenario;
pub mod sim;
pub mod solver;
pub mod stochastics;

pub use error::{Error, Result};
pub use filter::{Belief, LikelihoodMask, SlotObservation};
pub use grid::BeliefGrid;
pub use policies::{Policy, PolicyKind};
pub use reward::Action;
pub use scenario::{load_scenario, validate, ScenarioConfig, SensorSpec, Violation};
pub use sim::{EpisodeTrace, Metrics, SweepRow};
pub use solver::{PolicyTable, SolverOptions, ValueTable};
pub use stochastics::{ChannelDesign, ObservationModel, Rng};
