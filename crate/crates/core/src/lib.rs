//! Convex relaxations for picking the `k` most influential senders of a
//! bipartite sender/receiver network.
//!
//! Two models are covered:
//!
//! * deterministic arcs, relaxed to a linear program and solved at vertices by a
//!   bounded-variable revised simplex ([`lp`]);
//! * the depth-one independent cascade, whose expected coverage has a closed
//!   form that relaxes to a smooth convex program over the capped simplex
//!   ([`cascade`]).
//!
//! Planted-structure generators ([`generators`]), exhaustive and greedy
//! baselines ([`oracles`]) and the benchmark campaigns ([`experiment`]) sit on
//! top of the shared [`graph`] representation.

pub mod cascade;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod graph;
pub mod lp;
pub mod oracles;
pub mod seeding;

pub use error::{Error, Result};
pub use graph::{BipartiteGraph, SelectionVector};
