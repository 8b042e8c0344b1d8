//! Joint federated-learning update scheduling and task offloading for
//! edge-hosted LLM agents over a TDMA wireless network.
//!
//! The association between devices and edge agents is learned by a
//! parameter-shared double deep Q-network ([`ddqn`]), while the TDMA frame
//! split and the network-wide relative local accuracy are solved exactly per
//! step by the convex subproblem solvers in [`convex_opt`]. The [`env`]
//! module glues both into a 20-step episodic MDP whose reward is the
//! reciprocal of the latency cost computed by [`flcost`].

pub mod config;
pub mod convex_opt;
pub mod ddqn;
pub mod env;
pub mod error;
pub mod flcost;
pub mod harness;
pub mod radio;
pub mod scenario;

pub use error::{Error, Result};
