//! Distribution-feeder analysis toolkit: feeder data model, AC power flow
//! (backward/forward sweep + Newton-Raphson), DG benefit indices, a seeded
//! genetic algorithm for DG placement/sizing, and an exhaustive-search oracle.

pub mod cli;
pub mod ga;
pub mod indices;
pub mod network;
pub mod oracle;
pub mod powerflow;

pub use network::{load_network, Branch, Bus, BusKind, DGPlan, DGUnit, Network};
pub use powerflow::{solve, PowerFlowSolution, SolveMethod, SolverOptions};
