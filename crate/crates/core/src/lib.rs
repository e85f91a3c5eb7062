//! Total domination on graphs, compiled to a QUBO / Ising cost Hamiltonian
//! and solved with a statevector-simulated QAOA.
//!
//! The pipeline runs graph → [`qubo::compile_tdp_qubo`] →
//! [`spin::build_energy_table`] → [`qaoa::evolve`] under angles tuned by
//! [`optimizer::minimize`], and [`harness`] scores the outcome against the
//! exhaustive oracles in [`graph`].

// `!(x > 0.0)` checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod graph;
pub mod harness;
pub mod io;
pub mod optimizer;
pub mod qaoa;
pub mod qubo;
pub mod spin;

pub use error::{Error, Result};
pub use graph::{DegreePartition, Graph, MinimumSets};
pub use harness::{
    compute_metrics, initial_angles, run_single, run_sweep, Instance, Metrics, PenaltySpec, RunConfig,
    RunOutcome, RunResult, SweepGrid, SweepTable,
};
pub use optimizer::{minimize, OptimizationTrace, OptimizerConfig, Termination};
pub use qaoa::{evolve, marginalize_vertices, AngleSchedule, StateVector, VertexDistribution};
pub use qubo::{
    compile_tdp_qubo, qubit_counts, qubit_upper_bound, slack_coefficients, QuboModel, QubitCounts,
    VariableRegistry,
};
pub use spin::{build_energy_table, qubo_to_spin, EnergyTable, SpinModel};
