//! Weakly reversible mass-action reaction networks.
//!
//! Networks are read from a small text format ([`parser`]), turned into a
//! [`MassActionSystem`], and analysed through the complex-space reduction:
//! a positive steady state in the class of `p` corresponds to a zero of
//! `Π_K Ĝ` on `K = Π_𝓘(ran Y^T)`, and `Ĝ` points inwards on the boundary of
//! a truncated ball `Ω` built from explicit negativity thresholds.

pub mod birch;
pub mod complex_map;
pub mod error;
pub mod json;
pub mod network;
pub mod ode;
pub mod parser;
pub mod steady;
pub mod subspace;

pub use birch::{birch_point, psi, BirchSolver, ClassChart};
pub use complex_map::{
    chain_infimum, check_inward, g_map, omega_build, threshold_l, threshold_r, GhatContext, Offset, OmegaSpec, Scaled,
};
pub use error::{Error, ErrorKind, Result};
pub use network::{laplacian, MassActionSystem, ReactionNetwork, StoichClass};
pub use ode::{simulate, simulate_with, OdeOptions, Trajectory};
pub use parser::{parse_network, serialize};
pub use steady::{find_steady_state, residuals, Method, SolverOptions, SteadyStateResult};
pub use subspace::{block_decompose, BlockDecomposition, Subspace};
