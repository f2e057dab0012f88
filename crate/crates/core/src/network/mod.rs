//! Pipe networks: graph topology, junction coupling, and the network-wide
//! time stepper.

pub mod junction;
pub mod solver;
pub mod topology;

pub use junction::{
    junction_residual, junction_solve, net_inflow, slack_node_solve, JunctionEdge, JunctionSolution, JunctionSolver,
};
pub use solver::{steady_network_fields, NetworkSolver};
pub use topology::{constant_profile, Compressor, Edge, NetworkTopology, Node, NodeRole, Orientation, Profile};
