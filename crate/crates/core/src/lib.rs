pub mod error;
pub mod field;
pub mod flux;
pub mod gas_model;
pub mod io;
pub mod mc_oracle;
pub mod network;
pub mod pipe_solver;
pub mod reconstruction;
pub mod run;
pub mod scalar;
pub mod scenarios;
pub mod stochastic_grid;
pub mod time_integration;

pub use error::{Result, SfvError};
pub use scalar::Scalar;

/// Double precision instantiations of the generic numerical types.
pub mod f64_types {
    pub type GasConstants = crate::gas_model::GasConstants<f64>;
    pub type PipeSpec = crate::gas_model::PipeSpec<f64>;
    pub type GasState = crate::gas_model::GasState<f64>;
    pub type RandomParameter = crate::stochastic_grid::RandomParameter<f64>;
    pub type StochasticGrid = crate::stochastic_grid::StochasticGrid<f64>;
    pub type QuadratureRule = crate::stochastic_grid::QuadratureRule<f64>;
    pub type StochasticField = crate::field::StochasticField<f64>;
    pub type EmpiricalDistribution = crate::field::EmpiricalDistribution<f64>;
    pub type PipeDiscretization = crate::pipe_solver::PipeDiscretization<f64>;
    pub type PipeSolver<B> = crate::pipe_solver::PipeSolver<f64, B>;
    pub type NetworkTopology = crate::network::NetworkTopology<f64>;
    pub type NetworkSolver = crate::network::NetworkSolver<f64>;
}

pub use f64_types::*;
