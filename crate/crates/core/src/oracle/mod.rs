//! Independent reference implementations used to check the analytic engine.

pub mod circuits;
pub mod density;
pub mod trajectory;

pub use circuits::{
    decode_error_rates, simulate_bell_chain, simulate_encoded_chain, simulate_encoding,
    simulate_plus_logical, simulate_swap, werner_pair, OracleChain, SwapOutcome,
};
pub use density::{project_to_diagonal, DensityMatrix, NoisyCnotForm, Pauli};
pub use trajectory::{
    run_trajectories, sample_attempt_counts, simulate_link_timing, Estimate, TrajectoryConfig,
    TrajectoryEstimate,
};
