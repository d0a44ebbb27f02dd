//! Large deviations of flow averages: free energy, rate functions and their
//! Monte Carlo counterparts.

mod montecarlo;
mod oracle;
mod rate;

pub use montecarlo::{
    estimate_deviation_level1, estimate_deviation_level2, sample_suspension, stream, tempered_variation_profile,
    DecayExperiment, EmpiricalDecay, TestBasis, MIN_FIT_COUNT,
};
pub use oracle::{rate_function_oracle, rate_function_oracle_with, OracleOptions, ORACLE_MAX_PARAMETERS};
pub use rate::{
    flow_equilibrium, flow_free_energy, free_energy_curve, rate_function, rate_function_profile, FlowProblem,
    FreeEnergyCurve, RateFunctionProfile,
};
