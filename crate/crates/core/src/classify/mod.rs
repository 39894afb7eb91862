//! Reweighting to a temperature, two-step classification, temperature
//! profiles and automatic temperature selection.

mod outcome;
mod profile;
mod table;

pub use outcome::{classify, correlation_threshold, unsupervised_cluster, Classification, Outcome};
pub use profile::{
    build_profile, changed_points, linear_grid, profile_from_tables, select_temperature, SelectionParams,
    TemperatureProfile, TemperatureSelection,
};
pub use table::{lowest_sampled_energy, reweight, reweight_with, t_zero_table, MarginalTable, ReweightMode, GROUND_DOMINANCE};

/// Confidence gap used when none is given.
pub const DEFAULT_TAU: f64 = 0.1;
