//! Monte-Carlo sweeps, the union-bound runner, the PSSM baseline and
//! result files.

mod config;
mod engine;
mod output;

pub use config::{grid, Baseline, BoundSettings, SweepConfig, VampSettings, PROFILES};
pub use engine::{
    compare, crossing_power, mean_transmit_energy, run_bound, run_pssm_baseline, run_sweep, substream,
    Comparison, Scenario,
};
pub use output::{metadata_path, to_csv, write_csv, write_metadata, BerRecord, CSV_HEADER};
