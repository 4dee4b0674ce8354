//! Config-driven reproduction runs for the field-angle QFI (`fig2`), the
//! multiphase total variance with and without dephasing (`fig3a`, `fig3b`),
//! quench tomography bounds (`fig4`) and total-variance scans of a
//! user-assembled Hamiltonian (`custom`).
//!
//! Output is a list of [`Row`]s in grid order, so a run is a pure function of
//! its configuration regardless of how many worker threads evaluate it.

mod config;
mod record;
mod runs;

pub use config::{ConfigFile, Experiment, ExperimentConfig, OutputFormat, ProbeState};
pub use record::{loglog_slope, mse, sample_std, Row, RunRecord, CSV_HEADER};
pub use runs::{fig3_closed_form, run, run_custom, run_fig2, run_fig3, run_fig4};
