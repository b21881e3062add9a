//! Closed-loop scenarios: configuration, simulation, logging and output.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{InfeasibilityPolicy, ScenarioConfig, ScenarioKind};
pub use output::{csv_header, read_csv, read_summary, summary_text, write_csv, write_summary, CsvSink, CsvTable};
pub use presets::{build_scenario_landing, build_scenario_slit, preset, LANDING_ALPHAS, PRESETS, SLIT_ALPHA_ES};
pub use run::{run, run_config, CbfKind, CbfSample, Discard, LogRecord, LogSink, RunSummary, Scenario, SummaryBuilder};
