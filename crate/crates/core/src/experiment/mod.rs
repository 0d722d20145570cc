//! Configuration-driven scenario runs with CSV reports.

pub mod config;
pub mod report;
pub mod scenario;

pub use config::{load_config, BinsSetting, ConfigError, ScenarioConfig, Thresholds};
pub use report::{
    read_report, read_report_str, report_to_string, write_report, write_report_file, Block, DistanceRow,
    MomentRow, ReportError, ScanRow, Table, TableKind,
};
pub use scenario::{
    evaluate_predicates, run_scenario, run_scenario_with_workers, ExperimentError, PredicateOutcome,
    ScenarioKind, ScenarioRun,
};
