//! Configuration, checkpoints and report files.

mod checkpoint;
mod config;
mod report;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, MAGIC, VERSION};
pub use config::{
    BandLimits, Config, ExperimentSection, GridSection, InitSection, LabSection, MultiplierSection, OutputSection,
    PhysicsSection, ScanMode, ScheduleSection,
};
pub use report::{
    read_columns, write_ed_csv, write_ratio_reports_csv, write_threshold_csv, ED_HEADER, RATIO_HEADER, THRESHOLD_HEADER,
};
