use churncov_core::ModelError;
use churncov_sim::SimError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Sim(#[from] SimError),

    #[error("{series} at {param} = {value}: {source}")]
    AtPoint {
        series: String,
        param: &'static str,
        value: f64,
        #[source]
        source: Box<HarnessError>,
    },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("csv line {line}: {message}")]
    CsvFormat { line: u64, message: String },

    #[error("no rows to report")]
    EmptyReport,

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
