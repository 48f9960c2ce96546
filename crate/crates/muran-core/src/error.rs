use thiserror::Error;

/// Errors surfaced by the simulation core.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("hour {0} out of range (expected 0..=23)")]
    HourOutOfRange(u32),

    #[error("distance must be positive, got {0} m")]
    NonpositiveDistance(f64),

    #[error("sites {0} and {1} are co-located")]
    CoLocatedSites(u32, u32),

    #[error("could not place {placed} of {requested} small cells with {min_separation_m} m separation")]
    PlacementFailed {
        requested: usize,
        placed: usize,
        min_separation_m: f64,
    },

    #[error("sector count mismatch: on/off config covers {got} sectors, scenario has {expected}")]
    SectorCountMismatch { expected: usize, got: usize },

    #[error("energy report needs one state per hour per policy; missing hour {hour} for {policy}")]
    MissingHour { policy: String, hour: u8 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty SNR sweep range")]
    EmptySweep,

    #[error("config error: {0}")]
    Config(String),

    #[error("MCS table: {0}")]
    McsTable(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
