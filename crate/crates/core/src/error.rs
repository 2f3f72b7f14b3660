use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

/// Which nested root-find of the geometry calibration failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CalibrationStage {
    StorageLength,
    CouplerLength,
    InputCapacitor,
}

impl core::fmt::Display for CalibrationStage {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            CalibrationStage::StorageLength => "storage-cavity length",
            CalibrationStage::CouplerLength => "coupler half-section length",
            CalibrationStage::InputCapacitor => "input capacitor",
        })
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite result in {0}")]
    NonFinite(&'static str),

    #[error("cascade of an empty element list")]
    EmptyCascade,

    #[error("calibration failed at stage `{stage}`: {reason}")]
    Calibration {
        stage: CalibrationStage,
        reason: String,
    },

    #[error("crossing not bracketed by the inductance grid")]
    CrossingNotBracketed,

    #[error("not enough valid data: need {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("time step {dt:e} s violates the resolution guard; use dt <= {suggested:e} s")]
    ResolutionGuard { dt: f64, suggested: f64 },

    #[error("could not extract rates: {}", .0.join(", "))]
    MissingRates(Vec<&'static str>),

    #[error("cells {first} and {second} are not addressable: separation {separation:e} Hz <= required {required:e} Hz")]
    Addressability {
        first: usize,
        second: usize,
        separation: f64,
        required: f64,
    },

    #[error("invalid schedule: {0}")]
    Schedule(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by inputs that fail validation (as opposed to a
    /// numerical procedure that did not converge).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::EmptyCascade
                | Error::Schedule(_)
                | Error::Addressability { .. }
        )
    }
}
