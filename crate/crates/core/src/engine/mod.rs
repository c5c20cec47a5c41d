//! Composition root: configuration, offline rendering, validation and the
//! live telemetry server.
//!
//! Per audio block the engine samples the pose, updates the gesture state,
//! evaluates the simplicial map at the instrument's (x, y), retargets the
//! resonator bank, mixes scaled noise into the bank input, filters, and
//! normalizes the output to the input level.

mod audio;
mod config;
mod control;
mod live;
mod render;
mod trajectory;
mod validate;
mod wav;

pub use audio::{AudioProcessor, AudioReport};
pub use config::{AltitudeMode, EngineConfig, Interpolation};
pub use control::{ControlFrame, Controller};
pub use live::{run_live, LiveHandle, LiveSettings};
pub use render::{parse_log, render_files, render_offline, LogRow, RenderOutput, RenderRequest, LOG_VERSION};
pub use trajectory::{Trajectory, TrajectoryFrame};
pub use validate::{validate, validate_files, ValidationReport};
pub use wav::{read_wav_mono, write_wav_f32};

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::resonance::{ModelError, ResonanceError, ResonanceModel};
use crate::simplicial::{MapError, SimplicialMap};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
    #[error("{path}: expected a mono file, found {channels} channels")]
    NotMono { path: PathBuf, channels: u16 },
    #[error("{path}: unsupported sample format ({bits}-bit {format})")]
    UnsupportedFormat { path: PathBuf, bits: u16, format: &'static str },
    #[error("{path}: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error("{path}: {source}")]
    Map {
        path: PathBuf,
        #[source]
        source: MapError,
    },
    #[error("map dimension {found} does not match model: expected 3 x {resonances} = {expected}")]
    DimensionMismatch { expected: usize, found: usize, resonances: usize },
    #[error("config line {line}: {reason}")]
    Config { line: usize, reason: String },
    #[error("trajectory line {line}: {reason}")]
    Trajectory { line: usize, reason: String },
    #[error(transparent)]
    Resonance(#[from] ResonanceError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: io::Error,
    },
}

pub(crate) fn read_text(path: &std::path::Path) -> Result<String, EngineError> {
    std::fs::read_to_string(path).map_err(|source| EngineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: &std::path::Path) -> Result<ResonanceModel<f64>, EngineError> {
    let name = path.file_stem().map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned());
    ResonanceModel::parse(name, &read_text(path)?).map_err(|source| EngineError::Model {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_map(path: &std::path::Path) -> Result<SimplicialMap<f64>, EngineError> {
    SimplicialMap::parse(&read_text(path)?).map_err(|source| EngineError::Map {
        path: path.to_path_buf(),
        source,
    })
}

/// The map's parameter vectors must hold one `[gain, freq, decay]` triple per resonance.
pub fn check_dimensions(model: &ResonanceModel<f64>, map: &SimplicialMap<f64>) -> Result<(), EngineError> {
    let expected = 3 * model.len();
    if map.dim() != expected {
        return Err(EngineError::DimensionMismatch {
            expected,
            found: map.dim(),
            resonances: model.len(),
        });
    }
    Ok(())
}
