use std::fmt;
use std::path::Path;

use crate::level::clamp_bandwidths;
use crate::resonance::ResonanceModel;
use crate::simplicial::SimplicialMap;

use super::{check_dimensions, load_map, load_model, EngineError};

/// Summary of a model/map pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub resonances: usize,
    pub min_bandwidth_hz: f64,
    /// Resonances narrower than the minimum bandwidth.
    pub clamped: usize,
    /// Resonances at or above Nyquist at the configured sample rate.
    pub above_nyquist: usize,
    pub map_points: usize,
    pub map_dim: usize,
    pub triangles: usize,
    pub hull_edges: usize,
    /// Dimension contract failure, if any.
    pub dimension_error: Option<String>,
}

impl ValidationReport {
    /// Clean means the map fits the model; clamps and drops are informational.
    pub fn ok(&self) -> bool {
        self.dimension_error.is_none()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "resonances: {}", self.resonances)?;
        writeln!(
            f,
            "clamped bandwidths: {} (min bandwidth {} Hz)",
            self.clamped, self.min_bandwidth_hz
        )?;
        writeln!(f, "above nyquist: {}", self.above_nyquist)?;
        writeln!(f, "map points: {} (dimension {})", self.map_points, self.map_dim)?;
        writeln!(f, "triangles: {}", self.triangles)?;
        writeln!(f, "hull edges: {}", self.hull_edges)?;
        match &self.dimension_error {
            None => write!(f, "status: OK"),
            Some(e) => write!(f, "status: ERROR: {e}"),
        }
    }
}

pub fn validate(
    model: &ResonanceModel<f64>,
    map: &SimplicialMap<f64>,
    min_bandwidth_hz: f64,
    sample_rate: f64,
) -> ValidationReport {
    let (_, clamped) = clamp_bandwidths(model, min_bandwidth_hz);
    ValidationReport {
        resonances: model.len(),
        min_bandwidth_hz,
        clamped,
        above_nyquist: model.count_above_nyquist(sample_rate),
        map_points: map.len(),
        map_dim: map.dim(),
        triangles: map.triangles().len(),
        hull_edges: map.hull().len(),
        dimension_error: check_dimensions(model, map).err().map(|e| e.to_string()),
    }
}

/// Loads both files; load or map-validation failures are returned as errors.
pub fn validate_files(
    model: &Path,
    map: &Path,
    min_bandwidth_hz: f64,
    sample_rate: f64,
) -> Result<ValidationReport, EngineError> {
    let model = load_model(model)?;
    let map = load_map(map)?;
    Ok(validate(&model, &map, min_bandwidth_hz, sample_rate))
}
