use crate::gesture::{AltitudeConfig, AltitudeState, BowTracker, OctaveToggle, PoseFrame};
use crate::level::max_decay_for;
use crate::resonance::ResonanceModel;
use crate::simplicial::SimplicialMap;

use super::config::{AltitudeMode, EngineConfig};
use super::{check_dimensions, EngineError};

/// Everything the control side derives from one pose.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlFrame {
    pub time: f64,
    /// Map-domain position (latitude, longitude).
    pub position: [f64; 2],
    pub altitude: f64,
    /// Map output before gesture modifiers and clamping.
    pub map_vector: Vec<f64>,
    /// Parameters sent to the resonator bank.
    pub active: Vec<f64>,
    pub altitude_control: f64,
    pub octave: bool,
    pub bow_relative: [f64; 3],
    pub bow_speed: f64,
    /// Resonances whose frequency left the band; the bank silences them.
    pub out_of_band: usize,
}

/// Pose to parameter vector: map lookup, altitude modifier, bandwidth clamp.
#[derive(Debug, Clone)]
pub struct Controller {
    map: SimplicialMap<f64>,
    axes: [usize; 3],
    mode: AltitudeMode,
    depth: f64,
    altitude: AltitudeState<f64>,
    toggle: OctaveToggle<f64>,
    bow: BowTracker<f64>,
    max_decay: Option<f64>,
    nyquist: f64,
    scratch: Vec<f64>,
}

impl Controller {
    pub fn new(model: &ResonanceModel<f64>, map: SimplicialMap<f64>, config: &EngineConfig) -> Result<Self, EngineError> {
        check_dimensions(model, &map)?;
        let altitude = AltitudeState::new(AltitudeConfig {
            normal_altitude: config.normal_altitude,
            floor_altitude: config.altitude_floor,
            reset_margin: config.reset_margin,
        });
        Ok(Controller {
            scratch: vec![0.0; map.dim()],
            map,
            axes: config.axes,
            mode: config.altitude_mode,
            depth: config.altitude_depth,
            altitude,
            toggle: OctaveToggle::new(config.toggle_threshold, config.toggle_hysteresis),
            bow: BowTracker::new(),
            max_decay: max_decay_for(config.min_bandwidth_hz),
            nyquist: config.sample_rate / 2.0,
        })
    }

    pub fn map(&self) -> &SimplicialMap<f64> {
        &self.map
    }

    pub fn update(&mut self, pose: &PoseFrame<f64>) -> ControlFrame {
        let values = pose.values();
        let position = [values[self.axes[0]], values[self.axes[1]]];
        let z = values[self.axes[2]];
        self.map.interpolate_into(position, &mut self.scratch);
        let map_vector = self.scratch.clone();
        let mut active = map_vector.clone();

        let mut altitude_control = 0.0;
        let mut octave = false;
        match self.mode {
            AltitudeMode::Dip => {
                altitude_control = self.altitude.update(z);
                let scale = 1.0 + self.depth * altitude_control;
                if scale != 1.0 {
                    active.iter_mut().skip(2).step_by(3).for_each(|d| *d *= scale);
                }
            }
            AltitudeMode::Octave => {
                octave = self.toggle.update(z);
                let ratio = self.toggle.ratio();
                if ratio != 1.0 {
                    active.iter_mut().skip(1).step_by(3).for_each(|f| *f *= ratio);
                }
            }
            AltitudeMode::Off => {}
        }
        if let Some(max) = self.max_decay {
            active.iter_mut().skip(2).step_by(3).for_each(|d| *d = d.min(max));
        }
        let out_of_band = active
            .iter()
            .skip(1)
            .step_by(3)
            .filter(|&&f| !(f > 0.0 && f < self.nyquist))
            .count();
        let (bow_relative, bow_speed) = self.bow.update(pose);
        ControlFrame {
            time: pose.time,
            position,
            altitude: z,
            map_vector,
            active,
            altitude_control,
            octave,
            bow_relative,
            bow_speed,
            out_of_band,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::Resonance;
    use crate::simplicial::PointPair;

    fn setup(mode: AltitudeMode) -> Controller {
        let model = ResonanceModel::new("m", vec![Resonance::new(440.0, 1.0, 0.2).unwrap()], None).unwrap();
        let pairs = vec![
            PointPair::new([0.0, 0.0], vec![1.0, 400.0, 0.1]),
            PointPair::new([1.0, 0.0], vec![0.5, 800.0, 0.2]),
            PointPair::new([0.0, 1.0], vec![0.0, 600.0, 0.3]),
        ];
        let cfg = EngineConfig {
            altitude_mode: mode,
            ..EngineConfig::default()
        };
        Controller::new(&model, SimplicialMap::new(pairs).unwrap(), &cfg).unwrap()
    }

    fn pose(x: f64, y: f64, z: f64) -> PoseFrame<f64> {
        let mut v = [0.0; 12];
        v[..3].copy_from_slice(&[x, y, z]);
        PoseFrame::from_values(0.0, &v)
    }

    #[test]
    fn vertex_at_normal_altitude_is_exact() {
        let mut c = setup(AltitudeMode::Dip);
        let f = c.update(&pose(1.0, 0.0, 1.0));
        assert_eq!(f.active, vec![0.5, 800.0, 0.2]);
        assert_eq!(f.map_vector, f.active);
    }

    #[test]
    fn dip_lengthens_decay_until_clamp() {
        let mut c = setup(AltitudeMode::Dip);
        let f = c.update(&pose(0.0, 0.0, 0.5));
        assert!((f.active[2] - 0.15).abs() < 1e-15);
        // still latched after returning to normal altitude
        let f = c.update(&pose(0.0, 1.0, 1.0));
        let max = max_decay_for(5.0).unwrap();
        assert_eq!(f.active[2], (0.3f64 * 1.5).min(max));
    }

    #[test]
    fn octave_doubles_frequencies() {
        let mut c = setup(AltitudeMode::Octave);
        let f = c.update(&pose(0.0, 0.0, 0.1));
        assert!(f.octave);
        assert_eq!(f.active[1], 800.0);
        let f = c.update(&pose(0.0, 0.0, 1.0));
        assert!(!f.octave);
        assert_eq!(f.active[1], 400.0);
    }

    #[test]
    fn dimension_mismatch() {
        let model = ResonanceModel::new(
            "m",
            vec![Resonance::new(440.0, 1.0, 0.2).unwrap(), Resonance::new(880.0, 1.0, 0.2).unwrap()],
            None,
        )
        .unwrap();
        let c = setup(AltitudeMode::Off);
        let err = Controller::new(&model, c.map().clone(), &EngineConfig::default()).unwrap_err();
        assert!(matches!(err, EngineError::DimensionMismatch { expected: 6, found: 3, .. }));
    }
}
