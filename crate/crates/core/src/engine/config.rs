use std::path::{Path, PathBuf};

use crate::level::{DEFAULT_FLOOR, DEFAULT_LOWEST_FREQ_HZ, DEFAULT_MIN_BANDWIDTH_HZ, DEFAULT_NOISE_MIX};

use super::{read_text, EngineError};

/// How trajectory poses are sampled between frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Linear,
    Step,
}

/// What the instrument's altitude controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AltitudeMode {
    /// Running-minimum dip lengthens every decay by `1 + depth * control`.
    Dip,
    /// Hysteresis toggle transposes the active parameters up an octave.
    Octave,
    Off,
}

/// Engine settings, read from a flat `key = value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub sample_rate: f64,
    pub block_size: usize,
    pub control_tick_ms: u64,
    pub model_path: Option<PathBuf>,
    pub map_path: Option<PathBuf>,
    pub lowest_freq_hz: f64,
    pub min_bandwidth_hz: f64,
    /// `None` means the mode default: on (0.1) live, off offline.
    pub noise_mix: Option<f64>,
    pub smoothing_ms: f64,
    pub level_floor: f64,
    pub altitude_mode: AltitudeMode,
    pub altitude_depth: f64,
    pub normal_altitude: f64,
    pub altitude_floor: f64,
    pub reset_margin: f64,
    pub toggle_threshold: f64,
    pub toggle_hysteresis: f64,
    /// Pose axes (0..12) used as latitude, longitude and altitude.
    pub axes: [usize; 3],
    pub interpolation: Interpolation,
    pub osc_host: String,
    pub osc_port: u16,
    pub bridge_port: u16,
    pub seed: u64,
    pub trajectory_path: Option<PathBuf>,
    pub input_wav: Option<PathBuf>,
    pub output_wav: Option<PathBuf>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            sample_rate: 44_100.0,
            block_size: 256,
            control_tick_ms: 5,
            model_path: None,
            map_path: None,
            lowest_freq_hz: DEFAULT_LOWEST_FREQ_HZ,
            min_bandwidth_hz: DEFAULT_MIN_BANDWIDTH_HZ,
            noise_mix: None,
            smoothing_ms: 10.0,
            level_floor: DEFAULT_FLOOR,
            altitude_mode: AltitudeMode::Dip,
            altitude_depth: 1.0,
            normal_altitude: 1.0,
            altitude_floor: 0.0,
            reset_margin: 0.02,
            toggle_threshold: 0.5,
            toggle_hysteresis: 0.05,
            axes: [0, 1, 2],
            interpolation: Interpolation::Linear,
            osc_host: "0.0.0.0".into(),
            osc_port: 5505,
            bridge_port: 5506,
            seed: 0,
            trajectory_path: None,
            input_wav: None,
            output_wav: None,
        }
    }
}

const AXIS_NAMES: [&str; 12] = [
    "vx", "vy", "vz", "vyaw", "vpitch", "vroll", "bx", "by", "bz", "byaw", "bpitch", "broll",
];

impl EngineConfig {
    pub fn noise_mix_offline(&self) -> f64 {
        self.noise_mix.unwrap_or(0.0)
    }

    pub fn noise_mix_live(&self) -> f64 {
        self.noise_mix.unwrap_or(DEFAULT_NOISE_MIX)
    }

    /// Reads a config file; relative paths are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, EngineError> {
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&read_text(path)?, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, EngineError> {
        let mut cfg = EngineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |reason: String| EngineError::Config { line, reason };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim().trim_matches('"'));
            let num = || value.parse::<f64>().map_err(|_| err(format!("{key}: cannot parse number {value:?}")));
            let int = || value.parse::<u64>().map_err(|_| err(format!("{key}: cannot parse integer {value:?}")));
            let port = || value.parse::<u16>().map_err(|_| err(format!("{key}: invalid port {value:?}")));
            let file = || Some(base.join(value));
            match key {
                "sample_rate" => cfg.sample_rate = num()?,
                "block_size" => cfg.block_size = int()? as usize,
                "control_tick_ms" | "control_tick" => cfg.control_tick_ms = int()?,
                "model_path" | "model" => cfg.model_path = file(),
                "map_path" | "map" => cfg.map_path = file(),
                "lowest_freq_hz" => cfg.lowest_freq_hz = num()?,
                "min_bandwidth_hz" => cfg.min_bandwidth_hz = num()?,
                "noise_mix" => cfg.noise_mix = Some(num()?),
                "smoothing_ms" => cfg.smoothing_ms = num()?,
                "level_floor" => cfg.level_floor = num()?,
                "altitude_mode" => {
                    cfg.altitude_mode = match value {
                        "dip" => AltitudeMode::Dip,
                        "octave" => AltitudeMode::Octave,
                        "off" => AltitudeMode::Off,
                        _ => return Err(err(format!("altitude_mode must be dip, octave or off, got {value:?}"))),
                    }
                }
                "altitude_depth" => cfg.altitude_depth = num()?,
                "normal_altitude" => cfg.normal_altitude = num()?,
                "altitude_floor" => cfg.altitude_floor = num()?,
                "reset_margin" => cfg.reset_margin = num()?,
                "toggle_threshold" => cfg.toggle_threshold = num()?,
                "toggle_hysteresis" => cfg.toggle_hysteresis = num()?,
                "axes" => {
                    let names: Vec<&str> = value.split(',').map(str::trim).collect();
                    if names.len() != 3 {
                        return Err(err("axes needs three comma-separated names, e.g. vx,vy,vz".into()));
                    }
                    for (slot, name) in cfg.axes.iter_mut().zip(&names) {
                        *slot = AXIS_NAMES
                            .iter()
                            .position(|a| a == name)
                            .ok_or_else(|| err(format!("unknown axis {name:?}")))?;
                    }
                }
                "interpolation" | "trajectory_interp" => {
                    cfg.interpolation = match value {
                        "linear" => Interpolation::Linear,
                        "step" => Interpolation::Step,
                        _ => return Err(err(format!("interpolation must be linear or step, got {value:?}"))),
                    }
                }
                "osc_host" => cfg.osc_host = value.to_string(),
                "osc_port" | "port" => cfg.osc_port = port()?,
                "bridge_port" => cfg.bridge_port = port()?,
                "seed" => cfg.seed = int()?,
                "trajectory_path" | "trajectory" => cfg.trajectory_path = file(),
                "input_wav" => cfg.input_wav = file(),
                "output_wav" => cfg.output_wav = file(),
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        cfg.check()?;
        Ok(cfg)
    }

    /// Range checks; `line` 0 in the error means "whole file".
    pub fn check(&self) -> Result<(), EngineError> {
        let err = |reason: String| Err(EngineError::Config { line: 0, reason });
        if self.block_size < 16 {
            return err(format!("block_size must be at least 16, got {}", self.block_size));
        }
        if !(1..=50).contains(&self.control_tick_ms) {
            return err(format!("control_tick_ms must be in [1, 50], got {}", self.control_tick_ms));
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return err(format!("sample_rate must be positive, got {}", self.sample_rate));
        }
        if !(self.lowest_freq_hz > 0.0) {
            return err("lowest_freq_hz must be positive".into());
        }
        if !(self.min_bandwidth_hz >= 0.0) {
            return err("min_bandwidth_hz must be non-negative".into());
        }
        if self.noise_mix.is_some_and(|k| !(k >= 0.0)) {
            return err("noise_mix must be non-negative".into());
        }
        if !(self.normal_altitude > self.altitude_floor) {
            return err("normal_altitude must exceed altitude_floor".into());
        }
        if !(self.toggle_hysteresis > 0.0) {
            return err("toggle_hysteresis must be positive".into());
        }
        for path in [&self.model_path, &self.map_path, &self.trajectory_path, &self.input_wav]
            .into_iter()
            .flatten()
        {
            if !path.exists() {
                return err(format!("file not found: {}", path.display()));
            }
        }
        Ok(())
    }
}
