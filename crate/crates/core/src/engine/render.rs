use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::gesture::PoseFrame;
use crate::resonance::ResonanceModel;
use crate::simplicial::SimplicialMap;

use super::audio::AudioProcessor;
use super::config::EngineConfig;
use super::control::Controller;
use super::trajectory::Trajectory;
use super::wav::{partial_path, read_wav_mono, write_wav_f32};
use super::{load_map, load_model, EngineError};

pub const LOG_VERSION: &str = "v1";

/// One parameter-log row, written once per audio block.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub time: f64,
    pub f0: Option<f64>,
    pub amplitude: f64,
    pub centroid: Option<f64>,
    pub position: [f64; 2],
    pub params: Vec<f64>,
}

/// Inputs for an in-memory render.
#[derive(Debug, Clone)]
pub struct RenderRequest<'a> {
    pub input: &'a [f64],
    pub trajectory: &'a Trajectory,
    pub model: &'a ResonanceModel<f64>,
    pub map: &'a SimplicialMap<f64>,
    pub config: &'a EngineConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderOutput {
    pub samples: Vec<f64>,
    pub log: Vec<LogRow>,
    pub block_size: usize,
    pub sample_rate: f64,
}

impl RenderOutput {
    /// The parameter log as versioned CSV.
    pub fn log_csv(&self) -> String {
        let dim = self.log.first().map_or(0, |r| r.params.len());
        let mut out = format!(
            "# resteer parameter log {LOG_VERSION}; block_size={}; sample_rate={}\n",
            self.block_size, self.sample_rate
        );
        out.push_str("time_s,f0_hz,amplitude,centroid_hz,pos_x,pos_y");
        for i in 0..dim {
            let _ = write!(out, ",p{i}");
        }
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &self.log {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                row.time,
                opt(row.f0),
                row.amplitude,
                opt(row.centroid),
                row.position[0],
                row.position[1]
            );
            for p in &row.params {
                let _ = write!(out, ",{p}");
            }
            out.push('\n');
        }
        out
    }
}

/// Reads a log written by [`RenderOutput::log_csv`].
pub fn parse_log(text: &str) -> Result<Vec<LogRow>, String> {
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.starts_with(&format!("# resteer parameter log {LOG_VERSION}")) => {}
        _ => return Err("missing version header".into()),
    }
    lines.next();
    for (idx, line) in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 6 {
            return Err(format!("line {}: too few columns", idx + 1));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| format!("line {}: bad number {s:?}", idx + 1));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
        rows.push(LogRow {
            time: num(fields[0])?,
            f0: opt(fields[1])?,
            amplitude: num(fields[2])?,
            centroid: opt(fields[3])?,
            position: [num(fields[4])?, num(fields[5])?],
            params: fields[6..].iter().map(|s| num(s)).collect::<Result<_, _>>()?,
        });
    }
    Ok(rows)
}

/// Renders `input` block by block: sample the trajectory at the block start,
/// update gestures, evaluate the map, retarget, filter and normalize.
pub fn render_offline(req: &RenderRequest<'_>) -> Result<RenderOutput, EngineError> {
    let config = req.config;
    config.check()?;
    let fs = config.sample_rate;
    let mut controller = Controller::new(req.model, req.map.clone(), config)?;
    let mut audio = AudioProcessor::new(req.model, config, config.noise_mix_offline())?;
    let mut samples = vec![0.0; req.input.len()];
    let mut log = Vec::with_capacity(req.input.len() / config.block_size + 1);
    let (mut f0, mut centroid) = (None, None);
    for (index, (block, out)) in req
        .input
        .chunks(config.block_size)
        .zip(samples.chunks_mut(config.block_size))
        .enumerate()
    {
        let time = (index * config.block_size) as f64 / fs;
        let pose: PoseFrame<f64> = req.trajectory.sample(time, config.interpolation);
        let frame = controller.update(&pose);
        audio.retarget(&frame.active)?;
        let report = audio.process(block, out);
        if let Some(last) = report.frames.last() {
            f0 = last.f0;
            centroid = last.centroid;
        }
        log.push(LogRow {
            time,
            f0,
            amplitude: report.input_level,
            centroid,
            position: frame.position,
            params: frame.active,
        });
    }
    Ok(RenderOutput {
        samples,
        log,
        block_size: config.block_size,
        sample_rate: fs,
    })
}

/// File-level render. The sample rate comes from the input WAV.
pub fn render_files(
    input: &Path,
    trajectory: &Path,
    model: &Path,
    map: &Path,
    output: &Path,
    log_path: Option<&Path>,
    config: &EngineConfig,
) -> Result<RenderOutput, EngineError> {
    let (samples, rate) = read_wav_mono(input)?;
    let config = EngineConfig {
        sample_rate: f64::from(rate),
        ..config.clone()
    };
    let trajectory = Trajectory::load(trajectory)?;
    let model = load_model(model)?;
    let map = load_map(map)?;
    let result = render_offline(&RenderRequest {
        input: &samples,
        trajectory: &trajectory,
        model: &model,
        map: &map,
        config: &config,
    })?;
    write_wav_f32(output, &result.samples, rate)?;
    if let Some(path) = log_path {
        write_atomic(path, &result.log_csv())?;
    }
    Ok(result)
}

pub(crate) fn write_atomic(path: &Path, text: &str) -> Result<(), EngineError> {
    let io_err = |source| EngineError::Io {
        path: PathBuf::from(path),
        source,
    };
    let partial = partial_path(path);
    std::fs::write(&partial, text).map_err(io_err)?;
    std::fs::rename(&partial, path).map_err(io_err)
}
