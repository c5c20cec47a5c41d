use std::path::Path;

use crate::gesture::PoseFrame;

use super::config::Interpolation;
use super::{read_text, EngineError};

/// One timestamped pose: violin x, y, z, yaw, pitch, roll then the bow's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryFrame {
    pub time: f64,
    pub values: [f64; 12],
}

/// Recorded pose stream with strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    frames: Vec<TrajectoryFrame>,
}

pub const TRAJECTORY_HEADER: &str = "time_s,vx,vy,vz,vyaw,vpitch,vroll,bx,by,bz,byaw,bpitch,broll";

impl Trajectory {
    pub fn new(frames: Vec<TrajectoryFrame>) -> Result<Self, EngineError> {
        if frames.is_empty() {
            return Err(EngineError::Trajectory {
                line: 0,
                reason: "trajectory has no frames".into(),
            });
        }
        for (i, w) in frames.windows(2).enumerate() {
            if !(w[1].time > w[0].time) {
                return Err(EngineError::Trajectory {
                    line: i + 2,
                    reason: format!("time {} does not increase past {}", w[1].time, w[0].time),
                });
            }
        }
        Ok(Trajectory { frames })
    }

    /// A single pose held forever.
    pub fn stationary(values: [f64; 12]) -> Self {
        Trajectory {
            frames: vec![TrajectoryFrame { time: 0.0, values }],
        }
    }

    pub fn load(path: &Path) -> Result<Self, EngineError> {
        Self::parse(&read_text(path)?)
    }

    /// Reads CSV with 13 columns; a non-numeric first line is taken as the header.
    pub fn parse(text: &str) -> Result<Self, EngineError> {
        let mut frames = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split(',').map(str::trim).collect();
            if frames.is_empty() && fields[0].parse::<f64>().is_err() {
                continue;
            }
            if fields.len() != 13 {
                return Err(EngineError::Trajectory {
                    line,
                    reason: format!("expected 13 columns, found {}", fields.len()),
                });
            }
            let mut nums = [0.0; 13];
            for (slot, f) in nums.iter_mut().zip(&fields) {
                *slot = f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| EngineError::Trajectory {
                    line,
                    reason: format!("cannot parse number {f:?}"),
                })?;
            }
            let mut values = [0.0; 12];
            values.copy_from_slice(&nums[1..]);
            frames.push(TrajectoryFrame { time: nums[0], values });
        }
        Self::new(frames)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(TRAJECTORY_HEADER);
        out.push('\n');
        for f in &self.frames {
            out.push_str(&f.time.to_string());
            for v in f.values {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn frames(&self) -> &[TrajectoryFrame] {
        &self.frames
    }

    pub fn duration(&self) -> f64 {
        self.frames.last().unwrap().time
    }

    /// Pose at time `t`; held constant before the first and after the last frame.
    pub fn sample(&self, t: f64, interp: Interpolation) -> PoseFrame<f64> {
        let frames = &self.frames;
        let after = frames.partition_point(|f| f.time <= t);
        let values = if after == 0 {
            frames[0].values
        } else if after == frames.len() {
            frames[after - 1].values
        } else {
            let (a, b) = (&frames[after - 1], &frames[after]);
            match interp {
                Interpolation::Step => a.values,
                Interpolation::Linear => {
                    let w = (t - a.time) / (b.time - a.time);
                    if w == 0.0 {
                        a.values
                    } else {
                        std::array::from_fn(|i| a.values[i] + w * (b.values[i] - a.values[i]))
                    }
                }
            }
        };
        PoseFrame::from_values(t, &values)
    }
}
