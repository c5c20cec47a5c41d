use crate::level::{AmplitudeFollower, NoiseSource, Normalizer};
use crate::resonance::{NyquistPolicy, ResonanceError, ResonanceModel, ResonatorBank};
use crate::tracker::{FeatureFrame, Tracker, TrackerConfig};

use super::config::EngineConfig;

/// Levels and features measured while processing one block.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioReport {
    pub input_level: f64,
    pub output_level: f64,
    pub gain: f64,
    pub frames: Vec<FeatureFrame<f64>>,
}

/// The audio-side owner: noise injection, resonator bank, normalization and
/// feature tracking, one block at a time.
pub struct AudioProcessor {
    bank: ResonatorBank<f64>,
    input_follower: AmplitudeFollower<f64>,
    output_follower: AmplitudeFollower<f64>,
    normalizer: Normalizer<f64>,
    noise: NoiseSource,
    noise_mix: f64,
    tracker: Tracker<f64>,
    block_dt: f64,
    scratch: Vec<f64>,
}

impl AudioProcessor {
    pub fn new(model: &ResonanceModel<f64>, config: &EngineConfig, noise_mix: f64) -> Result<Self, ResonanceError> {
        let fs = config.sample_rate;
        let tracker_config = TrackerConfig {
            lowest_freq_hz: config.lowest_freq_hz,
            ..TrackerConfig::default()
        };
        Ok(AudioProcessor {
            bank: ResonatorBank::from_model(model, fs)?,
            input_follower: AmplitudeFollower::new(fs, config.lowest_freq_hz),
            output_follower: AmplitudeFollower::new(fs, config.lowest_freq_hz),
            normalizer: Normalizer::new(config.smoothing_ms / 1000.0, config.level_floor),
            noise: NoiseSource::new(config.seed),
            noise_mix,
            tracker: Tracker::new(fs, tracker_config),
            block_dt: config.block_size as f64 / fs,
            scratch: Vec::with_capacity(config.block_size),
        })
    }

    pub fn bank(&self) -> &ResonatorBank<f64> {
        &self.bank
    }

    /// Queues new bank parameters; they ramp in over the next block.
    /// Out-of-band resonances are silenced rather than aliased.
    pub fn retarget(&mut self, params: &[f64]) -> Result<usize, ResonanceError> {
        let report = self.bank.retarget_with(params, NyquistPolicy::Drop)?;
        Ok(report.dropped.len())
    }

    /// Processes one block. The follower and tracker see the clean input;
    /// the bank sees the input plus noise scaled by the input level.
    pub fn process(&mut self, input: &[f64], output: &mut [f64]) -> AudioReport {
        let input_level = self.input_follower.follow(input);
        let frames = self.tracker.push(input);

        self.scratch.clear();
        self.scratch.extend_from_slice(input);
        self.noise.inject(&mut self.scratch, input_level, self.noise_mix);
        self.bank.process_block(&self.scratch, output);

        let output_level = self.output_follower.follow(output);
        let previous = self.normalizer.gain();
        let gain = self.normalizer.update(input_level, output_level, self.block_dt);
        // ramp the gain across the block to avoid steps
        let len = output.len();
        let n = len as f64;
        for (i, y) in output.iter_mut().enumerate() {
            let g = if i + 1 == len {
                gain
            } else {
                previous + (gain - previous) * ((i + 1) as f64 / n)
            };
            *y *= g;
        }
        AudioReport {
            input_level,
            output_level,
            gain,
            frames,
        }
    }
}
