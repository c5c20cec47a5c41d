//! Loudness coupling between the instrument input and the filter-bank output.
//!
//! An RMS follower measures both signals over a window at least one period of
//! the instrument's lowest note long; the normalizer scales the bank output so
//! its level tracks the input. Scaled white noise can be mixed into the bank
//! input so resonances that no partial excites still sound, and narrow
//! resonances can be widened before realization to avoid sudden blowups.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::resonance::{decay_from_bandwidth, ResonanceModel};
use crate::scalar::Scalar;

/// Lowest open-string frequency of the five-string instrument, in Hz.
pub const DEFAULT_LOWEST_FREQ_HZ: f64 = 130.0;
pub const DEFAULT_SMOOTHING_S: f64 = 0.010;
pub const DEFAULT_FLOOR: f64 = 1e-6;
pub const DEFAULT_NOISE_MIX: f64 = 0.1;
pub const DEFAULT_MIN_BANDWIDTH_HZ: f64 = 5.0;

/// Window length in samples covering one full period of `lowest_freq_hz`.
pub fn window_len(sample_rate: f64, lowest_freq_hz: f64) -> usize {
    (sample_rate / lowest_freq_hz).ceil().max(1.0) as usize
}

/// Trailing-window RMS follower.
#[derive(Debug, Clone)]
pub struct AmplitudeFollower<T> {
    history: Vec<T>,
    pos: usize,
    sum: T,
    since_resum: usize,
}

impl<T: Scalar> AmplitudeFollower<T> {
    pub fn new(sample_rate: f64, lowest_freq_hz: f64) -> Self {
        Self::with_window(window_len(sample_rate, lowest_freq_hz))
    }

    pub fn with_window(window_len: usize) -> Self {
        let window_len = window_len.max(1);
        AmplitudeFollower {
            history: vec![T::zero(); window_len],
            pos: 0,
            sum: T::zero(),
            since_resum: 0,
        }
    }

    pub fn window_len(&self) -> usize {
        self.history.len()
    }

    /// Level reports per second when one report is made per block.
    pub fn reports_per_second(sample_rate: f64, block_size: usize) -> f64 {
        sample_rate / block_size as f64
    }

    /// Pushes one sample without computing a report.
    pub fn push(&mut self, x: T) {
        let sq = x * x;
        let old = self.history[self.pos];
        self.history[self.pos] = sq;
        self.sum = self.sum + sq - old;
        self.pos = (self.pos + 1) % self.history.len();
        self.since_resum += 1;
        if self.since_resum >= self.history.len() {
            // running sums drift; recompute once per window
            self.sum = self.history.iter().fold(T::zero(), |acc, &v| acc + v);
            self.since_resum = 0;
        }
    }

    /// Consumes a block and reports the RMS over the trailing window.
    pub fn follow(&mut self, block: &[T]) -> T {
        for &x in block {
            self.push(x);
        }
        self.level()
    }

    /// RMS over the trailing window. Before the window fills the missing
    /// samples count as silence.
    pub fn level(&self) -> T {
        let mean = self.sum / T::from_count(self.history.len());
        mean.max(T::zero()).sqrt()
    }

    pub fn reset(&mut self) {
        self.history.iter_mut().for_each(|v| *v = T::zero());
        self.sum = T::zero();
        self.pos = 0;
        self.since_resum = 0;
    }
}

/// First-order smoothed output gain that makes `output_level` follow `input_level`.
#[derive(Debug, Clone)]
pub struct Normalizer<T> {
    gain: T,
    time_constant: T,
    floor: T,
}

impl<T: Scalar> Normalizer<T> {
    pub fn new(time_constant_s: f64, floor: f64) -> Self {
        Normalizer {
            gain: T::one(),
            time_constant: T::lit(time_constant_s.max(0.0)),
            floor: T::lit(floor.max(f64::MIN_POSITIVE)),
        }
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    pub fn time_constant(&self) -> T {
        self.time_constant
    }

    pub fn set_time_constant(&mut self, seconds: f64) {
        self.time_constant = T::lit(seconds.max(0.0));
    }

    /// Gain that would exactly match the two levels.
    pub fn target(&self, input_level: T, output_level: T) -> T {
        let input = sanitize(input_level);
        let output = sanitize(output_level).max(self.floor);
        input / output
    }

    /// Moves the applied gain toward the target over `dt` seconds and returns it.
    pub fn update(&mut self, input_level: T, output_level: T, dt: T) -> T {
        let target = self.target(input_level, output_level);
        let alpha = if self.time_constant > T::zero() {
            T::one() - (-sanitize(dt) / self.time_constant).exp()
        } else {
            T::one()
        };
        let next = self.gain + (target - self.gain) * alpha;
        if next.is_finite() {
            self.gain = next.max(T::zero());
        }
        self.gain
    }
}

fn sanitize<T: Scalar>(level: T) -> T {
    if level.is_finite() && level > T::zero() {
        level
    } else {
        T::zero()
    }
}

/// Seeded uniform white noise in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
}

impl NoiseSource {
    pub fn new(seed: u64) -> Self {
        NoiseSource {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Adds `mix * input_level * u[i]` to each sample in place.
    pub fn inject<T: Scalar>(&mut self, block: &mut [T], input_level: T, mix: T) {
        let scale = mix * input_level;
        if !(scale > T::zero()) || !scale.is_finite() {
            return;
        }
        for x in block.iter_mut() {
            let u: f64 = self.rng.gen_range(-1.0..=1.0);
            *x = *x + scale * T::lit(u);
        }
    }
}

/// Widens every resonance narrower than `min_bandwidth` Hz by shortening its
/// decay. Returns the adjusted model and how many resonances changed.
pub fn clamp_bandwidths<T: Scalar>(model: &ResonanceModel<T>, min_bandwidth: T) -> (ResonanceModel<T>, usize) {
    let Some(max_decay) = max_decay_for(min_bandwidth) else {
        return (model.clone(), 0);
    };
    let mut count = 0;
    let out = model.map_decays(|d| {
        if d > max_decay {
            count += 1;
            max_decay
        } else {
            d
        }
    });
    (out, count)
}

/// Longest decay allowed by a minimum bandwidth; `None` disables clamping.
pub fn max_decay_for<T: Scalar>(min_bandwidth: T) -> Option<T> {
    decay_from_bandwidth(min_bandwidth).ok()
}
