//! Resonance models and their realization as a two-pole filter bank.
//!
//! A model is an ordered set of resonances, each described by a peak gain, a
//! center frequency and a 60 dB decay time. Bandwidth is never stored: it is
//! derived from the decay time through `B * t60 = ln(1000) / pi`, so a wide
//! resonance always rings briefly and a narrow one rings long.

mod bank;

pub use bank::{design_resonator, Coefficients, NyquistPolicy, ResonatorBank, RetargetReport};

use std::fmt;

use thiserror::Error;

use crate::scalar::{bandwidth_decay_product, Scalar};

/// Errors from resonance parameters and filter design.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResonanceError {
    #[error("decay time must be positive and finite, got {0}")]
    InvalidDecay(f64),
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("center frequency must be positive and finite, got {0}")]
    InvalidFrequency(f64),
    #[error("gain must be non-negative and finite, got {0}")]
    InvalidGain(f64),
    #[error("center frequency {freq} Hz is outside (0, {nyquist}) Hz")]
    FrequencyOutOfRange { freq: f64, nyquist: f64 },
    #[error("target pitch must be positive and finite, got {0}")]
    InvalidTarget(f64),
    #[error("parameter vector has length {found}, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("sample rate must be positive and finite, got {0}")]
    InvalidSampleRate(f64),
}

/// Errors from reading a resonance model file.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: center frequency must be positive")]
    InvalidFrequency { line: usize },
    #[error("line {line}: gain must be non-negative")]
    InvalidGain { line: usize },
    #[error("line {line}: decay time must be positive")]
    InvalidDecay { line: usize },
    #[error("line {line}: reference f0 must be positive")]
    InvalidReference { line: usize },
    #[error("model has no resonances")]
    EmptyModel,
}

/// Bandwidth in Hz of a resonance whose envelope falls 60 dB in `decay_t60` seconds.
pub fn bandwidth_from_decay<T: Scalar>(decay_t60: T) -> Result<T, ResonanceError> {
    if !(decay_t60 > T::zero()) || !decay_t60.is_finite() {
        return Err(ResonanceError::InvalidDecay(decay_t60.as_f64()));
    }
    Ok(bandwidth_decay_product::<T>() / decay_t60)
}

/// Inverse of [`bandwidth_from_decay`].
pub fn decay_from_bandwidth<T: Scalar>(bandwidth: T) -> Result<T, ResonanceError> {
    if !(bandwidth > T::zero()) || !bandwidth.is_finite() {
        return Err(ResonanceError::InvalidBandwidth(bandwidth.as_f64()));
    }
    Ok(bandwidth_decay_product::<T>() / bandwidth)
}

/// One resonance: peak gain, center frequency and 60 dB decay time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance<T> {
    pub center_freq: T,
    pub gain: T,
    pub decay_t60: T,
}

impl<T: Scalar> Resonance<T> {
    pub fn new(center_freq: T, gain: T, decay_t60: T) -> Result<Self, ResonanceError> {
        let res = Resonance {
            center_freq,
            gain,
            decay_t60,
        };
        res.check()?;
        Ok(res)
    }

    pub fn check(&self) -> Result<(), ResonanceError> {
        if !(self.center_freq > T::zero()) || !self.center_freq.is_finite() {
            return Err(ResonanceError::InvalidFrequency(self.center_freq.as_f64()));
        }
        if !(self.gain >= T::zero()) || !self.gain.is_finite() {
            return Err(ResonanceError::InvalidGain(self.gain.as_f64()));
        }
        if !(self.decay_t60 > T::zero()) || !self.decay_t60.is_finite() {
            return Err(ResonanceError::InvalidDecay(self.decay_t60.as_f64()));
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> T {
        bandwidth_decay_product::<T>() / self.decay_t60
    }
}

/// An ordered set of resonances, sorted by center frequency.
///
/// Transposition is stored as a target pitch rather than applied to the
/// stored frequencies, so transposing back to the reference pitch reproduces
/// the authored frequencies bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceModel<T> {
    name: String,
    resonances: Vec<Resonance<T>>,
    reference_f0: T,
    pitch: T,
}

impl<T: Scalar> ResonanceModel<T> {
    /// Builds a model, sorting the resonances by frequency. `reference_f0`
    /// defaults to the lowest center frequency.
    pub fn new(
        name: impl Into<String>,
        mut resonances: Vec<Resonance<T>>,
        reference_f0: Option<T>,
    ) -> Result<Self, ModelError> {
        if resonances.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        for (i, res) in resonances.iter().enumerate() {
            res.check().map_err(|e| line_error(e, i + 1))?;
        }
        resonances.sort_by(|a, b| a.center_freq.partial_cmp(&b.center_freq).unwrap());
        let reference_f0 = match reference_f0 {
            Some(f0) if f0 > T::zero() && f0.is_finite() => f0,
            Some(_) => return Err(ModelError::InvalidReference { line: 0 }),
            None => resonances[0].center_freq,
        };
        Ok(ResonanceModel {
            name: name.into(),
            resonances,
            reference_f0,
            pitch: reference_f0,
        })
    }

    /// Parses the three-column text format:
    ///
    /// ```text
    /// # comment
    /// @f0 440
    /// 440  1.0  2.0
    /// 880  0.5  1.0
    /// ```
    ///
    /// Columns are center frequency (Hz), linear gain and t60 (s).
    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self, ModelError> {
        let mut resonances = Vec::new();
        let mut reference_f0 = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix("@f0") {
                let value: f64 = rest.trim().parse().map_err(|_| ModelError::Malformed {
                    line,
                    reason: format!("cannot parse reference f0 {:?}", rest.trim()),
                })?;
                if !(value > 0.0) || !value.is_finite() {
                    return Err(ModelError::InvalidReference { line });
                }
                reference_f0 = Some(T::lit(value));
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(ModelError::Malformed {
                    line,
                    reason: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let mut values = [0.0f64; 3];
            for (slot, field) in values.iter_mut().zip(&fields) {
                *slot = field.parse().map_err(|_| ModelError::Malformed {
                    line,
                    reason: format!("cannot parse number {field:?}"),
                })?;
            }
            let res = Resonance {
                center_freq: T::lit(values[0]),
                gain: T::lit(values[1]),
                decay_t60: T::lit(values[2]),
            };
            res.check().map_err(|e| line_error(e, line))?;
            resonances.push(res);
        }
        if resonances.is_empty() {
            return Err(ModelError::EmptyModel);
        }
        Self::new(name, resonances, reference_f0)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.resonances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resonances.is_empty()
    }

    pub fn reference_f0(&self) -> T {
        self.reference_f0
    }

    /// Pitch the model is currently transposed to.
    pub fn pitch(&self) -> T {
        self.pitch
    }

    fn ratio(&self) -> Option<T> {
        if self.pitch == self.reference_f0 {
            None
        } else {
            Some(self.pitch / self.reference_f0)
        }
    }

    /// Resonance `i` with transposition applied.
    pub fn resonance(&self, i: usize) -> Resonance<T> {
        let mut res = self.resonances[i];
        if let Some(ratio) = self.ratio() {
            res.center_freq = res.center_freq * ratio;
        }
        res
    }

    /// Resonances with transposition applied, ascending in frequency.
    pub fn resonances(&self) -> impl Iterator<Item = Resonance<T>> + '_ {
        (0..self.len()).map(move |i| self.resonance(i))
    }

    /// Scales every center frequency by `target_f0 / reference_f0`.
    /// Resonances that land at or above Nyquist are kept here and dropped when
    /// the model is realized as a filter bank.
    pub fn transpose(&self, target_f0: T) -> Result<Self, ResonanceError> {
        if !(target_f0 > T::zero()) || !target_f0.is_finite() {
            return Err(ResonanceError::InvalidTarget(target_f0.as_f64()));
        }
        let mut out = self.clone();
        out.pitch = target_f0;
        Ok(out)
    }

    /// Number of resonances at or above `sample_rate / 2` after transposition.
    pub fn count_above_nyquist(&self, sample_rate: T) -> usize {
        let nyquist = sample_rate / T::lit(2.0);
        self.resonances().filter(|r| r.center_freq >= nyquist).count()
    }

    /// Replaces the authored resonances' decay times (used by bandwidth clamping).
    pub fn map_decays(&self, mut f: impl FnMut(T) -> T) -> Self {
        let mut out = self.clone();
        for res in &mut out.resonances {
            res.decay_t60 = f(res.decay_t60);
        }
        out
    }

    /// Flat `[gain, freq, decay]` vector, one triple per resonance.
    pub fn to_params(&self) -> Vec<T> {
        self.resonances()
            .flat_map(|r| [r.gain, r.center_freq, r.decay_t60])
            .collect()
    }
}

impl<T: Scalar> fmt::Display for ResonanceModel<T> {
    /// Writes the model back in the text file format, transposition applied.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# {}", self.name)?;
        writeln!(f, "@f0 {}", self.pitch)?;
        for r in self.resonances() {
            writeln!(f, "{} {} {}", r.center_freq, r.gain, r.decay_t60)?;
        }
        Ok(())
    }
}

fn line_error(err: ResonanceError, line: usize) -> ModelError {
    match err {
        ResonanceError::InvalidFrequency(_) => ModelError::InvalidFrequency { line },
        ResonanceError::InvalidGain(_) => ModelError::InvalidGain { line },
        ResonanceError::InvalidDecay(_) => ModelError::InvalidDecay { line },
        other => ModelError::Malformed {
            line,
            reason: other.to_string(),
        },
    }
}
