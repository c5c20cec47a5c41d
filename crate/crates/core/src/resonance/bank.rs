use crate::scalar::Scalar;

use super::{bandwidth_from_decay, Resonance, ResonanceError, ResonanceModel};

/// Two-pole resonator coefficients.
///
/// The recursion is `w[n] = norm*x[n] + a1*w[n-1] + a2*w[n-2]` and the output
/// is `gain * w[n]`, so the effective input scale is `gain * norm` and the
/// magnitude response at the center frequency equals `gain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients<T> {
    pub a1: T,
    pub a2: T,
    pub norm: T,
    pub gain: T,
    pub radius: T,
}

impl<T: Scalar> Coefficients<T> {
    pub fn silent() -> Self {
        Coefficients {
            a1: T::zero(),
            a2: T::zero(),
            norm: T::zero(),
            gain: T::zero(),
            radius: T::zero(),
        }
    }

    /// Input scale `s` of `y[n] = s*x[n] + a1*y[n-1] + a2*y[n-2]`.
    pub fn input_scale(&self) -> T {
        self.gain * self.norm
    }

    fn lerp(&self, to: &Self, t: T) -> Self {
        let mix = |a: T, b: T| a + (b - a) * t;
        Coefficients {
            a1: mix(self.a1, to.a1),
            a2: mix(self.a2, to.a2),
            norm: mix(self.norm, to.norm),
            gain: mix(self.gain, to.gain),
            radius: mix(self.radius, to.radius),
        }
    }
}

/// Designs the resonator for `res` at `sample_rate`.
///
/// Pole radius is `exp(-pi * B / fs)` with `B` the bandwidth derived from the
/// decay time; the input scale is solved so `|H(e^{j w0})| = gain`.
pub fn design_resonator<T: Scalar>(
    res: &Resonance<T>,
    sample_rate: T,
) -> Result<Coefficients<T>, ResonanceError> {
    check_rate(sample_rate)?;
    res.check()?;
    let nyquist = sample_rate / T::lit(2.0);
    if res.center_freq >= nyquist {
        return Err(ResonanceError::FrequencyOutOfRange {
            freq: res.center_freq.as_f64(),
            nyquist: nyquist.as_f64(),
        });
    }
    let bandwidth = bandwidth_from_decay(res.decay_t60)?;
    let omega = T::TAU() * res.center_freq / sample_rate;
    let radius = (-T::PI() * bandwidth / sample_rate).exp();
    let a1 = T::lit(2.0) * radius * omega.cos();
    let a2 = -radius * radius;
    // |1 - a1 e^{-jw} - a2 e^{-2jw}| at w0
    let two = T::lit(2.0);
    let re = T::one() - a1 * omega.cos() - a2 * (two * omega).cos();
    let im = a1 * omega.sin() + a2 * (two * omega).sin();
    let norm = re.hypot(im);
    Ok(Coefficients {
        a1,
        a2,
        norm,
        gain: res.gain,
        radius,
    })
}

fn check_rate<T: Scalar>(sample_rate: T) -> Result<(), ResonanceError> {
    if !(sample_rate > T::zero()) || !sample_rate.is_finite() {
        return Err(ResonanceError::InvalidSampleRate(sample_rate.as_f64()));
    }
    Ok(())
}

/// What [`ResonatorBank::retarget_with`] does with frequencies outside `(0, Nyquist)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NyquistPolicy {
    /// Clamp into the open band and report the slot.
    Clamp,
    /// Silence the slot (gain ramps to zero) and report it as dropped.
    Drop,
}

/// Slots adjusted by a retarget.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RetargetReport {
    pub clamped: Vec<usize>,
    pub dropped: Vec<usize>,
}

impl RetargetReport {
    pub fn is_clean(&self) -> bool {
        self.clamped.is_empty() && self.dropped.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Slot<T> {
    current: Coefficients<T>,
    target: Coefficients<T>,
    y1: T,
    y2: T,
}

/// A bank of two-pole resonators summed into one output.
///
/// A retarget takes effect over the next processed block: every coefficient
/// moves linearly from its current value to the target, reaching the target
/// on the block's last sample.
#[derive(Debug, Clone)]
pub struct ResonatorBank<T> {
    sample_rate: T,
    slots: Vec<Slot<T>>,
    pending: bool,
    dropped: usize,
}

impl<T: Scalar> ResonatorBank<T> {
    /// Realizes `model` at `sample_rate`. Resonances at or above Nyquist get a
    /// silent slot; their count is available from [`Self::dropped`].
    pub fn from_model(model: &ResonanceModel<T>, sample_rate: T) -> Result<Self, ResonanceError> {
        check_rate(sample_rate)?;
        let nyquist = sample_rate / T::lit(2.0);
        let mut dropped = 0;
        let mut slots = Vec::with_capacity(model.len());
        for res in model.resonances() {
            let coeffs = if res.center_freq >= nyquist {
                dropped += 1;
                Coefficients::silent()
            } else {
                design_resonator(&res, sample_rate)?
            };
            slots.push(Slot {
                current: coeffs,
                target: coeffs,
                y1: T::zero(),
                y2: T::zero(),
            });
        }
        Ok(ResonatorBank {
            sample_rate,
            slots,
            pending: false,
            dropped,
        })
    }

    pub fn sample_rate(&self) -> T {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Resonances dropped at realization for sitting at or above Nyquist.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    pub fn coefficients(&self, slot: usize) -> &Coefficients<T> {
        &self.slots[slot].current
    }

    pub fn target_coefficients(&self, slot: usize) -> &Coefficients<T> {
        &self.slots[slot].target
    }

    pub fn has_pending(&self) -> bool {
        self.pending
    }

    /// Zeroes the filter memories; coefficients are kept.
    pub fn reset(&mut self) {
        for slot in &mut self.slots {
            slot.y1 = T::zero();
            slot.y2 = T::zero();
        }
    }

    /// Sets new targets from a flat `[gain, freq, decay]` vector, clamping
    /// out-of-band frequencies.
    pub fn retarget(&mut self, params: &[T]) -> Result<RetargetReport, ResonanceError> {
        self.retarget_with(params, NyquistPolicy::Clamp)
    }

    pub fn retarget_with(
        &mut self,
        params: &[T],
        policy: NyquistPolicy,
    ) -> Result<RetargetReport, ResonanceError> {
        let expected = 3 * self.slots.len();
        if params.len() != expected {
            return Err(ResonanceError::LengthMismatch {
                expected,
                found: params.len(),
            });
        }
        let nyquist = self.sample_rate / T::lit(2.0);
        // keep clamped poles strictly inside (0, nyquist)
        let edge = nyquist * T::lit(1e-6);
        let mut report = RetargetReport::default();
        let mut targets = Vec::with_capacity(self.slots.len());
        for (i, triple) in params.chunks_exact(3).enumerate() {
            let (gain, freq, decay) = (triple[0], triple[1], triple[2]);
            if !(gain >= T::zero()) || !gain.is_finite() {
                return Err(ResonanceError::InvalidGain(gain.as_f64()));
            }
            if !(decay > T::zero()) || !decay.is_finite() {
                return Err(ResonanceError::InvalidDecay(decay.as_f64()));
            }
            if freq.is_nan() {
                return Err(ResonanceError::InvalidFrequency(freq.as_f64()));
            }
            let in_band = freq > T::zero() && freq < nyquist;
            let target = if in_band {
                design_resonator(&Resonance { center_freq: freq, gain, decay_t60: decay }, self.sample_rate)?
            } else {
                match policy {
                    NyquistPolicy::Clamp => {
                        report.clamped.push(i);
                        let freq = freq.max(edge).min(nyquist - edge);
                        design_resonator(&Resonance { center_freq: freq, gain, decay_t60: decay }, self.sample_rate)?
                    }
                    NyquistPolicy::Drop => {
                        report.dropped.push(i);
                        let mut silent = self.slots[i].target;
                        silent.gain = T::zero();
                        silent
                    }
                }
            };
            targets.push(target);
        }
        if !report.clamped.is_empty() {
            log::warn!("retarget clamped {} frequencies into (0, {})", report.clamped.len(), nyquist);
        }
        for (slot, target) in self.slots.iter_mut().zip(targets) {
            slot.target = target;
        }
        self.pending = self.slots.iter().any(|s| s.target != s.current);
        Ok(report)
    }

    /// Filters `input` into `output` (overwritten). Both must have equal length.
    pub fn process_block(&mut self, input: &[T], output: &mut [T]) {
        assert_eq!(input.len(), output.len(), "input and output blocks differ in length");
        output.iter_mut().for_each(|y| *y = T::zero());
        let n = input.len();
        if n == 0 {
            return;
        }
        let ramp = self.pending;
        let inv_n = T::one() / T::from_count(n);
        for slot in &mut self.slots {
            let (mut y1, mut y2) = (slot.y1, slot.y2);
            if ramp && slot.current != slot.target {
                let (from, to) = (slot.current, slot.target);
                for (i, (x, out)) in input.iter().zip(output.iter_mut()).enumerate() {
                    let c = if i + 1 == n {
                        to
                    } else {
                        from.lerp(&to, T::from_count(i + 1) * inv_n)
                    };
                    let w = c.norm * *x + c.a1 * y1 + c.a2 * y2;
                    y2 = y1;
                    y1 = w;
                    *out = *out + c.gain * w;
                }
                slot.current = to;
            } else {
                let c = slot.current;
                if c.norm == T::zero() && y1 == T::zero() && y2 == T::zero() {
                    continue;
                }
                for (x, out) in input.iter().zip(output.iter_mut()) {
                    let w = c.norm * *x + c.a1 * y1 + c.a2 * y2;
                    y2 = y1;
                    y1 = w;
                    *out = *out + c.gain * w;
                }
            }
            // flush denormals on ring-out
            let tiny = T::lit(1e-30);
            if y1.abs() < tiny && y2.abs() < tiny {
                y1 = T::zero();
                y2 = T::zero();
            }
            slot.y1 = y1;
            slot.y2 = y2;
        }
        self.pending = false;
    }

    /// Convenience wrapper allocating the output block.
    pub fn process(&mut self, input: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); input.len()];
        self.process_block(input, &mut out);
        out
    }
}
