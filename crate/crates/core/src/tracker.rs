//! Pitch, amplitude and spectral-centroid tracking.
//!
//! Each analysis frame is Hann-windowed and transformed; local maxima of the
//! magnitude spectrum become spectral peaks, refined by a parabola through the
//! log magnitudes of the three bins around the maximum. The fundamental is the
//! candidate whose harmonic series collects the most peak energy, and the
//! centroid is the energy-weighted mean frequency of the partials it matched.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::level::{AmplitudeFollower, DEFAULT_LOWEST_FREQ_HZ};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPeak<T> {
    pub frequency: T,
    /// Squared linear magnitude, scaled so a unit-amplitude sinusoid has energy 1.
    pub energy: T,
}

impl<T> SpectralPeak<T> {
    pub fn new(frequency: T, energy: T) -> Self {
        SpectralPeak { frequency, energy }
    }
}

/// One tracker report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureFrame<T> {
    /// End of the analysis window, in seconds from the start of the stream.
    pub time: T,
    pub f0: Option<T>,
    pub amplitude: T,
    pub centroid: Option<T>,
    pub confidence: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub window: usize,
    pub hop: usize,
    pub threshold_db: f64,
    pub f_min: f64,
    pub f_max: f64,
    /// Relative distance from an exact harmonic that still counts as a match.
    pub tolerance: f64,
    /// Peaks below this energy in total mean "no pitch".
    pub energy_floor: f64,
    /// Lowest note, sets the amplitude follower window.
    pub lowest_freq_hz: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            window: 4096,
            hop: 512,
            threshold_db: -60.0,
            f_min: 60.0,
            f_max: 2000.0,
            tolerance: 0.03,
            energy_floor: 1e-10,
            lowest_freq_hz: DEFAULT_LOWEST_FREQ_HZ,
        }
    }
}

/// A fundamental estimate and the partials that support it.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchEstimate<T> {
    pub f0: T,
    pub confidence: T,
    pub partials: Vec<SpectralPeak<T>>,
}

/// Windowed FFT peak picker.
pub struct SpectrumAnalyzer<T: Scalar> {
    sample_rate: T,
    window: Vec<T>,
    window_sum: T,
    threshold_db: T,
    fft: Arc<dyn Fft<T>>,
    buffer: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
    magnitude: Vec<T>,
}

impl<T: Scalar> SpectrumAnalyzer<T> {
    /// `len` must be a power of two.
    pub fn new(sample_rate: T, len: usize, threshold_db: f64) -> Self {
        assert!(len.is_power_of_two() && len >= 4, "analysis window must be a power of two");
        let window: Vec<T> = (0..len)
            .map(|n| {
                let phase = T::TAU() * T::from_count(n) / T::from_count(len);
                T::lit(0.5) - T::lit(0.5) * phase.cos()
            })
            .collect();
        let window_sum = window.iter().fold(T::zero(), |a, &w| a + w);
        let fft = FftPlanner::new().plan_fft_forward(len);
        let scratch = vec![Complex::new(T::zero(), T::zero()); fft.get_inplace_scratch_len()];
        SpectrumAnalyzer {
            sample_rate,
            window,
            window_sum,
            threshold_db: T::lit(threshold_db),
            fft,
            buffer: vec![Complex::new(T::zero(), T::zero()); len],
            scratch,
            magnitude: vec![T::zero(); len / 2 + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Peaks of `frame` (raw samples, windowed here), sorted by frequency.
    pub fn analyze_frame(&mut self, frame: &[T]) -> Vec<SpectralPeak<T>> {
        assert_eq!(frame.len(), self.window.len(), "frame length must equal the analysis window");
        for ((slot, &x), &w) in self.buffer.iter_mut().zip(frame).zip(&self.window) {
            *slot = Complex::new(x * w, T::zero());
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        let scale = T::lit(2.0) / self.window_sum;
        for (m, c) in self.magnitude.iter_mut().zip(&self.buffer) {
            *m = c.norm() * scale;
        }
        let max = self.magnitude.iter().fold(T::zero(), |a, &m| a.max(m));
        // anything quieter than -140 dBFS is silence
        if !(max > T::lit(1e-7)) {
            return Vec::new();
        }
        let threshold = max * T::lit(10.0).powf(self.threshold_db / T::lit(20.0));
        let tiny = T::lit(1e-30);
        let bin_hz = self.sample_rate / T::from_count(self.window.len());
        let mag = &self.magnitude;
        let mut peaks = Vec::new();
        for k in 1..mag.len() - 1 {
            let m = mag[k];
            if m < threshold || !(m > mag[k - 1] && m >= mag[k + 1]) {
                continue;
            }
            let (a, b, c) = ((mag[k - 1] + tiny).ln(), (m + tiny).ln(), (mag[k + 1] + tiny).ln());
            let denom = a - T::lit(2.0) * b + c;
            let offset = if denom < T::zero() {
                (T::lit(0.5) * (a - c) / denom).max(T::lit(-0.5)).min(T::lit(0.5))
            } else {
                T::zero()
            };
            let log_peak = b - T::lit(0.25) * (a - c) * offset;
            let amp = log_peak.exp();
            peaks.push(SpectralPeak {
                frequency: (T::from_count(k) + offset) * bin_hz,
                energy: amp * amp,
            });
        }
        peaks
    }
}

/// Strongest peaks used as sources of fundamental candidates.
const CANDIDATE_SOURCES: usize = 20;

/// Harmonic-matching fundamental estimate over `peaks` (sorted by frequency).
///
/// Every source peak and its integer subdivisions inside `[f_min, f_max]`
/// is a candidate; a candidate scores the energy of the peaks lying within
/// `tolerance` of one of its harmonics (strongest peak per harmonic). Scores
/// within 1% of the best are treated as ties and resolved toward the highest
/// candidate, which rejects subharmonics that match the same partials. At
/// least two partials must match.
type Scored<T> = (T, T, Vec<(usize, usize)>);

pub fn estimate_f0<T: Scalar>(peaks: &[SpectralPeak<T>], config: &TrackerConfig) -> Option<PitchEstimate<T>> {
    let total = peaks.iter().fold(T::zero(), |a, p| a + p.energy);
    if peaks.len() < 2 || !(total > T::lit(config.energy_floor)) {
        return None;
    }
    let f_min = T::lit(config.f_min);
    let f_max = T::lit(config.f_max);
    let mut sources: Vec<&SpectralPeak<T>> = peaks.iter().collect();
    sources.sort_by(|a, b| b.energy.partial_cmp(&a.energy).unwrap_or(std::cmp::Ordering::Equal));
    sources.truncate(CANDIDATE_SOURCES);

    // (candidate, matched energy, (peak index, harmonic) pairs)
    let mut scored: Vec<Scored<T>> = Vec::new();
    for source in sources {
        let mut k = 1usize;
        loop {
            let cand = source.frequency / T::from_count(k);
            if cand < f_min {
                break;
            }
            k += 1;
            if cand > f_max {
                continue;
            }
            let matched = match_harmonics(peaks, cand, T::lit(config.tolerance));
            if matched.len() < 2 {
                continue;
            }
            let score = matched.iter().fold(T::zero(), |a, &(_, i)| a + peaks[i].energy);
            scored.push((cand, score, matched));
        }
    }
    let best = scored.iter().fold(T::zero(), |a, s| a.max(s.1));
    let tie = best * T::lit(0.99);
    let (_, score, matched) = scored
        .into_iter()
        .filter(|s| s.1 >= tie)
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal))?;

    // each partial implies f/h; weight by energy
    let mut weighted = T::zero();
    for &(h, i) in &matched {
        weighted = weighted + peaks[i].energy * peaks[i].frequency / T::from_count(h);
    }
    let mut partials: Vec<SpectralPeak<T>> = matched.iter().map(|&(_, i)| peaks[i]).collect();
    partials.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap());
    Some(PitchEstimate {
        f0: weighted / score,
        confidence: (score / total).min(T::one()),
        partials,
    })
}

/// `(harmonic number, peak index)` pairs, strongest peak per harmonic.
fn match_harmonics<T: Scalar>(peaks: &[SpectralPeak<T>], cand: T, tolerance: T) -> Vec<(usize, usize)> {
    let mut matched: Vec<(usize, usize)> = Vec::new();
    for (i, p) in peaks.iter().enumerate() {
        let h = (p.frequency / cand).round();
        if h < T::one() {
            continue;
        }
        let harmonic = h * cand;
        if (p.frequency - harmonic).abs() > tolerance * harmonic {
            continue;
        }
        let h = h.to_usize().unwrap_or(usize::MAX);
        match matched.iter_mut().find(|(mh, _)| *mh == h) {
            Some(entry) => {
                if p.energy > peaks[entry.1].energy {
                    entry.1 = i;
                }
            }
            None => matched.push((h, i)),
        }
    }
    matched
}

/// Energy-weighted mean frequency; `None` when there is no energy.
pub fn spectral_centroid<T: Scalar>(partials: &[SpectralPeak<T>]) -> Option<T> {
    let (num, den) = partials.iter().fold((T::zero(), T::zero()), |(n, d), p| {
        (n + p.frequency * p.energy, d + p.energy)
    });
    if partials.is_empty() || !(den > T::zero()) {
        return None;
    }
    Some(num / den)
}

/// Streaming tracker: one [`FeatureFrame`] per hop once a full window is buffered,
/// so reports lag the signal by one window length.
pub struct Tracker<T: Scalar> {
    config: TrackerConfig,
    sample_rate: T,
    analyzer: SpectrumAnalyzer<T>,
    follower: AmplitudeFollower<T>,
    ring: Vec<T>,
    frame: Vec<T>,
    write: usize,
    seen: u64,
}

impl<T: Scalar> Tracker<T> {
    pub fn new(sample_rate: f64, config: TrackerConfig) -> Self {
        let analyzer = SpectrumAnalyzer::new(T::lit(sample_rate), config.window, config.threshold_db);
        let follower = AmplitudeFollower::new(sample_rate, config.lowest_freq_hz);
        Tracker {
            sample_rate: T::lit(sample_rate),
            ring: vec![T::zero(); config.window],
            frame: vec![T::zero(); config.window],
            write: 0,
            seen: 0,
            analyzer,
            follower,
            config,
        }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Latency in seconds between a signal change and the first frame whose
    /// window is entirely after it.
    pub fn latency(&self) -> T {
        T::from_count(self.config.window) / self.sample_rate
    }

    pub fn push(&mut self, block: &[T]) -> Vec<FeatureFrame<T>> {
        let mut frames = Vec::new();
        let window = self.config.window as u64;
        for &x in block {
            self.ring[self.write] = x;
            self.write = (self.write + 1) % self.ring.len();
            self.follower.push(x);
            self.seen += 1;
            if self.seen >= window && (self.seen - window).is_multiple_of(self.config.hop as u64) {
                frames.push(self.analyze());
            }
        }
        frames
    }

    fn analyze(&mut self) -> FeatureFrame<T> {
        let (head, tail) = self.ring.split_at(self.write);
        self.frame[..tail.len()].copy_from_slice(tail);
        self.frame[tail.len()..].copy_from_slice(head);
        let peaks = self.analyzer.analyze_frame(&self.frame);
        let time = T::lit(self.seen as f64) / self.sample_rate;
        let amplitude = self.follower.level();
        match estimate_f0(&peaks, &self.config) {
            Some(est) => FeatureFrame {
                time,
                f0: Some(est.f0),
                amplitude,
                centroid: spectral_centroid(&est.partials),
                confidence: est.confidence,
            },
            None => FeatureFrame {
                time,
                f0: None,
                amplitude,
                centroid: None,
                confidence: T::zero(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    const FS: f64 = 44_100.0;

    fn tone(partials: &[(f64, f64)], len: usize, scale: f64) -> Vec<f64> {
        (0..len)
            .map(|i| {
                let t = i as f64 / FS;
                scale * partials.iter().map(|&(f, a)| a * (TAU * f * t).sin()).sum::<f64>()
            })
            .collect()
    }

    fn dominant(peaks: &[SpectralPeak<f64>]) -> SpectralPeak<f64> {
        *peaks.iter().max_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap()).unwrap()
    }

    #[test]
    fn pure_tone_peak() {
        let mut an = SpectrumAnalyzer::new(FS, 4096, -60.0);
        let peaks = an.analyze_frame(&tone(&[(1000.0, 1.0)], 4096, 1.0));
        let top = dominant(&peaks);
        assert!((top.frequency - 1000.0).abs() < 1.0, "{}", top.frequency);
        assert!((top.energy.sqrt() - 1.0).abs() < 0.05);
        // everything else is leakage at least 30 dB down
        for p in &peaks {
            if p != &top {
                assert!(p.energy < top.energy * 1e-3);
            }
        }
        assert!(peaks.windows(2).all(|w| w[0].frequency < w[1].frequency));
    }

    #[test]
    fn silence_has_no_peaks() {
        let mut an = SpectrumAnalyzer::<f64>::new(FS, 4096, -60.0);
        assert!(an.analyze_frame(&[0.0; 4096]).is_empty());
    }

    #[test]
    fn two_tones() {
        let mut an = SpectrumAnalyzer::new(FS, 4096, -60.0);
        let peaks = an.analyze_frame(&tone(&[(440.0, 0.5), (2000.0, 0.5)], 4096, 1.0));
        let mut strong: Vec<_> = peaks.iter().filter(|p| p.energy > 0.01).collect();
        strong.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).unwrap());
        assert_eq!(strong.len(), 2);
        assert!((strong[0].frequency - 440.0).abs() < 1.0);
        assert!((strong[1].frequency - 2000.0).abs() < 1.0);
    }

    #[test]
    fn harmonic_stack_f0() {
        let peaks: [SpectralPeak<f64>; 3] = [
            SpectralPeak::new(440.0, 1.0),
            SpectralPeak::new(880.0, 0.5),
            SpectralPeak::new(1320.0, 0.25),
        ];
        let est = estimate_f0(&peaks, &TrackerConfig::default()).unwrap();
        assert!((est.f0 - 440.0).abs() < 1.0);
        assert!(est.confidence >= 0.99);
        assert_eq!(est.partials.len(), 3);
    }

    #[test]
    fn f0_absent_cases() {
        let cfg = TrackerConfig::default();
        assert!(estimate_f0::<f64>(&[], &cfg).is_none());
        assert!(estimate_f0(&[SpectralPeak::new(440.0, 1.0)], &cfg).is_none());
        let quiet = [SpectralPeak::new(440.0, 1e-12), SpectralPeak::new(880.0, 1e-12)];
        assert!(estimate_f0(&quiet, &cfg).is_none());
    }

    #[test]
    fn centroid_cases() {
        let partials: [SpectralPeak<f64>; 3] = [
            SpectralPeak::new(440.0, 1.0),
            SpectralPeak::new(880.0, 0.5),
            SpectralPeak::new(1320.0, 0.25),
        ];
        // (440 + 440 + 330) / 1.75
        assert!((spectral_centroid(&partials).unwrap() - 1210.0 / 1.75).abs() < 1e-9);
        assert!((spectral_centroid(&partials).unwrap() - 691.4286).abs() < 1e-3);
        assert_eq!(spectral_centroid(&[SpectralPeak::new(523.25, 0.3)]), Some(523.25));
        let pair = [SpectralPeak::new(400.0, 2.0), SpectralPeak::new(800.0, 2.0)];
        assert_eq!(spectral_centroid(&pair), Some(600.0));
        assert_eq!(spectral_centroid::<f64>(&[]), None);
        assert_eq!(spectral_centroid(&[SpectralPeak::new(400.0, 0.0)]), None);
    }

    #[test]
    fn f0_from_synthetic_frame() {
        let mut an = SpectrumAnalyzer::new(FS, 4096, -60.0);
        let cfg = TrackerConfig::default();
        let stack = [(440.0, 1.0), (880.0, 0.5), (1320.0, 0.25)];
        let peaks = an.analyze_frame(&tone(&stack, 4096, 0.5));
        let est = estimate_f0(&peaks, &cfg).unwrap();
        assert!((est.f0 - 440.0).abs() < 1.0, "{}", est.f0);
        assert!(est.confidence > 0.99);
        let centroid = spectral_centroid(&est.partials).unwrap();
        let lo = est.partials[0].frequency;
        let hi = est.partials.last().unwrap().frequency;
        assert!(lo <= centroid && centroid <= hi);
    }

    #[test]
    fn amplitude_invariance() {
        let mut an = SpectrumAnalyzer::new(FS, 4096, -60.0);
        let cfg = TrackerConfig::default();
        let stack = [(196.0, 1.0), (392.0, 0.7), (588.0, 0.4), (784.0, 0.2)];
        let reference = estimate_f0(&an.analyze_frame(&tone(&stack, 4096, 1.0)), &cfg).unwrap().f0;
        for c in [0.01, 0.05, 0.3, 0.7, 1.0] {
            let f0 = estimate_f0(&an.analyze_frame(&tone(&stack, 4096, c)), &cfg).unwrap().f0;
            assert!((f0 - reference).abs() < 0.1, "scale {c}: {f0} vs {reference}");
        }
    }

    #[test]
    fn tracker_frames_and_silence() {
        let mut tr = Tracker::<f64>::new(FS, TrackerConfig::default());
        let frames: Vec<_> = tone(&[(440.0, 1.0), (880.0, 0.5), (1320.0, 0.25)], 88_200, 0.5)
            .chunks(256)
            .flat_map(|b| tr.push(b))
            .collect();
        // (88200 - 4096) / 512 + 1 frames
        assert_eq!(frames.len(), (88_200 - 4096) / 512 + 1);
        let good = frames.iter().filter(|f| f.f0.is_some_and(|f0| (f0 - 440.0).abs() < 1.0)).count();
        assert!(good as f64 >= 0.95 * frames.len() as f64);
        assert!((tr.latency() - 4096.0 / FS).abs() < 1e-12);

        let mut tr = Tracker::<f64>::new(FS, TrackerConfig::default());
        let frames: Vec<_> = vec![0.0; 88_200].chunks(256).flat_map(|b| tr.push(b)).collect();
        assert!(frames.iter().all(|f| f.f0.is_none() && f.centroid.is_none() && f.confidence == 0.0));
        assert!(frames.iter().all(|f| f.amplitude == 0.0));
    }
}
