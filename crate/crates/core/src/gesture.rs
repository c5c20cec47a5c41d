//! Musical controls derived from the two pose sensors.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GestureError {
    #[error("time step must be positive, got {0}")]
    NonPositiveStep(f64),
}

/// Position and orientation of one sensor. Angles in degrees.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Pose<T> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub yaw: T,
    pub pitch: T,
    pub roll: T,
}

impl<T: Scalar> Pose<T> {
    pub fn position(&self) -> [T; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(v: [T; 6]) -> Self {
        Pose {
            x: v[0],
            y: v[1],
            z: v[2],
            yaw: v[3],
            pitch: v[4],
            roll: v[5],
        }
    }

    pub fn to_array(&self) -> [T; 6] {
        [self.x, self.y, self.z, self.yaw, self.pitch, self.roll]
    }
}

/// Instrument and bow sensor readings at one instant.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoseFrame<T> {
    pub time: T,
    pub violin: Pose<T>,
    pub bow: Pose<T>,
}

impl<T: Scalar> PoseFrame<T> {
    /// The 12 pose values: violin xyz/yaw/pitch/roll, then the bow's.
    pub fn values(&self) -> [T; 12] {
        let mut out = [T::zero(); 12];
        out[..6].copy_from_slice(&self.violin.to_array());
        out[6..].copy_from_slice(&self.bow.to_array());
        out
    }

    pub fn from_values(time: T, v: &[T; 12]) -> Self {
        PoseFrame {
            time,
            violin: Pose::from_array([v[0], v[1], v[2], v[3], v[4], v[5]]),
            bow: Pose::from_array([v[6], v[7], v[8], v[9], v[10], v[11]]),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AltitudeConfig<T> {
    pub normal_altitude: T,
    /// Altitude at which the dip control reaches 1.
    pub floor_altitude: T,
    pub reset_margin: T,
}

impl<T: Scalar> Default for AltitudeConfig<T> {
    fn default() -> Self {
        AltitudeConfig {
            normal_altitude: T::one(),
            floor_altitude: T::zero(),
            reset_margin: T::lit(0.02),
        }
    }
}

/// Running minimum of altitude since the last raise above normal.
///
/// Dipping latches a deeper control value; lifting the instrument above
/// `normal_altitude + reset_margin` clears it.
#[derive(Debug, Clone, PartialEq)]
pub struct AltitudeState<T> {
    config: AltitudeConfig<T>,
    running_min: Option<T>,
}

impl<T: Scalar> AltitudeState<T> {
    pub fn new(config: AltitudeConfig<T>) -> Self {
        AltitudeState {
            config,
            running_min: None,
        }
    }

    pub fn running_min(&self) -> Option<T> {
        self.running_min
    }

    /// Feeds one altitude reading; returns the control value in `[0, 1]`.
    pub fn update(&mut self, z: T) -> T {
        let c = &self.config;
        let min = match self.running_min {
            _ if z > c.normal_altitude + c.reset_margin => z,
            Some(m) => m.min(z),
            None => z,
        };
        self.running_min = Some(min);
        self.control()
    }

    pub fn control(&self) -> T {
        let Some(min) = self.running_min else {
            return T::zero();
        };
        let c = &self.config;
        let span = c.normal_altitude - c.floor_altitude;
        if !(span > T::zero()) {
            return T::zero();
        }
        ((c.normal_altitude - min) / span).max(T::zero()).min(T::one())
    }
}

/// Hysteresis switch on altitude: ON below `threshold - hysteresis/2`, OFF
/// above `threshold + hysteresis/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OctaveToggle<T> {
    threshold: T,
    hysteresis: T,
    on: bool,
}

impl<T: Scalar> OctaveToggle<T> {
    pub fn new(threshold: T, hysteresis: T) -> Self {
        OctaveToggle {
            threshold,
            hysteresis: hysteresis.abs(),
            on: false,
        }
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    pub fn update(&mut self, z: T) -> bool {
        let half = self.hysteresis / T::lit(2.0);
        if z < self.threshold - half {
            self.on = true;
        } else if z > self.threshold + half {
            self.on = false;
        }
        self.on
    }

    /// Pitch ratio the engine applies while the toggle is on.
    pub fn ratio(&self) -> T {
        if self.on {
            T::lit(2.0)
        } else {
            T::one()
        }
    }
}

/// Bow position relative to the instrument: `violin - bow`.
pub fn bow_relative<T: Scalar>(violin: [T; 3], bow: [T; 3]) -> [T; 3] {
    [violin[0] - bow[0], violin[1] - bow[1], violin[2] - bow[2]]
}

/// Speed of the relative bow position between two readings `dt` seconds apart.
pub fn bow_speed<T: Scalar>(prev: [T; 3], cur: [T; 3], dt: T) -> Result<T, GestureError> {
    if !(dt > T::zero()) {
        return Err(GestureError::NonPositiveStep(dt.as_f64()));
    }
    let d = [cur[0] - prev[0], cur[1] - prev[1], cur[2] - prev[2]];
    let norm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    Ok(norm / dt)
}

/// Tracks the previous relative bow position to report speed per frame.
#[derive(Debug, Clone, Default)]
pub struct BowTracker<T> {
    prev: Option<(T, [T; 3])>,
}

impl<T: Scalar> BowTracker<T> {
    pub fn new() -> Self {
        BowTracker { prev: None }
    }

    /// Returns the relative position and speed (zero on the first frame or
    /// when time does not advance).
    pub fn update(&mut self, frame: &PoseFrame<T>) -> ([T; 3], T) {
        let rel = bow_relative(frame.violin.position(), frame.bow.position());
        let speed = match self.prev {
            Some((t, prev)) => bow_speed(prev, rel, frame.time - t).unwrap_or(T::zero()),
            None => T::zero(),
        };
        self.prev = Some((frame.time, rel));
        (rel, speed)
    }
}
