//! The telemetry server's wire layer.
//!
//! Clients send OSC 1.0 messages (int32, float32 and string arguments, no
//! bundles) over UDP. `/ViolinControl/Param/<Name> <ms>` subscribes to a
//! value at a report interval: a positive interval reports periodically, zero
//! reports every control tick and a negative interval stops reporting.
//! Reports reuse the request address with the current value as a float32.

mod codec;
mod json;
mod registry;
mod session;

pub use codec::{decode, encode, CodecError};
pub use json::{from_json, to_json, JsonError};
pub use registry::{Interval, ParameterCatalog, Registry, RequestOutcome, Subscription};
pub use session::{SessionManager, SessionReply};

use std::fmt;

use thiserror::Error;

pub const ROOT: &str = "/ViolinControl";
pub const PARAM_PREFIX: &str = "/ViolinControl/Param/";
pub const INPUT_PREFIX: &str = "/ViolinControl/Input/";
pub const CONNECT: &str = "/ViolinControl/Connect";
pub const DISCONNECT: &str = "/ViolinControl/Disconnect";
pub const CONNECTED: &str = "/ViolinControl/Connected";
pub const ERROR: &str = "/ViolinControl/Error";
pub const MAP: &str = "/ViolinControl/Map";
/// Full 12-value pose input: violin xyz/yaw/pitch/roll then bow.
pub const INPUT_POSE: &str = "/ViolinControl/Input/Pose";
/// Active filter-parameter vector; reports carry one float per component.
pub const PARAM_VECTOR: &str = "/ViolinControl/Param/Vector";

/// Subscribable scalar parameters: three audio features, then the violin and
/// bow sensor axes. `Pitch` is the tracked fundamental; `Pitch2` is the
/// violin's pitch angle.
pub const PARAM_NAMES: [&str; 15] = [
    "Amplitude", "Pitch", "Centroid", "X", "Y", "Z", "Yaw", "Pitch2", "Roll", "BowX", "BowY", "BowZ", "BowYaw",
    "BowPitch", "BowRoll",
];

/// Names of the 12 pose axes in pose-vector order, as used under
/// `/ViolinControl/Param/` and `/ViolinControl/Input/`.
pub const POSE_NAMES: [&str; 12] = [
    "X", "Y", "Z", "Yaw", "Pitch2", "Roll", "BowX", "BowY", "BowZ", "BowYaw", "BowPitch", "BowRoll",
];

pub fn param_address(name: &str) -> String {
    format!("{PARAM_PREFIX}{name}")
}

pub fn input_address(name: &str) -> String {
    format!("{INPUT_PREFIX}{name}")
}

/// One typed message argument.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Int(i32),
    Float(f32),
    Str(String),
}

impl Arg {
    pub fn type_tag(&self) -> char {
        match self {
            Arg::Int(_) => 'i',
            Arg::Float(_) => 'f',
            Arg::Str(_) => 's',
        }
    }

    pub fn as_f32(&self) -> Option<f32> {
        match self {
            Arg::Int(v) => Some(*v as f32),
            Arg::Float(v) => Some(*v),
            Arg::Str(_) => None,
        }
    }
}

impl fmt::Display for Arg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Arg::Int(v) => write!(f, "{v}"),
            Arg::Float(v) => write!(f, "{v}"),
            Arg::Str(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AddressError {
    #[error("address must start with '/'")]
    MissingSlash,
    #[error("address contains an empty segment")]
    EmptySegment,
    #[error("address must be printable ASCII without NUL")]
    InvalidCharacter,
}

/// Checks the address rules: leading '/', non-empty segments, printable ASCII.
pub fn check_address(address: &str) -> Result<(), AddressError> {
    if !address.starts_with('/') {
        return Err(AddressError::MissingSlash);
    }
    if !address.bytes().all(|b| (0x21..0x7f).contains(&b)) {
        return Err(AddressError::InvalidCharacter);
    }
    if address[1..].split('/').any(str::is_empty) {
        return Err(AddressError::EmptySegment);
    }
    Ok(())
}

/// An address plus ordered arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlMessage {
    pub address: String,
    pub args: Vec<Arg>,
}

impl ControlMessage {
    pub fn new(address: impl Into<String>, args: Vec<Arg>) -> Self {
        ControlMessage {
            address: address.into(),
            args,
        }
    }

    pub fn int(address: impl Into<String>, value: i32) -> Self {
        Self::new(address, vec![Arg::Int(value)])
    }

    pub fn float(address: impl Into<String>, value: f32) -> Self {
        Self::new(address, vec![Arg::Float(value)])
    }

    pub fn error(reason: impl Into<String>, address: &str) -> Self {
        Self::new(ERROR, vec![Arg::Str(reason.into()), Arg::Str(address.to_string())])
    }
}

impl fmt::Display for ControlMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.address)?;
        for arg in &self.args {
            write!(f, " {arg}")?;
        }
        Ok(())
    }
}
