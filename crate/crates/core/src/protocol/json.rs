//! Newline-delimited JSON form of [`ControlMessage`] for the browser bridge:
//! `{"address": "/ViolinControl/Param/Z", "args": [0.3]}`.
//!
//! JSON integers decode as int32, other numbers as float32 and strings as
//! strings. Floats are written with a decimal point so they stay floats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{check_address, Arg, ControlMessage};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON message: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("bad address: {0}")]
    BadAddress(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JsonArg {
    Int(i32),
    Float(f32),
    Str(String),
}

#[derive(Serialize, Deserialize)]
struct JsonMessage {
    address: String,
    #[serde(default)]
    args: Vec<JsonArg>,
}

pub fn to_json(msg: &ControlMessage) -> String {
    let wire = JsonMessage {
        address: msg.address.clone(),
        args: msg
            .args
            .iter()
            .map(|a| match a {
                Arg::Int(v) => JsonArg::Int(*v),
                Arg::Float(v) => JsonArg::Float(*v),
                Arg::Str(s) => JsonArg::Str(s.clone()),
            })
            .collect(),
    };
    serde_json::to_string(&wire).expect("message serializes")
}

pub fn from_json(line: &str) -> Result<ControlMessage, JsonError> {
    let wire: JsonMessage = serde_json::from_str(line.trim())?;
    check_address(&wire.address).map_err(|e| JsonError::BadAddress(e.to_string()))?;
    Ok(ControlMessage {
        address: wire.address,
        args: wire
            .args
            .into_iter()
            .map(|a| match a {
                JsonArg::Int(v) => Arg::Int(v),
                JsonArg::Float(v) => Arg::Float(v),
                JsonArg::Str(s) => Arg::Str(s),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let msg = ControlMessage::new(
            "/ViolinControl/Param/Z",
            vec![Arg::Float(0.3), Arg::Int(100), Arg::Float(2.0), Arg::Str("hi".into())],
        );
        let text = to_json(&msg);
        assert_eq!(text, r#"{"address":"/ViolinControl/Param/Z","args":[0.3,100,2.0,"hi"]}"#);
        assert_eq!(from_json(&text).unwrap(), msg);
        assert_eq!(
            from_json(r#"{"address":"/ViolinControl/Connect"}"#).unwrap(),
            ControlMessage::new("/ViolinControl/Connect", vec![])
        );
        assert!(from_json("{").is_err());
        assert!(matches!(from_json(r#"{"address":"x","args":[]}"#), Err(JsonError::BadAddress(_))));
    }
}
