//! OSC 1.0 message encoding for the `i`, `f` and `s` argument types.
//!
//! Layout: NUL-terminated address padded to a multiple of 4 bytes, a type-tag
//! string starting with ',' padded the same way, then the arguments with
//! big-endian 32-bit ints/floats and NUL-padded strings.

use thiserror::Error;

use super::{check_address, AddressError, Arg, ControlMessage};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("packet truncated at byte {0}")]
    Truncated(usize),
    #[error("bad address: {0}")]
    BadAddress(String),
    #[error("type tag string missing or not starting with ','")]
    MissingTypeTag,
    #[error("non-zero padding byte at {0}")]
    BadPadding(usize),
    #[error("unsupported argument type '{0}'")]
    UnsupportedType(char),
    #[error("string argument is not valid UTF-8 or contains NUL")]
    InvalidString,
    #[error("{0} unexpected trailing bytes")]
    TrailingBytes(usize),
}

fn padded_len(len_with_nul: usize) -> usize {
    (len_with_nul + 3) & !3
}

fn push_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(s.as_bytes());
    let total = padded_len(s.len() + 1);
    out.resize(out.len() + (total - s.len()), 0);
}

pub fn encode(msg: &ControlMessage) -> Result<Vec<u8>, CodecError> {
    check_address(&msg.address).map_err(|e: AddressError| CodecError::BadAddress(e.to_string()))?;
    let mut tags = String::with_capacity(msg.args.len() + 1);
    tags.push(',');
    for arg in &msg.args {
        if let Arg::Str(s) = arg {
            if s.contains('\0') {
                return Err(CodecError::InvalidString);
            }
        }
        tags.push(arg.type_tag());
    }
    let mut out = Vec::with_capacity(64);
    push_str(&mut out, &msg.address);
    push_str(&mut out, &tags);
    for arg in &msg.args {
        match arg {
            Arg::Int(v) => out.extend_from_slice(&v.to_be_bytes()),
            Arg::Float(v) => out.extend_from_slice(&v.to_bits().to_be_bytes()),
            Arg::Str(s) => push_str(&mut out, s),
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn read_str(&mut self) -> Result<&'a str, CodecError> {
        let rest = &self.buf[self.pos..];
        let nul = rest
            .iter()
            .position(|&b| b == 0)
            .ok_or(CodecError::Truncated(self.buf.len()))?;
        let end = self.pos + padded_len(nul + 1);
        if end > self.buf.len() {
            return Err(CodecError::Truncated(self.buf.len()));
        }
        if let Some(bad) = (self.pos + nul + 1..end).find(|&i| self.buf[i] != 0) {
            return Err(CodecError::BadPadding(bad));
        }
        let s = std::str::from_utf8(&rest[..nul]).map_err(|_| CodecError::InvalidString)?;
        self.pos = end;
        Ok(s)
    }

    fn read_word(&mut self) -> Result<[u8; 4], CodecError> {
        let end = self.pos + 4;
        if end > self.buf.len() {
            return Err(CodecError::Truncated(self.buf.len()));
        }
        let word = self.buf[self.pos..end].try_into().unwrap();
        self.pos = end;
        Ok(word)
    }
}

pub fn decode(buf: &[u8]) -> Result<ControlMessage, CodecError> {
    if buf.is_empty() {
        return Err(CodecError::Truncated(0));
    }
    if buf[0] != b'/' {
        return Err(CodecError::BadAddress("packet does not start with '/'".into()));
    }
    let mut r = Reader { buf, pos: 0 };
    let address = r.read_str()?.to_string();
    check_address(&address).map_err(|e| CodecError::BadAddress(e.to_string()))?;
    if r.pos >= buf.len() || buf[r.pos] != b',' {
        return Err(CodecError::MissingTypeTag);
    }
    let tags = r.read_str()?;
    let mut args = Vec::with_capacity(tags.len() - 1);
    for tag in tags[1..].chars() {
        let arg = match tag {
            'i' => Arg::Int(i32::from_be_bytes(r.read_word()?)),
            'f' => Arg::Float(f32::from_bits(u32::from_be_bytes(r.read_word()?))),
            's' => Arg::Str(r.read_str()?.to_string()),
            other => return Err(CodecError::UnsupportedType(other)),
        };
        args.push(arg);
    }
    if r.pos != buf.len() {
        return Err(CodecError::TrailingBytes(buf.len() - r.pos));
    }
    Ok(ControlMessage { address, args })
}
