//! Wire framing: a 4-byte big-endian length followed by the envelope as
//! compact JSON.

use std::io::{self, Read, Write};

use replisync_core::Envelope;
use thiserror::Error;

/// Frames larger than this are refused on read.
pub const MAX_FRAME: u32 = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("frame of {0} bytes exceeds the limit")]
    TooLarge(u64),
    #[error("truncated frame")]
    Truncated,
    #[error("bad envelope JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(io::Error),
}

pub fn encode(envelope: &Envelope) -> Result<Vec<u8>, WireError> {
    let body = serde_json::to_vec(envelope)?;
    let len = u32::try_from(body.len()).ok().filter(|&n| n <= MAX_FRAME).ok_or(WireError::TooLarge(body.len() as u64))?;
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&len.to_be_bytes());
    out.extend_from_slice(&body);
    Ok(out)
}

pub fn write_frame<W: Write>(w: &mut W, envelope: &Envelope) -> Result<(), WireError> {
    w.write_all(&encode(envelope)?).map_err(WireError::Io)
}

/// Reads one frame; `Ok(None)` at a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Envelope>, WireError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(WireError::Truncated),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(WireError::Io(e)),
        }
    }
    let n = u32::from_be_bytes(len);
    if n > MAX_FRAME {
        return Err(WireError::TooLarge(n as u64));
    }
    let mut body = vec![0u8; n as usize];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Truncated,
        _ => WireError::Io(e),
    })?;
    Ok(Some(serde_json::from_slice(&body)?))
}

/// Decodes a buffer holding zero or more whole frames.
pub fn decode_all(mut bytes: &[u8]) -> Result<Vec<Envelope>, WireError> {
    let mut out = Vec::new();
    while let Some(env) = read_frame(&mut bytes)? {
        out.push(env);
    }
    Ok(out)
}
