//! Framed message channel abstraction.
//!
//! Every protocol message is a frame: one tag byte, a little-endian `u32`
//! payload length, then the payload. Concrete channels (in-memory pairs,
//! TCP) are provided by the `pretzel` crate.

use alloc::string::String;
use alloc::vec::Vec;

/// Frames larger than this are rejected on both send and receive.
pub const MAX_FRAME_LEN: usize = 64 * 1024 * 1024;

/// Bytes of framing added to each payload (tag + length).
pub const FRAME_OVERHEAD: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Tag {
    Hello = 0x01,
    ModelChunk = 0x02,
    DotBlinded = 0x03,
    GcTables = 0x04,
    OtMsg = 0x05,
    Output = 0x06,
    Abort = 0x07,
}

impl Tag {
    pub fn from_u8(v: u8) -> Option<Tag> {
        Some(match v {
            0x01 => Tag::Hello,
            0x02 => Tag::ModelChunk,
            0x03 => Tag::DotBlinded,
            0x04 => Tag::GcTables,
            0x05 => Tag::OtMsg,
            0x06 => Tag::Output,
            0x07 => Tag::Abort,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub tag: Tag,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn new(tag: Tag, payload: Vec<u8>) -> Self {
        Self { tag, payload }
    }

    /// Size on the wire including framing.
    pub fn wire_len(&self) -> usize {
        self.payload.len() + FRAME_OVERHEAD
    }

    pub fn encode(&self) -> Result<Vec<u8>, TransportError> {
        check_len(self.payload.len())?;
        let mut out = Vec::with_capacity(self.wire_len());
        out.push(self.tag as u8);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        Ok(out)
    }

    /// Parse a frame header, returning the tag and the payload length.
    pub fn decode_header(header: [u8; FRAME_OVERHEAD]) -> Result<(Tag, usize), TransportError> {
        let tag = Tag::from_u8(header[0]).ok_or(TransportError::UnknownTag(header[0]))?;
        let len = u32::from_le_bytes(header[1..5].try_into().unwrap()) as usize;
        check_len(len)?;
        Ok((tag, len))
    }
}

fn check_len(len: usize) -> Result<(), TransportError> {
    if len > MAX_FRAME_LEN {
        Err(TransportError::Oversize(len))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TransportError {
    #[error("channel closed")]
    Closed,
    #[error("frame of {0} bytes exceeds the 64 MiB limit")]
    Oversize(usize),
    #[error("short read: connection ended inside a frame")]
    ShortRead,
    #[error("unknown frame tag {0:#04x}")]
    UnknownTag(u8),
    #[error("channel unusable after an earlier failure")]
    Poisoned,
    #[error("i/o error: {0}")]
    Io(String),
}

/// A reliable, ordered, framed duplex channel.
pub trait Channel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError>;
    fn recv_frame(&mut self) -> Result<Frame, TransportError>;
}

impl<C: Channel + ?Sized> Channel for &mut C {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        (**self).send_frame(frame)
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        (**self).recv_frame()
    }
}

/// Receive-side failures once framing succeeded.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExchangeError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("peer aborted: {0}")]
    PeerAborted(String),
    #[error("expected a {expected:?} frame, got {found:?}")]
    Unexpected { expected: Tag, found: Tag },
}

/// Receive one frame and require its tag. An ABORT frame becomes
/// `PeerAborted` with the peer's reason.
pub fn recv_expect<C: Channel + ?Sized>(
    ch: &mut C,
    expected: Tag,
) -> Result<Vec<u8>, ExchangeError> {
    let f = ch.recv_frame()?;
    if f.tag == expected {
        return Ok(f.payload);
    }
    if f.tag == Tag::Abort {
        return Err(ExchangeError::PeerAborted(
            String::from_utf8_lossy(&f.payload).into_owned(),
        ));
    }
    Err(ExchangeError::Unexpected {
        expected,
        found: f.tag,
    })
}

pub fn send<C: Channel + ?Sized>(
    ch: &mut C,
    tag: Tag,
    payload: Vec<u8>,
) -> Result<(), TransportError> {
    ch.send_frame(&Frame::new(tag, payload))
}

/// Best-effort ABORT; errors are ignored because the session is failing.
pub fn send_abort<C: Channel + ?Sized>(ch: &mut C, reason: &str) {
    let _ = ch.send_frame(&Frame::new(Tag::Abort, reason.as_bytes().to_vec()));
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn header_round_trip() {
        let f = Frame::new(Tag::OtMsg, vec![1, 2, 3]);
        let enc = f.encode().unwrap();
        assert_eq!(enc.len(), f.wire_len());
        let (tag, len) = Frame::decode_header(enc[..5].try_into().unwrap()).unwrap();
        assert_eq!((tag, len), (Tag::OtMsg, 3));
    }

    #[test]
    fn oversize_header_rejected() {
        let mut h = [0x02u8, 0, 0, 0, 0];
        h[1..5].copy_from_slice(&((MAX_FRAME_LEN as u32) + 1).to_le_bytes());
        assert_eq!(
            Frame::decode_header(h),
            Err(TransportError::Oversize(MAX_FRAME_LEN + 1))
        );
    }

    #[test]
    fn unknown_tag_rejected() {
        assert_eq!(
            Frame::decode_header([0x99, 0, 0, 0, 0]),
            Err(TransportError::UnknownTag(0x99))
        );
    }
}
