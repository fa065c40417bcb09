//! Length-prefixed wire framing with CRC32 integrity and stream
//! resynchronization.
//!
//! Message layout: magic "PANO" | version u8 | type u8 | payload_len u32 LE |
//! payload | crc32 u32 LE. The CRC covers header and payload, using the
//! reflected 0xEDB88320 polynomial with init and final-xor 0xFFFFFFFF.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"PANO";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
pub const MIN_MESSAGE_LEN: usize = HEADER_LEN + 4;
/// Payloads above this are rejected before any allocation happens.
pub const MAX_PAYLOAD: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum MsgType {
    Frame = 1,
    Feedback = 2,
    Heartbeat = 3,
    Schema = 4,
}

impl MsgType {
    fn from_u8(v: u8) -> Option<MsgType> {
        match v {
            1 => Some(MsgType::Frame),
            2 => Some(MsgType::Feedback),
            3 => Some(MsgType::Heartbeat),
            4 => Some(MsgType::Schema),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireMessage {
    pub msg_type: MsgType,
    pub payload: Vec<u8>,
}

impl WireMessage {
    pub fn heartbeat() -> WireMessage {
        WireMessage { msg_type: MsgType::Heartbeat, payload: Vec::new() }
    }

    pub fn frame(frame_bytes: Vec<u8>) -> WireMessage {
        WireMessage { msg_type: MsgType::Frame, payload: frame_bytes }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    /// Not an error state: `needed` more bytes are required.
    #[error("incomplete message: {needed} more bytes needed")]
    Incomplete { needed: usize },
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {found}")]
    UnsupportedVersion { found: u8 },
    #[error("unknown message type {found}")]
    UnknownMessageType { found: u8 },
    #[error("payload of {declared} bytes exceeds the 64 MiB cap")]
    OversizePayload { declared: u32 },
    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
}

pub fn crc32(bytes: &[u8]) -> u32 {
    crc32fast::hash(bytes)
}

/// Serialize one message.
pub fn encode_message(msg: &WireMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(MIN_MESSAGE_LEN + msg.payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(msg.msg_type as u8);
    out.extend_from_slice(&(msg.payload.len() as u32).to_le_bytes());
    out.extend_from_slice(&msg.payload);
    let crc = crc32(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Bytes to discard so the buffer starts at the next plausible magic.
fn resync_skip(buf: &[u8]) -> usize {
    for i in 1..buf.len() {
        let tail = &buf[i..];
        let overlap = tail.len().min(MAGIC.len());
        if tail[..overlap] == MAGIC[..overlap] {
            return i;
        }
    }
    buf.len()
}

/// Parse exactly one message from the front of `buf`.
///
/// `Ok((message, consumed))` on success. On failure the second element is the
/// number of bytes to skip to resynchronize at the next magic candidate
/// (0 for `Incomplete`, which just needs more input).
pub fn parse_message(buf: &[u8]) -> Result<(WireMessage, usize), (ParseError, usize)> {
    let overlap = buf.len().min(MAGIC.len());
    if buf[..overlap] != MAGIC[..overlap] {
        return Err((ParseError::BadMagic, resync_skip(buf)));
    }
    if buf.len() < HEADER_LEN {
        return Err((ParseError::Incomplete { needed: MIN_MESSAGE_LEN - buf.len() }, 0));
    }
    let version = buf[4];
    if version != VERSION {
        return Err((ParseError::UnsupportedVersion { found: version }, resync_skip(buf)));
    }
    let type_byte = buf[5];
    let msg_type = match MsgType::from_u8(type_byte) {
        Some(t) => t,
        None => {
            return Err((ParseError::UnknownMessageType { found: type_byte }, resync_skip(buf)))
        }
    };
    let declared = u32::from_le_bytes(buf[6..10].try_into().unwrap());
    if declared as usize > MAX_PAYLOAD {
        return Err((ParseError::OversizePayload { declared }, resync_skip(buf)));
    }
    let total = MIN_MESSAGE_LEN + declared as usize;
    if buf.len() < total {
        return Err((ParseError::Incomplete { needed: total - buf.len() }, 0));
    }
    let crc_offset = HEADER_LEN + declared as usize;
    let stored = u32::from_le_bytes(buf[crc_offset..crc_offset + 4].try_into().unwrap());
    let computed = crc32(&buf[..crc_offset]);
    if stored != computed {
        return Err((ParseError::CrcMismatch { stored, computed }, resync_skip(buf)));
    }
    let payload = buf[HEADER_LEN..crc_offset].to_vec();
    Ok((WireMessage { msg_type, payload }, total))
}

/// Write one message and flush.
pub fn write_message<W: Write>(writer: &mut W, msg: &WireMessage) -> io::Result<()> {
    writer.write_all(&encode_message(msg))?;
    writer.flush()
}

/// What [`MessageReader::read_event`] produced.
#[derive(Debug)]
pub enum ReadEvent {
    Message(WireMessage),
    /// A corrupted region was skipped; the stream is resynchronized.
    Corrupt(ParseError),
}

/// Incremental reader over a byte stream; recovers from corruption by
/// scanning for the next magic.
pub struct MessageReader<R> {
    inner: R,
    buf: Vec<u8>,
}

impl<R: Read> MessageReader<R> {
    pub fn new(inner: R) -> MessageReader<R> {
        MessageReader { inner, buf: Vec::new() }
    }

    /// Next message or corruption event; `None` on end of stream.
    pub fn read_event(&mut self) -> io::Result<Option<ReadEvent>> {
        loop {
            if !self.buf.is_empty() {
                match parse_message(&self.buf) {
                    Ok((msg, consumed)) => {
                        self.buf.drain(..consumed);
                        return Ok(Some(ReadEvent::Message(msg)));
                    }
                    Err((ParseError::Incomplete { .. }, _)) => {}
                    Err((err, skip)) => {
                        self.buf.drain(..skip);
                        return Ok(Some(ReadEvent::Corrupt(err)));
                    }
                }
            }
            let mut chunk = [0u8; 4096];
            let n = self.inner.read(&mut chunk)?;
            if n == 0 {
                return Ok(None);
            }
            self.buf.extend_from_slice(&chunk[..n]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crc_matches_the_standard_check_value() {
        // The canonical CRC-32 check: "123456789" -> 0xCBF43926 for the
        // reflected 0xEDB88320 polynomial, init/final-xor 0xFFFFFFFF.
        assert_eq!(crc32(b"123456789"), 0xCBF43926);
    }

    #[test]
    fn heartbeat_is_fourteen_bytes() {
        let bytes = encode_message(&WireMessage::heartbeat());
        assert_eq!(bytes.len(), 14);
        let (msg, consumed) = parse_message(&bytes).unwrap();
        assert_eq!(consumed, 14);
        assert_eq!(msg.msg_type, MsgType::Heartbeat);
        assert!(msg.payload.is_empty());
    }

    #[test]
    fn flipped_payload_bit_fails_crc() {
        let mut bytes =
            encode_message(&WireMessage { msg_type: MsgType::Schema, payload: vec![1, 2, 3] });
        bytes[HEADER_LEN] ^= 0x01;
        assert!(matches!(parse_message(&bytes), Err((ParseError::CrcMismatch { .. }, _))));
    }

    #[test]
    fn two_concatenated_messages_parse_in_order() {
        let a = WireMessage { msg_type: MsgType::Feedback, payload: vec![7; 5] };
        let b = WireMessage::heartbeat();
        let mut stream = encode_message(&a);
        stream.extend_from_slice(&encode_message(&b));
        let (first, consumed) = parse_message(&stream).unwrap();
        assert_eq!(first, a);
        let (second, consumed2) = parse_message(&stream[consumed..]).unwrap();
        assert_eq!(second, b);
        assert_eq!(consumed + consumed2, stream.len());
    }

    #[test]
    fn oversize_payload_rejected_without_allocating() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&MAGIC);
        bytes.push(VERSION);
        bytes.push(MsgType::Frame as u8);
        bytes.extend_from_slice(&(u32::MAX).to_le_bytes());
        assert!(matches!(
            parse_message(&bytes),
            Err((ParseError::OversizePayload { declared: u32::MAX }, _))
        ));
    }

    #[test]
    fn resync_finds_next_magic() {
        let good = encode_message(&WireMessage::heartbeat());
        let mut stream = vec![0xDE, 0xAD, 0xBE, 0xEF];
        stream.extend_from_slice(&good);
        let (err, skip) = parse_message(&stream).unwrap_err();
        assert_eq!(err, ParseError::BadMagic);
        assert_eq!(skip, 4);
        let (msg, _) = parse_message(&stream[skip..]).unwrap();
        assert_eq!(msg.msg_type, MsgType::Heartbeat);
    }

    #[test]
    fn reader_recovers_after_corruption() {
        let good = encode_message(&WireMessage { msg_type: MsgType::Schema, payload: vec![9] });
        let mut corrupted = good.clone();
        corrupted[HEADER_LEN] ^= 0xFF; // break the payload
        let mut stream = corrupted;
        stream.extend_from_slice(&good);
        let mut reader = MessageReader::new(stream.as_slice());
        let first = reader.read_event().unwrap().unwrap();
        assert!(matches!(first, ReadEvent::Corrupt(ParseError::CrcMismatch { .. })));
        // After resync the intact copy comes through.
        loop {
            match reader.read_event().unwrap() {
                Some(ReadEvent::Message(m)) => {
                    assert_eq!(m.payload, vec![9]);
                    break;
                }
                Some(ReadEvent::Corrupt(_)) => continue,
                None => panic!("stream ended before recovery"),
            }
        }
    }

    #[test]
    fn unsupported_version_detected() {
        let mut bytes = encode_message(&WireMessage::heartbeat());
        bytes[4] = 2;
        assert!(matches!(
            parse_message(&bytes),
            Err((ParseError::UnsupportedVersion { found: 2 }, _))
        ));
    }
}
