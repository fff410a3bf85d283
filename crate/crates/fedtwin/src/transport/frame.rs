//! Length-prefixed message framing.
//!
//! Every frame is an 18-byte header followed by the payload:
//!
//! ```text
//! magic   4 bytes  0x46 0x44 0x54 0x57 ("FDTW")
//! version 1 byte   0x01
//! type    1 byte   0=Join 1=GlobalModel 2=LocalUpdate 3=Skip 4=Shutdown
//! round   u32 LE   (0 where not meaningful)
//! length  u64 LE   payload byte count
//! ```
//!
//! Payloads: Join carries `client_id: u32`; GlobalModel carries serialized
//! parameters; LocalUpdate carries `client_id: u32`, `m: u64`, then
//! serialized parameters; Skip carries `client_id: u32`, `reason length:
//! u16`, reason bytes; Shutdown is empty.

use std::io::Read;

use crate::error::{Error, Result};
use crate::numerics::ParamValues;
use crate::transport::wire::{decode_values, encode_values};

pub const MAGIC: [u8; 4] = *b"FDTW";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 18;
/// Frames advertising a larger payload are rejected outright.
pub const DEFAULT_MAX_PAYLOAD: u64 = 256 * 1024 * 1024;

/// Everything the server and clients ever say to each other.
#[derive(Debug, Clone, PartialEq)]
pub enum Message {
    Join {
        client_id: u32,
    },
    GlobalModel {
        round: u32,
        params: ParamValues,
    },
    LocalUpdate {
        round: u32,
        client_id: u32,
        m: u64,
        params: ParamValues,
    },
    Skip {
        round: u32,
        client_id: u32,
        reason: String,
    },
    Shutdown,
}

impl Message {
    fn type_byte(&self) -> u8 {
        match self {
            Message::Join { .. } => 0,
            Message::GlobalModel { .. } => 1,
            Message::LocalUpdate { .. } => 2,
            Message::Skip { .. } => 3,
            Message::Shutdown => 4,
        }
    }

    fn round(&self) -> u32 {
        match self {
            Message::GlobalModel { round, .. }
            | Message::LocalUpdate { round, .. }
            | Message::Skip { round, .. } => *round,
            Message::Join { .. } | Message::Shutdown => 0,
        }
    }
}

/// Encodes one message as a frame.
pub fn frame(message: &Message) -> Result<Vec<u8>> {
    let payload = match message {
        Message::Join { client_id } => client_id.to_le_bytes().to_vec(),
        Message::GlobalModel { params, .. } => encode_values(params)?,
        Message::LocalUpdate {
            client_id,
            m,
            params,
            ..
        } => {
            let mut p = Vec::new();
            p.extend_from_slice(&client_id.to_le_bytes());
            p.extend_from_slice(&m.to_le_bytes());
            p.extend_from_slice(&encode_values(params)?);
            p
        }
        Message::Skip {
            client_id, reason, ..
        } => {
            if reason.len() > u16::MAX as usize {
                return Err(Error::protocol("skip reason exceeds 65535 bytes"));
            }
            let mut p = Vec::new();
            p.extend_from_slice(&client_id.to_le_bytes());
            p.extend_from_slice(&(reason.len() as u16).to_le_bytes());
            p.extend_from_slice(reason.as_bytes());
            p
        }
        Message::Shutdown => Vec::new(),
    };

    let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.push(message.type_byte());
    out.extend_from_slice(&message.round().to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

/// Reads exactly one frame from the stream — never a byte past it — and
/// decodes the message. Bad magic, an unknown version or type, or an
/// advertised payload above `max_payload` are protocol errors.
pub fn deframe(stream: &mut impl Read, max_payload: u64) -> Result<Message> {
    let mut header = [0u8; HEADER_LEN];
    stream
        .read_exact(&mut header)
        .map_err(|e| Error::protocol(format!("reading frame header: {e}")))?;

    if header[0..4] != MAGIC {
        return Err(Error::protocol(format!(
            "bad magic {:02x} {:02x} {:02x} {:02x}, expected \"FDTW\"",
            header[0], header[1], header[2], header[3]
        )));
    }
    if header[4] != VERSION {
        return Err(Error::protocol(format!(
            "unsupported protocol version {}, expected {VERSION}",
            header[4]
        )));
    }
    let type_byte = header[5];
    let round = u32::from_le_bytes(header[6..10].try_into().unwrap());
    let len = u64::from_le_bytes(header[10..18].try_into().unwrap());
    if len > max_payload {
        return Err(Error::protocol(format!(
            "payload of {len} bytes exceeds the {max_payload}-byte limit"
        )));
    }

    let mut payload = vec![0u8; len as usize];
    stream
        .read_exact(&mut payload)
        .map_err(|e| Error::protocol(format!("reading {len}-byte payload: {e}")))?;

    decode_payload(type_byte, round, &payload)
}

fn decode_payload(type_byte: u8, round: u32, payload: &[u8]) -> Result<Message> {
    match type_byte {
        0 => {
            if payload.len() != 4 {
                return Err(Error::protocol(format!(
                    "join payload must be 4 bytes, got {}",
                    payload.len()
                )));
            }
            Ok(Message::Join {
                client_id: u32::from_le_bytes(payload.try_into().unwrap()),
            })
        }
        1 => Ok(Message::GlobalModel {
            round,
            params: decode_values(payload)?,
        }),
        2 => {
            if payload.len() < 12 {
                return Err(Error::protocol(format!(
                    "local-update payload needs at least 12 bytes, got {}",
                    payload.len()
                )));
            }
            let client_id = u32::from_le_bytes(payload[0..4].try_into().unwrap());
            let m = u64::from_le_bytes(payload[4..12].try_into().unwrap());
            Ok(Message::LocalUpdate {
                round,
                client_id,
                m,
                params: decode_values(&payload[12..])?,
            })
        }
        3 => {
            if payload.len() < 6 {
                return Err(Error::protocol(format!(
                    "skip payload needs at least 6 bytes, got {}",
                    payload.len()
                )));
            }
            let client_id = u32::from_le_bytes(payload[0..4].try_into().unwrap());
            let reason_len = u16::from_le_bytes(payload[4..6].try_into().unwrap()) as usize;
            if payload.len() != 6 + reason_len {
                return Err(Error::protocol("skip payload length mismatch"));
            }
            let reason = std::str::from_utf8(&payload[6..])
                .map_err(|_| Error::protocol("skip reason is not UTF-8"))?
                .to_string();
            Ok(Message::Skip {
                round,
                client_id,
                reason,
            })
        }
        4 => {
            if !payload.is_empty() {
                return Err(Error::protocol("shutdown carries no payload"));
            }
            Ok(Message::Shutdown)
        }
        other => Err(Error::protocol(format!("unknown message type {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor;
    use std::io::Cursor;

    fn sample_params() -> ParamValues {
        ParamValues {
            entries: vec![(
                "w".to_string(),
                Tensor::from_vec(1, 2, vec![0.5, -1.25]).unwrap(),
            )],
        }
    }

    #[test]
    fn shutdown_frame_is_exactly_18_bytes() {
        let bytes = frame(&Message::Shutdown).unwrap();
        assert_eq!(bytes.len(), 18);
        assert_eq!(&bytes[0..4], b"FDTW");
        assert_eq!(bytes[4], 1);
        assert_eq!(bytes[5], 4);
    }

    #[test]
    fn every_message_kind_roundtrips() {
        let messages = vec![
            Message::Join { client_id: 7 },
            Message::GlobalModel {
                round: 3,
                params: sample_params(),
            },
            Message::LocalUpdate {
                round: 3,
                client_id: 7,
                m: 42,
                params: sample_params(),
            },
            Message::Skip {
                round: 3,
                client_id: 7,
                reason: "no-data".to_string(),
            },
            Message::Shutdown,
        ];
        for msg in messages {
            let bytes = frame(&msg).unwrap();
            let mut cursor = Cursor::new(bytes);
            let back = deframe(&mut cursor, DEFAULT_MAX_PAYLOAD).unwrap();
            assert_eq!(msg, back);
        }
    }

    #[test]
    fn bad_magic_is_a_protocol_error() {
        let mut bytes = frame(&Message::Shutdown).unwrap();
        bytes[0] = 0x00;
        let err = deframe(&mut Cursor::new(bytes), DEFAULT_MAX_PAYLOAD).unwrap_err();
        assert!(matches!(err, Error::Protocol(_)), "{err}");
        assert!(err.to_string().contains("magic"), "{err}");
    }

    #[test]
    fn unknown_type_is_a_protocol_error() {
        let mut bytes = frame(&Message::Shutdown).unwrap();
        bytes[5] = 9;
        let err = deframe(&mut Cursor::new(bytes), DEFAULT_MAX_PAYLOAD).unwrap_err();
        assert!(err.to_string().contains("unknown message type"), "{err}");
    }

    #[test]
    fn oversized_payload_is_rejected_before_reading_it() {
        let bytes = frame(&Message::GlobalModel {
            round: 1,
            params: sample_params(),
        })
        .unwrap();
        let err = deframe(&mut Cursor::new(bytes), 4).unwrap_err();
        assert!(err.to_string().contains("limit"), "{err}");
    }

    #[test]
    fn deframe_stops_at_the_frame_boundary() {
        let mut bytes = frame(&Message::Join { client_id: 1 }).unwrap();
        let first_len = bytes.len();
        bytes.extend(frame(&Message::Shutdown).unwrap());
        let mut cursor = Cursor::new(bytes);
        deframe(&mut cursor, DEFAULT_MAX_PAYLOAD).unwrap();
        assert_eq!(cursor.position() as usize, first_len);
        assert_eq!(
            deframe(&mut cursor, DEFAULT_MAX_PAYLOAD).unwrap(),
            Message::Shutdown
        );
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut bytes = frame(&Message::Shutdown).unwrap();
        bytes[4] = 2;
        assert!(deframe(&mut Cursor::new(bytes), DEFAULT_MAX_PAYLOAD).is_err());
    }
}
