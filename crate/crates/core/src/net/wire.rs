//! Frame layout: `EAVG`, version byte, type byte, u32 LE payload length,
//! payload. Vectors are a u32 LE dimension followed by f64 LE values;
//! `FETCH_REPLY` prefixes its vector with a u64 LE center version.

use std::io::{ErrorKind, Read, Write};

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"EAVG";
pub const PROTOCOL_VERSION: u8 = 1;
pub const HEADER_LEN: usize = 10;
/// Frames announcing a larger payload are rejected before allocation.
pub const MAX_PAYLOAD: u32 = 1 << 28;

pub const TYPE_FETCH: u8 = 0x01;
pub const TYPE_FETCH_REPLY: u8 = 0x02;
pub const TYPE_PUSH_ELASTIC: u8 = 0x03;
pub const TYPE_PUSH_GRAD: u8 = 0x04;
pub const TYPE_ACK: u8 = 0x05;
pub const TYPE_SHUTDOWN: u8 = 0x06;
pub const TYPE_ERROR: u8 = 0x07;

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    Fetch,
    FetchReply { version: u64, x: Vec<f64> },
    PushElastic(Vec<f64>),
    PushGrad(Vec<f64>),
    Ack,
    Shutdown,
    Error(String),
}

impl WireMessage {
    pub fn type_byte(&self) -> u8 {
        match self {
            WireMessage::Fetch => TYPE_FETCH,
            WireMessage::FetchReply { .. } => TYPE_FETCH_REPLY,
            WireMessage::PushElastic(_) => TYPE_PUSH_ELASTIC,
            WireMessage::PushGrad(_) => TYPE_PUSH_GRAD,
            WireMessage::Ack => TYPE_ACK,
            WireMessage::Shutdown => TYPE_SHUTDOWN,
            WireMessage::Error(_) => TYPE_ERROR,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            WireMessage::Fetch => "FETCH",
            WireMessage::FetchReply { .. } => "FETCH_REPLY",
            WireMessage::PushElastic(_) => "PUSH_ELASTIC",
            WireMessage::PushGrad(_) => "PUSH_GRAD",
            WireMessage::Ack => "ACK",
            WireMessage::Shutdown => "SHUTDOWN",
            WireMessage::Error(_) => "ERROR",
        }
    }

    fn payload(&self) -> Vec<u8> {
        match self {
            WireMessage::Fetch | WireMessage::Ack | WireMessage::Shutdown => Vec::new(),
            WireMessage::FetchReply { version, x } => {
                let mut out = version.to_le_bytes().to_vec();
                put_vector(&mut out, x);
                out
            }
            WireMessage::PushElastic(v) | WireMessage::PushGrad(v) => {
                let mut out = Vec::with_capacity(4 + 8 * v.len());
                put_vector(&mut out, v);
                out
            }
            WireMessage::Error(msg) => msg.as_bytes().to_vec(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut out = Vec::with_capacity(HEADER_LEN + payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(PROTOCOL_VERSION);
        out.push(self.type_byte());
        out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&payload);
        out
    }

    /// Decodes exactly one complete frame.
    pub fn decode(frame: &[u8]) -> Result<WireMessage> {
        if frame.len() < HEADER_LEN {
            return Err(Error::protocol(format!("frame of {} bytes is shorter than the header", frame.len())));
        }
        let (ty, len) = parse_header(frame[..HEADER_LEN].try_into().expect("header slice"))?;
        let payload = &frame[HEADER_LEN..];
        if payload.len() != len as usize {
            return Err(Error::protocol(format!("declared payload length {len} but {} bytes follow", payload.len())));
        }
        decode_payload(ty, payload)
    }
}

fn put_vector(out: &mut Vec<u8>, v: &[f64]) {
    out.extend_from_slice(&(v.len() as u32).to_le_bytes());
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn get_vector(bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() < 4 {
        return Err(Error::protocol("vector payload lacks its dimension"));
    }
    let dim = u32::from_le_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
    let body = &bytes[4..];
    if body.len() != 8 * dim {
        return Err(Error::protocol(format!("dimension {dim} needs {} bytes, payload has {}", 8 * dim, body.len())));
    }
    Ok(body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
}

fn parse_header(h: &[u8; HEADER_LEN]) -> Result<(u8, u32)> {
    if h[..4] != MAGIC {
        return Err(Error::protocol(format!("bad magic {:02x?}", &h[..4])));
    }
    if h[4] != PROTOCOL_VERSION {
        return Err(Error::protocol(format!("unsupported protocol version {}", h[4])));
    }
    let len = u32::from_le_bytes(h[6..10].try_into().expect("4 bytes"));
    if len > MAX_PAYLOAD {
        return Err(Error::protocol(format!("payload length {len} exceeds the limit")));
    }
    Ok((h[5], len))
}

fn decode_payload(ty: u8, payload: &[u8]) -> Result<WireMessage> {
    let empty = |msg: WireMessage| {
        if payload.is_empty() {
            Ok(msg)
        } else {
            Err(Error::protocol(format!("{} carries no payload, got {} bytes", msg.name(), payload.len())))
        }
    };
    match ty {
        TYPE_FETCH => empty(WireMessage::Fetch),
        TYPE_ACK => empty(WireMessage::Ack),
        TYPE_SHUTDOWN => empty(WireMessage::Shutdown),
        TYPE_FETCH_REPLY => {
            if payload.len() < 8 {
                return Err(Error::protocol("FETCH_REPLY lacks its version"));
            }
            let version = u64::from_le_bytes(payload[..8].try_into().expect("8 bytes"));
            Ok(WireMessage::FetchReply { version, x: get_vector(&payload[8..])? })
        }
        TYPE_PUSH_ELASTIC => Ok(WireMessage::PushElastic(get_vector(payload)?)),
        TYPE_PUSH_GRAD => Ok(WireMessage::PushGrad(get_vector(payload)?)),
        TYPE_ERROR => Ok(WireMessage::Error(String::from_utf8_lossy(payload).into_owned())),
        other => Err(Error::protocol(format!("unknown message type 0x{other:02x}"))),
    }
}

/// Reads one frame. Returns `None` when the peer closed the connection
/// cleanly between frames.
pub fn read_message(r: &mut impl Read) -> Result<Option<WireMessage>> {
    let mut header = [0u8; HEADER_LEN];
    let mut filled = 0;
    while filled < HEADER_LEN {
        match r.read(&mut header[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::protocol("connection closed inside a frame header")),
            Ok(n) => filled += n,
            Err(e) if e.kind() == ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let (ty, len) = parse_header(&header)?;
    let mut payload = vec![0u8; len as usize];
    r.read_exact(&mut payload).map_err(|e| match e.kind() {
        ErrorKind::UnexpectedEof => Error::protocol("connection closed inside a frame payload"),
        _ => e.into(),
    })?;
    decode_payload(ty, &payload).map(Some)
}

pub fn write_message(w: &mut impl Write, msg: &WireMessage) -> Result<()> {
    w.write_all(&msg.encode())?;
    w.flush()?;
    Ok(())
}
