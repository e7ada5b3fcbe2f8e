//! Proposer wire protocol. Every message is a frame: a big-endian `u32` body
//! length followed by the body. See `docs/protocol.md` for the byte layout.

use crate::data::Dataset;
use crate::datagen::{float_to_multihot, multihot_to_float};
use std::io::{Read, Write};
use thiserror::Error;

pub const VERSION: u16 = 1;
pub const REQUEST_MAGIC: [u8; 4] = *b"USNQ";
pub const RESPONSE_MAGIC: [u8; 4] = *b"USNS";
/// Values as 32-bit IEEE-754 single-precision multihot vectors, MSB first.
pub const ENCODING_F32_MULTIHOT: u8 = 1;
pub const MAX_FRAME: u32 = 64 << 20;

pub const STATUS_OK: u8 = 0;
pub const STATUS_ERROR: u8 = 1;

pub const ERR_BAD_MAGIC: u16 = 1;
pub const ERR_VERSION: u16 = 2;
pub const ERR_ENCODING: u16 = 3;
pub const ERR_MALFORMED: u16 = 4;
pub const ERR_INTERNAL: u16 = 5;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("frame truncated: needed {need} bytes, had {have}")]
    Truncated { need: usize, have: usize },
    #[error("frame of {0} bytes exceeds the {MAX_FRAME}-byte limit")]
    TooLarge(u32),
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported protocol version {0}")]
    Version(u16),
    #[error("unsupported encoding id {0}")]
    Encoding(u8),
    #[error("unknown status byte {0}")]
    Status(u8),
    #[error("{0} trailing bytes after message")]
    Trailing(usize),
    #[error("payload holds {got} bytes, header implies {expected}")]
    Payload { expected: usize, got: usize },
    #[error("error message is not UTF-8")]
    Utf8,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ProtocolError {
    /// Code sent back in an error frame.
    pub fn code(&self) -> u16 {
        match self {
            ProtocolError::BadMagic(_) => ERR_BAD_MAGIC,
            ProtocolError::Version(_) => ERR_VERSION,
            ProtocolError::Encoding(_) => ERR_ENCODING,
            ProtocolError::Io(_) => ERR_INTERNAL,
            _ => ERR_MALFORMED,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Request {
    pub d: u32,
    pub n: u32,
    pub k: u32,
    /// `n·(d+1)` values, row-major `x0..x{d-1}, y`, 4 bytes each.
    pub payload: Vec<u8>,
}

impl Request {
    pub fn from_dataset(data: &Dataset, k: usize) -> Request {
        let mut payload = Vec::with_capacity(data.n() * (data.dim() + 1) * 4);
        for r in 0..data.n() {
            for &v in data.row(r).iter().chain(std::iter::once(&data.y()[r])) {
                payload.extend(pack_bits(&float_to_multihot(v)));
            }
        }
        Request { d: data.dim() as u32, n: data.n() as u32, k: k as u32, payload }
    }

    /// The `(x, y)` block, rounded to single precision.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.payload
            .chunks_exact(4 * (self.d as usize + 1))
            .map(|row| row.chunks_exact(4).map(|b| multihot_to_float(&unpack_bits(b))).collect())
            .collect()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(20 + self.payload.len());
        b.extend(REQUEST_MAGIC);
        b.extend(VERSION.to_be_bytes());
        b.push(ENCODING_F32_MULTIHOT);
        b.push(0);
        b.extend(self.d.to_be_bytes());
        b.extend(self.n.to_be_bytes());
        b.extend(self.k.to_be_bytes());
        b.extend(&self.payload);
        b
    }

    pub fn decode(body: &[u8]) -> Result<Request, ProtocolError> {
        let mut c = Cursor::new(body);
        let magic = c.array::<4>()?;
        if magic != REQUEST_MAGIC {
            return Err(ProtocolError::BadMagic(magic));
        }
        let v = c.u16()?;
        if v != VERSION {
            return Err(ProtocolError::Version(v));
        }
        let enc = c.u8()?;
        if enc != ENCODING_F32_MULTIHOT {
            return Err(ProtocolError::Encoding(enc));
        }
        c.u8()?;
        let (d, n, k) = (c.u32()?, c.u32()?, c.u32()?);
        let expected = n as usize * (d as usize + 1) * 4;
        let payload = c.rest().to_vec();
        if payload.len() != expected {
            return Err(ProtocolError::Payload { expected, got: payload.len() });
        }
        Ok(Request { d, n, k, payload })
    }
}

fn pack_bits(bits: &[bool; 32]) -> [u8; 4] {
    let mut out = [0u8; 4];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 0x80 >> (i % 8);
        }
    }
    out
}

fn unpack_bits(bytes: &[u8]) -> [bool; 32] {
    std::array::from_fn(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sequence {
    /// Log-probability under the server's model.
    pub score: f64,
    pub tokens: Vec<i32>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Response {
    Ok(Vec<Sequence>),
    Error { code: u16, message: String },
}

impl Response {
    pub fn encode(&self) -> Vec<u8> {
        let mut b = Vec::new();
        b.extend(RESPONSE_MAGIC);
        b.extend(VERSION.to_be_bytes());
        match self {
            Response::Ok(seqs) => {
                b.push(STATUS_OK);
                b.push(0);
                b.extend((seqs.len() as u32).to_be_bytes());
                for s in seqs {
                    b.extend(s.score.to_be_bytes());
                    b.extend((s.tokens.len() as u32).to_be_bytes());
                    s.tokens.iter().for_each(|t| b.extend(t.to_be_bytes()));
                }
            }
            Response::Error { code, message } => {
                b.push(STATUS_ERROR);
                b.push(0);
                b.extend(code.to_be_bytes());
                b.extend((message.len() as u32).to_be_bytes());
                b.extend(message.as_bytes());
            }
        }
        b
    }

    pub fn decode(body: &[u8]) -> Result<Response, ProtocolError> {
        let mut c = Cursor::new(body);
        let magic = c.array::<4>()?;
        if magic != RESPONSE_MAGIC {
            return Err(ProtocolError::BadMagic(magic));
        }
        let v = c.u16()?;
        if v != VERSION {
            return Err(ProtocolError::Version(v));
        }
        let status = c.u8()?;
        c.u8()?;
        let r = match status {
            STATUS_OK => {
                let count = c.u32()?;
                let mut seqs = Vec::new();
                for _ in 0..count {
                    let score = f64::from_be_bytes(c.array::<8>()?);
                    let len = c.u32()?;
                    let tokens = (0..len).map(|_| c.u32().map(|t| t as i32)).collect::<Result<_, _>>()?;
                    seqs.push(Sequence { score, tokens });
                }
                Response::Ok(seqs)
            }
            STATUS_ERROR => {
                let code = c.u16()?;
                let len = c.u32()? as usize;
                let message = String::from_utf8(c.take(len)?.to_vec()).map_err(|_| ProtocolError::Utf8)?;
                Response::Error { code, message }
            }
            s => return Err(ProtocolError::Status(s)),
        };
        if !c.rest().is_empty() {
            return Err(ProtocolError::Trailing(c.rest().len()));
        }
        Ok(r)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, at: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ProtocolError> {
        let have = self.buf.len() - self.at;
        if have < n {
            return Err(ProtocolError::Truncated { need: n, have });
        }
        self.at += n;
        Ok(&self.buf[self.at - n..self.at])
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N], ProtocolError> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Result<u8, ProtocolError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, ProtocolError> {
        Ok(u16::from_be_bytes(self.array()?))
    }

    fn u32(&mut self) -> Result<u32, ProtocolError> {
        Ok(u32::from_be_bytes(self.array()?))
    }

    fn rest(&self) -> &'a [u8] {
        &self.buf[self.at..]
    }
}

pub fn write_frame(w: &mut impl Write, body: &[u8]) -> Result<(), ProtocolError> {
    let len = u32::try_from(body.len()).map_err(|_| ProtocolError::TooLarge(u32::MAX))?;
    if len > MAX_FRAME {
        return Err(ProtocolError::TooLarge(len));
    }
    w.write_all(&len.to_be_bytes())?;
    w.write_all(body)?;
    w.flush()?;
    Ok(())
}

/// Read one frame; `Ok(None)` on a clean end of stream before the header.
pub fn read_frame(r: &mut impl Read) -> Result<Option<Vec<u8>>, ProtocolError> {
    let mut head = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut head[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(ProtocolError::Truncated { need: 4, have: got }),
            n => got += n,
        }
    }
    let len = u32::from_be_bytes(head);
    if len > MAX_FRAME {
        return Err(ProtocolError::TooLarge(len));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => ProtocolError::Truncated { need: len as usize, have: 0 },
        _ => e.into(),
    })?;
    Ok(Some(body))
}
