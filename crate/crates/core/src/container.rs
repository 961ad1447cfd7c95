//! Shared on-disk layout for dataset and model files: a magic/version line,
//! `key: value` header lines, an `end_header` line, a little-endian f64
//! payload and a trailing CRC-32 of the payload.

use std::fmt::Display;
use std::str::FromStr;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ContainerError {
    #[error("not a {expected} file")]
    BadMagic { expected: &'static str },
    #[error("unsupported file version {found:?}, expected {expected}")]
    VersionMismatch { expected: &'static str, found: String },
    #[error("truncated or oversized payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("payload checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("malformed header: {0}")]
    Header(String),
}

const END: &str = "end_header";

/// Ordered `key: value` header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        let value = value.to_string();
        debug_assert!(!key.contains(':') && !key.contains('\n') && !value.contains('\n'));
        self.entries.push((key.to_string(), value));
    }

    /// Floats are written with their shortest round-trip representation.
    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:?}"));
    }

    pub fn push_f64s(&mut self, key: &str, values: &[f64]) {
        let joined: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
        self.push(key, joined.join(","));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Result<&str, ContainerError> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| ContainerError::Header(format!("missing key {key}")))
    }

    pub fn get_opt(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn parse<T: FromStr>(&self, key: &str) -> Result<T, ContainerError> {
        let raw = self.get(key)?;
        raw.parse()
            .map_err(|_| ContainerError::Header(format!("bad value {raw:?} for {key}")))
    }

    pub fn parse_list<T: FromStr>(&self, key: &str) -> Result<Vec<T>, ContainerError> {
        let raw = self.get(key)?;
        if raw.is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',')
            .map(|p| {
                p.trim()
                    .parse()
                    .map_err(|_| ContainerError::Header(format!("bad list item {p:?} for {key}")))
            })
            .collect()
    }
}

pub fn encode(magic: &'static str, header: &Header, payload: &[f64]) -> Vec<u8> {
    let mut text = format!("{magic}\n");
    for (k, v) in header.entries() {
        text.push_str(k);
        text.push_str(": ");
        text.push_str(v);
        text.push('\n');
    }
    text.push_str(&format!("payload_bytes: {}\n{END}\n", payload.len() * 8));
    let mut out = text.into_bytes();
    let start = out.len();
    out.reserve(payload.len() * 8 + 4);
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode(magic: &'static str, bytes: &[u8]) -> Result<(Header, Vec<f64>), ContainerError> {
    let first_nl = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or(ContainerError::BadMagic { expected: magic })?;
    let first = std::str::from_utf8(&bytes[..first_nl]).map_err(|_| ContainerError::BadMagic { expected: magic })?;
    if first != magic {
        // Same family, different revision.
        if first.len() == magic.len() && first[..3] == magic[..3] {
            return Err(ContainerError::VersionMismatch {
                expected: magic,
                found: first.to_string(),
            });
        }
        return Err(ContainerError::BadMagic { expected: magic });
    }
    let mut header = Header::new();
    let mut pos = first_nl + 1;
    loop {
        let nl = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| ContainerError::Header("header not terminated".into()))?;
        let line = std::str::from_utf8(&bytes[pos..pos + nl])
            .map_err(|_| ContainerError::Header("header is not UTF-8".into()))?;
        pos += nl + 1;
        if line == END {
            break;
        }
        let (k, v) = line
            .split_once(": ")
            .ok_or_else(|| ContainerError::Header(format!("expected `key: value`, got {line:?}")))?;
        header.entries.push((k.to_string(), v.to_string()));
    }
    let payload_bytes: usize = header.parse("payload_bytes")?;
    header.entries.retain(|(k, _)| k != "payload_bytes");
    let rest = &bytes[pos..];
    if rest.len() != payload_bytes + 4 || !payload_bytes.is_multiple_of(8) {
        return Err(ContainerError::Truncated {
            expected: payload_bytes + 4,
            found: rest.len(),
        });
    }
    let (body, tail) = rest.split_at(payload_bytes);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(ContainerError::Checksum { stored, computed });
    }
    let payload = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, payload))
}
