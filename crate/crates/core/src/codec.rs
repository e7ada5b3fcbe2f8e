//! Structure ↔ token-sequence encoding.
//!
//! A label is `[L, 0, o₁, o₂, ...]`: the depth, a `0` separator, then the
//! 1-based positions of the set bits in the flattened mask vector (all weight
//! masks row-major for layers `1..=L`, then all bias masks).

use crate::netcore::{Architecture, MaskSet, NetError, Structure};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Padding token in the text form.
pub const TEXT_PAD: i64 = -1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodecError {
    #[error("label needs at least the header `[L, 0]`")]
    MissingHeader,
    #[error("depth L = {0} must be at least 1")]
    ZeroDepth(i64),
    #[error("depth L = {depth} exceeds L_max = {max}")]
    TooDeep { depth: usize, max: usize },
    #[error("second token must be the separator 0, got {0}")]
    BadSeparator(i64),
    #[error("offset {offset} at position {pos} is outside 1..={max}")]
    OutOfRange { pos: usize, offset: i64, max: usize },
    #[error("offsets must be strictly increasing: {prev} then {next}")]
    NotIncreasing { prev: i64, next: i64 },
    #[error("token `{0}` is not an integer")]
    BadToken(String),
    #[error(transparent)]
    Net(#[from] NetError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SequenceLabel {
    pub tokens: Vec<i64>,
}

impl SequenceLabel {
    pub fn depth(&self) -> Option<usize> {
        self.tokens.first().and_then(|&l| usize::try_from(l).ok())
    }

    pub fn offsets(&self) -> &[i64] {
        self.tokens.get(2..).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl fmt::Display for SequenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.tokens.iter().map(i64::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Space-separated integers; trailing `-1` padding is dropped.
impl FromStr for SequenceLabel {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let tokens = s
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| CodecError::BadToken(t.into())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SequenceLabel { tokens: unpad(&tokens, TEXT_PAD) })
    }
}

/// Encode a unified-layout structure with depth at most `l_max`.
pub fn encode(s: &Structure, l_max: usize) -> Result<SequenceLabel, CodecError> {
    s.arch.replicas().ok_or(NetError::NotUnified)?;
    if s.depth() > l_max {
        return Err(CodecError::TooDeep { depth: s.depth(), max: l_max });
    }
    let mut tokens = vec![s.depth() as i64, 0];
    tokens.extend(s.masks.flatten().iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i as i64 + 1));
    Ok(SequenceLabel { tokens })
}

/// Inverse of [`encode`] for the unified layout with `m` replicas over `d0` inputs.
pub fn decode(label: &SequenceLabel, m: usize, d0: usize) -> Result<Structure, CodecError> {
    let t = &label.tokens;
    if t.len() < 2 {
        return Err(CodecError::MissingHeader);
    }
    if t[0] < 1 {
        return Err(CodecError::ZeroDepth(t[0]));
    }
    if t[1] != 0 {
        return Err(CodecError::BadSeparator(t[1]));
    }
    let arch = Architecture::unified(t[0] as usize, m, d0);
    let n = arch.mask_len();
    let mut bits = vec![false; n];
    let mut prev = 0;
    for (pos, &o) in t.iter().enumerate().skip(2) {
        if o < 1 || o as usize > n {
            return Err(CodecError::OutOfRange { pos, offset: o, max: n });
        }
        if o <= prev {
            return Err(CodecError::NotIncreasing { prev, next: o });
        }
        bits[o as usize - 1] = true;
        prev = o;
    }
    let masks = MaskSet::unflatten(&arch, &bits)?;
    Ok(Structure::new(arch, masks)?)
}

/// Largest offset any label can hold for `(l_max, m, d0)`.
pub fn max_offset(l_max: usize, m: usize, d0: usize) -> usize {
    Architecture::unified(l_max, m, d0).mask_len()
}

/// Append `pad` up to `len` tokens; labels already that long are unchanged.
pub fn pad(tokens: &[i64], len: usize, pad: i64) -> Vec<i64> {
    let mut v = tokens.to_vec();
    if v.len() < len {
        v.resize(len, pad);
    }
    v
}

/// Strip trailing `pad` tokens.
pub fn unpad(tokens: &[i64], pad: i64) -> Vec<i64> {
    let end = tokens.iter().rposition(|&t| t != pad).map_or(0, |i| i + 1);
    tokens[..end].to_vec()
}
