//! Compact text form of a unified-layout structure:
//! `L m d0 r1 r2 ...`, where the `r` are run lengths of the flattened mask
//! bits, alternating zeros and ones and starting with a (possibly empty) run
//! of zeros. The form is byte-stable.

use super::{Architecture, MaskSet, NetError, Structure};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TextFormError {
    #[error("expected at least `L m d0`")]
    MissingHeader,
    #[error("token {index} is not a non-negative integer: `{token}`")]
    BadToken { index: usize, token: String },
    #[error("header values must be positive")]
    ZeroHeader,
    #[error("runs cover {got} bits, expected {expected}")]
    RunLength { expected: usize, got: usize },
    #[error(transparent)]
    Net(#[from] NetError),
}

impl Structure {
    /// Text form; only the unified layout has one.
    pub fn to_text(&self) -> Result<String, NetError> {
        let m = self.arch.replicas().ok_or(NetError::NotUnified)?;
        let mut out = format!("{} {} {}", self.depth(), m, self.arch.input_dim());
        let bits = self.masks.flatten();
        let mut want = false;
        let mut run = 0usize;
        for b in bits {
            if b == want {
                run += 1;
            } else {
                write!(out, " {run}").expect("write to string");
                want = b;
                run = 1;
            }
        }
        write!(out, " {run}").expect("write to string");
        Ok(out)
    }

    pub fn from_text(s: &str) -> Result<Structure, TextFormError> {
        let nums = s
            .split_whitespace()
            .enumerate()
            .map(|(index, t)| t.parse::<usize>().map_err(|_| TextFormError::BadToken { index, token: t.into() }))
            .collect::<Result<Vec<_>, _>>()?;
        let [l, m, d0, runs @ ..] = nums.as_slice() else {
            return Err(TextFormError::MissingHeader);
        };
        if *l == 0 || *m == 0 || *d0 == 0 {
            return Err(TextFormError::ZeroHeader);
        }
        let arch = Architecture::unified(*l, *m, *d0);
        let expected = arch.mask_len();
        let got: usize = runs.iter().sum();
        if got != expected {
            return Err(TextFormError::RunLength { expected, got });
        }
        let mut bits = Vec::with_capacity(expected);
        for (i, &r) in runs.iter().enumerate() {
            bits.extend(std::iter::repeat_n(i % 2 == 1, r));
        }
        let masks = MaskSet::unflatten(&arch, &bits)?;
        Ok(Structure::new(arch, masks)?)
    }
}
