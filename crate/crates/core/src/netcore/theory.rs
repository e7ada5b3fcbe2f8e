//! Depth and node counts of a sum of monomials `Σ c_k Π x_i^{m_ki}` as a
//! UniSymNet and as a network built from binary operators (EQL-type).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoryError {
    #[error("need d >= {min} variables, got {d}")]
    TooFewVariables { d: usize, min: usize },
    #[error("need at least one monomial")]
    NoTerms,
    #[error("monomial {k} has {got} exponents, expected {d}")]
    Ragged { k: usize, got: usize, d: usize },
    #[error("exponent m[{k}][{i}] is zero")]
    ZeroExponent { k: usize, i: usize },
    #[error("every exponent is 1; no power layer is needed")]
    AllUnit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryCounts {
    pub l1: usize,
    pub n1: usize,
    pub l2: usize,
    /// The EQL-type node count as stated: exact for `K = 1`, a lower bound
    /// `S(d) + 1` for `K >= 2`.
    pub n2: usize,
    /// `K·S(d) + 1`: the multiplication tree repeated per monomial plus the
    /// output node, as used by the lemma.
    pub n2_tree: usize,
    /// `n2_tree` plus one power node per distinct non-unit `(i, m_ki)`.
    pub n2_full: usize,
}

/// `S(d) = Σ_{i=1}^{⌈log2 d⌉} ⌈d / 2^i⌉`, the size of a binary product tree.
pub fn s_of(d: usize) -> usize {
    (1..=ceil_log2(d)).map(|i| d.div_ceil(1 << i)).sum()
}

pub fn ceil_log2(d: usize) -> usize {
    if d <= 1 {
        0
    } else {
        (usize::BITS - (d - 1).leading_zeros()) as usize
    }
}

/// Counts for `exponents[k][i] = m_ki`.
pub fn theory_counts(d: usize, exponents: &[Vec<f64>]) -> Result<TheoryCounts, TheoryError> {
    if d < 1 {
        return Err(TheoryError::TooFewVariables { d, min: 1 });
    }
    if exponents.is_empty() {
        return Err(TheoryError::NoTerms);
    }
    for (k, row) in exponents.iter().enumerate() {
        if row.len() != d {
            return Err(TheoryError::Ragged { k, got: row.len(), d });
        }
        if let Some(i) = row.iter().position(|&m| m == 0.0) {
            return Err(TheoryError::ZeroExponent { k, i });
        }
    }
    if exponents.iter().flatten().all(|&m| m == 1.0) {
        return Err(TheoryError::AllUnit);
    }
    let k = exponents.len();
    let s = s_of(d);
    let lg = ceil_log2(d);
    let mut powers: Vec<(usize, u64)> = exponents
        .iter()
        .flat_map(|row| row.iter().enumerate().filter(|(_, m)| **m != 1.0).map(|(i, m)| (i, m.to_bits())))
        .collect();
    powers.sort_unstable();
    powers.dedup();
    Ok(if k == 1 {
        TheoryCounts { l1: 2, n1: d + 1, l2: lg + 1, n2: s + d, n2_tree: s + d, n2_full: s + d }
    } else {
        let tree = k * s + 1;
        TheoryCounts { l1: 3, n1: d + k + 1, l2: lg + 2, n2: s + 1, n2_tree: tree, n2_full: tree + powers.len() }
    })
}

/// One step of the lemma's case analysis, for `K >= 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaBranch {
    pub branch: String,
    pub d: usize,
    pub k: usize,
    /// Whether the inequality written in this branch holds.
    pub holds: bool,
    /// `S(d)` as the branch asserts it, when it asserts a value.
    pub s_claimed: Option<usize>,
    pub s_actual: usize,
}

/// Evaluate the branch of the lemma's proof that covers `(d, k)`.
/// `d >= 4`: `S(d) >= d - 1` and `d(K-1) - 2K >= 0`, so `K·S(d) + 1 >= d + K + 1`.
/// `d = 3`: `S(3) = 3` and `3K > 2K >= 2 + K`.
/// `d = 2`: the branch asserts `S(2) = 2` and `2K >= 2 + K`.
pub fn lemma_branch(d: usize, k: usize) -> Result<LemmaBranch, TheoryError> {
    if d < 2 {
        return Err(TheoryError::TooFewVariables { d, min: 2 });
    }
    let s = s_of(d);
    let (branch, holds, s_claimed) = match d {
        2 => ("d=2: S(d)=2, KS(d)=2K>=2+K", 2 * k >= 2 + k, Some(2)),
        3 => ("d=3: S(d)=3, KS(d)=3K>2K>=2+K", s == 3 && 3 * k > 2 * k && 2 * k >= 2 + k, Some(3)),
        _ => ("d>=4: S(d)>=d-1 and d(K-1)-2K>=0", s + 1 >= d && d * (k - 1) >= 2 * k && k * s + 1 >= d + k + 1, None),
    };
    Ok(LemmaBranch { branch: branch.into(), d, k, holds: holds && k >= 2, s_claimed, s_actual: s })
}

/// One `(d, K)` cell of the theorem sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremCell {
    pub d: usize,
    pub k: usize,
    pub exponents: Vec<Vec<f64>>,
    pub counts: TheoryCounts,
    pub depth_ok: bool,
    /// `N1 <= n2_full`.
    pub nodes_ok: bool,
    /// `N1 <= n2` with the stated lower bound (informational for `K >= 2`).
    pub stated_bound_ok: bool,
}

impl TheoremCell {
    pub fn pass(&self) -> bool {
        self.depth_ok && self.nodes_ok
    }
}

pub fn theorem_cell(d: usize, exponents: Vec<Vec<f64>>) -> Result<TheoremCell, TheoryError> {
    if d < 2 {
        return Err(TheoryError::TooFewVariables { d, min: 2 });
    }
    let c = theory_counts(d, &exponents)?;
    Ok(TheoremCell {
        d,
        k: exponents.len(),
        exponents,
        depth_ok: c.l1 <= c.l2,
        nodes_ok: c.n1 <= c.n2_full,
        stated_bound_ok: c.n1 <= c.n2,
        counts: c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn s_values() {
        // Independent: repeatedly halve (rounding up) until one node remains.
        for d in 1..=64 {
            let (mut n, mut total): (usize, usize) = (d, 0);
            while n > 1 {
                n = n.div_ceil(2);
                total += n;
            }
            assert_eq!(s_of(d), total, "d={d}");
        }
    }

    #[test]
    fn count_examples() {
        let c = theory_counts(2, &[vec![2.0, 3.0]]).unwrap();
        assert_eq!((c.l1, c.n1, c.l2, c.n2), (2, 3, 2, 3));
        let c = theory_counts(4, &[vec![2.0; 4]]).unwrap();
        assert_eq!((c.l1, c.n1, c.l2, c.n2), (2, 5, 3, 7));
        let c = theory_counts(2, &[vec![2.0, 3.0], vec![0.5, 2.0], vec![3.0, 1.5]]).unwrap();
        assert_eq!((c.l1, c.n1, c.l2, c.n2), (3, 6, 3, 2));
        assert_eq!(c.n2_tree, 4);
        assert_eq!(c.n2_full, 10);
    }

    #[test]
    fn preconditions() {
        assert_eq!(theory_counts(2, &[vec![1.0, 1.0]]), Err(TheoryError::AllUnit));
        assert_eq!(theory_counts(2, &[vec![0.0, 2.0]]), Err(TheoryError::ZeroExponent { k: 0, i: 0 }));
        assert_eq!(theory_counts(2, &[]), Err(TheoryError::NoTerms));
        assert!(matches!(theorem_cell(1, vec![vec![2.0]]), Err(TheoryError::TooFewVariables { .. })));
    }

    #[test]
    fn lemma_branches() {
        let b = lemma_branch(3, 2).unwrap();
        assert!(b.holds);
        assert_eq!(b.s_actual, 3);
        let b = lemma_branch(2, 2).unwrap();
        assert!(b.holds);
        assert_eq!((b.s_claimed, b.s_actual), (Some(2), 1));
        for d in 4..=10 {
            for k in 2..=5 {
                assert!(lemma_branch(d, k).unwrap().holds);
            }
        }
    }
}
