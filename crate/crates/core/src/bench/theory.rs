//! Sweep of the depth and node-count comparison against binary-operator networks.

use crate::netcore::theory::{lemma_branch, theorem_cell, LemmaBranch, TheoremCell, TheoryError};
use serde::{Deserialize, Serialize};

/// Exponents of a `K`-term, `d`-variable polynomial: term `k` raises
/// variable `k mod d` to `2 + k / d` and every other variable to 1, so terms
/// are distinct and at least one exponent differs from 1.
pub fn sweep_exponents(d: usize, k: usize) -> Vec<Vec<f64>> {
    (0..k).map(|t| (0..d).map(|i| if i == t % d { 2.0 + (t / d) as f64 } else { 1.0 }).collect()).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub cells: Vec<TheoremCell>,
    pub lemma: Vec<LemmaBranch>,
    /// The `d = 1` call was refused as required.
    pub precondition_enforced: bool,
}

impl TheoryReport {
    pub fn pass(&self) -> bool {
        self.cells.iter().all(TheoremCell::pass) && self.lemma.iter().all(|b| b.holds) && self.precondition_enforced
    }

    pub fn failures(&self) -> Vec<String> {
        let cells = self.cells.iter().filter(|c| !c.pass()).map(|c| format!("d={} K={}: {:?}", c.d, c.k, c.counts));
        let lemma = self.lemma.iter().filter(|b| !b.holds).map(|b| format!("lemma d={} K={}: {}", b.d, b.k, b.branch));
        cells.chain(lemma).collect()
    }
}

/// Every cell for `d ∈ [2, 10]`, `K ∈ [1, 5]`, and the lemma's case split for `K ≥ 2`.
pub fn theory_check() -> Result<TheoryReport, TheoryError> {
    let mut cells = Vec::new();
    let mut lemma = Vec::new();
    for d in 2..=10 {
        for k in 1..=5 {
            cells.push(theorem_cell(d, sweep_exponents(d, k))?);
            if k >= 2 {
                lemma.push(lemma_branch(d, k)?);
            }
        }
    }
    let precondition_enforced = matches!(theorem_cell(1, vec![vec![2.0]]), Err(TheoryError::TooFewVariables { .. }));
    Ok(TheoryReport { cells, lemma, precondition_enforced })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_passes() {
        let r = theory_check().unwrap();
        assert_eq!(r.cells.len(), 45);
        assert!(r.pass(), "{:?}", r.failures());
        let c = &r.cells[0];
        assert_eq!((c.d, c.k, c.counts.l1, c.counts.l2, c.counts.n1, c.counts.n2), (2, 1, 2, 2, 3, 3));
    }

    #[test]
    fn exponent_pattern() {
        assert_eq!(sweep_exponents(2, 3), vec![vec![2.0, 1.0], vec![1.0, 2.0], vec![3.0, 1.0]]);
    }
}
