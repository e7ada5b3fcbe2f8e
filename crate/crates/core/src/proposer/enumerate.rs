use super::{Candidate, CandidateSet, ProposeError, Proposer};
use crate::codec::{encode, SequenceLabel};
use crate::data::Dataset;
use crate::expr::{Expr, UnaryFn};
use crate::labeler::{identify_with_params, LabelConfig};
use crate::netcore::{Architecture, MaskSet, NetGraph, Params, Structure, M_SMALL};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// Every structure in the unified layout, by increasing depth and then mask
/// popcount, that is non-degenerate, has no dead bits and packs each replica
/// block from its first slot. Each such structure is yielded exactly once.
pub fn enumerate_structures(max_l: usize, m: usize, d0: usize, cap: usize) -> impl Iterator<Item = Structure> {
    (1..=max_l).flat_map(move |l| {
        let arch = Architecture::unified(l, m, d0);
        let n = arch.mask_len();
        (1..=cap.min(n)).flat_map(move |pc| {
            let arch = arch.clone();
            (0..n).combinations(pc).filter_map(move |on| {
                let mut bits = vec![false; n];
                on.iter().for_each(|&i| bits[i] = true);
                let s = Structure::new(arch.clone(), MaskSet::unflatten(&arch, &bits).ok()?).ok()?;
                canonical(&s, m).then_some(s)
            })
        })
    })
}

fn canonical(s: &Structure, m: usize) -> bool {
    if s.is_degenerate() || s.prune() != *s {
        return false;
    }
    let g = NetGraph::from_structure(s, &Params::zeros(&s.arch));
    g.depth() == s.depth() && g.to_unified(m).is_ok_and(|(u, _)| u == *s)
}

/// Limits of the motif grammar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumConfig {
    pub m: usize,
    /// Most power-product terms per candidate.
    pub max_monomials: usize,
    /// Most `op(affine)` terms per candidate.
    pub max_unary: usize,
    /// Largest variable subset inside one term.
    pub max_arity: usize,
    pub unary_ops: Vec<UnaryFn>,
    /// Hard cap on generated candidates before sorting.
    pub max_generated: usize,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            m: M_SMALL,
            max_monomials: M_SMALL,
            max_unary: 2,
            max_arity: 2,
            unary_ops: vec![UnaryFn::Sin, UnaryFn::Cos, UnaryFn::Exp, UnaryFn::Ln],
            max_generated: 50_000,
        }
    }
}

/// Deterministic proposer over sums of simple motifs: bare variables,
/// power products `Π x_i^p`, one-level `op(Σ w x_i + b)` and a bias. Each
/// motif multiset is mapped to its structure by the labeler; candidates come
/// out by increasing popcount, then depth.
#[derive(Clone, Debug, Default)]
pub struct EnumProposer {
    pub cfg: EnumConfig,
}

fn subsets(d: usize, max_arity: usize) -> Vec<Vec<usize>> {
    (1..=max_arity.min(d)).flat_map(|k| (0..d).combinations(k)).collect()
}

/// Multisets of size `0..=max` over `0..n`, smallest first.
fn multisets(n: usize, max: usize) -> Vec<Vec<usize>> {
    (0..=max).flat_map(|k| (0..n).combinations_with_replacement(k)).collect()
}

impl EnumProposer {
    pub fn new(cfg: EnumConfig) -> EnumProposer {
        EnumProposer { cfg }
    }

    /// Template expressions of every motif multiset. Template constants are
    /// distinct so that no two motifs collapse into one node.
    pub fn templates(&self, d: usize) -> Vec<Expr> {
        let c = &self.cfg;
        let vars = subsets(d, c.max_arity);
        let unary: Vec<(UnaryFn, &Vec<usize>)> =
            c.unary_ops.iter().flat_map(|&op| vars.iter().map(move |s| (op, s))).collect();
        let monos = multisets(vars.len(), c.max_monomials);
        let unas = multisets(unary.len(), c.max_unary);
        let mut out = Vec::new();
        'outer: for lin in (0..d).powerset() {
            for mono in &monos {
                for una in &unas {
                    for bias in [false, true] {
                        let mut terms: Vec<Expr> = lin.iter().map(|&i| Expr::var(i)).collect();
                        for (j, &s) in mono.iter().enumerate() {
                            let f = vars[s]
                                .iter()
                                .map(|&i| Expr::pow(Expr::var(i), Expr::num((2 + j + i) as f64)))
                                .reduce(Expr::mul)
                                .expect("nonempty subset");
                            terms.push(f);
                        }
                        for (j, &u) in una.iter().enumerate() {
                            let (op, s) = unary[u];
                            let arg = s
                                .iter()
                                .map(|&i| Expr::mul(Expr::num(1.1 + 0.1 * j as f64 + 0.01 * i as f64), Expr::var(i)))
                                .fold(Expr::num(0.3 + 0.1 * j as f64), |acc, t| Expr::add(t, acc));
                            terms.push(Expr::unary(op, arg));
                        }
                        if bias {
                            terms.push(Expr::num(1.5));
                        }
                        if let Some(e) = terms.into_iter().reduce(Expr::add) {
                            out.push(e);
                        }
                        if out.len() >= c.max_generated {
                            break 'outer;
                        }
                    }
                }
            }
        }
        out
    }

    /// Distinct labels of all templates, ordered by (popcount, depth).
    pub fn labels(&self, d: usize) -> Vec<(SequenceLabel, usize)> {
        let lc = LabelConfig::new(self.cfg.m, d);
        let mut seen = HashSet::new();
        let mut out: Vec<(usize, usize, usize, SequenceLabel)> = Vec::new();
        for (i, t) in self.templates(d).iter().enumerate() {
            let Ok((s, _)) = identify_with_params(t, lc) else { continue };
            let Ok(label) = encode(&s, lc.l_max) else { continue };
            if seen.insert(label.clone()) {
                out.push((s.masks.popcount(), s.depth(), i, label));
            }
        }
        out.sort();
        out.into_iter().map(|(pc, _, _, l)| (l, pc)).collect()
    }
}

impl Proposer for EnumProposer {
    fn name(&self) -> String {
        "enum".into()
    }

    fn replicas(&self) -> usize {
        self.cfg.m
    }

    fn propose(&self, data: &Dataset, k: usize) -> Result<CandidateSet, ProposeError> {
        if k == 0 {
            return Err(ProposeError::ZeroK);
        }
        let raw: Vec<Candidate> = self
            .labels(data.dim())
            .into_iter()
            .take(k)
            .enumerate()
            .map(|(rank, (label, pc))| Candidate { label, score: -(rank as f64), provenance: format!("enum:pc{pc}") })
            .collect();
        let set = CandidateSet::build(raw, k, self.cfg.m, data.dim());
        if set.is_empty() {
            return Err(ProposeError::Exhausted("motif grammar yielded no structure".into()));
        }
        Ok(set)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::decode;
    use crate::netcore::skeleton;

    #[test]
    fn tiny_space_is_exhaustive() {
        let all: Vec<Structure> = enumerate_structures(1, 1, 1, 2).collect();
        assert_eq!(all.len(), 2);
        assert_eq!(skeleton(&all[0]).unwrap().to_string(), "c0 * x0");
        assert_eq!(skeleton(&all[1]).unwrap().to_string(), "c0 * x0 + c1");
    }

    #[test]
    fn stream_is_unique_and_round_trips() {
        let mut seen = HashSet::new();
        let mut last = (0, 0);
        for s in enumerate_structures(2, 1, 2, 21).take(10_000) {
            let key = (s.depth(), s.masks.popcount());
            assert!(key >= last);
            last = key;
            let label = encode(&s, 6).unwrap();
            assert_eq!(decode(&label, 1, 2).unwrap(), s);
            assert!(seen.insert(label));
        }
        assert_eq!(seen.len(), 10_000);
    }

    #[test]
    fn smallest_structure_first() {
        let d = Dataset::from_rows(&[vec![0.0], vec![1.0]], vec![1.0, 3.0]).unwrap();
        let c = EnumProposer::default().propose(&d, 1).unwrap();
        assert_eq!(c.candidates[0].label.tokens, vec![1, 0, 1]);
        assert!(matches!(EnumProposer::default().propose(&d, 0), Err(ProposeError::ZeroK)));
    }

    #[test]
    fn polynomials_are_reachable() {
        let p = EnumProposer::default();
        let labels = p.labels(1);
        let sk: Vec<String> =
            labels.iter().map(|(l, _)| skeleton(&decode(l, 5, 1).unwrap()).unwrap().to_string()).collect();
        let want = "c0 * x0 + c1 * x0^p0 + c2 * x0^p1 + c3 * x0^p2 + c4 * x0^p3 + c5 * x0^p4";
        assert!(sk.iter().any(|s| s == want));
        assert!(sk.iter().any(|s| s == "c0 * sin(c1 * x0 + c2) + c3"));
        let d2 = p.labels(2);
        assert!(d2
            .iter()
            .any(|(l, _)| skeleton(&decode(l, 5, 2).unwrap()).unwrap().to_string() == "c0 * x0^p0 * x1^p1"));
    }
}
