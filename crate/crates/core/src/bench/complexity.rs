//! Depth-times-size complexity of random expressions as trees and as networks.

use crate::datagen::{sample_function, GenConfig};
use crate::expr::{display_form, Expr};
use crate::labeler::{identify_with_params, LabelConfig};
use crate::netcore::NetGraph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// `(depth, nodes)` of the simplified expression tree. Depth counts edges
/// on the longest root-to-leaf path, with a floor of 1 so a bare leaf costs 1.
pub fn tree_cost(e: &Expr) -> (usize, usize) {
    let t = display_form(e);
    (t.depth().max(1), t.size())
}

/// `(layers, nodes)` of the identified network, output layer included and
/// input nodes excluded. `None` if the expression cannot be identified.
pub fn net_cost(e: &Expr, cfg: LabelConfig) -> Option<(usize, usize)> {
    let (s, p) = identify_with_params(e, cfg).ok()?;
    let g = NetGraph::from_structure(&s, &p);
    Some((s.depth(), g.node_count()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub d: usize,
    /// Expressions that entered the means.
    pub count: usize,
    /// Draws discarded because identification failed.
    pub skipped: usize,
    pub mean_c_tree: f64,
    pub mean_c_net: f64,
}

impl ComplexityRow {
    pub fn gap(&self) -> f64 {
        self.mean_c_tree - self.mean_c_net
    }
}

/// Generator preset for dimension `d`, with every draw in exactly `d` variables.
/// Tree-size settings come from the small preset at every `d`, so only the
/// dimension changes along a sweep; network capacity (`m`, `l_max`) follows
/// the preset that covers `d`.
pub fn preset_for(d: usize, seed: u64) -> GenConfig {
    let small = GenConfig::small(seed);
    let mut g = if d <= 4 { small.clone() } else { GenConfig::large(seed) };
    g.b_extra = small.b_extra;
    g.u_cap = small.u_cap;
    g.dim_dist = vec![(d, 1.0)];
    g.d_max = g.d_max.max(d);
    g
}

/// Mean `C = depth · nodes` over `count` identifiable random expressions per
/// dimension. `base` supplies operator frequencies; its dimension settings
/// are replaced per `d`.
pub fn complexity_experiment(dims: &[usize], count: usize, base: Option<&GenConfig>, seed: u64) -> Vec<ComplexityRow> {
    dims.iter()
        .map(|&d| {
            let mut g = preset_for(d, seed);
            if let Some(b) = base {
                g.binary_freq = b.binary_freq.clone();
                g.unary_freq = b.unary_freq.clone();
                g.pow_exponents = b.pow_exponents.clone();
            }
            let lc = LabelConfig::new(g.m, d);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((d as u64) << 32));
            let (mut tree, mut net, mut n, mut skipped) = (0.0, 0.0, 0, 0);
            while n < count && skipped < 100 * count.max(1) {
                let f = sample_function(&g, &mut rng);
                let Some((nl, nn)) = net_cost(&f.expr, lc) else {
                    skipped += 1;
                    continue;
                };
                let (tl, tn) = tree_cost(&f.expr);
                tree += (tl * tn) as f64;
                net += (nl * nn) as f64;
                n += 1;
            }
            let k = n.max(1) as f64;
            ComplexityRow { d, count: n, skipped, mean_c_tree: tree / k, mean_c_net: net / k }
        })
        .collect()
}

/// Count of consecutive steps on which the tree-minus-network gap does not shrink.
pub fn nondecreasing_steps(rows: &[ComplexityRow]) -> (usize, usize) {
    let steps = rows.len().saturating_sub(1);
    let ok = rows.windows(2).filter(|w| w[1].gap() >= w[0].gap()).count();
    (ok, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn single_variable() {
        let x = parse("x0").unwrap();
        assert_eq!(tree_cost(&x), (1, 1));
        assert_eq!(net_cost(&x, LabelConfig::new(5, 1)), Some((1, 1)));
    }

    #[test]
    fn shared_affine_layer_is_shallower() {
        let e = parse("sin(x0 + x1) + cos(x1)").unwrap();
        assert_eq!(tree_cost(&e).0, 3);
        let (layers, nodes) = net_cost(&e, LabelConfig::new(5, 2)).unwrap();
        assert_eq!((layers, nodes), (2, 3));
    }

    #[test]
    fn small_sweep_favours_networks() {
        let rows = complexity_experiment(&[2, 3], 200, None, 1);
        for r in &rows {
            assert_eq!(r.count, 200);
            assert!(r.mean_c_net <= r.mean_c_tree, "{r:?}");
        }
    }
}
