//! Explicit node graph of a masked network, used to move structures between
//! the unified layout and compact custom layouts.

use super::{Architecture, LayerMask, MaskSet, NetError, NodeOp, Params, Structure};

#[derive(Clone, Debug, PartialEq)]
pub struct GraphNode {
    pub op: NodeOp,
    /// `(index into the previous layer, weight)`.
    pub inputs: Vec<(usize, f64)>,
    pub bias: Option<f64>,
}

impl GraphNode {
    pub fn new(op: NodeOp) -> GraphNode {
        GraphNode { op, inputs: Vec::new(), bias: None }
    }
}

/// Layered graph; layer 0 is implicit (the inputs) and the last layer holds
/// the single `id` output node.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGraph {
    pub input_dim: usize,
    pub layers: Vec<Vec<GraphNode>>,
}

impl NetGraph {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Nodes outside the input layer.
    pub fn node_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Keep only nodes on a masked path to the output, in their original order.
    pub fn from_structure(s: &Structure, p: &Params) -> NetGraph {
        let needed = s.reachable();
        let depth = s.depth();
        // New index of each kept node; inputs always keep their index.
        let mut index: Vec<Vec<Option<usize>>> = vec![(0..s.arch.input_dim()).map(Some).collect()];
        let mut layers = Vec::with_capacity(depth);
        for l in 1..=depth {
            let wi = s.arch.width(l - 1);
            let mut row_index = vec![None; s.arch.width(l)];
            let mut nodes = Vec::new();
            for i in 0..s.arch.width(l) {
                if !needed[l][i] {
                    continue;
                }
                let mut n = GraphNode::new(s.arch.op(l, i));
                for j in 0..wi {
                    if s.w_bit(l, i, j) {
                        if let Some(k) = index[l - 1][j] {
                            n.inputs.push((k, p.layers[l - 1].w[i * wi + j]));
                        }
                    }
                }
                if s.b_bit(l, i) {
                    n.bias = Some(p.layers[l - 1].b[i]);
                }
                row_index[i] = Some(nodes.len());
                nodes.push(n);
            }
            index.push(row_index);
            layers.push(nodes);
        }
        NetGraph { input_dim: s.arch.input_dim(), layers }
    }

    fn realize(&self, arch: Architecture, slot: &[Vec<usize>]) -> (Structure, Params) {
        let mut masks = MaskSet::empty(&arch);
        let mut params = Params::zeros(&arch);
        for (li, nodes) in self.layers.iter().enumerate() {
            let l = li + 1;
            let wi = arch.width(l - 1);
            let LayerMask { w, b } = &mut masks.layers[li];
            let lp = &mut params.layers[li];
            for (k, n) in nodes.iter().enumerate() {
                let i = slot[l][k];
                for &(j, v) in &n.inputs {
                    let j = slot[l - 1][j];
                    w[i * wi + j] = true;
                    lp.w[i * wi + j] = v;
                }
                if let Some(v) = n.bias {
                    b[i] = true;
                    lp.b[i] = v;
                }
            }
        }
        (Structure { arch, masks }, params)
    }

    fn identity_slots(&self) -> Vec<Vec<usize>> {
        let mut s = vec![(0..self.input_dim).collect::<Vec<_>>()];
        s.extend(self.layers.iter().map(|l| (0..l.len()).collect()));
        s
    }

    /// Custom layout with exactly the graph's nodes.
    pub fn to_compact(&self) -> (Structure, Params) {
        let layers = self.layers.iter().map(|l| l.iter().map(|n| n.op).collect()).collect();
        let arch = Architecture::custom(self.input_dim, layers).expect("graph ends in a single id node");
        self.realize(arch, &self.identity_slots())
    }

    /// Place the graph into the unified layout with `m` replicas per op,
    /// filling each op block from its first slot.
    pub fn to_unified(&self, m: usize) -> Result<(Structure, Params), NetError> {
        let arch = Architecture::unified(self.depth(), m, self.input_dim);
        let mut slot = self.identity_slots();
        for (li, nodes) in self.layers.iter().enumerate().take(self.depth() - 1) {
            let mut used = [0usize; 5];
            for (k, n) in nodes.iter().enumerate() {
                let b = n.op.block();
                if used[b] >= m {
                    return Err(NetError::ReplicaOverflow { layer: li + 1, op: n.op.name(), m });
                }
                slot[li + 1][k] = b * m + used[b];
                used[b] += 1;
            }
        }
        Ok(self.realize(arch, &slot))
    }
}
