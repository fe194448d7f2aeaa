//! Block-cut tree decomposition and Fiedler-sign classification of blocks.

use std::collections::{BTreeSet, VecDeque};

use crate::graph::{self, Network};
use crate::spectral::Tolerances;
use crate::{Error, Result, Vector};

/// Maximal 2-connected subgraph, or a bridge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub nodes: BTreeSet<usize>,
    /// Edges `(i, j)` with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    /// Sorted by their node lists.
    pub blocks: Vec<Block>,
    pub cut_nodes: BTreeSet<usize>,
    /// Links `(block index, cut node)` of the block-cut tree.
    pub tree_adjacency: Vec<(usize, usize)>,
}

impl BlockDecomposition {
    pub fn blocks_containing(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .filter(move |(_, b)| b.nodes.contains(&node))
            .map(|(k, _)| k)
    }

    /// Index of the block that holds edge `{i, j}`.
    pub fn block_of_edge(&self, i: usize, j: usize) -> Option<usize> {
        let key = (i.min(j), i.max(j));
        self.blocks.iter().position(|b| b.edges.contains(&key))
    }
}

/// Hopcroft-Tarjan with an explicit stack; errors on disconnected input.
pub fn block_cut_tree(net: &Network) -> Result<BlockDecomposition> {
    if !graph::is_connected(net) {
        return Err(Error::Disconnected);
    }
    let n = net.node_count();
    let mut disc = vec![0usize; n + 1];
    let mut low = vec![0usize; n + 1];
    let mut timer = 0;
    let mut edge_stack: Vec<(usize, usize)> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    // (node, parent, next neighbor index)
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();

    timer += 1;
    disc[1] = timer;
    low[1] = timer;
    stack.push((1, 0, 0));
    while let Some(frame) = stack.last_mut() {
        let (u, parent, idx) = *frame;
        if idx < net.degree(u) {
            frame.2 += 1;
            let v = net.neighbors(u)[idx].0;
            if disc[v] == 0 {
                edge_stack.push((u, v));
                timer += 1;
                disc[v] = timer;
                low[v] = timer;
                stack.push((v, u, 0));
            } else if v != parent && disc[v] < disc[u] {
                edge_stack.push((u, v));
                low[u] = low[u].min(disc[v]);
            }
            continue;
        }
        stack.pop();
        if let Some(&(p, _, _)) = stack.last() {
            low[p] = low[p].min(low[u]);
            if low[u] >= disc[p] {
                let mut block = Block {
                    nodes: BTreeSet::new(),
                    edges: Vec::new(),
                };
                while let Some((a, b)) = edge_stack.pop() {
                    block.nodes.insert(a);
                    block.nodes.insert(b);
                    block.edges.push((a.min(b), a.max(b)));
                    if (a, b) == (p, u) {
                        break;
                    }
                }
                block.edges.sort_unstable();
                blocks.push(block);
            }
        }
    }

    blocks.sort_by(|x, y| x.nodes.iter().cmp(y.nodes.iter()));
    let mut cut_nodes = BTreeSet::new();
    for node in 1..=n {
        if blocks.iter().filter(|b| b.nodes.contains(&node)).count() > 1 {
            cut_nodes.insert(node);
        }
    }
    let mut tree_adjacency = Vec::new();
    for (k, b) in blocks.iter().enumerate() {
        for &c in b.nodes.intersection(&cut_nodes) {
            tree_adjacency.push((k, c));
        }
    }
    Ok(BlockDecomposition {
        blocks,
        cut_nodes,
        tree_adjacency,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeSign {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockLabel {
    Positive,
    Negative,
    Zero,
    Core,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Case {
    /// Index of the single block holding both signs.
    CoreBlock(usize),
    /// The zero cut node adjacent to nonzero nodes.
    CoreNode(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiedlerClassification {
    pub node_sign: Vec<NodeSign>,
    pub block_label: Vec<BlockLabel>,
    pub case: Case,
    /// Monotonicity slips within `10 * eps_zero`.
    pub warnings: Vec<String>,
}

impl FiedlerClassification {
    pub fn sign(&self, node: usize) -> NodeSign {
        self.node_sign[node - 1]
    }

    /// Core block nodes (case 1) or the core node (case 2).
    pub fn core_nodes(&self, decomp: &BlockDecomposition) -> BTreeSet<usize> {
        match self.case {
            Case::CoreBlock(b) => decomp.blocks[b].nodes.clone(),
            Case::CoreNode(c) => BTreeSet::from([c]),
        }
    }

    pub fn zero_block_nodes(&self, decomp: &BlockDecomposition) -> BTreeSet<usize> {
        decomp
            .blocks
            .iter()
            .zip(&self.block_label)
            .filter(|(_, &label)| label == BlockLabel::Zero)
            .flat_map(|(b, _)| b.nodes.iter().copied())
            .collect()
    }

    pub fn has_zero_blocks(&self) -> bool {
        self.block_label.contains(&BlockLabel::Zero)
    }
}

/// Labels nodes and blocks by the signs of `v2`, finds the core and
/// audits cut-node monotonicity away from it.
pub fn classify_fiedler(
    net: &Network,
    decomp: &BlockDecomposition,
    v2: &Vector,
    tol: &Tolerances,
) -> Result<FiedlerClassification> {
    let n = net.node_count();
    if v2.len() != n {
        return Err(Error::Dimension(format!(
            "vector of length {} for {} nodes",
            v2.len(),
            n
        )));
    }
    let eps = tol.zero(v2);
    let node_sign: Vec<NodeSign> = v2
        .iter()
        .map(|&x| {
            if x.abs() <= eps {
                NodeSign::Zero
            } else if x > 0.0 {
                NodeSign::Positive
            } else {
                NodeSign::Negative
            }
        })
        .collect();

    let mut block_label = Vec::with_capacity(decomp.blocks.len());
    let mut mixed = Vec::new();
    for (k, b) in decomp.blocks.iter().enumerate() {
        let has = |s| b.nodes.iter().any(|&x| node_sign[x - 1] == s);
        let label = match (has(NodeSign::Positive), has(NodeSign::Negative)) {
            (true, true) => {
                mixed.push(k);
                BlockLabel::Core
            }
            (true, false) => BlockLabel::Positive,
            (false, true) => BlockLabel::Negative,
            (false, false) => BlockLabel::Zero,
        };
        block_label.push(label);
    }

    let case = match mixed.as_slice() {
        [core] => Case::CoreBlock(*core),
        [] => {
            let candidates: Vec<usize> = (1..=n)
                .filter(|&x| {
                    node_sign[x - 1] == NodeSign::Zero
                        && net
                            .neighbors(x)
                            .iter()
                            .any(|&(y, _)| node_sign[y - 1] != NodeSign::Zero)
                })
                .collect();
            match candidates.as_slice() {
                [c] if decomp.cut_nodes.contains(c) => Case::CoreNode(*c),
                _ => {
                    return Err(Error::Classification(format!(
                        "no mixed-sign block and zero nodes with nonzero neighbors {candidates:?}"
                    )))
                }
            }
        }
        _ => {
            return Err(Error::Classification(format!(
                "{} blocks mix positive and negative entries",
                mixed.len()
            )))
        }
    };

    let warnings = audit_monotonicity(decomp, v2, case, eps)?;
    Ok(FiedlerClassification {
        node_sign,
        block_label,
        case,
        warnings,
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum TreeNode {
    Block(usize),
    Cut(usize),
}

fn audit_monotonicity(
    decomp: &BlockDecomposition,
    v2: &Vector,
    case: Case,
    eps: f64,
) -> Result<Vec<String>> {
    let value = |c: usize| {
        let x = v2[c - 1];
        if x.abs() <= eps {
            0.0
        } else {
            x
        }
    };
    let mut warnings = Vec::new();
    let mut seen_blocks = vec![false; decomp.blocks.len()];
    let mut seen_cuts = BTreeSet::new();
    // (tree node, last cut node and its value, branch sign)
    let mut queue: VecDeque<(TreeNode, Option<(usize, f64)>, f64)> = VecDeque::new();
    match case {
        Case::CoreBlock(b) => {
            seen_blocks[b] = true;
            queue.push_back((TreeNode::Block(b), None, 0.0));
        }
        Case::CoreNode(c) => {
            seen_cuts.insert(c);
            queue.push_back((TreeNode::Cut(c), Some((c, 0.0)), 0.0));
        }
    }
    while let Some((node, last, sign)) = queue.pop_front() {
        match node {
            TreeNode::Block(b) => {
                for &(_, c) in decomp.tree_adjacency.iter().filter(|&&(k, _)| k == b) {
                    if !seen_cuts.insert(c) {
                        continue;
                    }
                    let val = value(c);
                    let s = if sign == 0.0 { val.signum() * f64::from(val != 0.0) } else { sign };
                    if let Some((from, prev)) = last {
                        let deficit = s * prev - s * val;
                        if deficit > 10.0 * eps {
                            return Err(Error::Monotonicity {
                                from,
                                to: c,
                                deficit,
                            });
                        }
                        if deficit > eps {
                            warnings.push(format!(
                                "cut nodes {from} -> {c}: entry magnitude drops by {deficit:e}"
                            ));
                        }
                    }
                    queue.push_back((TreeNode::Cut(c), Some((c, val)), s));
                }
            }
            TreeNode::Cut(c) => {
                for &(b, _) in decomp.tree_adjacency.iter().filter(|&&(_, x)| x == c) {
                    if !seen_blocks[b] {
                        seen_blocks[b] = true;
                        queue.push_back((TreeNode::Block(b), last, sign));
                    }
                }
            }
        }
    }
    Ok(warnings)
}
