//! Network model, Laplacian constructions and structural balance.

use std::collections::{BTreeSet, HashSet, VecDeque};

use crate::{Error, Matrix, Result};

/// Undirected weighted edge `{i, j}` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Undirected, possibly signed, weighted graph on nodes `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    n: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    name: Option<String>,
}

impl Network {
    pub fn new<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut seen = HashSet::new();
        let mut stored = Vec::new();
        let mut adjacency = vec![Vec::new(); n];
        for (a, b, w) in edges {
            for node in [a, b] {
                if node == 0 || node > n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if w == 0.0 || !w.is_finite() {
                return Err(Error::InvalidWeight(a, b));
            }
            let (i, j) = (a.min(b), a.max(b));
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateEdge(i, j));
            }
            stored.push(Edge { i, j, w });
            adjacency[i - 1].push((j, w));
            adjacency[j - 1].push((i, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(j, _)| j);
        }
        Ok(Self {
            n,
            edges: stored,
            adjacency,
            name: None,
        })
    }

    /// Unit-weight network from a list of node pairs.
    pub fn unweighted<I>(n: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::new(n, pairs.into_iter().map(|(i, j)| (i, j, 1.0)))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `node` with edge weights, ascending by id.
    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node - 1]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node - 1].len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.neighbors(i)
            .binary_search_by_key(&j, |&(k, _)| k)
            .ok()
            .map(|pos| self.adjacency[i - 1][pos].1)
    }

    pub fn is_signed(&self) -> bool {
        self.edges.iter().any(|e| e.w < 0.0)
    }

    pub fn has_unit_weights(&self) -> bool {
        self.edges.iter().all(|e| e.w == 1.0)
    }

    /// Same topology with `|w|` on every edge.
    pub fn absolute(&self) -> Network {
        let mut abs = Network::new(self.n, self.edges.iter().map(|e| (e.i, e.j, e.w.abs())))
            .expect("absolute value preserves network invariants");
        abs.name = self.name.clone();
        abs
    }

    pub fn is_tree(&self) -> bool {
        self.n >= 1 && self.edges.len() + 1 == self.n && is_connected(self)
    }

    /// Hop distances from `source` (`usize::MAX` when unreachable).
    pub fn hop_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        let mut queue = VecDeque::from([source]);
        dist[source - 1] = 0;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in self.neighbors(u) {
                if dist[v - 1] == usize::MAX {
                    dist[v - 1] = dist[u - 1] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Largest hop distance between two nodes of a connected network.
    pub fn diameter(&self) -> Result<usize> {
        if !is_connected(self) {
            return Err(Error::Disconnected);
        }
        Ok((1..=self.n)
            .map(|s| self.hop_distances(s).into_iter().max().unwrap_or(0))
            .max()
            .unwrap_or(0))
    }
}

/// External input attached to a leader node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LeaderLink {
    pub node: usize,
    /// 1-based input index.
    pub input: usize,
    /// +1 or -1.
    pub sign: i32,
}

/// Leader set, input matrix `B` and constant input vectors of a
/// semi-autonomous network.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiAutonomousConfig {
    links: Vec<LeaderLink>,
    inputs: Vec<Vec<f64>>,
}

impl SemiAutonomousConfig {
    pub fn new(n: usize, links: Vec<LeaderLink>, inputs: Vec<Vec<f64>>) -> Result<Self> {
        let m = inputs.len();
        let d = inputs.first().map_or(0, Vec::len);
        if d == 0 || inputs.iter().any(|u| u.len() != d) {
            return Err(Error::InputDimension);
        }
        let mut seen = HashSet::new();
        for link in &links {
            if link.node == 0 || link.node > n {
                return Err(Error::NodeOutOfRange { node: link.node, n });
            }
            if !seen.insert(link.node) {
                return Err(Error::RepeatedLeader(link.node));
            }
            if link.input == 0 || link.input > m {
                return Err(Error::InputOutOfRange {
                    index: link.input,
                    m,
                });
            }
            if link.sign != 1 && link.sign != -1 {
                return Err(Error::InvalidSign(link.sign));
            }
        }
        Ok(Self { links, inputs })
    }

    /// Every listed node follows input 1 with sign +1.
    pub fn uniform(n: usize, leaders: &[usize], input: Vec<f64>) -> Result<Self> {
        let links = leaders
            .iter()
            .map(|&node| LeaderLink {
                node,
                input: 1,
                sign: 1,
            })
            .collect();
        Self::new(n, links, vec![input])
    }

    pub fn links(&self) -> &[LeaderLink] {
        &self.links
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn dimension(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn leaders(&self) -> BTreeSet<usize> {
        self.links.iter().map(|l| l.node).collect()
    }

    pub fn is_signed(&self) -> bool {
        self.links.iter().any(|l| l.sign < 0)
    }

    /// The `n x m` input matrix `B` with `b_il = sign`.
    pub fn input_matrix(&self, n: usize) -> Matrix {
        let mut b = Matrix::zeros(n, self.inputs.len());
        for link in &self.links {
            b[(link.node - 1, link.input - 1)] = f64::from(link.sign);
        }
        b
    }

    /// The `m x d` matrix whose rows are the input vectors.
    pub fn input_values(&self) -> Matrix {
        let d = self.dimension();
        Matrix::from_fn(self.inputs.len(), d, |l, c| self.inputs[l][c])
    }
}

/// Directed arc: `follower` retains (is influenced by) `followed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub follower: usize,
    pub followed: usize,
    pub w: f64,
}

/// Reduced influence digraph produced by neighbor selection.
///
/// Arcs are stored as `(follower, followed)`; a drawn arrow `j -> i`
/// (influence flowing from `j` to `i`) is the arc `(i, j)` here.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedNetwork {
    n: usize,
    arcs: Vec<Arc>,
}

impl DirectedNetwork {
    pub fn new(n: usize, mut arcs: Vec<Arc>) -> Result<Self> {
        let mut seen = HashSet::new();
        for arc in &arcs {
            for node in [arc.follower, arc.followed] {
                if node == 0 || node > n {
                    return Err(Error::NodeOutOfRange { node, n });
                }
            }
            if arc.follower == arc.followed {
                return Err(Error::SelfLoop(arc.follower));
            }
            if !seen.insert((arc.follower, arc.followed)) {
                return Err(Error::DuplicateEdge(arc.follower, arc.followed));
            }
        }
        arcs.sort_by_key(|a| (a.follower, a.followed));
        Ok(Self { n, arcs })
    }

    pub fn empty(n: usize) -> Self {
        Self {
            n,
            arcs: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn arc_set(&self) -> BTreeSet<(usize, usize)> {
        self.arcs.iter().map(|a| (a.follower, a.followed)).collect()
    }

    pub fn contains(&self, follower: usize, followed: usize) -> bool {
        self.arcs
            .binary_search_by_key(&(follower, followed), |a| (a.follower, a.followed))
            .is_ok()
    }

    /// Nodes that `follower` retains.
    pub fn retained(&self, follower: usize) -> impl Iterator<Item = &Arc> {
        self.arcs.iter().filter(move |a| a.follower == follower)
    }

    /// Same node set with every arc reversed.
    pub fn reversed(&self) -> DirectedNetwork {
        let arcs = self
            .arcs
            .iter()
            .map(|a| Arc {
                follower: a.followed,
                followed: a.follower,
                w: a.w,
            })
            .collect();
        DirectedNetwork::new(self.n, arcs).expect("reversal preserves arc invariants")
    }

    /// Whether the arc relation contains a directed cycle.
    pub fn has_cycle(&self) -> bool {
        let mut indegree = vec![0usize; self.n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for a in &self.arcs {
            out[a.followed - 1].push(a.follower - 1);
            indegree[a.follower - 1] += 1;
        }
        let mut stack: Vec<usize> = (0..self.n).filter(|&k| indegree[k] == 0).collect();
        let mut visited = 0;
        while let Some(u) = stack.pop() {
            visited += 1;
            for &v in &out[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    stack.push(v);
                }
            }
        }
        visited != self.n
    }
}

/// `l_ii = sum_j w_ij`, `l_ij = -w_ij`.
pub fn laplacian(net: &Network) -> Matrix {
    let n = net.node_count();
    let mut l = Matrix::zeros(n, n);
    for e in net.edges() {
        let (a, b) = (e.i - 1, e.j - 1);
        l[(a, a)] += e.w;
        l[(b, b)] += e.w;
        l[(a, b)] -= e.w;
        l[(b, a)] -= e.w;
    }
    l
}

/// `L + diag(B 1)`; rejects negatively signed leader links.
pub fn perturbed_laplacian(net: &Network, cfg: &SemiAutonomousConfig) -> Result<Matrix> {
    if let Some(link) = cfg.links().iter().find(|l| l.sign < 0) {
        return Err(Error::SignedLeader(link.node));
    }
    let mut l = laplacian(net);
    add_leader_diagonal(&mut l, cfg)?;
    Ok(l)
}

/// `l_ii = sum_j |w_ij|`, `l_ij = -w_ij`.
pub fn signed_laplacian(net: &Network) -> Matrix {
    let n = net.node_count();
    let mut l = Matrix::zeros(n, n);
    for e in net.edges() {
        let (a, b) = (e.i - 1, e.j - 1);
        l[(a, a)] += e.w.abs();
        l[(b, b)] += e.w.abs();
        l[(a, b)] -= e.w;
        l[(b, a)] -= e.w;
    }
    l
}

/// `Ls + diag(|B| 1)`.
pub fn signed_perturbed_laplacian(net: &Network, cfg: &SemiAutonomousConfig) -> Result<Matrix> {
    let mut l = signed_laplacian(net);
    add_leader_diagonal(&mut l, cfg)?;
    Ok(l)
}

fn add_leader_diagonal(l: &mut Matrix, cfg: &SemiAutonomousConfig) -> Result<()> {
    let n = l.nrows();
    for link in cfg.links() {
        if link.node > n {
            return Err(Error::NodeOutOfRange { node: link.node, n });
        }
        l[(link.node - 1, link.node - 1)] += 1.0;
    }
    Ok(())
}

pub fn is_connected(net: &Network) -> bool {
    net.node_count() > 0 && net.hop_distances(1).iter().all(|&d| d != usize::MAX)
}

/// Two-sided node partition of a structurally balanced signed graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub v1: BTreeSet<usize>,
    pub v2: BTreeSet<usize>,
}

impl Bipartition {
    /// Gauge sign of `node`: +1 on `v1`, -1 on `v2`.
    pub fn sigma(&self, node: usize) -> f64 {
        if self.v2.contains(&node) {
            -1.0
        } else {
            1.0
        }
    }
}

/// Two-colors the nodes so that positive edges join equal colors and
/// negative edges join opposite ones. Node 1 always lands in `v1`.
/// Returns `Ok(None)` when no such coloring exists.
pub fn structural_balance_partition(net: &Network) -> Result<Option<Bipartition>> {
    if !is_connected(net) {
        return Err(Error::Disconnected);
    }
    let signed_edges: Vec<_> = net.edges().iter().map(|e| (e.i, e.j, e.w)).collect();
    Ok(two_color(net.node_count(), &signed_edges).map(|colors| split(&colors, net.node_count())))
}

/// Balance of the augmented graph in which every input is an extra node
/// joined to its leaders by an edge of the leader sign. Returns the
/// agent partition and the gauge sign of each input.
pub fn augmented_balance(
    net: &Network,
    cfg: &SemiAutonomousConfig,
) -> Result<Option<(Bipartition, Vec<f64>)>> {
    if !is_connected(net) {
        return Err(Error::Disconnected);
    }
    let n = net.node_count();
    let mut signed_edges: Vec<_> = net.edges().iter().map(|e| (e.i, e.j, e.w)).collect();
    signed_edges.extend(
        cfg.links()
            .iter()
            .map(|l| (l.node, n + l.input, f64::from(l.sign))),
    );
    Ok(
        two_color(n + cfg.input_count(), &signed_edges).map(|colors| {
            let input_signs = colors[n..]
                .iter()
                .map(|&c| if c { -1.0 } else { 1.0 })
                .collect();
            (split(&colors, n), input_signs)
        }),
    )
}

// Color `false` is the side of node 1.
fn two_color(count: usize, signed_edges: &[(usize, usize, f64)]) -> Option<Vec<bool>> {
    let mut adjacency: Vec<Vec<(usize, bool)>> = vec![Vec::new(); count];
    for &(i, j, w) in signed_edges {
        adjacency[i - 1].push((j - 1, w < 0.0));
        adjacency[j - 1].push((i - 1, w < 0.0));
    }
    let mut color: Vec<Option<bool>> = vec![None; count];
    for start in 0..count {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(false);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].expect("queued nodes are colored");
            for &(v, flips) in &adjacency[u] {
                let want = cu ^ flips;
                match color[v] {
                    None => {
                        color[v] = Some(want);
                        queue.push_back(v);
                    }
                    Some(cv) if cv != want => return None,
                    Some(_) => {}
                }
            }
        }
    }
    Some(color.into_iter().map(|c| c.unwrap_or(false)).collect())
}

fn split(colors: &[bool], n: usize) -> Bipartition {
    let mut v1 = BTreeSet::new();
    let mut v2 = BTreeSet::new();
    for (k, &c) in colors.iter().take(n).enumerate() {
        if c {
            v2.insert(k + 1);
        } else {
            v1.insert(k + 1);
        }
    }
    Bipartition { v1, v2 }
}

/// Diagonal gauge transform `G = diag(sigma_1, ..., sigma_n)`.
pub fn gauge_matrix(partition: &Bipartition, n: usize) -> Matrix {
    Matrix::from_diagonal(&crate::Vector::from_fn(n, |k, _| partition.sigma(k + 1)))
}

/// Laplacian of a reduced digraph: `l_ii = sum of retained weights`,
/// `l_ij = -w` for each retained arc `(i, j)`.
pub fn reduced_laplacian(dnet: &DirectedNetwork) -> Matrix {
    let n = dnet.node_count();
    let mut l = Matrix::zeros(n, n);
    for a in dnet.arcs() {
        let (i, j) = (a.follower - 1, a.followed - 1);
        l[(i, i)] += a.w;
        l[(i, j)] -= a.w;
    }
    l
}

/// Signed counterpart of [`reduced_laplacian`]: the diagonal sums `|w|`.
pub fn reduced_signed_laplacian(dnet: &DirectedNetwork) -> Matrix {
    let n = dnet.node_count();
    let mut l = Matrix::zeros(n, n);
    for a in dnet.arcs() {
        let (i, j) = (a.follower - 1, a.followed - 1);
        l[(i, i)] += a.w.abs();
        l[(i, j)] -= a.w;
    }
    l
}
