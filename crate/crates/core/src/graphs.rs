//! Small connected motifs and their overlap combinatorics.
//!
//! Motifs are undirected connected graphs on at most eight vertices, held as
//! adjacency bitmasks with value semantics. The module provides exhaustive
//! automorphism counting, enumeration of the distinct isomorphic copies of a
//! motif on a fixed label set, and the overlap families used by covariance
//! expansions: pairs `(H1, H2)` of copies of two motifs whose vertex sets
//! share a prescribed number of labels.

use std::collections::HashSet;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("graph must have between 1 and 8 vertices, got {0}")]
    BadOrder(usize),
    #[error("self loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) out of range")]
    EdgeOutOfRange(usize, usize),
    #[error("graph is not connected")]
    Disconnected,
    #[error("label set has {got} labels, motif has {want} vertices")]
    LabelCount { got: usize, want: usize },
    #[error("labels must be distinct")]
    DuplicateLabel,
    #[error("overlap size {m} not in 1..={max}")]
    BadOverlap { m: usize, max: usize },
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("edge list parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Undirected connected graph on `q <= 8` vertices, vertices `0..q`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    q: u8,
    adj: [u8; 8],
}

impl std::fmt::Debug for SmallGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SmallGraph(q={}, edges={:?})", self.q, self.edges())
    }
}

impl SmallGraph {
    /// Build from an edge list over vertices `0..q`. Rejects self loops,
    /// out-of-range endpoints, orders outside 1..=8, and disconnected graphs.
    pub fn from_edges(q: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if q == 0 || q > 8 {
            return Err(GraphError::BadOrder(q));
        }
        let mut adj = [0u8; 8];
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            if u >= q || v >= q {
                return Err(GraphError::EdgeOutOfRange(u, v));
            }
            adj[u] |= 1 << v;
            adj[v] |= 1 << u;
        }
        let g = SmallGraph { q: q as u8, adj };
        if !g.connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(g)
    }

    /// Parse the text edge-list format: one `u v` pair per line, labels
    /// 1-based, blank lines and `#` comments ignored. The order is the
    /// largest label mentioned.
    pub fn parse_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        let mut max = 0usize;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize, GraphError> {
                tok.and_then(|t| t.parse::<usize>().ok())
                    .filter(|&v| v >= 1)
                    .ok_or(GraphError::Parse {
                        line: i + 1,
                        msg: format!("expected two 1-based labels, got {line:?}"),
                    })
            };
            let u = parse(it.next())?;
            let v = parse(it.next())?;
            if it.next().is_some() {
                return Err(GraphError::Parse {
                    line: i + 1,
                    msg: "trailing tokens".into(),
                });
            }
            max = max.max(u).max(v);
            edges.push((u - 1, v - 1));
        }
        if edges.is_empty() {
            return Err(GraphError::Parse {
                line: 0,
                msg: "no edges".into(),
            });
        }
        Self::from_edges(max, &edges)
    }

    /// Named presets: `edge`, `wedge`, `triangle`, `k4`, `star3`.
    pub fn preset(name: &str) -> Result<Self, GraphError> {
        match name {
            "edge" => Self::from_edges(2, &[(0, 1)]),
            "wedge" => Self::from_edges(3, &[(0, 1), (1, 2)]),
            "triangle" => Self::from_edges(3, &[(0, 1), (1, 2), (0, 2)]),
            "k4" => Self::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
            "star3" => Self::from_edges(4, &[(0, 1), (0, 2), (0, 3)]),
            _ => Err(GraphError::UnknownPreset(name.to_string())),
        }
    }

    pub fn q(&self) -> usize {
        self.q as usize
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.q() && v < self.q() && self.adj[u] & (1 << v) != 0
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].count_ones() as usize
    }

    /// Neighbor list of `u`, ascending.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        let mask = self.adj[u];
        (0..self.q()).filter(move |&v| mask & (1 << v) != 0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.q() {
            for v in (u + 1)..self.q() {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|m| m.count_ones() as usize).sum::<usize>() / 2
    }

    fn connected(&self) -> bool {
        let mut seen: u8 = 1;
        let mut frontier: u8 = 1;
        while frontier != 0 {
            let mut next = 0u8;
            for u in 0..self.q() {
                if frontier & (1 << u) != 0 {
                    next |= self.adj[u];
                }
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen.count_ones() as usize >= self.q()
    }

    /// Order of the automorphism group, by exhaustive permutation check.
    pub fn automorphism_count(&self) -> u64 {
        let mut count = 0u64;
        for_each_permutation(self.q(), |perm| {
            if self.is_preserved_by(perm) {
                count += 1;
            }
        });
        count
    }

    fn is_preserved_by(&self, perm: &[usize]) -> bool {
        for u in 0..self.q() {
            for v in (u + 1)..self.q() {
                if self.has_edge(u, v) != self.has_edge(perm[u], perm[v]) {
                    return false;
                }
            }
        }
        true
    }

    /// Apply a relabeling: vertex `u` becomes `perm[u]`.
    pub fn relabeled(&self, perm: &[usize]) -> SmallGraph {
        let mut adj = [0u8; 8];
        for (u, v) in self.edges() {
            adj[perm[u]] |= 1 << perm[v];
            adj[perm[v]] |= 1 << perm[u];
        }
        SmallGraph { q: self.q, adj }
    }

    /// Isomorphism-invariant key: the minimum upper-triangle bit code over
    /// all relabelings. Two graphs share a key iff they are isomorphic.
    pub fn canonical_key(&self) -> u64 {
        let mut best = u64::MAX;
        for_each_permutation(self.q(), |perm| {
            let mut code: u64 = 0;
            let mut bit = 0;
            for u in 0..self.q() {
                for v in (u + 1)..self.q() {
                    if self.has_edge(perm[u], perm[v]) {
                        code |= 1 << bit;
                    }
                    bit += 1;
                }
            }
            code |= (self.q as u64) << 56;
            best = best.min(code);
        });
        best
    }

    /// True if some relabeling of `inner` has all its edges inside `self`.
    /// Both graphs must have equal order.
    pub fn contains_spanning(&self, inner: &SmallGraph) -> bool {
        if self.q != inner.q {
            return false;
        }
        let mut found = false;
        for_each_permutation(self.q(), |perm| {
            if !found
                && inner
                    .edges()
                    .iter()
                    .all(|&(u, v)| self.has_edge(perm[u], perm[v]))
            {
                found = true;
            }
        });
        found
    }

    /// Vertex order starting at `root` in which every later vertex has an
    /// earlier neighbor. Used by embedding enumerators.
    pub fn search_order(&self, root: usize) -> Vec<usize> {
        let mut order = vec![root];
        let mut seen = 1u8 << root;
        while order.len() < self.q() {
            let u = (0..self.q())
                .find(|&u| seen & (1 << u) == 0 && self.adj[u] & seen != 0)
                .expect("graph is connected");
            order.push(u);
            seen |= 1 << u;
        }
        order
    }

    /// Biconnected components as edge sets, each relabeled to a compact
    /// graph. Cut vertices are duplicated across blocks.
    pub fn blocks(&self) -> Vec<SmallGraph> {
        let q = self.q();
        if q == 1 {
            return vec![];
        }
        // Iterative Hopcroft-Tarjan is overkill at q <= 8; recursion is fine.
        struct Dfs<'a> {
            g: &'a SmallGraph,
            num: [usize; 8],
            low: [usize; 8],
            clock: usize,
            stack: Vec<(usize, usize)>,
            blocks: Vec<Vec<(usize, usize)>>,
        }
        impl Dfs<'_> {
            fn go(&mut self, u: usize, parent: usize) {
                self.clock += 1;
                self.num[u] = self.clock;
                self.low[u] = self.clock;
                for v in self.g.neighbors(u).collect::<Vec<_>>() {
                    if self.num[v] == 0 {
                        self.stack.push((u, v));
                        self.go(v, u);
                        self.low[u] = self.low[u].min(self.low[v]);
                        if self.low[v] >= self.num[u] {
                            let mut block = Vec::new();
                            while let Some(e) = self.stack.pop() {
                                block.push(e);
                                if e == (u, v) {
                                    break;
                                }
                            }
                            self.blocks.push(block);
                        }
                    } else if v != parent && self.num[v] < self.num[u] {
                        self.stack.push((u, v));
                        self.low[u] = self.low[u].min(self.num[v]);
                    }
                }
            }
        }
        let mut dfs = Dfs {
            g: self,
            num: [0; 8],
            low: [0; 8],
            clock: 0,
            stack: Vec::new(),
            blocks: Vec::new(),
        };
        dfs.go(0, usize::MAX);
        dfs.blocks
            .into_iter()
            .map(|edges| {
                let mut labels: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
                labels.sort_unstable();
                labels.dedup();
                let pos = |x: usize| labels.iter().position(|&l| l == x).unwrap();
                let compact: Vec<(usize, usize)> =
                    edges.iter().map(|&(u, v)| (pos(u), pos(v))).collect();
                SmallGraph::from_edges(labels.len(), &compact).expect("block is connected")
            })
            .collect()
    }
}

/// Call `f` with every permutation of `0..q`.
pub fn for_each_permutation(q: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..q).collect();
    // Heap's algorithm.
    let mut c = vec![0usize; q];
    f(&perm);
    let mut i = 0;
    while i < q {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// A motif copy living on an explicit label set: vertex `i` of `graph`
/// carries `labels[i]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledGraph {
    pub labels: Vec<u32>,
    pub graph: SmallGraph,
}

impl LabeledGraph {
    pub fn edges_on_labels(&self) -> Vec<(u32, u32)> {
        self.graph
            .edges()
            .iter()
            .map(|&(u, v)| {
                let (a, b) = (self.labels[u], self.labels[v]);
                (a.min(b), a.max(b))
            })
            .collect()
    }
}

/// All distinct graphs on `labels` isomorphic to `g`. The count is always
/// `q! / automorphism_count(g)`.
pub fn isomorphic_copies_on_labels(
    g: &SmallGraph,
    labels: &[u32],
) -> Result<Vec<LabeledGraph>, GraphError> {
    if labels.len() != g.q() {
        return Err(GraphError::LabelCount {
            got: labels.len(),
            want: g.q(),
        });
    }
    let distinct: HashSet<&u32> = labels.iter().collect();
    if distinct.len() != labels.len() {
        return Err(GraphError::DuplicateLabel);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for_each_permutation(g.q(), |perm| {
        let h = g.relabeled(perm);
        if seen.insert(h) {
            out.push(LabeledGraph {
                labels: labels.to_vec(),
                graph: h,
            });
        }
    });
    Ok(out)
}

/// A pair of motif copies with a prescribed vertex overlap, plus their
/// union relabeled to a compact graph.
#[derive(Clone, Debug)]
pub struct GraphPair {
    pub h1: LabeledGraph,
    pub h2: LabeledGraph,
    /// Labels shared by both copies: `1..=m`.
    pub shared: Vec<u32>,
    /// Union of both edge sets on the combined label set, relabeled to
    /// vertices `0..(q_i + q_j - m)`.
    pub union: SmallGraph,
}

/// Enumerate every pair `(H1, H2)` where `H1` is a copy of `gi` on labels
/// `1..=q_i` and `H2` a copy of `gj` on labels `1..=m` joined with
/// `q_i+1..=q_i+q_j-m`, so the copies share exactly `m` vertices.
///
/// `m = 1` gives the family driving equal-order covariance leading terms in
/// the dense regime; `m = min(q_i, q_j)` the family driving the sparse one.
pub fn overlap_pairs(
    gi: &SmallGraph,
    gj: &SmallGraph,
    m: usize,
) -> Result<Vec<GraphPair>, GraphError> {
    let (qi, qj) = (gi.q(), gj.q());
    let max = qi.min(qj);
    if m == 0 || m > max {
        return Err(GraphError::BadOverlap { m, max });
    }
    let labels1: Vec<u32> = (1..=qi as u32).collect();
    let labels2: Vec<u32> = (1..=m as u32)
        .chain(qi as u32 + 1..=(qi + qj - m) as u32)
        .collect();
    let union_order = qi + qj - m;
    let copies1 = isomorphic_copies_on_labels(gi, &labels1)?;
    let copies2 = isomorphic_copies_on_labels(gj, &labels2)?;
    let mut out = Vec::with_capacity(copies1.len() * copies2.len());
    for c1 in &copies1 {
        for c2 in &copies2 {
            let mut edges: Vec<(usize, usize)> = Vec::new();
            for (a, b) in c1.edges_on_labels().into_iter().chain(c2.edges_on_labels()) {
                edges.push((a as usize - 1, b as usize - 1));
            }
            edges.sort_unstable();
            edges.dedup();
            let union = SmallGraph::from_edges(union_order, &edges)?;
            out.push(GraphPair {
                h1: c1.clone(),
                h2: c2.clone(),
                shared: (1..=m as u32).collect(),
                union,
            });
        }
    }
    Ok(out)
}
