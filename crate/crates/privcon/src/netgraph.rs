//! Weighted agent networks and the structural predicates the constructions need.
//!
//! Convention: an edge `i -> j` with weight `w` means agent `j` listens to `i`,
//! stored as `A[j][i] = w`. Row `i` of a dynamics matrix is what agent `i` receives.

use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use num_integer::Integer;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::exactla::{
    parse_decimal, parse_rational, serde_rational, Fmt, Matrix, Rational, RationalMatrix, Scalar,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("node {node} out of range for {nodes} nodes")]
    NodeOutOfRange { node: usize, nodes: usize },
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(usize, usize),
    #[error("edge {0} -> {1} has non-positive weight")]
    NonPositiveWeight(usize, usize),
    #[error("A2: not strongly connected")]
    NotStronglyConnected,
    #[error("structure not bidirected")]
    NotBidirected,
    #[error("not reversible: detailed balance fails on {0} <-> {1}")]
    NotReversible(usize, usize),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("graph has no cycles")]
    Acyclic,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    #[serde(with = "serde_rational")]
    pub w: Rational,
}

/// Agent network. Edge pairs are unique, endpoints in range, weights positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct WeightedDigraph {
    nodes: usize,
    edges: Vec<Edge>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    nodes: usize,
    edges: Vec<Edge>,
}

impl TryFrom<RawGraph> for WeightedDigraph {
    type Error = GraphError;
    fn try_from(r: RawGraph) -> Result<Self, GraphError> {
        WeightedDigraph::new(r.nodes, r.edges)
    }
}

impl From<WeightedDigraph> for RawGraph {
    fn from(g: WeightedDigraph) -> Self {
        RawGraph { nodes: g.nodes, edges: g.edges }
    }
}

impl WeightedDigraph {
    pub fn new(nodes: usize, edges: Vec<Edge>) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for e in &edges {
            for node in [e.src, e.dst] {
                if node >= nodes {
                    return Err(GraphError::NodeOutOfRange { node, nodes });
                }
            }
            if !seen.insert((e.src, e.dst)) {
                return Err(GraphError::DuplicateEdge(e.src, e.dst));
            }
            if !e.w.is_positive() {
                return Err(GraphError::NonPositiveWeight(e.src, e.dst));
            }
        }
        Ok(Self { nodes, edges })
    }

    /// Every unordered pair in `pairs` becomes two directed edges of weight `w`.
    pub fn bidirected(nodes: usize, pairs: &[(usize, usize)], w: Rational) -> Result<Self, GraphError> {
        let edges = pairs
            .iter()
            .flat_map(|&(i, j)| {
                [Edge { src: i, dst: j, w: w.clone() }, Edge { src: j, dst: i, w: w.clone() }]
            })
            .collect();
        Self::new(nodes, edges)
    }

    /// Reads edges back from a dynamics matrix (`A[j][i] != 0` gives `i -> j`).
    pub fn from_matrix(a: &RationalMatrix) -> Result<Self, GraphError> {
        if !a.is_square() {
            return Err(GraphError::NotSquare(a.rows(), a.cols()));
        }
        let n = a.rows();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if a.nonzero(j, i) {
                    edges.push(Edge { src: i, dst: j, w: a[(j, i)].clone() });
                }
            }
        }
        Self::new(n, edges)
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn structure(&self) -> Digraph {
        Digraph::from_pairs(self.nodes, self.edges.iter().map(|e| (e.src, e.dst)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GraphError> {
        serde_json::from_str(s).map_err(|e| GraphError::Json(e.to_string()))
    }

    /// One `src dst weight` triple per line; `#` starts a comment.
    /// The node count is one past the largest index mentioned.
    pub fn from_edge_list(s: &str) -> Result<Self, GraphError> {
        let mut edges = Vec::new();
        for (k, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| GraphError::Parse { line: k + 1, msg: msg.to_string() };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [src, dst, w] = fields[..] else {
                return Err(err("expected `src dst weight`"));
            };
            let src = src.parse().map_err(|_| err("bad source index"))?;
            let dst = dst.parse().map_err(|_| err("bad target index"))?;
            let w = parse_rational(w).or_else(|_| parse_decimal(w)).map_err(|e| err(&e.to_string()))?;
            edges.push(Edge { src, dst, w });
        }
        let nodes = edges.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(0);
        Self::new(nodes, edges)
    }

    pub fn to_edge_list(&self) -> String {
        self.edges.iter().map(|e| format!("{} {} {}\n", e.src, e.dst, Fmt(&e.w))).collect()
    }

    /// JSON if the text starts with `{`, edge list otherwise.
    pub fn parse_any(s: &str) -> Result<Self, GraphError> {
        if s.trim_start().starts_with('{') {
            Self::from_json(s)
        } else {
            Self::from_edge_list(s)
        }
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self, GraphError>> {
        Ok(Self::parse_any(&std::fs::read_to_string(path)?))
    }
}

pub fn to_matrix(g: &WeightedDigraph) -> RationalMatrix {
    let mut a = RationalMatrix::zeros(g.nodes, g.nodes);
    for e in &g.edges {
        a[(e.dst, e.src)] = e.w.clone();
    }
    a
}

pub fn is_strongly_connected(g: &WeightedDigraph) -> bool {
    g.structure().is_strongly_connected()
}

pub fn period(g: &WeightedDigraph) -> Result<usize, GraphError> {
    g.structure().period()
}

pub fn is_bidirected(g: &WeightedDigraph) -> bool {
    g.structure().is_bidirected()
}

/// Unweighted adjacency, outgoing and incoming lists sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Digraph {
    out: Vec<Vec<usize>>,
    inc: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut out = vec![Vec::new(); n];
        let mut inc = vec![Vec::new(); n];
        for (u, v) in pairs {
            out[u].push(v);
            inc[v].push(u);
        }
        for l in out.iter_mut().chain(inc.iter_mut()) {
            l.sort_unstable();
            l.dedup();
        }
        Self { out, inc }
    }

    /// Structure of a dynamics matrix: `i -> j` iff `A[j][i] != 0`.
    pub fn of_matrix<T: Scalar>(a: &Matrix<T>) -> Self {
        let n = a.rows();
        let pairs = (0..n).flat_map(|j| (0..n).filter(move |&i| a.nonzero(j, i)).map(move |i| (i, j)));
        Self::from_pairs(n, pairs.collect::<Vec<_>>())
    }

    pub fn node_count(&self) -> usize {
        self.out.len()
    }

    pub fn out_neighbors(&self, u: usize) -> &[usize] {
        &self.out[u]
    }

    pub fn in_neighbors(&self, u: usize) -> &[usize] {
        &self.inc[u]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out.iter().enumerate().flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    fn reach_all(adj: &[Vec<usize>]) -> bool {
        let n = adj.len();
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == n
    }

    /// Forward and reverse BFS from node 0 both reach every node.
    pub fn is_strongly_connected(&self) -> bool {
        self.node_count() > 0 && Self::reach_all(&self.out) && Self::reach_all(&self.inc)
    }

    pub fn bfs_levels(&self, root: usize) -> Vec<Option<usize>> {
        let mut level = vec![None; self.node_count()];
        level[root] = Some(0);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            let next = level[u].map(|l| l + 1);
            for &v in &self.out[u] {
                if level[v].is_none() {
                    level[v] = next;
                    queue.push_back(v);
                }
            }
        }
        level
    }

    /// gcd over edges `(u, v)` of `|level(u) + 1 - level(v)|`, levels from a BFS at 0.
    pub fn period(&self) -> Result<usize, GraphError> {
        if !self.is_strongly_connected() {
            return Err(GraphError::NotStronglyConnected);
        }
        let level = self.bfs_levels(0);
        let g = self.edges().fold(0usize, |g, (u, v)| {
            let (lu, lv) = (level[u].expect("reachable"), level[v].expect("reachable"));
            g.gcd(&(lu + 1).abs_diff(lv))
        });
        if g == 0 {
            Err(GraphError::Acyclic)
        } else {
            Ok(g)
        }
    }

    pub fn is_aperiodic(&self) -> bool {
        self.period() == Ok(1)
    }

    /// Every off-diagonal edge has its reverse.
    pub fn is_bidirected(&self) -> bool {
        self.edges().all(|(u, v)| u == v || self.out[v].binary_search(&u).is_ok())
    }
}

/// Exact check: nonnegative entries and every row summing to one.
pub fn is_row_stochastic<T: Scalar>(a: &Matrix<T>) -> bool {
    a.is_square()
        && a.data().iter().all(|x| !x.is_negative())
        && a.row_sums().iter().all(|s| s.is_one())
}

/// Neighbourhood `N_i`: the agent together with everyone it receives from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSet {
    pub agent: usize,
    pub members: BTreeSet<usize>,
}

pub fn neighbor_set<T: Scalar>(a: &Matrix<T>, agent: usize) -> NeighborSet {
    let mut members: BTreeSet<usize> = (0..a.cols()).filter(|&j| a.nonzero(agent, j)).collect();
    members.insert(agent);
    NeighborSet { agent, members }
}

/// Stationary weights of a reversible matrix, normalized to sum one.
///
/// Propagates `s_j = s_i A_ij / A_ji` along a BFS tree from node 0
/// (lowest-index neighbours first), then checks detailed balance on every edge.
pub fn reversibility_vector<T: Scalar>(a: &Matrix<T>) -> Result<Vec<T>, GraphError> {
    let order: Vec<usize> = (0..a.rows()).collect();
    reversibility_vector_ordered(a, 0, &order)
}

/// As [`reversibility_vector`] but rooted at `root`, visiting neighbours by
/// ascending `priority[v]`. Result is independent of both on valid inputs.
pub fn reversibility_vector_ordered<T: Scalar>(
    a: &Matrix<T>,
    root: usize,
    priority: &[usize],
) -> Result<Vec<T>, GraphError> {
    if !a.is_square() {
        return Err(GraphError::NotSquare(a.rows(), a.cols()));
    }
    let n = a.rows();
    for i in 0..n {
        for j in 0..n {
            if i != j && a.nonzero(i, j) != a.nonzero(j, i) {
                return Err(GraphError::NotBidirected);
            }
        }
    }
    let g = Digraph::of_matrix(a);
    if !g.is_strongly_connected() {
        return Err(GraphError::NotStronglyConnected);
    }
    let mut s: Vec<Option<T>> = vec![None; n];
    s[root] = Some(T::one());
    let mut queue = VecDeque::from([root]);
    while let Some(i) = queue.pop_front() {
        let si = s[i].clone().expect("visited");
        let mut nbrs: Vec<usize> = g.in_neighbors(i).iter().copied().filter(|&j| j != i).collect();
        nbrs.sort_by_key(|&j| priority[j]);
        for j in nbrs {
            if s[j].is_none() {
                s[j] = Some(si.clone() * a[(i, j)].clone() / a[(j, i)].clone());
                queue.push_back(j);
            }
        }
    }
    let s: Vec<T> = s.into_iter().map(|x| x.expect("strongly connected")).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if a.nonzero(i, j) && s[i].clone() * a[(i, j)].clone() != s[j].clone() * a[(j, i)].clone() {
                return Err(GraphError::NotReversible(i, j));
            }
        }
    }
    let total = s.iter().fold(T::zero(), |acc, x| acc + x.clone());
    Ok(s.into_iter().map(|x| x / total.clone()).collect())
}

/// True iff `s_i A_ij == s_j A_ji` for every pair.
pub fn detailed_balance<T: Scalar>(a: &Matrix<T>, s: &[T]) -> bool {
    let n = a.rows();
    (0..n).all(|i| {
        ((i + 1)..n).all(|j| {
            let (fwd, back) = (a.nonzero(i, j), a.nonzero(j, i));
            match (fwd, back) {
                (false, false) => true,
                (true, true) => s[i].clone() * a[(i, j)].clone() == s[j].clone() * a[(j, i)].clone(),
                // one-sided edge: balance needs a zero weight on the other side
                _ => (fwd && s[i].is_zero()) || (back && s[j].is_zero()),
            }
        })
    })
}

/// Random reversible row-stochastic matrix on `n` nodes: a random spanning
/// tree plus `extra` random chords, symmetric conductances `k/101`, rows
/// normalized. Stationary weights are proportional to conductance row sums.
pub fn random_reversible<R: rand::Rng + ?Sized>(n: usize, extra: usize, rng: &mut R) -> RationalMatrix {
    use num_traits::Zero;
    let mut c = RationalMatrix::zeros(n, n);
    let link = |c: &mut RationalMatrix, u: usize, v: usize, rng: &mut R| {
        let w = crate::exactla::ratio(rng.gen_range(1..=97), 101);
        c[(u, v)] = w.clone();
        c[(v, u)] = w;
    };
    for v in 1..n {
        let u = rng.gen_range(0..v);
        link(&mut c, u, v, rng);
    }
    for _ in 0..extra {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v && c[(u, v)].is_zero() {
            link(&mut c, u, v, rng);
        }
    }
    c.normalize_rows()
}
