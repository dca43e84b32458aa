//! Brute-force enumeration of small gadgets: one agent (node 0) plus three or
//! four private states, filtered by connectivity, aperiodicity and
//! unobservability from the agent's own output.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exactla::{int, ratio, unit_vector, Matrix, Rational, RationalMatrix};
use crate::netgraph::Digraph;
use crate::privacy::observable_subspace;

/// Number of random parameterizations tried per candidate.
pub const DEFAULT_TRIALS: usize = 20;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// How edge weights are drawn when testing observability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightRegime {
    /// Independent weights `k/101`, `k` uniform in `1..=97`, rows left unnormalized.
    Random,
    /// Row-normalized 0/1 structure. A single deterministic assignment.
    UniformWalk,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterResults {
    pub strongly_connected: bool,
    pub aperiodic: bool,
    pub unobservable_from_node1: bool,
    pub privacy_parameterizable: bool,
    /// Gadget nodes whose basis vector escaped the observable subspace in the
    /// first trial where any did.
    pub protected_coordinates: Vec<usize>,
}

impl FilterResults {
    pub fn all_pass(&self) -> bool {
        self.strongly_connected && self.aperiodic && self.unobservable_from_node1 && self.privacy_parameterizable
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GadgetCandidate {
    #[serde(rename = "nodes")]
    pub node_count: usize,
    /// Directed pairs `(u, v)`: information flows from `u` to `v`.
    pub edges: Vec<(usize, usize)>,
    /// Minimal adjacency bitstring over relabelings fixing node 0.
    pub canonical_form: String,
    /// Minimal adjacency bitstring over all relabelings.
    pub shape_form: String,
    pub filter_results: FilterResults,
}

fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, first);
            out.push(tail);
        }
    }
    out
}

/// Relabelings `p` (node `u` becomes `p[u]`); with `fix0` node 0 stays put.
pub fn relabelings(n: usize, fix0: bool) -> Vec<Vec<usize>> {
    if fix0 {
        let rest: Vec<usize> = (1..n).collect();
        permutations(&rest).into_iter().map(|p| std::iter::once(0).chain(p).collect()).collect()
    } else {
        permutations(&(0..n).collect::<Vec<_>>())
    }
}

/// Adjacency bits in `ordered_pairs` order, first pair most significant.
fn bits(n: usize, edges: &[(usize, usize)], perm: &[usize]) -> u64 {
    let pairs = ordered_pairs(n);
    let mut present = vec![false; n * n];
    for &(u, v) in edges {
        present[perm[u] * n + perm[v]] = true;
    }
    pairs.iter().fold(0, |acc, &(u, v)| (acc << 1) | present[u * n + v] as u64)
}

fn render(n: usize, word: u64) -> String {
    let len = n * (n - 1);
    format!("{word:0len$b}")
}

fn minimal_form(n: usize, edges: &[(usize, usize)], perms: &[Vec<usize>]) -> u64 {
    perms.iter().map(|p| bits(n, edges, p)).min().expect("identity is a relabeling")
}

pub fn canonical_form(n: usize, edges: &[(usize, usize)]) -> String {
    render(n, minimal_form(n, edges, &relabelings(n, true)))
}

pub fn shape_form(n: usize, edges: &[(usize, usize)]) -> String {
    render(n, minimal_form(n, edges, &relabelings(n, false)))
}

/// A relabeling mapping `a` onto `b`, if one exists.
pub fn find_isomorphism(n: usize, a: &[(usize, usize)], b: &[(usize, usize)], fix0: bool) -> Option<Vec<usize>> {
    let target = bits(n, b, &(0..n).collect::<Vec<_>>());
    relabelings(n, fix0).into_iter().find(|p| bits(n, a, p) == target)
}

/// Undirected pairs expanded to both directions.
pub fn bidirect(edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = edges.iter().flat_map(|&(u, v)| [(u, v), (v, u)]).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Dynamics matrix with `A[v][u] = w(u -> v)`.
fn weighted(n: usize, edges: &[(usize, usize)], mut weight: impl FnMut() -> Rational) -> RationalMatrix {
    let mut a = RationalMatrix::zeros(n, n);
    for &(u, v) in edges {
        a[(v, u)] = weight();
    }
    a
}

fn parameterization(n: usize, edges: &[(usize, usize)], regime: WeightRegime, rng: &mut ChaCha8Rng) -> RationalMatrix {
    match regime {
        WeightRegime::Random => weighted(n, edges, || ratio(rng.gen_range(1..=97), 101)),
        WeightRegime::UniformWalk => weighted(n, edges, || int(1)).normalize_rows(),
    }
}

/// Gadget nodes whose basis vector lies outside the subspace observable from node 0.
fn unprotected_complement(a: &RationalMatrix) -> (bool, Vec<usize>) {
    let n = a.rows();
    let c = Matrix::from_rows(vec![unit_vector(n, 0)]).expect("one row");
    let basis = observable_subspace(a, &c).expect("shapes agree");
    let protected = (1..n).filter(|&k| !basis.contains(&unit_vector(n, k))).collect();
    (basis.is_full(), protected)
}

/// Re-evaluates every filter on fresh parameterizations drawn from `seed`.
pub fn verify_catalog_entry(c: &GadgetCandidate, trials: usize, seed: u64, regime: WeightRegime) -> FilterResults {
    evaluate(c.node_count, &c.edges, trials, seed, regime)
}

fn evaluate(n: usize, edges: &[(usize, usize)], trials: usize, seed: u64, regime: WeightRegime) -> FilterResults {
    let g = Digraph::from_pairs(n, edges.iter().copied());
    let strongly_connected = g.is_strongly_connected();
    let aperiodic = strongly_connected && g.is_aperiodic();
    let mut results = FilterResults {
        strongly_connected,
        aperiodic,
        unobservable_from_node1: false,
        privacy_parameterizable: false,
        protected_coordinates: Vec::new(),
    };
    if !strongly_connected {
        return results;
    }
    let trials = match regime {
        WeightRegime::Random => trials.max(1),
        WeightRegime::UniformWalk => 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut every_unobservable = true;
    for _ in 0..trials {
        let a = parameterization(n, edges, regime, &mut rng);
        let (observable, protected) = unprotected_complement(&a);
        every_unobservable &= !observable;
        if !protected.is_empty() && !results.privacy_parameterizable {
            results.privacy_parameterizable = true;
            results.protected_coordinates = protected;
        }
    }
    results.unobservable_from_node1 = every_unobservable;
    results
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogOptions {
    pub trials: usize,
    pub seed: u64,
    pub regime: WeightRegime,
}

impl CatalogOptions {
    pub fn three_aug() -> Self {
        Self { trials: DEFAULT_TRIALS, seed: DEFAULT_SEED, regime: WeightRegime::Random }
    }

    pub fn four_aug() -> Self {
        Self { trials: DEFAULT_TRIALS, seed: DEFAULT_SEED, regime: WeightRegime::UniformWalk }
    }
}

/// Every passing candidate up to relabelings fixing node 0.
pub fn enumerate_fixed(n: usize, bidirected: bool, opts: CatalogOptions) -> Vec<GadgetCandidate> {
    let fixed = relabelings(n, true);
    let free = relabelings(n, false);
    let pool: Vec<(usize, usize)> = if bidirected {
        ordered_pairs(n).into_iter().filter(|(u, v)| u < v).collect()
    } else {
        ordered_pairs(n)
    };
    let mut classes: BTreeMap<u64, Vec<(usize, usize)>> = BTreeMap::new();
    for mask in 0u64..(1 << pool.len()) {
        let chosen: Vec<(usize, usize)> = (0..pool.len()).filter(|&k| mask >> k & 1 == 1).map(|k| pool[k]).collect();
        let edges = if bidirected { bidirect(&chosen) } else { chosen };
        let g = Digraph::from_pairs(n, edges.iter().copied());
        if !g.is_strongly_connected() || !g.is_aperiodic() {
            continue;
        }
        classes.entry(minimal_form(n, &edges, &fixed)).or_insert(edges);
    }
    classes
        .into_iter()
        .filter_map(|(form, edges)| {
            let filter_results = evaluate(n, &edges, opts.trials, opts.seed, opts.regime);
            filter_results.all_pass().then(|| GadgetCandidate {
                node_count: n,
                canonical_form: render(n, form),
                shape_form: render(n, minimal_form(n, &edges, &free)),
                edges: canonical_edges(n, &edges, &fixed, form),
                filter_results,
            })
        })
        .collect()
}

/// Edge list of the relabeling that attains `form`.
fn canonical_edges(n: usize, edges: &[(usize, usize)], perms: &[Vec<usize>], form: u64) -> Vec<(usize, usize)> {
    let p = perms.iter().find(|p| bits(n, edges, p) == form).expect("form attained");
    let mut out: Vec<(usize, usize)> = edges.iter().map(|&(u, v)| (p[u], p[v])).collect();
    out.sort_unstable();
    out
}

/// Collapses node-0-fixed classes to full isomorphism classes, keeping the
/// smallest node-0-fixed form as representative. Ordered by shape form.
pub fn dedup_by_shape(fixed: Vec<GadgetCandidate>) -> Vec<GadgetCandidate> {
    let mut by_shape: BTreeMap<String, GadgetCandidate> = BTreeMap::new();
    for c in fixed {
        match by_shape.get(&c.shape_form) {
            Some(kept) if kept.canonical_form <= c.canonical_form => {}
            _ => {
                by_shape.insert(c.shape_form.clone(), c);
            }
        }
    }
    by_shape.into_values().collect()
}

/// Three-state gadgets on directed four-node graphs.
pub fn enumerate_3aug() -> Vec<GadgetCandidate> {
    dedup_by_shape(enumerate_fixed(4, false, CatalogOptions::three_aug()))
}

/// Four-state gadgets on bidirected five-node graphs.
pub fn enumerate_4aug_bidirected() -> Vec<GadgetCandidate> {
    dedup_by_shape(enumerate_fixed(5, true, CatalogOptions::four_aug()))
}

pub fn catalog_json(entries: &[GadgetCandidate]) -> String {
    serde_json::to_string_pretty(entries).expect("catalog serializes")
}

/// Shape forms of a hand-encoded list, for one-to-one comparison.
pub fn shape_set(n: usize, figures: &[&[(usize, usize)]], bidirected: bool) -> Vec<String> {
    let mut out: Vec<String> = figures
        .iter()
        .map(|e| {
            let edges = if bidirected { bidirect(e) } else { e.to_vec() };
            shape_form(n, &edges)
        })
        .collect();
    out.sort();
    out
}
