//! Network augmentation: every agent gets a private gadget of 2, 3 or 4 extra
//! states whose local dynamics hide its initial value from observers while the
//! network still averages correctly.
//!
//! Index layout: original agents occupy `0..N`; agent `i`'s gadget occupies
//! `N + d*i .. N + d*(i+1)` where `d` is the per-agent gadget size.

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exactla::{
    int, left_eigenvector_unit, ratio, rationalize, serde_rational_vec_opt, to_f64, LinalgError,
    Matrix, Rational, RationalMatrix, RationalVector,
};
use crate::netgraph::{
    detailed_balance, is_row_stochastic, reversibility_vector, to_matrix, Digraph, GraphError,
    WeightedDigraph,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AugKind {
    /// No gadget: the raw network, kept for audits of the unprotected baseline.
    #[serde(rename = "plain")]
    Plain,
    #[serde(rename = "alg1_3n")]
    Alg1_3N,
    #[serde(rename = "alg2_4n")]
    Alg2_4N,
    #[serde(rename = "alg3_5n")]
    Alg3_5N,
}

impl AugKind {
    pub fn gadget_size(self) -> usize {
        match self {
            AugKind::Plain => 0,
            AugKind::Alg1_3N => 2,
            AugKind::Alg2_4N => 3,
            AugKind::Alg3_5N => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("A2: at least three agents (got {0})")]
    FewerThanThreeAgents(usize),
    #[error("A2: strongly connected")]
    NotStronglyConnected,
    #[error("duplicate gadget weights for agent {0}")]
    DuplicateGadgetWeights(usize),
    #[error("initial state has {got} entries, expected {expected}")]
    X0Length { expected: usize, got: usize },
    #[error("split for agent {agent} has {got} parts, expected {expected}")]
    SplitShape { agent: usize, expected: usize, got: usize },
    #[error("zero split sum for agent {0}")]
    ZeroSplitSum(usize),
    #[error("split not positive for agent {0}")]
    SplitNotPositive(usize),
    #[error("input not row-stochastic")]
    InputNotRowStochastic,
    #[error("input not reversible")]
    InputNotReversible,
    #[error("structure not bidirected")]
    NotBidirected,
    #[error("negative recovered alpha for agent {0}")]
    NegativeRecoveredAlpha(usize),
    #[error("system has no left eigenvector")]
    MissingLeftVector,
    #[error("printed state has {got} entries, expected {expected}")]
    PrintedLength { expected: usize, got: usize },
    #[error("invalid system: {0}")]
    Invalid(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl From<GraphError> for AugmentError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::NotStronglyConnected => AugmentError::NotStronglyConnected,
            GraphError::NotBidirected => AugmentError::NotBidirected,
            GraphError::NotReversible(..) => AugmentError::InputNotReversible,
            other => AugmentError::Invalid(other.to_string()),
        }
    }
}

/// An agent's private partition of its value across its gadget states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitChoice {
    #[serde(with = "split_serde")]
    pub parts: Vec<Vec<Rational>>,
}

mod split_serde {
    use super::*;
    use crate::exactla::{format_rational, parse_rational};
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<Vec<String>> = v.iter().map(|r| r.iter().map(format_rational).collect()).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let raw = Vec::<Vec<String>>::deserialize(d)?;
        raw.iter()
            .map(|r| r.iter().map(|s| parse_rational(s).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

impl SplitChoice {
    pub fn new(parts: Vec<Vec<Rational>>) -> Self {
        Self { parts }
    }

    /// Weights proportional to `1, 2, .., k` for every agent.
    pub fn default_for(n: usize, k: usize) -> Self {
        let row: Vec<Rational> = (1..=k as i64).map(int).collect();
        Self { parts: vec![row; n] }
    }

    fn checked(&self, n: usize, k: usize) -> Result<&Self, AugmentError> {
        if self.parts.len() != n {
            return Err(AugmentError::SplitShape { agent: self.parts.len().min(n), expected: k, got: 0 });
        }
        for (agent, p) in self.parts.iter().enumerate() {
            if p.len() != k {
                return Err(AugmentError::SplitShape { agent, expected: k, got: p.len() });
            }
            if p.iter().all(Zero::is_zero) {
                return Err(AugmentError::ZeroSplitSum(agent));
            }
            if p.iter().any(|x| !x.is_positive()) {
                return Err(AugmentError::SplitNotPositive(agent));
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSystem {
    pub kind: AugKind,
    #[serde(rename = "N")]
    pub n_original: usize,
    pub index_map: Vec<Vec<usize>>,
    pub ap: RationalMatrix,
    #[serde(with = "serde_rational_vec_opt", default)]
    pub v_left: Option<RationalVector>,
    #[serde(with = "serde_rational_vec_opt", default)]
    pub x_tilde0: Option<RationalVector>,
    pub original: WeightedDigraph,
}

fn layout(n: usize, d: usize) -> Vec<Vec<usize>> {
    (0..n).map(|i| (n + d * i..n + d * (i + 1)).collect()).collect()
}

impl AugmentedSystem {
    pub fn dim(&self) -> usize {
        self.ap.rows()
    }

    /// Agent `i`'s original state followed by its gadget states.
    pub fn agent_states(&self, i: usize) -> Vec<usize> {
        std::iter::once(i).chain(self.index_map[i].iter().copied()).collect()
    }

    /// Agent owning an augmented-state index.
    pub fn owner(&self, state: usize) -> usize {
        if state < self.n_original {
            return state;
        }
        let d = self.kind.gadget_size();
        (state - self.n_original) / d
    }

    /// Re-checks the structural invariants; used after deserialization.
    pub fn validate(&self) -> Result<(), AugmentError> {
        let n = self.n_original;
        let d = self.kind.gadget_size();
        let bad = |m: &str| Err(AugmentError::Invalid(m.to_string()));
        if self.ap.shape() != ((1 + d) * n, (1 + d) * n) {
            return bad("A^P dimension does not match kind and N");
        }
        if self.index_map != layout(n, d) {
            return bad("index map does not partition the gadget states");
        }
        if self.original.node_count() != n {
            return bad("original graph size differs from N");
        }
        for v in [&self.v_left, &self.x_tilde0].into_iter().flatten() {
            if v.len() != self.dim() {
                return bad("vector length differs from A^P dimension");
            }
        }
        if matches!(self.kind, AugKind::Alg2_4N | AugKind::Alg3_5N) && !is_row_stochastic(&self.ap) {
            return bad("A^P not row-stochastic");
        }
        if self.kind == AugKind::Alg3_5N {
            if let Some(v) = &self.v_left {
                if !detailed_balance(&self.ap, v) {
                    return bad("detailed balance fails for v_left");
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, AugmentError> {
        let sys: Self = serde_json::from_str(s).map_err(|e| AugmentError::Invalid(e.to_string()))?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn x_tilde0_f64(&self) -> Option<Vec<f64>> {
        self.x_tilde0.as_ref().map(|v| v.iter().map(to_f64).collect())
    }
}

fn require_a2(g: &WeightedDigraph) -> Result<(), AugmentError> {
    if g.node_count() < 3 {
        return Err(AugmentError::FewerThanThreeAgents(g.node_count()));
    }
    if !g.structure().is_strongly_connected() {
        return Err(AugmentError::NotStronglyConnected);
    }
    Ok(())
}

fn check_x0(x0: &[Rational], n: usize) -> Result<(), AugmentError> {
    if x0.len() != n {
        return Err(AugmentError::X0Length { expected: n, got: x0.len() });
    }
    Ok(())
}

/// The raw network as a system with no gadget.
pub fn plain(g: &WeightedDigraph, x0: Option<&[Rational]>) -> Result<AugmentedSystem, AugmentError> {
    let n = g.node_count();
    if let Some(x0) = x0 {
        check_x0(x0, n)?;
    }
    let ap = to_matrix(g);
    Ok(AugmentedSystem {
        kind: AugKind::Plain,
        n_original: n,
        index_map: vec![Vec::new(); n],
        v_left: left_eigenvector_unit(&ap).ok(),
        ap,
        x_tilde0: x0.map(<[Rational]>::to_vec),
        original: g.clone(),
    })
}

/// Gadget weights for one agent: `r` into the agent, `l` out to the gadget.
#[derive(Debug, Clone, PartialEq)]
pub struct Alg1Params {
    pub r: [Rational; 2],
    pub l: [Rational; 2],
}

impl Alg1Params {
    /// Numerators uniform in `1..=97` over denominator 101; the two `r` entries differ.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, agent: usize) -> Result<Self, AugmentError> {
        let draw = |rng: &mut R| ratio(rng.gen_range(1..=97), 101);
        for _ in 0..16 {
            let (a, b) = (draw(rng), draw(rng));
            if a != b {
                return Ok(Self { r: [a, b], l: [draw(rng), draw(rng)] });
            }
        }
        Err(AugmentError::DuplicateGadgetWeights(agent))
    }
}

/// Block matrix `[[A, R], [L, 0]]`: agent `i` hears its two gadget states,
/// each gadget state hears only agent `i`.
pub fn alg1_matrix(a: &RationalMatrix, params: &[Alg1Params]) -> RationalMatrix {
    let n = a.rows();
    assert_eq!(params.len(), n, "one parameter set per agent");
    let mut ap = RationalMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in 0..n {
            ap[(i, j)] = a[(i, j)].clone();
        }
        let (g1, g2) = (n + 2 * i, n + 2 * i + 1);
        ap[(i, g1)] = params[i].r[0].clone();
        ap[(i, g2)] = params[i].r[1].clone();
        ap[(g1, i)] = params[i].l[0].clone();
        ap[(g2, i)] = params[i].l[1].clone();
    }
    ap
}

/// Two-leaf gadget per agent. No A2 check, so the two-agent periodic case can be built.
pub fn build_alg1_unchecked<R: Rng + ?Sized>(
    g: &WeightedDigraph,
    x0: Option<&[Rational]>,
    rng: &mut R,
    stochastic: bool,
) -> Result<AugmentedSystem, AugmentError> {
    let n = g.node_count();
    if let Some(x0) = x0 {
        check_x0(x0, n)?;
    }
    let params = (0..n).map(|i| Alg1Params::sample(rng, i)).collect::<Result<Vec<_>, _>>()?;
    let mut ap = alg1_matrix(&to_matrix(g), &params);
    if stochastic {
        ap = ap.normalize_rows();
    }
    let x_tilde0 = x0.map(|x| {
        let mut v = x.to_vec();
        v.resize(3 * n, Rational::zero());
        v
    });
    Ok(AugmentedSystem {
        kind: AugKind::Alg1_3N,
        n_original: n,
        index_map: layout(n, 2),
        ap,
        v_left: None,
        x_tilde0,
        original: g.clone(),
    })
}

pub fn build_alg1<R: Rng + ?Sized>(
    g: &WeightedDigraph,
    x0: Option<&[Rational]>,
    rng: &mut R,
    stochastic: bool,
) -> Result<AugmentedSystem, AugmentError> {
    require_a2(g)?;
    build_alg1_unchecked(g, x0, rng, stochastic)
}

/// Unnormalized weights of the 4N construction before row normalization.
/// Original block uses the 0/1 structure of A; gadget `g1 <-> i`, `i -> g2 -> g3 -> i`.
fn alg2_raw(a: &RationalMatrix) -> RationalMatrix {
    let n = a.rows();
    let mut u = RationalMatrix::zeros(4 * n, 4 * n);
    for i in 0..n {
        for j in 0..n {
            if a.nonzero(i, j) {
                u[(i, j)] = Rational::one();
            }
        }
        let g = n + 3 * i;
        u[(i, g)] = int(2);
        u[(i, g + 2)] = int(1);
        u[(g, i)] = int(1);
        u[(g + 1, i)] = int(1);
        u[(g + 2, g + 1)] = int(1);
    }
    u
}

pub fn build_alg2(
    g: &WeightedDigraph,
    x0: &[Rational],
    split: Option<&SplitChoice>,
) -> Result<AugmentedSystem, AugmentError> {
    require_a2(g)?;
    let n = g.node_count();
    check_x0(x0, n)?;
    let default = SplitChoice::default_for(n, 3);
    let split = split.unwrap_or(&default).checked(n, 3)?;

    let ap = alg2_raw(&to_matrix(g)).normalize_rows();
    let v = left_eigenvector_unit(&ap)?;
    let v_sum = v.iter().fold(Rational::zero(), |s, x| s + x);

    let mut xt = vec![Rational::zero(); 4 * n];
    let four_n = int(4 * n as i64);
    for i in 0..n {
        let parts = &split.parts[i];
        let sum = parts.iter().fold(Rational::zero(), |s, x| s + x);
        let scale = int(4) * &x0[i] / &sum;
        for (k, p) in parts.iter().enumerate() {
            let j = n + 3 * i + k;
            xt[j] = &scale * p * &v_sum / (&four_n * &v[j]);
        }
    }
    Ok(AugmentedSystem {
        kind: AugKind::Alg2_4N,
        n_original: n,
        index_map: layout(n, 3),
        ap,
        v_left: Some(v),
        x_tilde0: Some(xt),
        original: g.clone(),
    })
}

/// Per-agent weights into the gadget, then each gadget row (`g1..g4`).
struct Alg3Table;

impl Alg3Table {
    fn agent_row() -> [Rational; 4] {
        [ratio(1, 12), ratio(1, 8), ratio(1, 4), ratio(1, 24)]
    }

    /// `(to agent, to g1, to g2, to g3, to g4)` for each gadget row.
    fn gadget_rows() -> [[Rational; 5]; 4] {
        let z = Rational::zero;
        [
            [ratio(1, 11), z(), ratio(3, 22), ratio(1, 11), ratio(15, 22)],
            [ratio(1, 2), ratio(1, 2), z(), z(), z()],
            [ratio(3, 4), ratio(1, 4), z(), z(), z()],
            [ratio(1, 16), ratio(15, 16), z(), z(), z()],
        ]
    }

    /// `s_gk / s_i` forced by detailed balance on the star edges.
    fn s_ratios() -> [Rational; 4] {
        [ratio(11, 12), ratio(1, 4), ratio(1, 3), ratio(2, 3)]
    }
}

fn require_alg3_input(a: &RationalMatrix) -> Result<(), AugmentError> {
    if !a.is_square() {
        return Err(AugmentError::Linalg(LinalgError::NotSquare(a.rows(), a.cols())));
    }
    if a.rows() < 3 {
        return Err(AugmentError::FewerThanThreeAgents(a.rows()));
    }
    if !is_row_stochastic(a) {
        return Err(AugmentError::InputNotRowStochastic);
    }
    reversibility_vector(a)?;
    Ok(())
}

/// 5N construction: original block halved, fixed four-state gadget per agent.
pub fn build_alg3(a: &RationalMatrix) -> Result<RationalMatrix, AugmentError> {
    require_alg3_input(a)?;
    let ap = alg3_matrix(a);
    if !is_row_stochastic(&ap) {
        return Err(AugmentError::Invalid("5N output not row-stochastic".into()));
    }
    Ok(ap)
}

fn alg3_matrix(a: &RationalMatrix) -> RationalMatrix {
    let n = a.rows();
    let half = ratio(1, 2);
    let mut ap = RationalMatrix::zeros(5 * n, 5 * n);
    let agent_row = Alg3Table::agent_row();
    let gadget_rows = Alg3Table::gadget_rows();
    for i in 0..n {
        for j in 0..n {
            if a.nonzero(i, j) {
                ap[(i, j)] = &a[(i, j)] * &half;
            }
        }
        let g = n + 4 * i;
        for (k, w) in agent_row.iter().enumerate() {
            ap[(i, g + k)] = w.clone();
        }
        for (k, row) in gadget_rows.iter().enumerate() {
            ap[(g + k, i)] = row[0].clone();
            for (m, w) in row[1..].iter().enumerate() {
                if !w.is_zero() {
                    ap[(g + k, g + m)] = w.clone();
                }
            }
        }
    }
    ap
}

/// Unnormalized `s` with `s_0 = 1`: BFS over original agents taking
/// `s_j = s_i A_ij / A_ji`, then the fixed gadget ratios.
pub fn propagate_s(ap: &RationalMatrix, n: usize) -> Result<RationalVector, AugmentError> {
    let mut s: Vec<Option<Rational>> = vec![None; ap.rows()];
    s[0] = Some(Rational::one());
    let mut frontier = std::collections::VecDeque::from([0]);
    while let Some(i) = frontier.pop_front() {
        let si = s[i].clone().expect("visited");
        for j in (0..n).filter(|&j| j != i && ap.nonzero(i, j)) {
            if s[j].is_none() {
                if !ap.nonzero(j, i) {
                    return Err(AugmentError::NotBidirected);
                }
                s[j] = Some(&si * &ap[(i, j)] / &ap[(j, i)]);
                frontier.push_back(j);
            }
        }
    }
    let ratios = Alg3Table::s_ratios();
    for i in 0..n {
        let si = s[i].clone().ok_or(AugmentError::NotStronglyConnected)?;
        for (k, r) in ratios.iter().enumerate() {
            s[n + 4 * i + k] = Some(&si * r);
        }
    }
    Ok(s.into_iter().map(|x| x.expect("assigned")).collect())
}

/// Full distributed-consensus solution on the 5N construction.
///
/// Each agent's split is rescaled so its parts sum to `x_i[0] / N`; gadget
/// state `k` then starts at `alpha_k / v_k`. Negative `x_i[0]` flips the sign
/// of every part.
pub fn solve_p1d(
    a: &RationalMatrix,
    x0: &[Rational],
    split: Option<&SplitChoice>,
) -> Result<AugmentedSystem, AugmentError> {
    let ap = build_alg3(a)?;
    let n = a.rows();
    check_x0(x0, n)?;
    let default = SplitChoice::default_for(n, 4);
    let split = split.unwrap_or(&default).checked(n, 4)?;

    let s = propagate_s(&ap, n)?;
    if !detailed_balance(&ap, &s) {
        return Err(AugmentError::InputNotReversible);
    }
    let z = s.iter().fold(Rational::zero(), |acc, x| acc + x);
    let v: RationalVector = s.iter().map(|x| x / &z).collect();

    let n_q = int(n as i64);
    let mut xt = vec![Rational::zero(); 5 * n];
    for i in 0..n {
        let parts = &split.parts[i];
        let sum = parts.iter().fold(Rational::zero(), |acc, x| acc + x);
        let target = &x0[i] / &n_q;
        for (k, p) in parts.iter().enumerate() {
            let j = n + 4 * i + k;
            let alpha = p * &target / &sum;
            xt[j] = alpha / &v[j];
        }
    }
    Ok(AugmentedSystem {
        kind: AugKind::Alg3_5N,
        n_original: n,
        index_map: layout(n, 4),
        ap,
        v_left: Some(v),
        x_tilde0: Some(xt),
        original: WeightedDigraph::from_matrix(a)?,
    })
}

/// Inverts the initial-state encoding of a built system from a printed float
/// state, yielding the split that reproduces it (denominators at most 10^7).
pub fn recover_split(system: &AugmentedSystem, printed: &[f64]) -> Result<SplitChoice, AugmentError> {
    let v = system.v_left.as_ref().ok_or(AugmentError::MissingLeftVector)?;
    if printed.len() != system.dim() {
        return Err(AugmentError::PrintedLength { expected: system.dim(), got: printed.len() });
    }
    let mut parts = Vec::with_capacity(system.n_original);
    for (i, states) in system.index_map.iter().enumerate() {
        let mut row = Vec::with_capacity(states.len());
        for &k in states {
            let alpha = to_f64(&v[k]) * printed[k];
            if alpha <= 0.0 {
                return Err(AugmentError::NegativeRecoveredAlpha(i));
            }
            row.push(rationalize(alpha, 10_000_000).map_err(|e| AugmentError::Invalid(e.to_string()))?);
        }
        parts.push(row);
    }
    Ok(SplitChoice { parts })
}

/// Structural view of `A^P`, for connectivity and period checks.
pub fn augmented_structure(system: &AugmentedSystem) -> Digraph {
    Digraph::of_matrix(&system.ap)
}

/// `Σ v_k x_k` over a float state, the value the network converges to.
pub fn weighted_value(v: &[Rational], x: &[f64]) -> f64 {
    v.iter().zip(x).map(|(a, b)| to_f64(a) * b).sum()
}

/// Float copy of a rational matrix, convenience for simulation callers.
pub fn float_ap(system: &AugmentedSystem) -> Matrix<f64> {
    system.ap.to_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::dot;
    use crate::netgraph::{reversibility_vector, Edge};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cycle3() -> WeightedDigraph {
        WeightedDigraph::bidirected(3, &[(0, 1), (1, 2), (2, 0)], ratio(1, 2)).unwrap()
    }

    fn x0() -> Vec<Rational> {
        vec![ratio(1, 2), ratio(1, 3), ratio(1, 5)]
    }

    #[test]
    fn alg1_rejects_two_agents() {
        let g = WeightedDigraph::bidirected(2, &[(0, 1)], int(1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(build_alg1(&g, None, &mut rng, false), Err(AugmentError::FewerThanThreeAgents(2)));
        assert!(build_alg1_unchecked(&g, None, &mut rng, false).is_ok());
    }

    #[test]
    fn alg1_block_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = build_alg1(&cycle3(), None, &mut rng, false).unwrap();
        let a = to_matrix(&cycle3());
        assert_eq!(sys.ap.submatrix(0..3, 0..3), a);
        assert_eq!(sys.ap.submatrix(3..9, 3..9), RationalMatrix::zeros(6, 6));
        for i in 0..3 {
            let [g1, g2] = [sys.index_map[i][0], sys.index_map[i][1]];
            assert_ne!(sys.ap[(i, g1)], sys.ap[(i, g2)]);
            for c in 0..9 {
                assert_eq!(sys.ap.nonzero(g1, c), c == i);
            }
        }
        assert!(sys.validate().is_ok());
    }

    #[test]
    fn alg1_rejects_disconnected_input() {
        let g = WeightedDigraph::new(3, vec![Edge { src: 0, dst: 1, w: int(1) }]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(build_alg1(&g, None, &mut rng, false), Err(AugmentError::NotStronglyConnected));
    }

    #[test]
    fn alg2_consensus_identity_exact() {
        let sys = build_alg2(&cycle3(), &x0(), None).unwrap();
        let v = sys.v_left.as_ref().unwrap();
        let xt = sys.x_tilde0.as_ref().unwrap();
        assert_eq!(dot(v, xt), ratio(31, 90));
        assert!(is_row_stochastic(&sys.ap));
        assert_eq!(sys.ap.vec_mul(v).unwrap(), *v);
    }

    #[test]
    fn alg3_rejects_bad_inputs() {
        let mut a = to_matrix(&cycle3());
        a[(0, 1)] = ratio(1, 4);
        assert_eq!(build_alg3(&a), Err(AugmentError::InputNotRowStochastic));
        let biased = Matrix::from_rows(vec![
            vec![int(0), ratio(2, 3), ratio(1, 3)],
            vec![ratio(1, 3), int(0), ratio(2, 3)],
            vec![ratio(2, 3), ratio(1, 3), int(0)],
        ])
        .unwrap();
        assert_eq!(build_alg3(&biased), Err(AugmentError::InputNotReversible));
    }

    #[test]
    fn alg3_s_matches_reversibility_vector() {
        let a = to_matrix(&cycle3());
        let sys = solve_p1d(&a, &x0(), None).unwrap();
        assert_eq!(sys.v_left.clone().unwrap(), reversibility_vector(&sys.ap).unwrap());
    }

    #[test]
    fn equal_split_gives_exact_mean() {
        let a = to_matrix(&cycle3());
        let split = SplitChoice::new(vec![vec![int(1); 4]; 3]);
        let sys = solve_p1d(&a, &x0(), Some(&split)).unwrap();
        assert_eq!(dot(sys.v_left.as_ref().unwrap(), sys.x_tilde0.as_ref().unwrap()), ratio(31, 90));
    }

    #[test]
    fn negative_values_keep_mean() {
        let a = to_matrix(&cycle3());
        let x = vec![ratio(-1, 2), int(0), ratio(7, 3)];
        let sys = solve_p1d(&a, &x, None).unwrap();
        let mean = x.iter().fold(Rational::zero(), |s, q| s + q) / int(3);
        assert_eq!(dot(sys.v_left.as_ref().unwrap(), sys.x_tilde0.as_ref().unwrap()), mean);
    }

    #[test]
    fn split_validation() {
        let a = to_matrix(&cycle3());
        let bad = SplitChoice::new(vec![vec![int(1), int(-1), int(1), int(1)]; 3]);
        assert_eq!(solve_p1d(&a, &x0(), Some(&bad)), Err(AugmentError::SplitNotPositive(0)));
        let zero = SplitChoice::new(vec![vec![int(0); 3]; 3]);
        assert_eq!(build_alg2(&cycle3(), &x0(), Some(&zero)), Err(AugmentError::ZeroSplitSum(0)));
        let short = SplitChoice::new(vec![vec![int(1); 2]; 3]);
        assert!(matches!(build_alg2(&cycle3(), &x0(), Some(&short)), Err(AugmentError::SplitShape { .. })));
    }

    #[test]
    fn recover_split_rejects_zero_block() {
        let a = to_matrix(&cycle3());
        let sys = solve_p1d(&a, &x0(), None).unwrap();
        let printed = vec![0.0; 15];
        assert_eq!(recover_split(&sys, &printed), Err(AugmentError::NegativeRecoveredAlpha(0)));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let a = to_matrix(&cycle3());
        let sys = solve_p1d(&a, &x0(), None).unwrap();
        let back = AugmentedSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(back, sys);
        let mut broken = sys.clone();
        broken.index_map.swap(0, 1);
        assert!(AugmentedSystem::from_json(&broken.to_json()).is_err());
    }

    #[test]
    fn owner_maps_gadget_states() {
        let a = to_matrix(&cycle3());
        let sys = solve_p1d(&a, &x0(), None).unwrap();
        assert_eq!(sys.owner(2), 2);
        assert_eq!(sys.owner(3), 0);
        assert_eq!(sys.owner(14), 2);
        assert_eq!(sys.agent_states(1), vec![1, 7, 8, 9, 10]);
    }
}
