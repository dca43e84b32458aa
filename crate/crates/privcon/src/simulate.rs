//! Consensus dynamics: centralized iteration `x[k+1] = A x[k]`, a synchronous
//! message-passing simulator where agents broadcast one scalar per round, and
//! the distributed computation of the stationary vector `s`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_traits::Zero;
use serde::Serialize;

use crate::augment::AugmentedSystem;
use crate::exactla::{dot, Matrix, Rational, RationalMatrix, RationalVector, Scalar};

/// Default cap on exported trace rows.
pub const MAX_EXPORT_ROWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimulateError {
    #[error("initial state has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("tolerance must be positive")]
    NonPositiveTolerance,
    #[error("system has no initial state")]
    MissingInitialState,
    #[error("agent {agent} would read state {state}, which it neither owns nor hears")]
    Locality { agent: usize, state: usize },
    #[error("detailed balance violated between {0} and {1}")]
    DetailedBalance(usize, usize),
    #[error("network not bidirected between {0} and {1}")]
    NotBidirected(usize, usize),
    #[error("agent {0} never received an offer")]
    Unreached(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationTrace {
    /// `states[k]` is `x[k]`; `states[0]` is the initial state.
    pub states: Vec<Vec<f64>>,
    pub converged: bool,
    pub rounds: usize,
    pub final_spread: f64,
    pub consensus_value: Option<f64>,
}

pub fn spread(x: &[f64]) -> f64 {
    let (lo, hi) = x.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if x.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

impl SimulationTrace {
    /// Iterates `step` from `x0` until the spread drops to `tol` or `max_rounds` pass.
    fn drive(x0: Vec<f64>, tol: f64, max_rounds: usize, mut step: impl FnMut(&[f64]) -> Vec<f64>) -> Self {
        let mut states = vec![x0];
        loop {
            let last = states.last().expect("nonempty");
            let s = spread(last);
            if s <= tol {
                let value = mean(last);
                return Self { rounds: states.len() - 1, converged: true, final_spread: s, consensus_value: Some(value), states };
            }
            if states.len() > max_rounds {
                return Self { rounds: states.len() - 1, converged: false, final_spread: s, consensus_value: None, states };
            }
            let next = step(last);
            states.push(next);
        }
    }

    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trace holds the initial state")
    }

    /// Row stride keeping an export within `max_rows` rows.
    pub fn default_stride(&self, max_rows: usize) -> usize {
        self.states.len().div_ceil(max_rows.max(1)).max(1)
    }

    /// Rounds selected by `stride`, always including the final one.
    pub fn strided_rounds(&self, stride: usize) -> Vec<usize> {
        let mut ks: Vec<usize> = (0..self.states.len()).step_by(stride.max(1)).collect();
        if ks.last() != Some(&self.rounds) {
            ks.push(self.rounds);
        }
        ks
    }

    pub fn to_csv(&self, stride: usize) -> String {
        let dim = self.states[0].len();
        let mut out = String::from("round");
        for j in 0..dim {
            write!(out, ",state_{j}").expect("string write");
        }
        out.push('\n');
        for k in self.strided_rounds(stride) {
            write!(out, "{k}").expect("string write");
            for v in &self.states[k] {
                write!(out, ",{v:e}").expect("string write");
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, stride: usize) -> String {
        #[derive(Serialize)]
        struct Export<'a> {
            converged: bool,
            rounds: usize,
            final_spread: f64,
            consensus_value: Option<f64>,
            stride: usize,
            round_index: Vec<usize>,
            states: Vec<&'a [f64]>,
        }
        let round_index = self.strided_rounds(stride);
        let states = round_index.iter().map(|&k| self.states[k].as_slice()).collect();
        let export = Export {
            converged: self.converged,
            rounds: self.rounds,
            final_spread: self.final_spread,
            consensus_value: self.consensus_value,
            stride,
            round_index,
            states,
        };
        serde_json::to_string_pretty(&export).expect("trace serializes")
    }

    /// Non-converged trace whose even and odd subsequences have each settled:
    /// the spread stays large while `x[k]` and `x[k-2]` agree within `tol`.
    pub fn period_two_suspected(&self, tol: f64) -> bool {
        if self.converged || self.states.len() < 3 {
            return false;
        }
        let k = self.rounds;
        let (a, b, c) = (&self.states[k], &self.states[k - 1], &self.states[k - 2]);
        let parity = max_abs_diff(a, c);
        let step = max_abs_diff(a, b);
        parity <= tol && step > 10.0 * tol.max(parity)
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_run<T>(a: &Matrix<T>, x0_len: usize, tol: f64) -> Result<(), SimulateError>
where
    T: Scalar,
{
    if tol.is_nan() || tol <= 0.0 {
        return Err(SimulateError::NonPositiveTolerance);
    }
    if a.cols() != x0_len || !a.is_square() {
        return Err(SimulateError::DimensionMismatch { expected: a.cols(), got: x0_len });
    }
    Ok(())
}

/// Centralized iteration in double precision. Rational inputs are converted once.
pub fn run_matrix<T: Scalar>(
    a: &Matrix<T>,
    x0: &[f64],
    tol: f64,
    max_rounds: usize,
) -> Result<SimulationTrace, SimulateError> {
    check_run(a, x0.len(), tol)?;
    let af = a.to_f64();
    Ok(SimulationTrace::drive(x0.to_vec(), tol, max_rounds, |x| af.mul_vec(x).expect("square")))
}

/// Exact iteration for `rounds` steps; the slow mode used for conservation checks.
pub fn iterate_exact<T: Scalar>(a: &Matrix<T>, x0: &[T], rounds: usize) -> Result<Vec<Vec<T>>, SimulateError> {
    if a.cols() != x0.len() || !a.is_square() {
        return Err(SimulateError::DimensionMismatch { expected: a.cols(), got: x0.len() });
    }
    let mut out = vec![x0.to_vec()];
    for _ in 0..rounds {
        let next = a.mul_vec(out.last().expect("nonempty")).expect("square");
        out.push(next);
    }
    Ok(out)
}

/// Where an agent finds the value for one column of its rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Source {
    Own(usize),
    Heard(usize),
}

/// One agent of the broadcast protocol. Holds its original state and its
/// gadget; reads only its own previous values and its in-neighbours' broadcasts.
#[derive(Debug, Clone)]
pub struct AgentMachine {
    pub id: usize,
    /// Global indices of the owned states, original state first.
    pub own_states: Vec<usize>,
    pub values: Vec<f64>,
    /// Agents whose broadcasts this agent receives.
    pub hears: BTreeSet<usize>,
    /// Per owned state: nonzero `(weight, source)` in ascending global column order.
    rows: Vec<Vec<(f64, Source)>>,
}

impl AgentMachine {
    fn new(system: &AugmentedSystem, af: &Matrix<f64>, id: usize, x0: &[f64]) -> Result<Self, SimulateError> {
        let own_states = system.agent_states(id);
        let n = system.n_original;
        let structure = system.original.structure();
        let hears: BTreeSet<usize> = structure.in_neighbors(id).iter().copied().filter(|&j| j != id).collect();
        let local: BTreeMap<usize, usize> = own_states.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        let mut rows = Vec::with_capacity(own_states.len());
        for &r in &own_states {
            let mut row = Vec::new();
            for (c, &w) in af.row(r).iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let src = match local.get(&c) {
                    Some(&k) => Source::Own(k),
                    None if c < n && hears.contains(&c) => Source::Heard(c),
                    None => return Err(SimulateError::Locality { agent: id, state: c }),
                };
                row.push((w, src));
            }
            rows.push(row);
        }
        let values = own_states.iter().map(|&g| x0[g]).collect();
        Ok(Self { id, own_states, values, hears, rows })
    }

    /// The single scalar this agent shares per round.
    pub fn broadcast(&self) -> f64 {
        self.values[0]
    }

    /// Synchronous update from the previous round's broadcasts.
    fn step(&self, inbox: &Inbox) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                row.iter().fold(0.0, |acc, &(w, src)| {
                    let x = match src {
                        Source::Own(k) => self.values[k],
                        Source::Heard(j) => inbox.read(self, j),
                    };
                    if x == 0.0 {
                        acc
                    } else {
                        acc + w * x
                    }
                })
            })
            .collect()
    }
}

/// One round's broadcasts. Reading from an agent that is not an in-neighbour panics.
struct Inbox<'a> {
    broadcasts: &'a [f64],
}

impl Inbox<'_> {
    fn read(&self, reader: &AgentMachine, from: usize) -> f64 {
        assert!(reader.hears.contains(&from), "agent {} read a broadcast from non-neighbour {}", reader.id, from);
        self.broadcasts[from]
    }
}

/// Builds the agent machines for a system with an initial state.
pub fn agent_machines(system: &AugmentedSystem, x0: &[f64]) -> Result<Vec<AgentMachine>, SimulateError> {
    if x0.len() != system.dim() {
        return Err(SimulateError::DimensionMismatch { expected: system.dim(), got: x0.len() });
    }
    let af = system.ap.to_f64();
    (0..system.n_original).map(|i| AgentMachine::new(system, &af, i, x0)).collect()
}

/// Message-passing run from the system's encoded initial state.
pub fn run_agents(system: &AugmentedSystem, tol: f64, max_rounds: usize) -> Result<SimulationTrace, SimulateError> {
    let x0 = system.x_tilde0_f64().ok_or(SimulateError::MissingInitialState)?;
    run_agents_from(system, &x0, tol, max_rounds)
}

/// As [`run_agents`] from an explicit initial state.
pub fn run_agents_from(
    system: &AugmentedSystem,
    x0: &[f64],
    tol: f64,
    max_rounds: usize,
) -> Result<SimulationTrace, SimulateError> {
    check_run(&system.ap, x0.len(), tol)?;
    let mut agents = agent_machines(system, x0)?;
    let dim = system.dim();
    Ok(SimulationTrace::drive(x0.to_vec(), tol, max_rounds, |_| {
        let broadcasts: Vec<f64> = agents.iter().map(AgentMachine::broadcast).collect();
        let inbox = Inbox { broadcasts: &broadcasts };
        // double buffer: every update reads the previous round only
        let updates: Vec<Vec<f64>> = agents.iter().map(|a| a.step(&inbox)).collect();
        let mut x = vec![0.0; dim];
        for (agent, new) in agents.iter_mut().zip(updates) {
            for (&g, &v) in agent.own_states.iter().zip(&new) {
                x[g] = v;
            }
            agent.values = new;
        }
        x
    }))
}

/// Rounds to settle within each tolerance, plus the final worst error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStats {
    pub target: f64,
    /// `(eps, k)`: from round `k` on every coordinate stays within `eps` of target.
    pub rounds_to: Vec<(f64, Option<usize>)>,
    /// Largest coordinate deviation from target at the last recorded round.
    pub max_abs_error: f64,
}

pub const STAT_EPSILONS: [f64; 3] = [1e-3, 1e-6, 1e-9];

pub fn convergence_stats(trace: &SimulationTrace, target: f64) -> ConvergenceStats {
    let err: Vec<f64> = trace.states.iter().map(|x| x.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)).collect();
    let rounds_to = STAT_EPSILONS
        .iter()
        .map(|&eps| {
            // last round outside the band; settled from the one after
            match err.iter().rposition(|&e| e > eps) {
                None => (eps, Some(0)),
                Some(k) if k + 1 < err.len() => (eps, Some(k + 1)),
                Some(_) => (eps, None),
            }
        })
        .collect();
    ConvergenceStats { target, rounds_to, max_abs_error: *err.last().expect("nonempty trace") }
}

/// Messages exchanged by [`run_distributed_s`], for inspection.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ProtocolLog {
    pub flood_rounds: usize,
    pub offers: usize,
    pub convergecast_messages: usize,
    pub broadcast_messages: usize,
}

/// Distributed computation of the normalized stationary vector of a reversible `A^P`.
///
/// Agent 0 starts with `s = 1`. Every agent that learns its value sends
/// `s_i A_ij` to each neighbour `j`, which divides by its own `A_ji`; the
/// lowest-id sender of the first round with offers becomes the parent and all
/// later offers must agree. Gadget values are fixed locally the same way.
/// Subtree totals then flow up the parent tree and `Z` flows back down.
pub fn run_distributed_s(ap: &RationalMatrix, n: usize) -> Result<RationalVector, SimulateError> {
    run_distributed_s_logged(ap, n).map(|(s, _)| s)
}

pub fn run_distributed_s_logged(ap: &RationalMatrix, n: usize) -> Result<(RationalVector, ProtocolLog), SimulateError> {
    let dim = ap.rows();
    if !ap.is_square() || n == 0 || n > dim || !(dim - n).is_multiple_of(n) {
        return Err(SimulateError::DimensionMismatch { expected: dim, got: n });
    }
    let d = (dim - n) / n;
    let own = |i: usize| -> Vec<usize> { std::iter::once(i).chain(n + d * i..n + d * (i + 1)).collect() };
    let neighbours = |i: usize| -> Vec<usize> { (0..n).filter(|&j| j != i && ap.nonzero(i, j)).collect() };
    for i in 0..n {
        for j in neighbours(i) {
            if !ap.nonzero(j, i) {
                return Err(SimulateError::NotBidirected(i, j));
            }
        }
    }

    let mut log = ProtocolLog::default();
    let mut s: Vec<Option<Rational>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    s[0] = Some(Rational::from_integer(1.into()));
    let mut fresh = vec![0usize];
    while !fresh.is_empty() {
        log.flood_rounds += 1;
        // offers[j] = (sender, s_i * A_ij) in ascending sender order
        let mut offers: BTreeMap<usize, Vec<(usize, Rational)>> = BTreeMap::new();
        for &i in &fresh {
            let si = s[i].clone().expect("fresh agents are assigned");
            for j in neighbours(i) {
                log.offers += 1;
                offers.entry(j).or_default().push((i, &si * &ap[(i, j)]));
            }
        }
        fresh.clear();
        for (j, mut received) in offers {
            received.sort_by_key(|(from, _)| *from);
            for (from, value) in received {
                let candidate = value / &ap[(j, from)];
                match &s[j] {
                    None => {
                        s[j] = Some(candidate);
                        parent[j] = Some(from);
                        fresh.push(j);
                    }
                    Some(existing) if *existing != candidate => {
                        return Err(SimulateError::DetailedBalance(from, j));
                    }
                    Some(_) => {}
                }
            }
        }
    }
    let s: Vec<Rational> = s.into_iter().enumerate().map(|(i, v)| v.ok_or(SimulateError::Unreached(i))).collect::<Result<_, _>>()?;

    // local gadget values and each agent's own total
    let mut full = vec![Rational::zero(); dim];
    let mut local_total = vec![Rational::zero(); n];
    for i in 0..n {
        let states = own(i);
        let mut known: BTreeMap<usize, Rational> = BTreeMap::from([(i, s[i].clone())]);
        let mut queue = vec![i];
        while let Some(u) = queue.pop() {
            let su = known[&u].clone();
            for &w in &states {
                if w != u && ap.nonzero(u, w) {
                    if !ap.nonzero(w, u) {
                        return Err(SimulateError::NotBidirected(u, w));
                    }
                    let candidate = &su * &ap[(u, w)] / &ap[(w, u)];
                    match known.get(&w) {
                        None => {
                            known.insert(w, candidate);
                            queue.push(w);
                        }
                        Some(existing) if *existing != candidate => return Err(SimulateError::DetailedBalance(u, w)),
                        Some(_) => {}
                    }
                }
            }
        }
        for &g in &states {
            let v = known.get(&g).ok_or(SimulateError::Unreached(g))?;
            full[g] = v.clone();
            local_total[i] += v;
        }
    }

    // convergecast: a node reports once every child has reported
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (j, p) in parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(j);
        }
    }
    let mut pending: Vec<usize> = children.iter().map(Vec::len).collect();
    let mut subtotal = local_total;
    let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut z = None;
    while let Some(i) = ready.pop() {
        match parent[i] {
            Some(p) => {
                log.convergecast_messages += 1;
                let t = subtotal[i].clone();
                subtotal[p] += t;
                pending[p] -= 1;
                if pending[p] == 0 {
                    ready.push(p);
                }
            }
            None => z = Some(subtotal[i].clone()),
        }
    }
    let z = z.expect("root reports after all children");
    log.broadcast_messages = n - 1;
    Ok((full.into_iter().map(|x| x / &z).collect(), log))
}

/// `v · x` for each recorded round.
pub fn conserved_series(v: &[f64], trace: &SimulationTrace) -> Vec<f64> {
    trace.states.iter().map(|x| dot(v, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{build_alg1_unchecked, plain, solve_p1d};
    use crate::exactla::{ratio, to_f64};
    use crate::fixtures;
    use crate::netgraph::{reversibility_vector, to_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_never_moves() {
        let eye = Matrix::<f64>::identity(3);
        let t = run_matrix(&eye, &[1.0, 2.0, 3.0], 1e-9, 50).unwrap();
        assert!(!t.converged);
        assert_eq!(t.rounds, 50);
        assert!(t.states.iter().all(|x| x == &t.states[0]));
        let t = run_matrix(&eye, &[0.5; 3], 1e-9, 50).unwrap();
        assert!(t.converged && t.rounds == 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let eye = Matrix::<f64>::identity(3);
        assert_eq!(run_matrix(&eye, &[1.0], 1e-3, 5), Err(SimulateError::DimensionMismatch { expected: 3, got: 1 }));
        assert_eq!(run_matrix(&eye, &[1.0; 3], 0.0, 5), Err(SimulateError::NonPositiveTolerance));
    }

    #[test]
    fn triangle_averages() {
        let a = to_matrix(&fixtures::triangle());
        let x0: Vec<f64> = fixtures::triangle_x0().iter().map(to_f64).collect();
        let t = run_matrix(&a, &x0, 1e-9, 1000).unwrap();
        assert!(t.converged);
        assert!((t.consensus_value.unwrap() - 31.0 / 90.0).abs() < 1e-9);
        assert_eq!(t.rounds + 1, t.states.len());
    }

    #[test]
    fn first_agent_round_matches_matrix_product() {
        let sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
        let x0 = sys.x_tilde0_f64().unwrap();
        let t = run_agents(&sys, 1e-12, 1).unwrap();
        let expect = sys.ap.to_f64().mul_vec(&x0).unwrap();
        assert_eq!(t.states[1], expect);
    }

    #[test]
    fn agents_match_matrix_bitwise() {
        let sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
        let x0 = sys.x_tilde0_f64().unwrap();
        let m = run_matrix(&sys.ap, &x0, 1e-12, 300).unwrap();
        let a = run_agents(&sys, 1e-12, 300).unwrap();
        assert_eq!(m.states, a.states);
    }

    #[test]
    fn cross_agent_gadget_read_is_rejected() {
        let mut sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
        sys.ap[(0, 7)] = ratio(1, 100);
        assert_eq!(run_agents(&sys, 1e-9, 5).unwrap_err(), SimulateError::Locality { agent: 0, state: 7 });
    }

    #[test]
    fn period_two_detected_on_two_agents() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = build_alg1_unchecked(&fixtures::two_agents(), None, &mut rng, true).unwrap();
        let x0 = [0.9, 0.1, 0.3, 0.7, 0.2, 0.5];
        let t = run_matrix(&sys.ap, &x0, 1e-9, 10_000).unwrap();
        assert!(!t.converged);
        assert!(t.period_two_suspected(1e-9));
        let stats = convergence_stats(&t, mean(&x0));
        assert!(stats.rounds_to.iter().all(|(_, k)| k.is_none()));
    }

    #[test]
    fn stats_on_constant_trace() {
        let sys = plain(&fixtures::triangle(), None).unwrap();
        let t = run_matrix(&sys.ap, &[0.25; 3], 1e-9, 10).unwrap();
        let stats = convergence_stats(&t, 0.25);
        assert!(stats.rounds_to.iter().all(|(_, k)| *k == Some(0)));
        assert_eq!(stats.max_abs_error, 0.0);
    }

    #[test]
    fn distributed_s_matches_centralized() {
        let sys = solve_p1d(&to_matrix(&fixtures::triangle()), &fixtures::triangle_x0(), None).unwrap();
        let (s, log) = run_distributed_s_logged(&sys.ap, 3).unwrap();
        assert_eq!(s, fixtures::triangle_5n_s());
        assert_eq!(s, reversibility_vector(&sys.ap).unwrap());
        assert_eq!(log.convergecast_messages, 2);
        assert_eq!(run_distributed_s(&sys.ap, 3).unwrap(), s);
    }

    #[test]
    fn distributed_s_flags_inconsistent_cycle() {
        // directed-weight triangle: bidirected structure but no detailed balance
        let a = Matrix::from_rows(vec![
            vec![ratio(0, 1), ratio(1, 3), ratio(2, 3)],
            vec![ratio(2, 3), ratio(0, 1), ratio(1, 3)],
            vec![ratio(1, 3), ratio(2, 3), ratio(0, 1)],
        ])
        .unwrap();
        assert!(matches!(run_distributed_s(&a, 3), Err(SimulateError::DetailedBalance(..))));
    }

    #[test]
    fn export_is_strided_and_keeps_last_row() {
        let a = to_matrix(&fixtures::triangle());
        let t = run_matrix(&a, &[1.0, 0.0, 0.0], 1e-12, 100).unwrap();
        let csv = t.to_csv(10);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "round,state_0,state_1,state_2");
        assert!(lines.last().unwrap().starts_with(&format!("{},", t.rounds)));
        assert!(lines.len() <= t.states.len() / 10 + 3);
        let json: serde_json::Value = serde_json::from_str(&t.to_json(t.default_stride(5))).unwrap();
        assert!(json["states"].as_array().unwrap().len() <= 6);
    }
}
