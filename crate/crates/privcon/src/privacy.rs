//! Observability-based privacy: what linear functionals of the initial state an
//! observer can reconstruct from its output stream.
//!
//! A functional `w` is recoverable iff `w` lies in the row space of the Kalman
//! matrix `[C; CA; ...; CA^{n-1}]`. Decisions are exact; no eigenvalue is
//! ever computed.

use std::collections::BTreeSet;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::augment::AugmentedSystem;
use crate::exactla::{unit_vector, LinalgError, Matrix, Rational, RowBasis, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PrivacyError {
    #[error("observer {observer} out of range for {agents} agents")]
    ObserverOutOfRange { observer: usize, agents: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

fn check_pair<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>) -> Result<(), LinalgError> {
    if !a.is_square() {
        return Err(LinalgError::NotSquare(a.rows(), a.cols()));
    }
    if c.cols() != a.cols() {
        return Err(LinalgError::DimensionMismatch { op: "observer", left: c.shape(), right: a.shape() });
    }
    Ok(())
}

fn check_target<T: Scalar>(a: &Matrix<T>, target: &[T]) -> Result<(), LinalgError> {
    if target.len() != a.cols() {
        return Err(LinalgError::DimensionMismatch {
            op: "target",
            left: (a.rows(), a.cols()),
            right: (1, target.len()),
        });
    }
    Ok(())
}

/// `[C; lam*I - A]`.
pub fn pbh_matrix<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>, lam: &T) -> Result<Matrix<T>, LinalgError> {
    check_pair(a, c)?;
    let n = a.rows();
    let mut shifted = a.map(|x| -x.clone());
    for i in 0..n {
        shifted[(i, i)] = shifted[(i, i)].clone() + lam.clone();
    }
    c.vstack(&shifted)
}

/// `[C; CA; ...; CA^{n-1}]`, stacked in full.
pub fn kalman_matrix<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>) -> Result<Matrix<T>, LinalgError> {
    check_pair(a, c)?;
    let mut out = c.clone();
    let mut block = c.clone();
    for _ in 1..a.rows() {
        block = block.matmul(a)?;
        out = out.vstack(&block)?;
    }
    Ok(out)
}

/// Row space of the Kalman matrix, grown one power of `A` at a time until the
/// rank stops increasing. Same span as [`kalman_matrix`], far fewer rows.
pub fn observable_subspace<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>) -> Result<RowBasis<T>, LinalgError> {
    check_pair(a, c)?;
    let mut basis = RowBasis::new(a.cols());
    let mut frontier: Vec<Vec<T>> = Vec::new();
    for r in 0..c.rows() {
        if basis.insert(c.row(r)) {
            frontier.push(c.row(r).to_vec());
        }
    }
    while !frontier.is_empty() && !basis.is_full() {
        let mut next = Vec::new();
        for w in &frontier {
            let wa = a.vec_mul(w)?;
            if basis.insert(&wa) {
                next.push(wa);
            }
        }
        frontier = next;
    }
    Ok(basis)
}

/// Kalman rank test; equivalent to the PBH condition at every eigenvalue.
pub fn is_observable<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>) -> Result<bool, LinalgError> {
    Ok(observable_subspace(a, c)?.is_full())
}

pub fn can_recover<T: Scalar>(a: &Matrix<T>, c: &Matrix<T>, target: &[T]) -> Result<bool, LinalgError> {
    check_target(a, target)?;
    Ok(observable_subspace(a, c)?.contains(target))
}

/// Membership in the row space of the PBH matrix at a single `lam`.
pub fn can_recover_at<T: Scalar>(
    a: &Matrix<T>,
    c: &Matrix<T>,
    target: &[T],
    lam: &T,
) -> Result<bool, LinalgError> {
    check_target(a, target)?;
    let p = pbh_matrix(a, c, lam)?;
    Ok(RowBasis::from_matrix(&p).contains(target))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObserverMode {
    /// Own states plus the original states of agents it hears.
    Minimal,
    /// Own states plus every original agent's state.
    ProofStrength,
}

/// The augmented-state indices an observer (and its coalition) sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObserverSpec {
    pub observer: usize,
    pub coalition: Vec<usize>,
    pub mode: ObserverMode,
    pub observed: BTreeSet<usize>,
}

impl ObserverSpec {
    pub fn new(
        system: &AugmentedSystem,
        observer: usize,
        coalition: &[usize],
        mode: ObserverMode,
    ) -> Result<Self, PrivacyError> {
        let agents = system.n_original;
        for &m in std::iter::once(&observer).chain(coalition) {
            if m >= agents {
                return Err(PrivacyError::ObserverOutOfRange { observer: m, agents });
            }
        }
        let mut coalition: Vec<usize> = coalition.iter().copied().filter(|&m| m != observer).collect();
        coalition.sort_unstable();
        coalition.dedup();
        let mut observed = BTreeSet::new();
        for &m in std::iter::once(&observer).chain(&coalition) {
            observed.extend(system.agent_states(m));
            match mode {
                ObserverMode::Minimal => {
                    observed.extend((0..agents).filter(|&j| system.ap.nonzero(m, j)));
                }
                ObserverMode::ProofStrength => observed.extend(0..agents),
            }
        }
        Ok(Self { observer, coalition, mode, observed })
    }

    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.observer).chain(self.coalition.iter().copied())
    }

    pub fn output_matrix(&self, dim: usize) -> Matrix<Rational> {
        let idx: Vec<usize> = self.observed.iter().copied().collect();
        Matrix::selector(&idx, dim)
    }
}

/// Recoverability of one target agent's hidden quantities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetFlags {
    pub agent: usize,
    /// One flag per gadget state `e_k`.
    pub gadget_basis: Vec<bool>,
    /// `e_j + Σ e_k` over the gadget.
    pub plain_sum: bool,
    /// `e_j / v_j + Σ e_k / v_k`; absent without a left eigenvector.
    pub inverse_weighted: Option<bool>,
    /// `v_j e_j + Σ v_k e_k`, whose value is the agent's contribution to the
    /// consensus. Diagnostic only; not part of the verdict.
    pub value_functional: Option<bool>,
    pub protected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Private,
    NotPrivate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyAuditReport {
    pub observer: usize,
    pub coalition: Vec<usize>,
    pub mode: ObserverMode,
    pub observed: Vec<usize>,
    pub observable_rank: usize,
    pub dim: usize,
    pub targets: Vec<TargetFlags>,
    /// Agents whose encoded gadget values are not all strictly positive.
    pub nonpositive_split_agents: Vec<usize>,
    /// Targets whose value functional is recoverable despite the verdict.
    pub value_leaks: Vec<usize>,
    pub verdict: Verdict,
}

impl PrivacyAuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let exposed: Vec<String> =
            self.targets.iter().filter(|t| !t.protected).map(|t| t.agent.to_string()).collect();
        let mut s = format!(
            "observer {} coalition {:?}: rank {}/{}, verdict {}",
            self.observer,
            self.coalition,
            self.observable_rank,
            self.dim,
            match self.verdict {
                Verdict::Private => "private",
                Verdict::NotPrivate => "not private",
            }
        );
        if !exposed.is_empty() {
            s.push_str(&format!(", exposed targets [{}]", exposed.join(", ")));
        }
        if !self.value_leaks.is_empty() {
            s.push_str(&format!(", value functional recoverable for {:?}", self.value_leaks));
        }
        s
    }
}

fn combination(dim: usize, states: &[usize], weight: impl Fn(usize) -> Rational) -> Vec<Rational> {
    let mut w = vec![Rational::zero(); dim];
    for &k in states {
        w[k] = weight(k);
    }
    w
}

/// Full audit of every non-coalition agent against one observer.
///
/// A target is protected iff some gadget coordinate is unrecoverable and
/// neither the plain sum nor the inverse-weighted combination is recoverable.
pub fn audit(
    system: &AugmentedSystem,
    observer: usize,
    coalition: &[usize],
    mode: ObserverMode,
) -> Result<PrivacyAuditReport, PrivacyError> {
    let spec = ObserverSpec::new(system, observer, coalition, mode)?;
    let dim = system.dim();
    let basis = observable_subspace(&system.ap, &spec.output_matrix(dim))?;
    let insiders: BTreeSet<usize> = spec.members().collect();

    let mut targets = Vec::new();
    for j in (0..system.n_original).filter(|j| !insiders.contains(j)) {
        let states = system.agent_states(j);
        let gadget_basis: Vec<bool> =
            system.index_map[j].iter().map(|&k| basis.contains(&unit_vector(dim, k))).collect();
        let plain_sum = basis.contains(&combination(dim, &states, |_| Rational::one()));
        let (inverse_weighted, value_functional) = match &system.v_left {
            Some(v) if states.iter().all(|&k| !v[k].is_zero()) => (
                Some(basis.contains(&combination(dim, &states, |k| v[k].recip()))),
                Some(basis.contains(&combination(dim, &states, |k| v[k].clone()))),
            ),
            Some(v) => (None, Some(basis.contains(&combination(dim, &states, |k| v[k].clone())))),
            None => (None, None),
        };
        let protected = !gadget_basis.iter().all(|&b| b) && !plain_sum && inverse_weighted != Some(true);
        targets.push(TargetFlags { agent: j, gadget_basis, plain_sum, inverse_weighted, value_functional, protected });
    }

    let nonpositive_split_agents = match &system.x_tilde0 {
        Some(x) => (0..system.n_original)
            .filter(|&i| system.index_map[i].iter().any(|&k| x[k] <= Rational::zero()))
            .collect(),
        None => Vec::new(),
    };
    let value_leaks = targets.iter().filter(|t| t.value_functional == Some(true)).map(|t| t.agent).collect();
    let verdict = if targets.iter().all(|t| t.protected) { Verdict::Private } else { Verdict::NotPrivate };
    Ok(PrivacyAuditReport {
        observer,
        coalition: spec.coalition.clone(),
        mode,
        observed: spec.observed.iter().copied().collect(),
        observable_rank: basis.rank(),
        dim,
        targets,
        nonpositive_split_agents,
        value_leaks,
        verdict,
    })
}
