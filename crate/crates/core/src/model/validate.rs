//! Regime validators, the potential of an execution and its phases.

use serde::Serialize;
use thiserror::Error;

use super::config::{Edge, NodeId};
use super::execution::{Execution, Step};
use super::policy::{ConstraintPolicy, Regime};
use super::topology;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConstraintCheck {
    pub constraint: String,
    pub passed: bool,
    /// Step index for regime checks, configuration index for topology checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_violation: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl ConstraintCheck {
    fn pass(constraint: String) -> Self {
        Self {
            constraint,
            passed: true,
            first_violation: None,
            detail: None,
        }
    }

    fn fail(constraint: String, at: Option<usize>, detail: String) -> Self {
        Self {
            constraint,
            passed: false,
            first_violation: at,
            detail: Some(detail),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub policy: String,
    pub passed: bool,
    pub steps: usize,
    /// `#B`: communication steps.
    pub communications: usize,
    /// `#R`: total number of edge changes.
    pub reconfigured: usize,
    pub checks: Vec<ConstraintCheck>,
}

impl ValidationReport {
    pub fn first_failure(&self) -> Option<&ConstraintCheck> {
        self.checks.iter().find(|c| !c.passed)
    }
}

fn incident_changes(step: &Step, n: usize) -> Vec<usize> {
    let mut count = vec![0; n];
    if let Step::Reconfiguration { added, removed } = step {
        for e in added.iter().chain(removed) {
            count[e.low() as usize] += 1;
            count[e.high() as usize] += 1;
        }
    }
    count
}

fn per_step_check(e: &Execution, name: String, ok: impl Fn(&Step) -> Result<(), String>) -> ConstraintCheck {
    for (i, step) in e.steps().iter().enumerate() {
        if step.is_communication() {
            continue;
        }
        if let Err(why) = ok(step) {
            return ConstraintCheck::fail(name, Some(i), why);
        }
    }
    ConstraintCheck::pass(name)
}

fn regime_check(e: &Execution, regime: Regime) -> ConstraintCheck {
    let name = regime.to_string();
    let n = e.num_nodes();
    match regime {
        Regime::Unconstrained => ConstraintCheck::pass(name),
        Regime::KConstrained(k) => per_step_check(e, name, |s| {
            let d = s.reconf_size();
            if d <= k as usize {
                Ok(())
            } else {
                Err(format!("reconfigures {d} edges, more than {k}"))
            }
        }),
        Regime::StronglyKConstrained(k) => per_step_check(e, name, |s| {
            let d = s.reconf_size();
            if d == k as usize {
                Ok(())
            } else {
                Err(format!("reconfigures {d} edges instead of exactly {k}"))
            }
        }),
        Regime::FConstrained(f) => {
            let bound = f.eval(n as u64) as usize;
            per_step_check(e, name, |s| {
                let d = s.reconf_size();
                if d <= bound {
                    Ok(())
                } else {
                    Err(format!("reconfigures {d} edges, more than f({n}) = {bound}"))
                }
            })
        }
        Regime::KLocallyConstrained(k) => per_step_check(e, name, |s| {
            let counts = incident_changes(s, n);
            match counts.iter().position(|&c| c > k as usize) {
                None => Ok(()),
                Some(v) => Err(format!("node {v} is incident to {} changed edges, more than {k}", counts[v])),
            }
        }),
        Regime::KBalanced(k) => {
            if e.is_empty() {
                return ConstraintCheck::pass(name);
            }
            if !e.steps()[0].is_communication() {
                return ConstraintCheck::fail(name, Some(0), "does not start with a communication step".into());
            }
            if !e.steps()[e.len() - 1].is_communication() {
                return ConstraintCheck::fail(name, Some(e.len() - 1), "does not end with a communication step".into());
            }
            let b = e.num_communications();
            let r = e.total_reconfigured();
            let budget = k as usize * (b - 1);
            if r <= budget {
                ConstraintCheck::pass(name)
            } else {
                ConstraintCheck::fail(name, None, format!("#R = {r} exceeds {k}*(#B-1) = {budget}"))
            }
        }
    }
}

/// Checks `e` against every constraint of `policy`. Failures are reported,
/// never raised.
pub fn validate_execution(e: &Execution, policy: &ConstraintPolicy) -> ValidationReport {
    let mut checks = vec![regime_check(e, policy.regime)];
    let bounds = policy.topology;
    if let Some(d) = bounds.max_degree {
        let name = format!("degree<={d}");
        let bad = e.configs().iter().position(|g| topology::max_degree(g) > d);
        checks.push(match bad {
            None => ConstraintCheck::pass(name),
            Some(i) => ConstraintCheck::fail(
                name,
                Some(i),
                format!("configuration {i} has degree {}", topology::max_degree(&e.configs()[i])),
            ),
        });
    }
    if let Some(k) = bounds.max_path {
        let name = format!("path<={k}");
        let bad = e.configs().iter().position(|g| topology::longest_simple_path(g) > k);
        checks.push(match bad {
            None => ConstraintCheck::pass(name),
            Some(i) => ConstraintCheck::fail(
                name,
                Some(i),
                format!(
                    "configuration {i} has a simple path of length {}",
                    topology::longest_simple_path(&e.configs()[i])
                ),
            ),
        });
    }
    ValidationReport {
        policy: policy.to_string(),
        passed: checks.iter().all(|c| c.passed),
        steps: e.len(),
        communications: e.num_communications(),
        reconfigured: e.total_reconfigured(),
        checks,
    }
}

/// One letter of the atomic form of an execution: communications stay as
/// they are, a reconfiguration of `d` edges becomes `d` single-edge letters
/// and trivial reconfigurations disappear.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Letter {
    Comm { step: usize },
    Atom { step: usize, edge: Edge, add: bool },
}

impl Letter {
    pub fn is_comm(self) -> bool {
        matches!(self, Letter::Comm { .. })
    }
}

/// Atomic form of `e`; within a step removals come before additions.
pub fn atomic_word(e: &Execution) -> Vec<Letter> {
    let mut word = Vec::new();
    for (i, step) in e.steps().iter().enumerate() {
        match step {
            Step::Communication { .. } => word.push(Letter::Comm { step: i }),
            Step::Reconfiguration { added, removed } => {
                word.extend(removed.iter().map(|&edge| Letter::Atom { step: i, edge, add: false }));
                word.extend(added.iter().map(|&edge| Letter::Atom { step: i, edge, add: true }));
            }
        }
    }
    word
}

/// A reconfiguration letter is repeated when it directly follows another
/// reconfiguration letter.
pub fn is_repeated_atom(word: &[Letter], i: usize) -> bool {
    i > 0 && !word[i].is_comm() && !word[i - 1].is_comm()
}

/// A communication letter is repeated when another communication letter
/// directly follows it.
pub fn is_repeated_comm(word: &[Letter], i: usize) -> bool {
    word[i].is_comm() && word.get(i + 1).is_some_and(|l| l.is_comm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseSign {
    NonNegative,
    NonPositive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Phase {
    /// Configuration indices in the atomic word; the phase covers letters
    /// `start..end`.
    pub start: usize,
    pub end: usize,
    pub sign: PhaseSign,
    pub kappa: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PhaseDecomposition {
    pub phases: Vec<Phase>,
    pub kappa: usize,
    /// Length of the atomic word.
    pub word_len: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PotentialProfile {
    /// `p_0 .. p_n` over the original steps.
    pub values: Vec<i64>,
    pub phases: PhaseDecomposition,
}

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum PotentialError {
    #[error("execution does not start and end with a communication step")]
    NotCommBounded,
}

fn sign_of(p: i64) -> Option<PhaseSign> {
    match p.signum() {
        1 => Some(PhaseSign::NonNegative),
        -1 => Some(PhaseSign::NonPositive),
        _ => None,
    }
}

/// Splits the atomic word (without its final communication) into maximal
/// segments of constant potential sign.
pub fn phase_decomposition(word: &[Letter], k: u32) -> PhaseDecomposition {
    let mut pot = vec![0i64; word.len() + 1];
    for (i, l) in word.iter().enumerate() {
        pot[i + 1] = pot[i] + if l.is_comm() { k as i64 } else { -1 };
    }
    let last = word.len().saturating_sub(1);
    let mut phases = Vec::new();
    let mut start = 0;
    let mut sign: Option<PhaseSign> = None;
    let mut last_zero = 0;
    for (i, &p) in pot.iter().enumerate().take(last + 1) {
        match sign_of(p) {
            None => last_zero = i,
            Some(s) if sign.is_none() => sign = Some(s),
            Some(s) if Some(s) != sign => {
                // with k > 1 the potential can jump over zero
                let cut = if last_zero > start { last_zero } else { i - 1 };
                phases.push((start, cut, sign.unwrap()));
                start = cut;
                sign = Some(s);
            }
            Some(_) => {}
        }
    }
    if last > start || phases.is_empty() {
        phases.push((start, last, sign.unwrap_or(PhaseSign::NonNegative)));
    }
    let mut total = 0;
    let phases = phases
        .into_iter()
        .map(|(start, end, sign)| {
            let kappa = (start..end).filter(|&t| is_repeated_atom(word, t)).count();
            total += kappa;
            Phase { start, end, sign, kappa }
        })
        .collect();
    PhaseDecomposition {
        phases,
        kappa: total,
        word_len: word.len(),
    }
}

/// Potential `p_0 = 0`, `+k` per communication, minus the edge count per
/// reconfiguration, together with the phases of the atomic form.
pub fn potential_sequence(e: &Execution, k: u32) -> Result<PotentialProfile, PotentialError> {
    if !e.is_comm_bounded() {
        return Err(PotentialError::NotCommBounded);
    }
    let mut values = Vec::with_capacity(e.len() + 1);
    values.push(0i64);
    for s in e.steps() {
        let prev = *values.last().unwrap();
        values.push(match s {
            Step::Communication { .. } => prev + k as i64,
            Step::Reconfiguration { .. } => prev - s.reconf_size() as i64,
        });
    }
    Ok(PotentialProfile {
        values,
        phases: phase_decomposition(&atomic_word(e), k),
    })
}

/// Every node's incident change count for one step; exposed for callers
/// that want per-node detail.
pub fn node_changes(step: &Step, n: usize) -> Vec<(NodeId, usize)> {
    incident_changes(step, n)
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(v, c)| (v as NodeId, c))
        .collect()
}
