//! Reconfiguration regimes and topology bounds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-step reconfiguration budget as a function of the network size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundingFunction {
    Constant(u64),
    Identity,
    /// `n -> a*n + b`
    Linear { a: u64, b: u64 },
    FloorSqrt,
    FloorLog2,
}

impl BoundingFunction {
    pub fn eval(self, n: u64) -> u64 {
        match self {
            BoundingFunction::Constant(k) => k,
            BoundingFunction::Identity => n,
            BoundingFunction::Linear { a, b } => a.saturating_mul(n).saturating_add(b),
            BoundingFunction::FloorSqrt => n.isqrt(),
            BoundingFunction::FloorLog2 => {
                if n == 0 {
                    0
                } else {
                    63 - n.leading_zeros() as u64
                }
            }
        }
    }

    /// Tends to infinity with `n`.
    pub fn is_diverging(self) -> bool {
        match self {
            BoundingFunction::Constant(_) => false,
            BoundingFunction::Linear { a, .. } => a > 0,
            BoundingFunction::Identity | BoundingFunction::FloorSqrt | BoundingFunction::FloorLog2 => true,
        }
    }
}

impl fmt::Display for BoundingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundingFunction::Constant(k) => write!(f, "const:{k}"),
            BoundingFunction::Identity => f.write_str("id"),
            BoundingFunction::Linear { a, b } => write!(f, "linear:{a},{b}"),
            BoundingFunction::FloorSqrt => f.write_str("floor_sqrt"),
            BoundingFunction::FloorLog2 => f.write_str("floor_log2"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot parse '{input}': {reason}")]
pub struct PolicyParseError {
    pub input: String,
    pub reason: String,
}

fn parse_err(input: &str, reason: &str) -> PolicyParseError {
    PolicyParseError {
        input: input.to_string(),
        reason: reason.to_string(),
    }
}

impl FromStr for BoundingFunction {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| t.trim().parse::<u64>().map_err(|_| parse_err(s, "expected a nonnegative integer"));
        match s {
            "id" | "identity" => return Ok(BoundingFunction::Identity),
            "floor_sqrt" | "sqrt" => return Ok(BoundingFunction::FloorSqrt),
            "floor_log2" | "log2" => return Ok(BoundingFunction::FloorLog2),
            _ => {}
        }
        if let Some(k) = s.strip_prefix("const:") {
            return Ok(BoundingFunction::Constant(num(k)?));
        }
        if let Some(rest) = s.strip_prefix("linear:") {
            let (a, b) = rest.split_once(',').ok_or_else(|| parse_err(s, "expected linear:a,b"))?;
            return Ok(BoundingFunction::Linear { a: num(a)?, b: num(b)? });
        }
        Err(parse_err(s, "unknown bounding function"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Unconstrained,
    /// At most `k` edge changes per reconfiguration step.
    KConstrained(u32),
    /// At most `k*(#communications - 1)` edge changes in total, with
    /// communications at both ends.
    KBalanced(u32),
    /// At most `k` changed edges incident to any node per step.
    KLocallyConstrained(u32),
    /// At most `f(n)` edge changes per step for `n` nodes.
    FConstrained(BoundingFunction),
    /// Exactly `k` edge changes per reconfiguration step.
    StronglyKConstrained(u32),
}

impl Regime {
    /// Largest number of edges a single step may change on `n` nodes, if
    /// the regime bounds it.
    pub fn per_step_budget(self, n: usize) -> Option<usize> {
        match self {
            Regime::Unconstrained | Regime::KBalanced(_) => None,
            Regime::KConstrained(k) | Regime::StronglyKConstrained(k) => Some(k as usize),
            // each node touches at most k changed edges: at most k*n/2 edges
            Regime::KLocallyConstrained(k) => Some(k as usize * n / 2),
            Regime::FConstrained(f) => Some(f.eval(n as u64) as usize),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Unconstrained => f.write_str("unconstrained"),
            Regime::KConstrained(k) => write!(f, "k={k}"),
            Regime::KBalanced(k) => write!(f, "balanced={k}"),
            Regime::KLocallyConstrained(k) => write!(f, "local={k}"),
            Regime::FConstrained(b) => write!(f, "f={b}"),
            Regime::StronglyKConstrained(k) => write!(f, "strong={k}"),
        }
    }
}

impl FromStr for Regime {
    type Err = PolicyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unconstrained" {
            return Ok(Regime::Unconstrained);
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| parse_err(s, "expected unconstrained or <kind>=<value>"))?;
        if key == "f" {
            return Ok(Regime::FConstrained(value.parse()?));
        }
        let k: u32 = value.parse().map_err(|_| parse_err(s, "expected a positive integer"))?;
        if k == 0 {
            return Err(parse_err(s, "k must be at least 1"));
        }
        match key {
            "k" => Ok(Regime::KConstrained(k)),
            "balanced" => Ok(Regime::KBalanced(k)),
            "local" => Ok(Regime::KLocallyConstrained(k)),
            "strong" => Ok(Regime::StronglyKConstrained(k)),
            _ => Err(parse_err(s, "unknown regime")),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TopologyBounds {
    pub max_degree: Option<usize>,
    pub max_path: Option<usize>,
}

impl TopologyBounds {
    pub fn is_unbounded(&self) -> bool {
        self.max_degree.is_none() && self.max_path.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ConstraintPolicy {
    pub regime: Regime,
    pub topology: TopologyBounds,
}

impl ConstraintPolicy {
    pub fn new(regime: Regime) -> Self {
        Self {
            regime,
            topology: TopologyBounds::default(),
        }
    }

    pub fn unconstrained() -> Self {
        Self::new(Regime::Unconstrained)
    }

    pub fn k_constrained(k: u32) -> Self {
        Self::new(Regime::KConstrained(k))
    }

    pub fn with_degree_bound(mut self, d: usize) -> Self {
        self.topology.max_degree = Some(d);
        self
    }

    pub fn with_path_bound(mut self, k: usize) -> Self {
        self.topology.max_path = Some(k);
        self
    }
}

impl fmt::Display for ConstraintPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.regime)?;
        if let Some(d) = self.topology.max_degree {
            write!(f, "+degree<={d}")?;
        }
        if let Some(k) = self.topology.max_path {
            write!(f, "+path<={k}")?;
        }
        Ok(())
    }
}
