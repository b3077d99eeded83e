//! Bounded breadth-first search for synchronizing executions.

use indexmap::IndexSet;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::abstraction::search_abstract;
use super::balanced::search_balanced;
use super::canon::canonize;
use super::packed::{Packed, MAX_NODES};
use super::prune::DeadStateOracle;
use super::space::{all_graphs, label_multisets, Last, Space};
use super::successors::{SuccessorError, ToggleLimit};
use crate::model::execution::Execution;
use crate::model::policy::{ConstraintPolicy, Regime};
use crate::model::protocol::{BroadcastProtocol, StateId};

/// Packed successor, successor index, target flag.
type Successor = (Box<[u8]>, u32, bool);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialEdges {
    /// Any initial graph.
    #[default]
    All,
    /// Initial configurations have no edges.
    EmptyOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_states: usize,
    pub max_depth: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            max_states: 5_000_000,
            max_depth: 200,
        }
    }
}

impl SearchBudget {
    /// The default budget, with `RBNET_BUDGET_STATES` overriding the state
    /// limit when set.
    pub fn from_env() -> Self {
        let mut b = Self::default();
        if let Some(v) = std::env::var("RBNET_BUDGET_STATES").ok().and_then(|v| v.parse().ok()) {
            b.max_states = v;
        }
        b
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    pub budget: SearchBudget,
    pub initial_edges: InitialEdges,
    /// Worker threads for frontier expansion; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Skip configurations that provably cannot synchronize.
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: SearchBudget::default(),
            initial_edges: InitialEdges::All,
            threads: None,
            prune: true,
        }
    }
}

impl SearchOptions {
    pub fn with_initial_edges(mut self, e: InitialEdges) -> Self {
        self.initial_edges = e;
        self
    }

    pub fn with_max_states(mut self, s: usize) -> Self {
        self.budget.max_states = s;
        self
    }

    pub fn with_threads(mut self, t: usize) -> Self {
        self.threads = Some(t);
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub states: usize,
    pub peak: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    FoundWitness(Execution),
    ExhaustedNoWitness,
    BudgetExceeded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub verdict: Verdict,
    pub stats: SearchStats,
}

impl SearchResult {
    pub fn witness(&self) -> Option<&Execution> {
        match &self.verdict {
            Verdict::FoundWitness(e) => Some(e),
            _ => None,
        }
    }

    pub fn is_found(&self) -> bool {
        self.witness().is_some()
    }

    /// Found, or exhausted without a witness.
    pub fn is_conclusive(&self) -> bool {
        self.verdict != Verdict::BudgetExceeded
    }

    pub fn verdict_name(&self) -> &'static str {
        match self.verdict {
            Verdict::FoundWitness(_) => "found_witness",
            Verdict::ExhaustedNoWitness => "exhausted_no_witness",
            Verdict::BudgetExceeded => "budget_exceeded",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("the node count must be at least 1")]
    NoNodes,
    #[error("the protocol has no target set")]
    NoTarget,
    #[error("the protocol has no initial state")]
    NoInitial,
    #[error(transparent)]
    Successor(#[from] SuccessorError),
    #[error("could not start a thread pool: {0}")]
    Threads(String),
}

pub(crate) fn is_target(proto: &BroadcastProtocol, labels: &[StateId]) -> bool {
    labels.iter().all(|&s| proto.is_target(s))
}

pub(crate) fn run_in_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, SearchError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| SearchError::Threads(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub(crate) fn check_inputs(proto: &BroadcastProtocol, n: usize) -> Result<(), SearchError> {
    if n == 0 {
        return Err(SearchError::NoNodes);
    }
    if proto.target_set().is_none() {
        return Err(SearchError::NoTarget);
    }
    if proto.initial_states().is_empty() {
        return Err(SearchError::NoInitial);
    }
    if n > MAX_NODES {
        return Err(SuccessorError::TooManyNodes(n).into());
    }
    Ok(())
}

/// Canonical initial configurations in a fixed order, deduplicated.
pub(crate) fn initial_configs(
    proto: &BroadcastProtocol,
    n: usize,
    edges: InitialEdges,
    bounds: &crate::model::policy::TopologyBounds,
) -> impl Iterator<Item = Packed> {
    let states: Vec<StateId> = proto.initial_states().iter().copied().collect();
    let graphs: Vec<Vec<u16>> = match edges {
        InitialEdges::EmptyOnly => vec![vec![0; n]],
        InitialEdges::All => all_graphs(n).collect(),
    };
    let bounds = *bounds;
    label_multisets(&states, n)
        .into_iter()
        .flat_map(move |labels| {
            graphs.clone().into_iter().map(move |adj| Packed {
                labels: labels.clone(),
                adj,
            })
        })
        .filter(move |g| g.satisfies(&bounds))
}

/// Searches executions on exactly `n` nodes for one that reaches a
/// configuration whose labels all lie in the target set.
///
/// The unconstrained regime without topology bounds goes through the counter
/// abstraction; `KBalanced` is decided exactly by a longest-path analysis;
/// everything else is explicit breadth-first search, so witnesses are
/// shortest in step count.
pub fn search_synchronizing_execution(
    proto: &BroadcastProtocol,
    n: usize,
    policy: &ConstraintPolicy,
    opts: &SearchOptions,
) -> Result<SearchResult, SearchError> {
    check_inputs(proto, n)?;
    let topology_free = policy.topology.max_degree.is_none() && policy.topology.max_path.is_none();
    match policy.regime {
        Regime::Unconstrained if topology_free => return Ok(search_abstract(proto, n, opts)),
        Regime::KBalanced(k) => return search_balanced(proto, n, k, policy, opts),
        _ => {}
    }
    let limit = ToggleLimit::for_policy(policy.regime, n)?;
    let space = Space {
        proto,
        limit,
        bounds: policy.topology,
        comm_first: false,
    };
    run_in_pool(opts.threads, || bfs(&space, n, opts))
}

struct Visit {
    parent: u32,
    index: u32,
}

fn bfs(space: &Space, n: usize, opts: &SearchOptions) -> SearchResult {
    let proto = space.proto;
    let oracle = DeadStateOracle::new(proto);
    let mut seen: IndexSet<Box<[u8]>> = IndexSet::new();
    let mut visits: Vec<Visit> = Vec::new();
    let mut stats = SearchStats::default();
    let mut frontier: Vec<u32> = Vec::new();
    let over = |stats: SearchStats| SearchResult {
        verdict: Verdict::BudgetExceeded,
        stats,
    };

    for g in initial_configs(proto, n, opts.initial_edges, &space.bounds) {
        if opts.prune && oracle.is_dead(&g.labels) {
            continue;
        }
        let (form, _) = canonize(&g);
        if is_target(proto, &form.labels) {
            stats.states = seen.len() + 1;
            return SearchResult {
                verdict: Verdict::FoundWitness(Execution::empty(form.to_config())),
                stats,
            };
        }
        if seen.insert(space.key(&form, Last::Start)) {
            visits.push(Visit {
                parent: u32::MAX,
                index: 0,
            });
            frontier.push(seen.len() as u32 - 1);
            if seen.len() > opts.budget.max_states {
                stats.states = seen.len();
                return over(stats);
            }
        }
    }
    stats.peak = frontier.len();

    while !frontier.is_empty() {
        if stats.depth >= opts.budget.max_depth {
            stats.states = seen.len();
            return over(stats);
        }
        let expanded: Vec<Vec<Successor>> = frontier
            .par_iter()
            .map(|&id| {
                let (g, last) = space.decode(&seen[id as usize]);
                let mut out = Vec::new();
                for (i, s) in space.successors(&g, last).into_iter().enumerate() {
                    if s.last == Last::Comm && opts.prune && oracle.is_dead(&s.next.labels) {
                        continue;
                    }
                    let (form, _) = canonize(&s.next);
                    let hit = s.last == Last::Comm && is_target(proto, &form.labels);
                    out.push((space.key(&form, s.last), i as u32, hit));
                }
                out
            })
            .collect();
        stats.depth += 1;
        let mut next = Vec::new();
        for (&parent, succ) in frontier.iter().zip(expanded) {
            for (key, index, hit) in succ {
                let (id, fresh) = seen.insert_full(key);
                if !fresh {
                    continue;
                }
                visits.push(Visit { parent, index });
                if hit {
                    stats.states = seen.len();
                    let witness = reconstruct(space, &seen, &visits, id);
                    return SearchResult {
                        verdict: Verdict::FoundWitness(witness),
                        stats,
                    };
                }
                next.push(id as u32);
                if seen.len() > opts.budget.max_states {
                    stats.states = seen.len();
                    return over(stats);
                }
            }
        }
        stats.peak = stats.peak.max(next.len());
        frontier = next;
    }
    stats.states = seen.len();
    SearchResult {
        verdict: Verdict::ExhaustedNoWitness,
        stats,
    }
}

fn reconstruct(space: &Space, seen: &IndexSet<Box<[u8]>>, visits: &[Visit], mut id: usize) -> Execution {
    let mut hops = Vec::new();
    while visits[id].parent != u32::MAX {
        let parent = visits[id].parent as usize;
        let (rep, last) = space.decode(&seen[parent]);
        hops.push((rep, last, visits[id].index as usize));
        id = parent;
    }
    hops.reverse();
    let (root, _) = space.decode(&seen[id]);
    space.rebuild(&hops, &root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_protocol;
    use crate::model::validate::validate_execution;

    fn fig1() -> BroadcastProtocol {
        parse_protocol(include_str!("../../assets/fig1.rbn")).unwrap()
    }

    fn run(n: usize, policy: ConstraintPolicy) -> SearchResult {
        search_synchronizing_execution(&fig1(), n, &policy, &SearchOptions::default()).unwrap()
    }

    #[test]
    fn fig1_two_constrained_witness() {
        let policy = ConstraintPolicy::k_constrained(2);
        let r = run(3, policy);
        let w = r.witness().expect("witness");
        assert_eq!(w.num_communications(), 4);
        assert_eq!(w.len(), 7);
        assert!(validate_execution(w, &policy).passed);
        assert!(is_target(&fig1(), w.last().labels()));
        assert!(w.is_initial(&fig1()));
    }

    #[test]
    fn fig1_one_constrained_exhausts() {
        for n in 1..=3 {
            assert_eq!(run(n, ConstraintPolicy::k_constrained(1)).verdict, Verdict::ExhaustedNoWitness);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let p = fig1();
        let policy = ConstraintPolicy::k_constrained(2);
        let one = search_synchronizing_execution(&p, 3, &policy, &SearchOptions::default().with_threads(1)).unwrap();
        let four = search_synchronizing_execution(&p, 3, &policy, &SearchOptions::default().with_threads(4)).unwrap();
        assert_eq!(one, four);
        let unpruned = SearchOptions {
            prune: false,
            ..SearchOptions::default()
        };
        let r = search_synchronizing_execution(&p, 3, &policy, &unpruned).unwrap();
        assert_eq!(r.witness().map(Execution::len), Some(7));
    }

    #[test]
    fn budget_is_reported() {
        let opts = SearchOptions::default().with_max_states(5);
        let r = search_synchronizing_execution(&fig1(), 3, &ConstraintPolicy::k_constrained(1), &opts).unwrap();
        assert_eq!(r.verdict, Verdict::BudgetExceeded);
        assert!(!r.is_conclusive());
    }

    #[test]
    fn already_synchronized_start() {
        let p = parse_protocol("states a\ninit a\ntarget a\nmsg m\n").unwrap();
        let r = search_synchronizing_execution(&p, 2, &ConstraintPolicy::k_constrained(1), &SearchOptions::default())
            .unwrap();
        assert_eq!(r.witness().map(Execution::len), Some(0));
    }
}
