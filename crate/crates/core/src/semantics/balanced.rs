//! Exact search for k-balanced synchronizing executions.
//!
//! A communication weighs `+k` and a reconfiguration of `d` edges weighs
//! `-d`, so an execution that starts and ends with a communication is
//! k-balanced iff its weight is at least `k`. The reachable state graph is
//! finite; restricted to states from which a target is reachable, either it
//! has a positive cycle (pump it) or the longest path decides.

use std::collections::{HashMap, VecDeque};

use indexmap::IndexSet;
use rayon::prelude::*;

use super::canon::canonize;
use super::prune::DeadStateOracle;
use super::search::{
    initial_configs, is_target, run_in_pool, SearchError, SearchOptions, SearchResult, SearchStats, Verdict,
};
use super::space::{Last, Space};
use super::successors::ToggleLimit;
use crate::model::execution::Execution;
use crate::model::policy::{ConstraintPolicy, Regime};
use crate::model::protocol::BroadcastProtocol;

#[derive(Clone, Copy)]
struct Arc {
    to: u32,
    weight: i64,
    index: u32,
}

/// Packed successor, arc weight, successor index, target flag.
type Successor = (Box<[u8]>, i64, u32, bool);

struct Graph {
    seen: IndexSet<Box<[u8]>>,
    arcs: Vec<Vec<Arc>>,
    target: Vec<bool>,
}

pub(crate) fn search_balanced(
    proto: &BroadcastProtocol,
    n: usize,
    k: u32,
    policy: &ConstraintPolicy,
    opts: &SearchOptions,
) -> Result<SearchResult, SearchError> {
    let limit = ToggleLimit::for_policy(Regime::KBalanced(k), n)?;
    let space = Space {
        proto,
        limit,
        bounds: policy.topology,
        comm_first: true,
    };
    run_in_pool(opts.threads, || decide(&space, n, k as i64, opts))
}

fn explore(space: &Space, n: usize, k: i64, opts: &SearchOptions, stats: &mut SearchStats) -> Result<Graph, Option<Execution>> {
    let proto = space.proto;
    let oracle = DeadStateOracle::new(proto);
    let mut g = Graph {
        seen: IndexSet::new(),
        arcs: Vec::new(),
        target: Vec::new(),
    };
    let mut frontier = Vec::new();
    for init in initial_configs(proto, n, opts.initial_edges, &space.bounds) {
        if opts.prune && oracle.is_dead(&init.labels) {
            continue;
        }
        let (form, _) = canonize(&init);
        if is_target(proto, &form.labels) {
            return Err(Some(Execution::empty(form.to_config())));
        }
        if g.seen.insert(space.key(&form, Last::Start)) {
            g.arcs.push(Vec::new());
            g.target.push(false);
            frontier.push(g.seen.len() - 1);
        }
    }
    stats.peak = frontier.len();
    while !frontier.is_empty() {
        if g.seen.len() > opts.budget.max_states || stats.depth >= opts.budget.max_depth {
            return Err(None);
        }
        stats.depth += 1;
        let expanded: Vec<Vec<Successor>> = frontier
            .par_iter()
            .map(|&id| {
                let (rep, last) = space.decode(&g.seen[id]);
                let mut out = Vec::new();
                for (i, s) in space.successors(&rep, last).into_iter().enumerate() {
                    let comm = s.last == Last::Comm;
                    if comm && opts.prune && oracle.is_dead(&s.next.labels) {
                        continue;
                    }
                    let weight = if comm { k } else { -(s.step.reconf_size() as i64) };
                    let (form, _) = canonize(&s.next);
                    let hit = comm && is_target(proto, &form.labels);
                    out.push((space.key(&form, s.last), weight, i as u32, hit));
                }
                out
            })
            .collect();
        let mut next = Vec::new();
        for (&from, succ) in frontier.iter().zip(expanded) {
            let mut best: HashMap<u32, usize> = HashMap::new();
            for (key, weight, index, hit) in succ {
                let (to, fresh) = g.seen.insert_full(key);
                if fresh {
                    g.arcs.push(Vec::new());
                    g.target.push(hit);
                    next.push(to);
                }
                let arc = Arc {
                    to: to as u32,
                    weight,
                    index,
                };
                match best.get(&(to as u32)) {
                    Some(&pos) if g.arcs[from][pos].weight >= weight => {}
                    Some(&pos) => g.arcs[from][pos] = arc,
                    None => {
                        best.insert(to as u32, g.arcs[from].len());
                        g.arcs[from].push(arc);
                    }
                }
            }
        }
        stats.peak = stats.peak.max(next.len());
        frontier = next;
    }
    Ok(g)
}

fn decide(space: &Space, n: usize, k: i64, opts: &SearchOptions) -> SearchResult {
    let mut stats = SearchStats::default();
    let g = match explore(space, n, k, opts, &mut stats) {
        Ok(g) => g,
        Err(found) => {
            return SearchResult {
                verdict: found.map_or(Verdict::BudgetExceeded, Verdict::FoundWitness),
                stats,
            }
        }
    };
    stats.states = g.seen.len();
    let verdict = match longest(&g, k) {
        None => Verdict::ExhaustedNoWitness,
        Some(path) => Verdict::FoundWitness(rebuild(space, &g, &path)),
    };
    SearchResult { verdict, stats }
}

/// Arcs as `(from, position in arcs[from])`.
type Path = Vec<(usize, usize)>;

fn longest(g: &Graph, k: i64) -> Option<Path> {
    let v = g.seen.len();
    // states from which a target is reachable
    let mut rev: Vec<Vec<usize>> = vec![Vec::new(); v];
    for (u, arcs) in g.arcs.iter().enumerate() {
        for a in arcs {
            rev[a.to as usize].push(u);
        }
    }
    let mut relevant = g.target.clone();
    let mut stack: Vec<usize> = (0..v).filter(|&i| relevant[i]).collect();
    while let Some(x) = stack.pop() {
        for &u in &rev[x] {
            if !relevant[u] {
                relevant[u] = true;
                stack.push(u);
            }
        }
    }
    let size = relevant.iter().filter(|&&r| r).count();
    let sources: Vec<usize> = (0..v).filter(|&i| relevant[i] && g.seen[i][0] == Last::Start as u8).collect();
    if sources.is_empty() {
        return None;
    }

    let mut dist: Vec<Option<i64>> = vec![None; v];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; v];
    let mut len = vec![0usize; v];
    let mut queued = vec![false; v];
    let mut queue = VecDeque::new();
    let mut since_scan = 0usize;
    for &s in &sources {
        dist[s] = Some(0);
        queued[s] = true;
        queue.push_back(s);
    }
    while let Some(u) = queue.pop_front() {
        queued[u] = false;
        let du = dist[u].unwrap();
        for (pos, a) in g.arcs[u].iter().enumerate() {
            let to = a.to as usize;
            if !relevant[to] || dist[to].is_some_and(|d| d >= du + a.weight) {
                continue;
            }
            dist[to] = Some(du + a.weight);
            pred[to] = Some((u, pos));
            len[to] = len[u] + 1;
            since_scan += 1;
            // a path longer than the graph repeats a state, so some cycle is
            // positive; look for it in the predecessor graph now and then
            if len[to] >= size && since_scan >= size {
                since_scan = 0;
                if let Some(cycle) = pred_cycle(g, &pred) {
                    return Some(pumped(g, &relevant, &sources, &cycle, k));
                }
            }
            if !queued[to] {
                queued[to] = true;
                queue.push_back(to);
            }
        }
    }
    let best = (0..v)
        .filter(|&i| g.target[i] && dist[i].is_some_and(|d| d >= k))
        .max_by_key(|&i| (dist[i], std::cmp::Reverse(i)))?;
    let mut path = Vec::new();
    let mut x = best;
    while let Some((u, pos)) = pred[x] {
        path.push((u, pos));
        x = u;
    }
    path.reverse();
    Some(path)
}

/// A cycle in the predecessor graph, if any; such cycles have positive weight.
fn pred_cycle(g: &Graph, pred: &[Option<(usize, usize)>]) -> Option<Path> {
    let v = pred.len();
    let mut colour = vec![0u32; v];
    for start in 0..v {
        if colour[start] != 0 {
            continue;
        }
        let mark = start as u32 + 1;
        let mut x = start;
        while colour[x] == 0 {
            colour[x] = mark;
            match pred[x] {
                Some((u, _)) => x = u,
                None => break,
            }
        }
        if colour[x] == mark && pred[x].is_some() {
            // x lies on a cycle: collect it forwards
            let mut cycle = Vec::new();
            let mut y = x;
            loop {
                let (u, pos) = pred[y].unwrap();
                cycle.push((u, pos));
                y = u;
                if y == x {
                    break;
                }
            }
            cycle.reverse();
            let weight: i64 = cycle.iter().map(|&(u, pos)| g.arcs[u][pos].weight).sum();
            if weight > 0 {
                return Some(cycle);
            }
        }
    }
    None
}

fn bfs_path(g: &Graph, relevant: &[bool], from: &[usize], to: impl Fn(usize) -> bool) -> Option<Path> {
    let v = g.seen.len();
    let mut back: Vec<Option<(usize, usize)>> = vec![None; v];
    let mut seen = vec![false; v];
    let mut queue: VecDeque<usize> = from.iter().copied().collect();
    for &s in from {
        seen[s] = true;
    }
    while let Some(u) = queue.pop_front() {
        if to(u) {
            let mut path = Vec::new();
            let mut x = u;
            while let Some((p, pos)) = back[x] {
                path.push((p, pos));
                x = p;
            }
            path.reverse();
            return Some(path);
        }
        for (pos, a) in g.arcs[u].iter().enumerate() {
            let w = a.to as usize;
            if relevant[w] && !seen[w] {
                seen[w] = true;
                back[w] = Some((u, pos));
                queue.push_back(w);
            }
        }
    }
    None
}

fn weight(g: &Graph, p: &Path) -> i64 {
    p.iter().map(|&(u, pos)| g.arcs[u][pos].weight).sum()
}

fn pumped(g: &Graph, relevant: &[bool], sources: &[usize], cycle: &Path, k: i64) -> Path {
    let entry = cycle[0].0;
    let head = bfs_path(g, relevant, sources, |x| x == entry).expect("cycle is reachable");
    let tail = bfs_path(g, relevant, &[entry], |x| g.target[x]).expect("cycle co-reaches a target");
    let mut base = weight(g, &head) + weight(g, &tail);
    let round = weight(g, cycle);
    let mut path = head;
    // at least one communication must precede the target
    while base < k || path.is_empty() && tail.is_empty() {
        path.extend_from_slice(cycle);
        base += round;
    }
    path.extend(tail);
    path
}

fn rebuild(space: &Space, g: &Graph, path: &Path) -> Execution {
    let root = path.first().map_or(0, |&(u, _)| u);
    let (initial, _) = space.decode(&g.seen[root]);
    let hops: Vec<_> = path
        .iter()
        .map(|&(u, pos)| {
            let (rep, last) = space.decode(&g.seen[u]);
            (rep, last, g.arcs[u][pos].index as usize)
        })
        .collect();
    space.rebuild(&hops, &initial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_protocol;
    use crate::model::validate::validate_execution;
    use crate::semantics::search::search_synchronizing_execution;

    fn balanced(p: &BroadcastProtocol, n: usize, k: u32) -> SearchResult {
        let policy = ConstraintPolicy::new(Regime::KBalanced(k));
        search_synchronizing_execution(p, n, &policy, &SearchOptions::default()).unwrap()
    }

    #[test]
    fn fig1_balanced_matches_constrained() {
        let p = parse_protocol(include_str!("../../assets/fig1.rbn")).unwrap();
        let r = balanced(&p, 3, 2);
        let w = r.witness().expect("2-balanced witness");
        assert!(validate_execution(w, &ConstraintPolicy::new(Regime::KBalanced(2))).passed);
        assert!(is_target(&p, w.last().labels()));
        for n in 1..=3 {
            assert_eq!(balanced(&p, n, 1).verdict, Verdict::ExhaustedNoWitness, "n = {n}");
        }
    }

    #[test]
    fn positive_cycle_is_pumped() {
        // a fourth branch whose node can broadcast forever for free pays for
        // the reconfigurations the other three need
        let text = include_str!("../../assets/fig1.rbn")
            .replace("states q0", "states p pe q0")
            .replace("target q4", "target pe q4")
            .replace("msg a b c d", "msg a b c d m e")
            .replace("sink err", "q0 ?a p\np !m p\np !e pe\nsink err");
        let p = parse_protocol(&text).unwrap();
        let constrained = search_synchronizing_execution(&p, 4, &ConstraintPolicy::k_constrained(1), &SearchOptions::default());
        assert!(constrained.unwrap().is_found());
        let r = balanced(&p, 4, 1);
        let w = r.witness().expect("witness through pumping");
        assert!(validate_execution(w, &ConstraintPolicy::new(Regime::KBalanced(1))).passed);
        assert!(is_target(&p, w.last().labels()));
        let pumps = w
            .steps()
            .iter()
            .filter(|s| matches!(s, crate::model::execution::Step::Communication { message, .. } if p.message_name(*message) == "m"))
            .count();
        assert!(pumps >= 1);
    }
}
