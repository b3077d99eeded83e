//! Two-counter machines and their encoding as broadcast protocols whose
//! 1-constrained synchronizing executions simulate halting runs.
//!
//! Machine syntax, one instruction per line:
//!
//! ```text
//! L0: inc c1 -> L1
//! L1: testdec c2 -> L2 | L3
//! L2: halt
//! ```
//!
//! The first line's location is initial; exactly one location halts.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::protocol::{BroadcastProtocol, ProtocolBuilder, ProtocolError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Instruction {
    Inc { counter: u8, next: String },
    TestDec { counter: u8, on_dec: String, on_zero: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MinskyMachine {
    /// In declaration order.
    pub locations: Vec<String>,
    pub initial: String,
    pub halt: String,
    pub instructions: BTreeMap<String, Instruction>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MinskyError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("location '{0}' is declared twice")]
    DuplicateLocation(String),
    #[error("location '{0}' is used but never declared")]
    UnknownLocation(String),
    #[error("expected exactly one halt location, found {0}")]
    HaltCount(usize),
    #[error("location name '{0}' clashes with a state of the encoding")]
    ReservedName(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

fn counter(tok: &str, line: usize) -> Result<u8, MinskyError> {
    match tok {
        "c1" => Ok(1),
        "c2" => Ok(2),
        _ => Err(MinskyError::Syntax {
            line,
            message: format!("expected c1 or c2, got '{tok}'"),
        }),
    }
}

pub fn parse_machine(text: &str) -> Result<MinskyMachine, MinskyError> {
    let mut locations = Vec::new();
    let mut instructions = BTreeMap::new();
    let mut halts = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let syntax = |message: &str| MinskyError::Syntax {
            line,
            message: message.to_string(),
        };
        let (label, rest) = body.split_once(':').ok_or_else(|| syntax("expected 'LABEL: instruction'"))?;
        let label = label.trim().to_string();
        if label.is_empty() || label.contains(char::is_whitespace) {
            return Err(syntax("bad location name"));
        }
        if locations.contains(&label) {
            return Err(MinskyError::DuplicateLocation(label));
        }
        let toks: Vec<&str> = rest.split_whitespace().collect();
        match toks.as_slice() {
            ["halt"] => halts.push(label.clone()),
            ["inc", c, "->", next] => {
                let ins = Instruction::Inc {
                    counter: counter(c, line)?,
                    next: next.to_string(),
                };
                instructions.insert(label.clone(), ins);
            }
            ["testdec", c, "->", dec, "|", zero] => {
                let ins = Instruction::TestDec {
                    counter: counter(c, line)?,
                    on_dec: dec.to_string(),
                    on_zero: zero.to_string(),
                };
                instructions.insert(label.clone(), ins);
            }
            _ => return Err(syntax("expected 'halt', 'inc cJ -> L' or 'testdec cJ -> L | L'")),
        }
        locations.push(label);
    }
    if halts.len() != 1 {
        return Err(MinskyError::HaltCount(halts.len()));
    }
    let m = MinskyMachine {
        initial: locations[0].clone(),
        halt: halts.pop().unwrap(),
        locations,
        instructions,
    };
    for ins in m.instructions.values() {
        let targets = match ins {
            Instruction::Inc { next, .. } => vec![next],
            Instruction::TestDec { on_dec, on_zero, .. } => vec![on_dec, on_zero],
        };
        if let Some(t) = targets.into_iter().find(|t| !m.locations.contains(t)) {
            return Err(MinskyError::UnknownLocation(t.clone()));
        }
    }
    Ok(m)
}

impl MinskyMachine {
    /// Runs from the initial location with both counters at zero. Returns the
    /// counters on halting, `None` if `max_steps` pass first.
    pub fn run(&self, max_steps: usize) -> Option<[u64; 2]> {
        let mut at = &self.initial;
        let mut c = [0u64; 2];
        for _ in 0..=max_steps {
            let Some(ins) = self.instructions.get(at) else {
                return Some(c);
            };
            at = match ins {
                Instruction::Inc { counter, next } => {
                    c[*counter as usize - 1] += 1;
                    next
                }
                Instruction::TestDec { counter, on_dec, on_zero } => {
                    let v = &mut c[*counter as usize - 1];
                    if *v > 0 {
                        *v -= 1;
                        on_dec
                    } else {
                        on_zero
                    }
                }
            };
        }
        None
    }
}

/// The encoded protocol together with the names of its target states.
#[derive(Clone, Debug)]
pub struct MinskyEncoding {
    pub protocol: BroadcastProtocol,
    pub targets: Vec<String>,
}

const START: &str = "M0";
pub const SINK: &str = "sink";

fn aux_states() -> Vec<String> {
    let mut out = Vec::new();
    for i in 1..=5 {
        out.push(format!("free{i}"));
        out.push(format!("done{i}"));
    }
    for j in 1..=2 {
        for s in ["zero", "one"] {
            out.push(format!("{s}{j}"));
        }
        out.push(format!("zero{j}'"));
    }
    out.extend([START.to_string(), SINK.to_string()]);
    out
}

fn messages(b: &mut ProtocolBuilder) {
    b.message("start");
    b.message("i-init");
    for i in 1..=5 {
        b.message(&format!("aux{i}"));
    }
    for kind in ["i", "d", "t"] {
        for j in 1..=2 {
            for what in ["ask", "ack", "ok"] {
                b.message(&format!("{kind}-{what}_{j}"));
            }
        }
    }
    for kind in ["i", "d", "t"] {
        b.message(&format!("{kind}-exit"));
    }
}

/// A chain `from --a1--> s1 --a2--> ... --> to`; `"!m"` broadcasts, `"?m"` receives.
fn chain(b: &mut ProtocolBuilder, from: &str, steps: &[(&str, String)], to: &str) {
    let mut at = from.to_string();
    for (k, (act, next)) in steps.iter().enumerate() {
        let dest = if k + 1 == steps.len() { to.to_string() } else { next.clone() };
        let (kind, msg) = act.split_at(1);
        if kind == "!" {
            b.broadcast(&at, msg, &dest);
        } else {
            b.receive(&at, msg, &dest);
        }
        at = dest;
    }
}

fn control(b: &mut ProtocolBuilder, m: &MinskyMachine) {
    b.broadcast(START, "start", &m.initial);
    for loc in &m.locations {
        b.state(loc);
    }
    for (loc, ins) in &m.instructions {
        let s = |name: &str| format!("{loc}.{name}");
        match ins {
            Instruction::Inc { counter: j, next } => {
                let acts = [
                    "!i-init".to_string(),
                    "?aux1".into(),
                    format!("!i-ask_{j}"),
                    format!("?i-ack_{j}"),
                    format!("!i-ok_{j}"),
                    "?aux2".into(),
                    "?aux3".into(),
                    "?aux3".into(),
                ];
                let steps: Vec<(&str, String)> =
                    acts.iter().enumerate().map(|(k, a)| (a.as_str(), s(&format!("inc{}", k + 1)))).collect();
                chain(b, loc, &steps, &s("M"));
                b.broadcast(&s("M"), "i-exit", next);
            }
            Instruction::TestDec { counter: j, on_dec, on_zero } => {
                let dec = [
                    format!("!d-ask_{j}"),
                    format!("?d-ack_{j}"),
                    format!("!d-ok_{j}"),
                    "?aux4".into(),
                    "?aux5".into(),
                    "?aux5".into(),
                ];
                let steps: Vec<(&str, String)> =
                    dec.iter().enumerate().map(|(k, a)| (a.as_str(), s(&format!("dec{}", k + 1)))).collect();
                chain(b, loc, &steps, &s("M"));
                b.broadcast(&s("M"), "d-exit", on_dec);
                let tst = [
                    format!("!t-ask_{j}"),
                    format!("?t-ack_{j}"),
                    format!("!t-ok_{j}"),
                    "?aux5".into(),
                    "?aux5".into(),
                ];
                let steps: Vec<(&str, String)> =
                    tst.iter().enumerate().map(|(k, a)| (a.as_str(), s(&format!("tst{}", k + 1)))).collect();
                chain(b, loc, &steps, &s("M'"));
                b.broadcast(&s("M'"), "t-exit", on_zero);
            }
        }
    }
}

fn counters(b: &mut ProtocolBuilder) {
    for j in 1..=2 {
        let (zero, one, gone) = (format!("zero{j}"), format!("one{j}"), format!("zero{j}'"));
        let (a, bb) = (format!("{zero}.a"), format!("{zero}.b"));
        b.receive(&zero, &format!("i-ask_{j}"), &a);
        b.receive(&a, &format!("i-ok_{j}"), &zero);
        b.broadcast(&a, &format!("i-ack_{j}"), &bb);
        b.receive(&bb, &format!("i-ok_{j}"), &one);
        let (c, d) = (format!("{one}.c"), format!("{one}.d"));
        b.receive(&one, &format!("d-ask_{j}"), &c);
        b.receive(&c, &format!("d-ok_{j}"), &one);
        b.broadcast(&c, &format!("d-ack_{j}"), &d);
        b.receive(&d, &format!("d-ok_{j}"), &gone);
        let mut loops = vec!["i-init".to_string()];
        loops.extend((1..=2).map(|i| format!("i-ask_{i}")));
        loops.extend((1..=2).map(|i| format!("i-ok_{i}")));
        loops.extend(["i-exit".into(), "d-exit".into()]);
        for msg in loops {
            b.receive(&one, &msg, &one);
        }
    }
}

fn auxiliaries(b: &mut ProtocolBuilder) {
    b.receive("free1", "i-init", "free1.x");
    b.broadcast("free1.x", "aux1", "done1");
    for j in 1..=2 {
        let b1 = format!("free2.b1_{j}");
        b.receive("free2", &format!("i-ask_{j}"), &b1);
        b.receive(&b1, &format!("i-ok_{j}"), "free2.b2");
    }
    b.broadcast("free2.b2", "aux2", "done2");
    for j in 1..=2 {
        b.receive("free3", &format!("i-ok_{j}"), "free3.c");
    }
    b.broadcast("free3.c", "aux3", "done3");
    for (j, p) in [(1, "z"), (2, "x")] {
        let (s1, s2) = (format!("free4.{p}1"), format!("free4.{p}2"));
        b.receive("free4", &format!("t-ask_{j}"), &s1);
        b.broadcast(&s1, &format!("t-ack_{j}"), &s2);
        b.receive(&s2, &format!("t-ok_{j}"), "done4");
    }
    for j in 1..=2 {
        let y1 = format!("free4.y1_{j}");
        b.receive("free4", &format!("d-ask_{j}"), &y1);
        b.receive(&y1, &format!("d-ok_{j}"), "free4.y2");
    }
    b.broadcast("free4.y2", "aux4", "done4");
    for j in 1..=2 {
        b.receive("free5", &format!("d-ok_{j}"), "free5.e1");
        b.receive("free5", &format!("t-ok_{j}"), "free5.e1");
    }
    b.broadcast("free5.e1", "aux5", "done5");
}

/// Control chain, counter gadgets and auxiliary gadgets, completed with a
/// sink for every reception not drawn. Halt, retired counters and finished
/// auxiliaries absorb every message instead.
pub fn encode_minsky(m: &MinskyMachine) -> Result<MinskyEncoding, MinskyError> {
    let reserved = aux_states();
    if let Some(l) = m.locations.iter().find(|l| reserved.contains(l) || l.contains('.')) {
        return Err(MinskyError::ReservedName(l.clone()));
    }
    let mut b = ProtocolBuilder::new();
    b.state(START);
    messages(&mut b);
    control(&mut b, m);
    counters(&mut b);
    auxiliaries(&mut b);

    let mut initial = vec![START.to_string(), "zero1".into(), "zero2".into()];
    initial.extend((1..=5).map(|i| format!("free{i}")));
    for s in &initial {
        b.initial(s);
    }
    let mut targets = vec![m.halt.clone()];
    targets.extend((1..=2).flat_map(|j| [format!("one{j}"), format!("zero{j}'")]));
    targets.extend((1..=5).map(|i| format!("done{i}")));
    for s in &targets {
        b.target(s);
    }
    let absorbing: BTreeSet<_> = targets
        .iter()
        .filter(|s| !s.starts_with("one"))
        .map(|s| b.state(s))
        .collect();
    let protocol = b.build()?.complete_with_sink(SINK, &absorbing)?;
    Ok(MinskyEncoding { protocol, targets })
}
