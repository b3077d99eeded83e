//! The line-based protocol language.
//!
//! ```text
//! states q0 q1 q2
//! init q0
//! target q2
//! msg a
//! q0 !a q1    # broadcast
//! q0 ?a q2    # receive
//! sink err     # unspecified receptions lead to a fresh state `err`
//! absorb q2    # ...except in q2, which ignores them
//! ```

use std::fmt::Write as _;

use thiserror::Error;

use crate::model::protocol::{Action, BroadcastProtocol, ProtocolBuilder, ProtocolError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

fn syntax(line: usize, message: impl Into<String>) -> DslError {
    DslError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_protocol(text: &str) -> Result<BroadcastProtocol, DslError> {
    let mut b = ProtocolBuilder::new();
    let mut declared_states = false;
    let mut declared_messages = false;
    let mut sink: Option<(usize, String)> = None;
    let mut absorbing = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let words: Vec<&str> = content.split_whitespace().collect();
        // a state may share its name with a keyword
        let transition = words.len() == 3 && words[1].starts_with(['!', '?']);
        match if transition { "" } else { words[0] } {
            "states" => {
                declared_states = true;
                for w in &words[1..] {
                    if b.lookup_state(w).is_some() {
                        return Err(syntax(line, format!("state '{w}' declared twice")));
                    }
                    b.state(w);
                }
            }
            "msg" | "messages" => {
                declared_messages = true;
                for w in &words[1..] {
                    if b.lookup_message(w).is_some() {
                        return Err(syntax(line, format!("message '{w}' declared twice")));
                    }
                    b.message(w);
                }
            }
            "sink" => {
                if words.len() != 2 {
                    return Err(syntax(line, "expected 'sink NAME'"));
                }
                sink = Some((line, words[1].to_string()));
            }
            "absorb" => absorbing.push((line, words[1..].iter().map(|w| w.to_string()).collect::<Vec<_>>())),
            "init" | "target" => {
                if !declared_states {
                    return Err(syntax(line, "states must be declared first"));
                }
                if words[0] == "target" {
                    b.declare_target();
                }
                for w in &words[1..] {
                    if b.lookup_state(w).is_none() {
                        return Err(syntax(line, format!("unknown state '{w}'")));
                    }
                    if words[0] == "init" {
                        b.initial(w);
                    } else {
                        b.target(w);
                    }
                }
            }
            _ => {
                if words.len() != 3 {
                    return Err(syntax(line, format!("cannot parse '{content}'")));
                }
                let (from, act, to) = (words[0], words[1], words[2]);
                let (broadcast, msg) = if let Some(m) = act.strip_prefix("!!").or_else(|| act.strip_prefix('!')) {
                    (true, m)
                } else if let Some(m) = act.strip_prefix("??").or_else(|| act.strip_prefix('?')) {
                    (false, m)
                } else {
                    return Err(syntax(line, format!("action '{act}' must start with ! or ?")));
                };
                for s in [from, to] {
                    if !declared_states || b.lookup_state(s).is_none() {
                        return Err(syntax(line, format!("unknown state '{s}'")));
                    }
                }
                if !declared_messages || b.lookup_message(msg).is_none() {
                    return Err(syntax(line, format!("unknown message '{msg}'")));
                }
                if broadcast {
                    b.broadcast(from, msg, to);
                } else {
                    b.receive(from, msg, to);
                }
            }
        }
    }
    let proto = b.build()?;
    let Some((line, name)) = sink else {
        if let Some((line, _)) = absorbing.first() {
            return Err(syntax(*line, "'absorb' needs a 'sink' line"));
        }
        return Ok(proto);
    };
    if proto.state_by_name(&name).is_some() {
        return Err(syntax(line, format!("sink '{name}' is already a state")));
    }
    let mut absorb = std::collections::BTreeSet::new();
    for (line, names) in absorbing {
        for w in names {
            absorb.insert(proto.state_by_name(&w).ok_or_else(|| syntax(line, format!("unknown state '{w}'")))?);
        }
    }
    Ok(proto.complete_with_sink(&name, &absorb)?)
}

pub fn print_protocol(p: &BroadcastProtocol) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "states {}", p.state_names().join(" "));
    let names = |set: &std::collections::BTreeSet<_>| -> String {
        set.iter().map(|&s| p.state_name(s)).collect::<Vec<_>>().join(" ")
    };
    let _ = writeln!(out, "init {}", names(p.initial_states()));
    if let Some(t) = p.target_set() {
        let _ = writeln!(out, "target {}", names(t));
    }
    let _ = writeln!(out, "msg {}", p.message_names().join(" "));
    for t in p.transitions() {
        let (sigil, m) = match t.action {
            Action::Broadcast(m) => ('!', m),
            Action::Receive(m) => ('?', m),
        };
        let _ = writeln!(
            out,
            "{} {}{} {}",
            p.state_name(t.source),
            sigil,
            p.message_name(m),
            p.state_name(t.target)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::protocol::{MessageId, StateId};

    const SMALL: &str = "
        # two states
        states a b
        init a
        target b
        msg m
        a !!m b
        a ?m b   # reception
    ";

    #[test]
    fn parses_and_round_trips() {
        let p = parse_protocol(SMALL).unwrap();
        assert_eq!(p.num_states(), 2);
        assert_eq!(p.transitions().len(), 2);
        let again = parse_protocol(&print_protocol(&p)).unwrap();
        assert_eq!(again, p);
    }

    #[test]
    fn reports_line_numbers() {
        let err = parse_protocol("states a\nmsg m\na !m c\n").unwrap_err();
        assert_eq!(
            err,
            DslError::Syntax {
                line: 3,
                message: "unknown state 'c'".into()
            }
        );
        assert!(matches!(parse_protocol("states a\nmsg m\na m a\n"), Err(DslError::Syntax { line: 3, .. })));
        assert!(matches!(parse_protocol("states a\n"), Err(DslError::Protocol(ProtocolError::NoMessages))));
    }

    #[test]
    fn sink_completion() {
        let p = parse_protocol("states a b\ninit a\nmsg m n\na !m b\nsink z\nabsorb b\n").unwrap();
        let (a, b, z) = (StateId(0), StateId(1), StateId(2));
        assert_eq!(p.state_name(z), "z");
        assert_eq!(p.receive_targets(a, MessageId(0)), &[z]);
        assert_eq!(p.receive_targets(b, MessageId(1)), &[b]);
        assert_eq!(p.receive_targets(z, MessageId(1)), &[z]);
        assert!(matches!(parse_protocol("states a\nmsg m\nsink a\n"), Err(DslError::Syntax { line: 3, .. })));
        assert!(matches!(parse_protocol("states a\nmsg m\nabsorb a\n"), Err(DslError::Syntax { line: 3, .. })));
    }

    #[test]
    fn missing_target_line_means_no_target() {
        let p = parse_protocol("states a\ninit a\nmsg m\n").unwrap();
        assert!(p.target_set().is_none());
        let p = parse_protocol("states a\ninit a\ntarget\nmsg m\n").unwrap();
        assert_eq!(p.target_set().map(|t| t.len()), Some(0));
    }

    #[test]
    fn keyword_state_names() {
        let p = parse_protocol("states sink init\ninit init\nmsg m\nsink ?m sink\ninit !m sink\n").unwrap();
        assert_eq!(p.transitions().len(), 2);
        assert_eq!(parse_protocol(&print_protocol(&p)).unwrap(), p);
    }
}
