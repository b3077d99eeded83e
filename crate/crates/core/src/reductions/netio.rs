//! PNML and Tina `.net` export and import.

use std::collections::BTreeMap;
use std::fmt::Write;
use std::str::FromStr;

use thiserror::Error;

use super::petri::{NetTransition, PetriNet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetFormat {
    Pnml,
    DotNet,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetIoError {
    #[error("unknown net format '{0}' (expected pnml or net)")]
    UnknownFormat(String),
    #[error("xml: {0}")]
    Xml(String),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown place '{0}'")]
    UnknownPlace(String),
}

impl FromStr for NetFormat {
    type Err = NetIoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pnml" => Ok(NetFormat::Pnml),
            "net" | "tina" => Ok(NetFormat::DotNet),
            _ => Err(NetIoError::UnknownFormat(s.to_string())),
        }
    }
}

pub fn export_net(net: &PetriNet, format: NetFormat) -> String {
    match format {
        NetFormat::Pnml => to_pnml(net),
        NetFormat::DotNet => to_tina(net),
    }
}

pub fn import_net(text: &str, format: NetFormat) -> Result<PetriNet, NetIoError> {
    match format {
        NetFormat::Pnml => from_pnml(text),
        NetFormat::DotNet => from_tina(text),
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn to_pnml(net: &PetriNet) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    out.push_str("  <net id=\"net\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">\n    <page id=\"page\">\n");
    for (p, name) in net.places.iter().enumerate() {
        let name = escape(name);
        write!(out, "      <place id=\"{name}\"><name><text>{name}</text></name>").unwrap();
        if net.initial[p] > 0 {
            write!(out, "<initialMarking><text>{}</text></initialMarking>", net.initial[p]).unwrap();
        }
        out.push_str("</place>\n");
    }
    let mut arc = 0;
    for (t, tr) in net.transitions.iter().enumerate() {
        writeln!(out, "      <transition id=\"t{t}\"><name><text>{}</text></name></transition>", escape(&tr.name)).unwrap();
        let arcs = tr
            .pre
            .iter()
            .map(|&(p, w)| (escape(&net.places[p]), format!("t{t}"), w))
            .chain(tr.post.iter().map(|&(p, w)| (format!("t{t}"), escape(&net.places[p]), w)));
        for (src, dst, w) in arcs {
            write!(out, "      <arc id=\"a{arc}\" source=\"{src}\" target=\"{dst}\">").unwrap();
            if w != 1 {
                write!(out, "<inscription><text>{w}</text></inscription>").unwrap();
            }
            out.push_str("</arc>\n");
            arc += 1;
        }
    }
    out.push_str("    </page>\n    <toolspecific tool=\"rbnet\" version=\"1\">\n      <finalMarking>\n");
    for (p, &c) in net.final_marking.iter().enumerate().filter(|(_, &c)| c > 0) {
        writeln!(out, "        <place idref=\"{}\">{c}</place>", escape(&net.places[p])).unwrap();
    }
    out.push_str("      </finalMarking>\n    </toolspecific>\n  </net>\n</pnml>\n");
    out
}

fn text_of(node: roxmltree::Node, child: &str) -> Option<String> {
    let c = node.children().find(|c| c.has_tag_name(child))?;
    let t = c.children().find(|c| c.has_tag_name("text")).or(Some(c))?;
    t.text().map(|s| s.trim().to_string())
}

fn count(s: &str) -> Result<u32, NetIoError> {
    s.trim().parse().map_err(|_| NetIoError::Xml(format!("bad token count '{s}'")))
}

fn from_pnml(text: &str) -> Result<PetriNet, NetIoError> {
    let doc = roxmltree::Document::parse(text).map_err(|e| NetIoError::Xml(e.to_string()))?;
    let root = doc.root_element();
    let mut places = Vec::new();
    let mut place_ix = BTreeMap::new();
    let mut initial = Vec::new();
    let mut trans_ix = BTreeMap::new();
    let mut transitions = Vec::new();
    for n in root.descendants().filter(|n| n.has_tag_name("place") && n.attribute("id").is_some()) {
        let id = n.attribute("id").unwrap();
        place_ix.insert(id.to_string(), places.len());
        places.push(text_of(n, "name").unwrap_or_else(|| id.to_string()));
        initial.push(text_of(n, "initialMarking").map(|s| count(&s)).transpose()?.unwrap_or(0));
    }
    for n in root.descendants().filter(|n| n.has_tag_name("transition")) {
        let id = n.attribute("id").ok_or_else(|| NetIoError::Xml("transition without id".into()))?;
        trans_ix.insert(id.to_string(), transitions.len());
        transitions.push(NetTransition {
            name: text_of(n, "name").unwrap_or_else(|| id.to_string()),
            pre: Vec::new(),
            post: Vec::new(),
        });
    }
    for n in root.descendants().filter(|n| n.has_tag_name("arc")) {
        let (src, dst) = match (n.attribute("source"), n.attribute("target")) {
            (Some(s), Some(t)) => (s, t),
            _ => return Err(NetIoError::Xml("arc without endpoints".into())),
        };
        let w = text_of(n, "inscription").map(|s| count(&s)).transpose()?.unwrap_or(1);
        match (place_ix.get(src), trans_ix.get(dst), trans_ix.get(src), place_ix.get(dst)) {
            (Some(&p), Some(&t), _, _) => transitions[t].pre.push((p, w)),
            (_, _, Some(&t), Some(&p)) => transitions[t].post.push((p, w)),
            _ => return Err(NetIoError::Xml(format!("arc {src} -> {dst} must join a place and a transition"))),
        }
    }
    for t in &mut transitions {
        t.pre = merge(&t.pre);
        t.post = merge(&t.post);
    }
    let mut final_marking = vec![0; places.len()];
    for n in root.descendants().filter(|n| n.has_tag_name("finalMarking")) {
        for p in n.children().filter(|c| c.has_tag_name("place")) {
            let id = p.attribute("idref").unwrap_or_default();
            let &ix = place_ix.get(id).ok_or_else(|| NetIoError::UnknownPlace(id.to_string()))?;
            final_marking[ix] = count(p.text().unwrap_or("1"))?;
        }
    }
    Ok(PetriNet {
        places,
        transitions,
        initial,
        final_marking,
    })
}

fn merge(arcs: &[(usize, u32)]) -> Vec<(usize, u32)> {
    let mut m: BTreeMap<usize, u32> = BTreeMap::new();
    for &(p, w) in arcs {
        *m.entry(p).or_default() += w;
    }
    m.into_iter().collect()
}

fn weighted(net: &PetriNet, arcs: &[(usize, u32)]) -> String {
    arcs.iter()
        .map(|&(p, w)| if w == 1 { net.places[p].clone() } else { format!("{}*{w}", net.places[p]) })
        .collect::<Vec<_>>()
        .join(" ")
}

fn to_tina(net: &PetriNet) -> String {
    let mut out = String::from("net rbnet\n");
    for (p, name) in net.places.iter().enumerate() {
        match net.initial[p] {
            0 => writeln!(out, "pl {name}").unwrap(),
            c => writeln!(out, "pl {name} ({c})").unwrap(),
        }
    }
    for t in &net.transitions {
        writeln!(out, "tr {} {} -> {}", t.name, weighted(net, &t.pre), weighted(net, &t.post)).unwrap();
    }
    let fin: Vec<(usize, u32)> = net.final_marking.iter().enumerate().filter(|(_, &c)| c > 0).map(|(p, &c)| (p, c)).collect();
    writeln!(out, "# final: {}", weighted(net, &fin)).unwrap();
    out
}

fn from_tina(text: &str) -> Result<PetriNet, NetIoError> {
    let mut places: Vec<String> = Vec::new();
    let mut initial = Vec::new();
    let mut ix: BTreeMap<String, usize> = BTreeMap::new();
    let mut transitions = Vec::new();
    let mut fin_line = None;
    let mut place = |name: &str, places: &mut Vec<String>, initial: &mut Vec<u32>| {
        *ix.entry(name.to_string()).or_insert_with(|| {
            places.push(name.to_string());
            initial.push(0);
            places.len() - 1
        })
    };
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let err = |message: &str| NetIoError::Syntax {
            line,
            message: message.to_string(),
        };
        if let Some(f) = raw.trim().strip_prefix("# final:") {
            fin_line = Some((line, f.to_string()));
            continue;
        }
        let body = raw.split('#').next().unwrap().trim();
        let mut words = body.split_whitespace();
        match words.next() {
            None | Some("net") => {}
            Some("pl") => {
                let name = words.next().ok_or_else(|| err("place without a name"))?;
                let p = place(name, &mut places, &mut initial);
                if let Some(m) = words.next() {
                    let c = m.strip_prefix('(').and_then(|m| m.strip_suffix(')')).ok_or_else(|| err("expected (marking)"))?;
                    initial[p] = c.parse().map_err(|_| err("bad marking"))?;
                }
            }
            Some("tr") => {
                let name = words.next().ok_or_else(|| err("transition without a name"))?;
                let rest: Vec<&str> = words.collect();
                let arrow = rest.iter().position(|&w| w == "->").ok_or_else(|| err("expected ->"))?;
                let mut side = |ws: &[&str]| -> Result<Vec<(usize, u32)>, NetIoError> {
                    let mut arcs = Vec::new();
                    for w in ws {
                        let (p, c) = match w.split_once('*') {
                            Some((p, c)) => (p, c.parse().map_err(|_| err("bad weight"))?),
                            None => (*w, 1),
                        };
                        arcs.push((place(p, &mut places, &mut initial), c));
                    }
                    Ok(merge(&arcs))
                };
                let pre = side(&rest[..arrow])?;
                let post = side(&rest[arrow + 1..])?;
                transitions.push(NetTransition {
                    name: name.to_string(),
                    pre,
                    post,
                });
            }
            Some(other) => return Err(err(&format!("unexpected '{other}'"))),
        }
    }
    let mut final_marking = vec![0; places.len()];
    if let Some((line, f)) = fin_line {
        for w in f.split_whitespace() {
            let (p, c) = w.split_once('*').unwrap_or((w, "1"));
            let &i = ix.get(p).ok_or_else(|| NetIoError::UnknownPlace(p.to_string()))?;
            final_marking[i] = c.parse().map_err(|_| NetIoError::Syntax {
                line,
                message: "bad final marking".into(),
            })?;
        }
    }
    Ok(PetriNet {
        places,
        transitions,
        initial,
        final_marking,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_protocol;
    use crate::reductions::petri::compile_to_petri;

    fn net() -> PetriNet {
        let p = parse_protocol(include_str!("../../assets/fig1.rbn")).unwrap();
        compile_to_petri(&p, 2)
    }

    #[test]
    fn round_trips() {
        let n = net();
        for f in [NetFormat::Pnml, NetFormat::DotNet] {
            assert_eq!(import_net(&export_net(&n, f), f).unwrap(), n, "{f:?}");
        }
    }

    #[test]
    fn weights_and_formats() {
        let text = "net x\npl a (2)\npl b\ntr t a*2 -> b a\n# final: b\n";
        let n = import_net(text, NetFormat::DotNet).unwrap();
        assert_eq!(n.transitions[0].pre, vec![(0, 2)]);
        assert_eq!(n.transitions[0].post, vec![(0, 1), (1, 1)]);
        assert_eq!(n.final_marking, vec![0, 1]);
        let back = import_net(&export_net(&n, NetFormat::Pnml), NetFormat::Pnml).unwrap();
        assert_eq!(back, n);
        assert!(matches!("dot".parse::<NetFormat>(), Err(NetIoError::UnknownFormat(_))));
        assert!(matches!(import_net("tr t a b", NetFormat::DotNet), Err(NetIoError::Syntax { line: 1, .. })));
        assert!(import_net("<pnml", NetFormat::Pnml).is_err());
    }
}
