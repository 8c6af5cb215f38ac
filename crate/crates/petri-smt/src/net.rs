//! Ordinary safe place/transition nets and the `.pnet` text format.
//!
//! The format is line-oriented UTF-8 with `#` comments:
//!
//! ```text
//! net <name>
//! places <id> <id> ...          # one or more lines, cumulative
//! transition <id>: <in-ids> -> <out-ids>
//! marking <id> <id> ...
//! ```
//!
//! Places must be declared before any transition or marking line that
//! references them. Arcs are sets, so the net is ordinary by construction.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transition {
    pub id: String,
    pub inputs: BTreeSet<String>,
    pub outputs: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetriNet {
    pub name: String,
    /// Place identifiers in declaration order.
    pub places: Vec<String>,
    pub transitions: Vec<Transition>,
    pub initial_marking: BTreeSet<String>,
}

impl PetriNet {
    pub fn place_count(&self) -> u32 {
        self.places.len() as u32
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetParseError {
    #[error("line {line}: duplicate identifier `{id}`")]
    DuplicateIdentifier { line: usize, id: String },
    #[error("line {line}: `{id}` is not a declared place")]
    UnknownPlaceInArc { line: usize, id: String },
    #[error("net declares no places")]
    EmptyNet,
    #[error("line {line}: {msg}")]
    SyntaxError { line: usize, msg: String },
}

fn syntax(line: usize, msg: impl Into<String>) -> NetParseError {
    NetParseError::SyntaxError { line, msg: msg.into() }
}

fn check_id(line: usize, id: &str) -> Result<(), NetParseError> {
    if id == "->" || id.contains('#') {
        return Err(syntax(line, format!("`{id}` is not a valid identifier")));
    }
    Ok(())
}

/// Parses `.pnet` text into a [`PetriNet`].
pub fn parse_net(text: &str) -> Result<PetriNet, NetParseError> {
    let mut name: Option<String> = None;
    let mut places: Vec<String> = Vec::new();
    let mut place_set: BTreeSet<String> = BTreeSet::new();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut transition_ids: BTreeSet<String> = BTreeSet::new();
    let mut marking: BTreeSet<String> = BTreeSet::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let mut tokens = content.split_whitespace();
        let Some(keyword) = tokens.next() else { continue };
        match keyword {
            "net" => {
                let id = tokens.next().ok_or_else(|| syntax(line, "missing net name"))?;
                check_id(line, id)?;
                if tokens.next().is_some() {
                    return Err(syntax(line, "trailing tokens after net name"));
                }
                if name.replace(id.to_string()).is_some() {
                    return Err(syntax(line, "duplicate `net` line"));
                }
            }
            "places" => {
                let mut any = false;
                for id in tokens {
                    any = true;
                    check_id(line, id)?;
                    if !place_set.insert(id.to_string()) {
                        return Err(NetParseError::DuplicateIdentifier {
                            line,
                            id: id.to_string(),
                        });
                    }
                    places.push(id.to_string());
                }
                if !any {
                    return Err(syntax(line, "`places` line lists no identifiers"));
                }
            }
            "transition" => {
                let rest: Vec<&str> = tokens.collect();
                let (id, arcs) = match rest.split_first() {
                    Some((first, tail)) if first.ends_with(':') && first.len() > 1 => {
                        (first.trim_end_matches(':'), tail)
                    }
                    Some((first, tail)) if tail.first() == Some(&":") => (*first, &tail[1..]),
                    _ => return Err(syntax(line, "expected `transition <id>: <in> -> <out>`")),
                };
                check_id(line, id)?;
                if !transition_ids.insert(id.to_string()) {
                    return Err(NetParseError::DuplicateIdentifier { line, id: id.to_string() });
                }
                let arrow = arcs
                    .iter()
                    .position(|t| *t == "->")
                    .ok_or_else(|| syntax(line, "missing `->` in transition"))?;
                if arcs[arrow + 1..].contains(&"->") {
                    return Err(syntax(line, "more than one `->` in transition"));
                }
                let side = |ids: &[&str]| -> Result<BTreeSet<String>, NetParseError> {
                    let mut set = BTreeSet::new();
                    for id in ids {
                        if !place_set.contains(*id) {
                            return Err(NetParseError::UnknownPlaceInArc {
                                line,
                                id: id.to_string(),
                            });
                        }
                        set.insert(id.to_string());
                    }
                    Ok(set)
                };
                transitions.push(Transition {
                    id: id.to_string(),
                    inputs: side(&arcs[..arrow])?,
                    outputs: side(&arcs[arrow + 1..])?,
                });
            }
            "marking" => {
                for id in tokens {
                    if !place_set.contains(id) {
                        return Err(NetParseError::UnknownPlaceInArc { line, id: id.to_string() });
                    }
                    marking.insert(id.to_string());
                }
            }
            other => return Err(syntax(line, format!("unknown keyword `{other}`"))),
        }
    }

    if places.is_empty() {
        return Err(NetParseError::EmptyNet);
    }
    Ok(PetriNet {
        name: name.unwrap_or_else(|| "net".to_string()),
        places,
        transitions,
        initial_marking: marking,
    })
}

/// Renders a net back to `.pnet` text; `parse_net` of the result is identical.
pub fn print_net(net: &PetriNet) -> String {
    let mut out = String::new();
    writeln!(out, "net {}", net.name).unwrap();
    writeln!(out, "places {}", net.places.join(" ")).unwrap();
    for t in &net.transitions {
        let ins: Vec<&str> = t.inputs.iter().map(String::as_str).collect();
        let outs: Vec<&str> = t.outputs.iter().map(String::as_str).collect();
        writeln!(out, "transition {}: {} -> {}", t.id, ins.join(" "), outs.join(" ")).unwrap();
    }
    if !net.initial_marking.is_empty() {
        let marked: Vec<&str> = net.initial_marking.iter().map(String::as_str).collect();
        writeln!(out, "marking {}", marked.join(" ")).unwrap();
    }
    out
}

/// Bijection between places and 1-based place numbers, assigned by
/// declaration order in the input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaceNumbering {
    ordered: Vec<String>,
    index: HashMap<String, u32>,
}

impl PlaceNumbering {
    pub fn new(ordered_places: &[String]) -> Self {
        let index = ordered_places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i as u32 + 1))
            .collect();
        PlaceNumbering { ordered: ordered_places.to_vec(), index }
    }

    /// The place number `#p` in `1..=count`.
    pub fn number_of(&self, place: &str) -> Option<u32> {
        self.index.get(place).copied()
    }

    pub fn place(&self, number: u32) -> Option<&str> {
        self.ordered.get(number.checked_sub(1)? as usize).map(String::as_str)
    }

    pub fn count(&self) -> u32 {
        self.ordered.len() as u32
    }

    pub fn places(&self) -> &[String] {
        &self.ordered
    }

    /// `(number, place)` pairs in ascending number order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, &str)> {
        self.ordered.iter().enumerate().map(|(i, p)| (i as u32 + 1, p.as_str()))
    }
}

/// Numbers the net's places by declaration order, 1-based.
pub fn numbering(net: &PetriNet) -> PlaceNumbering {
    PlaceNumbering::new(&net.places)
}
