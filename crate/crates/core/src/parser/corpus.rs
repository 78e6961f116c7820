//! Utterance corpus with expected parses.
//!
//! One record per line: `utterance => target ; relation ; reference`, or
//! `utterance => !` for commands that must be rejected. A leading `@kw`
//! marks the relation-keyword sub-suite. Descriptors are written as
//! `[adj, adj] identity`, `<word>` for a pronoun, `-` for none. Relations
//! use snake case names, ordinals as `ordinal(leftmost)` or `ordinal(3)`.

use std::fmt;

use super::{parse, ObjectDescriptor, OrdinalPosition, ParsedCommand, Relation};

/// The committed corpus.
pub const COMMAND_CORPUS: &str = include_str!("../../data/commands.corpus");

#[derive(Debug, Clone, PartialEq)]
pub enum Expected {
    Command(ParsedCommand),
    Rejected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub line: usize,
    pub utterance: String,
    pub keyword: bool,
    pub expected: Expected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFormatError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for CorpusFormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "corpus line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for CorpusFormatError {}

fn parse_descriptor(text: &str) -> Result<Option<ObjectDescriptor>, String> {
    let text = text.trim();
    if text == "-" {
        return Ok(None);
    }
    let (adjectives, rest) = match text.strip_prefix('[') {
        Some(inner) => {
            let (list, rest) = inner.split_once(']').ok_or("unclosed adjective list")?;
            let adjs: Vec<&str> = list.split(',').map(str::trim).filter(|a| !a.is_empty()).collect();
            (adjs, rest.trim())
        }
        None => (Vec::new(), text),
    };
    if let Some(word) = rest.strip_prefix('<').and_then(|r| r.strip_suffix('>')) {
        return Ok(Some(ObjectDescriptor::pronoun(word, &adjectives)));
    }
    if rest.is_empty() {
        return Err("missing identity".into());
    }
    Ok(Some(ObjectDescriptor::new(rest, &adjectives)))
}

fn parse_relation(text: &str) -> Result<Relation, String> {
    let text = text.trim();
    if let Some(pos) = text.strip_prefix("ordinal(").and_then(|r| r.strip_suffix(')')) {
        let position = match pos {
            "leftmost" => OrdinalPosition::Leftmost,
            "rightmost" => OrdinalPosition::Rightmost,
            "middle" => OrdinalPosition::Middle,
            n => OrdinalPosition::Nth(n.parse().map_err(|_| format!("bad ordinal {n:?}"))?),
        };
        return Ok(Relation::Ordinal(position));
    }
    Ok(match text {
        "left" => Relation::Left,
        "right" => Relation::Right,
        "above" => Relation::Above,
        "below" => Relation::Below,
        "behind" => Relation::Behind,
        "in_front" => Relation::InFront,
        "between" => Relation::Between,
        "part_of" => Relation::PartOf,
        "includes" => Relation::Includes,
        "next_to" => Relation::NextTo,
        other => return Err(format!("unknown relation {other:?}")),
    })
}

pub fn parse_corpus(text: &str) -> Result<Vec<CorpusEntry>, CorpusFormatError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |message: String| CorpusFormatError { line, message };
        let (keyword, raw) = match raw.strip_prefix("@kw") {
            Some(rest) => (true, rest.trim()),
            None => (false, raw),
        };
        let (utterance, expected) = raw.split_once("=>").ok_or_else(|| err("missing =>".into()))?;
        let expected = expected.trim();
        let expected = if expected == "!" {
            Expected::Rejected
        } else {
            let fields: Vec<&str> = expected.split(';').collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let target = parse_descriptor(fields[0]).map_err(&err)?.ok_or_else(|| err("target cannot be -".into()))?;
            let relation = parse_relation(fields[1]).map_err(&err)?;
            let reference = parse_descriptor(fields[2]).map_err(&err)?;
            Expected::Command(ParsedCommand { target, reference, relation, resolved_from: None })
        };
        entries.push(CorpusEntry { line, utterance: utterance.trim().to_string(), keyword, expected });
    }
    Ok(entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusFailure {
    pub line: usize,
    pub utterance: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusReport {
    pub total: usize,
    pub correct: usize,
    pub keyword_total: usize,
    pub keyword_correct: usize,
    pub failures: Vec<CorpusFailure>,
}

impl CorpusReport {
    pub fn accuracy(&self) -> f64 {
        if self.total == 0 { 0.0 } else { self.correct as f64 / self.total as f64 }
    }

    pub fn keyword_accuracy(&self) -> f64 {
        if self.keyword_total == 0 { 0.0 } else { self.keyword_correct as f64 / self.keyword_total as f64 }
    }
}

fn show(expected: &Expected) -> String {
    match expected {
        Expected::Rejected => "rejected".into(),
        Expected::Command(c) => format!("{c:?}"),
    }
}

/// Parses every utterance (without history) and compares structures.
pub fn evaluate(entries: &[CorpusEntry]) -> CorpusReport {
    let mut report = CorpusReport::default();
    for entry in entries {
        let got = parse(&entry.utterance);
        let ok = match (&entry.expected, &got) {
            (Expected::Rejected, Err(_)) => true,
            (Expected::Command(want), Ok(have)) => want.same_structure(have),
            _ => false,
        };
        report.total += 1;
        report.keyword_total += entry.keyword as usize;
        if ok {
            report.correct += 1;
            report.keyword_correct += entry.keyword as usize;
        } else {
            report.failures.push(CorpusFailure {
                line: entry.line,
                utterance: entry.utterance.clone(),
                expected: show(&entry.expected),
                got: match got {
                    Ok(c) => format!("{c:?}"),
                    Err(e) => format!("error: {e}"),
                },
            });
        }
    }
    report
}

pub fn evaluate_committed() -> Result<CorpusReport, CorpusFormatError> {
    Ok(evaluate(&parse_corpus(COMMAND_CORPUS)?))
}
