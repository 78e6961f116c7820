//! Rule-based referring-expression parser.
//!
//! Turns a free-form correction command ("the red one to the left of the
//! album") into a target descriptor, an optional reference descriptor and a
//! relation, then resolves pronouns and implicit references against the
//! dialog history.

pub mod corpus;
pub mod lexicon;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dialog::DialogTurn;
use crate::geometry::Side;
use lexicon::{
    canonical_adjective, is_number_word, normalize_identity, ordinal_text, ordinal_word, position_word, KeywordKind, COMPOUND_NOUNS,
    DETERMINERS, FUNCTION_WORDS, LEADING_FILLERS, PRONOUNS, RELATION_PHRASES, TRAILING_FILLERS, WHOLE_WORDS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("could not find an object in {0:?}")]
    Unparseable(String),
    #[error("{0:?} refers back to a selection, but nothing has been described yet")]
    UnresolvedPronoun(String),
}

/// What the user said about one object.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ObjectDescriptor {
    /// Head noun phrase, singular ("beverage can"); empty for pronouns.
    pub identity: String,
    pub adjectives: Vec<String>,
    #[serde(default)]
    pub is_pronoun: bool,
    #[serde(default)]
    pub raw_span: String,
}

impl ObjectDescriptor {
    pub fn new(identity: &str, adjectives: &[&str]) -> Self {
        ObjectDescriptor {
            identity: identity.to_string(),
            adjectives: adjectives.iter().map(|a| a.to_string()).collect(),
            is_pronoun: false,
            raw_span: String::new(),
        }
    }

    pub fn pronoun(word: &str, adjectives: &[&str]) -> Self {
        ObjectDescriptor {
            identity: String::new(),
            adjectives: adjectives.iter().map(|a| a.to_string()).collect(),
            is_pronoun: true,
            raw_span: word.to_string(),
        }
    }

    /// Equality ignoring the source span.
    pub fn same_structure(&self, other: &ObjectDescriptor) -> bool {
        self.identity == other.identity && self.adjectives == other.adjectives && self.is_pronoun == other.is_pronoun
    }

    fn push_adjective(&mut self, adj: &str) {
        if !self.adjectives.iter().any(|a| a == adj) {
            self.adjectives.push(adj.to_string());
        }
    }

    /// Canonical noun phrase ("the red cup", "the red one", "it").
    pub fn render(&self) -> String {
        let mut words: Vec<&str> = self.adjectives.iter().map(String::as_str).collect();
        if self.is_pronoun {
            if words.is_empty() {
                return "it".to_string();
            }
            words.push("one");
        } else {
            words.push(&self.identity);
        }
        format!("the {}", words.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "snake_case")]
pub enum OrdinalPosition {
    Leftmost,
    Rightmost,
    Middle,
    Nth(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "position", rename_all = "snake_case")]
pub enum Relation {
    Left,
    Right,
    Above,
    Below,
    Behind,
    InFront,
    Between,
    Ordinal(OrdinalPosition),
    PartOf,
    Includes,
    NextTo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalAxis {
    Horizontal,
}

/// How the disambiguator treats a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RelationAxis {
    Geometric { side: Side },
    Ordinal { axis: OrdinalAxis, position: OrdinalPosition },
    Proximity,
    Belonging,
}

pub fn relation_axis(relation: Relation) -> RelationAxis {
    match relation {
        Relation::Left => RelationAxis::Geometric { side: Side::Left },
        Relation::Right => RelationAxis::Geometric { side: Side::Right },
        Relation::Above => RelationAxis::Geometric { side: Side::Above },
        Relation::Below => RelationAxis::Geometric { side: Side::Below },
        Relation::Ordinal(position) => RelationAxis::Ordinal { axis: OrdinalAxis::Horizontal, position },
        Relation::NextTo | Relation::Behind | Relation::InFront | Relation::Between => RelationAxis::Proximity,
        Relation::PartOf | Relation::Includes => RelationAxis::Belonging,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParsedCommand {
    pub target: ObjectDescriptor,
    #[serde(default)]
    pub reference: Option<ObjectDescriptor>,
    pub relation: Relation,
    /// History turn a pronoun or implicit reference was resolved from.
    #[serde(default)]
    pub resolved_from: Option<usize>,
}

impl ParsedCommand {
    pub fn same_structure(&self, other: &ParsedCommand) -> bool {
        self.target.same_structure(&other.target)
            && self.relation == other.relation
            && self.resolved_from == other.resolved_from
            && match (&self.reference, &other.reference) {
                (None, None) => true,
                (Some(a), Some(b)) => a.same_structure(b),
                _ => false,
            }
    }

    /// Canonical text; reparsing it yields the same structure.
    pub fn render(&self) -> String {
        let reference = self.reference.as_ref().map(ObjectDescriptor::render);
        let target = self.target.render();
        let with_ref = |phrase: &str, bare: &str| match &reference {
            Some(r) => format!("{target} {phrase} {r}"),
            None if bare.is_empty() => target.clone(),
            None => format!("{target} {bare}"),
        };
        match self.relation {
            Relation::Left => with_ref("to the left of", "to the left"),
            Relation::Right => with_ref("to the right of", "to the right"),
            Relation::Above => with_ref("above", "above"),
            Relation::Below => with_ref("below", "below"),
            Relation::Behind => with_ref("behind", "behind"),
            Relation::InFront => with_ref("in front of", "in front"),
            Relation::Between => with_ref("between", "between"),
            Relation::NextTo => with_ref("next to", ""),
            Relation::PartOf => with_ref("that is part of", "as a part"),
            Relation::Includes => match &reference {
                Some(r) => format!("{target} with {r}"),
                None => {
                    let mut t = self.target.clone();
                    t.adjectives.insert(0, "whole".into());
                    t.render()
                }
            },
            Relation::Ordinal(pos) => {
                let word = match pos {
                    OrdinalPosition::Leftmost => "leftmost".to_string(),
                    OrdinalPosition::Rightmost => "rightmost".to_string(),
                    OrdinalPosition::Middle => "middle".to_string(),
                    OrdinalPosition::Nth(n) => ordinal_text(n),
                };
                let mut t = self.target.clone();
                t.adjectives.insert(0, word);
                let head = if t.is_pronoun && self.target.adjectives.is_empty() {
                    format!("the {} one", t.adjectives[0])
                } else {
                    t.render()
                };
                match &reference {
                    Some(r) => format!("{head} among {r}"),
                    None => head,
                }
            }
        }
    }
}

fn tokenize(utterance: &str) -> Vec<String> {
    let cleaned: String = utterance
        .to_lowercase()
        .chars()
        .map(|c| match c {
            '\u{2019}' | '\u{2018}' => '\'',
            c if c.is_alphanumeric() || c == '\'' || c == '-' => c,
            _ => ' ',
        })
        .collect();
    cleaned
        .split_whitespace()
        .map(|t| t.trim_matches(|c| c == '\'' || c == '-'))
        .filter(|t| !t.is_empty())
        .map(|t| match t {
            "left-most" => "leftmost".to_string(),
            "right-most" => "rightmost".to_string(),
            "that's" => "that's".to_string(),
            other => other.to_string(),
        })
        .collect()
}

fn starts_with_phrase(tokens: &[String], phrase: &str) -> usize {
    let words: Vec<&str> = phrase.split(' ').collect();
    if tokens.len() >= words.len() && tokens.iter().zip(&words).all(|(t, w)| t == w) {
        words.len()
    } else {
        0
    }
}

fn ends_with_phrase(tokens: &[String], phrase: &str) -> usize {
    let words: Vec<&str> = phrase.split(' ').collect();
    if tokens.len() >= words.len() && tokens[tokens.len() - words.len()..].iter().zip(&words).all(|(t, w)| t == w) {
        words.len()
    } else {
        0
    }
}

fn strip_fillers(mut tokens: Vec<String>) -> Vec<String> {
    loop {
        let n = LEADING_FILLERS.iter().map(|p| starts_with_phrase(&tokens, p)).max().unwrap_or(0);
        if n == 0 {
            break;
        }
        tokens.drain(..n);
    }
    loop {
        let n = TRAILING_FILLERS.iter().map(|p| ends_with_phrase(&tokens, p)).max().unwrap_or(0);
        if n == 0 {
            break;
        }
        tokens.truncate(tokens.len() - n);
    }
    tokens
}

#[derive(Debug)]
enum Segment {
    Words(Vec<String>),
    Keyword(KeywordKind),
}

fn segmentize(tokens: &[String]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut words = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let best = RELATION_PHRASES
            .iter()
            .map(|p| (starts_with_phrase(&tokens[i..], p.words), p.relation))
            .filter(|(n, _)| *n > 0)
            .max_by_key(|(n, _)| *n);
        match best {
            Some((n, kind)) => {
                if !words.is_empty() {
                    out.push(Segment::Words(std::mem::take(&mut words)));
                }
                out.push(Segment::Keyword(kind));
                i += n;
            }
            None => {
                words.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    if !words.is_empty() {
        out.push(Segment::Words(words));
    }
    out
}

/// A chunked noun phrase.
#[derive(Debug, Default)]
struct NounPhrase {
    descriptor: Option<ObjectDescriptor>,
    ordinal: Option<OrdinalPosition>,
    position: Option<Relation>,
    whole: bool,
}

fn compound_identity(content: &[String]) -> (usize, String) {
    let singular: Vec<String> = content.iter().map(|w| normalize_identity(w)).collect();
    for take in (2..=content.len().min(3)).rev() {
        let tail = singular[content.len() - take..].join(" ");
        if COMPOUND_NOUNS.iter().any(|c| normalize_identity(c) == tail) {
            return (take, tail);
        }
    }
    (1, singular.last().cloned().unwrap_or_default())
}

fn chunk_noun_phrase(words: &[String]) -> Option<NounPhrase> {
    let mut np = NounPhrase::default();
    let mut adjectives: Vec<String> = Vec::new();
    let mut content: Vec<String> = Vec::new();
    let mut content_start: Option<usize> = None;
    let mut pronoun: Option<String> = None;
    let last = words.len().saturating_sub(1);
    for (i, w) in words.iter().enumerate() {
        let w = w.as_str();
        if WHOLE_WORDS.contains(&w) {
            np.whole = true;
        } else if let Some(o) = ordinal_word(w) {
            np.ordinal = Some(o);
        } else if position_word(w).is_some() && i < last {
            np.position = position_word(w);
        } else if let Some(a) = canonical_adjective(w) {
            adjectives.push(a.to_string());
        } else if i == last && PRONOUNS.contains(&w) {
            pronoun = Some(w.to_string());
        } else if DETERMINERS.contains(&w) || is_number_word(w) {
            continue;
        } else if FUNCTION_WORDS.contains(&w) || PRONOUNS.contains(&w) {
            return None;
        } else {
            content_start.get_or_insert(adjectives.len());
            content.push(w.to_string());
        }
    }
    if pronoun.is_some() && !content.is_empty() {
        return None;
    }
    let raw_span = words.join(" ");
    let mut descriptor = if !content.is_empty() {
        let (taken, identity) = compound_identity(&content);
        // Unknown words before the head noun stay as opaque adjectives, in place.
        let opaque = &content[..content.len() - taken];
        let at = content_start.unwrap_or(adjectives.len());
        let mut all: Vec<String> = adjectives[..at].to_vec();
        all.extend(opaque.iter().cloned());
        all.extend(adjectives[at..].iter().cloned());
        ObjectDescriptor { identity, adjectives: Vec::new(), is_pronoun: false, raw_span }.with_adjectives(all)
    } else if pronoun.is_some() || !adjectives.is_empty() || np.ordinal.is_some() || np.position.is_some() {
        ObjectDescriptor { identity: String::new(), adjectives: Vec::new(), is_pronoun: true, raw_span }.with_adjectives(adjectives)
    } else {
        return Some(np);
    };
    descriptor.adjectives.retain(|a| !a.is_empty());
    np.descriptor = Some(descriptor);
    Some(np)
}

impl ObjectDescriptor {
    fn with_adjectives(mut self, adjectives: Vec<String>) -> Self {
        for a in adjectives {
            self.push_adjective(&a);
        }
        self
    }
}

fn words_before_and(words: &[String]) -> &[String] {
    match words.iter().position(|w| w == "and") {
        Some(i) => &words[..i],
        None => words,
    }
}

/// Parses one utterance. The history is only consulted by
/// [`resolve_pronouns`]; parsing itself is context-free.
pub fn parse(utterance: &str) -> Result<ParsedCommand, ParseError> {
    let unparseable = || ParseError::Unparseable(utterance.to_string());
    let tokens = strip_fillers(tokenize(utterance));
    if tokens.is_empty() {
        return Err(unparseable());
    }
    let segments = segmentize(&tokens);
    let mut iter = segments.into_iter().peekable();
    let target_words = match iter.next() {
        Some(Segment::Words(w)) => w,
        _ => return Err(unparseable()),
    };
    let head = chunk_noun_phrase(&target_words).ok_or_else(unparseable)?;
    let mut target = head.descriptor.ok_or_else(unparseable)?;
    let mut ordinal = head.ordinal;
    let position = head.position;
    let whole = head.whole;
    let mut relation: Option<Relation> = None;
    let mut reference: Option<ObjectDescriptor> = None;

    while let Some(seg) = iter.next() {
        let kind = match seg {
            Segment::Keyword(k) => k,
            // Stray words after a complete phrase.
            Segment::Words(_) => return Err(unparseable()),
        };
        let following = match iter.peek() {
            Some(Segment::Words(_)) => match iter.next() {
                Some(Segment::Words(w)) => w,
                _ => unreachable!(),
            },
            _ => Vec::new(),
        };
        match kind {
            KeywordKind::Connector => {
                let restated = chunk_noun_phrase(&following).ok_or_else(unparseable)?;
                ordinal = ordinal.or(restated.ordinal);
                if let Some(d) = restated.descriptor {
                    if target.is_pronoun && !d.is_pronoun {
                        target.identity = d.identity.clone();
                        target.is_pronoun = false;
                    }
                    for a in &d.adjectives {
                        target.push_adjective(a);
                    }
                }
            }
            KeywordKind::Group => {
                let group = chunk_noun_phrase(&following).ok_or_else(unparseable)?;
                if let Some(d) = group.descriptor {
                    if d.is_pronoun && reference.is_none() {
                        reference = Some(d);
                    }
                }
            }
            KeywordKind::Of if ordinal.is_some() => {
                let group = chunk_noun_phrase(&following).ok_or_else(unparseable)?;
                if let Some(d) = group.descriptor {
                    if d.is_pronoun && reference.is_none() {
                        reference = Some(d);
                    }
                }
            }
            KeywordKind::Of | KeywordKind::Relation(_) => {
                let r = match kind {
                    KeywordKind::Relation(r) => r,
                    _ => Relation::PartOf,
                };
                let ref_words = if r == Relation::Between { words_before_and(&following) } else { &following[..] };
                let np = if ref_words.is_empty() { None } else { Some(chunk_noun_phrase(ref_words).ok_or_else(unparseable)?) };
                let descriptor = np.and_then(|n| n.descriptor);
                if relation.is_none() && reference.is_none() {
                    if ordinal.is_none() {
                        relation = Some(r);
                    }
                    reference = descriptor;
                } else if relation.is_none() && ordinal.is_none() {
                    relation = Some(r);
                }
            }
        }
    }

    let relation = match (ordinal, relation, position) {
        (Some(o), _, _) => Relation::Ordinal(o),
        (None, Some(r), _) => r,
        (None, None, Some(p)) => p,
        (None, None, None) if whole => Relation::Includes,
        _ => Relation::NextTo,
    };
    if target.is_pronoun && target.adjectives.is_empty() && relation == Relation::NextTo && reference.is_none() {
        return Err(unparseable());
    }
    Ok(ParsedCommand { target, reference, relation, resolved_from: None })
}

/// The most recent system description in the history, as a descriptor.
fn last_described(history: &[DialogTurn]) -> Option<(usize, ObjectDescriptor)> {
    history.iter().rev().find_map(|turn| {
        let d = turn.description.as_ref()?;
        if d.is_background() {
            return None;
        }
        let mut desc = ObjectDescriptor::new(&normalize_identity(&d.identity), &[]);
        desc.adjectives = d.adjectives.clone();
        desc.raw_span = d.display_identity();
        Some((turn.index, desc))
    })
}

fn is_spatial(relation: Relation) -> bool {
    matches!(
        relation,
        Relation::Left | Relation::Right | Relation::Above | Relation::Below | Relation::Behind | Relation::InFront | Relation::Between
    )
}

/// Fills pronoun targets and references from the dialog history. A missing
/// reference is inferred only when the command states an explicit spatial
/// relation.
pub fn resolve_pronouns(mut command: ParsedCommand, history: &[DialogTurn]) -> Result<ParsedCommand, ParseError> {
    let needs_target = command.target.is_pronoun;
    let needs_reference = match &command.reference {
        Some(r) => r.is_pronoun && r.adjectives.is_empty(),
        None => is_spatial(command.relation),
    };
    if !needs_target && !needs_reference {
        return Ok(command);
    }
    let last = last_described(history);
    if needs_target {
        let (index, desc) = last.clone().ok_or_else(|| ParseError::UnresolvedPronoun(command.target.raw_span.clone()))?;
        command.target.identity = desc.identity;
        command.target.is_pronoun = false;
        command.resolved_from = Some(index);
    }
    if needs_reference {
        match (last, &command.reference) {
            (Some((index, desc)), _) => {
                command.reference = Some(desc);
                command.resolved_from = Some(index);
            }
            (None, Some(r)) => return Err(ParseError::UnresolvedPronoun(r.raw_span.clone())),
            // Implicit reference with nothing to point at: leave it absent.
            (None, None) => {}
        }
    }
    Ok(command)
}

/// Parse followed by history resolution.
pub fn interpret(utterance: &str, history: &[DialogTurn]) -> Result<ParsedCommand, ParseError> {
    resolve_pronouns(parse(utterance)?, history)
}
