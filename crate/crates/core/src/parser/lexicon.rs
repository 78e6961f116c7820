//! Closed word lists for the referring-expression parser and the oracle scorer.

use crate::colors::canonical_color;

use super::{OrdinalPosition, Relation};

pub const SIZE_TERMS: &[&str] = &["small", "large", "big", "tiny"];
pub const SHAPE_TERMS: &[&str] = &["round", "rectangular", "square"];
pub const MATERIAL_TERMS: &[&str] = &["metal", "plastic", "glass", "wooden", "paper"];
pub const TEXTURE_TERMS: &[&str] = &["shiny", "striped", "smooth"];

/// Multi-word object names recognized as a single identity.
pub const COMPOUND_NOUNS: &[&str] = &[
    "beverage can",
    "soda can",
    "snack bag",
    "chip bag",
    "carrot poster",
    "water bottle",
    "tissue box",
    "game controller",
    "tape measure",
    "bear toy",
    "potted plant",
    "coffee cup",
    "tea box",
    "paper cup",
    "pencil case",
    "glasses case",
];

/// Groups of names that refer to the same kind of object.
pub const SYNONYMS: &[&[&str]] = &[
    &["beverage can", "soda can", "can", "soda"],
    &["snack bag", "chip bag", "bag"],
    &["cup", "coffee cup", "mug"],
    &["bottle", "water bottle"],
    &["plant", "potted plant"],
    &["phone", "cellphone", "smartphone"],
    &["album", "record"],
    &["marker", "pen"],
    &["notebook", "book"],
    &["headphone", "headset"],
];

pub(crate) const DETERMINERS: &[&str] = &[
    "the", "a", "an", "this", "that", "these", "those", "some", "any", "only", "just", "another", "other", "same", "my",
];

pub(crate) const PRONOUNS: &[&str] = &["it", "them", "they", "this", "that", "those", "these", "one", "ones", "thing", "things", "object", "objects", "item"];

/// Words that can never be part of a noun phrase.
pub(crate) const FUNCTION_WORDS: &[&str] = &[
    "is", "are", "was", "be", "not", "what", "want", "wanted", "select", "selected", "choose", "pick", "try", "again", "i", "you", "me",
    "we", "to", "do", "does", "did", "can't", "cannot", "isn't", "no", "yes", "please", "wrong", "and", "or", "but", "which", "who",
    "where", "how", "why", "am", "have", "has", "had", "meant", "mean", "said", "say", "see", "look", "looking", "looked", "at", "in",
    "on", "for", "from", "of", "with", "by", "as", "if", "so", "then", "there", "here", "its", "it's", "i'm", "i've", "your", "correct",
    "okay", "ok", "sorry", "hmm", "um", "uh", "again", "different", "else", "not", "wait",
];

/// Leading phrases stripped before parsing, longest first.
pub(crate) const LEADING_FILLERS: &[&str] = &[
    "i've selected",
    "i have selected",
    "do you want to select",
    "i want you to select",
    "i want to select",
    "i would like to select",
    "i'd like to select",
    "i would like",
    "i'd like",
    "i want",
    "i meant",
    "i mean",
    "can you select",
    "could you select",
    "would you select",
    "can you",
    "could you",
    "would you",
    "please select",
    "not that one",
    "not that",
    "no it's",
    "no it is",
    "actually",
    "instead",
    "please",
    "select",
    "choose",
    "pick",
    "highlight",
    "show me",
    "give me",
    "find",
    "get",
    "nope",
    "no",
    "wrong",
    "oh",
    "okay",
    "ok",
    "um",
    "uh",
    "it's",
    "it is",
];

pub(crate) const TRAILING_FILLERS: &[&str] = &["instead", "please", "for me", "then", "again", "one more time", "in the area you looked at"];

/// Phrases introducing a relation. `takes_reference` is false for the
/// short forms that never have an object after them.
pub(crate) struct RelationPhrase {
    pub words: &'static str,
    pub relation: KeywordKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum KeywordKind {
    Relation(Relation),
    /// "among", "out of": a group for an ordinal.
    Group,
    /// "that is", "which is": restatement.
    Connector,
    /// bare "of": part-of, or a group after an ordinal.
    Of,
}

macro_rules! phrase {
    ($w:expr, $k:expr) => {
        RelationPhrase { words: $w, relation: $k }
    };
}

use KeywordKind::*;

pub(crate) const RELATION_PHRASES: &[RelationPhrase] = &[
    phrase!("to the left of", KeywordKind::Relation(Relation::Left)),
    phrase!("on the left side of", KeywordKind::Relation(Relation::Left)),
    phrase!("on the left of", KeywordKind::Relation(Relation::Left)),
    phrase!("left of", KeywordKind::Relation(Relation::Left)),
    phrase!("to the left", KeywordKind::Relation(Relation::Left)),
    phrase!("on the left side", KeywordKind::Relation(Relation::Left)),
    phrase!("on the left", KeywordKind::Relation(Relation::Left)),
    phrase!("at the left", KeywordKind::Relation(Relation::Left)),
    phrase!("to the right of", KeywordKind::Relation(Relation::Right)),
    phrase!("on the right side of", KeywordKind::Relation(Relation::Right)),
    phrase!("on the right of", KeywordKind::Relation(Relation::Right)),
    phrase!("right of", KeywordKind::Relation(Relation::Right)),
    phrase!("to the right", KeywordKind::Relation(Relation::Right)),
    phrase!("on the right side", KeywordKind::Relation(Relation::Right)),
    phrase!("on the right", KeywordKind::Relation(Relation::Right)),
    phrase!("at the right", KeywordKind::Relation(Relation::Right)),
    phrase!("on top of", KeywordKind::Relation(Relation::Above)),
    phrase!("above", KeywordKind::Relation(Relation::Above)),
    phrase!("over", KeywordKind::Relation(Relation::Above)),
    phrase!("on top", KeywordKind::Relation(Relation::Above)),
    phrase!("below", KeywordKind::Relation(Relation::Below)),
    phrase!("under", KeywordKind::Relation(Relation::Below)),
    phrase!("underneath", KeywordKind::Relation(Relation::Below)),
    phrase!("beneath", KeywordKind::Relation(Relation::Below)),
    phrase!("behind", KeywordKind::Relation(Relation::Behind)),
    phrase!("in back of", KeywordKind::Relation(Relation::Behind)),
    phrase!("in front of", KeywordKind::Relation(Relation::InFront)),
    phrase!("in front", KeywordKind::Relation(Relation::InFront)),
    phrase!("between", KeywordKind::Relation(Relation::Between)),
    phrase!("in between", KeywordKind::Relation(Relation::Between)),
    phrase!("next to", KeywordKind::Relation(Relation::NextTo)),
    phrase!("beside", KeywordKind::Relation(Relation::NextTo)),
    phrase!("near", KeywordKind::Relation(Relation::NextTo)),
    phrase!("close to", KeywordKind::Relation(Relation::NextTo)),
    phrase!("by", KeywordKind::Relation(Relation::NextTo)),
    phrase!("that is part of", KeywordKind::Relation(Relation::PartOf)),
    phrase!("which is part of", KeywordKind::Relation(Relation::PartOf)),
    phrase!("part of", KeywordKind::Relation(Relation::PartOf)),
    phrase!("as a part", KeywordKind::Relation(Relation::PartOf)),
    phrase!("on", KeywordKind::Relation(Relation::Above)),
    phrase!("with", KeywordKind::Relation(Relation::Includes)),
    phrase!("that has", KeywordKind::Relation(Relation::Includes)),
    phrase!("that includes", KeywordKind::Relation(Relation::Includes)),
    phrase!("which includes", KeywordKind::Relation(Relation::Includes)),
    phrase!("that contains", KeywordKind::Relation(Relation::Includes)),
    phrase!("including", KeywordKind::Relation(Relation::Includes)),
    phrase!("containing", KeywordKind::Relation(Relation::Includes)),
    phrase!("among", Group),
    phrase!("amongst", Group),
    phrase!("out of", Group),
    phrase!("in the row of", Group),
    phrase!("that is", Connector),
    phrase!("which is", Connector),
    phrase!("that's", Connector),
    phrase!("of", Of),
];

/// Words inside a noun phrase that mark the whole object.
pub(crate) const WHOLE_WORDS: &[&str] = &["whole", "entire", "full", "complete"];

/// Pre-nominal position words ("the left cup").
pub(crate) fn position_word(word: &str) -> Option<Relation> {
    match word {
        "left" => Some(Relation::Left),
        "right" => Some(Relation::Right),
        "top" | "upper" => Some(Relation::Above),
        "bottom" | "lower" => Some(Relation::Below),
        _ => None,
    }
}

pub(crate) const ORDINAL_WORDS: &[&str] = &["first", "second", "third", "fourth", "fifth", "sixth", "seventh", "eighth", "ninth", "tenth"];

pub(crate) const NUMBER_WORDS: &[&str] = &["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];

pub(crate) fn ordinal_word(word: &str) -> Option<OrdinalPosition> {
    match word {
        "leftmost" | "left-most" => return Some(OrdinalPosition::Leftmost),
        "rightmost" | "right-most" => return Some(OrdinalPosition::Rightmost),
        "middle" | "center" | "centre" | "central" => return Some(OrdinalPosition::Middle),
        _ => {}
    }
    if let Some(i) = ORDINAL_WORDS.iter().position(|w| *w == word) {
        return Some(OrdinalPosition::Nth(i as u32 + 1));
    }
    for suffix in ["st", "nd", "rd", "th"] {
        if let Some(num) = word.strip_suffix(suffix) {
            if let Ok(n) = num.parse::<u32>() {
                if n >= 1 {
                    return Some(OrdinalPosition::Nth(n));
                }
            }
        }
    }
    None
}

pub fn ordinal_text(n: u32) -> String {
    match ORDINAL_WORDS.get(n as usize - 1) {
        Some(w) => (*w).to_string(),
        None => {
            let suffix = match (n % 10, n % 100) {
                (_, 11..=13) => "th",
                (1, _) => "st",
                (2, _) => "nd",
                (3, _) => "rd",
                _ => "th",
            };
            format!("{n}{suffix}")
        }
    }
}

pub(crate) fn is_number_word(word: &str) -> bool {
    NUMBER_WORDS.contains(&word) || word.parse::<u32>().is_ok()
}

pub fn number_text(n: usize) -> String {
    NUMBER_WORDS.get(n.wrapping_sub(1)).map(|w| (*w).to_string()).unwrap_or_else(|| n.to_string())
}

/// Canonical adjective form for known descriptive terms.
pub fn canonical_adjective(word: &str) -> Option<&'static str> {
    if let Some(c) = canonical_color(word) {
        return Some(c);
    }
    let word = if word == "wood" { "wooden" } else { word };
    SIZE_TERMS
        .iter()
        .chain(SHAPE_TERMS)
        .chain(MATERIAL_TERMS)
        .chain(TEXTURE_TERMS)
        .find(|t| **t == word)
        .copied()
}

/// Crude English singular for object names; applied word by word.
pub fn singularize(word: &str) -> String {
    let keep = ["glass", "glasses", "grass", "bus", "lens", "series", "species", "chess"];
    if keep.contains(&word) {
        return word.to_string();
    }
    if let Some(stem) = word.strip_suffix("ies") {
        if stem.len() > 1 {
            return format!("{stem}y");
        }
    }
    for suffix in ["ches", "shes", "sses", "xes", "zes"] {
        if word.ends_with(suffix) {
            return word[..word.len() - 2].to_string();
        }
    }
    if word.len() > 3 && word.ends_with('s') && !word.ends_with("ss") && !word.ends_with("us") {
        return word[..word.len() - 1].to_string();
    }
    word.to_string()
}

pub fn pluralize(word: &str) -> String {
    let (head, last) = match word.rsplit_once(' ') {
        Some((h, l)) => (format!("{h} "), l),
        None => (String::new(), word),
    };
    let plural = if last.ends_with('y') && !last.ends_with("ey") && !last.ends_with("ay") && !last.ends_with("oy") {
        format!("{}ies", &last[..last.len() - 1])
    } else if ["s", "x", "z", "ch", "sh"].iter().any(|s| last.ends_with(s)) {
        format!("{last}es")
    } else {
        format!("{last}s")
    };
    format!("{head}{plural}")
}

/// Normalized object name: lowercase, singular words.
pub fn normalize_identity(name: &str) -> String {
    name.split_whitespace().map(|w| singularize(&w.to_lowercase())).collect::<Vec<_>>().join(" ")
}

/// Whether a described identity names the given category.
pub fn identity_matches(described: &str, category: &str) -> bool {
    let d = normalize_identity(described);
    let c = normalize_identity(category);
    if d.is_empty() || c.is_empty() {
        return false;
    }
    if d == c {
        return true;
    }
    // A head-noun match ("can" for "beverage can"), either direction.
    let d_head = d.rsplit(' ').next().unwrap_or(&d);
    let c_head = c.rsplit(' ').next().unwrap_or(&c);
    if (d_head == c && d.contains(' ')) || (c_head == d && c.contains(' ')) {
        return true;
    }
    SYNONYMS.iter().any(|group| {
        let has = |s: &str| group.iter().any(|g| normalize_identity(g) == s);
        has(&d) && has(&c)
    })
}

pub fn article_for(word: &str) -> &'static str {
    match word.chars().next() {
        Some('a' | 'e' | 'i' | 'o' | 'u') => "an",
        _ => "a",
    }
}
