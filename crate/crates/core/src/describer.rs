//! Selection descriptions and the context crop.
//!
//! Every description follows one template:
//! `I've selected <a|an> [adjectives] <identity>[ <relation clause>]`.
//! Parts are named as `<part> of a <object>`, objects among same-category
//! siblings get an ordinal clause, others a spatial clause against the
//! nearest distinct anchor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{side_of, BBox, GeometryError, Mask, Side};
use crate::parser::lexicon::{article_for, identity_matches, number_text, ordinal_text, pluralize};
use crate::scene::{BuiltObject, Element, Scene};

pub const DESCRIPTION_PREFIX: &str = "I've selected ";
pub const FALLBACK_PREFIX: &str = "Do you want to select ";
pub const BACKGROUND_IDENTITY: &str = "background area";
pub const NO_ANCHOR_CLAUSE: &str = "in the area you looked at";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DescribeError {
    #[error("cannot describe an empty mask")]
    EmptyMask,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The crop a selection is described and disambiguated in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContextRegion {
    pub bbox: BBox,
    pub gaze_centroid: (f64, f64),
    pub padding: u32,
}

/// Tight box of the mask grown by `padding` on every side, clamped to the frame.
pub fn build_context_region(frame: (u32, u32), mask: &Mask, gaze_centroid: (f64, f64), padding: u32) -> Result<ContextRegion, DescribeError> {
    let tight = mask.tight_box().map_err(|_| DescribeError::EmptyMask)?;
    Ok(ContextRegion { bbox: tight.expand(padding, frame.0, frame.1), gaze_centroid, padding })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Description {
    pub adjectives: Vec<String>,
    /// Head name of the selected element ("beverage can", "logo").
    pub identity: String,
    /// Parent object category when the selection is a part.
    #[serde(default)]
    pub part_of_parent: Option<String>,
    /// Empty when there is no clause.
    #[serde(default)]
    pub relation_clause: String,
    pub full_text: String,
}

impl Description {
    pub fn assemble(adjectives: Vec<String>, identity: String, part_of_parent: Option<String>, relation_clause: String) -> Self {
        let mut d = Description { adjectives, identity, part_of_parent, relation_clause, full_text: String::new() };
        d.full_text = format!("{DESCRIPTION_PREFIX}{}", d.body());
        d
    }

    pub fn background() -> Self {
        Description::assemble(Vec::new(), BACKGROUND_IDENTITY.to_string(), None, String::new())
    }

    pub fn is_background(&self) -> bool {
        self.identity == BACKGROUND_IDENTITY
    }

    /// "logo of a snack bag" for parts, the identity otherwise.
    pub fn display_identity(&self) -> String {
        match &self.part_of_parent {
            Some(parent) => format!("{} of {} {parent}", self.identity, article_for(parent)),
            None => self.identity.clone(),
        }
    }

    /// Everything after the template prefix.
    pub fn body(&self) -> String {
        let mut words: Vec<String> = self.adjectives.clone();
        words.push(self.display_identity());
        let phrase = words.join(" ");
        let mut body = format!("{} {phrase}", article_for(&phrase));
        if !self.relation_clause.is_empty() {
            body.push(' ');
            body.push_str(&self.relation_clause);
        }
        body
    }
}

pub fn render_fallback_query(description: &Description) -> String {
    format!("{FALLBACK_PREFIX}{}?", description.body())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DescriberConfig {
    /// Overlap tolerance used when checking that a spatial clause holds;
    /// matches the spatial filter's alpha.
    pub side_alpha: f64,
    /// Below this IoU with every scene element, a mask is background.
    pub min_element_iou: f64,
    /// Relative distance difference under which two flanking anchors count
    /// as equally near.
    pub between_tolerance: f64,
}

impl Default for DescriberConfig {
    fn default() -> Self {
        DescriberConfig { side_alpha: 0.5, min_element_iou: 0.3, between_tolerance: 0.1 }
    }
}

/// Scene element with the highest mask IoU, if any reaches `min_iou`.
pub fn best_element<'a>(scene: &'a Scene, mask: &Mask, min_iou: f64) -> Option<Element<'a>> {
    let tight = mask.tight_box().ok()?;
    scene
        .elements()
        .into_iter()
        .filter(|e| e.bbox().intersects(&tight))
        .map(|e| (e.mask().iou(mask).unwrap_or(0.0), e))
        .filter(|(iou, _)| *iou >= min_iou)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, e)| e)
}

fn anchor_name(o: &BuiltObject) -> String {
    format!("the {} {}", o.color(), o.category())
}

/// Objects of the same category as `object` whose boxes meet the context,
/// ordered by box center x (then y, then id).
pub fn ordinal_group<'a>(scene: &'a Scene, object: &BuiltObject, context: &BBox) -> Vec<&'a BuiltObject> {
    let mut group: Vec<&BuiltObject> = scene
        .objects()
        .iter()
        .filter(|o| o.bbox.intersects(context) && identity_matches(o.category(), object.category()))
        .collect();
    group.sort_by(|a, b| {
        let (ac, bc) = (a.bbox.center(), b.bbox.center());
        ac.0.total_cmp(&bc.0).then(ac.1.total_cmp(&bc.1)).then(a.id().cmp(&b.id()))
    });
    group
}

/// Ordinal word for position `index` in a group of `k`.
pub fn ordinal_phrase(index: usize, k: usize) -> String {
    if index == 0 {
        "leftmost".into()
    } else if index + 1 == k {
        "rightmost".into()
    } else if k % 2 == 1 && index == k / 2 {
        "middle".into()
    } else {
        ordinal_text(index as u32 + 1)
    }
}

fn side_phrase(side: Side) -> &'static str {
    match side {
        Side::Left => "to the left of",
        Side::Right => "to the right of",
        Side::Above => "above",
        Side::Below => "below",
    }
}

fn spatial_clause(scene: &Scene, element_box: &BBox, object: &BuiltObject, context: &BBox, config: &DescriberConfig) -> String {
    let (cx, cy) = element_box.center();
    let mut anchors: Vec<(&BuiltObject, f64)> = scene
        .objects()
        .iter()
        .filter(|o| o.id() != object.id() && o.bbox.intersects(context) && !identity_matches(o.category(), object.category()))
        .map(|o| (o, o.bbox.center_distance(element_box)))
        .collect();
    anchors.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.id().cmp(&b.0.id())));
    let holds = |anchor: &BBox, side: Side| side_of(element_box, anchor, side, config.side_alpha).unwrap_or(false);
    for (anchor, dist) in &anchors {
        let (ax, ay) = anchor.bbox.center();
        let (dx, dy) = (cx - ax, cy - ay);
        let horizontal = if dx < 0.0 { Side::Left } else { Side::Right };
        let vertical = if dy < 0.0 { Side::Above } else { Side::Below };
        let order = if dx.abs() >= dy.abs() { [horizontal, vertical] } else { [vertical, horizontal] };
        let Some(side) = order.into_iter().find(|s| holds(&anchor.bbox, *s)) else {
            continue;
        };
        if matches!(side, Side::Left | Side::Right) {
            let opposite = if side == Side::Left { Side::Right } else { Side::Left };
            let flank = anchors.iter().find(|(other, d)| {
                other.id() != anchor.id() && (d - dist).abs() <= config.between_tolerance * dist && holds(&other.bbox, opposite)
            });
            if let Some((other, _)) = flank {
                let (left, right) = if side == Side::Left { (*other, *anchor) } else { (*anchor, *other) };
                return if left.category() == right.category() {
                    format!("between two {}", pluralize(left.category()))
                } else {
                    format!("between {} and {}", anchor_name(left), anchor_name(right))
                };
            }
        }
        return format!("{} {}", side_phrase(side), anchor_name(anchor));
    }
    NO_ANCHOR_CLAUSE.to_string()
}

/// Describes the scene element best matching `mask` within `context`.
pub fn describe_selection(scene: &Scene, mask: &Mask, context: &ContextRegion, config: &DescriberConfig) -> Result<Description, DescribeError> {
    if mask.is_empty() {
        return Err(DescribeError::EmptyMask);
    }
    let Some(element) = best_element(scene, mask, config.min_element_iou) else {
        return Ok(Description::background());
    };
    let object = element.object();
    let mut adjectives = vec![element.color().to_string()];
    match element {
        Element::Part(_, part) => {
            let clause = spatial_clause(scene, &part.bbox, object, &context.bbox, config);
            Ok(Description::assemble(adjectives, part.name.clone(), Some(object.category().to_string()), clause))
        }
        Element::Object(o) => {
            let group = ordinal_group(scene, o, &context.bbox);
            if group.len() >= 2 {
                let index = group.iter().position(|g| g.id() == o.id()).expect("object is in its own group");
                let clause = format!(
                    "that is the {} {} among the {}",
                    ordinal_phrase(index, group.len()),
                    o.category(),
                    number_text(group.len())
                );
                return Ok(Description::assemble(adjectives, o.category().to_string(), None, clause));
            }
            if let Some(extra) = o.spec.adjectives.iter().find(|a| !adjectives.contains(a)) {
                adjectives.insert(0, extra.clone());
            }
            let clause = spatial_clause(scene, &o.bbox, o, &context.bbox, config);
            Ok(Description::assemble(adjectives, o.category().to_string(), None, clause))
        }
    }
}
