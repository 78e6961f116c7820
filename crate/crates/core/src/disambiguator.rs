//! Mask update from a parsed command: candidate collection, noisy and
//! spatial filtering, then localization with ordinal logic and fallback.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, ModelBackend};
use crate::config::FilterConfig;
use crate::describer::ContextRegion;
use crate::dialog::{StageTrace, TraceCandidate};
use crate::geometry::{nms, side_of, BBox, CandidateBox, CandidateSource, Mask};
use crate::parser::{relation_axis, OrdinalPosition, ParsedCommand, Relation, RelationAxis};

pub const STAGE_COLLECT: &str = "collect_candidates";
pub const STAGE_NOISY: &str = "filter_noisy";
pub const STAGE_REFERENCE: &str = "resolve_reference";
pub const STAGE_SPATIAL: &str = "spatial_filter";
pub const STAGE_LOCALIZE: &str = "localize";
pub const STAGE_UPDATE: &str = "update_mask";

/// Set when a filter would have removed every candidate.
pub const FLAG_FLOOR: &str = "floor_pass_through";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DisambiguationError {
    #[error("no candidates in the context region")]
    EmptyCandidates,
    #[error("{stage}: {error}")]
    Backend { stage: &'static str, error: BackendError },
    #[error("cannot update the mask from a fallback result")]
    NotSelected,
}

impl DisambiguationError {
    fn backend(stage: &'static str) -> impl Fn(BackendError) -> DisambiguationError {
        move |error| DisambiguationError::Backend { stage, error }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<CandidateBox>,
    pub context: ContextRegion,
}

impl CandidateSet {
    pub fn gaze_centroid(&self) -> (f64, f64) {
        self.context.gaze_centroid
    }

    pub fn get(&self, id: u32) -> Option<&CandidateBox> {
        self.candidates.iter().find(|c| c.id == id)
    }

    fn ids(&self) -> Vec<u32> {
        self.candidates.iter().map(|c| c.id).collect()
    }

    fn trace(&self, stage: &str) -> StageTrace {
        let mut t = StageTrace::new(stage);
        t.candidates_in = self
            .candidates
            .iter()
            .map(|c| TraceCandidate { id: c.id, bbox: c.bbox, source: c.source, label: c.label.clone() })
            .collect();
        t
    }

    fn keep(&self, ids: &[u32]) -> CandidateSet {
        CandidateSet { candidates: self.candidates.iter().filter(|c| ids.contains(&c.id)).cloned().collect(), context: self.context }
    }
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Global-segmentation masks and detector boxes meeting the context,
/// merged by non-maximum suppression.
pub fn collect_candidates(
    context: &ContextRegion,
    backend: &dyn ModelBackend,
    nms_threshold: f64,
) -> Result<(CandidateSet, StageTrace), DisambiguationError> {
    let masks = backend.segment_everything().map_err(DisambiguationError::backend(STAGE_COLLECT))?;
    let detections = backend.detect().map_err(DisambiguationError::backend(STAGE_COLLECT))?;
    let mut pool = Vec::new();
    let mut next = 1u32;
    for m in masks {
        if let Some(c) = CandidateBox::from_mask(next, m) {
            pool.push(c);
        }
        next += 1;
    }
    for d in detections {
        if !d.bbox.is_empty() {
            pool.push(CandidateBox::from_detection(next, d.bbox, Some(d.label)));
        }
        next += 1;
    }
    pool.retain(|c| c.bbox.intersects(&context.bbox));
    let all = CandidateSet { candidates: pool, context: *context };
    let mut trace = all.trace(STAGE_COLLECT);
    let merged = nms(&all.candidates, nms_threshold);
    trace.kept = merged.iter().map(|c| c.id).collect();
    trace.rationale = format!("{} boxes in context, {} after suppression at {nms_threshold}", all.candidates.len(), merged.len());
    if merged.is_empty() {
        return Err(DisambiguationError::EmptyCandidates);
    }
    Ok((CandidateSet { candidates: merged, context: *context }, trace))
}

/// Drops candidates the judge calls noisy, keeping at least one.
pub fn filter_noisy(set: &CandidateSet, backend: &dyn ModelBackend) -> Result<(CandidateSet, StageTrace), DisambiguationError> {
    let mut trace = set.trace(STAGE_NOISY);
    let mut kept = Vec::new();
    for c in &set.candidates {
        if !backend.judge_noisy(&c.bbox).map_err(DisambiguationError::backend(STAGE_NOISY))? {
            kept.push(c.id);
        }
    }
    if kept.is_empty() {
        if let Some(c) = nearest(&set.candidates, set.gaze_centroid()) {
            kept.push(c.id);
            trace.flags.push(FLAG_FLOOR.into());
        }
    }
    trace.kept = kept.clone();
    trace.rationale = format!("{} of {} judged noisy", set.candidates.len() - kept.len(), set.candidates.len());
    Ok((set.keep(&kept), trace))
}

fn nearest(candidates: &[CandidateBox], anchor: (f64, f64)) -> Option<&CandidateBox> {
    candidates.iter().min_by(|a, b| distance(a.bbox.center(), anchor).total_cmp(&distance(b.bbox.center(), anchor)).then(a.id.cmp(&b.id)))
}

/// The reference box: the previous selection by default, otherwise the
/// candidate that best matches the reference descriptor.
pub fn resolve_reference_box(
    command: &ParsedCommand,
    previous_mask: Option<&Mask>,
    set: &CandidateSet,
    backend: &dyn ModelBackend,
    threshold: f64,
) -> Result<(Option<BBox>, StageTrace), DisambiguationError> {
    let mut trace = set.trace(STAGE_REFERENCE);
    let previous = previous_mask.and_then(|m| m.tight_box().ok());
    let Some(reference) = &command.reference else {
        trace.rationale = match previous {
            Some(b) => format!("no reference named; previous selection {b:?}"),
            None => "no reference named and no previous selection".into(),
        };
        return Ok((previous, trace));
    };
    let err = DisambiguationError::backend(STAGE_REFERENCE);
    if let Some(prev) = previous {
        let s = backend.score_patch(&prev, reference).map_err(&err)?;
        if s.score >= threshold {
            trace.rationale = format!("previous selection matches the reference ({:.2})", s.score);
            return Ok((Some(prev), trace));
        }
    }
    let mut best: Option<(&CandidateBox, f64)> = None;
    for c in &set.candidates {
        let s = backend.score_patch(&c.bbox, reference).map_err(&err)?.score;
        trace.scores.insert(c.id, s);
        let better = match best {
            None => true,
            Some((b, bs)) => {
                s > bs || (s == bs && distance(c.bbox.center(), set.gaze_centroid()) < distance(b.bbox.center(), set.gaze_centroid()))
            }
        };
        if better {
            best = Some((c, s));
        }
    }
    match best.filter(|(_, s)| *s >= threshold) {
        Some((c, s)) => {
            trace.kept = vec![c.id];
            trace.rationale = format!("candidate {} matches the reference ({s:.2})", c.id);
            Ok((Some(c.bbox), trace))
        }
        None => {
            trace.rationale = "no candidate matches the reference".into();
            Ok((None, trace))
        }
    }
}

/// Geometric and proximity heuristics. Never returns an empty set.
pub fn spatial_filter(
    set: &CandidateSet,
    reference: Option<&BBox>,
    relation: Relation,
    alpha: f64,
    keep_n: usize,
) -> (CandidateSet, StageTrace) {
    let mut trace = set.trace(STAGE_SPATIAL);
    let proximity = |anchor: (f64, f64)| -> Vec<u32> {
        let mut order: Vec<&CandidateBox> = set.candidates.iter().collect();
        order.sort_by(|a, b| distance(a.bbox.center(), anchor).total_cmp(&distance(b.bbox.center(), anchor)).then(a.id.cmp(&b.id)));
        order.into_iter().take(keep_n).map(|c| c.id).collect()
    };
    let anchor = reference.map(BBox::center).unwrap_or(set.gaze_centroid());
    let (kept, rationale) = match (relation_axis(relation), reference) {
        (RelationAxis::Geometric { side }, Some(r)) => (
            set.candidates.iter().filter(|c| side_of(&c.bbox, r, side, alpha).unwrap_or(false)).map(|c| c.id).collect(),
            format!("{side:?} of {r:?} with alpha {alpha}"),
        ),
        (RelationAxis::Geometric { .. }, None) | (RelationAxis::Proximity, _) => {
            (proximity(anchor), format!("{keep_n} nearest to ({:.1}, {:.1})", anchor.0, anchor.1))
        }
        (RelationAxis::Ordinal { .. } | RelationAxis::Belonging, _) => (set.ids(), "no geometric filtering".into()),
    };
    trace.rationale = rationale;
    if kept.is_empty() {
        trace.flags.push(FLAG_FLOOR.into());
        trace.kept = set.ids();
        return (set.clone(), trace);
    }
    trace.kept = kept.clone();
    (set.keep(&kept), trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Outcome {
    Selected { candidate: u32, score: f64 },
    /// Nothing scored high enough; `best_guess` is the top-scoring candidate.
    Fallback { best_guess: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationResult {
    pub outcome: Outcome,
    pub scores: BTreeMap<u32, f64>,
    pub rationales: BTreeMap<u32, String>,
}

/// Index of an ordinal position among `k` sorted matches.
pub fn ordinal_index(position: OrdinalPosition, k: usize) -> Option<usize> {
    if k == 0 {
        return None;
    }
    let i = match position {
        OrdinalPosition::Leftmost => 0,
        OrdinalPosition::Rightmost => k - 1,
        OrdinalPosition::Middle => k.div_ceil(2) - 1,
        OrdinalPosition::Nth(n) => (n as usize).checked_sub(1)?,
    };
    (i < k).then_some(i)
}

fn by_center_x(a: &BBox, b: &BBox) -> std::cmp::Ordering {
    let (ac, bc) = (a.center(), b.center());
    ac.0.total_cmp(&bc.0).then(ac.1.total_cmp(&bc.1))
}

/// Part-whole constraints against the reference box, skipped when they
/// would leave nothing.
fn belonging_restriction<'a>(relation: Relation, reference: Option<&BBox>, candidates: &'a [CandidateBox]) -> Vec<&'a CandidateBox> {
    let all: Vec<&CandidateBox> = candidates.iter().collect();
    let Some(r) = reference else { return all };
    let restricted: Vec<&CandidateBox> = match relation {
        Relation::Includes => all.iter().copied().filter(|c| c.bbox.contains_box(r)).collect(),
        Relation::PartOf => all.iter().copied().filter(|c| r.contains_box(&c.bbox) && c.bbox != *r).collect(),
        _ => return all,
    };
    if restricted.is_empty() { all } else { restricted }
}

pub fn localize(
    command: &ParsedCommand,
    set: &CandidateSet,
    reference: Option<&BBox>,
    backend: &dyn ModelBackend,
    threshold: f64,
) -> Result<(LocalizationResult, StageTrace), DisambiguationError> {
    let mut trace = set.trace(STAGE_LOCALIZE);
    let mut result = LocalizationResult { outcome: Outcome::Fallback { best_guess: None }, scores: BTreeMap::new(), rationales: BTreeMap::new() };
    if set.candidates.is_empty() {
        trace.rationale = "no candidates".into();
        return Ok((result, trace));
    }
    let pool = belonging_restriction(command.relation, reference, &set.candidates);
    if pool.len() < set.candidates.len() {
        trace.flags.push(format!("{:?} restricted to {} candidates", command.relation, pool.len()));
    }
    for c in &pool {
        let s = backend.score_patch(&c.bbox, &command.target).map_err(DisambiguationError::backend(STAGE_LOCALIZE))?;
        result.scores.insert(c.id, s.score);
        result.rationales.insert(c.id, s.rationale);
    }
    let score = |c: &CandidateBox| result.scores[&c.id];
    let anchor = reference.map(BBox::center).unwrap_or(set.gaze_centroid());
    let mut ranked = pool.clone();
    ranked.sort_by(|a, b| {
        score(b).total_cmp(&score(a)).then(distance(a.bbox.center(), anchor).total_cmp(&distance(b.bbox.center(), anchor))).then(a.id.cmp(&b.id))
    });
    let best_guess = ranked.first().map(|c| c.id);
    let winner = match relation_axis(command.relation) {
        RelationAxis::Ordinal { position, .. } => {
            let mut matches: Vec<&CandidateBox> = pool.iter().copied().filter(|c| score(c) >= threshold).collect();
            matches.sort_by(|a, b| by_center_x(&a.bbox, &b.bbox).then(a.id.cmp(&b.id)));
            trace.kept = matches.iter().map(|c| c.id).collect();
            match ordinal_index(position, matches.len()) {
                Some(i) => {
                    trace.rationale = format!("{position:?} of {} matches -> index {i}", matches.len());
                    Some(matches[i])
                }
                None => {
                    trace.rationale = format!("{position:?} out of range for {} matches", matches.len());
                    None
                }
            }
        }
        _ => {
            trace.kept = ranked.iter().map(|c| c.id).collect();
            trace.rationale = "highest score, nearest to the anchor on ties".into();
            ranked.first().copied()
        }
    };
    result.outcome = match winner {
        Some(c) if score(c) > threshold => Outcome::Selected { candidate: c.id, score: score(c) },
        _ => Outcome::Fallback { best_guess },
    };
    trace.scores = result.scores.clone();
    Ok((result, trace))
}

/// Mask for the winning candidate.
pub fn update_mask(result: &LocalizationResult, set: &CandidateSet, backend: &dyn ModelBackend) -> Result<Mask, DisambiguationError> {
    let Outcome::Selected { candidate, .. } = result.outcome else {
        return Err(DisambiguationError::NotSelected);
    };
    candidate_mask(candidate, set, backend)
}

/// Attached mask for global-segmentation candidates, box segmentation for
/// detector candidates.
pub fn candidate_mask(id: u32, set: &CandidateSet, backend: &dyn ModelBackend) -> Result<Mask, DisambiguationError> {
    let c = set.get(id).ok_or(DisambiguationError::NotSelected)?;
    match (&c.source, &c.mask) {
        (CandidateSource::GlobalSeg, Some(m)) => Ok(m.clone()),
        _ => Ok(backend.segment_box(&c.bbox).map_err(DisambiguationError::backend(STAGE_UPDATE))?.mask),
    }
}

/// Everything one command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Disambiguation {
    /// Candidates that reached localization.
    pub set: CandidateSet,
    pub reference: Option<BBox>,
    pub result: LocalizationResult,
    /// Mask of the selected candidate, or of the best guess on fallback.
    pub mask: Option<Mask>,
    pub traces: Vec<StageTrace>,
}

/// Runs the whole pipeline for one parsed command.
pub fn disambiguate(
    command: &ParsedCommand,
    previous_mask: Option<&Mask>,
    context: &ContextRegion,
    backend: &dyn ModelBackend,
    config: &FilterConfig,
) -> Result<Disambiguation, DisambiguationError> {
    let (collected, t1) = match collect_candidates(context, backend, config.nms_threshold) {
        Ok(v) => v,
        Err(DisambiguationError::EmptyCandidates) => {
            let mut t = StageTrace::new(STAGE_COLLECT);
            t.rationale = "no candidates in the context region".into();
            let set = CandidateSet { candidates: Vec::new(), context: *context };
            let result = LocalizationResult { outcome: Outcome::Fallback { best_guess: None }, scores: BTreeMap::new(), rationales: BTreeMap::new() };
            return Ok(Disambiguation { set, reference: None, result, mask: None, traces: vec![t] });
        }
        Err(e) => return Err(e),
    };
    let (clean, t2) = filter_noisy(&collected, backend)?;
    let (reference, t3) = resolve_reference_box(command, previous_mask, &clean, backend, config.localize_threshold)?;
    let (spatial, t4) = spatial_filter(&clean, reference.as_ref(), command.relation, config.side_alpha, config.keep_n);
    let (result, t5) = localize(command, &spatial, reference.as_ref(), backend, config.localize_threshold)?;
    let mut traces = vec![t1, t2, t3, t4, t5];
    let chosen = match result.outcome {
        Outcome::Selected { candidate, .. } => Some(candidate),
        Outcome::Fallback { best_guess } => best_guess,
    };
    let mask = match chosen {
        Some(id) => {
            let m = candidate_mask(id, &spatial, backend)?;
            let mut t = StageTrace::new(STAGE_UPDATE);
            t.kept = vec![id];
            t.rationale = match spatial.get(id).map(|c| c.source) {
                Some(CandidateSource::GlobalSeg) => "attached segmentation mask".into(),
                _ => "box-prompted segmentation".into(),
            };
            traces.push(t);
            Some(m)
        }
        None => None,
    };
    Ok(Disambiguation { set: spatial, reference, result, mask, traces })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cand(id: u32, b: [u32; 4]) -> CandidateBox {
        CandidateBox::from_detection(id, BBox::new(b[0], b[1], b[2], b[3]), None)
    }

    fn set(c: Vec<CandidateBox>) -> CandidateSet {
        CandidateSet { candidates: c, context: ContextRegion { bbox: BBox::new(0, 0, 500, 500), gaze_centroid: (250.0, 250.0), padding: 150 } }
    }

    #[test]
    fn left_filter_keeps_margin_overlaps() {
        let reference = BBox::new(200, 100, 300, 200);
        let s = set(vec![
            cand(1, [10, 100, 60, 150]),
            cand(2, [100, 120, 190, 160]),
            cand(3, [160, 100, 240, 150]),
            cand(4, [310, 100, 360, 150]),
            cand(5, [250, 300, 290, 340]),
        ]);
        let (out, trace) = spatial_filter(&s, Some(&reference), Relation::Left, 0.5, 7);
        assert_eq!(out.ids(), vec![1, 2, 3]);
        assert!(trace.flags.is_empty());
    }

    #[test]
    fn proximity_keeps_seven() {
        let s = set((0..10).map(|i| cand(i + 1, [i * 40, 0, i * 40 + 20, 20])).collect());
        let (out, _) = spatial_filter(&s, Some(&BBox::new(0, 0, 20, 20)), Relation::NextTo, 0.5, 7);
        assert_eq!(out.ids(), (1..=7).collect::<Vec<_>>());
        let (out, _) = spatial_filter(&s, None, Relation::Ordinal(OrdinalPosition::Leftmost), 0.5, 7);
        assert_eq!(out.candidates.len(), 10);
    }

    #[test]
    fn empty_result_passes_through() {
        let s = set(vec![cand(1, [300, 0, 340, 40])]);
        let (out, trace) = spatial_filter(&s, Some(&BBox::new(0, 0, 100, 100)), Relation::Left, 0.5, 7);
        assert_eq!(out.ids(), vec![1]);
        assert_eq!(trace.flags, vec![FLAG_FLOOR.to_string()]);
    }

    #[test]
    fn ordinal_indices() {
        assert_eq!(ordinal_index(OrdinalPosition::Middle, 4), Some(1));
        assert_eq!(ordinal_index(OrdinalPosition::Middle, 3), Some(1));
        assert_eq!(ordinal_index(OrdinalPosition::Rightmost, 2), Some(1));
        assert_eq!(ordinal_index(OrdinalPosition::Nth(3), 2), None);
        assert_eq!(ordinal_index(OrdinalPosition::Nth(0), 2), None);
        assert_eq!(ordinal_index(OrdinalPosition::Leftmost, 0), None);
    }
}
