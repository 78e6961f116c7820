use serde::{Deserialize, Serialize};

use super::{DisambiguationErrorType, GazeErrorType, SimError};
use crate::dialog::StageTrace;
use crate::disambiguator::{STAGE_COLLECT, STAGE_NOISY, STAGE_SPATIAL};
use crate::geometry::{iou, BBox, GeometryError, Mask};
use crate::parser::ParsedCommand;
use crate::scene::Scene;

/// A correct mask covers at least this much of the target.
pub const COVERAGE_THRESHOLD: f64 = 0.9;
/// ... and at least this much of the mask lies on the target.
pub const PRECISION_FLOOR: f64 = 0.75;
/// A non-target object counts as selected when the mask covers this much of it.
const OTHER_OBJECT_COVERAGE: f64 = 0.5;
/// Candidate box IoU at which a candidate stands for the target.
const CANDIDATE_MATCH_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskMeasures {
    /// |mask ∩ target| / |target|
    pub coverage: f64,
    /// |mask ∩ target| / |mask|
    pub precision: f64,
    pub other_object: bool,
}

pub fn classify_mask(mask: &Mask, target: &Mask, others: &[&Mask]) -> Result<MaskMeasures, GeometryError> {
    let inter = mask.intersection_area(target)? as f64;
    let coverage = if target.is_empty() { 0.0 } else { inter / target.area() as f64 };
    let precision = if mask.is_empty() { 0.0 } else { inter / mask.area() as f64 };
    let mut other_object = false;
    for o in others {
        if !o.is_empty() && mask.intersection_area(o)? as f64 / o.area() as f64 >= OTHER_OBJECT_COVERAGE {
            other_object = true;
            break;
        }
    }
    Ok(MaskMeasures { coverage, precision, other_object })
}

/// `None` when the mask counts as a correct selection of the target.
pub fn classify_gaze_error(mask: &Mask, scene: &Scene, target_id: u32) -> Result<Option<GazeErrorType>, SimError> {
    let target = scene.object(target_id)?;
    if mask.is_empty() {
        return Ok(Some(GazeErrorType::Background));
    }
    let others: Vec<&Mask> = scene.objects().iter().filter(|o| o.id() != target_id).map(|o| &o.mask).collect();
    let m = classify_mask(mask, &target.mask, &others)?;
    let covered = m.coverage >= COVERAGE_THRESHOLD;
    let precise = m.precision >= PRECISION_FLOOR;
    Ok(match (covered, precise) {
        (true, true) => None,
        (false, true) if m.coverage > 0.0 => Some(GazeErrorType::PartOf),
        (true, false) => Some(GazeErrorType::MoreThan),
        _ if m.other_object => Some(GazeErrorType::OtherObject),
        _ => Some(GazeErrorType::Background),
    })
}

fn stage<'a>(traces: &'a [StageTrace], name: &str) -> Option<&'a StageTrace> {
    traces.iter().find(|t| t.stage == name)
}

fn holds_target(trace: &StageTrace, ids: &[u32], target: &BBox) -> bool {
    trace.candidates_in.iter().filter(|c| ids.contains(&c.id)).any(|c| iou(&c.bbox, target) >= CANDIDATE_MATCH_IOU)
}

/// Which stage lost the target in a failed correction: detection, the
/// filters, the command reading, or the final scoring.
pub fn attribute_disambiguation_error(
    traces: &[StageTrace],
    target_box: &BBox,
    parsed: Option<&ParsedCommand>,
    intended: &ParsedCommand,
) -> DisambiguationErrorType {
    let Some(parsed) = parsed else {
        return DisambiguationErrorType::ModelComprehension;
    };
    match stage(traces, STAGE_COLLECT) {
        Some(t) if holds_target(t, &t.kept, target_box) => {}
        _ => return DisambiguationErrorType::ObjectDetection,
    }
    for name in [STAGE_NOISY, STAGE_SPATIAL] {
        if let Some(t) = stage(traces, name) {
            if !holds_target(t, &t.kept, target_box) {
                return DisambiguationErrorType::ObjectFiltering;
            }
        }
    }
    // Implicit references are filled from the dialog; only a spoken one is checked.
    let same_reference = match (&parsed.reference, &intended.reference) {
        (_, None) => true,
        (Some(a), Some(b)) => a.same_structure(b),
        _ => false,
    };
    if !parsed.target.same_structure(&intended.target) || parsed.relation != intended.relation || !same_reference {
        return DisambiguationErrorType::ModelComprehension;
    }
    DisambiguationErrorType::ObjectLocalization
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialog::TraceCandidate;
    use crate::geometry::CandidateSource;
    use crate::parser::{ObjectDescriptor, Relation};

    fn sq(x: u32, y: u32, s: u32) -> Mask {
        Mask::from_box(100, 100, &BBox::new(x, y, x + s, y + s))
    }

    #[test]
    fn taxonomy_examples() {
        let target = sq(10, 10, 20);
        let neighbor = sq(30, 10, 20);
        let others = [&neighbor];
        let exact = classify_mask(&target, &target, &others).unwrap();
        assert_eq!((exact.coverage, exact.precision), (1.0, 1.0));
        let part = classify_mask(&sq(10, 10, 11), &target, &others).unwrap();
        assert!(part.coverage < 0.9 && part.precision == 1.0);
        let both = target.union(&neighbor).unwrap();
        let more = classify_mask(&both, &target, &others).unwrap();
        assert_eq!((more.coverage, more.precision), (1.0, 0.5));
        let other = classify_mask(&neighbor, &target, &others).unwrap();
        assert!(other.other_object && other.coverage == 0.0);
    }

    fn trace(stage: &str, boxes: &[(u32, BBox)], kept: &[u32]) -> StageTrace {
        let mut t = StageTrace::new(stage);
        t.candidates_in = boxes.iter().map(|(id, b)| TraceCandidate { id: *id, bbox: *b, source: CandidateSource::Detector, label: None }).collect();
        t.kept = kept.to_vec();
        t
    }

    #[test]
    fn attribution_order() {
        let target = BBox::new(10, 10, 30, 30);
        let other = BBox::new(50, 50, 70, 70);
        let cmd = ParsedCommand { target: ObjectDescriptor::new("cup", &["red"]), reference: None, relation: Relation::NextTo, resolved_from: None };
        let missing = vec![trace(STAGE_COLLECT, &[(1, other)], &[1])];
        assert_eq!(attribute_disambiguation_error(&missing, &target, Some(&cmd), &cmd), DisambiguationErrorType::ObjectDetection);
        let filtered = vec![trace(STAGE_COLLECT, &[(1, other), (2, target)], &[1, 2]), trace(STAGE_NOISY, &[(1, other), (2, target)], &[1])];
        assert_eq!(attribute_disambiguation_error(&filtered, &target, Some(&cmd), &cmd), DisambiguationErrorType::ObjectFiltering);
        let kept = vec![trace(STAGE_COLLECT, &[(2, target)], &[2]), trace(STAGE_NOISY, &[(2, target)], &[2])];
        assert_eq!(attribute_disambiguation_error(&kept, &target, Some(&cmd), &cmd), DisambiguationErrorType::ObjectLocalization);
        let mut misread = cmd.clone();
        misread.target.identity = "book".into();
        assert_eq!(attribute_disambiguation_error(&kept, &target, Some(&misread), &cmd), DisambiguationErrorType::ModelComprehension);
        assert_eq!(attribute_disambiguation_error(&kept, &target, None, &cmd), DisambiguationErrorType::ModelComprehension);
    }
}
