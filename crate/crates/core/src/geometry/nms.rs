use serde::{Deserialize, Serialize};

use super::{iou, BBox, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    GlobalSeg,
    Detector,
}

/// A candidate object box with its provenance. Global-segmentation
/// candidates carry the mask whose tight box is `bbox`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateBox {
    pub id: u32,
    pub bbox: BBox,
    pub source: CandidateSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Mask>,
    /// Detector class label, when the source reported one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl CandidateBox {
    pub fn from_mask(id: u32, mask: Mask) -> Option<Self> {
        let bbox = mask.tight_box().ok()?;
        Some(CandidateBox { id, bbox, source: CandidateSource::GlobalSeg, mask: Some(mask), label: None })
    }

    pub fn from_detection(id: u32, bbox: BBox, label: Option<String>) -> Self {
        CandidateBox { id, bbox, source: CandidateSource::Detector, mask: None, label }
    }
}

/// Greedy non-maximum suppression.
///
/// Priority: global-segmentation candidates first, then larger area, then
/// lower id. A candidate is dropped when its IoU with any already-kept
/// candidate exceeds `iou_threshold`. Output is in priority order.
pub fn nms(candidates: &[CandidateBox], iou_threshold: f64) -> Vec<CandidateBox> {
    let mut order: Vec<&CandidateBox> = candidates.iter().collect();
    order.sort_by(|a, b| {
        a.source
            .cmp(&b.source)
            .then(b.bbox.area().cmp(&a.bbox.area()))
            .then(a.id.cmp(&b.id))
    });
    let mut kept: Vec<CandidateBox> = Vec::new();
    for c in order {
        if kept.iter().all(|k| iou(&k.bbox, &c.bbox) <= iou_threshold) {
            kept.push(c.clone());
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(id: u32, x0: u32, y0: u32, x1: u32, y1: u32) -> CandidateBox {
        CandidateBox::from_detection(id, BBox::new(x0, y0, x1, y1), None)
    }

    #[test]
    fn disjoint_boxes_survive() {
        let out = nms(&[det(0, 0, 0, 10, 10), det(1, 20, 20, 30, 30)], 0.8);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn global_seg_outranks_detector() {
        let mask = Mask::from_box(40, 40, &BBox::new(5, 5, 15, 15));
        let seg = CandidateBox::from_mask(1, mask).unwrap();
        let out = nms(&[det(0, 5, 5, 15, 15), seg], 0.8);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].source, CandidateSource::GlobalSeg);
    }

    #[test]
    fn overlapping_pair_suppressed() {
        let out = nms(&[det(0, 0, 0, 10, 10), det(1, 1, 1, 11, 11), det(2, 30, 30, 40, 40)], 0.5);
        let ids: Vec<u32> = out.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![0, 2]);
    }

    #[test]
    fn empty_input() {
        assert!(nms(&[], 0.8).is_empty());
    }
}
