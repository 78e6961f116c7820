use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{hash_str, mix, BackendError, BoxSegmentation, Detection, ModelBackend, PatchScore, SegmentationResult};
use crate::describer::{describe_selection, ContextRegion, DescribeError, DescriberConfig, Description};
use crate::geometry::{iou, to_pixel, BBox, Mask};
use crate::parser::lexicon::identity_matches;
use crate::parser::ObjectDescriptor;
use crate::scene::{BuiltObject, Element, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendDegradation {
    /// Objects and parts with fewer visible pixels are never reported.
    pub min_detectable_area: u64,
    pub detect_miss_rate: f64,
    /// Standard deviation of Gaussian noise on patch scores.
    pub scorer_noise: f64,
    pub seed: u64,
}

impl Default for BackendDegradation {
    fn default() -> Self {
        BackendDegradation { min_detectable_area: 0, detect_miss_rate: 0.0, scorer_noise: 0.0, seed: 0 }
    }
}

impl BackendDegradation {
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.detect_miss_rate) {
            return Err(format!("detect_miss_rate {} outside [0, 1]", self.detect_miss_rate));
        }
        if !(self.scorer_noise >= 0.0 && self.scorer_noise.is_finite()) {
            return Err(format!("scorer_noise {} must be a non-negative number", self.scorer_noise));
        }
        Ok(())
    }
}

/// Confidence constants and geometric thresholds of the oracle. They pick
/// which failure modes the oracle reproduces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleFixtures {
    pub part_confidence: f64,
    pub salient_part_confidence: f64,
    pub object_confidence: f64,
    pub group_confidence: f64,
    /// Group confidence when the point sits this close to another object.
    pub boundary_group_confidence: f64,
    pub boundary_radius: u32,
    pub background_confidences: [f64; 3],
    /// Background window mask half-size, pixels.
    pub background_window: u32,
    pub noisy_min_iou: f64,
    pub noisy_object_fraction: f64,
    pub noisy_background_fraction: f64,
    /// Below this box IoU with every element, a patch is background.
    pub patch_min_iou: f64,
}

impl Default for OracleFixtures {
    fn default() -> Self {
        OracleFixtures {
            part_confidence: 0.7,
            salient_part_confidence: 0.95,
            object_confidence: 0.9,
            group_confidence: 0.6,
            boundary_group_confidence: 0.92,
            boundary_radius: 9,
            background_confidences: [0.5, 0.3, 0.2],
            background_window: 48,
            noisy_min_iou: 0.4,
            noisy_object_fraction: 0.3,
            noisy_background_fraction: 0.8,
            patch_min_iou: 0.25,
        }
    }
}

const TAG_EVERYTHING: u64 = 1;
const TAG_DETECT: u64 = 2;
const TAG_SCORE: u64 = 3;

/// Ground-truth answers over a synthetic scene.
#[derive(Debug, Clone)]
pub struct OracleBackend {
    scene: Arc<Scene>,
    degradation: BackendDegradation,
    fixtures: OracleFixtures,
    describer: DescriberConfig,
}

impl OracleBackend {
    pub fn new(scene: Arc<Scene>, degradation: BackendDegradation) -> Self {
        OracleBackend { scene, degradation, fixtures: OracleFixtures::default(), describer: DescriberConfig::default() }
    }

    pub fn with_fixtures(mut self, fixtures: OracleFixtures) -> Self {
        self.fixtures = fixtures;
        self
    }

    pub fn with_describer(mut self, describer: DescriberConfig) -> Self {
        self.describer = describer;
        self
    }

    pub fn scene(&self) -> &Arc<Scene> {
        &self.scene
    }

    fn missed(&self, tag: u64, object: u32, part: u64) -> bool {
        let rate = self.degradation.detect_miss_rate;
        if rate <= 0.0 {
            return false;
        }
        let u = (mix(self.degradation.seed, &[tag, object as u64, part]) >> 11) as f64 / (1u64 << 53) as f64;
        u < rate
    }

    fn detectable(&self, mask: &Mask) -> bool {
        !mask.is_empty() && mask.area() >= self.degradation.min_detectable_area
    }

    fn near_other_object(&self, px: u32, py: u32, object: &BuiltObject) -> bool {
        let r = self.fixtures.boundary_radius;
        let window = BBox::new(px.saturating_sub(r), py.saturating_sub(r), px + r + 1, py + r + 1).intersect(&self.scene.canvas());
        self.scene
            .objects()
            .iter()
            .filter(|o| o.id() != object.id() && o.bbox.intersects(&window))
            .any(|o| !o.mask.clip_to_box(&window).is_empty())
    }

    fn object_granularities(&self, px: u32, py: u32, object: &BuiltObject) -> SegmentationResult {
        let f = &self.fixtures;
        let (part_mask, part_conf) = match object.part_at(px, py) {
            Some(p) => (p.mask.clone(), if p.salient { f.salient_part_confidence } else { f.part_confidence }),
            None => {
                let half = (object.bbox.width().max(object.bbox.height()) / 4).max(2);
                let square = BBox::new(px.saturating_sub(half), py.saturating_sub(half), px + half + 1, py + half + 1);
                (object.mask.clip_to_box(&square), f.part_confidence)
            }
        };
        let pad = (object.bbox.width().max(object.bbox.height()) / 4).max(4);
        let dilated = object.bbox.expand(pad, self.scene.width(), self.scene.height());
        let mut group = object.mask.clone();
        for other in self.scene.objects().iter().filter(|o| o.id() != object.id() && o.bbox.intersects(&dilated)) {
            group = group.union(&other.mask).expect("scene masks share a canvas");
        }
        let group_conf = if self.near_other_object(px, py, object) { f.boundary_group_confidence } else { f.group_confidence };
        SegmentationResult { masks: vec![part_mask, object.mask.clone(), group], confidences: vec![part_conf, f.object_confidence, group_conf] }
    }

    fn background_granularities(&self, px: u32, py: u32) -> SegmentationResult {
        let s = &self.scene;
        let component = s.flood_background(px, py);
        let r = self.fixtures.background_window;
        let window = BBox::new(px.saturating_sub(r), py.saturating_sub(r), px + r + 1, py + r + 1).intersect(&s.canvas());
        let local = component.clip_to_box(&window);
        let everything = Mask::full(s.width(), s.height()).difference(s.occupied()).expect("same canvas");
        SegmentationResult { masks: vec![component, local, everything], confidences: self.fixtures.background_confidences.to_vec() }
    }

    /// Scene element whose tight box overlaps `bbox` most, with that IoU.
    fn dominant_element(&self, bbox: &BBox) -> Option<(Element<'_>, f64)> {
        self.scene
            .elements()
            .into_iter()
            .filter(|e| e.bbox().intersects(bbox))
            .map(|e| {
                let v = iou(&e.bbox(), bbox);
                (e, v)
            })
            .fold(None, |best: Option<(Element<'_>, f64)>, (e, v)| match best {
                Some((_, bv)) if bv >= v => best,
                _ => Some((e, v)),
            })
    }

    /// Noise-free match fraction of a descriptor against an element.
    pub fn match_fraction(element: &Element<'_>, descriptor: &ObjectDescriptor) -> (f64, String) {
        let mut total = 0usize;
        let mut hits = Vec::new();
        let mut misses = Vec::new();
        if !descriptor.identity.is_empty() {
            total += 1;
            if identity_matches(&descriptor.identity, element.name()) {
                hits.push(descriptor.identity.clone());
            } else {
                misses.push(descriptor.identity.clone());
            }
        }
        for adj in &descriptor.adjectives {
            total += 1;
            if adj == element.color() || element.adjectives().iter().any(|a| a == adj) {
                hits.push(adj.clone());
            } else {
                misses.push(adj.clone());
            }
        }
        if total == 0 {
            return (0.0, "nothing to match".into());
        }
        let score = hits.len() as f64 / total as f64;
        let rationale = format!(
            "{} {} of {}: matched [{}], missed [{}]",
            element.color(),
            element.name(),
            total,
            hits.join(", "),
            misses.join(", ")
        );
        (score, rationale)
    }
}

impl ModelBackend for OracleBackend {
    fn segment_point(&self, point: (f64, f64)) -> Result<SegmentationResult, BackendError> {
        let (w, h) = (self.scene.width(), self.scene.height());
        let (x, y) = point;
        if !(x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64) {
            return Err(BackendError::OffCanvas(x, y));
        }
        let (px, py) = (to_pixel(x, w), to_pixel(y, h));
        Ok(match self.scene.object_at(px, py) {
            Some(object) => self.object_granularities(px, py, object),
            None => self.background_granularities(px, py),
        })
    }

    fn segment_box(&self, bbox: &BBox) -> Result<BoxSegmentation, BackendError> {
        let s = &self.scene;
        if bbox.is_empty() || !bbox.within_canvas(s.width(), s.height()) {
            return Err(BackendError::InvalidInput { capability: "segment_box".into(), reason: format!("box {bbox:?} is empty or off the canvas") });
        }
        let mut scored: Vec<(f64, &BuiltObject)> = s.objects().iter().map(|o| (iou(&o.bbox, bbox), o)).filter(|(v, _)| *v > 0.0).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.id().cmp(&b.1.id())));
        let clip = bbox.expand(2, s.width(), s.height());
        Ok(match scored.first() {
            Some((best, o)) => BoxSegmentation {
                mask: o.mask.clip_to_box(&clip),
                ambiguous: scored.get(1).is_some_and(|(v, _)| (best - v).abs() < 1e-12),
            },
            None => {
                let free = Mask::from_box(s.width(), s.height(), bbox).difference(s.occupied()).expect("same canvas");
                BoxSegmentation { mask: free, ambiguous: false }
            }
        })
    }

    fn segment_everything(&self) -> Result<Vec<Mask>, BackendError> {
        let mut out = Vec::new();
        for o in self.scene.objects() {
            if self.detectable(&o.mask) && !self.missed(TAG_EVERYTHING, o.id(), 0) {
                out.push(o.mask.clone());
            }
        }
        for o in self.scene.objects() {
            for (i, p) in o.parts.iter().enumerate().filter(|(_, p)| p.salient) {
                if self.detectable(&p.mask) && !self.missed(TAG_EVERYTHING, o.id(), i as u64 + 1) {
                    out.push(p.mask.clone());
                }
            }
        }
        Ok(out)
    }

    fn detect(&self) -> Result<Vec<Detection>, BackendError> {
        Ok(self
            .scene
            .objects()
            .iter()
            .filter(|o| self.detectable(&o.mask) && !self.missed(TAG_DETECT, o.id(), 0))
            .map(|o| Detection { bbox: o.bbox, label: o.category().to_string() })
            .collect())
    }

    fn judge_noisy(&self, bbox: &BBox) -> Result<bool, BackendError> {
        let f = &self.fixtures;
        let s = &self.scene;
        let area = bbox.area() as f64;
        if area == 0.0 {
            return Ok(true);
        }
        let best = s.objects().iter().map(|o| iou(&o.bbox, bbox)).fold(0.0, f64::max);
        if best < f.noisy_min_iou {
            return Ok(true);
        }
        let heavy = s
            .objects()
            .iter()
            .filter(|o| o.bbox.intersects(bbox))
            .filter(|o| o.mask.clip_to_box(bbox).area() as f64 >= f.noisy_object_fraction * area)
            .count();
        if heavy >= 2 {
            return Ok(true);
        }
        let background = area - s.occupied().clip_to_box(bbox).area() as f64;
        Ok(background >= f.noisy_background_fraction * area)
    }

    fn score_patch(&self, bbox: &BBox, descriptor: &ObjectDescriptor) -> Result<PatchScore, BackendError> {
        let Some((element, _)) = self.dominant_element(bbox).filter(|(_, v)| *v >= self.fixtures.patch_min_iou) else {
            return Ok(PatchScore { score: 0.0, rationale: "background patch".into() });
        };
        let (clean, rationale) = Self::match_fraction(&element, descriptor);
        let sigma = self.degradation.scorer_noise;
        let score = if sigma > 0.0 {
            let key = mix(
                self.degradation.seed,
                &[TAG_SCORE, bbox.x0 as u64, bbox.y0 as u64, bbox.x1 as u64, bbox.y1 as u64, hash_str(&format!("{descriptor:?}"))],
            );
            let noise = Normal::new(0.0, sigma).expect("finite sigma").sample(&mut ChaCha8Rng::seed_from_u64(key));
            (clean + noise).clamp(0.0, 1.0)
        } else {
            clean
        };
        Ok(PatchScore { score, rationale })
    }

    fn describe(&self, mask: &Mask, context: &ContextRegion) -> Result<Description, BackendError> {
        describe_selection(&self.scene, mask, context, &self.describer).map_err(|e| match e {
            DescribeError::EmptyMask => BackendError::InvalidInput { capability: "describe_free".into(), reason: "empty mask".into() },
            DescribeError::Geometry(g) => BackendError::InvalidInput { capability: "describe_free".into(), reason: g.to_string() },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rect_polygon;
    use crate::scene::{ObjectPart, SceneObject, SceneSpec, BACKGROUND_RGB};

    fn obj(id: u32, category: &str, color: &str, b: [f64; 4]) -> SceneObject {
        SceneObject {
            id,
            category: category.into(),
            color: color.into(),
            polygon: rect_polygon(b[0], b[1], b[2], b[3]),
            parts: vec![],
            adjectives: vec![],
            depth: 0.8,
        }
    }

    fn scene(objects: Vec<SceneObject>) -> Arc<Scene> {
        Arc::new(
            Scene::build(SceneSpec {
                id: "o".into(),
                width: 400,
                height: 300,
                pixels_per_degree: 12.0,
                background: BACKGROUND_RGB,
                background_depth: 1.5,
                objects,
            })
            .unwrap(),
        )
    }

    fn three() -> Arc<Scene> {
        let mut marker = obj(3, "marker", "purple", [250.0, 100.0, 350.0, 130.0]);
        marker.parts.push(ObjectPart { name: "cap".into(), color: "white".into(), polygon: rect_polygon(320.0, 100.0, 350.0, 130.0), salient: true });
        scene(vec![obj(1, "cup", "red", [20.0, 20.0, 80.0, 90.0]), obj(2, "cup", "blue", [120.0, 20.0, 180.0, 90.0]), marker])
    }

    #[test]
    fn point_prompts() {
        let s = three();
        let o = OracleBackend::new(s.clone(), BackendDegradation::default());
        let r = o.segment_point((50.0, 55.0)).unwrap();
        assert_eq!(r.confidences, vec![0.7, 0.9, 0.6]);
        assert_eq!(r.best_mask(), &s.objects()[0].mask);
        let r = o.segment_point((335.0, 115.0)).unwrap();
        assert_eq!(r.best_index(), 0);
        assert_eq!(r.confidences[0], 0.95);
        assert_eq!(r.best_mask(), &s.objects()[2].parts[0].mask);
        let r = o.segment_point((200.0, 250.0)).unwrap();
        assert_eq!(r.confidences, vec![0.5, 0.3, 0.2]);
        assert!(r.best_mask().contains(200, 250));
        assert!(matches!(o.segment_point((400.0, 10.0)), Err(BackendError::OffCanvas(..))));
    }

    #[test]
    fn boundary_point_prefers_group() {
        let s = scene(vec![obj(1, "cup", "red", [20.0, 20.0, 80.0, 90.0]), obj(2, "box", "blue", [83.0, 20.0, 140.0, 90.0])]);
        let o = OracleBackend::new(s.clone(), BackendDegradation::default());
        let r = o.segment_point((78.0, 50.0)).unwrap();
        assert_eq!(r.best_index(), 2);
        assert_eq!(r.best_mask().area(), s.objects()[0].mask.area() + s.objects()[1].mask.area());
    }

    #[test]
    fn everything_and_detect_respect_degradation() {
        let s = three();
        let o = OracleBackend::new(s.clone(), BackendDegradation::default());
        let masks = o.segment_everything().unwrap();
        assert_eq!(masks.len(), 4);
        for (m, obj) in masks.iter().zip(s.objects()) {
            assert_eq!(m.tight_box().unwrap(), obj.bbox);
        }
        let small = OracleBackend::new(s.clone(), BackendDegradation { min_detectable_area: 1000, ..Default::default() });
        assert_eq!(small.segment_everything().unwrap().len(), 3);
        assert_eq!(small.detect().unwrap().len(), 3);
        let tiny = OracleBackend::new(s.clone(), BackendDegradation { min_detectable_area: 3001, ..Default::default() });
        assert_eq!(tiny.detect().unwrap().iter().map(|d| d.label.as_str()).collect::<Vec<_>>(), vec!["cup", "cup"]);
        let lossy = BackendDegradation { detect_miss_rate: 0.5, seed: 9, ..Default::default() };
        let a = OracleBackend::new(s.clone(), lossy).segment_everything().unwrap();
        let b = OracleBackend::new(s, lossy).segment_everything().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noisy_judgements() {
        let s = scene(vec![obj(1, "cup", "red", [20.0, 20.0, 80.0, 90.0]), obj(2, "box", "blue", [80.0, 20.0, 140.0, 90.0])]);
        let o = OracleBackend::new(s.clone(), BackendDegradation::default());
        assert!(!o.judge_noisy(&s.objects()[0].bbox).unwrap());
        assert!(o.judge_noisy(&BBox::new(200, 150, 300, 250)).unwrap());
        assert!(o.judge_noisy(&BBox::new(50, 20, 110, 90)).unwrap());
    }

    #[test]
    fn patch_scores() {
        let s = three();
        let o = OracleBackend::new(s.clone(), BackendDegradation::default());
        let red_cup = ObjectDescriptor::new("cup", &["red"]);
        assert_eq!(o.score_patch(&s.objects()[0].bbox, &red_cup).unwrap().score, 1.0);
        assert_eq!(o.score_patch(&s.objects()[1].bbox, &red_cup).unwrap().score, 0.5);
        assert_eq!(o.score_patch(&BBox::new(200, 200, 300, 280), &red_cup).unwrap().score, 0.0);
        assert_eq!(o.score_patch(&s.objects()[0].bbox, &ObjectDescriptor::new("mug", &[])).unwrap().score, 1.0);
        let cap = s.objects()[2].parts[0].bbox;
        assert_eq!(o.score_patch(&cap, &ObjectDescriptor::new("cap", &["white"])).unwrap().score, 1.0);
        let noisy = OracleBackend::new(s.clone(), BackendDegradation { scorer_noise: 0.2, seed: 3, ..Default::default() });
        let a = noisy.score_patch(&s.objects()[1].bbox, &red_cup).unwrap().score;
        assert_eq!(a, noisy.score_patch(&s.objects()[1].bbox, &red_cup).unwrap().score);
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn box_segmentation_stays_in_box() {
        let s = three();
        let o = OracleBackend::new(s.clone(), BackendDegradation::default());
        let b = BBox::new(18, 18, 82, 92);
        let r = o.segment_box(&b).unwrap();
        assert!(b.expand(2, 400, 300).contains_box(&r.mask.tight_box().unwrap()));
        assert_eq!(r.mask, s.objects()[0].mask);
        assert!(!r.ambiguous);
    }
}
