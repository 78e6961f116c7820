//! Ground-truth scenes: labeled, colored, optionally part-structured
//! polygons on a raster canvas.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colors::color_rgb;
use crate::gaze::FrameSource;
use crate::geometry::{rasterize_polygon, BBox, Mask};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("object {0}: polygon needs at least three vertices")]
    DegeneratePolygon(u32),
    #[error("object {0}: polygon leaves the canvas")]
    OutOfCanvas(u32),
    #[error("object {id}: unknown color {color:?}")]
    UnknownColor { id: u32, color: String },
    #[error("object {id}: part {part:?} extends outside its parent")]
    PartOutsideParent { id: u32, part: String },
    #[error("object {0}: rasterizes to no visible pixels")]
    Invisible(u32),
    #[error("duplicate object id {0}")]
    DuplicateId(u32),
    #[error("unknown object id {0}")]
    UnknownObject(u32),
    #[error("invalid scene document: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectPart {
    pub name: String,
    pub color: String,
    pub polygon: Vec<[f64; 2]>,
    #[serde(default)]
    pub salient: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: u32,
    pub category: String,
    pub color: String,
    pub polygon: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parts: Vec<ObjectPart>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub adjectives: Vec<String>,
    /// Distance from the viewer, meters.
    #[serde(default = "default_depth")]
    pub depth: f64,
}

fn default_depth() -> f64 {
    0.8
}

/// Serializable scene document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub pixels_per_degree: f64,
    pub background: [u8; 3],
    #[serde(default = "default_background_depth")]
    pub background_depth: f64,
    pub objects: Vec<SceneObject>,
}

fn default_background_depth() -> f64 {
    1.5
}

pub const BACKGROUND_RGB: [u8; 3] = [196, 184, 160];

/// A part rasterized inside its parent object.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltPart {
    pub name: String,
    pub color: String,
    pub rgb: [u8; 3],
    pub salient: bool,
    pub mask: Mask,
    pub bbox: BBox,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuiltObject {
    pub spec: SceneObject,
    pub rgb: [u8; 3],
    /// Visible pixels (later objects occlude earlier ones).
    pub mask: Mask,
    pub bbox: BBox,
    pub parts: Vec<BuiltPart>,
}

impl BuiltObject {
    pub fn id(&self) -> u32 {
        self.spec.id
    }

    pub fn category(&self) -> &str {
        &self.spec.category
    }

    pub fn color(&self) -> &str {
        &self.spec.color
    }

    pub fn part_at(&self, x: u32, y: u32) -> Option<&BuiltPart> {
        self.parts.iter().filter(|p| p.mask.contains(x, y)).min_by_key(|p| p.mask.area())
    }
}

/// Something in the scene a mask can refer to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Element<'a> {
    Object(&'a BuiltObject),
    Part(&'a BuiltObject, &'a BuiltPart),
}

impl<'a> Element<'a> {
    pub fn mask(&self) -> &'a Mask {
        match self {
            Element::Object(o) => &o.mask,
            Element::Part(_, p) => &p.mask,
        }
    }

    pub fn bbox(&self) -> BBox {
        match self {
            Element::Object(o) => o.bbox,
            Element::Part(_, p) => p.bbox,
        }
    }

    pub fn object(&self) -> &'a BuiltObject {
        match self {
            Element::Object(o) | Element::Part(o, _) => o,
        }
    }

    pub fn name(&self) -> &'a str {
        match self {
            Element::Object(o) => &o.spec.category,
            Element::Part(_, p) => &p.name,
        }
    }

    pub fn color(&self) -> &'a str {
        match self {
            Element::Object(o) => &o.spec.color,
            Element::Part(_, p) => &p.color,
        }
    }

    pub fn adjectives(&self) -> &'a [String] {
        match self {
            Element::Object(o) => &o.spec.adjectives,
            Element::Part(..) => &[],
        }
    }
}

/// A scene with its rasterized masks.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    spec: SceneSpec,
    objects: Vec<BuiltObject>,
    occupied: Mask,
}

impl Scene {
    pub fn build(spec: SceneSpec) -> Result<Scene, SceneError> {
        let (w, h) = (spec.width, spec.height);
        let mut seen = std::collections::BTreeSet::new();
        let mut rasters = Vec::with_capacity(spec.objects.len());
        for obj in &spec.objects {
            if !seen.insert(obj.id) {
                return Err(SceneError::DuplicateId(obj.id));
            }
            if obj.polygon.len() < 3 {
                return Err(SceneError::DegeneratePolygon(obj.id));
            }
            if obj.polygon.iter().any(|p| p[0] < 0.0 || p[1] < 0.0 || p[0] > w as f64 || p[1] > h as f64) {
                return Err(SceneError::OutOfCanvas(obj.id));
            }
            if color_rgb(&obj.color).is_none() {
                return Err(SceneError::UnknownColor { id: obj.id, color: obj.color.clone() });
            }
            rasters.push(rasterize_polygon(w, h, &obj.polygon));
        }
        let mut objects = Vec::with_capacity(rasters.len());
        let mut above = Mask::empty(w, h);
        let mut visible = vec![Mask::empty(w, h); rasters.len()];
        for i in (0..rasters.len()).rev() {
            visible[i] = rasters[i].difference(&above).expect("same canvas");
            above = above.union(&rasters[i]).expect("same canvas");
        }
        for (obj, mask) in spec.objects.iter().zip(visible) {
            let bbox = mask.tight_box().map_err(|_| SceneError::Invisible(obj.id))?;
            let mut parts = Vec::with_capacity(obj.parts.len());
            for part in &obj.parts {
                let rgb = color_rgb(&part.color).ok_or_else(|| SceneError::UnknownColor { id: obj.id, color: part.color.clone() })?;
                let raw = rasterize_polygon(w, h, &part.polygon);
                if !raw.difference(&mask).expect("same canvas").is_empty() {
                    return Err(SceneError::PartOutsideParent { id: obj.id, part: part.name.clone() });
                }
                let bbox = raw.tight_box().map_err(|_| SceneError::Invisible(obj.id))?;
                parts.push(BuiltPart { name: part.name.clone(), color: part.color.clone(), rgb, salient: part.salient, mask: raw, bbox });
            }
            objects.push(BuiltObject { spec: obj.clone(), rgb: color_rgb(&obj.color).expect("checked"), mask, bbox, parts });
        }
        Ok(Scene { spec, objects, occupied: above })
    }

    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        let spec: SceneSpec = serde_json::from_str(text).map_err(|e| SceneError::Parse(e.to_string()))?;
        Scene::build(spec)
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn width(&self) -> u32 {
        self.spec.width
    }

    pub fn height(&self) -> u32 {
        self.spec.height
    }

    pub fn pixels_per_degree(&self) -> f64 {
        self.spec.pixels_per_degree
    }

    pub fn canvas(&self) -> BBox {
        BBox::new(0, 0, self.spec.width, self.spec.height)
    }

    pub fn objects(&self) -> &[BuiltObject] {
        &self.objects
    }

    pub fn object(&self, id: u32) -> Result<&BuiltObject, SceneError> {
        self.objects.iter().find(|o| o.id() == id).ok_or(SceneError::UnknownObject(id))
    }

    /// Union of all object pixels.
    pub fn occupied(&self) -> &Mask {
        &self.occupied
    }

    pub fn object_at(&self, x: u32, y: u32) -> Option<&BuiltObject> {
        self.objects.iter().find(|o| o.bbox.contains_point(x, y) && o.mask.contains(x, y))
    }

    /// Every object and part, objects first.
    pub fn elements(&self) -> Vec<Element<'_>> {
        let mut out: Vec<Element<'_>> = self.objects.iter().map(Element::Object).collect();
        for o in &self.objects {
            out.extend(o.parts.iter().map(|p| Element::Part(o, p)));
        }
        out
    }

    /// 4-connected background region containing `(x, y)`; empty when the
    /// pixel is occupied.
    pub fn flood_background(&self, x: u32, y: u32) -> Mask {
        let (w, h) = (self.width(), self.height());
        if x >= w || y >= h || self.occupied.contains(x, y) {
            return Mask::empty(w, h);
        }
        let mut blocked = self.occupied.to_bitmap();
        let mut filled = vec![false; blocked.len()];
        let mut queue = VecDeque::from([(x, y)]);
        blocked[(y * w + x) as usize] = true;
        while let Some((cx, cy)) = queue.pop_front() {
            filled[(cy * w + cx) as usize] = true;
            let neighbors = [
                (cx.wrapping_sub(1), cy),
                (cx + 1, cy),
                (cx, cy.wrapping_sub(1)),
                (cx, cy + 1),
            ];
            for (nx, ny) in neighbors {
                if nx < w && ny < h {
                    let idx = (ny * w + nx) as usize;
                    if !blocked[idx] {
                        blocked[idx] = true;
                        queue.push_back((nx, ny));
                    }
                }
            }
        }
        Mask::from_bitmap(w, h, &filled)
    }

    pub fn depth_at(&self, x: u32, y: u32) -> f64 {
        self.object_at(x, y).map(|o| o.spec.depth).unwrap_or(self.spec.background_depth)
    }
}

impl FrameSource for Scene {
    fn dimensions(&self) -> (u32, u32) {
        (self.spec.width, self.spec.height)
    }

    fn color_at(&self, x: u32, y: u32) -> [u8; 3] {
        match self.object_at(x, y) {
            Some(o) => o.part_at(x, y).map(|p| p.rgb).unwrap_or(o.rgb),
            None => self.spec.background,
        }
    }
}
