use serde::{Deserialize, Serialize};

use super::GeometryError;

/// Axis-aligned pixel box, inclusive-exclusive: a pixel `(x, y)` is inside
/// when `x0 <= x < x1` and `y0 <= y < y1`. Origin is the top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl BBox {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1, "inverted box");
        BBox { x0, y0, x1, y1 }
    }

    pub fn try_new(x0: u32, y0: u32, x1: u32, y1: u32) -> Result<Self, GeometryError> {
        if x0 > x1 || y0 > y1 {
            return Err(GeometryError::InvertedBox { x0, y0, x1, y1 });
        }
        Ok(BBox { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.x0 == self.x1 || self.y0 == self.y1
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x0 as f64 + self.x1 as f64) / 2.0,
            (self.y0 as f64 + self.y1 as f64) / 2.0,
        )
    }

    /// Overlapping region; an empty box anchored at the clamp point when disjoint.
    pub fn intersect(&self, other: &BBox) -> BBox {
        let x0 = self.x0.max(other.x0);
        let y0 = self.y0.max(other.y0);
        let x1 = self.x1.min(other.x1).max(x0);
        let y1 = self.y1.min(other.y1).max(y0);
        BBox { x0, y0, x1, y1 }
    }

    pub fn intersection_area(&self, other: &BBox) -> u64 {
        self.intersect(other).area()
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        self.intersection_area(other) > 0
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BBox) -> BBox {
        BBox {
            x0: self.x0.min(other.x0),
            y0: self.y0.min(other.y0),
            x1: self.x1.max(other.x1),
            y1: self.y1.max(other.y1),
        }
    }

    pub fn contains_box(&self, other: &BBox) -> bool {
        other.x0 >= self.x0 && other.y0 >= self.y0 && other.x1 <= self.x1 && other.y1 <= self.y1
    }

    pub fn contains_point(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Grow by `pad` pixels on every side, clamped to a `width` x `height` canvas.
    pub fn expand(&self, pad: u32, width: u32, height: u32) -> BBox {
        BBox {
            x0: self.x0.saturating_sub(pad),
            y0: self.y0.saturating_sub(pad),
            x1: self.x1.saturating_add(pad).min(width),
            y1: self.y1.saturating_add(pad).min(height),
        }
    }

    pub fn within_canvas(&self, width: u32, height: u32) -> bool {
        self.x1 <= width && self.y1 <= height
    }

    /// Euclidean distance between box centers.
    pub fn center_distance(&self, other: &BBox) -> f64 {
        let (ax, ay) = self.center();
        let (bx, by) = other.center();
        (ax - bx).hypot(ay - by)
    }
}

/// Intersection over union; 0 when either box is empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iou_examples() {
        let a = BBox::new(0, 0, 10, 10);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BBox::new(10, 0, 20, 10)), 0.0);
        assert_eq!(iou(&a, &BBox::new(5, 0, 15, 10)), 50.0 / 150.0);
    }

    #[test]
    fn empty_boxes_have_zero_iou() {
        let e = BBox::new(3, 3, 3, 9);
        assert_eq!(iou(&e, &e), 0.0);
        assert_eq!(iou(&e, &BBox::new(0, 0, 10, 10)), 0.0);
    }

    #[test]
    fn expand_clamps_to_canvas() {
        let b = BBox::new(100, 100, 200, 200);
        assert_eq!(b.expand(150, 1080, 1080), BBox::new(0, 0, 350, 350));
        assert_eq!(BBox::new(1000, 1000, 1080, 1080).expand(150, 1080, 1080), BBox::new(850, 850, 1080, 1080));
    }

    #[test]
    fn try_new_rejects_inverted() {
        assert!(BBox::try_new(5, 0, 4, 3).is_err());
    }
}
