use serde::{Deserialize, Serialize};

use super::{BBox, GeometryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Above,
    Below,
}

/// Whether `candidate` lies on `side` of `reference`.
///
/// True when the candidate is entirely on that side, or when it starts on
/// that side and the part of it reaching past the reference's near edge is
/// shorter than `alpha` times the reference's extent along the same axis.
pub fn side_of(candidate: &BBox, reference: &BBox, side: Side, alpha: f64) -> Result<bool, GeometryError> {
    let extent = match side {
        Side::Left | Side::Right => reference.width(),
        Side::Above | Side::Below => reference.height(),
    };
    if extent == 0 {
        return Err(GeometryError::DegenerateReference(*reference));
    }
    let extent = extent as f64;
    let (c, r) = (candidate, reference);
    Ok(match side {
        Side::Left => c.x1 <= r.x0 || (c.x0 < r.x0 && (c.x1 - r.x0) as f64 / extent < alpha),
        Side::Right => c.x0 >= r.x1 || (c.x1 > r.x1 && (r.x1 - c.x0) as f64 / extent < alpha),
        Side::Above => c.y1 <= r.y0 || (c.y0 < r.y0 && (c.y1 - r.y0) as f64 / extent < alpha),
        Side::Below => c.y0 >= r.y1 || (c.y1 > r.y1 && (r.y1 - c.y0) as f64 / extent < alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn left_examples() {
        let r = BBox::new(10, 0, 20, 10);
        assert!(side_of(&BBox::new(0, 0, 5, 5), &r, Side::Left, 0.5).unwrap());
        assert!(side_of(&BBox::new(8, 0, 14, 10), &r, Side::Left, 0.5).unwrap());
        assert!(!side_of(&BBox::new(8, 0, 16, 10), &r, Side::Left, 0.5).unwrap());
    }

    #[test]
    fn candidate_starting_inside_is_never_left() {
        let r = BBox::new(10, 0, 20, 10);
        assert!(!side_of(&BBox::new(10, 0, 11, 10), &r, Side::Left, 1.0).unwrap());
    }

    #[test]
    fn vertical_sides() {
        let r = BBox::new(0, 10, 10, 20);
        assert!(side_of(&BBox::new(0, 0, 10, 10), &r, Side::Above, 0.5).unwrap());
        assert!(side_of(&BBox::new(0, 16, 10, 30), &r, Side::Below, 0.5).unwrap());
        assert!(!side_of(&BBox::new(0, 12, 10, 30), &r, Side::Below, 0.5).unwrap());
    }

    #[test]
    fn degenerate_reference_errors() {
        let r = BBox::new(10, 0, 10, 10);
        assert!(side_of(&BBox::new(0, 0, 5, 5), &r, Side::Left, 0.5).is_err());
        // The vertical axis is still well defined.
        assert!(side_of(&BBox::new(0, 20, 5, 25), &r, Side::Below, 0.5).is_ok());
    }
}
