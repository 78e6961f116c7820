//! Pixel geometry: boxes, run-length masks, overlap metrics, suppression
//! and the side-of-reference predicate.

mod bbox;
mod mask;
mod nms;
mod raster;
mod side;

pub use bbox::{iou, BBox};
pub use mask::{coverage, Mask};
pub use nms::{nms, CandidateBox, CandidateSource};
pub use raster::{ellipse_polygon, rasterize_polygon, rect_polygon, to_pixel};
pub use side::{side_of, Side};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("mask dimensions differ: {left:?} vs {right:?}")]
    DimensionMismatch { left: (u32, u32), right: (u32, u32) },
    #[error("reference box {0:?} has zero extent along the requested axis")]
    DegenerateReference(BBox),
    #[error("inverted box ({x0},{y0})-({x1},{y1})")]
    InvertedBox { x0: u32, y0: u32, x1: u32, y1: u32 },
    #[error("run [{start}, {len}] exceeds a {width}x{height} canvas")]
    RunOutOfBounds { start: u32, len: u32, width: u32, height: u32 },
    #[error("runs overlap at pixel index {at}")]
    OverlappingRuns { at: u32 },
}
