//! PNG rasters of scenes and mask overlays.

use std::io::Cursor;

use gazeref_core::geometry::Mask;
use gazeref_core::scene::Scene;
use image::{ImageFormat, Rgb, RgbImage};

/// Highlight blended over selected pixels.
pub const OVERLAY_RGB: [u8; 3] = [0, 200, 255];
const OVERLAY_ALPHA: f64 = 0.55;

fn paint(img: &mut RgbImage, mask: &Mask, rgb: [u8; 3]) {
    for (y, x0, x1) in mask.row_spans() {
        for x in x0..x1 {
            img.put_pixel(x, y, Rgb(rgb));
        }
    }
}

/// Flat-colored raster: background, then each object, then its parts.
pub fn render_scene(scene: &Scene) -> RgbImage {
    let spec = scene.spec();
    let mut img = RgbImage::from_pixel(scene.width(), scene.height(), Rgb(spec.background));
    for o in scene.objects() {
        paint(&mut img, &o.mask, o.rgb);
        for p in &o.parts {
            paint(&mut img, &p.mask, p.rgb);
        }
    }
    img
}

/// Blends [`OVERLAY_RGB`] over the masked pixels.
pub fn overlay(img: &mut RgbImage, mask: &Mask) {
    let blend = |a: u8, b: u8| ((1.0 - OVERLAY_ALPHA) * a as f64 + OVERLAY_ALPHA * b as f64).round() as u8;
    for (y, x0, x1) in mask.row_spans() {
        for x in x0..x1.min(img.width()) {
            let p = img.get_pixel_mut(x, y);
            *p = Rgb([blend(p[0], OVERLAY_RGB[0]), blend(p[1], OVERLAY_RGB[1]), blend(p[2], OVERLAY_RGB[2])]);
        }
    }
}

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

pub fn scene_png(scene: &Scene, mask: Option<&Mask>) -> Vec<u8> {
    let mut img = render_scene(scene);
    if let Some(m) = mask {
        overlay(&mut img, m);
    }
    encode_png(&img)
}
