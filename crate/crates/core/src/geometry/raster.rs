use super::Mask;

/// Rounds a sub-pixel coordinate to a pixel index (half-to-even), clamped
/// to `[0, limit)`.
pub fn to_pixel(v: f64, limit: u32) -> u32 {
    if limit == 0 {
        return 0;
    }
    let r = v.round_ties_even();
    if r.is_nan() || r < 0.0 {
        0
    } else if r >= limit as f64 {
        limit - 1
    } else {
        r as u32
    }
}

/// Even-odd scanline fill: a pixel is set when its center lies inside the
/// polygon.
pub fn rasterize_polygon(width: u32, height: u32, polygon: &[[f64; 2]]) -> Mask {
    if polygon.len() < 3 {
        return Mask::empty(width, height);
    }
    let (min_y, max_y) = polygon
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[1]), hi.max(p[1])));
    let y_start = (min_y - 0.5).ceil().max(0.0) as u32;
    let y_end = ((max_y - 0.5).floor() + 1.0).clamp(0.0, height as f64) as u32;
    let mut spans = Vec::new();
    let mut xs: Vec<f64> = Vec::new();
    for y in y_start..y_end {
        let yc = y as f64 + 0.5;
        xs.clear();
        for i in 0..polygon.len() {
            let a = polygon[i];
            let b = polygon[(i + 1) % polygon.len()];
            if (a[1] <= yc && yc < b[1]) || (b[1] <= yc && yc < a[1]) {
                let t = (yc - a[1]) / (b[1] - a[1]);
                xs.push(a[0] + t * (b[0] - a[0]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            // Pixel x is inside when pair[0] <= x + 0.5 < pair[1].
            let lo = (pair[0] - 0.5).ceil().max(0.0);
            let hi = (pair[1] - 0.5).ceil().clamp(0.0, width as f64);
            if lo < hi {
                spans.push((y, lo as u32, hi as u32));
            }
        }
    }
    Mask::from_row_spans(width, height, spans)
}

/// Axis-aligned rectangle as a polygon.
pub fn rect_polygon(x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<[f64; 2]> {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]]
}

/// Ellipse inscribed in the given rectangle, approximated by `segments` vertices.
pub fn ellipse_polygon(x0: f64, y0: f64, x1: f64, y1: f64, segments: usize) -> Vec<[f64; 2]> {
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let (rx, ry) = ((x1 - x0) / 2.0, (y1 - y0) / 2.0);
    (0..segments)
        .map(|i| {
            let t = i as f64 / segments as f64 * std::f64::consts::TAU;
            [cx + rx * t.cos(), cy + ry * t.sin()]
        })
        .collect()
}
