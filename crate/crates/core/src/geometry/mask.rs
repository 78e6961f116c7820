//! Run-length encoded binary masks.
//!
//! Runs are `[start, length]` pairs over the row-major pixel index
//! `y * width + x`. The canonical form keeps runs sorted, non-empty and
//! non-touching, so structural equality is pixel equality.

use serde::{Deserialize, Deserializer, Serialize};

use super::{BBox, GeometryError};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Mask {
    width: u32,
    height: u32,
    runs: Vec<[u32; 2]>,
}

#[derive(Deserialize)]
struct RawMask {
    width: u32,
    height: u32,
    runs: Vec<[u32; 2]>,
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawMask::deserialize(deserializer)?;
        Mask::from_runs(raw.width, raw.height, raw.runs).map_err(serde::de::Error::custom)
    }
}

impl Mask {
    pub fn empty(width: u32, height: u32) -> Self {
        Mask { width, height, runs: Vec::new() }
    }

    pub fn full(width: u32, height: u32) -> Self {
        let n = width * height;
        let runs = if n == 0 { Vec::new() } else { vec![[0, n]] };
        Mask { width, height, runs }
    }

    /// Builds a mask from arbitrary runs, validating bounds and normalizing
    /// order. Overlapping runs are rejected.
    pub fn from_runs(width: u32, height: u32, mut runs: Vec<[u32; 2]>) -> Result<Self, GeometryError> {
        let total = width as u64 * height as u64;
        runs.retain(|r| r[1] > 0);
        runs.sort_unstable();
        for r in &runs {
            if r[0] as u64 + r[1] as u64 > total {
                return Err(GeometryError::RunOutOfBounds { start: r[0], len: r[1], width, height });
            }
        }
        let mut merged: Vec<[u32; 2]> = Vec::with_capacity(runs.len());
        for r in runs {
            match merged.last_mut() {
                Some(last) if last[0] + last[1] > r[0] => {
                    return Err(GeometryError::OverlappingRuns { at: r[0] });
                }
                Some(last) if last[0] + last[1] == r[0] => last[1] += r[1],
                _ => merged.push(r),
            }
        }
        Ok(Mask { width, height, runs: merged })
    }

    /// Row-major bitmap of `width * height` entries.
    pub fn from_bitmap(width: u32, height: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), (width * height) as usize, "bitmap length must equal width*height");
        let mut runs = Vec::new();
        let mut start: Option<u32> = None;
        for (i, &b) in bits.iter().enumerate() {
            match (b, start) {
                (true, None) => start = Some(i as u32),
                (false, Some(s)) => {
                    runs.push([s, i as u32 - s]);
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push([s, bits.len() as u32 - s]);
        }
        Mask { width, height, runs }
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Self {
        let bits: Vec<bool> = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Mask::from_bitmap(width, height, &bits)
    }

    /// Filled rectangle, clipped to the canvas.
    pub fn from_box(width: u32, height: u32, b: &BBox) -> Self {
        let b = b.intersect(&BBox::new(0, 0, width, height));
        if b.is_empty() {
            return Mask::empty(width, height);
        }
        let mut runs = Vec::with_capacity(b.height() as usize);
        for y in b.y0..b.y1 {
            runs.push([y * width + b.x0, b.width()]);
        }
        // Adjacent full-width rows coalesce.
        Mask::from_runs(width, height, runs).expect("box runs are valid")
    }

    /// Builds a mask from per-row spans `(y, x_start, x_end)` (exclusive end).
    pub(crate) fn from_row_spans(width: u32, height: u32, spans: impl IntoIterator<Item = (u32, u32, u32)>) -> Self {
        let runs: Vec<[u32; 2]> = spans
            .into_iter()
            .filter(|&(y, a, b)| y < height && a < b)
            .map(|(y, a, b)| [y * width + a, b.min(width) - a])
            .collect();
        Mask::from_runs(width, height, runs).expect("row spans are valid")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[[u32; 2]] {
        &self.runs
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().map(|r| r[1] as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }

    pub fn same_canvas(&self, other: &Mask) -> bool {
        self.width == other.width && self.height == other.height
    }

    fn check_canvas(&self, other: &Mask) -> Result<(), GeometryError> {
        if self.same_canvas(other) {
            Ok(())
        } else {
            Err(GeometryError::DimensionMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            })
        }
    }

    pub fn contains(&self, x: u32, y: u32) -> bool {
        if x >= self.width || y >= self.height {
            return false;
        }
        let idx = y * self.width + x;
        let pos = self.runs.partition_point(|r| r[0] <= idx);
        pos > 0 && {
            let r = self.runs[pos - 1];
            idx < r[0] + r[1]
        }
    }

    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut bits = vec![false; (self.width * self.height) as usize];
        for r in &self.runs {
            bits[r[0] as usize..(r[0] + r[1]) as usize].fill(true);
        }
        bits
    }

    /// Iterates `(y, x_start, x_end)` spans, splitting runs at row boundaries.
    pub fn row_spans(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        let w = self.width;
        self.runs.iter().flat_map(move |r| {
            let mut out = Vec::new();
            let mut s = r[0];
            let end = r[0] + r[1];
            while s < end {
                let y = s / w;
                let row_end = (y + 1) * w;
                let e = end.min(row_end);
                out.push((y, s - y * w, e - y * w));
                s = e;
            }
            out
        })
    }

    /// Minimal box containing every set pixel.
    pub fn tight_box(&self) -> Result<BBox, GeometryError> {
        let (first, last) = match (self.runs.first(), self.runs.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(GeometryError::EmptyMask),
        };
        let w = self.width;
        let y0 = first[0] / w;
        let y1 = (last[0] + last[1] - 1) / w + 1;
        let mut x0 = u32::MAX;
        let mut x1 = 0;
        for r in &self.runs {
            let s = r[0];
            let e = r[0] + r[1] - 1;
            if s / w != e / w {
                // Spans a row boundary, so covers both the first and last column.
                x0 = 0;
                x1 = w;
                break;
            }
            x0 = x0.min(s % w);
            x1 = x1.max(e % w + 1);
        }
        Ok(BBox::new(x0, y0, x1, y1))
    }

    pub fn intersection(&self, other: &Mask) -> Result<Mask, GeometryError> {
        self.check_canvas(other)?;
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.runs.len() && j < other.runs.len() {
            let (a, b) = (self.runs[i], other.runs[j]);
            let s = a[0].max(b[0]);
            let e = (a[0] + a[1]).min(b[0] + b[1]);
            if s < e {
                out.push([s, e - s]);
            }
            if a[0] + a[1] < b[0] + b[1] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(Mask { width: self.width, height: self.height, runs: out })
    }

    pub fn intersection_area(&self, other: &Mask) -> Result<u64, GeometryError> {
        self.check_canvas(other)?;
        let mut total = 0u64;
        let (mut i, mut j) = (0, 0);
        while i < self.runs.len() && j < other.runs.len() {
            let (a, b) = (self.runs[i], other.runs[j]);
            let s = a[0].max(b[0]);
            let e = (a[0] + a[1]).min(b[0] + b[1]);
            if s < e {
                total += (e - s) as u64;
            }
            if a[0] + a[1] < b[0] + b[1] {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(total)
    }

    pub fn union(&self, other: &Mask) -> Result<Mask, GeometryError> {
        self.check_canvas(other)?;
        let mut all: Vec<[u32; 2]> = self.runs.iter().chain(other.runs.iter()).copied().collect();
        all.sort_unstable();
        let mut out: Vec<[u32; 2]> = Vec::with_capacity(all.len());
        for r in all {
            match out.last_mut() {
                Some(last) if last[0] + last[1] >= r[0] => {
                    let end = (last[0] + last[1]).max(r[0] + r[1]);
                    last[1] = end - last[0];
                }
                _ => out.push(r),
            }
        }
        Ok(Mask { width: self.width, height: self.height, runs: out })
    }

    /// Pixels of `self` not in `other`.
    pub fn difference(&self, other: &Mask) -> Result<Mask, GeometryError> {
        self.check_canvas(other)?;
        let mut out = Vec::new();
        let mut j = 0;
        for a in &self.runs {
            let mut s = a[0];
            let e = a[0] + a[1];
            while j < other.runs.len() && other.runs[j][0] + other.runs[j][1] <= s {
                j += 1;
            }
            let mut k = j;
            while s < e && k < other.runs.len() && other.runs[k][0] < e {
                let b = other.runs[k];
                if b[0] > s {
                    out.push([s, b[0] - s]);
                }
                s = s.max(b[0] + b[1]);
                k += 1;
            }
            if s < e {
                out.push([s, e - s]);
            }
        }
        Ok(Mask { width: self.width, height: self.height, runs: out })
    }

    pub fn clip_to_box(&self, b: &BBox) -> Mask {
        self.intersection(&Mask::from_box(self.width, self.height, b)).expect("same canvas")
    }

    /// Mean of set pixel centers, or `None` when empty.
    pub fn centroid(&self) -> Option<(f64, f64)> {
        let mut n = 0.0;
        let (mut sx, mut sy) = (0.0, 0.0);
        for (y, a, b) in self.row_spans() {
            let len = (b - a) as f64;
            n += len;
            // Sum of (x + 0.5) for x in a..b.
            sx += (a as f64 + b as f64) / 2.0 * len;
            sy += (y as f64 + 0.5) * len;
        }
        (n > 0.0).then(|| (sx / n, sy / n))
    }

    /// Mask-to-mask IoU; 0 when both are empty.
    pub fn iou(&self, other: &Mask) -> Result<f64, GeometryError> {
        let inter = self.intersection_area(other)?;
        let union = self.area() + other.area() - inter;
        Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
    }
}

/// Fraction of `target` covered by `selection`.
pub fn coverage(selection: &Mask, target: &Mask) -> Result<f64, GeometryError> {
    let inter = selection.intersection_area(target)?;
    let area = target.area();
    Ok(if area == 0 { 0.0 } else { inter as f64 / area as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tight_box_examples() {
        assert_eq!(Mask::full(7, 5).tight_box().unwrap(), BBox::new(0, 0, 7, 5));
        let single = Mask::from_fn(10, 10, |x, y| x == 3 && y == 7);
        assert_eq!(single.tight_box().unwrap(), BBox::new(3, 7, 4, 8));
        assert!(matches!(Mask::empty(4, 4).tight_box(), Err(GeometryError::EmptyMask)));
    }

    #[test]
    fn run_spanning_rows_covers_full_width() {
        let m = Mask::from_runs(10, 10, vec![[8, 4]]).unwrap();
        assert_eq!(m.tight_box().unwrap(), BBox::new(0, 0, 10, 2));
    }

    #[test]
    fn coverage_examples() {
        let target = Mask::from_box(20, 20, &BBox::new(0, 0, 10, 10));
        assert_eq!(coverage(&target, &target).unwrap(), 1.0);
        let left = Mask::from_box(20, 20, &BBox::new(0, 0, 5, 10));
        assert_eq!(coverage(&left, &target).unwrap(), 0.5);
        assert_eq!(coverage(&left, &Mask::empty(20, 20)).unwrap(), 0.0);
        assert!(coverage(&left, &Mask::empty(10, 20)).is_err());
    }

    #[test]
    fn from_runs_normalizes_and_validates() {
        let m = Mask::from_runs(4, 4, vec![[5, 2], [0, 3], [3, 2]]).unwrap();
        assert_eq!(m.runs(), &[[0, 7]]);
        assert!(Mask::from_runs(4, 4, vec![[0, 3], [2, 2]]).is_err());
        assert!(Mask::from_runs(4, 4, vec![[15, 2]]).is_err());
    }

    #[test]
    fn deserialize_rejects_invalid_runs() {
        let bad = r#"{"width":2,"height":2,"runs":[[3,5]]}"#;
        assert!(serde_json::from_str::<Mask>(bad).is_err());
        let good = r#"{"width":2,"height":2,"runs":[[1,2]]}"#;
        let m: Mask = serde_json::from_str(good).unwrap();
        assert_eq!(m.area(), 2);
        assert_eq!(serde_json::to_string(&m).unwrap(), good);
    }

    #[test]
    fn set_ops_match_bitmaps() {
        let a = Mask::from_fn(9, 7, |x, y| (x + 2 * y) % 3 == 0 || x > 6);
        let b = Mask::from_fn(9, 7, |x, y| x < 4 || y == 2);
        let (ba, bb) = (a.to_bitmap(), b.to_bitmap());
        let inter: Vec<bool> = ba.iter().zip(&bb).map(|(p, q)| *p && *q).collect();
        let uni: Vec<bool> = ba.iter().zip(&bb).map(|(p, q)| *p || *q).collect();
        let diff: Vec<bool> = ba.iter().zip(&bb).map(|(p, q)| *p && !*q).collect();
        assert_eq!(a.intersection(&b).unwrap().to_bitmap(), inter);
        assert_eq!(a.union(&b).unwrap().to_bitmap(), uni);
        assert_eq!(a.difference(&b).unwrap().to_bitmap(), diff);
        assert_eq!(a.intersection_area(&b).unwrap(), inter.iter().filter(|b| **b).count() as u64);
    }
}
