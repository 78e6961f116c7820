//! Brute-force reference implementations, pixel by pixel or pair by pair.
#![allow(dead_code)]

use std::collections::VecDeque;

use gazeref_core::geometry::{BBox, CandidateBox, Side};

pub fn box_bits(w: u32, h: u32, b: &BBox) -> Vec<bool> {
    let mut bits = vec![false; (w * h) as usize];
    for y in b.y0..b.y1.min(h) {
        for x in b.x0..b.x1.min(w) {
            bits[(y * w + x) as usize] = true;
        }
    }
    bits
}

pub fn count(bits: &[bool]) -> u64 {
    bits.iter().filter(|b| **b).count() as u64
}

pub fn and_count(a: &[bool], b: &[bool]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| **x && **y).count() as u64
}

pub fn or_count(a: &[bool], b: &[bool]) -> u64 {
    a.iter().zip(b).filter(|(x, y)| **x || **y).count() as u64
}

/// Pixel-count IoU of two boxes on a `w` x `h` canvas that holds both.
pub fn iou(w: u32, h: u32, a: &BBox, b: &BBox) -> f64 {
    let (ba, bb) = (box_bits(w, h, a), box_bits(w, h, b));
    let union = or_count(&ba, &bb);
    if union == 0 {
        0.0
    } else {
        and_count(&ba, &bb) as f64 / union as f64
    }
}

/// Share of `target` pixels that `selection` covers; 0 for an empty target.
pub fn coverage(selection: &[bool], target: &[bool]) -> f64 {
    let t = count(target);
    if t == 0 {
        0.0
    } else {
        and_count(selection, target) as f64 / t as f64
    }
}

pub fn tight_box(w: u32, h: u32, bits: &[bool]) -> Option<BBox> {
    let mut b: Option<(u32, u32, u32, u32)> = None;
    for y in 0..h {
        for x in 0..w {
            if bits[(y * w + x) as usize] {
                b = Some(match b {
                    None => (x, y, x + 1, y + 1),
                    Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                });
            }
        }
    }
    b.map(|(x0, y0, x1, y1)| BBox::new(x0, y0, x1, y1))
}

/// Side test by counting pixel columns (or rows): the candidate must lie
/// wholly on the side, or start there and reach past the reference's near
/// edge by fewer than `alpha` times the reference extent.
pub fn side_of(c: &BBox, r: &BBox, side: Side, alpha: f64) -> Option<bool> {
    let (c_lo, c_hi, r_lo, r_hi) = match side {
        Side::Left | Side::Right => (c.x0, c.x1, r.x0, r.x1),
        Side::Above | Side::Below => (c.y0, c.y1, r.y0, r.y1),
    };
    let extent = r_hi - r_lo;
    if extent == 0 {
        return None;
    }
    let lines: Vec<u32> = (c_lo..c_hi).collect();
    let (outside, past): (usize, usize) = match side {
        Side::Left | Side::Above => (lines.iter().filter(|&&v| v < r_lo).count(), lines.iter().filter(|&&v| v >= r_lo).count()),
        Side::Right | Side::Below => (lines.iter().filter(|&&v| v >= r_hi).count(), lines.iter().filter(|&&v| v < r_hi).count()),
    };
    Some(past == 0 || (outside > 0 && (past as f64) / (extent as f64) < alpha))
}

/// Greedy suppression in priority order (global segmentation first, then
/// larger area, then lower id) using pixel IoU. Returns kept ids in order.
pub fn nms(w: u32, h: u32, candidates: &[CandidateBox], threshold: f64) -> Vec<u32> {
    let mut order: Vec<&CandidateBox> = candidates.iter().collect();
    order.sort_by_key(|c| (c.source, std::cmp::Reverse(count(&box_bits(w, h, &c.bbox))), c.id));
    let mut kept: Vec<&CandidateBox> = Vec::new();
    for c in order {
        if kept.iter().all(|k| iou(w, h, &k.bbox, &c.bbox) <= threshold) {
            kept.push(c);
        }
    }
    kept.iter().map(|c| c.id).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Density clustering by breadth-first search over the core-point graph.
/// Border points take the cluster of their nearest core neighbor (lower
/// index on ties); labels are numbered by first appearance.
pub fn components<const D: usize>(vectors: &[[f64; D]], radius: f64, min_size: usize) -> Vec<Option<usize>> {
    let n = vectors.len();
    let adjacent = |i: usize, j: usize| i != j && dist(&vectors[i], &vectors[j]) <= radius;
    let core: Vec<bool> = (0..n).map(|i| 1 + (0..n).filter(|&j| adjacent(i, j)).count() >= min_size).collect();
    let mut comp: Vec<Option<usize>> = vec![None; n];
    let mut next = 0;
    for s in 0..n {
        if !core[s] || comp[s].is_some() {
            continue;
        }
        comp[s] = Some(next);
        let mut queue = VecDeque::from([s]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if core[j] && comp[j].is_none() && adjacent(i, j) {
                    comp[j] = Some(next);
                    queue.push_back(j);
                }
            }
        }
        next += 1;
    }
    let mut labels = comp.clone();
    for i in (0..n).filter(|&i| !core[i]) {
        let mut best: Option<(f64, usize)> = None;
        for j in (0..n).filter(|&j| core[j] && adjacent(i, j)) {
            let d = dist(&vectors[i], &vectors[j]);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        labels[i] = best.and_then(|(_, j)| comp[j]);
    }
    let mut remap: Vec<Option<usize>> = vec![None; next];
    let mut fresh = 0;
    for l in labels.iter_mut().flatten() {
        *l = *remap[*l].get_or_insert_with(|| {
            fresh += 1;
            fresh - 1
        });
    }
    labels
}
