//! Spatiotemporal gaze sampling.
//!
//! A window of gaze samples around the selection time is described by four
//! feature groups (color under the gaze point, gaze depth, location and
//! angular velocity), clustered by density, and the centroid of the largest
//! cluster becomes the point prompt for segmentation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::to_pixel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GazeError {
    #[error("no gaze samples in the selection window")]
    NoGazeData,
    #[error("gaze timestamps must be strictly increasing (sample {index} at t={t})")]
    NonIncreasingTime { index: usize, t: f64 },
    #[error("feature vectors and window differ in length ({vectors} vs {window})")]
    Misaligned { vectors: usize, window: usize },
    #[error("invalid sampler config: {0}")]
    InvalidConfig(&'static str),
}

/// One raw record of a gaze stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazePoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub depth: Option<f64>,
}

pub type GazeStream = Vec<GazePoint>;

/// A gaze point enriched with the frame color under it and its angular velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub depth: Option<f64>,
    pub color: [u8; 3],
    /// Degrees per second; 0 for the first sample.
    pub velocity: f64,
}

impl GazeSample {
    pub fn new(point: GazePoint, color: [u8; 3]) -> Self {
        GazeSample { t: point.t, x: point.x, y: point.y, depth: point.depth, color, velocity: 0.0 }
    }
}

/// Anything that can report the color of a frame pixel.
pub trait FrameSource {
    fn dimensions(&self) -> (u32, u32);
    fn color_at(&self, x: u32, y: u32) -> [u8; 3];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorSampling {
    /// The single pixel at the rounded gaze coordinate.
    #[default]
    Pixel,
    /// Mean over the 3x3 neighborhood.
    Mean3x3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureWeights {
    pub color: f64,
    pub depth: f64,
    pub location: f64,
    pub velocity: f64,
}

impl Default for FeatureWeights {
    fn default() -> Self {
        FeatureWeights { color: 1.0, depth: 1.0, location: 2.0, velocity: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// Half-width of the window around the selection time, seconds.
    pub window_delta: f64,
    pub sample_rate_hz: f64,
    pub weights: FeatureWeights,
    /// Neighbor distance in the weighted, normalized feature space.
    pub neighborhood_radius: f64,
    /// Minimum neighbor count (self included) for a core sample.
    pub min_cluster_size: usize,
    pub color_sampling: ColorSampling,
}

pub const DEFAULT_WINDOW_DELTA: f64 = 0.5;
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 90.0;

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            window_delta: DEFAULT_WINDOW_DELTA,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            weights: FeatureWeights::default(),
            neighborhood_radius: 0.25,
            min_cluster_size: 5,
            color_sampling: ColorSampling::Pixel,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<(), GazeError> {
        let w = &self.weights;
        if !(self.window_delta > 0.0) {
            return Err(GazeError::InvalidConfig("window_delta must be positive"));
        }
        if [w.color, w.depth, w.location, w.velocity].iter().any(|v| !(*v >= 0.0)) {
            return Err(GazeError::InvalidConfig("feature weights must be non-negative"));
        }
        if w.color + w.depth + w.location + w.velocity <= 0.0 {
            return Err(GazeError::InvalidConfig("at least one feature weight must be positive"));
        }
        Ok(())
    }
}

/// Fills in angular velocity from consecutive samples.
pub fn derive_velocity(mut samples: Vec<GazeSample>, pixels_per_degree: f64) -> Result<Vec<GazeSample>, GazeError> {
    for i in 1..samples.len() {
        let (prev, cur) = (samples[i - 1], samples[i]);
        let dt = cur.t - prev.t;
        if !(dt > 0.0) {
            return Err(GazeError::NonIncreasingTime { index: i, t: cur.t });
        }
        let degrees = (cur.x - prev.x).hypot(cur.y - prev.y) / pixels_per_degree;
        samples[i].velocity = degrees / dt;
    }
    if let Some(first) = samples.first_mut() {
        first.velocity = 0.0;
    }
    Ok(samples)
}

pub const FEATURE_DIM: usize = 7;

/// Min-max normalizes each column group jointly (shared range across the
/// group's dimensions, so relative geometry inside the group survives) and
/// scales it by `weight`. A constant group maps to zeros.
fn normalize_group(rows: &mut [[f64; FEATURE_DIM]], dims: std::ops::Range<usize>, weight: f64) {
    let mut mins = vec![f64::INFINITY; dims.len()];
    let mut maxs = vec![f64::NEG_INFINITY; dims.len()];
    for row in rows.iter() {
        for (k, d) in dims.clone().enumerate() {
            mins[k] = mins[k].min(row[d]);
            maxs[k] = maxs[k].max(row[d]);
        }
    }
    let range = mins.iter().zip(&maxs).map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    for row in rows.iter_mut() {
        for (k, d) in dims.clone().enumerate() {
            row[d] = if range > 0.0 && range.is_finite() { (row[d] - mins[k]) / range * weight } else { 0.0 };
        }
    }
}

/// Per-sample vectors `[r, g, b, depth, x, y, velocity]`, normalized over
/// the window and weighted.
pub fn feature_vectors(window: &[GazeSample], config: &SamplerConfig) -> Result<Vec<[f64; FEATURE_DIM]>, GazeError> {
    if window.is_empty() {
        return Err(GazeError::NoGazeData);
    }
    let depth_present = window.iter().all(|s| s.depth.is_some());
    let mut rows: Vec<[f64; FEATURE_DIM]> = window
        .iter()
        .map(|s| {
            [
                s.color[0] as f64,
                s.color[1] as f64,
                s.color[2] as f64,
                s.depth.unwrap_or(0.0),
                s.x,
                s.y,
                s.velocity,
            ]
        })
        .collect();
    let w = &config.weights;
    normalize_group(&mut rows, 0..3, w.color);
    normalize_group(&mut rows, 3..4, if depth_present { w.depth } else { 0.0 });
    normalize_group(&mut rows, 4..6, w.location);
    normalize_group(&mut rows, 6..7, w.velocity);
    Ok(rows)
}

fn distance(a: &[f64; FEATURE_DIM], b: &[f64; FEATURE_DIM]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
}

/// Density clustering result: `labels[i]` is the cluster of sample `i`, or
/// `None` for noise. Cluster ids are dense and ordered by first member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clustering {
    pub labels: Vec<Option<usize>>,
    pub cluster_count: usize,
}

impl Clustering {
    pub fn members(&self, cluster: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, l)| **l == Some(cluster)).map(|(i, _)| i)
    }
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// DBSCAN-style clustering. Two vectors are neighbors when their distance is
/// at most `radius`; a core vector has at least `min_size` neighbors,
/// itself included. Clusters are connected components of core vectors;
/// border vectors join the cluster of their nearest core neighbor.
pub fn density_clusters(vectors: &[[f64; FEATURE_DIM]], radius: f64, min_size: usize) -> Clustering {
    let n = vectors.len();
    let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if distance(&vectors[i], &vectors[j]) <= radius {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    let core: Vec<bool> = neighbors.iter().map(|nb| nb.len() + 1 >= min_size).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        if !core[i] {
            continue;
        }
        for &j in &neighbors[i] {
            if core[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut root_label: Vec<Option<usize>> = vec![None; n];
    let mut labels: Vec<Option<usize>> = vec![None; n];
    let mut count = 0;
    for i in 0..n {
        if core[i] {
            let r = find(&mut parent, i);
            let l = *root_label[r].get_or_insert_with(|| {
                count += 1;
                count - 1
            });
            labels[i] = Some(l);
        }
    }
    for i in 0..n {
        if core[i] {
            continue;
        }
        let nearest = neighbors[i]
            .iter()
            .filter(|&&j| core[j])
            .min_by(|&&a, &&b| distance(&vectors[i], &vectors[a]).total_cmp(&distance(&vectors[i], &vectors[b])).then(a.cmp(&b)));
        labels[i] = nearest.and_then(|&j| labels[j]);
    }
    // Relabel by first member so ids do not depend on union-find roots.
    let mut remap: Vec<Option<usize>> = vec![None; count];
    let mut next = 0;
    for l in labels.iter_mut().flatten() {
        *l = *remap[*l].get_or_insert_with(|| {
            next += 1;
            next - 1
        });
    }
    Clustering { labels, cluster_count: count }
}

/// Outcome of selecting the dominant cluster in a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub centroid: (f64, f64),
    pub members: usize,
    pub cluster_count: usize,
    pub window_size: usize,
}

fn mean_xy<'a>(samples: impl Iterator<Item = &'a GazeSample>) -> (f64, f64, f64, usize) {
    let (mut sx, mut sy, mut st, mut n) = (0.0, 0.0, 0.0, 0);
    for s in samples {
        sx += s.x;
        sy += s.y;
        st += s.t;
        n += 1;
    }
    let d = n.max(1) as f64;
    (sx / d, sy / d, st / d, n)
}

/// Centroid of the largest cluster. Ties go to the cluster whose members are
/// latest on average; with no cluster at all, every sample counts.
pub fn cluster_largest(vectors: &[[f64; FEATURE_DIM]], window: &[GazeSample], config: &SamplerConfig) -> Result<ClusterSummary, GazeError> {
    if vectors.len() != window.len() {
        return Err(GazeError::Misaligned { vectors: vectors.len(), window: window.len() });
    }
    if window.is_empty() {
        return Err(GazeError::NoGazeData);
    }
    let clustering = density_clusters(vectors, config.neighborhood_radius, config.min_cluster_size);
    let best = (0..clustering.cluster_count)
        .map(|c| mean_xy(clustering.members(c).map(|i| &window[i])))
        .max_by(|a, b| a.3.cmp(&b.3).then(a.2.total_cmp(&b.2)));
    let (x, y, _, members) = match best {
        Some(b) => b,
        None => mean_xy(window.iter()),
    };
    Ok(ClusterSummary { centroid: (x, y), members, cluster_count: clustering.cluster_count, window_size: window.len() })
}

/// Samples inside `[select_time - delta, select_time + delta]`, in time order.
pub fn extract_window(stream: &[GazePoint], select_time: f64, delta: f64) -> Vec<GazePoint> {
    let mut w: Vec<GazePoint> = stream.iter().filter(|p| (p.t - select_time).abs() <= delta).copied().collect();
    w.sort_by(|a, b| a.t.total_cmp(&b.t));
    w
}

pub fn sample_color(frame: &dyn FrameSource, x: f64, y: f64, mode: ColorSampling) -> [u8; 3] {
    let (w, h) = frame.dimensions();
    let (px, py) = (to_pixel(x, w), to_pixel(y, h));
    match mode {
        ColorSampling::Pixel => frame.color_at(px, py),
        ColorSampling::Mean3x3 => {
            let mut acc = [0u32; 3];
            let mut n = 0;
            for yy in py.saturating_sub(1)..=(py + 1).min(h - 1) {
                for xx in px.saturating_sub(1)..=(px + 1).min(w - 1) {
                    let c = frame.color_at(xx, yy);
                    for k in 0..3 {
                        acc[k] += c[k] as u32;
                    }
                    n += 1;
                }
            }
            acc.map(|v| (v as f64 / n as f64).round() as u8)
        }
    }
}

/// Full sampler: window extraction, color lookup, velocity, features and
/// clustering. Returns the point prompt with its cluster statistics.
pub fn sample_prompt(
    stream: &[GazePoint],
    frame: &dyn FrameSource,
    select_time: f64,
    config: &SamplerConfig,
    pixels_per_degree: f64,
) -> Result<ClusterSummary, GazeError> {
    config.validate()?;
    let window = extract_window(stream, select_time, config.window_delta);
    if window.is_empty() {
        return Err(GazeError::NoGazeData);
    }
    let samples: Vec<GazeSample> = window
        .iter()
        .map(|p| GazeSample::new(*p, sample_color(frame, p.x, p.y, config.color_sampling)))
        .collect();
    let samples = derive_velocity(samples, pixels_per_degree)?;
    let vectors = feature_vectors(&samples, config)?;
    cluster_largest(&vectors, &samples, config)
}
