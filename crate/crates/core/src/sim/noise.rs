use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::config::DEFAULT_PIXELS_PER_DEGREE;
use crate::gaze::{GazePoint, GazeStream};
use crate::geometry::to_pixel;
use crate::scene::Scene;

/// Eye-tracker error: a constant calibration offset, per-sample jitter and
/// short saccadic excursions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeNoiseModel {
    pub bias_deg: f64,
    pub jitter_std_deg: f64,
    /// Expected excursions per second.
    pub saccade_rate: f64,
    pub saccade_amplitude_deg: f64,
    pub pixels_per_degree: f64,
    pub seed: u64,
}

impl Default for GazeNoiseModel {
    fn default() -> Self {
        GazeNoiseModel::none()
    }
}

impl GazeNoiseModel {
    pub fn none() -> Self {
        GazeNoiseModel {
            bias_deg: 0.0,
            jitter_std_deg: 0.0,
            saccade_rate: 0.0,
            saccade_amplitude_deg: 0.0,
            pixels_per_degree: DEFAULT_PIXELS_PER_DEGREE,
            seed: 0,
        }
    }

    /// Headset calibration error of 1.16 degrees with 0.22 degrees of jitter.
    pub fn calibrated() -> Self {
        GazeNoiseModel { bias_deg: 1.16, jitter_std_deg: 0.22, saccade_rate: 1.0, saccade_amplitude_deg: 4.0, ..GazeNoiseModel::none() }
    }

    pub fn heavy() -> Self {
        GazeNoiseModel { bias_deg: 2.5, jitter_std_deg: 0.6, saccade_rate: 2.0, saccade_amplitude_deg: 6.0, ..GazeNoiseModel::none() }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "none" => Some(GazeNoiseModel::none()),
            "calibrated" => Some(GazeNoiseModel::calibrated()),
            "heavy" => Some(GazeNoiseModel::heavy()),
            _ => None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fields = [self.bias_deg, self.jitter_std_deg, self.saccade_rate, self.saccade_amplitude_deg];
        if fields.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(SimError::Invalid("noise parameters must be finite and non-negative".into()));
        }
        if !(self.pixels_per_degree.is_finite() && self.pixels_per_degree > 0.0) {
            return Err(SimError::Invalid("pixels_per_degree must be positive".into()));
        }
        Ok(())
    }
}

/// A noisy fixation on `center` covering `2 * delta` seconds at `rate_hz`,
/// starting at t = 0; select at t = `delta`. Depth is read from the scene
/// under each sample.
pub fn fixation_stream(scene: &Scene, center: (f64, f64), noise: &GazeNoiseModel, delta: f64, rate_hz: f64) -> Result<GazeStream, SimError> {
    noise.validate()?;
    if !(delta > 0.0 && rate_hz > 0.0) {
        return Err(SimError::Invalid("window and rate must be positive".into()));
    }
    let ppd = noise.pixels_per_degree;
    let n = (2.0 * delta * rate_hz).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    let bias = (noise.bias_deg * ppd * theta.cos(), noise.bias_deg * ppd * theta.sin());
    let mut offsets = vec![(0.0, 0.0); n];
    let sigma = noise.jitter_std_deg * ppd;
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for o in offsets.iter_mut() {
            *o = (normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    let expected = noise.saccade_rate * 2.0 * delta;
    if expected > 0.0 && noise.saccade_amplitude_deg > 0.0 && n > 0 {
        let count = Poisson::new(expected).expect("positive rate").sample(&mut rng) as usize;
        let amplitude = noise.saccade_amplitude_deg * ppd;
        for _ in 0..count {
            let start = rng.random_range(0..n);
            let len = rng.random_range(2..=4usize);
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            for o in offsets.iter_mut().skip(start).take(len) {
                o.0 += amplitude * phi.cos();
                o.1 += amplitude * phi.sin();
            }
        }
    }
    let (w, h) = (scene.width() as f64, scene.height() as f64);
    Ok(offsets
        .into_iter()
        .enumerate()
        .map(|(i, (dx, dy))| {
            let x = (center.0 + bias.0 + dx).clamp(0.0, w - 1.0);
            let y = (center.1 + bias.1 + dy).clamp(0.0, h - 1.0);
            let depth = scene.depth_at(to_pixel(x, scene.width()), to_pixel(y, scene.height()));
            GazePoint { t: i as f64 / rate_hz, x, y, depth: Some(depth) }
        })
        .collect())
}

/// A noisy fixation on the center of the target's box.
pub fn simulate_gaze(scene: &Scene, target_id: u32, noise: &GazeNoiseModel, delta: f64, rate_hz: f64) -> Result<GazeStream, SimError> {
    let target = scene.object(target_id).map_err(SimError::from)?;
    fixation_stream(scene, target.bbox.center(), noise, delta, rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{generate_scene, GeneratorConfig, TrialCondition};

    fn scene() -> (Scene, u32) {
        let doc = generate_scene(TrialCondition::from_label("C12").unwrap(), 1, &GeneratorConfig::default()).unwrap();
        (doc.build().unwrap(), doc.target_id)
    }

    #[test]
    fn zero_noise_sits_on_the_center() {
        let (s, t) = scene();
        let c = s.object(t).unwrap().bbox.center();
        let stream = simulate_gaze(&s, t, &GazeNoiseModel::none(), 0.5, 90.0).unwrap();
        assert_eq!(stream.len(), 90);
        assert!(stream.iter().all(|p| p.x == c.0 && p.y == c.1));
        assert!((stream[45].t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bias_scales_with_pixels_per_degree() {
        let (s, t) = scene();
        let c = s.object(t).unwrap().bbox.center();
        let noise = GazeNoiseModel { bias_deg: 1.16, pixels_per_degree: 20.0, ..GazeNoiseModel::none() };
        let stream = simulate_gaze(&s, t, &noise, 0.5, 90.0).unwrap();
        let n = stream.len() as f64;
        let (mx, my) = stream.iter().fold((0.0, 0.0), |a, p| (a.0 + p.x / n, a.1 + p.y / n));
        assert!(((mx - c.0).hypot(my - c.1) - 23.2).abs() < 1e-6);
    }

    #[test]
    fn seeded_streams_repeat() {
        let (s, t) = scene();
        let noise = GazeNoiseModel::heavy().with_seed(5);
        assert_eq!(simulate_gaze(&s, t, &noise, 0.5, 90.0).unwrap(), simulate_gaze(&s, t, &noise, 0.5, 90.0).unwrap());
        assert_ne!(simulate_gaze(&s, t, &noise, 0.5, 90.0).unwrap(), simulate_gaze(&s, t, &noise.with_seed(6), 0.5, 90.0).unwrap());
        let bad = GazeNoiseModel { jitter_std_deg: -1.0, ..GazeNoiseModel::none() };
        assert!(simulate_gaze(&s, t, &bad, 0.5, 90.0).is_err());
    }
}
