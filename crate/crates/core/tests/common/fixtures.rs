//! Seeded inputs shared by the oracle tests and the acceptance run.
#![allow(dead_code)]

use gazeref_core::gaze::{derive_velocity, FrameSource, GazePoint, GazeSample};
use gazeref_core::geometry::rect_polygon;
use gazeref_core::parser::OrdinalPosition;
use gazeref_core::scene::{Scene, SceneObject, SceneSpec, BACKGROUND_RGB};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const PALETTE: [[u8; 3]; 4] = [[200, 30, 30], [30, 30, 200], [240, 240, 240], [20, 160, 40]];

/// A window of up to 200 samples: a few fixations plus scattered strays.
pub fn random_window(seed: u64) -> Vec<GazeSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=200usize);
    let blobs: Vec<(f64, f64, f64, usize)> = (0..rng.random_range(1..=4))
        .map(|_| (rng.random_range(0.0..1080.0), rng.random_range(0.0..1080.0), rng.random_range(0.5..3.0), rng.random_range(0..PALETTE.len())))
        .collect();
    let spread = rng.random_range(1.0..60.0);
    let samples: Vec<GazeSample> = (0..n)
        .map(|i| {
            let t = i as f64 / 90.0;
            let point = if rng.random_bool(0.15) {
                GazePoint { t, x: rng.random_range(0.0..1080.0), y: rng.random_range(0.0..1080.0), depth: rng.random_bool(0.8).then(|| rng.random_range(0.5..3.0)) }
            } else {
                let (x, y, d, _) = blobs[(i * blobs.len()) / n];
                GazePoint { t, x: x + rng.random_range(-spread..spread), y: y + rng.random_range(-spread..spread), depth: Some(d) }
            };
            let color = PALETTE[blobs[(i * blobs.len()) / n].3];
            GazeSample::new(point, color)
        })
        .collect();
    derive_velocity(samples, 12.0).unwrap()
}

/// Left half red, right half blue.
pub struct Regions;

impl FrameSource for Regions {
    fn dimensions(&self) -> (u32, u32) {
        (1080, 1080)
    }
    fn color_at(&self, x: u32, _: u32) -> [u8; 3] {
        if x < 540 {
            PALETTE[0]
        } else {
            PALETTE[1]
        }
    }
}

/// 63 samples on A then 27 on B over one second at 90 Hz.
pub fn two_fixations(seed: u64, a: (f64, f64), b: (f64, f64)) -> Vec<GazePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..90)
        .map(|i| {
            let (c, d) = if i < 63 { (a, 0.8) } else { (b, 1.4) };
            GazePoint { t: i as f64 / 90.0, x: c.0 + rng.random_range(-2.0..2.0), y: c.1 + rng.random_range(-2.0..2.0), depth: Some(d) }
        })
        .collect()
}

/// `k` red cups in a loose row with shuffled ids, plus two books.
pub fn cup_row(k: usize, seed: u64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<u32> = (1..=(k as u32 + 2)).collect();
    ids.shuffle(&mut rng);
    let object = |id: u32, category: &str, color: &str, polygon| SceneObject {
        id,
        category: category.into(),
        color: color.into(),
        polygon,
        parts: vec![],
        adjectives: vec![],
        depth: 1.0,
    };
    let mut objects = Vec::new();
    let mut x = 20.0;
    for id in ids.iter().take(k) {
        let w = rng.random_range(20.0..50.0);
        let y = rng.random_range(380.0..420.0);
        objects.push(object(*id, "cup", "red", rect_polygon(x, y, x + w, y + rng.random_range(30.0..60.0))));
        x += w + rng.random_range(4.0..30.0);
    }
    for (i, id) in ids.iter().skip(k).enumerate() {
        let y0 = 100.0 + 600.0 * i as f64;
        objects.push(object(*id, "book", "blue", rect_polygon(300.0, y0, 380.0, y0 + 60.0)));
    }
    let spec = SceneSpec { id: format!("row-{k}-{seed}"), width: 1080, height: 900, pixels_per_degree: 12.0, background: BACKGROUND_RGB, background_depth: 2.0, objects };
    Scene::build(spec).unwrap()
}

pub fn ordinal_positions(k: usize) -> Vec<OrdinalPosition> {
    let mut positions = vec![OrdinalPosition::Leftmost, OrdinalPosition::Rightmost, OrdinalPosition::Middle];
    positions.extend((1..=k as u32).map(OrdinalPosition::Nth));
    positions
}

/// Brute force: sort the cups by center x and read the position off the list.
pub fn ordinal_answer(scene: &Scene, position: OrdinalPosition) -> u32 {
    let mut cups: Vec<_> = scene.objects().iter().filter(|o| o.category() == "cup").collect();
    cups.sort_by(|a, b| a.bbox.center().0.total_cmp(&b.bbox.center().0));
    let k = cups.len();
    let i = match position {
        OrdinalPosition::Leftmost => 0,
        OrdinalPosition::Rightmost => k - 1,
        // Lower middle when k is even.
        OrdinalPosition::Middle => (k - 1) / 2,
        OrdinalPosition::Nth(n) => n as usize - 1,
    };
    cups[i].id()
}
