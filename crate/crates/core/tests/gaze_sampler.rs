#[path = "common/fixtures.rs"]
mod fixtures;
#[path = "common/oracles.rs"]
mod oracles;

use gazeref_core::gaze::{
    density_clusters, feature_vectors, sample_prompt, GazePoint, SamplerConfig, FEATURE_DIM,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fixtures::{random_window, two_fixations, Regions};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn clusters_match_connected_components(seed in any::<u64>(), radius in prop_oneof![Just(0.25), 0.02..1.0f64], min_size in 1usize..12) {
        let window = random_window(seed);
        let vectors = feature_vectors(&window, &SamplerConfig::default()).unwrap();
        let got = density_clusters(&vectors, radius, min_size);
        let want = oracles::components(&vectors, radius, min_size);
        prop_assert_eq!(&got.labels, &want);
        prop_assert_eq!(got.cluster_count, want.iter().flatten().max().map_or(0, |m| m + 1));
    }

    #[test]
    fn prompt_lies_within_the_window(seed in any::<u64>()) {
        let window = random_window(seed);
        let stream: Vec<GazePoint> = window.iter().map(|s| GazePoint { t: s.t, x: s.x, y: s.y, depth: s.depth }).collect();
        let select = stream[stream.len() / 2].t;
        let cfg = SamplerConfig::default();
        let summary = sample_prompt(&stream, &Regions, select, &cfg, 12.0).unwrap();
        let used: Vec<&GazePoint> = stream.iter().filter(|p| (p.t - select).abs() <= cfg.window_delta).collect();
        let (x0, x1) = used.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.x), a.1.max(p.x)));
        let (y0, y1) = used.iter().fold((f64::MAX, f64::MIN), |a, p| (a.0.min(p.y), a.1.max(p.y)));
        let (cx, cy) = summary.centroid;
        prop_assert!(cx >= x0 - 1e-9 && cx <= x1 + 1e-9 && cy >= y0 - 1e-9 && cy <= y1 + 1e-9);
    }
}

#[test]
fn larger_fixation_wins() {
    // 63 samples on A then 27 on B across one second at 90 Hz; selecting at
    // 0.5 s puts all 90 in the window.
    let (a, b) = ((300.0, 420.0), (760.0, 610.0));
    let stream = two_fixations(11, a, b);
    let summary = sample_prompt(&stream, &Regions, 0.5, &SamplerConfig::default(), 12.0).unwrap();
    assert_eq!(summary.window_size, 90);
    let (x, y) = summary.centroid;
    assert!((x - a.0).hypot(y - a.1) <= 1.0, "centroid {:?}", summary.centroid);
}

fn point(x: f64) -> [f64; FEATURE_DIM] {
    let mut v = [0.0; FEATURE_DIM];
    v[0] = x;
    v
}

#[test]
fn separated_fixations_never_gain_clusters_with_larger_min_size() {
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vectors: Vec<[f64; FEATURE_DIM]> = (0..rng.random_range(1..6))
            .flat_map(|b| {
                let size = rng.random_range(1..25usize);
                let jitter: Vec<f64> = (0..size).map(|_| rng.random_range(0.0..0.1)).collect();
                jitter.into_iter().map(move |j| point(b as f64 * 10.0 + j))
            })
            .collect();
        let counts: Vec<usize> = (1..30).map(|m| density_clusters(&vectors, 0.25, m).cluster_count).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {counts:?}");
    }
}

#[test]
fn bridge_point_can_split_a_cluster() {
    // The bridge is core at min size 3 and joins both groups; at 4 it is
    // not, and the groups separate.
    let xs = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.9, 2.8, 3.0, 3.2, 3.4, 3.6, 3.8];
    let vectors: Vec<_> = xs.iter().map(|x| point(*x)).collect();
    assert_eq!(density_clusters(&vectors, 1.0, 3).cluster_count, 1);
    assert_eq!(density_clusters(&vectors, 1.0, 4).cluster_count, 2);
}
