use gazeref_core::config::*;
use gazeref_core::gaze::{SamplerConfig, DEFAULT_SAMPLE_RATE_HZ, DEFAULT_WINDOW_DELTA, FEATURE_DIM};
use gazeref_core::sim::GazeNoiseModel;

#[test]
fn pipeline_defaults() {
    assert_eq!(DEFAULT_WINDOW_DELTA, 0.5);
    assert_eq!(DEFAULT_SAMPLE_RATE_HZ, 90.0);
    assert_eq!(DEFAULT_CONTEXT_PADDING, 150);
    assert_eq!(DEFAULT_SIDE_ALPHA, 0.5);
    assert_eq!(DEFAULT_KEEP_N, 7);
    assert_eq!(DEFAULT_LOCALIZE_THRESHOLD, 0.5);
    assert_eq!(DEFAULT_MAX_ROUNDS, 2);
    assert_eq!(DEFAULT_NMS_THRESHOLD, 0.8);
    assert_eq!(DEFAULT_PIXELS_PER_DEGREE, 12.0);
    assert_eq!(DEFAULT_FRAME_SIZE, 1080);
    assert_eq!(FEATURE_DIM, 7);

    let p = PipelineConfig::default();
    assert_eq!(p.context_padding, 150);
    assert_eq!(p.max_rounds, 2);
    assert_eq!(p.filter, FilterConfig { nms_threshold: 0.8, side_alpha: 0.5, keep_n: 7, localize_threshold: 0.5 });
    let s = SamplerConfig::default();
    assert_eq!((s.window_delta, s.sample_rate_hz, s.neighborhood_radius, s.min_cluster_size), (0.5, 90.0, 0.25, 5));
    assert_eq!((s.weights.color, s.weights.depth, s.weights.location, s.weights.velocity), (1.0, 1.0, 2.0, 1.0));
    let n = GazeNoiseModel::calibrated();
    assert_eq!((n.bias_deg, n.jitter_std_deg), (1.16, 0.22));
}
