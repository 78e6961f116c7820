use gazeref_core::sim::{self_consistency_trial, GeneratorConfig};

#[test]
fn described_objects_are_reselected() {
    let cfg = GeneratorConfig::default();
    let mut misses = Vec::new();
    for seed in 0..500 {
        let (sentence, hit) = self_consistency_trial(seed, &cfg).unwrap();
        if !hit {
            misses.push((seed, sentence));
        }
    }
    assert!(misses.len() <= 10, "{} of 500 missed: {misses:?}", misses.len());
}
