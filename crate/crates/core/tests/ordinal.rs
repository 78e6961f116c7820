#[path = "common/fixtures.rs"]
mod fixtures;

use std::sync::Arc;

use gazeref_core::backend::{BackendDegradation, OracleBackend};
use gazeref_core::config::FilterConfig;
use gazeref_core::describer::ContextRegion;
use gazeref_core::disambiguator::{disambiguate, Outcome};
use gazeref_core::parser::{ObjectDescriptor, ParsedCommand, Relation};

#[test]
fn ordinal_selection_matches_center_sort() {
    let mut checked = 0;
    for k in 2..=10usize {
        for seed in 0..5u64 {
            let scene = Arc::new(fixtures::cup_row(k, seed * 31 + k as u64));
            let oracle = OracleBackend::new(scene.clone(), BackendDegradation::default());
            let context = ContextRegion { bbox: scene.canvas(), gaze_centroid: (540.0, 450.0), padding: 150 };
            for position in fixtures::ordinal_positions(k) {
                let command =
                    ParsedCommand { target: ObjectDescriptor::new("cup", &[]), reference: None, relation: Relation::Ordinal(position), resolved_from: None };
                let d = disambiguate(&command, None, &context, &oracle, &FilterConfig::default()).unwrap();
                assert!(matches!(d.result.outcome, Outcome::Selected { .. }), "k={k} {position:?}: {:?}", d.result.outcome);
                let want = scene.object(fixtures::ordinal_answer(&scene, position)).unwrap();
                assert_eq!(d.mask.as_ref(), Some(&want.mask), "k={k} seed={seed} {position:?}");
                checked += 1;
            }
        }
    }
    assert!(checked > 300);
}
