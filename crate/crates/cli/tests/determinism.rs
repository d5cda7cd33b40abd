mod common;

use std::collections::BTreeMap;

use common::{golden_dir, pipeline_digests, updating_golden, DETERMINISM_SEEDS};

#[test]
fn cli_outputs_are_byte_reproducible_and_match_goldens() {
    let tmp = std::env::temp_dir().join(format!("floorplan-determinism-{}", std::process::id()));
    let mut all = BTreeMap::new();
    for seed in DETERMINISM_SEEDS {
        let a = pipeline_digests(seed, &tmp.join(format!("{seed}a")));
        let b = pipeline_digests(seed, &tmp.join(format!("{seed}b")));
        assert_eq!(a, b, "seed {seed} is not reproducible within one build");
        all.insert(seed.to_string(), a);
    }
    std::fs::remove_dir_all(&tmp).unwrap();

    let golden = golden_dir().join("determinism.json");
    if updating_golden() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&golden, serde_json::to_string_pretty(&all).unwrap() + "\n").unwrap();
        return;
    }
    let expected: BTreeMap<String, BTreeMap<String, String>> =
        serde_json::from_slice(&std::fs::read(&golden).expect("golden file; record with UPDATE_GOLDEN=1")).unwrap();
    assert_eq!(all, expected);
}
