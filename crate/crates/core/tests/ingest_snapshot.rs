mod common;

use common::*;
use stateseek_core::ingest::{parse_match, parse_match_json, render_match, validate_match, ParseOptions};
use stateseek_core::store::SnapshotError;
use stateseek_core::{index_states, ExecMode, StateId, StateStore, StoreConfig};

#[test]
fn synthetic_matches_survive_the_replay_format() {
    for m in synth_matches(3, 77) {
        assert!(validate_match(&m).is_empty());
        let text = serde_json::to_string(&render_match(&m)).unwrap();
        let parsed = parse_match_json(&text, &ParseOptions::default()).unwrap();
        assert!(parsed.rejected.is_empty());
        assert_eq!(parsed.record, m);
    }
}

#[test]
fn bad_rounds_are_rejected_and_the_rest_kept() {
    let m = synth_matches(1, 5).remove(0);
    let mut doc = render_match(&m);
    doc.rounds[2].winner = doc.rounds[2].winner.other();
    let f = &mut doc.rounds[4].frames;
    f.swap(1, 2);
    doc.rounds[6].frames[0].players[0].hp = 140;
    let parsed = parse_match(doc, &ParseOptions::default()).unwrap();
    let bad: Vec<u32> = parsed.rejected.iter().map(|d| d.round_number).collect();
    assert_eq!(bad, vec![3, 5, 7]);
    assert_eq!(parsed.record.rounds.len(), m.rounds.len() - 3);
    assert!(parsed.rejected[0].to_string().contains("round 3"));

    // The partial record still indexes; its re-rendered form has round gaps.
    let (store, diags) = index_states(catalog(), vec![parsed.record.clone()], StoreConfig::default());
    assert!(diags.is_empty());
    assert_eq!(store.round_count(), m.rounds.len() - 3);
    let again = render_match(&parsed.record);
    assert!(parse_match(again.clone(), &ParseOptions::default()).is_err());
    let relaxed = ParseOptions {
        require_contiguous_rounds: false,
        ..Default::default()
    };
    assert_eq!(parse_match(again, &relaxed).unwrap().record, parsed.record);
}

#[test]
fn schema_violations_are_errors() {
    assert!(parse_match_json("{}", &ParseOptions::default()).is_err());
    assert!(parse_match_json("not json", &ParseOptions::default()).is_err());
}

#[test]
fn index_skips_unknown_maps_and_duplicates() {
    let mut ms = synth_matches(3, 8);
    ms.push(ms[0].clone());
    ms[1].map = "de_atlantis".into();
    let (store, diags) = index_states(catalog(), ms, StoreConfig::default());
    assert_eq!(diags.len(), 2, "{diags:?}");
    assert_eq!(store.matches().len(), 2);
}

#[test]
fn ids_are_chronological() {
    let store = synth_store(4, 12, StoreConfig::default());
    let refs: Vec<_> = store.ids().map(|id| store.state_ref(id)).collect();
    for w in refs.windows(2) {
        let a = (&*w[0].match_id, w[0].round_number);
        let b = (&*w[1].match_id, w[1].round_number);
        assert!(a < b || (a == b && w[0].t < w[1].t));
    }
    for id in store.ids().step_by(37) {
        assert_eq!(store.find_state(&store.state_ref(id)), Some(id));
    }
}

#[test]
fn snapshot_round_trip_is_deterministic() {
    let matches = synth_matches(5, 40);
    let build = |exec| {
        index_states(
            catalog(),
            matches.clone(),
            StoreConfig {
                exec,
                ..Default::default()
            },
        )
        .0
    };
    let par = build(ExecMode::Parallel);
    let seq = build(ExecMode::Sequential);
    let (mut a, mut b) = (Vec::new(), Vec::new());
    par.save_snapshot(&mut a).unwrap();
    seq.save_snapshot(&mut b).unwrap();
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corpus.snap");
    par.save_snapshot_file(&path).unwrap();
    let loaded = StateStore::load_snapshot_file(&path, StoreConfig::default()).unwrap();
    assert_eq!(loaded.len(), par.len());
    assert_eq!(loaded.matches(), par.matches());
    assert!(loaded
        .verify_tokens(&loaded.ids().collect::<Vec<StateId>>())
        .is_empty());
    let mut c = Vec::new();
    loaded.save_snapshot(&mut c).unwrap();
    assert_eq!(a, c);
}

#[test]
fn snapshot_rejects_other_versions() {
    let store = synth_store(1, 1, StoreConfig::default());
    let mut bytes = Vec::new();
    store.save_snapshot(&mut bytes).unwrap();
    bytes[8] = 2;
    match StateStore::load_snapshot(bytes.as_slice(), StoreConfig::default()) {
        Err(SnapshotError::VersionMismatch {
            found: 2,
            expected: 1,
        }) => {}
        other => panic!("{:?}", other.map(|s| s.len())),
    }
}
