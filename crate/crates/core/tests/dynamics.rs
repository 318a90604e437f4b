use std::path::PathBuf;

use scenario_core::domain::state::AssessmentState;
use scenario_core::dynamics::{apply_update, history_trace, noncommutativity_check, ChangeSet, Disposition, RevisionPolicy};
use scenario_core::ingest::{parse_records, TypedRecord};
use scenario_core::space::DistanceSpec;
use scenario_core::tree::bundle::MethodParams;

fn fixture(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn state() -> AssessmentState {
    serde_json::from_str(&fixture("noncommutative_state.json")).unwrap()
}

fn records() -> Vec<TypedRecord> {
    parse_records(&fixture("noncommutative_update.jsonl")).into_iter().map(|(_, r)| r.unwrap()).collect()
}

fn methods() -> (MethodParams, MethodParams) {
    (
        serde_json::from_str(&fixture("noncommutative_base.json")).unwrap(),
        serde_json::from_str(&fixture("noncommutative_variant.json")).unwrap(),
    )
}

fn spec() -> DistanceSpec {
    serde_json::from_str(&fixture("noncommutative_encoding.json")).unwrap()
}

#[test]
fn update_applies_every_record_and_chains_digest() {
    let db = state();
    let before = db.clone();
    let (next, log) = apply_update(&db, &ChangeSet::new(records(), RevisionPolicy::RecencyPriority)).unwrap();
    assert_eq!(db, before);
    assert_eq!(next.stage, db.stage + 1);
    assert_eq!(next.history_ref.as_deref(), Some(db.digest().as_str()));
    for id in ["u1", "u2", "u3"] {
        assert_eq!(log.disposition(id), Some(&Disposition::Applied), "{id}");
    }
    assert_eq!(next.value("b", "threat").and_then(|v| v.as_number()), Some(4.0));
    assert!(!next.holds("a", scenario_core::domain::state::Operator::B, "b_moderate"));
    assert!(history_trace(&[db, next], &[]).intact);
}

#[test]
fn update_and_method_change_do_not_commute() {
    let (base, variant) = methods();
    let changes = ChangeSet::new(records(), RevisionPolicy::RecencyPriority);
    let r = noncommutativity_check(&state(), &changes, &base, &variant, &spec()).unwrap();
    let used = |b: &scenario_core::tree::bundle::Bundle| -> Vec<String> {
        let mut v: Vec<String> = b.selected().flat_map(|t| t.options_used().into_iter().map(|o| o.to_string())).collect();
        v.sort();
        v.dedup();
        v
    };
    let first = used(&r.update_first);
    let second = used(&r.method_first);
    assert!(first.contains(&"o_a".to_string()) && first.contains(&"o_b_prime".to_string()), "{first:?}");
    assert!(second.contains(&"o_b_prime".to_string()) && !second.contains(&"o_a".to_string()), "{second:?}");
    let d = r.distance.unwrap();
    assert!(d >= 0.5, "{d}");
    assert!(r.options.only_after_update.contains(&"o_a".to_string()));
}

#[test]
fn empty_update_with_same_method_commutes() {
    let (base, _) = methods();
    let r = noncommutativity_check(&state(), &ChangeSet::default(), &base, &base, &spec()).unwrap();
    assert_eq!(r.distance, Some(0.0));
}

#[test]
fn conflicting_records_follow_policy() {
    let db = state();
    let mut newer = records()[0].clone();
    newer.id = Some("u1b".into());
    newer.object = scenario_core::domain::state::AttrValue::Number(5.0);
    newer.time = Some(scenario_core::ingest::RecordTime::Point("t+2".into()));
    let mut rs = vec![records()[0].clone(), newer];
    let (next, log) = apply_update(&db, &ChangeSet::new(rs.clone(), RevisionPolicy::RecencyPriority)).unwrap();
    assert_eq!(log.disposition("u1"), Some(&Disposition::Superseded { by: "u1b".into() }));
    assert_eq!(next.value("b", "threat").and_then(|v| v.as_number()), Some(5.0));

    let (next, log) = apply_update(&db, &ChangeSet::new(rs.clone(), RevisionPolicy::RecordConflict)).unwrap();
    assert!(matches!(log.disposition("u1"), Some(Disposition::Disputed { .. })));
    assert_eq!(next.disputed.len(), 2);
    assert_eq!(next.value("b", "threat").and_then(|v| v.as_number()), Some(2.0));

    rs[1].provenance.source = "wire".into();
    let mut cs = ChangeSet::new(rs, RevisionPolicy::SourceQualityPriority);
    cs.source_quality.insert("intel-report-7".into(), 0.9);
    cs.source_quality.insert("wire".into(), 0.4);
    let (_, log) = apply_update(&db, &cs).unwrap();
    assert_eq!(log.disposition("u1b"), Some(&Disposition::Superseded { by: "u1".into() }));
}

#[test]
fn type_breaking_record_is_rejected() {
    let mut r = records()[0].clone();
    r.object = scenario_core::domain::state::AttrValue::Number(9.0);
    let (next, log) = apply_update(&state(), &ChangeSet::new(vec![r], RevisionPolicy::RecencyPriority)).unwrap();
    assert!(matches!(log.disposition("u1"), Some(Disposition::Rejected { .. })));
    assert_eq!(next.value("b", "threat").and_then(|v| v.as_number()), Some(2.0));
}

#[test]
fn ill_typed_record_cannot_supersede_a_valid_one() {
    let mut bad = records()[0].clone();
    bad.id = Some("u1x".into());
    bad.object = scenario_core::domain::state::AttrValue::Number(9.0);
    bad.time = Some(scenario_core::ingest::RecordTime::Point("t+9".into()));
    let changes = ChangeSet::new(vec![records()[0].clone(), bad], RevisionPolicy::RecencyPriority);
    let (next, log) = apply_update(&state(), &changes).unwrap();
    assert_eq!(log.disposition("u1"), Some(&Disposition::Applied));
    assert!(matches!(log.disposition("u1x"), Some(Disposition::Rejected { .. })));
    assert!(log.conflicts.is_empty());
    assert_eq!(next.value("b", "threat").and_then(|v| v.as_number()), Some(4.0));
}
