//! Replays every shipped fixture through the binary and compares with the
//! recorded outputs in `fixtures/expected`. Set `SCENARIO_BLESS=1` to rewrite them.

mod common;

use common::{fixtures, run, CASES};

#[test]
fn fixtures_replay_byte_for_byte() {
    let bless = std::env::var_os("SCENARIO_BLESS").is_some();
    let mut failures = Vec::new();
    for (expected, args, code) in CASES {
        let (first, status) = run(args);
        let (second, _) = run(args);
        assert_eq!(first, second, "{expected}: output differs between runs");
        assert_eq!(status, *code, "{expected}: exit status");
        let path = fixtures().join("expected").join(expected);
        if bless {
            std::fs::write(&path, &first).unwrap();
            continue;
        }
        match std::fs::read(&path) {
            Ok(want) if want == first => {}
            Ok(_) => failures.push(format!("{expected}: differs from recorded output")),
            Err(e) => failures.push(format!("{expected}: {e}")),
        }
    }
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["frobnicate"]).1, 64);
    assert_eq!(run(&["mlp"]).1, 64);
    assert_eq!(run(&["validate", "border_state.json", "--format", "dot"]).1, 64);
}

#[test]
fn domain_errors_exit_1() {
    assert_eq!(run(&["mlp", "missing.json"]).1, 1);
    assert_eq!(run(&["mrp", "mlp_tree.json"]).1, 1, "the figure tree carries no ranks");
}

#[test]
fn validation_failures_still_write_the_report() {
    let dir = std::env::temp_dir().join(format!("scenario-replay-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut db: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixtures().join("border_state.json")).unwrap()).unwrap();
    db["attitudes"].as_array_mut().unwrap().push(serde_json::json!({
        "holder": "b", "operator": "B", "content": "border_open", "provenance": { "source": "test" }
    }));
    let state = dir.join("contradiction.json");
    std::fs::write(&state, serde_json::to_string(&db).unwrap()).unwrap();
    let report = dir.join("report.txt");
    let (_, code) = run(&["validate", state.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(code, 2);
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("1 error(s)"), "{text}");
    std::fs::remove_dir_all(&dir).unwrap();
}
