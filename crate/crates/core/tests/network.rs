use tqkd_core::netsim::{run_network_scenario, Execution, NetError, NetworkScenario};
use tqkd_core::rng::derive_seed;

const THREE_USERS: &str = r#"{
  "users": ["u1", "u2", "u3"],
  "channels": {"u3": {"loss_probability": 0.0, "latency_ticks": 4}},
  "seed": 2024,
  "sessions": [
    {"requester": "u1", "responder": "u2", "config": {"protocol": "GHZ3", "num_states": 4000}},
    {"requester": "u2", "responder": "u3", "config": {"protocol": "GHZ3", "num_states": 4000}},
    {"requester": "u3", "responder": "u1", "config": {"protocol": "GHZ3", "num_states": 4000}}
  ]
}"#;

#[test]
fn pairwise_ghz3_sessions_agree() {
    let scenario = NetworkScenario::from_json(THREE_USERS).unwrap();
    let run = run_network_scenario(&scenario, Execution::Sequential).unwrap();
    assert_eq!(run.transcripts.len(), 3);
    for t in &run.transcripts {
        let t = t.as_ref().unwrap();
        assert_eq!(t.kept_fraction(), 1.0);
        assert_eq!(t.alice_final_key(), t.bob_final_key());
        assert!(!t.aborted());
    }
    assert_eq!(run.report.by_protocol.len(), 1);
    assert_eq!(run.report.by_protocol[0].sessions, 3);
    assert!(run.report.by_user.iter().all(|u| u.sessions == 2));
    assert_eq!(run.report.sessions[1].latency_ticks, 4);
    assert_eq!(run.report.sessions[0].seed, derive_seed(2024, 0));
}

#[test]
fn only_the_attacked_session_aborts() {
    let json = r#"{
      "users": ["a", "b", "c", "d"],
      "seed": 5,
      "sessions": [
        {"requester": "a", "responder": "b", "config": {"protocol": "GHZ1", "num_states": 4000}},
        {"requester": "c", "responder": "d", "config": {"protocol": "GHZ1", "num_states": 4000,
          "attack": {"kind": "intercept_resend", "target": "Bob", "basis_pool": ["X", "Y"]}}},
        {"requester": "a", "responder": "d", "config": {"protocol": "BELL4", "num_states": 4000}}
      ]
    }"#;
    let run = run_network_scenario(&NetworkScenario::from_json(json).unwrap(), Execution::Parallel).unwrap();
    let aborted: Vec<bool> = run.report.sessions.iter().map(|s| s.aborted.unwrap()).collect();
    assert_eq!(aborted, vec![false, true, false]);
}

#[test]
fn empty_scenario_gives_empty_report() {
    let scenario = NetworkScenario::from_json(r#"{"users": []}"#).unwrap();
    let run = run_network_scenario(&scenario, Execution::Sequential).unwrap();
    assert!(run.report.sessions.is_empty() && run.report.by_protocol.is_empty());
    assert_eq!(run.report.to_csv().lines().count(), 1);
}

#[test]
fn bad_sessions_are_reported_and_skipped() {
    let json = r#"{
      "users": ["a", "b"],
      "sessions": [
        {"requester": "a", "responder": "a", "config": {"protocol": "GHZ1", "num_states": 100}},
        {"requester": "a", "responder": "zed", "config": {"protocol": "GHZ1", "num_states": 100}},
        {"requester": "a", "responder": "b", "config": {"protocol": "GHZ1", "num_states": 0}},
        {"requester": "a", "responder": "b", "config": {"protocol": "GHZ1", "num_states": 100}}
      ]
    }"#;
    let run = run_network_scenario(&NetworkScenario::from_json(json).unwrap(), Execution::Sequential).unwrap();
    let errors: Vec<bool> = run.report.sessions.iter().map(|s| s.error.is_some()).collect();
    assert_eq!(errors, vec![true, true, true, false]);
    assert_eq!(run.report.by_protocol[0].failed, 3);
    // registry integrity: every transcript comes from registered users only
    for (spec, t) in run.report.sessions.iter().zip(&run.transcripts) {
        if t.is_ok() {
            assert!(["a", "b"].contains(&spec.requester.as_str()) && ["a", "b"].contains(&spec.responder.as_str()));
        }
    }
}

#[test]
fn invalid_user_list_fails_the_scenario() {
    let dup = NetworkScenario::from_json(r#"{"users": ["a", "a"]}"#).unwrap();
    assert!(matches!(run_network_scenario(&dup, Execution::Sequential), Err(NetError::DuplicateUser(_))));
    let stray = NetworkScenario::from_json(r#"{"users": ["a"], "channels": {"b": {"loss_probability": 0.1}}}"#).unwrap();
    assert!(matches!(run_network_scenario(&stray, Execution::Sequential), Err(NetError::UnknownUser(_))));
    assert!(NetworkScenario::from_json("{").is_err());
}

#[test]
fn parallel_equals_sequential() {
    let json = r#"{
      "users": ["a", "b", "c"],
      "channels": {"a": {"loss_probability": 0.1}, "b": {"loss_probability": 0.3}},
      "seed": 77,
      "sessions": [
        {"requester": "a", "responder": "b", "config": {"protocol": "GHZ1", "num_states": 3000}},
        {"requester": "b", "responder": "c", "config": {"protocol": "GHZ2", "num_states": 3000}},
        {"requester": "c", "responder": "a", "config": {"protocol": "BELL5", "num_states": 3000}},
        {"requester": "a", "responder": "c", "config": {"protocol": "BELL4", "num_states": 3000}, "seed": 1},
        {"requester": "b", "responder": "a", "config": {"protocol": "GHZ3", "num_states": 3000}}
      ]
    }"#;
    let scenario = NetworkScenario::from_json(json).unwrap();
    let seq = run_network_scenario(&scenario, Execution::Sequential).unwrap();
    let par = run_network_scenario(&scenario, Execution::Parallel).unwrap();
    assert_eq!(seq.report, par.report);
    for (s, p) in seq.transcripts.iter().zip(&par.transcripts) {
        assert_eq!(s.as_ref().unwrap().to_json(), p.as_ref().unwrap().to_json());
    }
    assert_eq!(seq.report.sessions[3].seed, 1);
}

#[test]
fn kept_fraction_tracks_channel_loss() {
    let json = r#"{
      "users": ["a", "b"],
      "channels": {"a": {"loss_probability": 0.5}, "b": {"loss_probability": 0.5}},
      "sessions": [{"requester": "a", "responder": "b", "config": {"protocol": "BELL4", "num_states": 10000}}]
    }"#;
    let run = run_network_scenario(&NetworkScenario::from_json(json).unwrap(), Execution::Sequential).unwrap();
    let kept = run.report.sessions[0].kept_fraction.unwrap();
    let sigma = (0.125f64 * 0.875 / 10_000.0).sqrt();
    assert!((kept - 0.125).abs() <= 3.0 * sigma, "{kept}");
}
