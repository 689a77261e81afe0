use std::path::PathBuf;

use marlkit_harness::{run_match, run_match_lines, MatchSpec, TourneySpec};

fn config<T: serde::de::DeserializeOwned>(name: &str) -> T {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn steps(lines: &[String]) -> Vec<&String> {
    lines.iter().filter(|l| !l.contains("\"type\":\"header\"")).collect()
}

/// Moving the interfaces from the environment onto the agents is a pure
/// config change and leaves every recorded step untouched.
#[test]
fn train_and_test_configs_play_the_same_game() {
    let train: MatchSpec = config("train.json");
    let test: MatchSpec = config("test.json");
    assert!(!train.env_interfaces.is_empty() && test.env_interfaces.is_empty());
    let (a, la) = run_match_lines(&train).unwrap();
    let (b, lb) = run_match_lines(&test).unwrap();
    assert_eq!(steps(&la), steps(&lb));
    assert_eq!((a.wins, a.draws, a.losses), (b.wins, b.draws, b.losses));
}

#[test]
fn heterogeneous_config_runs() {
    let spec: MatchSpec = config("heterogeneous.json");
    let r = run_match(&spec).unwrap();
    assert_eq!(r.wins + r.draws + r.losses, spec.episodes);
    assert_eq!(r.stats().agents, vec!["trained", "bomber.simple"]);
}

#[test]
fn shipped_configs_parse() {
    let _: TourneySpec = config("tourney.json");
    let m: MatchSpec = config("battle_teams.json");
    assert_eq!(m.agents.len(), 2);
}
