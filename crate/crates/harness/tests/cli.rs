use std::path::Path;
use std::process::{Command, Output};

fn marlkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marlkit")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name).display().to_string()
}

#[test]
fn run_json_counts_every_episode_and_the_replay_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("pong.jsonl");
    let r = replay.to_str().unwrap();
    let o = marlkit(&["run", "--env", "pong2p", "--agents", "pong.follow_ball,random", "--episodes", "10", "--seed", "1", "--json", "--replay", r]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let total = stats["wins"].as_u64().unwrap() + stats["draws"].as_u64().unwrap() + stats["losses"].as_u64().unwrap();
    assert_eq!(total, 10);
    for key in ["env", "agents", "episodes", "win_rate", "mean_return_per_slot", "mean_length"] {
        assert!(stats.get(key).is_some(), "{key}");
    }

    let v = marlkit(&["verify-replay", r]);
    assert_eq!(code(&v), 0);
    assert!(stdout(&v).starts_with("ok"));

    // swap the first recorded action for a different legal one
    let text = std::fs::read_to_string(&replay).unwrap();
    let at = text.find("\"actions\":[{\"d\":").unwrap() + "\"actions\":[{\"d\":".len();
    let mut bytes = text.into_bytes();
    bytes[at] = if bytes[at] == b'1' { b'2' } else { b'1' };
    std::fs::write(&replay, bytes).unwrap();
    let v = marlkit(&["verify-replay", r]);
    assert_eq!(code(&v), 2);
    assert!(stdout(&v).contains("diverged: episode 0 step 1"), "{}", stdout(&v));
}

#[test]
fn tourney_prints_a_matrix_with_an_empty_diagonal() {
    let o = marlkit(&["tourney", "--config", &config("tourney.json"), "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let j: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let m = j["matrix"].as_array().unwrap();
    assert_eq!(m.len(), 3);
    for (i, row) in m.iter().enumerate() {
        let row = row.as_array().unwrap();
        assert_eq!(row.len(), 3);
        assert!(row[i].is_null());
        for (k, x) in row.iter().enumerate() {
            if k != i {
                let (a, b) = (x.as_f64().unwrap(), m[k][i].as_f64().unwrap());
                assert!((a + b - 1.0).abs() < 1e-12);
            }
        }
    }
    let table = marlkit(&["tourney", "--config", &config("tourney.json")]);
    assert!(stdout(&table).contains("lazy_follow"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&marlkit(&["run", "--bogus"])), 1);
    assert_eq!(code(&marlkit(&["frobnicate"])), 1);
    assert_eq!(code(&marlkit(&["run", "--env", "pong2p"])), 1);
    assert_eq!(code(&marlkit(&["run", "--env", "pong2p", "--agents", "random*"])), 1);
    assert_eq!(code(&marlkit(&["run", "--env", "chess", "--agents", "random"])), 2);
    assert_eq!(code(&marlkit(&["run", "--env", "pong2p", "--agents", "random"])), 2);
    assert_eq!(code(&marlkit(&["verify-replay", "/nonexistent/replay.jsonl"])), 2);
    assert_eq!(code(&marlkit(&["--help"])), 0);
}

#[test]
fn listings_name_the_builtins() {
    let envs = stdout(&marlkit(&["list-envs"]));
    for name in ["pong2p", "gridbattle", "bomber"] {
        assert!(envs.contains(name));
    }
    assert!(stdout(&marlkit(&["list-agents"])).contains("bomber.simple"));
    assert!(stdout(&marlkit(&["list-interfaces"])).contains("bomber.rotate"));
}

#[test]
fn flags_build_team_matches_and_render_replays() {
    let dir = tempfile::tempdir().unwrap();
    let replay = dir.path().join("bomber.jsonl");
    let r = replay.to_str().unwrap();
    let o = marlkit(&[
        "run", "--env", "bomber", "--mode", "2v2", "--agents", "bomber.simple@0/2,random@1/3",
        "--agent-itf", "0:bomber.board_map,bomber.rotate", "--episodes", "2", "--swap-sides", "--replay", r,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("bomber.simple vs random"));
    let frames = marlkit(&["render", r, "--fps", "0", "--episode", "1"]);
    assert_eq!(code(&frames), 0);
    let text = stdout(&frames);
    assert!(text.contains("episode 1 seed 1 step 0") && text.contains("tick 1"));
    assert_eq!(code(&marlkit(&["render", r, "--fps", "0", "--episode", "9"])), 2);
    assert_eq!(code(&marlkit(&["run", "--env", "pong2p", "--agents", "random,random", "--agent-itf", "5:identity"])), 1);
}

#[test]
fn config_file_with_flag_overrides() {
    let o = marlkit(&["run", "--config", &config("battle_teams.json"), "--episodes", "3", "--param", "step_limit=30", "--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stats: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(stats["episodes"], 3);
    assert_eq!(stats["agents"], serde_json::json!(["hit_and_run", "random"]));
    assert!(stats["mean_length"].as_f64().unwrap() <= 30.0);
}
