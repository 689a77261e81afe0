use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use marlkit_harness::registry::{AGENTS, ENVS, INTERFACES};
use marlkit_harness::spec::parse_kv;
use marlkit_harness::{
    parse_agents, parse_pipeline, replay, round_robin, run_match, HarnessError, MatchSpec, Result, TourneySpec, Verdict,
};

#[derive(Parser)]
#[command(name = "marlkit", version, about = "Run, score and replay multi-agent matches")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List registered environments.
    ListEnvs,
    /// List registered agents.
    ListAgents,
    /// List registered interfaces.
    ListInterfaces,
    /// Play a match.
    Run(RunArgs),
    /// Play a round robin described by a JSON config.
    Tourney {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Re-simulate a replay and compare state hashes.
    VerifyReplay { path: PathBuf },
    /// Print a replay as ASCII frames.
    Render {
        path: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        fps: f64,
        /// Episode to show, counted from 0 in file order.
        #[arg(long, default_value_t = 0)]
        episode: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Match config (JSON); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<String>,
    /// Environment parameter, repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Shorthand for --param mode=MODE.
    #[arg(long)]
    mode: Option<String>,
    /// Comma list: name, name(k=v;..), name*SLOTS, name@i/j.
    #[arg(long)]
    agents: Option<String>,
    /// Env-side pipeline, innermost first: a,b(k=v) or JSON.
    #[arg(long = "env-itf")]
    env_itf: Option<String>,
    /// Agent-side pipeline for one entry, repeatable.
    #[arg(long = "agent-itf", value_name = "INDEX:PIPELINE")]
    agent_itf: Vec<String>,
    #[arg(long)]
    episodes: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    swap_sides: bool,
    #[arg(long)]
    parallel: bool,
    /// Print statistics as JSON.
    #[arg(long)]
    json: bool,
}

fn usage(msg: impl Into<String>) -> HarnessError {
    HarnessError::Usage(msg.into())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

fn match_spec(a: RunArgs) -> Result<(MatchSpec, bool)> {
    let mut spec = match &a.config {
        Some(p) => read_json::<MatchSpec>(p)?,
        None => {
            let env = a.env.clone().ok_or_else(|| usage("run needs --env (or --config)"))?;
            let agents = a.agents.as_deref().ok_or_else(|| usage("run needs --agents (or --config)"))?;
            MatchSpec::new(env, parse_agents(agents)?)
        }
    };
    if let Some(env) = a.env {
        spec.env = env;
    }
    if let Some(agents) = &a.agents {
        spec.agents = parse_agents(agents)?;
    }
    for kv in &a.params {
        let (k, v) = parse_kv(kv)?;
        spec.env_params.insert(k, v);
    }
    if let Some(m) = a.mode {
        spec.env_params.insert("mode".into(), serde_json::Value::String(m));
    }
    if let Some(p) = &a.env_itf {
        spec.env_interfaces = parse_pipeline(p)?;
    }
    for s in &a.agent_itf {
        let (idx, pipe) = s.split_once(':').ok_or_else(|| usage(format!("--agent-itf wants INDEX:PIPELINE, got {s:?}")))?;
        let i: usize = idx.trim().parse().map_err(|_| usage(format!("bad agent index in {s:?}")))?;
        let n = spec.agents.len();
        let entry = spec.agents.get_mut(i).ok_or_else(|| usage(format!("agent index {i} out of range ({n} entries)")))?;
        entry.agent_interface = parse_pipeline(pipe)?;
    }
    if let Some(n) = a.episodes {
        spec.episodes = n;
    }
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    if a.replay.is_some() {
        spec.replay = a.replay;
    }
    spec.swap_sides |= a.swap_sides;
    spec.parallel |= a.parallel;
    Ok((spec, a.json))
}

fn listing(rows: &[(&str, &str)]) {
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    for (name, about) in rows {
        println!("{name:<w$}  {about}");
    }
}

fn execute(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::ListEnvs => listing(ENVS),
        Cmd::ListAgents => listing(AGENTS),
        Cmd::ListInterfaces => listing(INTERFACES),
        Cmd::Run(args) => {
            let (spec, json) = match_spec(args)?;
            let r = run_match(&spec)?;
            let s = r.stats();
            if json {
                println!("{}", serde_json::to_string(&s)?);
            } else {
                println!("{}: {}", s.env, s.agents.join(" vs "));
                println!(
                    "episodes {}  wins {}  draws {}  losses {}  win rate {:.3}  mean length {:.1}",
                    s.episodes, s.wins, s.draws, s.losses, s.win_rate, s.mean_length
                );
                println!("mean return per slot {:?}", s.mean_return_per_slot);
            }
        }
        Cmd::Tourney { config, json } => {
            let t: TourneySpec = read_json(&config)?;
            let board = round_robin(&t)?;
            if json {
                println!("{}", board.to_json());
            } else {
                let w = board.entrants.iter().map(String::len).max().unwrap_or(0).max(6);
                let rates = board.win_rates();
                print!("{:<w$}", "");
                for i in 0..board.entrants.len() {
                    print!("  {i:>6}");
                }
                println!("  points");
                for (i, name) in board.entrants.iter().enumerate() {
                    print!("{name:<w$}");
                    for r in &rates[i] {
                        match r {
                            Some(x) => print!("  {x:>6.3}"),
                            None => print!("  {:>6}", "-"),
                        }
                    }
                    println!("  {:.1}", board.points()[i]);
                }
            }
        }
        Cmd::VerifyReplay { path } => match replay::verify_path(&path)? {
            Verdict::Ok { episodes, steps } => println!("ok: {episodes} episodes, {steps} steps"),
            Verdict::Diverged(d) => {
                println!("diverged: episode {} step {}: {}", d.episode, d.step, d.reason);
                return Ok(ExitCode::from(2));
            }
        },
        Cmd::Render { path, fps, episode } => {
            if !(fps >= 0.0 && fps.is_finite()) {
                return Err(usage("--fps must be a non-negative number"));
            }
            let frames = replay::render_frames(&std::fs::read_to_string(&path)?, episode)?;
            for f in frames {
                println!("{f}\n");
                if fps > 0.0 {
                    std::thread::sleep(Duration::from_secs_f64(1.0 / fps));
                }
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, HarnessError::Usage(_)) { 1 } else { 2 })
        }
    }
}
