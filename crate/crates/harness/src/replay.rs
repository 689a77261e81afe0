//! JSON Lines replays.
//!
//! Each episode is a `header` line, one `step` line per tick and an
//! `outcome` line. Lines are compact JSON with keys in ascending order;
//! anything else is rejected on reading. The state hash chains:
//! `h0 = hash(state after reset)`, `ht = hash(h(t-1) ‖ actions ‖ state)`.

use std::fs;
use std::io::Write;
use std::path::Path;

use marlkit_core::{canon, Bundle, Env, Value, Winner};
use serde::Serializer;
use serde_json::{json, Value as Json};

use crate::error::{HarnessError, Result};
use crate::registry::build_env;
use crate::runner::EpisodeRecord;
use crate::spec::MatchSpec;
use crate::tap::{chain_hash, initial_hash};

pub const FORMAT: u64 = 1;
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn hex(h: u64) -> String {
    format!("{h:016x}")
}

pub fn winner_json(w: Winner) -> Json {
    match w {
        Winner::Team(t) => json!(t),
        Winner::Draw => json!("draw"),
    }
}

pub(crate) fn ser_winner<S: Serializer>(w: &Winner, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_some(&winner_json(*w))
}

fn reals(xs: &[f64]) -> Json {
    canon::value_to_json(&Value::Vector(xs.to_vec()))
}

pub fn header_json(spec: &MatchSpec, episode: u64, swapped: bool, seats: &[(String, Vec<usize>)], rec: &EpisodeRecord) -> Json {
    json!({
        "type": "header",
        "format": FORMAT,
        "version": VERSION,
        "match": spec.normalized(),
        "episode": episode,
        "seed": rec.seed,
        "swapped": swapped,
        "seats": seats.iter().map(|(n, s)| json!({"agent": n, "slots": s})).collect::<Vec<_>>(),
        "init_hash": hex(rec.init_hash),
    })
}

pub fn episode_lines(spec: &MatchSpec, episode: u64, swapped: bool, seats: &[(String, Vec<usize>)], rec: &EpisodeRecord) -> Vec<String> {
    let mut out = Vec::with_capacity(rec.steps.len() + 2);
    out.push(header_json(spec, episode, swapped, seats, rec).to_string());
    for (i, s) in rec.steps.iter().enumerate() {
        let j = json!({
            "type": "step",
            "t": i + 1,
            "actions": canon::bundle_to_json(&s.actions),
            "rewards": reals(&s.rewards),
            "done": s.done,
            "hash": hex(s.hash),
        });
        out.push(j.to_string());
    }
    let j = json!({
        "type": "outcome",
        "winner": winner_json(rec.winner),
        "returns": reals(&rec.returns),
        "length": rec.steps.len(),
    });
    out.push(j.to_string());
    out
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for l in lines {
        f.write_all(l.as_bytes())?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

/// Where re-simulation first disagreed with the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub episode: u64,
    /// 0 for the state right after reset.
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Ok { episodes: usize, steps: usize },
    Diverged(Divergence),
}

struct Lines<'a> {
    iter: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { iter: text.lines().enumerate().peekable() }
    }

    fn next(&mut self) -> Option<Result<(usize, Json)>> {
        let (i, line) = self.iter.next()?;
        Some(parse_line(i + 1, line))
    }

    fn peek_type(&mut self) -> Option<String> {
        let (_, line) = self.iter.peek()?;
        let j: Json = serde_json::from_str(line).ok()?;
        j.get("type")?.as_str().map(str::to_owned)
    }
}

fn bad(line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Format { line, msg: msg.into() }
}

fn parse_line(no: usize, line: &str) -> Result<(usize, Json)> {
    let j: Json = serde_json::from_str(line).map_err(|e| bad(no, e.to_string()))?;
    if j.to_string() != line {
        return Err(bad(no, "line is not in canonical form"));
    }
    Ok((no, j))
}

fn field<'j>(j: &'j Json, key: &str, no: usize) -> Result<&'j Json> {
    j.get(key).ok_or_else(|| bad(no, format!("missing {key:?}")))
}

fn expect_type(j: &Json, want: &str, no: usize) -> Result<()> {
    match j.get("type").and_then(Json::as_str) {
        Some(t) if t == want => Ok(()),
        other => Err(bad(no, format!("expected a {want} line, got {other:?}"))),
    }
}

fn u64_field(j: &Json, key: &str, no: usize) -> Result<u64> {
    field(j, key, no)?.as_u64().ok_or_else(|| bad(no, format!("{key:?} must be an integer")))
}

fn hex_field(j: &Json, key: &str, no: usize) -> Result<u64> {
    let s = field(j, key, no)?.as_str().ok_or_else(|| bad(no, format!("{key:?} must be a string")))?;
    if s.len() != 16 {
        return Err(bad(no, format!("{key:?} must be 16 hex digits")));
    }
    u64::from_str_radix(s, 16).map_err(|_| bad(no, format!("{key:?} must be 16 hex digits")))
}

/// Parsed header of one episode.
#[derive(Debug, Clone)]
pub struct Header {
    pub spec: MatchSpec,
    pub episode: u64,
    pub seed: u64,
    pub init_hash: u64,
}

fn parse_header(j: &Json, no: usize) -> Result<Header> {
    expect_type(j, "header", no)?;
    let format = u64_field(j, "format", no)?;
    if format != FORMAT {
        return Err(bad(no, format!("unsupported replay format {format}")));
    }
    let spec: MatchSpec =
        serde_json::from_value(field(j, "match", no)?.clone()).map_err(|e| bad(no, format!("match: {e}")))?;
    Ok(Header {
        spec,
        episode: u64_field(j, "episode", no)?,
        seed: u64_field(j, "seed", no)?,
        init_hash: hex_field(j, "init_hash", no)?,
    })
}

/// Re-simulate every episode in `text` from its seed and recorded actions.
/// Malformed input is an error; a disagreement is a [`Verdict::Diverged`].
pub fn verify_str(text: &str) -> Result<Verdict> {
    let mut lines = Lines::new(text);
    let (mut episodes, mut total) = (0, 0);
    while let Some(first) = lines.next() {
        let (no, j) = first?;
        let h = parse_header(&j, no)?;
        let diverged = |step: usize, reason: String| Ok(Verdict::Diverged(Divergence { episode: h.episode, step, reason }));
        let mut env = build_env(&h.spec.env, &h.spec.env_params)?;
        env.reset(h.seed)?;
        let mut hash = initial_hash(&env.state_bytes());
        if hash != h.init_hash {
            return diverged(0, format!("state after reset hashes to {}, file has {}", hex(hash), hex(h.init_hash)));
        }
        let mut returns: Vec<f64> = Vec::new();
        let mut done = false;
        let mut winner = None;
        let mut t = 0usize;
        while lines.peek_type().as_deref() == Some("step") {
            let (no, j) = lines.next().expect("peeked")?;
            t += 1;
            if u64_field(&j, "t", no)? != t as u64 {
                return Err(bad(no, format!("expected step {t}")));
            }
            let actions: Bundle = canon::bundle_from_json(field(&j, "actions", no)?).map_err(|e| bad(no, e.to_string()))?;
            let want_hash = hex_field(&j, "hash", no)?;
            let want_done = field(&j, "done", no)?.as_bool().ok_or_else(|| bad(no, "\"done\" must be a boolean"))?;
            let want_rewards = field(&j, "rewards", no)?;
            if done {
                return diverged(t, "step recorded after the episode ended".into());
            }
            let r = match env.step(actions.clone()) {
                Ok(r) => r,
                Err(e) => return diverged(t, format!("environment rejected the recorded actions: {e}")),
            };
            hash = chain_hash(hash, &actions, &env.state_bytes());
            if hash != want_hash {
                return diverged(t, format!("state hash {} differs from recorded {}", hex(hash), hex(want_hash)));
            }
            if reals(&r.rewards) != *want_rewards {
                return diverged(t, "rewards differ".into());
            }
            if r.done != want_done {
                return diverged(t, "done flag differs".into());
            }
            if returns.is_empty() {
                returns = vec![0.0; r.rewards.len()];
            }
            for (acc, x) in returns.iter_mut().zip(&r.rewards) {
                *acc += x;
            }
            done = r.done;
            if done {
                winner = Winner::from_info(&r.info);
            }
        }
        let (no, j) = lines.next().ok_or_else(|| bad(0, "replay ends without an outcome line"))??;
        expect_type(&j, "outcome", no)?;
        if !done {
            return diverged(t, "episode had not ended at the outcome line".into());
        }
        if u64_field(&j, "length", no)? != t as u64 {
            return diverged(t, "recorded length differs".into());
        }
        if Some(field(&j, "winner", no)?) != winner.map(winner_json).as_ref() {
            return diverged(t, "recorded winner differs".into());
        }
        if reals(&returns) != *field(&j, "returns", no)? {
            return diverged(t, "recorded returns differ".into());
        }
        episodes += 1;
        total += t;
    }
    if episodes == 0 {
        return Err(bad(0, "replay holds no episodes"));
    }
    Ok(Verdict::Ok { episodes, steps: total })
}

pub fn verify_path(path: &Path) -> Result<Verdict> {
    verify_str(&fs::read_to_string(path)?)
}

/// Frames of episode `episode` (file order), re-simulated from the file:
/// the board after reset and after every step.
pub fn render_frames(text: &str, episode: usize) -> Result<Vec<String>> {
    let mut lines = Lines::new(text);
    let mut seen = 0;
    while let Some(first) = lines.next() {
        let (no, j) = first?;
        let h = parse_header(&j, no)?;
        if seen < episode {
            while lines.peek_type().as_deref() == Some("step") {
                lines.next();
            }
            lines.next();
            seen += 1;
            continue;
        }
        let mut env = build_env(&h.spec.env, &h.spec.env_params)?;
        env.reset(h.seed)?;
        let mut frames = vec![format!("episode {} seed {} step 0\n{}", h.episode, h.seed, env.render())];
        while lines.peek_type().as_deref() == Some("step") {
            let (no, j) = lines.next().expect("peeked")?;
            let actions = canon::bundle_from_json(field(&j, "actions", no)?).map_err(|e| bad(no, e.to_string()))?;
            let t = u64_field(&j, "t", no)?;
            let r = env.step(actions)?;
            frames.push(format!("episode {} seed {} step {t} rewards {:?}\n{}", h.episode, h.seed, r.rewards, env.render()));
        }
        return Ok(frames);
    }
    Err(bad(0, format!("replay has no episode {episode}")))
}
