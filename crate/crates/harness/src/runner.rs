//! Playing episodes and matches.

use std::collections::BTreeSet;

use marlkit_core::{
    BoxedInterface, Bundle, Env, Frame, RngStream, SlotPartition, Specs, Value, WrappedAgent, WrappedEnv, Winner,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{config, HarnessError, Result};
use crate::registry::{build_agent, build_env, build_pipeline, BuildCtx};
use crate::replay;
use crate::spec::{AgentSpec, MatchSpec, SlotSel};
use crate::tap::{StepRecord, Tap, TapHandle};

/// Result of one episode from the point of view of the first agent entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Draw,
    Loss,
}

/// An agent entry seated at some slots of the wrapped environment.
pub struct Seat {
    pub entry: usize,
    pub name: String,
    pub slots: Vec<usize>,
    pub agent: WrappedAgent,
}

/// Everything the raw environment saw during one episode.
#[derive(Debug, Clone)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub init_hash: u64,
    pub steps: Vec<StepRecord>,
    pub winner: Winner,
    /// Summed raw rewards per raw slot.
    pub returns: Vec<f64>,
}

impl EpisodeRecord {
    pub fn length(&self) -> usize {
        self.steps.len()
    }
}

/// Wrap `raw` in `itf` with a recording tap underneath.
pub fn set_table(raw: Box<dyn Env>, itf: BoxedInterface) -> Result<(WrappedEnv, TapHandle)> {
    let (tap, log) = Tap::new(raw);
    Ok((WrappedEnv::new(Box::new(tap), itf)?, log))
}

fn gather(b: &Bundle, slots: &[usize]) -> Result<Bundle> {
    Ok(Bundle::new(slots.iter().map(|&i| b.slots()[i].clone()).collect())?)
}

fn gather_frame(f: &Frame, slots: &[usize]) -> Result<Frame> {
    Ok(Frame {
        obs: gather(&f.obs, slots)?,
        rewards: slots.iter().map(|&i| f.rewards[i]).collect(),
        alive: slots.iter().map(|&i| f.alive[i]).collect(),
    })
}

fn seat_error(seat: &Seat, e: marlkit_core::Error) -> HarnessError {
    // member k maps to env slot slots[k] when the agent side is slot-preserving
    let e = match e {
        marlkit_core::Error::SpaceMismatch { slot: Some(k), msg }
            if seat.agent.num_members() == seat.slots.len() && k < seat.slots.len() =>
        {
            marlkit_core::Error::SpaceMismatch { slot: Some(seat.slots[k]), msg }
        }
        other => other,
    };
    HarnessError::Agent { entry: seat.entry, name: seat.name.clone(), source: e }
}

fn check_cover(seats: &[Seat], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for s in seats {
        for &i in &s.slots {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(config(format!("agent entry {} claims slot {i} twice or out of range ({n} slots)", s.entry)));
            }
        }
    }
    let covered = seen.iter().filter(|&&x| x).count();
    if covered != n {
        return Err(config(format!("agents cover {covered} slots but the wrapped environment has {n}")));
    }
    Ok(())
}

/// Play one episode. Agents act on the latest observation, their actions
/// are assembled into one bundle, the environment steps, and every seat
/// observes its slice; at the end each agent gets a final `done` call.
pub fn run_episode(env: &mut WrappedEnv, tap: &TapHandle, seats: &mut [Seat], seed: u64) -> Result<EpisodeRecord> {
    let n = env.num_slots();
    check_cover(seats, n)?;
    let obs = env.reset(seed)?;
    for seat in seats.iter_mut() {
        let mine = gather(&obs, &seat.slots)?;
        seat.agent.reset(mine).map_err(|e| seat_error(seat, e))?;
    }
    let winner = loop {
        let mut acts: Vec<Option<Value>> = vec![None; n];
        for seat in seats.iter_mut() {
            let a = seat.agent.act(false).map_err(|e| seat_error(seat, e))?;
            for (&s, v) in seat.slots.iter().zip(a.into_vec()) {
                acts[s] = Some(v);
            }
        }
        let bundle = Bundle::new(acts.into_iter().map(|a| a.expect("every slot is covered")).collect())?;
        let r = env.step(bundle)?;
        let frame = r.frame();
        for seat in seats.iter_mut() {
            let mine = gather_frame(&frame, &seat.slots)?;
            seat.agent.observe(mine).map_err(|e| seat_error(seat, e))?;
        }
        if r.done {
            for seat in seats.iter_mut() {
                seat.agent.act(true).map_err(|e| seat_error(seat, e))?;
            }
            break Winner::from_info(&r.info).ok_or(HarnessError::NoWinner)?;
        }
    };
    let log = tap.lock().expect("tap log poisoned");
    let raw_n = log.steps.first().map_or(0, |s| s.rewards.len());
    let mut returns = vec![0.0; raw_n];
    for s in &log.steps {
        for (acc, r) in returns.iter_mut().zip(&s.rewards) {
            *acc += r;
        }
    }
    Ok(EpisodeRecord { seed, init_hash: log.init_hash, steps: log.steps.clone(), winner, returns })
}

/// Slots each entry claims, in entry order: explicit lists first, then
/// counts take the lowest free slots.
pub fn assign_slots(agents: &[AgentSpec], n: usize) -> Result<Vec<Vec<usize>>> {
    let mut taken = BTreeSet::new();
    for a in agents {
        if let SlotSel::List(v) = &a.slots {
            for &i in v {
                if i >= n || !taken.insert(i) {
                    return Err(config(format!("slot {i} is out of range or claimed twice ({n} slots)")));
                }
            }
        }
    }
    let mut free = (0..n).filter(|i| !taken.contains(i)).collect::<Vec<_>>().into_iter();
    let mut out = Vec::with_capacity(agents.len());
    for a in agents {
        match &a.slots {
            SlotSel::List(v) => out.push(v.clone()),
            SlotSel::Count(c) => {
                let mine: Vec<usize> = free.by_ref().take(*c).collect();
                if mine.len() != *c {
                    return Err(config(format!("agents need more slots than the wrapped environment's {n}")));
                }
                out.push(mine);
            }
        }
        if out.last().is_some_and(Vec::is_empty) {
            return Err(config(format!("agent entry {:?} covers no slots", a.name)));
        }
    }
    if free.next().is_some() {
        let covered: usize = out.iter().map(Vec::len).sum();
        return Err(config(format!("agents cover {covered} slots but the wrapped environment has {n}")));
    }
    Ok(out)
}

/// Seed for episode `k`.
pub fn episode_seed(spec: &MatchSpec, k: u64) -> u64 {
    spec.seed.wrapping_add(k)
}

pub fn is_swapped(spec: &MatchSpec, k: u64) -> bool {
    spec.swap_sides && k % 2 == 1
}

/// Slots per entry for episode `k`; odd episodes of a side-swapping match
/// reverse the assignment.
pub fn placement(spec: &MatchSpec, n: usize, k: u64) -> Result<Vec<Vec<usize>>> {
    let assign = assign_slots(&spec.agents, n)?;
    if !is_swapped(spec, k) {
        return Ok(assign);
    }
    let m = assign.len();
    (0..m)
        .map(|i| {
            let other = &assign[m - 1 - i];
            if other.len() != assign[i].len() {
                return Err(config("swap_sides needs mirrored entries to cover equally many slots"));
            }
            Ok(other.clone())
        })
        .collect()
}

/// Build one seat per entry for an episode with seed `seed`.
pub fn build_seats(agents: &[AgentSpec], env: &WrappedEnv, places: &[Vec<usize>], seed: u64) -> Result<Vec<Seat>> {
    let root = RngStream::new(seed).split("agents");
    agents
        .iter()
        .zip(places)
        .enumerate()
        .map(|(entry, (a, slots))| {
            let inner = Specs::new(
                slots.iter().map(|&i| env.obs_specs()[i].clone()).collect(),
                slots.iter().map(|&i| env.act_specs()[i].clone()).collect(),
            )?;
            let ctx = BuildCtx { default_groups: Some(vec![(0..slots.len()).collect()]) };
            let itf = build_pipeline(&a.agent_interface, &ctx)?;
            let agent = WrappedAgent::build(itf, &inner, |k, _, _| {
                build_agent(&a.name, &a.params, root.split(&format!("{entry}.{k}"))).map_err(|e| match e {
                    HarnessError::Core(c) => c,
                    other => marlkit_core::Error::Config(other.to_string()),
                })
            })
            .map_err(|e| HarnessError::Agent { entry, name: a.name.clone(), source: e })?;
            Ok(Seat { entry, name: a.name.clone(), slots: slots.clone(), agent })
        })
        .collect()
}

/// Per-episode summary, with returns regrouped by entry.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeSummary {
    pub episode: u64,
    pub seed: u64,
    pub swapped: bool,
    #[serde(serialize_with = "replay::ser_winner")]
    pub winner: Winner,
    pub outcome: Outcome,
    /// Raw-slot returns, entry 0's slots first, each entry's in slot order.
    pub returns: Vec<f64>,
    pub length: usize,
}

fn raw_slots(groups: &Option<SlotPartition>, wrapped: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = match groups {
        None => wrapped.to_vec(),
        Some(p) => {
            let ranges: Vec<_> = p.ranges().collect();
            wrapped.iter().flat_map(|&i| ranges[i].clone()).collect()
        }
    };
    out.sort_unstable();
    out
}

pub fn judge(winner: Winner, teams: &[Vec<usize>], mine: &[usize], theirs: &[usize]) -> Result<Outcome> {
    let Winner::Team(t) = winner else {
        return Ok(Outcome::Draw);
    };
    let team = teams
        .get(t)
        .ok_or_else(|| config(format!("environment named team {t} but has {} teams", teams.len())))?;
    let ours = mine.iter().any(|s| team.contains(s));
    let other = theirs.iter().any(|s| team.contains(s));
    Ok(match (ours, other) {
        (true, false) => Outcome::Win,
        (false, true) => Outcome::Loss,
        _ => Outcome::Draw,
    })
}

/// Play episode `k` of `spec`, returning its summary and replay lines.
pub fn play_episode(spec: &MatchSpec, k: u64) -> Result<(EpisodeSummary, Vec<String>)> {
    let seed = episode_seed(spec, k);
    let swapped = is_swapped(spec, k);
    let raw = build_env(&spec.env, &spec.env_params)?;
    let ctx = BuildCtx { default_groups: Some(raw.teams()) };
    let teams = raw.teams();
    let itf = build_pipeline(&spec.env_interfaces, &ctx)?;
    let (mut env, tap) = set_table(raw, itf)?;
    let places = placement(spec, env.num_slots(), k)?;
    let mut seats = build_seats(&spec.agents, &env, &places, seed)?;
    let rec = run_episode(&mut env, &tap, &mut seats, seed)?;

    let groups = env.raw_slot_groups();
    let per_entry: Vec<Vec<usize>> = places.iter().map(|p| raw_slots(&groups, p)).collect();
    let theirs: Vec<usize> = per_entry[1..].iter().flatten().copied().collect();
    let outcome = judge(rec.winner, &teams, &per_entry[0], &theirs)?;
    let returns = per_entry.iter().flatten().map(|&s| rec.returns[s]).collect();

    let seating: Vec<(String, Vec<usize>)> = seats.iter().map(|s| (s.name.clone(), s.slots.clone())).collect();
    let lines = replay::episode_lines(spec, k, swapped, &seating, &rec);
    let summary = EpisodeSummary { episode: k, seed, swapped, winner: rec.winner, outcome, returns, length: rec.length() };
    Ok((summary, lines))
}

#[derive(Debug, Clone, Serialize)]
pub struct Stats {
    pub env: String,
    pub agents: Vec<String>,
    pub episodes: u64,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
    pub win_rate: f64,
    pub mean_return_per_slot: Vec<f64>,
    pub mean_length: f64,
}

#[derive(Debug, Clone)]
pub struct MatchResult {
    pub spec: MatchSpec,
    pub episodes: Vec<EpisodeSummary>,
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
}

impl MatchResult {
    /// `(wins + draws / 2) / episodes`.
    pub fn win_rate(&self) -> f64 {
        (self.wins as f64 + 0.5 * self.draws as f64) / self.episodes.len() as f64
    }

    pub fn stats(&self) -> Stats {
        let n = self.episodes.len();
        let width = self.episodes.iter().map(|e| e.returns.len()).max().unwrap_or(0);
        let mut sums = vec![0.0; width];
        for e in &self.episodes {
            for (acc, r) in sums.iter_mut().zip(&e.returns) {
                *acc += r;
            }
        }
        Stats {
            env: self.spec.env.clone(),
            agents: self.spec.agents.iter().map(AgentSpec::display).collect(),
            episodes: n as u64,
            wins: self.wins,
            draws: self.draws,
            losses: self.losses,
            win_rate: self.win_rate(),
            mean_return_per_slot: sums.into_iter().map(|s| s / n as f64).collect(),
            mean_length: self.episodes.iter().map(|e| e.length as f64).sum::<f64>() / n as f64,
        }
    }
}

/// Play every episode; returns the result and the replay text.
pub fn run_match_lines(spec: &MatchSpec) -> Result<(MatchResult, Vec<String>)> {
    if spec.episodes == 0 {
        return Err(config("a match needs at least one episode (win rate is undefined otherwise)"));
    }
    if spec.agents.is_empty() {
        return Err(config("a match needs at least one agent entry"));
    }
    let played: Vec<(EpisodeSummary, Vec<String>)> = if spec.parallel {
        (0..spec.episodes).into_par_iter().map(|k| play_episode(spec, k)).collect::<Result<_>>()?
    } else {
        (0..spec.episodes).map(|k| play_episode(spec, k)).collect::<Result<_>>()?
    };
    let mut result = MatchResult { spec: spec.clone(), episodes: Vec::new(), wins: 0, draws: 0, losses: 0 };
    let mut lines = Vec::new();
    for (summary, ls) in played {
        match summary.outcome {
            Outcome::Win => result.wins += 1,
            Outcome::Draw => result.draws += 1,
            Outcome::Loss => result.losses += 1,
        }
        result.episodes.push(summary);
        lines.extend(ls);
    }
    Ok((result, lines))
}

/// Play the match and write the replay file when the spec names one.
pub fn run_match(spec: &MatchSpec) -> Result<MatchResult> {
    let (result, lines) = run_match_lines(spec)?;
    if let Some(path) = &spec.replay {
        replay::write_lines(path, &lines)?;
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::AgentSpec;
    use serde_json::json;

    #[test]
    fn const_env_with_a_constant_agent() {
        let spec = MatchSpec::new("const", vec![AgentSpec::new("constant")]);
        let r = run_match(&spec).unwrap();
        assert_eq!(r.episodes[0].length, 1);
        assert_eq!(r.episodes[0].returns, vec![0.0]);
        assert_eq!((r.wins, r.draws, r.losses), (0, 1, 0));
    }

    #[test]
    fn zero_episodes_is_an_error() {
        let mut spec = MatchSpec::new("const", vec![AgentSpec::new("constant")]);
        spec.episodes = 0;
        assert!(run_match(&spec).is_err());
    }

    #[test]
    fn slot_assignment() {
        let a = vec![AgentSpec::new("x").slots(SlotSel::List(vec![0, 2])), AgentSpec::new("y").slots(SlotSel::Count(2))];
        assert_eq!(assign_slots(&a, 4).unwrap(), vec![vec![0, 2], vec![1, 3]]);
        assert!(assign_slots(&a, 5).is_err());
        assert!(assign_slots(&a, 3).is_err());
        let dup = vec![AgentSpec::new("x").slots(SlotSel::List(vec![0, 0]))];
        assert!(assign_slots(&dup, 2).is_err());
    }

    #[test]
    fn agent_count_is_checked_against_the_wrapped_env() {
        // make_team turns 10 slots into 2
        let mut spec = MatchSpec::new(
            "gridbattle",
            vec![AgentSpec::new("random").slots(SlotSel::Count(5)), AgentSpec::new("random").slots(SlotSel::Count(5))],
        );
        spec.env_interfaces = vec![crate::spec::ItfSpec::new("make_team")];
        assert!(run_match(&spec).is_err());
        spec.agents = vec![AgentSpec::new("random"), AgentSpec::new("random")];
        spec.env_params.insert("step_limit".into(), json!(20));
        assert!(run_match(&spec).is_ok());
    }

    #[test]
    fn judging() {
        let teams = vec![vec![0, 2], vec![1, 3]];
        assert_eq!(judge(Winner::Team(0), &teams, &[0, 2], &[1, 3]).unwrap(), Outcome::Win);
        assert_eq!(judge(Winner::Team(1), &teams, &[0, 2], &[1, 3]).unwrap(), Outcome::Loss);
        assert_eq!(judge(Winner::Draw, &teams, &[0, 2], &[1, 3]).unwrap(), Outcome::Draw);
        // the winning team spans both entries
        assert_eq!(judge(Winner::Team(0), &teams, &[0, 1], &[2, 3]).unwrap(), Outcome::Draw);
        assert!(judge(Winner::Team(5), &teams, &[0], &[1]).is_err());
    }
}
