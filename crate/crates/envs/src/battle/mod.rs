//! Symmetric team battle on a square grid.
//!
//! One slot per unit, team 0's units first. Actions 0..=7 move one cell
//! (N, NE, E, SE, S, SW, W, NW) and 8 attacks the nearest living enemy.

mod agent;
mod encode;

pub use agent::HitAndRun;
pub use encode::{img_3i2z, img_5i, ImgObs, Layout};

use rand::seq::SliceRandom;
use rand::Rng;

use marlkit_core::{
    Bundle, Env, Error, Info, Phase, Result, RngStream, SpaceSpec, StepResult, Value, Winner, WINNER_KEY,
};

pub const ATTACK: u64 = 8;
pub const NUM_ACTIONS: u64 = 9;

/// Row/column offsets of the move actions, clockwise from north.
pub const MOVES: [(i32, i32); 8] = [(-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitKind {
    /// Ranged.
    Immortal,
    /// Melee.
    Zealot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stats {
    pub max_hp: u32,
    pub max_shield: u32,
    pub damage: u32,
    pub cooldown: u32,
    pub range: u32,
}

impl UnitKind {
    pub const ALL: [UnitKind; 2] = [UnitKind::Immortal, UnitKind::Zealot];

    pub fn stats(self) -> Stats {
        match self {
            UnitKind::Immortal => Stats { max_hp: 100, max_shield: 50, damage: 20, cooldown: 3, range: 3 },
            UnitKind::Zealot => Stats { max_hp: 120, max_shield: 30, damage: 16, cooldown: 2, range: 1 },
        }
    }

    pub fn index(self) -> usize {
        match self {
            UnitKind::Immortal => 0,
            UnitKind::Zealot => 1,
        }
    }

    fn from_index(i: u64) -> Option<UnitKind> {
        UnitKind::ALL.get(i as usize).copied()
    }

    /// Recognise a kind from the declared hp bound of its unit entry.
    fn from_max_hp(hp: f64) -> Option<UnitKind> {
        UnitKind::ALL.into_iter().find(|k| k.stats().max_hp as f64 == hp)
    }

    pub fn glyph(self) -> char {
        match self {
            UnitKind::Immortal => 'i',
            UnitKind::Zealot => 'z',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    FiveI,
    ThreeITwoZ,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Scenario> {
        match s {
            "5I" | "5i" => Ok(Scenario::FiveI),
            "3I2Z" | "3i2z" => Ok(Scenario::ThreeITwoZ),
            other => Err(Error::Config(format!("unknown battle scenario {other:?} (5I or 3I2Z)"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::FiveI => "5I",
            Scenario::ThreeITwoZ => "3I2Z",
        }
    }

    /// Unit kinds of one team, in slot order.
    pub fn roster(self) -> Vec<UnitKind> {
        match self {
            Scenario::FiveI => vec![UnitKind::Immortal; 5],
            Scenario::ThreeITwoZ => {
                vec![UnitKind::Immortal, UnitKind::Immortal, UnitKind::Immortal, UnitKind::Zealot, UnitKind::Zealot]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BattleConfig {
    pub size: usize,
    pub scenario: Scenario,
    pub randomize_status: bool,
    pub randomize_positions: bool,
    pub step_limit: u32,
}

impl Default for BattleConfig {
    fn default() -> Self {
        Self {
            size: 8,
            scenario: Scenario::FiveI,
            randomize_status: false,
            randomize_positions: true,
            step_limit: 200,
        }
    }
}

/// Columns each team deploys in.
const DEPLOY_COLS: usize = 3;

impl BattleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_limit == 0 {
            return Err(Error::Config("step_limit must be positive".into()));
        }
        let per_team = self.scenario.roster().len();
        if self.size < 2 * DEPLOY_COLS || self.size * DEPLOY_COLS < per_team || self.size < per_team + 1 {
            return Err(Error::Config(format!("a {0}x{0} grid cannot hold the {1} scenario", self.size, self.scenario.name())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub team: usize,
    pub kind: UnitKind,
    pub pos: (i32, i32),
    pub hp: u32,
    pub shield: u32,
    pub cd: u32,
    pub alive: bool,
}

impl Unit {
    pub fn stats(&self) -> Stats {
        self.kind.stats()
    }
}

pub fn dist2(a: (i32, i32), b: (i32, i32)) -> i32 {
    let (dr, dc) = (a.0 - b.0, a.1 - b.1);
    dr * dr + dc * dc
}

pub fn chebyshev(a: (i32, i32), b: (i32, i32)) -> u32 {
    (a.0 - b.0).unsigned_abs().max((a.1 - b.1).unsigned_abs())
}

/// Index of the living enemy of `units[me]` nearest by Euclidean distance,
/// ties to the lowest index.
pub fn nearest_enemy(units: &[Unit], me: usize) -> Option<usize> {
    let u = &units[me];
    units
        .iter()
        .enumerate()
        .filter(|(_, e)| e.alive && e.team != u.team)
        .min_by_key(|(i, e)| (dist2(u.pos, e.pos), *i))
        .map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BattleState {
    pub units: Vec<Unit>,
    pub tick: u32,
}

impl BattleState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = self.tick.to_le_bytes().to_vec();
        for u in &self.units {
            out.push(u.team as u8);
            out.push(u.kind.index() as u8);
            out.extend_from_slice(&u.pos.0.to_le_bytes());
            out.extend_from_slice(&u.pos.1.to_le_bytes());
            for x in [u.hp, u.shield, u.cd] {
                out.extend_from_slice(&x.to_le_bytes());
            }
            out.push(u.alive as u8);
        }
        out
    }

    pub fn occupied(&self, cell: (i32, i32)) -> bool {
        self.units.iter().any(|u| u.alive && u.pos == cell)
    }

    pub fn team_alive(&self, team: usize) -> usize {
        self.units.iter().filter(|u| u.alive && u.team == team).count()
    }
}

/// What one tick did, for tests and invariants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickReport {
    /// `(attacker, target, dealt)` per successful attack, in slot order.
    pub attacks: Vec<(usize, usize, u32)>,
}

pub struct BattleEnv {
    cfg: BattleConfig,
    state: BattleState,
    phase: Phase,
    obs_specs: Vec<SpaceSpec>,
    act_specs: Vec<SpaceSpec>,
    last: TickReport,
}

fn unit_spec(kind: UnitKind, size: usize) -> SpaceSpec {
    let s = kind.stats();
    SpaceSpec::mapping([
        ("alive", SpaceSpec::Discrete(2)),
        ("cd", SpaceSpec::vector(1, 0.0, s.cooldown as f64)),
        ("hp", SpaceSpec::vector(1, 0.0, s.max_hp as f64)),
        ("kind", SpaceSpec::Discrete(2)),
        ("pos", SpaceSpec::vector(2, 0.0, (size - 1) as f64)),
        ("shield", SpaceSpec::vector(1, 0.0, s.max_shield as f64)),
        ("team", SpaceSpec::Discrete(2)),
    ])
}

fn unit_value(u: &Unit) -> Value {
    Value::mapping([
        ("alive", Value::Discrete(u.alive as u64)),
        ("cd", Value::scalar(u.cd as f64)),
        ("hp", Value::scalar(u.hp as f64)),
        ("kind", Value::Discrete(u.kind.index() as u64)),
        ("pos", Value::Vector(vec![u.pos.0 as f64, u.pos.1 as f64])),
        ("shield", Value::scalar(u.shield as f64)),
        ("team", Value::Discrete(u.team as u64)),
    ])
}

/// Read the unit list back out of a raw observation.
pub fn units_from_obs(obs: &Value) -> Option<Vec<Unit>> {
    obs.get("units")?
        .as_seq()?
        .iter()
        .map(|u| {
            let pos = u.get("pos")?.as_vector()?;
            Some(Unit {
                team: u.get("team")?.as_discrete()? as usize,
                kind: UnitKind::from_index(u.get("kind")?.as_discrete()?)?,
                pos: (pos[0] as i32, pos[1] as i32),
                hp: u.scalar_at("hp")? as u32,
                shield: u.scalar_at("shield")? as u32,
                cd: u.scalar_at("cd")? as u32,
                alive: u.get("alive")?.as_discrete()? == 1,
            })
        })
        .collect()
}

/// Unit kinds and grid size declared by a raw observation space.
pub(crate) fn layout_of(spec: &SpaceSpec) -> Option<(Vec<UnitKind>, usize)> {
    let SpaceSpec::Mapping(m) = spec else { return None };
    let SpaceSpec::Seq(units) = m.get("units")? else { return None };
    let mut size = None;
    let kinds = units
        .iter()
        .map(|u| {
            let SpaceSpec::Mapping(u) = u else { return None };
            match (u.get("hp")?, u.get("pos")?) {
                (SpaceSpec::Box { high: hp, .. }, SpaceSpec::Box { high: p, .. }) => {
                    size = Some(*p as usize + 1);
                    UnitKind::from_max_hp(*hp)
                }
                _ => None,
            }
        })
        .collect::<Option<Vec<_>>>()?;
    Some((kinds, size?))
}

impl BattleEnv {
    pub fn new(cfg: BattleConfig) -> Result<Self> {
        cfg.validate()?;
        let kinds: Vec<UnitKind> = cfg.scenario.roster().into_iter().cycle().take(2 * cfg.scenario.roster().len()).collect();
        let n = kinds.len();
        let obs = SpaceSpec::mapping([
            ("own", SpaceSpec::Discrete(n as u64)),
            ("tick", SpaceSpec::vector(1, 0.0, cfg.step_limit as f64)),
            ("units", SpaceSpec::Seq(kinds.iter().map(|&k| unit_spec(k, cfg.size)).collect())),
        ]);
        let units = kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| Unit {
                team: usize::from(i >= n / 2),
                kind,
                pos: (0, 0),
                hp: kind.stats().max_hp,
                shield: kind.stats().max_shield,
                cd: 0,
                alive: true,
            })
            .collect();
        Ok(Self {
            state: BattleState { units, tick: 0 },
            phase: Phase::Fresh,
            obs_specs: vec![obs; n],
            act_specs: vec![SpaceSpec::Discrete(NUM_ACTIONS); n],
            last: TickReport::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &BattleConfig {
        &self.cfg
    }

    pub fn state(&self) -> &BattleState {
        &self.state
    }

    pub fn last_tick(&self) -> &TickReport {
        &self.last
    }

    /// Start from an explicit state (scripted scenarios in tests).
    pub fn reset_to(&mut self, state: BattleState) -> Result<Bundle> {
        if state.units.len() != self.state.units.len() {
            return Err(Error::Config("unit count does not match the scenario".into()));
        }
        self.state = state;
        self.phase = Phase::Running;
        Ok(self.observe())
    }

    fn observe(&self) -> Bundle {
        let units = Value::Seq(self.state.units.iter().map(unit_value).collect());
        let tick = Value::scalar(self.state.tick as f64);
        Bundle::new(
            (0..self.state.units.len())
                .map(|i| {
                    Value::mapping([
                        ("own", Value::Discrete(i as u64)),
                        ("tick", tick.clone()),
                        ("units", units.clone()),
                    ])
                })
                .collect(),
        )
        .expect("at least one unit")
    }

    fn deploy(&mut self, rng: &mut RngStream) {
        let size = self.cfg.size as i32;
        let per_team = self.state.units.len() / 2;
        for team in 0..2 {
            let cols: Vec<i32> = if team == 0 {
                (0..DEPLOY_COLS as i32).collect()
            } else {
                (size - DEPLOY_COLS as i32..size).collect()
            };
            let cells: Vec<(i32, i32)> = if self.cfg.randomize_positions {
                let mut all: Vec<(i32, i32)> = cols.iter().flat_map(|&c| (0..size).map(move |r| (r, c))).collect();
                let (picked, _) = all.partial_shuffle(rng, per_team);
                picked.to_vec()
            } else {
                let col = if team == 0 { 1 } else { size - 2 };
                (1..=per_team as i32).map(|r| (r, col)).collect()
            };
            for (u, cell) in self.state.units[team * per_team..(team + 1) * per_team].iter_mut().zip(cells) {
                u.pos = cell;
            }
        }
    }

    fn resolve(&mut self, acts: &[u64]) -> Vec<f64> {
        let n = self.state.units.len();
        let size = self.cfg.size as i32;
        let units = &mut self.state.units;

        // movement: cancelled into cells occupied at the start of the tick;
        // contested cells go to the lowest slot
        let mut claimed: Vec<(i32, i32)> = Vec::new();
        let start: Vec<(i32, i32)> = units.iter().filter(|u| u.alive).map(|u| u.pos).collect();
        let mut moves = vec![None; n];
        for i in 0..n {
            let a = acts[i];
            if !units[i].alive || a >= 8 {
                continue;
            }
            let (dr, dc) = MOVES[a as usize];
            let t = (units[i].pos.0 + dr, units[i].pos.1 + dc);
            if t.0 < 0 || t.1 < 0 || t.0 >= size || t.1 >= size || start.contains(&t) || claimed.contains(&t) {
                continue;
            }
            claimed.push(t);
            moves[i] = Some(t);
        }
        for (u, m) in units.iter_mut().zip(moves) {
            if let Some(t) = m {
                u.pos = t;
            }
        }

        // attacks: targets are chosen before any damage lands
        let mut rewards = vec![0.0; n];
        let mut planned = Vec::new();
        for i in 0..n {
            if !units[i].alive || acts[i] != ATTACK || units[i].cd > 0 {
                continue;
            }
            if let Some(t) = nearest_enemy(units, i) {
                if chebyshev(units[i].pos, units[t].pos) <= units[i].stats().range {
                    planned.push((i, t));
                }
            }
        }
        let mut report = TickReport::default();
        for (i, t) in planned {
            let dmg = units[i].stats().damage;
            let target = &mut units[t];
            let from_shield = dmg.min(target.shield);
            let from_hp = (dmg - from_shield).min(target.hp);
            target.shield -= from_shield;
            target.hp -= from_hp;
            let dealt = from_shield + from_hp;
            rewards[i] += dealt as f64 / 100.0;
            units[i].cd = units[i].stats().cooldown;
            report.attacks.push((i, t, dealt));
        }
        for u in units.iter_mut() {
            u.cd = u.cd.saturating_sub(1);
            if u.alive && u.hp == 0 {
                u.alive = false;
            }
        }
        self.last = report;
        rewards
    }
}

impl Env for BattleEnv {
    fn obs_specs(&self) -> &[SpaceSpec] {
        &self.obs_specs
    }

    fn act_specs(&self) -> &[SpaceSpec] {
        &self.act_specs
    }

    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        let mut rng = RngStream::new(seed).split("battle");
        let randomize = self.cfg.randomize_status;
        for u in self.state.units.iter_mut() {
            let s = u.stats();
            u.alive = true;
            if randomize {
                u.hp = rng.gen_range(s.max_hp.div_ceil(2)..=s.max_hp);
                u.shield = rng.gen_range(s.max_shield.div_ceil(2)..=s.max_shield);
                u.cd = rng.gen_range(0..=s.cooldown);
            } else {
                u.hp = s.max_hp;
                u.shield = s.max_shield;
                u.cd = 0;
            }
        }
        self.deploy(&mut rng);
        self.state.tick = 0;
        self.last = TickReport::default();
        self.phase = Phase::Running;
        Ok(self.observe())
    }

    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        self.phase.check_step()?;
        actions.check(&self.act_specs)?;
        let acts: Vec<u64> = actions.iter().map(|a| a.as_discrete().expect("checked")).collect();
        let mut rewards = self.resolve(&acts);
        self.state.tick += 1;
        let alive = [self.state.team_alive(0), self.state.team_alive(1)];
        let outcome = match alive {
            [0, 0] => Some(Winner::Draw),
            [_, 0] => Some(Winner::Team(0)),
            [0, _] => Some(Winner::Team(1)),
            _ if self.state.tick >= self.cfg.step_limit => Some(Winner::Draw),
            _ => None,
        };
        let mut info = Info::new();
        if let Some(w) = outcome {
            self.phase = Phase::Done;
            if let Winner::Team(t) = w {
                for (r, u) in rewards.iter_mut().zip(&self.state.units) {
                    *r += if u.team == t { 1.0 } else { -1.0 };
                }
            }
            info.insert(WINNER_KEY.into(), w.to_value());
        }
        Ok(StepResult {
            obs: self.observe(),
            rewards,
            done: outcome.is_some(),
            alive: self.state.units.iter().map(|u| u.alive).collect(),
            info,
        })
    }

    fn teams(&self) -> Vec<Vec<usize>> {
        let n = self.state.units.len();
        vec![(0..n / 2).collect(), (n / 2..n).collect()]
    }

    fn state_bytes(&self) -> Vec<u8> {
        self.state.to_bytes()
    }

    fn render(&self) -> String {
        let size = self.cfg.size;
        let mut rows = vec![vec!['.'; size]; size];
        for u in self.state.units.iter().filter(|u| u.alive) {
            let g = u.kind.glyph();
            rows[u.pos.0 as usize][u.pos.1 as usize] = if u.team == 0 { g.to_ascii_uppercase() } else { g };
        }
        let mut out = format!(
            "tick {}  alive {}:{}\n",
            self.state.tick,
            self.state.team_alive(0),
            self.state.team_alive(1)
        );
        for r in rows {
            out.extend(r);
            out.push('\n');
        }
        out
    }
}
