//! Four-agent bomber game, free-for-all or 2v2.
//!
//! Actions: 0 idle, 1 up, 2 down, 3 left, 4 right, 5 place bomb. Agents
//! start in the corners, clockwise from the top-left: slot 0 (0, 0),
//! slot 1 (0, n-1), slot 2 (n-1, n-1), slot 3 (n-1, 0).

mod agent;
mod itf;
mod view;

pub use agent::SimpleAgent;
pub use itf::{act_mask, attr, board_map, rotate, remap_action, rotate_pos, view_action, Rotate, BOARD_MAP_CHANNELS};
pub use view::{legal_actions, AgentView, BoardView, Danger};

use rand::Rng;

use marlkit_core::{
    Bundle, Env, Error, Grid, Info, Phase, Result, RngStream, SpaceSpec, StepResult, Value, Winner,
    WINNER_KEY,
};

pub const IDLE: u64 = 0;
pub const UP: u64 = 1;
pub const DOWN: u64 = 2;
pub const LEFT: u64 = 3;
pub const RIGHT: u64 = 4;
pub const BOMB: u64 = 5;
pub const NUM_ACTIONS: usize = 6;

/// Attribute cap used for normalisation and power-up stacking.
pub const ATTR_CAP: u32 = 10;

pub type Pos = (i32, i32);

/// Row/column step of a movement action.
pub fn delta(action: u64) -> Option<Pos> {
    match action {
        UP => Some((-1, 0)),
        DOWN => Some((1, 0)),
        LEFT => Some((0, -1)),
        RIGHT => Some((0, 1)),
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Ffa,
    TwoVsTwo,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s.to_ascii_lowercase().as_str() {
            "ffa" => Ok(Mode::Ffa),
            "2v2" | "team" => Ok(Mode::TwoVsTwo),
            other => Err(Error::Config(format!("unknown bomber mode {other:?} (ffa or 2v2)"))),
        }
    }

    pub fn index(self) -> u64 {
        match self {
            Mode::Ffa => 0,
            Mode::TwoVsTwo => 1,
        }
    }

    pub fn from_index(i: u64) -> Option<Mode> {
        match i {
            0 => Some(Mode::Ffa),
            1 => Some(Mode::TwoVsTwo),
            _ => None,
        }
    }

    pub fn teams(self) -> Vec<Vec<usize>> {
        match self {
            Mode::Ffa => vec![vec![0], vec![1], vec![2], vec![3]],
            Mode::TwoVsTwo => vec![vec![0, 2], vec![1, 3]],
        }
    }

    pub fn team_of(self, slot: usize) -> usize {
        match self {
            Mode::Ffa => slot,
            Mode::TwoVsTwo => slot % 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BomberConfig {
    pub size: usize,
    pub mode: Mode,
    pub step_limit: u32,
    pub bomb_life: u32,
    pub flame_life: u32,
    pub ammo: u32,
    pub blast: u32,
    pub wood_density: f64,
    pub powerup_prob: f64,
}

impl Default for BomberConfig {
    fn default() -> Self {
        Self {
            size: 11,
            mode: Mode::Ffa,
            step_limit: 800,
            bomb_life: 10,
            flame_life: 2,
            ammo: 1,
            blast: 2,
            wood_density: 0.35,
            powerup_prob: 0.5,
        }
    }
}

impl BomberConfig {
    pub fn validate(&self) -> Result<()> {
        if self.size < 5 || self.size % 2 == 0 {
            return Err(Error::Config(format!("board size {} must be odd and at least 5", self.size)));
        }
        if self.step_limit == 0 || self.bomb_life == 0 || self.flame_life == 0 {
            return Err(Error::Config("step_limit, bomb_life and flame_life must be positive".into()));
        }
        if self.ammo > ATTR_CAP || self.blast > ATTR_CAP || self.blast == 0 {
            return Err(Error::Config(format!("ammo and blast must lie in 1..={ATTR_CAP}")));
        }
        for p in [self.wood_density, self.powerup_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Passage,
    Rigid,
    Wood,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PowerUp {
    Ammo,
    Blast,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bomb {
    pub pos: Pos,
    pub owner: usize,
    pub fuse: u32,
    pub blast: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentState {
    pub pos: Pos,
    pub alive: bool,
    pub ammo: u32,
    pub blast: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BomberState {
    pub size: usize,
    pub cells: Vec<Cell>,
    /// Power-ups still inside wood.
    pub hidden: Vec<Option<PowerUp>>,
    /// Power-ups lying on passages.
    pub powerups: Vec<Option<PowerUp>>,
    pub flames: Vec<u32>,
    pub bombs: Vec<Bomb>,
    pub agents: Vec<AgentState>,
    pub tick: u32,
}

pub fn corners(size: usize) -> [Pos; 4] {
    let m = size as i32 - 1;
    [(0, 0), (0, m), (m, m), (m, 0)]
}

impl BomberState {
    pub fn idx(&self, p: Pos) -> usize {
        p.0 as usize * self.size + p.1 as usize
    }

    pub fn on_board(&self, p: Pos) -> bool {
        p.0 >= 0 && p.1 >= 0 && (p.0 as usize) < self.size && (p.1 as usize) < self.size
    }

    pub fn cell(&self, p: Pos) -> Cell {
        self.cells[self.idx(p)]
    }

    pub fn bomb_at(&self, p: Pos) -> Option<usize> {
        self.bombs.iter().position(|b| b.pos == p)
    }

    pub fn live_bombs(&self, owner: usize) -> usize {
        self.bombs.iter().filter(|b| b.owner == owner).count()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.size as u32).to_le_bytes());
        out.extend_from_slice(&self.tick.to_le_bytes());
        let pu = |p: &Option<PowerUp>| match p {
            None => 0u8,
            Some(PowerUp::Ammo) => 1,
            Some(PowerUp::Blast) => 2,
        };
        for i in 0..self.cells.len() {
            out.push(self.cells[i] as u8);
            out.push(pu(&self.hidden[i]));
            out.push(pu(&self.powerups[i]));
            out.extend_from_slice(&self.flames[i].to_le_bytes());
        }
        out.extend_from_slice(&(self.bombs.len() as u32).to_le_bytes());
        for b in &self.bombs {
            for x in [b.pos.0 as u32, b.pos.1 as u32, b.owner as u32, b.fuse, b.blast] {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        for a in &self.agents {
            for x in [a.pos.0 as u32, a.pos.1 as u32, a.alive as u32, a.ammo, a.blast] {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Ammo an agent would hold with all its bombs back.
    pub fn capacity(&self, slot: usize) -> u32 {
        self.agents[slot].ammo + self.live_bombs(slot) as u32
    }
}

pub fn generate(cfg: &BomberConfig, rng: &mut RngStream) -> BomberState {
    let n = cfg.size;
    let mut st = BomberState {
        size: n,
        cells: vec![Cell::Passage; n * n],
        hidden: vec![None; n * n],
        powerups: vec![None; n * n],
        flames: vec![0; n * n],
        bombs: Vec::new(),
        agents: corners(n)
            .iter()
            .map(|&pos| AgentState { pos, alive: true, ammo: cfg.ammo, blast: cfg.blast })
            .collect(),
        tick: 0,
    };
    for r in 0..n {
        for c in 0..n {
            if r % 2 == 1 && c % 2 == 1 {
                st.cells[r * n + c] = Cell::Rigid;
            }
        }
    }
    let m = n as i32 - 1;
    let pocket = |p: Pos| {
        corners(n)
            .iter()
            .any(|&(cr, cc)| (p.0 - cr).abs() + (p.1 - cc).abs() <= 1)
    };
    let mut seen = vec![false; n * n];
    for r in 0..n as i32 {
        for c in 0..n as i32 {
            if seen[st.idx((r, c))] {
                continue;
            }
            let mut orbit = vec![(r, c)];
            for _ in 0..3 {
                let (pr, pc) = *orbit.last().expect("non-empty");
                let next = (m - pc, pr);
                if !orbit.contains(&next) {
                    orbit.push(next);
                }
            }
            for &p in &orbit {
                let i = st.idx(p);
                seen[i] = true;
            }
            if st.cell((r, c)) != Cell::Passage || orbit.iter().any(|&p| pocket(p)) {
                continue;
            }
            // one draw pair per orbit keeps the board 4-fold symmetric
            if !rng.gen_bool(cfg.wood_density) {
                continue;
            }
            let powerup = if rng.gen_bool(cfg.powerup_prob) {
                Some(if rng.gen_bool(0.5) { PowerUp::Ammo } else { PowerUp::Blast })
            } else {
                None
            };
            for &p in &orbit {
                let i = st.idx(p);
                st.cells[i] = Cell::Wood;
                st.hidden[i] = powerup;
            }
        }
    }
    st
}

/// What the last tick did, for tests and invariants.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TickReport {
    /// Bombs that went off, in detonation order.
    pub exploded: Vec<Bomb>,
    /// Slots that died.
    pub deaths: Vec<usize>,
    /// Slots that picked up a power-up.
    pub pickups: Vec<(usize, PowerUp)>,
}

pub struct BomberEnv {
    cfg: BomberConfig,
    state: BomberState,
    phase: Phase,
    obs_specs: Vec<SpaceSpec>,
    act_specs: Vec<SpaceSpec>,
    last: TickReport,
}

pub fn obs_spec(cfg: &BomberConfig) -> SpaceSpec {
    let n = cfg.size;
    let cap = ATTR_CAP as f64;
    let agent = SpaceSpec::mapping([
        ("alive", SpaceSpec::Discrete(2)),
        ("ammo", SpaceSpec::vector(1, 0.0, cap)),
        ("blast", SpaceSpec::vector(1, 0.0, cap)),
        ("pos", SpaceSpec::vector(2, 0.0, (n - 1) as f64)),
    ]);
    let limit = cfg.step_limit as f64;
    SpaceSpec::mapping([
        ("agents", SpaceSpec::Seq(vec![agent; 4])),
        ("board", SpaceSpec::grid([n, n, 3], 0.0, 1.0)),
        ("bombs", SpaceSpec::grid([n, n, 2], 0.0, cfg.bomb_life.max(ATTR_CAP) as f64)),
        ("flames", SpaceSpec::grid([n, n, 1], 0.0, cfg.flame_life as f64)),
        ("id", SpaceSpec::Discrete(4)),
        ("mode", SpaceSpec::Discrete(2)),
        ("powerups", SpaceSpec::grid([n, n, 2], 0.0, 1.0)),
        ("step_limit", SpaceSpec::vector(1, limit, limit)),
        ("tick", SpaceSpec::vector(1, 0.0, limit)),
    ])
}

/// Raw observation shared by every slot except for `id`.
fn observe_state(st: &BomberState, cfg: &BomberConfig) -> Value {
    let n = st.size;
    let mut board = Grid::zeros([n, n, 3]);
    let mut powerups = Grid::zeros([n, n, 2]);
    let mut bombs = Grid::zeros([n, n, 2]);
    let mut flames = Grid::zeros([n, n, 1]);
    for r in 0..n {
        for c in 0..n {
            let i = r * n + c;
            board.set(r, c, st.cells[i] as usize, 1.0);
            match st.powerups[i] {
                Some(PowerUp::Ammo) => powerups.set(r, c, 0, 1.0),
                Some(PowerUp::Blast) => powerups.set(r, c, 1, 1.0),
                None => {}
            }
            flames.set(r, c, 0, st.flames[i] as f64);
        }
    }
    for b in &st.bombs {
        bombs.set(b.pos.0 as usize, b.pos.1 as usize, 0, b.fuse as f64);
        bombs.set(b.pos.0 as usize, b.pos.1 as usize, 1, b.blast as f64);
    }
    let agents = st
        .agents
        .iter()
        .map(|a| {
            Value::mapping([
                ("alive", Value::Discrete(a.alive as u64)),
                ("ammo", Value::scalar(a.ammo as f64)),
                ("blast", Value::scalar(a.blast as f64)),
                ("pos", Value::Vector(vec![a.pos.0 as f64, a.pos.1 as f64])),
            ])
        })
        .collect();
    Value::mapping([
        ("agents", Value::Seq(agents)),
        ("board", Value::Grid(board)),
        ("bombs", Value::Grid(bombs)),
        ("flames", Value::Grid(flames)),
        ("id", Value::Discrete(0)),
        ("mode", Value::Discrete(cfg.mode.index())),
        ("powerups", Value::Grid(powerups)),
        ("step_limit", Value::scalar(cfg.step_limit as f64)),
        ("tick", Value::scalar(st.tick as f64)),
    ])
}

impl BomberEnv {
    pub fn new(cfg: BomberConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = obs_spec(&cfg);
        let mut rng = RngStream::new(0);
        Ok(Self {
            state: generate(&cfg, &mut rng),
            phase: Phase::Fresh,
            obs_specs: vec![spec; 4],
            act_specs: vec![SpaceSpec::Discrete(NUM_ACTIONS as u64); 4],
            last: TickReport::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &BomberConfig {
        &self.cfg
    }

    pub fn state(&self) -> &BomberState {
        &self.state
    }

    pub fn last_tick(&self) -> &TickReport {
        &self.last
    }

    /// Continue from an explicit state (scripted scenarios and oracles).
    pub fn reset_to(&mut self, state: BomberState) -> Result<Bundle> {
        if state.size != self.cfg.size || state.agents.len() != 4 {
            return Err(Error::Config("state does not fit this board".into()));
        }
        self.state = state;
        self.phase = Phase::Running;
        self.last = TickReport::default();
        Ok(self.observe())
    }

    fn observe(&self) -> Bundle {
        let base = observe_state(&self.state, &self.cfg);
        let Value::Mapping(m) = base else { unreachable!("observation is a mapping") };
        Bundle::new(
            (0..4u64)
                .map(|k| {
                    let mut m = m.clone();
                    m.insert("id".into(), Value::Discrete(k));
                    Value::Mapping(m)
                })
                .collect(),
        )
        .expect("four slots")
    }

    fn explode(&mut self, report: &mut TickReport) {
        let st = &mut self.state;
        for b in st.bombs.iter_mut() {
            b.fuse = b.fuse.saturating_sub(1);
        }
        let mut queue: Vec<usize> = (0..st.bombs.len()).filter(|&i| st.bombs[i].fuse == 0).collect();
        let mut gone = vec![false; st.bombs.len()];
        for &i in &queue {
            gone[i] = true;
        }
        let mut fire = Vec::new();
        let mut wood = Vec::new();
        let mut head = 0;
        while head < queue.len() {
            let b = st.bombs[queue[head]].clone();
            head += 1;
            fire.push(b.pos);
            for dir in [UP, DOWN, LEFT, RIGHT] {
                let (dr, dc) = delta(dir).expect("direction");
                for d in 1..=b.blast as i32 {
                    let p = (b.pos.0 + dr * d, b.pos.1 + dc * d);
                    if !st.on_board(p) {
                        break;
                    }
                    match st.cell(p) {
                        Cell::Rigid => break,
                        Cell::Wood => {
                            fire.push(p);
                            wood.push(p);
                            break;
                        }
                        Cell::Passage => {
                            fire.push(p);
                            if let Some(j) = st.bomb_at(p) {
                                if !gone[j] {
                                    gone[j] = true;
                                    queue.push(j);
                                }
                            }
                        }
                    }
                }
            }
        }
        for &p in &fire {
            let i = st.idx(p);
            st.powerups[i] = None;
            st.flames[i] = self.cfg.flame_life;
        }
        for &p in &wood {
            let i = st.idx(p);
            st.cells[i] = Cell::Passage;
            st.powerups[i] = st.hidden[i].take();
        }
        for &i in &queue {
            let b = &st.bombs[i];
            st.agents[b.owner].ammo += 1;
            report.exploded.push(b.clone());
        }
        let mut k = 0;
        st.bombs.retain(|_| {
            k += 1;
            !gone[k - 1]
        });
    }

    fn move_agents(&mut self, acts: &[u64]) {
        let st = &mut self.state;
        let n = st.agents.len();
        let mut want: Vec<Pos> = st.agents.iter().map(|a| a.pos).collect();
        for i in 0..n {
            let a = &st.agents[i];
            if !a.alive {
                continue;
            }
            if let Some((dr, dc)) = delta(acts[i]) {
                let t = (a.pos.0 + dr, a.pos.1 + dc);
                if st.on_board(t) && st.cell(t) == Cell::Passage && st.bomb_at(t).is_none() {
                    want[i] = t;
                }
            }
        }
        // revert conflicting moves until nothing changes
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if i == j || !st.agents[i].alive || !st.agents[j].alive {
                        continue;
                    }
                    let pi = st.agents[i].pos;
                    let pj = st.agents[j].pos;
                    let clash = want[i] == want[j];
                    let swap = want[i] == pj && want[j] == pi && pi != pj;
                    if clash || swap {
                        for (k, p) in [(i, pi), (j, pj)] {
                            if want[k] != p {
                                want[k] = p;
                                changed = true;
                            }
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for (a, p) in st.agents.iter_mut().zip(want) {
            a.pos = p;
        }
    }
}

impl Env for BomberEnv {
    fn obs_specs(&self) -> &[SpaceSpec] {
        &self.obs_specs
    }

    fn act_specs(&self) -> &[SpaceSpec] {
        &self.act_specs
    }

    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        let mut rng = RngStream::new(seed).split("bomber");
        self.state = generate(&self.cfg, &mut rng);
        self.phase = Phase::Running;
        self.last = TickReport::default();
        Ok(self.observe())
    }

    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        self.phase.check_step()?;
        actions.check(&self.act_specs)?;
        let acts: Vec<u64> = actions.iter().map(|a| a.as_discrete().expect("checked")).collect();
        let mut report = TickReport::default();

        for f in self.state.flames.iter_mut() {
            *f = f.saturating_sub(1);
        }
        self.explode(&mut report);

        for (k, a) in self.state.agents.iter_mut().enumerate() {
            let i = a.pos.0 as usize * self.state.size + a.pos.1 as usize;
            if a.alive && self.state.flames[i] > 0 {
                a.alive = false;
                report.deaths.push(k);
            }
        }

        self.move_agents(&acts);

        let bomb_life = self.cfg.bomb_life;
        for k in 0..4 {
            let a = &self.state.agents[k];
            if a.alive && acts[k] == BOMB && a.ammo > 0 && self.state.bomb_at(a.pos).is_none() {
                let bomb = Bomb { pos: a.pos, owner: k, fuse: bomb_life, blast: a.blast };
                self.state.agents[k].ammo -= 1;
                self.state.bombs.push(bomb);
            }
        }

        for k in 0..4 {
            let pos = self.state.agents[k].pos;
            let i = self.state.idx(pos);
            if !self.state.agents[k].alive {
                continue;
            }
            if let Some(p) = self.state.powerups[i].take() {
                let capacity = self.state.capacity(k);
                let a = &mut self.state.agents[k];
                match p {
                    PowerUp::Ammo if capacity < ATTR_CAP => a.ammo += 1,
                    PowerUp::Blast if a.blast < ATTR_CAP => a.blast += 1,
                    _ => {}
                }
                report.pickups.push((k, p));
            }
        }

        self.state.tick += 1;
        let alive: Vec<bool> = self.state.agents.iter().map(|a| a.alive).collect();
        let mode = self.cfg.mode;
        let teams = mode.teams();
        let standing: Vec<usize> = (0..teams.len()).filter(|&t| teams[t].iter().any(|&s| alive[s])).collect();
        let outcome = match standing.as_slice() {
            [] => Some(Winner::Draw),
            [t] => Some(Winner::Team(*t)),
            _ if self.state.tick >= self.cfg.step_limit => Some(Winner::Draw),
            _ => None,
        };
        let mut rewards = vec![0.0; 4];
        let mut info = Info::new();
        if let Some(w) = outcome {
            self.phase = Phase::Done;
            for (k, r) in rewards.iter_mut().enumerate() {
                *r = match (w, mode) {
                    (Winner::Team(t), _) if mode.team_of(k) == t => 1.0,
                    (Winner::Team(_), _) => -1.0,
                    (Winner::Draw, Mode::Ffa) if !alive[k] => -1.0,
                    (Winner::Draw, _) => 0.0,
                };
            }
            info.insert(WINNER_KEY.into(), w.to_value());
        }
        self.last = report;
        Ok(StepResult {
            obs: self.observe(),
            rewards,
            done: outcome.is_some(),
            alive,
            info,
        })
    }

    fn teams(&self) -> Vec<Vec<usize>> {
        self.cfg.mode.teams()
    }

    fn state_bytes(&self) -> Vec<u8> {
        self.state.to_bytes()
    }

    fn render(&self) -> String {
        let st = &self.state;
        let n = st.size;
        let mut out = format!("tick {}\n", st.tick);
        for r in 0..n as i32 {
            for c in 0..n as i32 {
                let p = (r, c);
                let i = st.idx(p);
                let agent = st.agents.iter().position(|a| a.alive && a.pos == p);
                let ch = if let Some(k) = agent {
                    char::from(b'0' + k as u8)
                } else if st.flames[i] > 0 {
                    '*'
                } else if st.bomb_at(p).is_some() {
                    'o'
                } else {
                    match (st.cells[i], st.powerups[i]) {
                        (Cell::Rigid, _) => '#',
                        (Cell::Wood, _) => '+',
                        (Cell::Passage, Some(PowerUp::Ammo)) => 'a',
                        (Cell::Passage, Some(PowerUp::Blast)) => 'b',
                        (Cell::Passage, None) => '.',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}
