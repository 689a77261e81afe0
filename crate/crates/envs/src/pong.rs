//! Two-player Pong.
//!
//! Slot 0 owns the left paddle, slot 1 the right one. Each player observes
//! the field egocentrically: itself on the left, x coordinates mirrored for
//! the right player. Physics is simulated in center-relative x so that a
//! left/right mirrored game is bitwise the mirror of the original.

use std::f64::consts::PI;

use rand::Rng;

use marlkit_core::{
    Agent, Bundle, Env, Error, Frame, Grid, Info, Interface, Phase, Result, RngStream, SpaceSpec,
    Specs, StepResult, Value, Winner, WINNER_KEY,
};

pub const STAY: u64 = 0;
pub const UP: u64 = 1;
pub const DOWN: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct PongConfig {
    pub field_w: f64,
    pub field_h: f64,
    pub paddle_len: f64,
    pub paddle_speed: f64,
    pub ball_speed0: f64,
    pub speedup: f64,
    pub max_speed: f64,
    pub max_deflect_deg: f64,
    pub win_score: u32,
    pub step_limit: u32,
}

impl Default for PongConfig {
    fn default() -> Self {
        Self {
            field_w: 80.0,
            field_h: 80.0,
            paddle_len: 12.0,
            paddle_speed: 2.0,
            ball_speed0: 1.2,
            speedup: 1.05,
            max_speed: 3.0,
            max_deflect_deg: 60.0,
            win_score: 5,
            step_limit: 3000,
        }
    }
}

impl PongConfig {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.field_w,
            self.field_h,
            self.paddle_len,
            self.paddle_speed,
            self.ball_speed0,
            self.speedup,
            self.max_speed,
            self.max_deflect_deg,
        ];
        if reals.iter().any(|x| !(x.is_finite() && *x > 0.0)) || self.win_score == 0 || self.step_limit == 0 {
            return Err(Error::Config(format!("pong parameters must be positive: {self:?}")));
        }
        if self.paddle_len >= self.field_h {
            return Err(Error::Config("paddle_len must be below field_h".into()));
        }
        if self.ball_speed0 > self.max_speed {
            return Err(Error::Config("ball_speed0 exceeds max_speed".into()));
        }
        if self.max_deflect_deg >= 90.0 {
            return Err(Error::Config("max_deflect_deg must be below 90".into()));
        }
        // one tick must not carry the ball across the whole field
        if self.max_speed >= self.field_w / 2.0 {
            return Err(Error::Config("max_speed is too large for the field".into()));
        }
        Ok(())
    }

    fn half_w(&self) -> f64 {
        self.field_w / 2.0
    }

    fn half_len(&self) -> f64 {
        self.paddle_len / 2.0
    }
}

/// Outgoing velocity after a paddle hit `offset` half-lengths from the
/// paddle center (positive is below the center).
pub fn bounce(cfg: &PongConfig, offset: f64, speed: f64, incoming_vx: f64) -> (f64, f64) {
    let angle = offset.clamp(-1.0, 1.0) * cfg.max_deflect_deg * PI / 180.0;
    let s = (speed * cfg.speedup).min(cfg.max_speed);
    let dir = if incoming_vx < 0.0 { 1.0 } else { -1.0 };
    (dir * s * angle.cos(), s * angle.sin())
}

/// Full simulation state. `u` is the ball's x relative to the field center.
#[derive(Debug, Clone, PartialEq)]
pub struct PongState {
    pub u: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub speed: f64,
    pub paddle_y: [f64; 2],
    pub scores: [u32; 2],
    pub tick: u32,
    pub next_serve: f64,
}

impl PongState {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(96);
        for x in [self.u, self.y, self.vx, self.vy, self.speed, self.paddle_y[0], self.paddle_y[1], self.next_serve] {
            out.extend_from_slice(&x.to_bits().to_le_bytes());
        }
        for x in [self.scores[0], self.scores[1], self.tick] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }
}

pub struct PongEnv {
    cfg: PongConfig,
    state: PongState,
    rng: RngStream,
    phase: Phase,
    obs_specs: Vec<SpaceSpec>,
    act_specs: Vec<SpaceSpec>,
}

pub const OBS_KEYS: [&str; 7] = [
    "ball_x",
    "ball_y",
    "ball_vx",
    "ball_vy",
    "own_paddle_y",
    "opp_paddle_y",
    "own_side",
];

fn obs_spec(cfg: &PongConfig) -> SpaceSpec {
    let h = cfg.half_len();
    SpaceSpec::mapping([
        ("ball_x", SpaceSpec::vector(1, 0.0, cfg.field_w)),
        ("ball_y", SpaceSpec::vector(1, 0.0, cfg.field_h)),
        ("ball_vx", SpaceSpec::vector(1, -cfg.max_speed, cfg.max_speed)),
        ("ball_vy", SpaceSpec::vector(1, -cfg.max_speed, cfg.max_speed)),
        ("own_paddle_y", SpaceSpec::vector(1, h, cfg.field_h - h)),
        ("opp_paddle_y", SpaceSpec::vector(1, h, cfg.field_h - h)),
        ("own_side", SpaceSpec::Discrete(2)),
    ])
}

fn fold(mut y: f64, mut vy: f64, h: f64) -> (f64, f64) {
    // speeds are far below the field height, so at most one reflection happens
    while !(0.0..=h).contains(&y) {
        if y < 0.0 {
            y = -y;
        } else {
            y = 2.0 * h - y;
        }
        vy = -vy;
    }
    (y, vy)
}

impl PongEnv {
    pub fn new(cfg: PongConfig) -> Result<Self> {
        cfg.validate()?;
        let spec = obs_spec(&cfg);
        let mid = cfg.field_h / 2.0;
        Ok(Self {
            state: PongState {
                u: 0.0,
                y: mid,
                vx: 0.0,
                vy: 0.0,
                speed: cfg.ball_speed0,
                paddle_y: [mid, mid],
                scores: [0, 0],
                tick: 0,
                next_serve: 1.0,
            },
            rng: RngStream::new(0),
            phase: Phase::Fresh,
            obs_specs: vec![spec.clone(), spec],
            act_specs: vec![SpaceSpec::Discrete(3); 2],
            cfg,
        })
    }

    pub fn config(&self) -> &PongConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PongState {
        &self.state
    }

    /// Start an episode whose serves all go the opposite way from `reset(seed)`.
    /// Together with swapping the players this mirrors the whole game.
    pub fn reset_mirrored(&mut self, seed: u64) -> Result<Bundle> {
        self.start(seed, true)
    }

    fn start(&mut self, seed: u64, mirrored: bool) -> Result<Bundle> {
        self.rng = RngStream::new(seed).split("pong");
        let mid = self.cfg.field_h / 2.0;
        let first = if self.rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        self.state = PongState {
            u: 0.0,
            y: mid,
            vx: 0.0,
            vy: 0.0,
            speed: self.cfg.ball_speed0,
            paddle_y: [mid, mid],
            scores: [0, 0],
            tick: 0,
            next_serve: if mirrored { -first } else { first },
        };
        self.serve();
        self.phase = Phase::Running;
        Ok(self.observe())
    }

    fn serve(&mut self) {
        let max = 30.0 * PI / 180.0;
        let angle = self.rng.gen_range(-max..=max);
        let s = &mut self.state;
        s.u = 0.0;
        s.y = self.cfg.field_h / 2.0;
        s.speed = self.cfg.ball_speed0;
        s.vx = s.next_serve * s.speed * angle.cos();
        s.vy = s.speed * angle.sin();
        s.next_serve = -s.next_serve;
    }

    fn observe(&self) -> Bundle {
        let s = &self.state;
        let x = self.cfg.half_w() + s.u;
        let side = |k: usize| {
            let (bx, bvx) = if k == 0 { (x, s.vx) } else { (self.cfg.field_w - x, -s.vx) };
            Value::mapping([
                ("ball_x", Value::scalar(bx)),
                ("ball_y", Value::scalar(s.y)),
                ("ball_vx", Value::scalar(bvx)),
                ("ball_vy", Value::scalar(s.vy)),
                ("own_paddle_y", Value::scalar(s.paddle_y[k])),
                ("opp_paddle_y", Value::scalar(s.paddle_y[1 - k])),
                ("own_side", Value::Discrete(k as u64)),
            ])
        };
        Bundle::new(vec![side(0), side(1)]).expect("two slots")
    }

    /// Advance the ball one tick; returns the side that conceded, if any.
    fn move_ball(&mut self) -> Option<usize> {
        let cfg = &self.cfg;
        let s = &mut self.state;
        let hw = cfg.half_w();
        let next = s.u + s.vx;
        let (wall, side) = if s.vx < 0.0 && next <= -hw {
            (-hw, 0)
        } else if s.vx > 0.0 && next >= hw {
            (hw, 1)
        } else {
            s.u = next;
            (s.y, s.vy) = fold(s.y + s.vy, s.vy, cfg.field_h);
            return None;
        };
        let t = (wall - s.u) / s.vx;
        let (y_hit, _) = fold(s.y + s.vy * t, s.vy, cfg.field_h);
        let offset = (y_hit - s.paddle_y[side]) / cfg.half_len();
        if offset.abs() > 1.0 {
            return Some(side);
        }
        let (vx, vy) = bounce(cfg, offset, s.speed, s.vx);
        s.speed = (s.speed * cfg.speedup).min(cfg.max_speed);
        s.vx = vx;
        let rest = 1.0 - t;
        s.u = wall + vx * rest;
        (s.y, s.vy) = fold(y_hit + vy * rest, vy, cfg.field_h);
        None
    }
}

impl Env for PongEnv {
    fn obs_specs(&self) -> &[SpaceSpec] {
        &self.obs_specs
    }

    fn act_specs(&self) -> &[SpaceSpec] {
        &self.act_specs
    }

    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        self.start(seed, false)
    }

    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        self.phase.check_step()?;
        actions.check(&self.act_specs)?;
        let h = self.cfg.half_len();
        for (k, a) in actions.iter().enumerate() {
            let dy = match a.as_discrete() {
                Some(UP) => -self.cfg.paddle_speed,
                Some(DOWN) => self.cfg.paddle_speed,
                _ => 0.0,
            };
            let p = &mut self.state.paddle_y[k];
            *p = (*p + dy).clamp(h, self.cfg.field_h - h);
        }
        let mut rewards = vec![0.0; 2];
        if let Some(loser) = self.move_ball() {
            let winner = 1 - loser;
            self.state.scores[winner] += 1;
            rewards[winner] = 1.0;
            rewards[loser] = -1.0;
            self.serve();
        }
        self.state.tick += 1;
        let s = &self.state;
        let done = s.scores.iter().any(|&x| x >= self.cfg.win_score) || s.tick >= self.cfg.step_limit;
        let mut info = Info::new();
        if done {
            self.phase = Phase::Done;
            let w = match s.scores[0].cmp(&s.scores[1]) {
                std::cmp::Ordering::Greater => Winner::Team(0),
                std::cmp::Ordering::Less => Winner::Team(1),
                std::cmp::Ordering::Equal => Winner::Draw,
            };
            info.insert(WINNER_KEY.into(), w.to_value());
        }
        Ok(StepResult {
            obs: self.observe(),
            rewards,
            done,
            alive: vec![true; 2],
            info,
        })
    }

    fn state_bytes(&self) -> Vec<u8> {
        self.state.to_bytes()
    }

    fn render(&self) -> String {
        let obs = self.observe();
        let mut raster = ScreenObs::new(32);
        let g = match raster.setup(&Specs::new(self.obs_specs.clone(), self.act_specs.clone()).expect("two slots")) {
            Ok(_) => raster.raster(obs.get(0).expect("slot 0")),
            Err(_) => return String::new(),
        };
        let mut out = format!(
            "tick {}  score {}:{}\n",
            self.state.tick, self.state.scores[0], self.state.scores[1]
        );
        out.push_str(&raster_text(&g));
        out
    }
}

/// One character per raster cell, `#` lit and `.` dark.
pub fn raster_text(g: &Grid) -> String {
    let [h, w, _] = g.shape();
    let mut out = String::with_capacity(h * (w + 1));
    for r in 0..h {
        for c in 0..w {
            out.push(if g.get(r, c, 0) > 0.0 { '#' } else { '.' });
        }
        out.push('\n');
    }
    out
}

/// Geometry the raster needs, recovered from the raw observation space.
#[derive(Debug, Clone, Copy)]
struct Field {
    w: f64,
    h: f64,
    paddle_len: f64,
}

fn field_of(spec: &SpaceSpec) -> Result<Field> {
    let bound = |key: &str| match spec {
        SpaceSpec::Mapping(m) => match m.get(key) {
            Some(SpaceSpec::Box { low, high, .. }) => Ok((*low, *high)),
            _ => Err(Error::Setup(format!("pong.screen_obs needs a {key:?} entry"))),
        },
        _ => Err(Error::Setup("pong.screen_obs needs raw pong observations".into())),
    };
    let (_, w) = bound("ball_x")?;
    let (_, h) = bound("ball_y")?;
    let (p, _) = bound("own_paddle_y")?;
    Ok(Field { w, h, paddle_len: 2.0 * p })
}

/// Renders each raw observation as a binary `[res, res, 1]` image: the ball
/// as a 2×2 block, the own paddle in column 0 and the opponent's in the last
/// column.
pub struct ScreenObs {
    res: usize,
    field: Option<Field>,
}

impl ScreenObs {
    pub fn new(res: usize) -> Self {
        Self { res, field: None }
    }

    pub fn raster(&self, obs: &Value) -> Grid {
        let f = self.field.expect("screen_obs used before setup");
        let res = self.res;
        let cw = f.w / res as f64;
        let ch = f.h / res as f64;
        let cell = |x: f64, size: f64| ((x / size).floor().max(0.0) as usize).min(res - 1);
        let mut g = Grid::zeros([res, res, 1]);
        let get = |k: &str| obs.scalar_at(k).unwrap_or(0.0);
        let r0 = cell(get("ball_y"), ch).min(res - 2);
        let c0 = cell(get("ball_x"), cw).min(res - 2);
        for r in r0..r0 + 2 {
            for c in c0..c0 + 2 {
                g.set(r, c, 0, 1.0);
            }
        }
        let strip = ((f.paddle_len / ch).round() as usize).clamp(1, res);
        for (key, col) in [("own_paddle_y", 0), ("opp_paddle_y", res - 1)] {
            let centre = cell(get(key), ch);
            let top = centre.saturating_sub(strip / 2).min(res - strip);
            for r in top..top + strip {
                g.set(r, col, 0, 1.0);
            }
        }
        g
    }
}

pub fn screen_obs(res: usize) -> Box<dyn Interface> {
    Box::new(ScreenObs::new(res))
}

impl Interface for ScreenObs {
    fn name(&self) -> String {
        format!("pong.screen_obs({})", self.res)
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        if self.res < 16 {
            return Err(Error::Setup(format!("screen resolution {} is below 16", self.res)));
        }
        let field = field_of(&inner.obs[0])?;
        for s in &inner.obs[1..] {
            field_of(s)?;
        }
        self.field = Some(field);
        Specs::new(
            vec![SpaceSpec::grid([self.res, self.res, 1], 0.0, 1.0); inner.len()],
            inner.act.clone(),
        )
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        Bundle::new(obs.iter().map(|o| Value::Grid(self.raster(o))).collect())
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        Ok(Frame {
            obs: self.reset(frame.obs)?,
            ..frame
        })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        Ok(actions)
    }
}

/// Moves its paddle toward the ball's height, holding still within `deadzone`.
#[derive(Debug, Clone)]
pub struct FollowBall {
    pub deadzone: f64,
}

impl Default for FollowBall {
    fn default() -> Self {
        Self { deadzone: 1.0 }
    }
}

impl FollowBall {
    pub fn decide(&self, obs: &Value) -> u64 {
        let (Some(ball), Some(paddle)) = (obs.scalar_at("ball_y"), obs.scalar_at("own_paddle_y")) else {
            return STAY;
        };
        if ball < paddle - self.deadzone {
            UP
        } else if ball > paddle + self.deadzone {
            DOWN
        } else {
            STAY
        }
    }
}

impl Agent for FollowBall {
    fn setup(&mut self, obs: &SpaceSpec, act: &SpaceSpec) -> Result<()> {
        field_of(obs).map_err(|_| Error::Setup("pong.follow_ball needs raw pong observations".into()))?;
        if *act != SpaceSpec::Discrete(3) {
            return Err(Error::Setup("pong.follow_ball needs the 3-action space".into()));
        }
        Ok(())
    }

    fn reset(&mut self, _first: &Value) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, obs: &Value, _reward: f64, _done: bool) -> Result<Value> {
        Ok(Value::Discrete(self.decide(obs)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env() -> PongEnv {
        PongEnv::new(PongConfig::default()).unwrap()
    }

    #[test]
    fn reset_serves_from_the_centre() {
        let mut e = env();
        let obs = e.reset(3).unwrap();
        for o in obs.iter() {
            assert_eq!(o.scalar_at("ball_x"), Some(40.0));
            assert_eq!(o.scalar_at("ball_y"), Some(40.0));
        }
    }

    #[test]
    fn bounce_examples() {
        let cfg = PongConfig::default();
        let (vx, vy) = bounce(&cfg, 0.0, 1.2, -1.0);
        assert!((vx - 1.26).abs() < 1e-12 && vy == 0.0);
        let (vx, vy) = bounce(&cfg, 1.0, 1.2, 1.0);
        assert!(vx < 0.0);
        assert!(((vy / vx).abs().atan().to_degrees() - 60.0).abs() < 1e-9);
        let (vx, vy) = bounce(&cfg, -0.5, 3.0, -1.0);
        assert!((vx.hypot(vy) - 3.0).abs() < 1e-12);
        assert!((vy.atan2(vx).to_degrees() + 30.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            PongConfig { paddle_len: 80.0, ..Default::default() },
            PongConfig { ball_speed0: 4.0, ..Default::default() },
            PongConfig { win_score: 0, ..Default::default() },
            PongConfig { speedup: f64::NAN, ..Default::default() },
        ] {
            assert!(matches!(PongEnv::new(cfg), Err(Error::Config(_))));
        }
    }

    #[test]
    fn follow_ball_deadzone() {
        let a = FollowBall::default();
        let obs = |ball: f64, paddle: f64| Value::mapping([("ball_y", Value::scalar(ball)), ("own_paddle_y", Value::scalar(paddle))]);
        assert_eq!(a.decide(&obs(40.0, 40.0)), STAY);
        assert_eq!(a.decide(&obs(35.0, 40.0)), UP);
        assert_eq!(a.decide(&obs(45.0, 40.0)), DOWN);
        assert_eq!(a.decide(&obs(40.5, 40.0)), STAY);
    }

    #[test]
    fn screen_rejects_small_resolutions() {
        let e = env();
        let specs = Specs::new(e.obs_specs().to_vec(), e.act_specs().to_vec()).unwrap();
        assert!(matches!(screen_obs(8).setup(&specs), Err(Error::Setup(_))));
        assert_eq!(screen_obs(16).setup(&specs).unwrap().obs[0], SpaceSpec::grid([16, 16, 1], 0.0, 1.0));
    }
}
