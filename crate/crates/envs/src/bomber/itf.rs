//! Bomber observation interfaces.

use marlkit_core::{
    interface::AppendFeature, BoxedInterface, Bundle, Error, Frame, Grid, Interface, Result, SpaceSpec, Specs, Value,
};

use super::view::{legal_actions, BoardView};
use super::{Cell, Pos, ATTR_CAP, DOWN, LEFT, NUM_ACTIONS, RIGHT, UP};

pub const BOARD_MAP_CHANNELS: [&str; 8] = ["rigid", "wood", "bomb", "flame", "powerup", "self", "teammates", "enemies"];

fn board_size(spec: &SpaceSpec, name: &str) -> Result<usize> {
    match spec {
        SpaceSpec::Mapping(m) => match m.get("board") {
            Some(SpaceSpec::Box { shape, .. }) if shape.len() == 3 && shape[0] == shape[1] && shape[2] == 3 => Ok(shape[0]),
            _ => Err(Error::Setup(format!("{name} needs a bomber board observation"))),
        },
        other => Err(Error::Setup(format!("{name} needs mapping observations, got {other:?}"))),
    }
}

fn view_of(obs: &Value) -> Result<BoardView> {
    BoardView::from_obs(obs).ok_or_else(|| Error::mismatch("not a bomber observation"))
}

/// Adds `board_map`: an `[n, n, 8]` 0/1 grid with channels rigid, wood,
/// bomb, flame, power-up, self, teammates and enemies.
pub fn board_map() -> BoxedInterface {
    Box::new(
        AppendFeature::new(
            "board_map",
            |s| {
                let n = board_size(s, "bomber.board_map")?;
                Ok(SpaceSpec::grid([n, n, 8], 0.0, 1.0))
            },
            |obs| {
                let v = view_of(obs)?;
                let n = v.size;
                let mut g = Grid::zeros([n, n, 8]);
                for r in 0..n {
                    for c in 0..n {
                        let i = r * n + c;
                        g.set(r, c, 0, (v.cells[i] == Cell::Rigid) as u8 as f64);
                        g.set(r, c, 1, (v.cells[i] == Cell::Wood) as u8 as f64);
                        g.set(r, c, 2, v.bombs[i].is_some() as u8 as f64);
                        g.set(r, c, 3, (v.flames[i] > 0) as u8 as f64);
                        g.set(r, c, 4, v.powerup[i] as u8 as f64);
                    }
                }
                for (k, a) in v.agents.iter().enumerate() {
                    if !a.alive {
                        continue;
                    }
                    let ch = if k == v.id {
                        5
                    } else if v.is_teammate(k) {
                        6
                    } else {
                        7
                    };
                    g.set(a.pos.0 as usize, a.pos.1 as usize, ch, 1.0);
                }
                Ok(Value::Grid(g))
            },
        )
        .named("bomber.board_map"),
    )
}

/// Adds `attr`: `[ammo / 10, blast / 10, alive, tick / step_limit]`.
pub fn attr() -> BoxedInterface {
    Box::new(
        AppendFeature::new(
            "attr",
            |s| {
                board_size(s, "bomber.attr")?;
                Ok(SpaceSpec::vector(4, 0.0, 1.0))
            },
            |obs| {
                let v = view_of(obs)?;
                let me = v.me();
                let cap = ATTR_CAP as f64;
                Ok(Value::Vector(vec![
                    me.ammo as f64 / cap,
                    me.blast as f64 / cap,
                    me.alive as u8 as f64,
                    if v.step_limit > 0.0 { v.tick / v.step_limit } else { 0.0 },
                ]))
            },
        )
        .named("bomber.attr"),
    )
}

/// Adds `action_mask`: 1 for each legal action of the observing agent.
pub fn act_mask() -> BoxedInterface {
    Box::new(
        AppendFeature::new(
            "action_mask",
            |s| {
                board_size(s, "bomber.act_mask")?;
                Ok(SpaceSpec::vector(NUM_ACTIONS, 0.0, 1.0))
            },
            |obs| {
                let v = view_of(obs)?;
                let legal = legal_actions(&v, v.id);
                Ok(Value::Vector(legal.iter().map(|&b| b as u8 as f64).collect()))
            },
        )
        .named("bomber.act_mask"),
    )
}

/// Position after `k` counter-clockwise quarter turns of an `n`-board.
pub fn rotate_pos(p: Pos, k: usize, n: usize) -> Pos {
    let m = n as i32 - 1;
    (0..k % 4).fold(p, |(r, c), _| (m - c, r))
}

/// World action seen in a view turned `k` quarter turns counter-clockwise.
pub fn view_action(world: u64, k: usize) -> u64 {
    (0..k % 4).fold(world, |a, _| match a {
        UP => LEFT,
        LEFT => DOWN,
        DOWN => RIGHT,
        RIGHT => UP,
        other => other,
    })
}

/// Inverse of [`view_action`]: the world action a view action means.
pub fn remap_action(view: u64, k: usize) -> u64 {
    view_action(view, (4 - k % 4) % 4)
}

/// Turns each slot's view by `id` quarter turns counter-clockwise so every
/// agent sees itself in the top-left corner, and maps actions back.
#[derive(Debug, Default)]
pub struct Rotate {
    size: usize,
    turns: Vec<Option<usize>>,
}

pub fn rotate() -> BoxedInterface {
    Box::new(Rotate::default())
}

impl Rotate {
    fn turn(&self, v: Value, k: usize) -> Value {
        match v {
            Value::Grid(g) => {
                let [h, w, _] = g.shape();
                if h != w {
                    return Value::Grid(g);
                }
                Value::Grid((0..k).fold(g, |g, _| g.rot90_ccw()))
            }
            other => other,
        }
    }

    fn rotate_obs(&mut self, obs: Bundle) -> Result<Bundle> {
        let slots = obs
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let Value::Mapping(mut m) = v else {
                    return Err(Error::mismatch_at(i, "bomber.rotate needs mapping observations"));
                };
                let k = m
                    .get("id")
                    .and_then(Value::as_discrete)
                    .ok_or_else(|| Error::mismatch_at(i, "bomber.rotate needs the id entry"))? as usize
                    % 4;
                self.turns[i] = Some(k);
                for (key, v) in m.iter_mut() {
                    match key.as_str() {
                        "agents" => {
                            if let Value::Seq(agents) = v {
                                for a in agents.iter_mut() {
                                    if let Value::Mapping(a) = a {
                                        if let Some(Value::Vector(p)) = a.get_mut("pos") {
                                            if p.len() == 2 {
                                                let (r, c) = rotate_pos((p[0] as i32, p[1] as i32), k, self.size);
                                                *p = vec![r as f64, c as f64];
                                            }
                                        }
                                    }
                                }
                            }
                        }
                        "action_mask" => {
                            if let Value::Vector(mask) = v {
                                if mask.len() == NUM_ACTIONS {
                                    *mask = (0..NUM_ACTIONS).map(|a| mask[remap_action(a as u64, k) as usize]).collect();
                                }
                            }
                        }
                        _ => {
                            let taken = std::mem::replace(v, Value::Discrete(0));
                            *v = self.turn(taken, k);
                        }
                    }
                }
                Ok(Value::Mapping(m))
            })
            .collect::<Result<Vec<_>>>()?;
        Bundle::new(slots)
    }
}

impl Interface for Rotate {
    fn name(&self) -> String {
        "bomber.rotate".into()
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let mut size = None;
        for s in &inner.obs {
            let n = board_size(s, "bomber.rotate")?;
            if size.is_some_and(|m| m != n) {
                return Err(Error::Setup("bomber.rotate: slots disagree on board size".into()));
            }
            size = Some(n);
        }
        if inner.act.iter().any(|a| *a != SpaceSpec::Discrete(NUM_ACTIONS as u64)) {
            return Err(Error::Setup("bomber.rotate needs the 6-action space".into()));
        }
        self.size = size.unwrap_or(0);
        self.turns = vec![None; inner.len()];
        Ok(inner.clone())
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.turns.iter_mut().for_each(|t| *t = None);
        self.rotate_obs(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        Ok(Frame {
            obs: self.rotate_obs(frame.obs)?,
            ..frame
        })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        let slots = actions
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                let k = self.turns.get(i).copied().flatten().ok_or(Error::NotReset)?;
                match a {
                    Value::Discrete(x) => Ok(Value::Discrete(remap_action(x, k))),
                    other => Err(Error::mismatch_at(i, format!("bomber.rotate expects discrete actions, got {}", other.kind()))),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Bundle::new(slots)
    }
}
