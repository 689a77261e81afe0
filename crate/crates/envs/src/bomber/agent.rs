//! Rule-based bomber baseline.

use marlkit_core::{Agent, Error, Result, SpaceSpec, Value};

use super::view::{legal_actions, BoardView};
use super::{delta, Cell, Pos, BOMB, DOWN, IDLE, LEFT, NUM_ACTIONS, RIGHT, UP};

/// In priority order: flee a threatened cell, bomb next to wood or an enemy
/// when an escape exists, walk toward the nearest enemy (or, with none
/// reachable, the nearest cell next to wood), otherwise idle. Works in
/// whatever frame its observations come in.
#[derive(Debug, Clone)]
pub struct SimpleAgent {
    pub bomb_life: u32,
}

impl Default for SimpleAgent {
    fn default() -> Self {
        Self { bomb_life: 10 }
    }
}

fn neighbours(p: Pos) -> impl Iterator<Item = Pos> {
    [UP, DOWN, LEFT, RIGHT].into_iter().map(move |a| {
        let (dr, dc) = delta(a).expect("direction");
        (p.0 + dr, p.1 + dc)
    })
}

impl SimpleAgent {
    pub fn decide(&self, v: &BoardView) -> u64 {
        let me = v.me().clone();
        if !me.alive {
            return IDLE;
        }
        let burning = |p: Pos| v.flames[v.idx(p)] > 0;
        let danger = v.danger();

        if danger.threatened(me.pos) || burning(me.pos) {
            return v
                .path_to(me.pos, burning, |p| !danger.threatened(p) && !burning(p))
                .map_or(IDLE, |(a, _)| a);
        }

        let enemies: Vec<Pos> = (0..v.agents.len())
            .filter(|&k| v.is_enemy(k) && v.agents[k].alive)
            .map(|k| v.agents[k].pos)
            .collect();
        let near_wood = |p: Pos| neighbours(p).any(|q| v.on_board(q) && v.cells[v.idx(q)] == Cell::Wood);
        let near_enemy = |p: Pos| neighbours(p).any(|q| enemies.contains(&q));

        if (near_wood(me.pos) || near_enemy(me.pos)) && legal_actions(v, v.id)[BOMB as usize] {
            let after = v.danger_with(me.pos, self.bomb_life, me.blast);
            let escape = v.path_to(me.pos, |p| burning(p) || danger.threatened(p), |p| !after.threatened(p));
            if escape.is_some_and(|(_, d)| d < self.bomb_life as usize) {
                return BOMB;
            }
        }

        let unsafe_cell = |p: Pos| burning(p) || danger.threatened(p);
        if let Some((a, _)) = v.path_to(me.pos, unsafe_cell, |p| enemies.contains(&p) || near_enemy(p)) {
            return a;
        }
        v.path_to(me.pos, unsafe_cell, near_wood).map_or(IDLE, |(a, _)| a)
    }
}

impl Agent for SimpleAgent {
    fn setup(&mut self, obs: &SpaceSpec, act: &SpaceSpec) -> Result<()> {
        let ok = matches!(obs, SpaceSpec::Mapping(m) if ["board", "bombs", "flames", "agents", "id"].iter().all(|k| m.contains_key(*k)));
        if !ok {
            return Err(Error::Setup("bomber.simple needs bomber observations".into()));
        }
        if *act != SpaceSpec::Discrete(NUM_ACTIONS as u64) {
            return Err(Error::Setup("bomber.simple needs the 6-action space".into()));
        }
        Ok(())
    }

    fn reset(&mut self, _first: &Value) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, obs: &Value, _reward: f64, _done: bool) -> Result<Value> {
        let v = BoardView::from_obs(obs).ok_or_else(|| Error::mismatch("not a bomber observation"))?;
        Ok(Value::Discrete(self.decide(&v)))
    }
}

#[cfg(test)]
mod tests {
    use super::super::{generate, BomberConfig, Bomb, Mode};
    use super::*;
    use marlkit_core::RngStream;

    fn open_view() -> (super::super::BomberState, BomberConfig) {
        let cfg = BomberConfig { wood_density: 0.0, ..Default::default() };
        (generate(&cfg, &mut RngStream::new(0)), cfg)
    }

    #[test]
    fn flees_a_bomb() {
        let (mut st, cfg) = open_view();
        st.agents[0].pos = (0, 2);
        st.bombs.push(Bomb { pos: (0, 2), owner: 0, fuse: 5, blast: 2 });
        let v = BoardView::from_state(&st, 0, Mode::Ffa, cfg.step_limit);
        // all three exits are three steps from safety; down is expanded first
        assert_eq!(SimpleAgent::default().decide(&v), DOWN);
    }

    #[test]
    fn bombs_an_adjacent_enemy() {
        let (mut st, cfg) = open_view();
        st.agents[0].pos = (0, 2);
        st.agents[1].pos = (0, 3);
        let v = BoardView::from_state(&st, 0, Mode::Ffa, cfg.step_limit);
        assert_eq!(SimpleAgent::default().decide(&v), BOMB);
    }

    #[test]
    fn heads_for_enemies() {
        let (st, cfg) = open_view();
        let v = BoardView::from_state(&st, 0, Mode::Ffa, cfg.step_limit);
        let a = SimpleAgent::default().decide(&v);
        assert!(a == DOWN || a == RIGHT);
    }

    #[test]
    fn ignores_teammates() {
        let (mut st, cfg) = open_view();
        st.agents[0].pos = (0, 2);
        st.agents[2].pos = (0, 3);
        let v = BoardView::from_state(&st, 0, Mode::TwoVsTwo, cfg.step_limit);
        assert_ne!(SimpleAgent::default().decide(&v), BOMB);
    }
}
