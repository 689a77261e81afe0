//! Hit-and-run baseline.

use marlkit_core::{Agent, Error, Result, SpaceSpec, Value};

use super::{chebyshev, dist2, layout_of, nearest_enemy, units_from_obs, Unit, ATTACK, MOVES, NUM_ACTIONS};

/// Attacks when its weapon is ready and the nearest enemy is in range,
/// retreats while on cooldown and closes in otherwise.
#[derive(Debug, Clone, Default)]
pub struct HitAndRun {
    size: i32,
}

fn distance_to_enemies(units: &[Unit], me: usize, cell: (i32, i32)) -> i32 {
    let team = units[me].team;
    units
        .iter()
        .filter(|e| e.alive && e.team != team)
        .map(|e| dist2(cell, e.pos))
        .min()
        .unwrap_or(0)
}

impl HitAndRun {
    pub fn new(size: usize) -> Self {
        Self { size: size as i32 }
    }

    pub fn decide(&self, units: &[Unit], me: usize) -> u64 {
        let u = &units[me];
        let Some(target) = nearest_enemy(units, me).filter(|_| u.alive) else {
            return ATTACK;
        };
        if u.cd == 0 && chebyshev(u.pos, units[target].pos) <= u.stats().range {
            return ATTACK;
        }
        let free = |c: (i32, i32)| {
            c.0 >= 0 && c.1 >= 0 && c.0 < self.size && c.1 < self.size && !units.iter().any(|o| o.alive && o.pos == c)
        };
        let options = MOVES.iter().enumerate().filter_map(|(a, (dr, dc))| {
            let c = (u.pos.0 + dr, u.pos.1 + dc);
            free(c).then(|| (a as u64, distance_to_enemies(units, me, c)))
        });
        // min_by_key / max_by_key keep the first / last extremum; fold by
        // hand so ties always resolve to the smallest action index
        let best = options.fold(None, |best: Option<(u64, i32)>, (a, d)| match best {
            Some((_, bd)) if (u.cd > 0 && d <= bd) || (u.cd == 0 && d >= bd) => best,
            _ => Some((a, d)),
        });
        // nowhere to go: attacking on cooldown is a no-op
        best.map_or(ATTACK, |(a, _)| a)
    }
}

impl Agent for HitAndRun {
    fn setup(&mut self, obs: &SpaceSpec, act: &SpaceSpec) -> Result<()> {
        let (_, size) = layout_of(obs).ok_or_else(|| Error::Setup("battle.hit_and_run needs raw battle observations".into()))?;
        if *act != SpaceSpec::Discrete(NUM_ACTIONS) {
            return Err(Error::Setup("battle.hit_and_run needs the 9-action space".into()));
        }
        self.size = size as i32;
        Ok(())
    }

    fn reset(&mut self, _first: &Value) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, obs: &Value, _reward: f64, _done: bool) -> Result<Value> {
        let units = units_from_obs(obs).ok_or_else(|| Error::mismatch("not a raw battle observation"))?;
        let me = obs
            .get("own")
            .and_then(Value::as_discrete)
            .filter(|&i| (i as usize) < units.len())
            .ok_or_else(|| Error::mismatch("observation lacks a valid own index"))?;
        Ok(Value::Discrete(self.decide(&units, me as usize)))
    }
}
