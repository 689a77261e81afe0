//! The agent contract and two trivial agents.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::space::SpaceSpec;
use crate::value::Value;

/// Something that picks actions for one slot.
///
/// Call order: `setup` once, then per episode `reset` followed by `step`s.
/// The first `step` of an episode receives the same observation as `reset`.
pub trait Agent: Send {
    fn setup(&mut self, obs_spec: &SpaceSpec, act_spec: &SpaceSpec) -> Result<()>;
    fn reset(&mut self, first_obs: &Value) -> Result<()>;
    fn step(&mut self, obs: &Value, reward: f64, done: bool) -> Result<Value>;
}

/// Samples uniformly from its action space.
#[derive(Debug, Clone)]
pub struct RandomAgent {
    rng: RngStream,
    act_spec: Option<SpaceSpec>,
}

impl RandomAgent {
    pub fn new(rng: RngStream) -> Self {
        Self { rng, act_spec: None }
    }
}

impl Agent for RandomAgent {
    fn setup(&mut self, _obs: &SpaceSpec, act_spec: &SpaceSpec) -> Result<()> {
        act_spec.validate()?;
        self.act_spec = Some(act_spec.clone());
        Ok(())
    }

    fn reset(&mut self, _first_obs: &Value) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, _obs: &Value, _reward: f64, _done: bool) -> Result<Value> {
        let spec = self
            .act_spec
            .as_ref()
            .ok_or_else(|| Error::Setup("random agent used before setup".into()))?;
        Ok(spec.sample(&mut self.rng))
    }
}

/// Always emits the same action.
#[derive(Debug, Clone)]
pub struct ConstantAgent {
    action: Value,
}

impl ConstantAgent {
    pub fn new(action: Value) -> Self {
        Self { action }
    }
}

impl Agent for ConstantAgent {
    fn setup(&mut self, _obs: &SpaceSpec, act_spec: &SpaceSpec) -> Result<()> {
        if !act_spec.contains(&self.action) {
            return Err(Error::Setup(format!(
                "constant action {:?} is outside {act_spec:?}",
                self.action
            )));
        }
        Ok(())
    }

    fn reset(&mut self, _first_obs: &Value) -> Result<()> {
        Ok(())
    }

    fn step(&mut self, _obs: &Value, _reward: f64, _done: bool) -> Result<Value> {
        Ok(self.action.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(agent: &mut dyn Agent, n: usize) -> Vec<Value> {
        let obs = Value::Discrete(0);
        agent.reset(&obs).unwrap();
        (0..n).map(|_| agent.step(&obs, 0.0, false).unwrap()).collect()
    }

    #[test]
    fn random_agent_stays_in_space() {
        let mut a = RandomAgent::new(RngStream::new(7));
        a.setup(&SpaceSpec::Discrete(1), &SpaceSpec::Discrete(3)).unwrap();
        for v in run(&mut a, 100) {
            assert!(matches!(v, Value::Discrete(i) if i < 3));
        }
    }

    #[test]
    fn random_agent_is_reproducible() {
        let mk = || {
            let mut a = RandomAgent::new(RngStream::new(7));
            a.setup(&SpaceSpec::Discrete(1), &SpaceSpec::Discrete(3)).unwrap();
            a
        };
        assert_eq!(run(&mut mk(), 50), run(&mut mk(), 50));
    }

    #[test]
    fn constant_agent_repeats_itself() {
        let mut a = ConstantAgent::new(Value::Discrete(1));
        a.setup(&SpaceSpec::Discrete(1), &SpaceSpec::Discrete(3)).unwrap();
        assert!(run(&mut a, 5).iter().all(|v| *v == Value::Discrete(1)));
        assert!(a.setup(&SpaceSpec::Discrete(1), &SpaceSpec::Discrete(1)).is_err());
    }

    #[test]
    fn random_agent_requires_setup() {
        let mut a = RandomAgent::new(RngStream::new(0));
        assert!(a.step(&Value::Discrete(0), 0.0, false).is_err());
    }
}
