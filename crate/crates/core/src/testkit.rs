//! Small environments, agents and interfaces for exercising the plumbing.

use std::sync::{Arc, Mutex};

use crate::agent::Agent;
use crate::bundle::{Bundle, Frame, Info, StepResult, Winner, WINNER_KEY};
use crate::canon;
use crate::env::{Env, Phase};
use crate::error::{Error, Result};
use crate::interface::{Interface, Specs};
use crate::rng::RngStream;
use crate::space::SpaceSpec;
use crate::value::Value;

/// Single slot, always observes `Discrete(0)`, reward 0, done after one step.
#[derive(Debug, Clone)]
pub struct ConstEnv {
    obs: Vec<SpaceSpec>,
    act: Vec<SpaceSpec>,
    phase: Phase,
}

impl Default for ConstEnv {
    fn default() -> Self {
        Self {
            obs: vec![SpaceSpec::Discrete(1)],
            act: vec![SpaceSpec::Discrete(1)],
            phase: Phase::Fresh,
        }
    }
}

impl Env for ConstEnv {
    fn obs_specs(&self) -> &[SpaceSpec] {
        &self.obs
    }

    fn act_specs(&self) -> &[SpaceSpec] {
        &self.act
    }

    fn reset(&mut self, _seed: u64) -> Result<Bundle> {
        self.phase = Phase::Running;
        Ok(Bundle::single(Value::Discrete(0)))
    }

    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        self.phase.check_step()?;
        actions.check(&self.act)?;
        self.phase = Phase::Done;
        Ok(StepResult {
            obs: Bundle::single(Value::Discrete(0)),
            rewards: vec![0.0],
            done: true,
            alive: vec![true],
            info: Info::from([(WINNER_KEY.into(), Winner::Draw.to_value())]),
        })
    }

    fn state_bytes(&self) -> Vec<u8> {
        vec![self.phase as u8]
    }
}

/// `n` slots with discrete observations that depend on every past action.
///
/// Slot `k` observes `(counter + k) mod modulus` and receives its own action
/// index as reward; the counter advances by the sum of all actions plus one.
/// The episode ends after `length` steps and slot 0's team wins when the
/// final counter is even.
#[derive(Debug, Clone)]
pub struct TickEnv {
    modulus: u64,
    length: u32,
    counter: u64,
    tick: u32,
    obs: Vec<SpaceSpec>,
    act: Vec<SpaceSpec>,
    phase: Phase,
}

impl TickEnv {
    pub fn new(slots: usize, modulus: u64, length: u32) -> Self {
        Self {
            modulus,
            length,
            counter: 0,
            tick: 0,
            obs: vec![SpaceSpec::Discrete(modulus); slots],
            act: vec![SpaceSpec::Discrete(3); slots],
            phase: Phase::Fresh,
        }
    }

    fn observe(&self) -> Bundle {
        let n = self.obs.len() as u64;
        Bundle::new((0..n).map(|k| Value::Discrete((self.counter + k) % self.modulus)).collect())
            .expect("at least one slot")
    }
}

impl Env for TickEnv {
    fn obs_specs(&self) -> &[SpaceSpec] {
        &self.obs
    }

    fn act_specs(&self) -> &[SpaceSpec] {
        &self.act
    }

    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        self.counter = seed % self.modulus;
        self.tick = 0;
        self.phase = Phase::Running;
        Ok(self.observe())
    }

    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        self.phase.check_step()?;
        actions.check(&self.act)?;
        let acts: Vec<u64> = actions.iter().map(|a| a.as_discrete().unwrap_or(0)).collect();
        self.counter = (self.counter + acts.iter().sum::<u64>() + 1) % self.modulus;
        self.tick += 1;
        let done = self.tick >= self.length;
        let mut info = Info::new();
        if done {
            self.phase = Phase::Done;
            let winner = if self.counter % 2 == 0 { 0 } else { 1 % self.obs.len() };
            info.insert(WINNER_KEY.into(), Winner::Team(winner).to_value());
        }
        Ok(StepResult {
            obs: self.observe(),
            rewards: acts.iter().map(|&a| a as f64).collect(),
            done,
            alive: vec![true; self.obs.len()],
            info,
        })
    }

    fn state_bytes(&self) -> Vec<u8> {
        let mut out = self.counter.to_le_bytes().to_vec();
        out.extend_from_slice(&self.tick.to_le_bytes());
        out
    }
}

/// Shared call log for [`Spy`] interfaces.
pub type SpyLog = Arc<Mutex<Vec<String>>>;

/// Pass-through interface recording `obs:<label>`, `act:<label>` and
/// `reset:<label>` whenever it is invoked.
pub struct Spy {
    label: String,
    log: SpyLog,
}

impl Spy {
    pub fn new(label: &str, log: &SpyLog) -> Box<Self> {
        Box::new(Self {
            label: label.to_owned(),
            log: Arc::clone(log),
        })
    }

    fn record(&self, what: &str) {
        self.log
            .lock()
            .expect("spy log poisoned")
            .push(format!("{what}:{}", self.label));
    }
}

impl Interface for Spy {
    fn name(&self) -> String {
        format!("spy({})", self.label)
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        Ok(inner.clone())
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.record("reset");
        Ok(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        self.record("obs");
        Ok(frame)
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        self.record("act");
        Ok(actions)
    }
}

/// Deterministic agent whose action is a pseudo-random function of everything
/// it has observed this episode, so any difference in observations or rewards
/// shows up in its actions.
#[derive(Debug, Clone, Default)]
pub struct DigestAgent {
    act_spec: Option<SpaceSpec>,
    digest: u64,
}

impl DigestAgent {
    fn absorb(&mut self, obs: &Value, reward: f64) {
        let mut bytes = self.digest.to_le_bytes().to_vec();
        canon::write_bytes(obs, &mut bytes);
        bytes.extend_from_slice(&reward.to_bits().to_le_bytes());
        self.digest = canon::hash64(&[&bytes]);
    }
}

impl Agent for DigestAgent {
    fn setup(&mut self, _obs: &SpaceSpec, act_spec: &SpaceSpec) -> Result<()> {
        self.act_spec = Some(act_spec.clone());
        Ok(())
    }

    fn reset(&mut self, _first_obs: &Value) -> Result<()> {
        self.digest = 0;
        Ok(())
    }

    fn step(&mut self, obs: &Value, reward: f64, _done: bool) -> Result<Value> {
        self.absorb(obs, reward);
        let spec = self
            .act_spec
            .as_ref()
            .ok_or_else(|| Error::Setup("digest agent used before setup".into()))?;
        Ok(spec.sample(&mut RngStream::new(self.digest)))
    }
}
