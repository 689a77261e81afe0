//! Records what reaches the raw environment: actions, rewards and the
//! chained state hash after every step.

use std::sync::{Arc, Mutex};

use marlkit_core::{canon, Bundle, Env, Info, Result, SlotPartition, SpaceSpec, StepResult};

/// `hash64(prev ‖ actions ‖ state)`, all little-endian.
pub fn chain_hash(prev: u64, actions: &Bundle, state: &[u8]) -> u64 {
    canon::hash64(&[&prev.to_le_bytes(), &canon::bundle_bytes(actions), state])
}

pub fn initial_hash(state: &[u8]) -> u64 {
    canon::hash64(&[state])
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub actions: Bundle,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub hash: u64,
    pub info: Info,
}

#[derive(Debug, Default)]
pub struct TapLog {
    pub init_hash: u64,
    pub steps: Vec<StepRecord>,
}

pub type TapHandle = Arc<Mutex<TapLog>>;

pub struct Tap {
    env: Box<dyn Env>,
    log: TapHandle,
    last: u64,
}

impl Tap {
    pub fn new(env: Box<dyn Env>) -> (Self, TapHandle) {
        let log = TapHandle::default();
        (Self { env, log: Arc::clone(&log), last: 0 }, log)
    }
}

impl Env for Tap {
    fn obs_specs(&self) -> &[SpaceSpec] {
        self.env.obs_specs()
    }

    fn act_specs(&self) -> &[SpaceSpec] {
        self.env.act_specs()
    }

    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        let obs = self.env.reset(seed)?;
        self.last = initial_hash(&self.env.state_bytes());
        let mut log = self.log.lock().expect("tap log poisoned");
        log.init_hash = self.last;
        log.steps.clear();
        Ok(obs)
    }

    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        let r = self.env.step(actions.clone())?;
        self.last = chain_hash(self.last, &actions, &self.env.state_bytes());
        self.log.lock().expect("tap log poisoned").steps.push(StepRecord {
            actions,
            rewards: r.rewards.clone(),
            done: r.done,
            hash: self.last,
            info: r.info.clone(),
        });
        Ok(r)
    }

    fn teams(&self) -> Vec<Vec<usize>> {
        self.env.teams()
    }

    fn raw_slot_groups(&self) -> Option<SlotPartition> {
        self.env.raw_slot_groups()
    }

    fn state_bytes(&self) -> Vec<u8> {
        self.env.state_bytes()
    }

    fn render(&self) -> String {
        self.env.render()
    }
}
