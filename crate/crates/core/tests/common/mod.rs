#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use marlkit_core::{
    Bundle, Env, Frame, Interface, Result, SpaceSpec, Specs, StepResult, Value, WrappedAgent,
};

/// Recipe for a small, possibly stateful, slot-local test interface over
/// vector observations and vector actions. Recipes let a test build twin
/// instances of the same interface.
#[derive(Debug, Clone)]
pub enum Recipe {
    Identity,
    Affine { scale: f64, shift: f64, act_scale: f64, reward_shift: f64 },
    Append(f64),
    Reverse,
    Running,
}

pub fn build(r: &Recipe) -> Box<dyn Interface> {
    match r {
        Recipe::Identity => marlkit_core::identity(),
        other => Box::new(TestItf { recipe: other.clone(), prev: Vec::new() }),
    }
}

struct TestItf {
    recipe: Recipe,
    prev: Vec<Vec<f64>>,
}

fn unbounded(len: usize) -> SpaceSpec {
    SpaceSpec::vector(len, f64::NEG_INFINITY, f64::INFINITY)
}

fn vec_len(s: &SpaceSpec) -> usize {
    match s {
        SpaceSpec::Box { shape, .. } => shape[0],
        _ => panic!("vector spaces only"),
    }
}

impl TestItf {
    fn map_obs(&mut self, obs: Bundle) -> Bundle {
        let mut out = Vec::new();
        for (i, v) in obs.into_iter().enumerate() {
            let xs = v.as_vector().expect("vector obs").to_vec();
            let ys = match &self.recipe {
                Recipe::Affine { scale, shift, .. } => xs.iter().map(|x| x * scale + shift).collect(),
                Recipe::Append(c) => {
                    let mut ys = xs.clone();
                    ys.push(*c);
                    ys
                }
                Recipe::Reverse => xs.iter().rev().copied().collect(),
                Recipe::Running => {
                    let prev = self.prev.get(i).cloned().unwrap_or_else(|| vec![0.0; xs.len()]);
                    let ys: Vec<f64> = xs.iter().zip(&prev).map(|(a, b)| a + b).collect();
                    if self.prev.len() <= i {
                        self.prev.resize(i + 1, Vec::new());
                    }
                    self.prev[i] = xs.clone();
                    ys
                }
                Recipe::Identity => xs,
            };
            out.push(Value::Vector(ys));
        }
        Bundle::new(out).unwrap()
    }
}

impl Interface for TestItf {
    fn name(&self) -> String {
        format!("{:?}", self.recipe)
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let obs = inner
            .obs
            .iter()
            .map(|s| match self.recipe {
                Recipe::Append(_) => unbounded(vec_len(s) + 1),
                _ => unbounded(vec_len(s)),
            })
            .collect();
        let act = inner.act.iter().map(|s| unbounded(vec_len(s))).collect();
        Specs::new(obs, act)
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.prev.clear();
        Ok(self.map_obs(obs))
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        let rewards = match self.recipe {
            Recipe::Affine { reward_shift, .. } => frame.rewards.iter().map(|r| r + reward_shift).collect(),
            _ => frame.rewards.clone(),
        };
        Ok(Frame { obs: self.map_obs(frame.obs), rewards, alive: frame.alive })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        let out = actions
            .into_iter()
            .map(|a| {
                let xs = a.as_vector().expect("vector act").to_vec();
                Value::Vector(match self.recipe {
                    Recipe::Affine { act_scale, .. } => xs.iter().map(|x| x * act_scale).collect(),
                    Recipe::Reverse => xs.iter().rev().copied().collect(),
                    _ => xs,
                })
            })
            .collect();
        Bundle::new(out)
    }
}

pub fn vector_specs(slots: usize, obs_len: usize, act_len: usize) -> Specs {
    Specs::new(vec![unbounded(obs_len); slots], vec![unbounded(act_len); slots]).unwrap()
}

/// Raw-level record of one tick.
pub type Tick = (Bundle, StepResult);

/// Innermost env adapter that logs raw actions and results.
pub struct Recorder<E> {
    pub env: E,
    pub log: Arc<Mutex<Vec<Tick>>>,
}

impl<E: Env> Env for Recorder<E> {
    fn obs_specs(&self) -> &[SpaceSpec] {
        self.env.obs_specs()
    }
    fn act_specs(&self) -> &[SpaceSpec] {
        self.env.act_specs()
    }
    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        self.env.reset(seed)
    }
    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        let r = self.env.step(actions.clone())?;
        self.log.lock().unwrap().push((actions, r.clone()));
        Ok(r)
    }
    fn state_bytes(&self) -> Vec<u8> {
        self.env.state_bytes()
    }
}

pub fn recorder<E: Env>(env: E) -> (Recorder<E>, Arc<Mutex<Vec<Tick>>>) {
    let log = Arc::new(Mutex::new(Vec::new()));
    (Recorder { env, log: Arc::clone(&log) }, log)
}

/// Minimal episode loop: agents cover consecutive slots.
pub fn run(env: &mut dyn Env, agents: &mut [WrappedAgent], seed: u64) -> Vec<StepResult> {
    let obs = env.reset(seed).unwrap();
    let mut at = 0;
    let mut parts = Vec::new();
    for a in agents.iter_mut() {
        let n = a.num_slots();
        parts.push(at..at + n);
        a.reset(Bundle::new(obs.slots()[at..at + n].to_vec()).unwrap()).unwrap();
        at += n;
    }
    assert_eq!(at, env.num_slots());
    let mut out = Vec::new();
    loop {
        let mut acts = Vec::new();
        for a in agents.iter_mut() {
            acts.extend(a.act(false).unwrap());
        }
        let r = env.step(Bundle::new(acts).unwrap()).unwrap();
        for (a, range) in agents.iter_mut().zip(&parts) {
            a.observe(Frame {
                obs: Bundle::new(r.obs.slots()[range.clone()].to_vec()).unwrap(),
                rewards: r.rewards[range.clone()].to_vec(),
                alive: r.alive[range.clone()].to_vec(),
            })
            .unwrap();
        }
        let done = r.done;
        out.push(r);
        if done {
            for a in agents.iter_mut() {
                a.act(true).unwrap();
            }
            return out;
        }
    }
}
