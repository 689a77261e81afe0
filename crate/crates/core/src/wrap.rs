//! Attaching interfaces to either side of the loop.
//!
//! [`WrappedEnv`] hides an interface inside `reset`/`step`, exposing the
//! interface's outer specs. [`WrappedAgent`] does the reverse: it accepts the
//! raw observations of the slots it covers, feeds its members the transformed
//! ones, and emits raw actions. Both routes see identical transforms, so a
//! slot-local interface moved from the environment onto each agent leaves the
//! raw trajectory unchanged.

use crate::agent::Agent;
use crate::bundle::{Bundle, Frame, SlotPartition, StepResult};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::interface::{per_slot, BoxedInterface, Interface, Specs};
use crate::space::SpaceSpec;
use crate::value::{Grid, Value};

pub struct WrappedEnv {
    env: Box<dyn Env>,
    itf: BoxedInterface,
    specs: Specs,
    groups: Option<SlotPartition>,
}

/// Wrap `itf` around `env`. Fails with `Setup` when the interface rejects the env's specs.
pub fn wrap_env(env: impl Env + 'static, itf: BoxedInterface) -> Result<WrappedEnv> {
    WrappedEnv::new(Box::new(env), itf)
}

/// One single-slot interface per environment slot.
pub fn wrap_env_per_agent(env: impl Env + 'static, itfs: Vec<BoxedInterface>) -> Result<WrappedEnv> {
    if itfs.len() != env.num_slots() {
        return Err(Error::Setup(format!(
            "{} interfaces for {} slots",
            itfs.len(),
            env.num_slots()
        )));
    }
    wrap_env(env, per_slot(itfs)?)
}

impl WrappedEnv {
    pub fn new(env: Box<dyn Env>, mut itf: BoxedInterface) -> Result<Self> {
        let inner = Specs::new(env.obs_specs().to_vec(), env.act_specs().to_vec())?;
        let specs = itf.setup(&inner)?;
        let groups = match (itf.slot_groups(), env.raw_slot_groups()) {
            (None, g) => g,
            (Some(o), None) => Some(o),
            (Some(o), Some(i)) => Some(SlotPartition::compose(&o, &i)?),
        };
        Ok(Self {
            env,
            itf,
            specs,
            groups,
        })
    }

    pub fn inner(&self) -> &dyn Env {
        self.env.as_ref()
    }

    pub fn interface_name(&self) -> String {
        self.itf.name()
    }
}

fn debug_check(obs: &Bundle, specs: &[SpaceSpec], what: &str) -> Result<()> {
    if cfg!(debug_assertions) {
        obs.check(specs).map_err(|e| match e {
            Error::SpaceMismatch { slot, msg } => Error::SpaceMismatch {
                slot,
                msg: format!("{what} produced an observation outside its declared space: {msg}"),
            },
            other => other,
        })?;
    }
    Ok(())
}

impl Env for WrappedEnv {
    fn obs_specs(&self) -> &[SpaceSpec] {
        &self.specs.obs
    }

    fn act_specs(&self) -> &[SpaceSpec] {
        &self.specs.act
    }

    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        let raw = self.env.reset(seed)?;
        let obs = self.itf.reset(raw)?;
        debug_check(&obs, &self.specs.obs, &self.itf.name())?;
        Ok(obs)
    }

    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        actions.check(&self.specs.act)?;
        let inner = self.itf.act_trans(actions)?;
        let r = self.env.step(inner)?;
        let frame = self.itf.obs_trans(Frame {
            obs: r.obs,
            rewards: r.rewards,
            alive: r.alive,
        })?;
        debug_check(&frame.obs, &self.specs.obs, &self.itf.name())?;
        Ok(StepResult::from_frame(frame, r.done, r.info))
    }

    fn teams(&self) -> Vec<Vec<usize>> {
        self.env.teams()
    }

    fn raw_slot_groups(&self) -> Option<SlotPartition> {
        self.groups.clone()
    }

    fn state_bytes(&self) -> Vec<u8> {
        self.env.state_bytes()
    }

    fn render(&self) -> String {
        self.env.render()
    }
}

/// A team of agents behind one interface, controlling `inner` raw slots.
pub struct WrappedAgent {
    members: Vec<Box<dyn Agent>>,
    itf: BoxedInterface,
    inner: Option<Specs>,
    outer: Option<Specs>,
    pending: Option<Frame>,
}

/// Put `members` behind `itf`; member `k` drives the interface's outer slot `k`.
pub fn wrap_agent(members: Vec<Box<dyn Agent>>, itf: BoxedInterface) -> WrappedAgent {
    WrappedAgent {
        members,
        itf,
        inner: None,
        outer: None,
        pending: None,
    }
}

impl WrappedAgent {
    /// Set up `itf` on `inner`, then create one member per outer slot with
    /// `make(member_index, obs_spec, act_spec)`.
    pub fn build(
        mut itf: BoxedInterface,
        inner: &Specs,
        mut make: impl FnMut(usize, &SpaceSpec, &SpaceSpec) -> Result<Box<dyn Agent>>,
    ) -> Result<Self> {
        let outer = itf.setup(inner)?;
        let mut members = Vec::with_capacity(outer.len());
        for (k, (o, a)) in outer.obs.iter().zip(&outer.act).enumerate() {
            let mut m = make(k, o, a)?;
            m.setup(o, a)?;
            members.push(m);
        }
        Ok(Self {
            members,
            itf,
            inner: Some(inner.clone()),
            outer: Some(outer),
            pending: None,
        })
    }

    /// Set up the interface on the raw specs of the covered slots, then every member.
    pub fn setup(&mut self, inner: &Specs) -> Result<()> {
        let outer = self.itf.setup(inner)?;
        if outer.len() != self.members.len() {
            return Err(Error::Setup(format!(
                "{} exposes {} slots but the team has {} members",
                self.itf.name(),
                outer.len(),
                self.members.len()
            )));
        }
        for (m, (o, a)) in self.members.iter_mut().zip(outer.obs.iter().zip(&outer.act)) {
            m.setup(o, a)?;
        }
        self.inner = Some(inner.clone());
        self.outer = Some(outer);
        Ok(())
    }

    /// Raw slots covered (after setup).
    pub fn num_slots(&self) -> usize {
        self.inner.as_ref().map_or(0, Specs::len)
    }

    pub fn num_members(&self) -> usize {
        self.members.len()
    }

    pub fn slot_groups(&self) -> Option<SlotPartition> {
        self.itf.slot_groups()
    }

    fn specs(&self) -> Result<(&Specs, &Specs)> {
        match (&self.inner, &self.outer) {
            (Some(i), Some(o)) => Ok((i, o)),
            _ => Err(Error::Setup("wrapped agent used before setup".into())),
        }
    }

    /// Start an episode from the raw observations of the covered slots.
    pub fn reset(&mut self, obs: Bundle) -> Result<()> {
        self.specs()?;
        let outer = self.itf.reset(obs)?;
        for (m, o) in self.members.iter_mut().zip(outer.iter()) {
            m.reset(o)?;
        }
        self.pending = Some(Frame::initial(outer));
        Ok(())
    }

    /// Feed the raw result of the last tick.
    pub fn observe(&mut self, frame: Frame) -> Result<()> {
        self.pending = Some(self.itf.obs_trans(frame)?);
        Ok(())
    }

    /// Ask every member for an action on the latest observation and translate
    /// the result back to raw actions.
    pub fn act(&mut self, done: bool) -> Result<Bundle> {
        let frame = self
            .pending
            .take()
            .ok_or_else(|| Error::Setup("wrapped agent stepped before reset".into()))?;
        let (_, outer) = self.specs()?;
        let outer_act = outer.act.clone();
        let mut acts = Vec::with_capacity(self.members.len());
        for (k, m) in self.members.iter_mut().enumerate() {
            let obs = frame.obs.get(k).expect("frame covers every member");
            let a = m.step(obs, frame.rewards[k], done)?;
            if !outer_act[k].contains(&a) {
                return Err(Error::mismatch_at(k, format!("member {k} emitted {a:?}")));
            }
            acts.push(a);
        }
        let raw = self.itf.act_trans(Bundle::new(acts)?)?;
        let (inner, _) = self.specs()?;
        raw.check(&inner.act)?;
        self.pending = Some(frame);
        Ok(raw)
    }
}

/// A classic single-slot wrapper: per-slot observation, reward and action
/// transforms with no access to other slots.
pub trait SlotWrapper: Send {
    fn name(&self) -> String;

    fn obs_spec(&self, inner: &SpaceSpec) -> Result<SpaceSpec> {
        Ok(inner.clone())
    }

    fn act_spec(&self, inner: &SpaceSpec) -> Result<SpaceSpec> {
        Ok(inner.clone())
    }

    fn reset(&mut self) {}

    fn observation(&mut self, obs: Value) -> Result<Value> {
        Ok(obs)
    }

    fn reward(&mut self, r: f64) -> f64 {
        r
    }

    fn action(&mut self, a: Value) -> Result<Value> {
        Ok(a)
    }
}

type WrapperFactory = Box<dyn Fn() -> Box<dyn SlotWrapper> + Send>;

struct Lifted {
    factory: WrapperFactory,
    slots: Vec<Box<dyn SlotWrapper>>,
}

/// Turn a single-slot wrapper into an interface applying an independent
/// instance of it to every slot.
pub fn lift_single_wrapper<W, F>(factory: F) -> BoxedInterface
where
    W: SlotWrapper + 'static,
    F: Fn() -> W + Send + 'static,
{
    Box::new(Lifted {
        factory: Box::new(move || Box::new(factory())),
        slots: Vec::new(),
    })
}

impl Interface for Lifted {
    fn name(&self) -> String {
        format!("lifted({})", (self.factory)().name())
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        self.slots = (0..inner.len()).map(|_| (self.factory)()).collect();
        let obs = self
            .slots
            .iter()
            .zip(&inner.obs)
            .map(|(w, s)| w.obs_spec(s))
            .collect::<Result<_>>()?;
        let act = self
            .slots
            .iter()
            .zip(&inner.act)
            .map(|(w, s)| w.act_spec(s))
            .collect::<Result<_>>()?;
        Specs::new(obs, act)
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        let slots = self
            .slots
            .iter_mut()
            .zip(obs)
            .map(|(w, o)| {
                w.reset();
                w.observation(o)
            })
            .collect::<Result<_>>()?;
        Bundle::new(slots)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        let mut obs = Vec::with_capacity(frame.len());
        let mut rewards = Vec::with_capacity(frame.len());
        for ((w, o), r) in self.slots.iter_mut().zip(frame.obs).zip(frame.rewards) {
            obs.push(w.observation(o)?);
            rewards.push(w.reward(r));
        }
        Ok(Frame {
            obs: Bundle::new(obs)?,
            rewards,
            alive: frame.alive,
        })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        let slots = self
            .slots
            .iter_mut()
            .zip(actions)
            .map(|(w, a)| w.action(a))
            .collect::<Result<_>>()?;
        Bundle::new(slots)
    }
}

/// Multiplies every real in the observation by a constant.
#[derive(Debug, Clone)]
pub struct ScaleObs(pub f64);

fn scale_value(v: Value, k: f64) -> Value {
    match v {
        Value::Vector(xs) => Value::Vector(xs.into_iter().map(|x| x * k).collect()),
        Value::Grid(g) => {
            let shape = g.shape();
            let data = g.into_data().into_iter().map(|x| x * k).collect();
            Value::Grid(Grid::new(shape, data).expect("shape unchanged"))
        }
        Value::Mapping(m) => Value::Mapping(m.into_iter().map(|(key, x)| (key, scale_value(x, k))).collect()),
        Value::Seq(s) => Value::Seq(s.into_iter().map(|x| scale_value(x, k)).collect()),
        d @ Value::Discrete(_) => d,
    }
}

fn scale_spec(s: &SpaceSpec, k: f64) -> SpaceSpec {
    match s {
        SpaceSpec::Box { shape, low, high } => {
            let (a, b) = (low * k, high * k);
            SpaceSpec::Box {
                shape: shape.clone(),
                low: a.min(b),
                high: a.max(b),
            }
        }
        SpaceSpec::Mapping(m) => SpaceSpec::Mapping(m.iter().map(|(key, x)| (key.clone(), scale_spec(x, k))).collect()),
        SpaceSpec::Seq(xs) => SpaceSpec::Seq(xs.iter().map(|x| scale_spec(x, k)).collect()),
        d @ SpaceSpec::Discrete(_) => d.clone(),
    }
}

impl SlotWrapper for ScaleObs {
    fn name(&self) -> String {
        format!("scale_obs({})", self.0)
    }

    fn obs_spec(&self, inner: &SpaceSpec) -> Result<SpaceSpec> {
        if !self.0.is_finite() {
            return Err(Error::Setup(format!("scale factor {} is not finite", self.0)));
        }
        Ok(scale_spec(inner, self.0))
    }

    fn observation(&mut self, obs: Value) -> Result<Value> {
        Ok(scale_value(obs, self.0))
    }
}

/// Clamps rewards into `[low, high]`.
#[derive(Debug, Clone)]
pub struct ClipReward {
    pub low: f64,
    pub high: f64,
}

impl SlotWrapper for ClipReward {
    fn name(&self) -> String {
        format!("clip_reward({}, {})", self.low, self.high)
    }

    fn obs_spec(&self, inner: &SpaceSpec) -> Result<SpaceSpec> {
        if !(self.low <= self.high) {
            return Err(Error::Setup("clip_reward bounds are inverted".into()));
        }
        Ok(inner.clone())
    }

    fn reward(&mut self, r: f64) -> f64 {
        r.clamp(self.low, self.high)
    }
}
