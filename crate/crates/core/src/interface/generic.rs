//! Environment-agnostic interfaces.

use std::collections::BTreeMap;

use super::{BoxedInterface, Interface, Specs};
use crate::bundle::{Bundle, Frame, SlotPartition};
use crate::error::{Error, Result};
use crate::space::{flatten, flatten_with_spec, SpaceSpec};
use crate::value::Value;

/// Replaces every observation by its canonical flattening.
pub struct MapToVector {
    one_hot: bool,
    inner_obs: Vec<SpaceSpec>,
}

/// Flatten observations to vectors; with `one_hot`, discretes become one-hot blocks.
pub fn map_to_vector(one_hot: bool) -> BoxedInterface {
    Box::new(MapToVector {
        one_hot,
        inner_obs: Vec::new(),
    })
}

impl MapToVector {
    fn map(&self, obs: Bundle) -> Result<Bundle> {
        let slots = obs
            .into_iter()
            .zip(&self.inner_obs)
            .map(|(v, s)| if self.one_hot { flatten_with_spec(&v, s) } else { flatten(&v) })
            .collect();
        Bundle::new(slots)
    }
}

impl Interface for MapToVector {
    fn name(&self) -> String {
        "map_to_vector".into()
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        self.inner_obs = inner.obs.clone();
        let obs = inner
            .obs
            .iter()
            .map(|s| {
                let len = if self.one_hot { s.one_hot_len() } else { s.flat_len() };
                let (low, high) = s.flat_bounds(self.one_hot);
                SpaceSpec::vector(len, low, high)
            })
            .collect();
        Specs::new(obs, inner.act.clone())
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.map(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        Ok(Frame {
            obs: self.map(frame.obs)?,
            ..frame
        })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        Ok(actions)
    }
}

fn group_rewards(p: &SlotPartition, frame: &Frame) -> Result<(Vec<f64>, Vec<bool>)> {
    let rewards = p
        .split_vec(&frame.rewards)?
        .into_iter()
        .map(|g| g.iter().sum())
        .collect();
    let alive = p
        .split_vec(&frame.alive)?
        .into_iter()
        .map(|g| g.iter().any(|&a| a))
        .collect();
    Ok((rewards, alive))
}

/// Groups slots into teams: a team observes a `Seq` of its members'
/// observations, acts with a `Seq` of member actions and receives the sum of
/// their rewards.
pub struct MakeTeam {
    partition: SlotPartition,
}

pub fn make_team(partition: SlotPartition) -> BoxedInterface {
    Box::new(MakeTeam { partition })
}

impl MakeTeam {
    fn pack(&self, obs: Bundle) -> Result<Bundle> {
        let groups = obs.split(&self.partition)?;
        Bundle::new(groups.into_iter().map(|g| Value::Seq(g.into_vec())).collect())
    }
}

impl Interface for MakeTeam {
    fn name(&self) -> String {
        format!("make_team({:?})", self.partition.groups())
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let parts = inner.split(&self.partition)?;
        let (obs, act) = parts
            .into_iter()
            .map(|s| (SpaceSpec::Seq(s.obs), SpaceSpec::Seq(s.act)))
            .unzip();
        Specs::new(obs, act)
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.pack(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        let (rewards, alive) = group_rewards(&self.partition, &frame)?;
        Ok(Frame {
            obs: self.pack(frame.obs)?,
            rewards,
            alive,
        })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        if actions.len() != self.partition.num_groups() {
            return Err(Error::mismatch(format!(
                "expected {} team actions, got {}",
                self.partition.num_groups(),
                actions.len()
            )));
        }
        let mut out = Vec::with_capacity(self.partition.num_slots());
        for (team, (a, size)) in actions.into_iter().zip(self.partition.sizes()).enumerate() {
            match a {
                Value::Seq(items) if items.len() == *size => out.extend(items),
                other => {
                    return Err(Error::mismatch_at(
                        team,
                        format!("team action must be a seq of {size}, got {}", other.kind()),
                    ))
                }
            }
        }
        Bundle::new(out)
    }

    fn slot_groups(&self) -> Option<SlotPartition> {
        Some(self.partition.clone())
    }
}

#[derive(Debug, Clone)]
enum MemberAct {
    Discrete(u64),
    Vector(usize),
}

impl MemberAct {
    fn len(&self) -> usize {
        match self {
            MemberAct::Discrete(_) => 1,
            MemberAct::Vector(n) => *n,
        }
    }
}

/// Concatenates member observation vectors per group, and splits group action
/// vectors back into member actions by the recorded member lengths.
pub struct ConcatObsAct {
    partition: SlotPartition,
    members: Vec<Vec<MemberAct>>,
}

pub fn concat_obs_act(partition: SlotPartition) -> BoxedInterface {
    Box::new(ConcatObsAct {
        partition,
        members: Vec::new(),
    })
}

impl ConcatObsAct {
    fn concat(&self, obs: Bundle) -> Result<Bundle> {
        let groups = obs.split(&self.partition)?;
        let slots = groups
            .into_iter()
            .map(|g| {
                let mut v = Vec::new();
                for x in g {
                    match x {
                        Value::Vector(xs) => v.extend(xs),
                        other => {
                            return Err(Error::mismatch(format!(
                                "concat needs vector observations, got {}",
                                other.kind()
                            )))
                        }
                    }
                }
                Ok(Value::Vector(v))
            })
            .collect::<Result<Vec<_>>>()?;
        Bundle::new(slots)
    }
}

impl Interface for ConcatObsAct {
    fn name(&self) -> String {
        format!("concat_obs_act({:?})", self.partition.groups())
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let parts = inner.split(&self.partition)?;
        let mut obs = Vec::new();
        let mut act = Vec::new();
        self.members.clear();
        for part in parts {
            let mut len = 0;
            let mut bounds = Vec::new();
            for s in &part.obs {
                match s {
                    SpaceSpec::Box { shape, low, high } if shape.len() == 1 => {
                        len += shape[0];
                        bounds.push((*low, *high));
                    }
                    other => {
                        return Err(Error::Setup(format!(
                            "concat_obs_act needs vector observations, got {other:?}; \
                             stack map_to_vector underneath"
                        )))
                    }
                }
            }
            obs.push(vector_spec(len, &bounds));
            let mut members = Vec::new();
            let mut abounds = Vec::new();
            for s in &part.act {
                match s {
                    SpaceSpec::Discrete(n) => {
                        members.push(MemberAct::Discrete(*n));
                        abounds.push((0.0, (*n - 1) as f64));
                    }
                    SpaceSpec::Box { shape, low, high } if shape.len() == 1 => {
                        members.push(MemberAct::Vector(shape[0]));
                        abounds.push((*low, *high));
                    }
                    other => {
                        return Err(Error::Setup(format!(
                            "concat_obs_act needs discrete or vector actions, got {other:?}"
                        )))
                    }
                }
            }
            act.push(vector_spec(members.iter().map(MemberAct::len).sum(), &abounds));
            self.members.push(members);
        }
        Specs::new(obs, act)
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.concat(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        let (rewards, alive) = group_rewards(&self.partition, &frame)?;
        Ok(Frame {
            obs: self.concat(frame.obs)?,
            rewards,
            alive,
        })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        if actions.len() != self.members.len() {
            return Err(Error::mismatch(format!(
                "expected {} group actions, got {}",
                self.members.len(),
                actions.len()
            )));
        }
        let mut out = Vec::new();
        for (gi, (a, members)) in actions.into_iter().zip(&self.members).enumerate() {
            let total: usize = members.iter().map(MemberAct::len).sum();
            let xs = match a {
                Value::Vector(xs) if xs.len() == total => xs,
                other => {
                    return Err(Error::mismatch_at(
                        gi,
                        format!(
                            "group action must be a vector of {total}, got {} of {}",
                            other.kind(),
                            other.scalar_count()
                        ),
                    ))
                }
            };
            let mut at = 0;
            for m in members {
                let chunk = &xs[at..at + m.len()];
                at += m.len();
                out.push(match m {
                    MemberAct::Vector(_) => Value::Vector(chunk.to_vec()),
                    MemberAct::Discrete(n) => {
                        let x = chunk[0];
                        if x.fract() != 0.0 || x < 0.0 || x >= *n as f64 {
                            return Err(Error::mismatch_at(
                                gi,
                                format!("{x} is not a discrete index below {n}"),
                            ));
                        }
                        Value::Discrete(x as u64)
                    }
                });
            }
        }
        Bundle::new(out)
    }

    fn slot_groups(&self) -> Option<SlotPartition> {
        Some(self.partition.clone())
    }
}

fn vector_spec(len: usize, bounds: &[(f64, f64)]) -> SpaceSpec {
    let low = bounds.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let high = bounds.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    if low > high {
        SpaceSpec::vector(len, 0.0, 0.0)
    } else {
        SpaceSpec::vector(len, low, high)
    }
}

type FeatureFn = Box<dyn Fn(&Value) -> Result<Value> + Send>;
type FeatureSpecFn = Box<dyn Fn(&SpaceSpec) -> Result<SpaceSpec> + Send>;

/// Adds one computed entry to every mapping observation.
pub struct AppendFeature {
    name: String,
    key: String,
    spec: FeatureSpecFn,
    f: FeatureFn,
}

/// Append `f(obs)` under `key`, declared with the fixed space `spec`.
pub fn append_feature(
    key: impl Into<String>,
    spec: SpaceSpec,
    f: impl Fn(&Value) -> Result<Value> + Send + 'static,
) -> BoxedInterface {
    Box::new(AppendFeature::new(key, move |_| Ok(spec.clone()), f))
}

impl AppendFeature {
    /// `spec` computes the feature space from each slot's inner observation space.
    pub fn new(
        key: impl Into<String>,
        spec: impl Fn(&SpaceSpec) -> Result<SpaceSpec> + Send + 'static,
        f: impl Fn(&Value) -> Result<Value> + Send + 'static,
    ) -> Self {
        let key = key.into();
        Self {
            name: format!("append_feature({key})"),
            key,
            spec: Box::new(spec),
            f: Box::new(f),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    fn append(&self, obs: Bundle) -> Result<Bundle> {
        let slots = obs
            .into_iter()
            .enumerate()
            .map(|(i, v)| {
                let feature = (self.f)(&v).map_err(|e| e.at_slot(i))?;
                match v {
                    Value::Mapping(mut m) => {
                        m.insert(self.key.clone(), feature);
                        Ok(Value::Mapping(m))
                    }
                    other => Err(Error::mismatch_at(
                        i,
                        format!("{} needs mapping observations, got {}", self.name, other.kind()),
                    )),
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Bundle::new(slots)
    }
}

impl Interface for AppendFeature {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let obs = inner
            .obs
            .iter()
            .map(|s| match s {
                SpaceSpec::Mapping(m) if m.contains_key(&self.key) => Err(Error::Setup(format!(
                    "{}: observation already has key {:?}",
                    self.name, self.key
                ))),
                SpaceSpec::Mapping(m) => {
                    let mut m = m.clone();
                    m.insert(self.key.clone(), (self.spec)(s)?);
                    Ok(SpaceSpec::Mapping(m))
                }
                other => Err(Error::Setup(format!(
                    "{} needs mapping observations, got {other:?}",
                    self.name
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Specs::new(obs, inner.act.clone())
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.append(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        Ok(Frame {
            obs: self.append(frame.obs)?,
            ..frame
        })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        Ok(actions)
    }
}

/// Marks dead slots: adds an `alive` flag (`[1]` or `[0]`) to every
/// observation and zeroes the observation of dead slots. Non-mapping
/// observations are wrapped as `{obs: ..., alive: [..]}`.
pub struct DeadPadding {
    inner_obs: Vec<SpaceSpec>,
}

pub const ALIVE_KEY: &str = "alive";

pub fn dead_padding() -> BoxedInterface {
    Box::new(DeadPadding {
        inner_obs: Vec::new(),
    })
}

impl DeadPadding {
    fn pad(&self, obs: Bundle, alive: &[bool]) -> Result<Bundle> {
        let slots = obs
            .into_iter()
            .zip(&self.inner_obs)
            .zip(alive)
            .map(|((v, spec), &alive)| {
                let v = if alive { v } else { spec.zero_value() };
                let flag = Value::scalar(if alive { 1.0 } else { 0.0 });
                match v {
                    Value::Mapping(mut m) => {
                        m.insert(ALIVE_KEY.into(), flag);
                        Value::Mapping(m)
                    }
                    other => Value::mapping([("obs", other), (ALIVE_KEY, flag)]),
                }
            })
            .collect();
        Bundle::new(slots)
    }
}

impl Interface for DeadPadding {
    fn name(&self) -> String {
        "dead_padding".into()
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        self.inner_obs = inner.obs.clone();
        let flag = SpaceSpec::vector(1, 0.0, 1.0);
        let obs = inner
            .obs
            .iter()
            .map(|s| match s {
                SpaceSpec::Mapping(m) if m.contains_key(ALIVE_KEY) => Err(Error::Setup(
                    "dead_padding: observation already has an alive key".into(),
                )),
                SpaceSpec::Mapping(m) => {
                    let mut m = m.clone();
                    m.insert(ALIVE_KEY.into(), flag.clone());
                    Ok(SpaceSpec::Mapping(m))
                }
                other => Ok(SpaceSpec::Mapping(BTreeMap::from([
                    ("obs".to_owned(), other.clone()),
                    (ALIVE_KEY.to_owned(), flag.clone()),
                ]))),
            })
            .collect::<Result<Vec<_>>>()?;
        Specs::new(obs, inner.act.clone())
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        let alive = vec![true; obs.len()];
        self.pad(obs, &alive)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        frame.check_lengths()?;
        let obs = self.pad(frame.obs, &frame.alive)?;
        Ok(Frame { obs, ..frame })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        Ok(actions)
    }
}
