//! Composable observation/action transforms.
//!
//! An [`Interface`] sits between an "inner" side (the environment, or a
//! previous interface) and an "outer" side (the agent, or the next
//! interface). Observations, rewards and alive flags flow inner to outer
//! through [`Interface::obs_trans`]; actions flow outer to inner through
//! [`Interface::act_trans`]. Interfaces may change the number of slots;
//! whatever `setup` returns is authoritative for the outer side.

mod generic;

pub use generic::{
    append_feature, concat_obs_act, dead_padding, make_team, map_to_vector, AppendFeature,
    ConcatObsAct, DeadPadding, MakeTeam, MapToVector, ALIVE_KEY,
};

use crate::bundle::{Bundle, Frame, SlotPartition};
use crate::error::{Error, Result};
use crate::space::SpaceSpec;

/// Per-slot observation and action spaces on one side of an interface.
#[derive(Debug, Clone, PartialEq)]
pub struct Specs {
    pub obs: Vec<SpaceSpec>,
    pub act: Vec<SpaceSpec>,
}

impl Specs {
    pub fn new(obs: Vec<SpaceSpec>, act: Vec<SpaceSpec>) -> Result<Self> {
        if obs.len() != act.len() || obs.is_empty() {
            return Err(Error::Setup(format!(
                "{} observation specs vs {} action specs",
                obs.len(),
                act.len()
            )));
        }
        Ok(Self { obs, act })
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn split(&self, p: &SlotPartition) -> Result<Vec<Specs>> {
        let obs = p.split_vec(&self.obs)?;
        let act = p.split_vec(&self.act)?;
        Ok(obs
            .into_iter()
            .zip(act)
            .map(|(obs, act)| Specs { obs, act })
            .collect())
    }

    pub fn concat(parts: Vec<Specs>) -> Specs {
        let mut out = Specs {
            obs: Vec::new(),
            act: Vec::new(),
        };
        for p in parts {
            out.obs.extend(p.obs);
            out.act.extend(p.act);
        }
        out
    }
}

/// A transform node. `setup` is called once before the first `reset`;
/// `reset` is called at every episode start and clears per-episode state.
pub trait Interface: Send {
    fn name(&self) -> String;

    /// Declare the outer specs given the inner ones.
    fn setup(&mut self, inner: &Specs) -> Result<Specs>;

    fn reset(&mut self, obs: Bundle) -> Result<Bundle>;

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame>;

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle>;

    /// Inner slots grouped under each outer slot, `None` when one to one.
    /// Only meaningful after `setup`.
    fn slot_groups(&self) -> Option<SlotPartition> {
        None
    }
}

impl<I: Interface + ?Sized> Interface for Box<I> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        (**self).setup(inner)
    }
    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        (**self).reset(obs)
    }
    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        (**self).obs_trans(frame)
    }
    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        (**self).act_trans(actions)
    }
    fn slot_groups(&self) -> Option<SlotPartition> {
        (**self).slot_groups()
    }
}

pub type BoxedInterface = Box<dyn Interface>;

/// Passes everything through unchanged.
#[derive(Debug, Clone, Default)]
pub struct Identity;

pub fn identity() -> BoxedInterface {
    Box::new(Identity)
}

impl Interface for Identity {
    fn name(&self) -> String {
        "identity".into()
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        Ok(inner.clone())
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        Ok(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        Ok(frame)
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        Ok(actions)
    }
}

fn compose_groups(
    outer: Option<SlotPartition>,
    inner: Option<SlotPartition>,
) -> Result<Option<SlotPartition>> {
    Ok(match (outer, inner) {
        (None, None) => None,
        (Some(o), None) => Some(o),
        (None, Some(i)) => Some(i),
        (Some(o), Some(i)) => Some(SlotPartition::compose(&o, &i)?),
    })
}

/// `outer` stacked over `inner`: observations go through `inner` first,
/// actions through `outer` first.
pub struct Stack {
    outer: BoxedInterface,
    inner: BoxedInterface,
    groups: Option<SlotPartition>,
}

pub fn stack(outer: BoxedInterface, inner: BoxedInterface) -> BoxedInterface {
    Box::new(Stack {
        outer,
        inner,
        groups: None,
    })
}

/// Stack a list of interfaces, the first one innermost.
pub fn pipeline(layers: Vec<BoxedInterface>) -> BoxedInterface {
    layers
        .into_iter()
        .reduce(|inner, outer| stack(outer, inner))
        .unwrap_or_else(identity)
}

impl Interface for Stack {
    fn name(&self) -> String {
        format!("{}({})", self.outer.name(), self.inner.name())
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let mid = self.inner.setup(inner)?;
        let out = self.outer.setup(&mid).map_err(|e| match e {
            Error::Setup(msg) => Error::Setup(format!("{} over {}: {msg}", self.outer.name(), self.inner.name())),
            other => other,
        })?;
        self.groups = compose_groups(self.outer.slot_groups(), self.inner.slot_groups())?;
        Ok(out)
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        let mid = self.inner.reset(obs)?;
        self.outer.reset(mid)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        let mid = self.inner.obs_trans(frame)?;
        self.outer.obs_trans(mid)
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        let mid = self.outer.act_trans(actions)?;
        self.inner.act_trans(mid)
    }

    fn slot_groups(&self) -> Option<SlotPartition> {
        self.groups.clone()
    }
}

/// `children` placed side by side over `base`: the frame produced by `base`
/// is split by `partition`, group `k` going to child `k`; child actions are
/// concatenated before `base` sees them.
pub struct Combine {
    base: BoxedInterface,
    children: Vec<BoxedInterface>,
    partition: SlotPartition,
    child_out: Option<SlotPartition>,
    groups: Option<SlotPartition>,
}

pub fn combine(
    base: BoxedInterface,
    children: Vec<BoxedInterface>,
    partition: SlotPartition,
) -> Result<BoxedInterface> {
    if children.len() != partition.num_groups() {
        return Err(Error::InvalidPartition(format!(
            "{} children but {} groups",
            children.len(),
            partition.num_groups()
        )));
    }
    Ok(Box::new(Combine {
        base,
        children,
        partition,
        child_out: None,
        groups: None,
    }))
}

impl Combine {
    fn child_out(&self) -> Result<&SlotPartition> {
        self.child_out
            .as_ref()
            .ok_or_else(|| Error::Setup("combine used before setup".into()))
    }
}

impl Interface for Combine {
    fn name(&self) -> String {
        let kids: Vec<String> = self.children.iter().map(|c| c.name()).collect();
        format!("combine({}, [{}])", self.base.name(), kids.join(", "))
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let base_out = self.base.setup(inner)?;
        let parts = base_out.split(&self.partition)?;
        let mut outs = Vec::with_capacity(parts.len());
        let mut child_groups = Vec::with_capacity(parts.len());
        for (child, part) in self.children.iter_mut().zip(&parts) {
            let out = child.setup(part)?;
            child_groups.push(
                child
                    .slot_groups()
                    .unwrap_or_else(|| SlotPartition::singletons(part.len())),
            );
            outs.push(out);
        }
        self.child_out = Some(SlotPartition::from_sizes(outs.iter().map(Specs::len).collect())?);
        let local = SlotPartition::concat(&child_groups);
        let local = if local.is_identity() { None } else { Some(local) };
        self.groups = compose_groups(local, self.base.slot_groups())?;
        Ok(Specs::concat(outs))
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        let mid = self.base.reset(obs)?;
        let parts = mid.split(&self.partition)?;
        let outs = self
            .children
            .iter_mut()
            .zip(parts)
            .map(|(c, p)| c.reset(p))
            .collect::<Result<Vec<_>>>()?;
        Bundle::merge(outs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        let mid = self.base.obs_trans(frame)?;
        let parts = mid.split(&self.partition)?;
        let outs = self
            .children
            .iter_mut()
            .zip(parts)
            .map(|(c, p)| c.obs_trans(p))
            .collect::<Result<Vec<_>>>()?;
        Frame::merge(outs)
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        let parts = actions.split(self.child_out()?).map_err(|e| match e {
            Error::InvalidPartition(msg) => Error::mismatch(msg),
            other => other,
        })?;
        let inner = self
            .children
            .iter_mut()
            .zip(parts)
            .map(|(c, p)| c.act_trans(p))
            .collect::<Result<Vec<_>>>()?;
        self.base.act_trans(Bundle::merge(inner)?)
    }

    fn slot_groups(&self) -> Option<SlotPartition> {
        self.groups.clone()
    }
}

/// Apply one interface per slot: `combine(identity, itfs, singletons)`.
pub fn per_slot(itfs: Vec<BoxedInterface>) -> Result<BoxedInterface> {
    let n = itfs.len();
    if n == 0 {
        return Err(Error::Setup("per-slot wrapping needs at least one interface".into()));
    }
    combine(identity(), itfs, SlotPartition::singletons(n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Value;

    fn specs(n: usize) -> Specs {
        Specs::new(vec![SpaceSpec::Discrete(4); n], vec![SpaceSpec::Discrete(4); n]).unwrap()
    }

    fn frame(xs: &[u64]) -> Frame {
        Frame::initial(Bundle::new(xs.iter().map(|&x| Value::Discrete(x)).collect()).unwrap())
    }

    #[test]
    fn identity_passes_through() {
        let mut i = identity();
        assert_eq!(i.setup(&specs(1)).unwrap(), specs(1));
        assert_eq!(i.obs_trans(frame(&[3])).unwrap(), frame(&[3]));
        let a = Bundle::single(Value::Vector(vec![1.0]));
        assert_eq!(i.act_trans(a.clone()).unwrap(), a);
    }

    #[test]
    fn combine_needs_matching_partition() {
        assert!(combine(identity(), vec![identity()], SlotPartition::singletons(2)).is_err());
        let mut c = combine(identity(), vec![identity(), identity()], SlotPartition::singletons(2)).unwrap();
        assert!(matches!(c.setup(&specs(3)), Err(Error::InvalidPartition(_))));
    }

    #[test]
    fn combine_of_identities_is_identity() {
        let mut c = combine(identity(), vec![identity(), identity()], SlotPartition::singletons(2)).unwrap();
        assert_eq!(c.setup(&specs(2)).unwrap(), specs(2));
        assert_eq!(c.reset(frame(&[1, 2]).obs).unwrap(), frame(&[1, 2]).obs);
        assert_eq!(c.obs_trans(frame(&[1, 2])).unwrap(), frame(&[1, 2]));
        assert_eq!(c.act_trans(frame(&[3, 0]).obs).unwrap(), frame(&[3, 0]).obs);
        assert!(c.act_trans(frame(&[3]).obs).is_err());
        assert_eq!(c.slot_groups(), None);
    }

    #[test]
    fn pipeline_of_nothing_is_identity() {
        let mut p = pipeline(Vec::new());
        assert_eq!(p.setup(&specs(2)).unwrap(), specs(2));
    }

    #[test]
    fn stacked_team_groups_compose() {
        // make_team([[0,1],[2,3]]) under make_team([[0,1]]) covers all four slots
        let inner = make_team(SlotPartition::from_sizes(vec![2, 2]).unwrap());
        let outer = make_team(SlotPartition::whole(2));
        let mut s = stack(outer, inner);
        let out = s.setup(&specs(4)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(s.slot_groups(), Some(SlotPartition::whole(4)));
    }
}
