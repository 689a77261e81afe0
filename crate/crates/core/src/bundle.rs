//! Per-slot tuples and slot partitions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::space::SpaceSpec;
use crate::value::Value;

/// One value per agent slot. Never empty.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle(Vec<Value>);

impl Bundle {
    pub fn new(slots: Vec<Value>) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::mismatch("a bundle needs at least one slot"));
        }
        Ok(Self(slots))
    }

    pub fn single(v: Value) -> Self {
        Self(vec![v])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn slots(&self) -> &[Value] {
        &self.0
    }

    pub fn get(&self, i: usize) -> Option<&Value> {
        self.0.get(i)
    }

    pub fn into_vec(self) -> Vec<Value> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    /// Check every slot against `specs`, naming the first offending slot.
    pub fn check(&self, specs: &[SpaceSpec]) -> Result<()> {
        if self.len() != specs.len() {
            return Err(Error::mismatch(format!(
                "expected {} slots, got {}",
                specs.len(),
                self.len()
            )));
        }
        for (i, (v, s)) in self.0.iter().zip(specs).enumerate() {
            if !s.contains(v) {
                return Err(Error::mismatch_at(i, format!("{} value outside {s:?}", v.kind())));
            }
        }
        Ok(())
    }

    /// Split into one bundle per group of `partition`.
    pub fn split(&self, partition: &SlotPartition) -> Result<Vec<Bundle>> {
        partition.check_len(self.len())?;
        Ok(partition
            .ranges()
            .map(|r| Bundle(self.0[r].to_vec()))
            .collect())
    }

    /// Concatenate bundles in order.
    pub fn merge(parts: impl IntoIterator<Item = Bundle>) -> Result<Bundle> {
        Bundle::new(parts.into_iter().flat_map(|b| b.0).collect())
    }
}

impl IntoIterator for Bundle {
    type Item = Value;
    type IntoIter = std::vec::IntoIter<Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.into_iter()
    }
}

impl<'a> IntoIterator for &'a Bundle {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Split a bundle by explicit slot-index groups.
///
/// Groups must be non-empty, disjoint, contiguous and cover every slot in order.
pub fn bundle_split(b: &Bundle, groups: &[Vec<usize>]) -> Result<Vec<Bundle>> {
    let p = SlotPartition::new(groups.to_vec(), b.len())?;
    b.split(&p)
}

/// Ordered grouping of contiguous slot ranges, e.g. `[[0], [1, 2]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotPartition {
    sizes: Vec<usize>,
}

impl SlotPartition {
    /// Validate `groups` as a partition of `0..n_slots`.
    pub fn new(groups: Vec<Vec<usize>>, n_slots: usize) -> Result<Self> {
        let p = Self::from_groups(groups)?;
        p.check_len(n_slots)?;
        Ok(p)
    }

    /// Validate `groups` as a partition of `0..k` where `k` is their total size.
    pub fn from_groups(groups: Vec<Vec<usize>>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidPartition("no groups".into()));
        }
        let mut next = 0usize;
        let mut sizes = Vec::with_capacity(groups.len());
        for (gi, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidPartition(format!("group {gi} is empty")));
            }
            for &s in g {
                if s != next {
                    return Err(Error::InvalidPartition(format!(
                        "group {gi} has slot {s} where slot {next} was expected \
                         (groups must be disjoint, contiguous and in order)"
                    )));
                }
                next += 1;
            }
            sizes.push(g.len());
        }
        Ok(Self { sizes })
    }

    pub fn from_sizes(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::InvalidPartition(format!("bad group sizes {sizes:?}")));
        }
        Ok(Self { sizes })
    }

    pub fn singletons(n: usize) -> Self {
        Self { sizes: vec![1; n] }
    }

    pub fn whole(n: usize) -> Self {
        Self { sizes: vec![n] }
    }

    pub fn num_groups(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_slots(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn ranges(&self) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.sizes.iter().scan(0, |start, &n| {
            let r = *start..*start + n;
            *start += n;
            Some(r)
        })
    }

    pub fn groups(&self) -> Vec<Vec<usize>> {
        self.ranges().map(|r| r.collect()).collect()
    }

    /// Group index owning `slot`.
    pub fn group_of(&self, slot: usize) -> Option<usize> {
        self.ranges().position(|r| r.contains(&slot))
    }

    pub fn is_identity(&self) -> bool {
        self.sizes.iter().all(|&n| n == 1)
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if self.num_slots() != n {
            return Err(Error::InvalidPartition(format!(
                "partition covers {} slots but there are {n}",
                self.num_slots()
            )));
        }
        Ok(())
    }

    /// Compose an outer grouping with the grouping underneath it: outer group
    /// `k` covers the union of the inner groups it lists.
    pub fn compose(outer: &SlotPartition, inner: &SlotPartition) -> Result<SlotPartition> {
        if outer.num_slots() != inner.num_groups() {
            return Err(Error::InvalidPartition(format!(
                "outer partition covers {} slots, inner has {} groups",
                outer.num_slots(),
                inner.num_groups()
            )));
        }
        let sizes = outer
            .ranges()
            .map(|r| inner.sizes[r].iter().sum())
            .collect();
        Ok(SlotPartition { sizes })
    }

    /// Place `parts` side by side, each covering consecutive slots.
    pub fn concat(parts: &[SlotPartition]) -> SlotPartition {
        SlotPartition {
            sizes: parts.iter().flat_map(|p| p.sizes.iter().copied()).collect(),
        }
    }

    /// Split a per-slot vector (rewards, alive flags) by this partition.
    pub fn split_vec<T: Clone>(&self, xs: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_len(xs.len())?;
        Ok(self.ranges().map(|r| xs[r].to_vec()).collect())
    }
}

/// Environment info mapping. Bypasses interfaces untouched.
pub type Info = BTreeMap<String, Value>;

/// Key under which an environment reports the episode result on the final step.
pub const WINNER_KEY: &str = "winner";

/// Episode result carried in `info["winner"]`: `Discrete(team)` for a decided
/// episode, an empty `Seq` for a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Team(usize),
    Draw,
}

impl Winner {
    pub fn to_value(self) -> Value {
        match self {
            Winner::Team(t) => Value::Discrete(t as u64),
            Winner::Draw => Value::Seq(Vec::new()),
        }
    }

    pub fn from_value(v: &Value) -> Option<Winner> {
        match v {
            Value::Discrete(t) => Some(Winner::Team(*t as usize)),
            Value::Seq(s) if s.is_empty() => Some(Winner::Draw),
            _ => None,
        }
    }

    pub fn from_info(info: &Info) -> Option<Winner> {
        info.get(WINNER_KEY).and_then(Winner::from_value)
    }
}

/// Observations, rewards and alive flags flowing inner to outer through interfaces.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub obs: Bundle,
    pub rewards: Vec<f64>,
    pub alive: Vec<bool>,
}

impl Frame {
    /// Frame for an episode start: zero rewards, everyone alive.
    pub fn initial(obs: Bundle) -> Self {
        let n = obs.len();
        Self {
            obs,
            rewards: vec![0.0; n],
            alive: vec![true; n],
        }
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn check_lengths(&self) -> Result<()> {
        if self.rewards.len() != self.obs.len() || self.alive.len() != self.obs.len() {
            return Err(Error::mismatch(format!(
                "frame has {} observations, {} rewards, {} alive flags",
                self.obs.len(),
                self.rewards.len(),
                self.alive.len()
            )));
        }
        Ok(())
    }

    pub fn split(self, partition: &SlotPartition) -> Result<Vec<Frame>> {
        self.check_lengths()?;
        let obs = self.obs.split(partition)?;
        let rewards = partition.split_vec(&self.rewards)?;
        let alive = partition.split_vec(&self.alive)?;
        Ok(obs
            .into_iter()
            .zip(rewards)
            .zip(alive)
            .map(|((obs, rewards), alive)| Frame { obs, rewards, alive })
            .collect())
    }

    pub fn merge(parts: Vec<Frame>) -> Result<Frame> {
        let mut rewards = Vec::new();
        let mut alive = Vec::new();
        let mut obs = Vec::new();
        for f in parts {
            rewards.extend(f.rewards);
            alive.extend(f.alive);
            obs.push(f.obs);
        }
        Ok(Frame {
            obs: Bundle::merge(obs)?,
            rewards,
            alive,
        })
    }
}

/// Result of one environment tick.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Bundle,
    pub rewards: Vec<f64>,
    pub done: bool,
    pub alive: Vec<bool>,
    pub info: Info,
}

impl StepResult {
    pub fn frame(&self) -> Frame {
        Frame {
            obs: self.obs.clone(),
            rewards: self.rewards.clone(),
            alive: self.alive.clone(),
        }
    }

    pub fn from_frame(frame: Frame, done: bool, info: Info) -> Self {
        Self {
            obs: frame.obs,
            rewards: frame.rewards,
            alive: frame.alive,
            done,
            info,
        }
    }
}
