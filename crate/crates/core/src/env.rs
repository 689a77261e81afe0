//! The multi-agent environment contract.

use crate::bundle::{Bundle, SlotPartition, StepResult};
use crate::error::Result;
use crate::space::SpaceSpec;

/// A multi-agent environment: one observation, action, reward and alive flag
/// per agent slot, plus a single global `done` flag.
///
/// Identical `(seed, action sequence)` inputs must produce bitwise identical
/// `StepResult`s. Dead slots keep receiving observations and must still submit
/// actions, which the environment ignores.
pub trait Env: Send {
    fn obs_specs(&self) -> &[SpaceSpec];
    fn act_specs(&self) -> &[SpaceSpec];

    fn num_slots(&self) -> usize {
        self.obs_specs().len()
    }

    /// Start a new episode.
    fn reset(&mut self, seed: u64) -> Result<Bundle>;

    /// Advance one tick. Fails with `SpaceMismatch` on bad actions, with
    /// `EpisodeOver` after `done`, and with `NotReset` before the first reset.
    fn step(&mut self, actions: Bundle) -> Result<StepResult>;

    /// Teams as lists of raw slot indices; the `winner` info entry indexes this list.
    fn teams(&self) -> Vec<Vec<usize>> {
        (0..self.num_slots()).map(|s| vec![s]).collect()
    }

    /// Grouping of the innermost environment's slots under this environment's
    /// slots (`None` when they correspond one to one).
    fn raw_slot_groups(&self) -> Option<SlotPartition> {
        None
    }

    /// Canonical little-endian serialization of the full simulation state.
    fn state_bytes(&self) -> Vec<u8>;

    /// Text picture of the current state.
    fn render(&self) -> String {
        String::new()
    }
}

impl<E: Env + ?Sized> Env for Box<E> {
    fn obs_specs(&self) -> &[SpaceSpec] {
        (**self).obs_specs()
    }
    fn act_specs(&self) -> &[SpaceSpec] {
        (**self).act_specs()
    }
    fn num_slots(&self) -> usize {
        (**self).num_slots()
    }
    fn reset(&mut self, seed: u64) -> Result<Bundle> {
        (**self).reset(seed)
    }
    fn step(&mut self, actions: Bundle) -> Result<StepResult> {
        (**self).step(actions)
    }
    fn teams(&self) -> Vec<Vec<usize>> {
        (**self).teams()
    }
    fn raw_slot_groups(&self) -> Option<SlotPartition> {
        (**self).raw_slot_groups()
    }
    fn state_bytes(&self) -> Vec<u8> {
        (**self).state_bytes()
    }
    fn render(&self) -> String {
        (**self).render()
    }
}

/// Episode bookkeeping shared by the built-in environments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Phase {
    #[default]
    Fresh,
    Running,
    Done,
}

impl Phase {
    pub fn check_step(self) -> Result<()> {
        match self {
            Phase::Fresh => Err(crate::Error::NotReset),
            Phase::Running => Ok(()),
            Phase::Done => Err(crate::Error::EpisodeOver),
        }
    }
}
