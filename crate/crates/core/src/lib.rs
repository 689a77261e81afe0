//! Core of the toolkit: the value/space model, the environment and agent
//! contracts, and composable interfaces that transform observations and
//! actions between them.

pub mod agent;
pub mod bundle;
pub mod canon;
pub mod env;
mod error;
pub mod interface;
pub mod rng;
pub mod space;
pub mod testkit;
pub mod value;
pub mod wrap;

pub use agent::{Agent, ConstantAgent, RandomAgent};
pub use bundle::{bundle_split, Bundle, Frame, Info, SlotPartition, StepResult, Winner, WINNER_KEY};
pub use env::{Env, Phase};
pub use error::{Error, Result};
pub use interface::{combine, identity, per_slot, pipeline, stack, BoxedInterface, Interface, Specs};
pub use rng::RngStream;
pub use space::{flatten, flatten_with_spec, space_contains, space_sample, SpaceSpec};
pub use value::{Grid, Value};
pub use wrap::{
    lift_single_wrapper, wrap_agent, wrap_env, wrap_env_per_agent, ClipReward, ScaleObs,
    SlotWrapper, WrappedAgent, WrappedEnv,
};
