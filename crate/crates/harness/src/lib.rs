//! Runs matches between agents on wrapped environments, records and
//! verifies replays, and scores round robins.

mod error;
pub mod params;
pub mod registry;
pub mod replay;
pub mod runner;
pub mod spec;
pub mod tap;
pub mod tourney;

pub use error::{HarnessError, Result};
pub use replay::{verify_path, verify_str, Divergence, Verdict};
pub use runner::{run_episode, run_match, run_match_lines, set_table, MatchResult, Outcome, Seat, Stats};
pub use spec::{parse_agents, parse_pipeline, AgentSpec, ItfSpec, MatchSpec, SlotSel, TourneySpec};
pub use tourney::{round_robin, Record, Scoreboard};
