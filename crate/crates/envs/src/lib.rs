//! Built-in environments with their interfaces and baseline agents.

pub mod battle;
pub mod bomber;
pub mod pong;
