//! Round robins.

use serde::Serialize;

use crate::error::{config, Result};
use crate::runner::run_match;
use crate::spec::{MatchSpec, TourneySpec};

/// Counts from the row entrant's point of view.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Record {
    pub wins: u64,
    pub draws: u64,
    pub losses: u64,
}

impl Record {
    pub fn played(&self) -> u64 {
        self.wins + self.draws + self.losses
    }

    pub fn flipped(self) -> Record {
        Record { wins: self.losses, draws: self.draws, losses: self.wins }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Scoreboard {
    pub entrants: Vec<String>,
    /// `records[i][j]` is `i` against `j`; the diagonal is `None`.
    pub records: Vec<Vec<Option<Record>>>,
}

impl Scoreboard {
    pub fn new(entrants: Vec<String>) -> Self {
        let n = entrants.len();
        Self { entrants, records: vec![vec![None; n]; n] }
    }

    pub fn set(&mut self, i: usize, j: usize, r: Record) {
        self.records[i][j] = Some(r);
        self.records[j][i] = Some(r.flipped());
    }

    /// A win is worth one point and a draw half a point.
    pub fn points(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|row| row.iter().flatten().map(|r| r.wins as f64 + 0.5 * r.draws as f64).sum())
            .collect()
    }

    /// `(wins + draws / 2) / played` per pair, `None` on the diagonal.
    pub fn win_rates(&self) -> Vec<Vec<Option<f64>>> {
        self.records
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| r.filter(|r| r.played() > 0).map(|r| (r.wins as f64 + 0.5 * r.draws as f64) / r.played() as f64))
                    .collect()
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "entrants": self.entrants,
            "records": self.records,
            "matrix": self.win_rates(),
            "points": self.points(),
        })
    }
}

/// Every unordered pair plays `episodes_per_pair` episodes, alternating
/// sides, all pairs on the same seeds.
pub fn round_robin(t: &TourneySpec) -> Result<Scoreboard> {
    let n = t.entrants.len();
    if n < 2 {
        return Err(config("a round robin needs at least two entrants"));
    }
    let mut board = Scoreboard::new(t.entrants.iter().map(|e| e.display()).collect());
    for i in 0..n {
        for j in i + 1..n {
            let spec = MatchSpec {
                env: t.env.clone(),
                env_params: t.env_params.clone(),
                env_interfaces: t.env_interfaces.clone(),
                agents: vec![t.entrants[i].clone(), t.entrants[j].clone()],
                episodes: t.episodes_per_pair,
                seed: t.seed,
                replay: None,
                swap_sides: true,
                parallel: t.parallel,
            };
            let r = run_match(&spec)?;
            board.set(i, j, Record { wins: r.wins, draws: r.draws, losses: r.losses });
        }
    }
    Ok(board)
}
