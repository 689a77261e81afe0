//! Board reconstruction from state or observation, action legality and
//! blast prediction.

use std::collections::VecDeque;

use marlkit_core::Value;

use super::{delta, BomberState, Cell, Mode, Pos, BOMB, DOWN, IDLE, LEFT, NUM_ACTIONS, RIGHT, UP};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentView {
    pub pos: Pos,
    pub alive: bool,
    pub ammo: u32,
    pub blast: u32,
}

/// Everything a policy or feature needs to know about the board.
#[derive(Debug, Clone, PartialEq)]
pub struct BoardView {
    pub size: usize,
    pub cells: Vec<Cell>,
    pub powerup: Vec<bool>,
    /// `(fuse, blast)` per cell holding a bomb.
    pub bombs: Vec<Option<(u32, u32)>>,
    pub flames: Vec<u32>,
    pub agents: Vec<AgentView>,
    pub id: usize,
    pub mode: Mode,
    pub tick: f64,
    pub step_limit: f64,
}

impl BoardView {
    pub fn from_state(st: &BomberState, id: usize, mode: Mode, step_limit: u32) -> Self {
        let mut bombs = vec![None; st.cells.len()];
        for b in &st.bombs {
            bombs[st.idx(b.pos)] = Some((b.fuse, b.blast));
        }
        Self {
            size: st.size,
            cells: st.cells.clone(),
            powerup: st.powerups.iter().map(Option::is_some).collect(),
            bombs,
            flames: st.flames.clone(),
            agents: st
                .agents
                .iter()
                .map(|a| AgentView { pos: a.pos, alive: a.alive, ammo: a.ammo, blast: a.blast })
                .collect(),
            id,
            mode,
            tick: st.tick as f64,
            step_limit: step_limit as f64,
        }
    }

    /// Rebuild from a raw (possibly rotated) observation. `None` when the
    /// value is not shaped like one.
    pub fn from_obs(obs: &Value) -> Option<Self> {
        let board = obs.get("board")?.as_grid()?;
        let [n, w, ch] = board.shape();
        if n != w || ch != 3 {
            return None;
        }
        let powerups = obs.get("powerups")?.as_grid()?;
        let bombs_g = obs.get("bombs")?.as_grid()?;
        let flames_g = obs.get("flames")?.as_grid()?;
        if powerups.shape() != [n, n, 2] || bombs_g.shape() != [n, n, 2] || flames_g.shape() != [n, n, 1] {
            return None;
        }
        let mut cells = Vec::with_capacity(n * n);
        let mut powerup = Vec::with_capacity(n * n);
        let mut bombs = Vec::with_capacity(n * n);
        let mut flames = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                cells.push(if board.get(r, c, 1) > 0.5 {
                    Cell::Rigid
                } else if board.get(r, c, 2) > 0.5 {
                    Cell::Wood
                } else {
                    Cell::Passage
                });
                powerup.push(powerups.get(r, c, 0) > 0.5 || powerups.get(r, c, 1) > 0.5);
                let fuse = bombs_g.get(r, c, 0);
                bombs.push((fuse > 0.0).then(|| (fuse as u32, bombs_g.get(r, c, 1) as u32)));
                flames.push(flames_g.get(r, c, 0).max(0.0) as u32);
            }
        }
        let agents = obs
            .get("agents")?
            .as_seq()?
            .iter()
            .map(|a| {
                let pos = a.get("pos")?.as_vector()?;
                Some(AgentView {
                    pos: (*pos.first()? as i32, *pos.get(1)? as i32),
                    alive: a.get("alive")?.as_discrete()? == 1,
                    ammo: a.scalar_at("ammo")? as u32,
                    blast: a.scalar_at("blast")? as u32,
                })
            })
            .collect::<Option<Vec<_>>>()?;
        let id = obs.get("id")?.as_discrete()? as usize;
        if id >= agents.len() {
            return None;
        }
        Some(Self {
            size: n,
            cells,
            powerup,
            bombs,
            flames,
            agents,
            id,
            mode: Mode::from_index(obs.get("mode")?.as_discrete()?)?,
            tick: obs.scalar_at("tick")?,
            step_limit: obs.scalar_at("step_limit")?,
        })
    }

    pub fn idx(&self, p: Pos) -> usize {
        p.0 as usize * self.size + p.1 as usize
    }

    pub fn on_board(&self, p: Pos) -> bool {
        p.0 >= 0 && p.1 >= 0 && (p.0 as usize) < self.size && (p.1 as usize) < self.size
    }

    pub fn me(&self) -> &AgentView {
        &self.agents[self.id]
    }

    /// Passage without a bomb.
    pub fn walkable(&self, p: Pos) -> bool {
        self.on_board(p) && self.cells[self.idx(p)] == Cell::Passage && self.bombs[self.idx(p)].is_none()
    }

    pub fn is_teammate(&self, other: usize) -> bool {
        other != self.id && self.mode == Mode::TwoVsTwo && other % 2 == self.id % 2
    }

    pub fn is_enemy(&self, other: usize) -> bool {
        other != self.id && !self.is_teammate(other)
    }

    /// Cells each bomb's explosion would cover, with chain reactions folded
    /// in: a cell's value is the number of ticks until it burns.
    pub fn danger(&self) -> Danger {
        let n = self.size * self.size;
        let mut bombs: Vec<(Pos, u32, u32)> = Vec::new();
        for i in 0..n {
            if let Some((fuse, blast)) = self.bombs[i] {
                bombs.push((((i / self.size) as i32, (i % self.size) as i32), fuse, blast));
            }
        }
        Danger::compute(self, &bombs)
    }

    /// As [`danger`](Self::danger) with one extra bomb.
    pub fn danger_with(&self, pos: Pos, fuse: u32, blast: u32) -> Danger {
        let n = self.size * self.size;
        let mut bombs = vec![(pos, fuse, blast)];
        for i in 0..n {
            if let Some((f, b)) = self.bombs[i] {
                let p = ((i / self.size) as i32, (i % self.size) as i32);
                if p != pos {
                    bombs.push((p, f, b));
                }
            }
        }
        Danger::compute(self, &bombs)
    }

    /// Breadth-first search over walkable cells (the start cell always
    /// counts). Returns the first action of the shortest path to the first
    /// cell satisfying `goal`, and the path length. Neighbours are expanded
    /// in action order, so ties go to the smaller action.
    pub fn path_to(&self, from: Pos, avoid: impl Fn(Pos) -> bool, goal: impl Fn(Pos) -> bool) -> Option<(u64, usize)> {
        if goal(from) {
            return Some((IDLE, 0));
        }
        let mut first = vec![None; self.size * self.size];
        let mut dist = vec![usize::MAX; self.size * self.size];
        dist[self.idx(from)] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(p) = queue.pop_front() {
            for a in [UP, DOWN, LEFT, RIGHT] {
                let (dr, dc) = delta(a).expect("direction");
                let q = (p.0 + dr, p.1 + dc);
                if !self.walkable(q) || avoid(q) || dist[self.idx(q)] != usize::MAX {
                    continue;
                }
                let qi = self.idx(q);
                dist[qi] = dist[self.idx(p)] + 1;
                first[qi] = if p == from { Some(a) } else { first[self.idx(p)] };
                if goal(q) {
                    return first[qi].map(|a| (a, dist[qi]));
                }
                queue.push_back(q);
            }
        }
        None
    }
}

/// Predicted explosion timing per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Danger {
    size: usize,
    /// Ticks until the cell burns, `None` when no known bomb reaches it.
    pub eta: Vec<Option<u32>>,
}

impl Danger {
    fn compute(view: &BoardView, bombs: &[(Pos, u32, u32)]) -> Danger {
        let rays = |&(pos, _, blast): &(Pos, u32, u32)| {
            let mut cells = vec![pos];
            for dir in [UP, DOWN, LEFT, RIGHT] {
                let (dr, dc) = delta(dir).expect("direction");
                for d in 1..=blast as i32 {
                    let p = (pos.0 + dr * d, pos.1 + dc * d);
                    if !view.on_board(p) || view.cells[view.idx(p)] == Cell::Rigid {
                        break;
                    }
                    cells.push(p);
                    if view.cells[view.idx(p)] == Cell::Wood {
                        break;
                    }
                }
            }
            cells
        };
        let reach: Vec<Vec<Pos>> = bombs.iter().map(rays).collect();
        // a bomb goes off at its own fuse or when another bomb's ray reaches it
        let mut when: Vec<u32> = bombs.iter().map(|b| b.1).collect();
        loop {
            let mut changed = false;
            for i in 0..bombs.len() {
                for j in 0..bombs.len() {
                    if i != j && reach[i].contains(&bombs[j].0) && when[i] < when[j] {
                        when[j] = when[i];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut eta = vec![None; view.size * view.size];
        for (cells, &t) in reach.iter().zip(&when) {
            for &p in cells {
                let e: &mut Option<u32> = &mut eta[view.idx(p)];
                *e = Some(e.map_or(t, |old| old.min(t)));
            }
        }
        Danger { size: view.size, eta }
    }

    pub fn threatened(&self, p: Pos) -> bool {
        self.eta[p.0 as usize * self.size + p.1 as usize].is_some()
    }
}

/// Legality of each action for agent `slot`, ignoring other agents:
/// idle always; a move when its target is an on-board passage without a
/// bomb; a bomb when the agent has ammo and nothing lies underfoot. Dead
/// agents may only idle.
pub fn legal_actions(view: &BoardView, slot: usize) -> [bool; NUM_ACTIONS] {
    let mut out = [false; NUM_ACTIONS];
    out[IDLE as usize] = true;
    let a = &view.agents[slot];
    if !a.alive {
        return out;
    }
    for dir in [UP, DOWN, LEFT, RIGHT] {
        let (dr, dc) = delta(dir).expect("direction");
        out[dir as usize] = view.walkable((a.pos.0 + dr, a.pos.1 + dc));
    }
    out[BOMB as usize] = a.ammo > 0 && view.bombs[view.idx(a.pos)].is_none();
    out
}
