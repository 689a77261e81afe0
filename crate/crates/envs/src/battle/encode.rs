//! Image-like observation encoders.

use marlkit_core::{Bundle, Error, Frame, Grid, Interface, Result, SpaceSpec, Specs, Value};

use super::{layout_of, units_from_obs, Scenario, Unit, UnitKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// 6 channels: ally hp, shield, cd, then enemy hp, shield, cd.
    FiveI,
    /// 16 channels: `side * 8 + kind * 4 + stat`, stat in hp, shield, cd, damage.
    ThreeITwoZ,
}

impl Layout {
    pub fn channels(self) -> usize {
        match self {
            Layout::FiveI => 6,
            Layout::ThreeITwoZ => 16,
        }
    }

    fn scenario(self) -> Scenario {
        match self {
            Layout::FiveI => Scenario::FiveI,
            Layout::ThreeITwoZ => Scenario::ThreeITwoZ,
        }
    }

    /// `(channel, value)` pairs written at the unit's cell.
    pub fn features(self, u: &Unit, enemy: bool) -> Vec<(usize, f64)> {
        let s = u.stats();
        let hp = u.hp as f64 / s.max_hp as f64;
        let shield = u.shield as f64 / s.max_shield as f64;
        let cd = u.cd as f64 / s.cooldown as f64;
        let side = usize::from(enemy);
        match self {
            Layout::FiveI => vec![(side * 3, hp), (side * 3 + 1, shield), (side * 3 + 2, cd)],
            Layout::ThreeITwoZ => {
                let base = side * 8 + u.kind.index() * 4;
                let top = UnitKind::ALL.iter().map(|k| k.stats().damage).max().expect("kinds") as f64;
                vec![(base, hp), (base + 1, shield), (base + 2, cd), (base + 3, s.damage as f64 / top)]
            }
        }
    }
}

/// Encodes the raw battle observation of each slot as a `[size, size, C]`
/// grid, egocentric by the slot's team.
pub struct ImgObs {
    layout: Layout,
    size: usize,
}

pub fn img_5i() -> Box<dyn Interface> {
    Box::new(ImgObs { layout: Layout::FiveI, size: 0 })
}

pub fn img_3i2z() -> Box<dyn Interface> {
    Box::new(ImgObs { layout: Layout::ThreeITwoZ, size: 0 })
}

impl ImgObs {
    pub fn new(layout: Layout, size: usize) -> Self {
        Self { layout, size }
    }

    pub fn encode(&self, obs: &Value) -> Result<Grid> {
        let units = units_from_obs(obs).ok_or_else(|| Error::mismatch("not a raw battle observation"))?;
        let own = obs
            .get("own")
            .and_then(Value::as_discrete)
            .and_then(|i| units.get(i as usize))
            .ok_or_else(|| Error::mismatch("observation lacks a valid own index"))?;
        let mut g = Grid::zeros([self.size, self.size, self.layout.channels()]);
        for u in units.iter().filter(|u| u.alive) {
            for (ch, x) in self.layout.features(u, u.team != own.team) {
                g.set(u.pos.0 as usize, u.pos.1 as usize, ch, x);
            }
        }
        Ok(g)
    }

    fn map(&self, obs: Bundle) -> Result<Bundle> {
        let slots = obs
            .iter()
            .enumerate()
            .map(|(i, o)| self.encode(o).map(Value::Grid).map_err(|e| e.at_slot(i)))
            .collect::<Result<Vec<_>>>()?;
        Bundle::new(slots)
    }
}

impl Interface for ImgObs {
    fn name(&self) -> String {
        match self.layout {
            Layout::FiveI => "battle.img5i".into(),
            Layout::ThreeITwoZ => "battle.img3i2z".into(),
        }
    }

    fn setup(&mut self, inner: &Specs) -> Result<Specs> {
        let want = self.layout.scenario();
        let roster = want.roster();
        for s in &inner.obs {
            let (kinds, size) = layout_of(s).ok_or_else(|| Error::Setup(format!("{} needs raw battle observations", self.name())))?;
            let expected: Vec<UnitKind> = roster.iter().chain(&roster).copied().collect();
            if kinds != expected {
                return Err(Error::Setup(format!("{} needs the {} scenario", self.name(), want.name())));
            }
            self.size = size;
        }
        Specs::new(
            vec![SpaceSpec::grid([self.size, self.size, self.layout.channels()], 0.0, 1.0); inner.len()],
            inner.act.clone(),
        )
    }

    fn reset(&mut self, obs: Bundle) -> Result<Bundle> {
        self.map(obs)
    }

    fn obs_trans(&mut self, frame: Frame) -> Result<Frame> {
        Ok(Frame { obs: self.map(frame.obs)?, ..frame })
    }

    fn act_trans(&mut self, actions: Bundle) -> Result<Bundle> {
        Ok(actions)
    }
}
