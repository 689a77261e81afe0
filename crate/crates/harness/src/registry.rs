//! Name-to-constructor tables for environments, interfaces and agents.

use marlkit_core::interface::{concat_obs_act, dead_padding, make_team, map_to_vector};
use marlkit_core::testkit::{ConstEnv, DigestAgent, TickEnv};
use marlkit_core::{
    canon, combine, identity, lift_single_wrapper, per_slot, pipeline, Agent, BoxedInterface, ClipReward,
    ConstantAgent, Env, RandomAgent, RngStream, ScaleObs, SlotPartition, Value,
};
use marlkit_envs::battle::{img_3i2z, img_5i, BattleConfig, BattleEnv, HitAndRun, Scenario};
use marlkit_envs::bomber::{self, BomberConfig, BomberEnv, Mode, SimpleAgent};
use marlkit_envs::pong::{screen_obs, FollowBall, PongConfig, PongEnv};
use serde_json::Value as Json;

use crate::error::{config, HarnessError, Result};
use crate::params::{ParamMap, Params};
use crate::spec::ItfSpec;

pub const ENVS: &[(&str, &str)] = &[
    ("pong2p", "two-paddle pong; params field_w field_h paddle_len paddle_speed ball_speed0 speedup max_speed max_deflect_deg win_score step_limit"),
    ("gridbattle", "8x8 five-a-side battle; params scenario (5I | 3I2Z) randomize_status randomize_positions step_limit size"),
    ("bomber", "four-player bomb grid; params mode (ffa | 2v2) step_limit size bomb_life flame_life ammo blast wood_density powerup_prob"),
    ("const", "one slot, one step, always a draw"),
    ("tick", "counter game for plumbing checks; params slots modulus length"),
];

pub const INTERFACES: &[(&str, &str)] = &[
    ("identity", "pass-through"),
    ("map_to_vector", "flatten mapping observations to one vector; param one_hot"),
    ("make_team", "group slots into teams; param groups or sizes (default: env teams / whole entry)"),
    ("concat_obs_act", "concatenate member vectors per group; param groups or sizes"),
    ("dead_pad", "add an alive flag and zero dead slots' observations (alias battle.dead_pad)"),
    ("combine", "children over a base; params base (pipeline) children (list of pipelines) groups or sizes"),
    ("per_agent", "one pipeline per slot; param children"),
    ("pong.screen_obs", "rasterise pong to an image; param res (default 32)"),
    ("battle.img5i", "8x8x6 battle image, 9 actions"),
    ("battle.img3i2z", "8x8x16 battle image, 9 actions"),
    ("bomber.board_map", "add an 8-channel board map"),
    ("bomber.attr", "add ammo, blast, alive and time features"),
    ("bomber.act_mask", "add the legal-action mask"),
    ("bomber.rotate", "turn each slot's view so it starts top-left; remaps actions"),
    ("wrap.scale_obs", "multiply observations by factor"),
    ("wrap.clip_reward", "clamp rewards to [low, high]"),
];

pub const AGENTS: &[(&str, &str)] = &[
    ("random", "uniform over the action space"),
    ("constant", "always the same action; param action (integer or canonical value JSON)"),
    ("digest", "deterministic function of everything observed"),
    ("pong.follow_ball", "moves toward the ball's height; param deadzone"),
    ("battle.hit_and_run", "attack when ready, retreat on cooldown"),
    ("bomber.simple", "flee, bomb with an exit, chase; param bomb_life"),
];

fn unknown(kind: &'static str, name: &str) -> HarnessError {
    HarnessError::Registry { kind, name: name.to_owned() }
}

pub fn build_env(name: &str, params: &ParamMap) -> Result<Box<dyn Env>> {
    let mut p = Params::new(name, params);
    let env: Box<dyn Env> = match name {
        "pong2p" => {
            let d = PongConfig::default();
            let cfg = PongConfig {
                field_w: p.f64("field_w")?.unwrap_or(d.field_w),
                field_h: p.f64("field_h")?.unwrap_or(d.field_h),
                paddle_len: p.f64("paddle_len")?.unwrap_or(d.paddle_len),
                paddle_speed: p.f64("paddle_speed")?.unwrap_or(d.paddle_speed),
                ball_speed0: p.f64("ball_speed0")?.unwrap_or(d.ball_speed0),
                speedup: p.f64("speedup")?.unwrap_or(d.speedup),
                max_speed: p.f64("max_speed")?.unwrap_or(d.max_speed),
                max_deflect_deg: p.f64("max_deflect_deg")?.unwrap_or(d.max_deflect_deg),
                win_score: p.u32("win_score")?.unwrap_or(d.win_score),
                step_limit: p.u32("step_limit")?.unwrap_or(d.step_limit),
            };
            p.finish()?;
            Box::new(PongEnv::new(cfg)?)
        }
        "gridbattle" => {
            let d = BattleConfig::default();
            let scenario = match p.string("scenario")? {
                Some(s) => Scenario::parse(&s)?,
                None => d.scenario,
            };
            let cfg = BattleConfig {
                size: p.usize("size")?.unwrap_or(d.size),
                scenario,
                randomize_status: p.bool("randomize_status")?.unwrap_or(d.randomize_status),
                randomize_positions: p.bool("randomize_positions")?.unwrap_or(d.randomize_positions),
                step_limit: p.u32("step_limit")?.unwrap_or(d.step_limit),
            };
            p.finish()?;
            Box::new(BattleEnv::new(cfg)?)
        }
        "bomber" => {
            let d = BomberConfig::default();
            let mode = match p.string("mode")? {
                Some(s) => Mode::parse(&s)?,
                None => d.mode,
            };
            let cfg = BomberConfig {
                size: p.usize("size")?.unwrap_or(d.size),
                mode,
                step_limit: p.u32("step_limit")?.unwrap_or(d.step_limit),
                bomb_life: p.u32("bomb_life")?.unwrap_or(d.bomb_life),
                flame_life: p.u32("flame_life")?.unwrap_or(d.flame_life),
                ammo: p.u32("ammo")?.unwrap_or(d.ammo),
                blast: p.u32("blast")?.unwrap_or(d.blast),
                wood_density: p.f64("wood_density")?.unwrap_or(d.wood_density),
                powerup_prob: p.f64("powerup_prob")?.unwrap_or(d.powerup_prob),
            };
            p.finish()?;
            Box::new(BomberEnv::new(cfg)?)
        }
        "const" => {
            p.finish()?;
            Box::new(ConstEnv::default())
        }
        "tick" => {
            let slots = p.usize("slots")?.unwrap_or(2);
            let modulus = p.u64("modulus")?.unwrap_or(7);
            let length = p.u32("length")?.unwrap_or(10);
            p.finish()?;
            if slots == 0 || modulus == 0 || length == 0 {
                return Err(config("tick: slots, modulus and length must be positive"));
            }
            Box::new(TickEnv::new(slots, modulus, length))
        }
        other => return Err(unknown("environment", other)),
    };
    Ok(env)
}

/// What an interface may assume about where it sits.
#[derive(Debug, Clone, Default)]
pub struct BuildCtx {
    /// Groups used by `make_team` / `concat_obs_act` when none are given.
    pub default_groups: Option<Vec<Vec<usize>>>,
}

impl BuildCtx {
    fn nested(&self) -> BuildCtx {
        BuildCtx { default_groups: None }
    }
}

fn partition(p: &mut Params, ctx: &BuildCtx, who: &str) -> Result<SlotPartition> {
    match (p.groups("groups")?, p.sizes("sizes")?) {
        (Some(_), Some(_)) => Err(config(format!("{who}: give groups or sizes, not both"))),
        (Some(g), None) => Ok(SlotPartition::from_groups(g)?),
        (None, Some(s)) => Ok(SlotPartition::from_sizes(s)?),
        (None, None) => match &ctx.default_groups {
            Some(g) => SlotPartition::from_groups(g.clone()).map_err(|e| {
                config(format!("{who}: default groups {g:?} are unusable ({e}); pass groups or sizes"))
            }),
            None => Err(config(format!("{who}: needs groups or sizes here"))),
        },
    }
}

fn pipeline_param(j: &Json, who: &str) -> Result<Vec<ItfSpec>> {
    match j {
        Json::Array(items) => items.iter().map(ItfSpec::from_json).collect(),
        Json::String(_) | Json::Object(_) => Ok(vec![ItfSpec::from_json(j)?]),
        other => Err(config(format!("{who}: expected a pipeline, got {other}"))),
    }
}

fn children_param(p: &mut Params, who: &str) -> Result<Vec<Vec<ItfSpec>>> {
    match p.raw("children") {
        Some(Json::Array(items)) => items.iter().map(|c| pipeline_param(c, who)).collect(),
        Some(other) => Err(config(format!("{who}: children must be a list, got {other}"))),
        None => Err(config(format!("{who}: missing children"))),
    }
}

pub fn build_itf(spec: &ItfSpec, ctx: &BuildCtx) -> Result<BoxedInterface> {
    let name = spec.name.as_str();
    let mut p = Params::new(name, &spec.params);
    let itf = match name {
        "identity" => identity(),
        "map_to_vector" => map_to_vector(p.bool("one_hot")?.unwrap_or(false)),
        "make_team" => make_team(partition(&mut p, ctx, name)?),
        "concat_obs_act" => concat_obs_act(partition(&mut p, ctx, name)?),
        "dead_pad" | "battle.dead_pad" => dead_padding(),
        "combine" => {
            let base = match p.raw("base") {
                Some(j) => build_pipeline(&pipeline_param(&j, name)?, &ctx.nested())?,
                None => identity(),
            };
            let children = children_param(&mut p, name)?
                .iter()
                .map(|c| build_pipeline(c, &ctx.nested()))
                .collect::<Result<Vec<_>>>()?;
            let part = partition(&mut p, &ctx.nested(), name)?;
            combine(base, children, part)?
        }
        "per_agent" => {
            let children = children_param(&mut p, name)?
                .iter()
                .map(|c| build_pipeline(c, &ctx.nested()))
                .collect::<Result<Vec<_>>>()?;
            per_slot(children)?
        }
        "pong.screen_obs" => screen_obs(p.usize("res")?.unwrap_or(32)),
        "battle.img5i" => img_5i(),
        "battle.img3i2z" => img_3i2z(),
        "bomber.board_map" => bomber::board_map(),
        "bomber.attr" => bomber::attr(),
        "bomber.act_mask" => bomber::act_mask(),
        "bomber.rotate" => bomber::rotate(),
        "wrap.scale_obs" => {
            let k = p.f64("factor")?.ok_or_else(|| config("wrap.scale_obs: missing factor"))?;
            lift_single_wrapper(move || ScaleObs(k))
        }
        "wrap.clip_reward" => {
            let low = p.f64("low")?.unwrap_or(-1.0);
            let high = p.f64("high")?.unwrap_or(1.0);
            lift_single_wrapper(move || ClipReward { low, high })
        }
        other => return Err(unknown("interface", other)),
    };
    p.finish()?;
    Ok(itf)
}

/// Layers innermost first; an empty list is the identity.
pub fn build_pipeline(specs: &[ItfSpec], ctx: &BuildCtx) -> Result<BoxedInterface> {
    if specs.is_empty() {
        return Ok(identity());
    }
    let layers = specs.iter().map(|s| build_itf(s, ctx)).collect::<Result<Vec<_>>>()?;
    Ok(pipeline(layers))
}

pub fn build_agent(name: &str, params: &ParamMap, rng: RngStream) -> Result<Box<dyn Agent>> {
    let mut p = Params::new(name, params);
    let agent: Box<dyn Agent> = match name {
        "random" => Box::new(RandomAgent::new(rng)),
        "constant" => {
            let action = match p.raw("action") {
                Some(Json::Number(n)) => Value::Discrete(
                    n.as_u64().ok_or_else(|| config("constant: action must be a non-negative integer"))?,
                ),
                Some(j) => canon::value_from_json(&j)?,
                None => Value::Discrete(0),
            };
            Box::new(ConstantAgent::new(action))
        }
        "digest" => Box::new(DigestAgent::default()),
        "pong.follow_ball" => {
            let d = FollowBall::default();
            Box::new(FollowBall { deadzone: p.f64("deadzone")?.unwrap_or(d.deadzone) })
        }
        "battle.hit_and_run" => Box::new(HitAndRun::default()),
        "bomber.simple" => {
            let d = SimpleAgent::default();
            Box::new(SimpleAgent { bomb_life: p.u32("bomb_life")?.unwrap_or(d.bomb_life) })
        }
        other => return Err(unknown("agent", other)),
    };
    p.finish()?;
    Ok(agent)
}
