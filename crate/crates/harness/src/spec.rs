//! Match and tournament configuration, plus the compact command-line syntax
//! for pipelines and agent lists.

use std::path::PathBuf;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value as Json};

use crate::error::{config, HarnessError, Result};
use crate::params::ParamMap;

/// One interface layer: a registry name plus its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ItfSpec {
    pub name: String,
    pub params: ParamMap,
}

impl ItfSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), params: Map::new() }
    }

    pub fn with(mut self, key: &str, value: Json) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    /// Either `"name"` or `{"name": ..., params...}`.
    pub fn from_json(j: &Json) -> Result<Self> {
        match j {
            Json::String(s) => Ok(Self::new(s.clone())),
            Json::Object(m) => {
                let mut params = m.clone();
                match params.remove("name") {
                    Some(Json::String(name)) => Ok(Self { name, params }),
                    _ => Err(config(format!("interface entry needs a string \"name\": {j}"))),
                }
            }
            other => Err(config(format!("interface entry must be a name or an object, got {other}"))),
        }
    }

    pub fn to_json(&self) -> Json {
        let mut m = self.params.clone();
        m.insert("name".into(), Json::String(self.name.clone()));
        Json::Object(m)
    }
}

impl Serialize for ItfSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for ItfSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = Json::deserialize(d)?;
        ItfSpec::from_json(&j).map_err(serde::de::Error::custom)
    }
}

/// Which slots of the (wrapped) environment an agent entry drives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SlotSel {
    /// The next `n` unclaimed slots, in entry order.
    Count(usize),
    /// Exactly these slots.
    List(Vec<usize>),
}

impl Default for SlotSel {
    fn default() -> Self {
        SlotSel::Count(1)
    }
}

impl SlotSel {
    pub fn len(&self) -> usize {
        match self {
            SlotSel::Count(n) => *n,
            SlotSel::List(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn is_default_slots(s: &SlotSel) -> bool {
    *s == SlotSel::Count(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub params: ParamMap,
    #[serde(default, skip_serializing_if = "is_default_slots")]
    pub slots: SlotSel,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub agent_interface: Vec<ItfSpec>,
    /// Display name in tournament tables; defaults to `name`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl AgentSpec {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: Map::new(),
            slots: SlotSel::default(),
            agent_interface: Vec::new(),
            label: None,
        }
    }

    pub fn slots(mut self, slots: SlotSel) -> Self {
        self.slots = slots;
        self
    }

    pub fn interface(mut self, pipeline: Vec<ItfSpec>) -> Self {
        self.agent_interface = pipeline;
        self
    }

    pub fn param(mut self, key: &str, value: Json) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn display(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.name.clone())
    }
}

fn one() -> u64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchSpec {
    pub env: String,
    #[serde(default, skip_serializing_if = "Map::is_empty")]
    pub env_params: ParamMap,
    /// Innermost layer first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub env_interfaces: Vec<ItfSpec>,
    pub agents: Vec<AgentSpec>,
    #[serde(default = "one")]
    pub episodes: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<PathBuf>,
    /// Reverse the slot assignment of the entries on odd episodes.
    #[serde(default)]
    pub swap_sides: bool,
    #[serde(default)]
    pub parallel: bool,
}

impl MatchSpec {
    pub fn new(env: impl Into<String>, agents: Vec<AgentSpec>) -> Self {
        Self {
            env: env.into(),
            env_params: Map::new(),
            env_interfaces: Vec::new(),
            agents,
            episodes: 1,
            seed: 0,
            replay: None,
            swap_sides: false,
            parallel: false,
        }
    }

    /// The part of the spec that decides what happens in an episode; this is
    /// what replay headers carry.
    pub fn normalized(&self) -> MatchSpec {
        MatchSpec { replay: None, parallel: false, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TourneySpec {
    pub env: String,
    #[serde(default)]
    pub env_params: ParamMap,
    #[serde(default)]
    pub env_interfaces: Vec<ItfSpec>,
    pub entrants: Vec<AgentSpec>,
    pub episodes_per_pair: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub parallel: bool,
}

/// Split on top-level commas, ignoring those inside brackets.
pub fn split_top(s: &str, sep: char) -> Result<Vec<String>> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    let mut in_str = false;
    for ch in s.chars() {
        match ch {
            '"' => in_str = !in_str,
            '(' | '[' | '{' if !in_str => depth += 1,
            ')' | ']' | '}' if !in_str => depth -= 1,
            c if c == sep && depth == 0 && !in_str => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        if depth < 0 {
            return Err(HarnessError::Usage(format!("unbalanced brackets in {s:?}")));
        }
        cur.push(ch);
    }
    if depth != 0 || in_str {
        return Err(HarnessError::Usage(format!("unbalanced brackets in {s:?}")));
    }
    out.push(cur);
    Ok(out.into_iter().map(|p| p.trim().to_owned()).filter(|p| !p.is_empty()).collect())
}

/// `k=v` with `v` read as JSON when it parses, else as a string.
pub fn parse_kv(s: &str) -> Result<(String, Json)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| HarnessError::Usage(format!("expected key=value, got {s:?}")))?;
    let k = k.trim();
    if k.is_empty() {
        return Err(HarnessError::Usage(format!("empty key in {s:?}")));
    }
    let v = v.trim();
    let value = serde_json::from_str(v).unwrap_or_else(|_| Json::String(v.to_owned()));
    Ok((k.to_owned(), value))
}

/// `name` or `name(k=v;k=v)`; returns the rest after the closing paren.
fn parse_call(s: &str) -> Result<(String, ParamMap, &str)> {
    let Some(open) = s.find('(') else {
        let end = s.find(['*', '@']).unwrap_or(s.len());
        return Ok((s[..end].trim().to_owned(), Map::new(), &s[end..]));
    };
    let close = s
        .rfind(')')
        .filter(|&c| c > open)
        .ok_or_else(|| HarnessError::Usage(format!("missing ')' in {s:?}")))?;
    let mut params = Map::new();
    for kv in split_top(&s[open + 1..close], ';')? {
        let (k, v) = parse_kv(&kv)?;
        params.insert(k, v);
    }
    Ok((s[..open].trim().to_owned(), params, &s[close + 1..]))
}

fn check_name(name: &str, whole: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || "()[]{},;=".contains(c)) {
        return Err(HarnessError::Usage(format!("bad name in {whole:?}")));
    }
    Ok(())
}

/// A pipeline: either JSON (a list, innermost first) or the compact form
/// `a,b(k=v;k2=v2),c`, also innermost first.
pub fn parse_pipeline(s: &str) -> Result<Vec<ItfSpec>> {
    let t = s.trim();
    if t.starts_with('[') {
        let j: Json = serde_json::from_str(t).map_err(|e| HarnessError::Usage(format!("pipeline JSON: {e}")))?;
        let Json::Array(items) = j else { unreachable!("starts with a bracket") };
        return items.iter().map(ItfSpec::from_json).collect();
    }
    split_top(t, ',')?
        .iter()
        .map(|part| {
            let (name, params, rest) = parse_call(part)?;
            check_name(&name, part)?;
            if !rest.trim().is_empty() {
                return Err(HarnessError::Usage(format!("trailing text in {part:?}")));
            }
            Ok(ItfSpec { name, params })
        })
        .collect()
}

/// Comma-separated agent entries: `name`, `name(k=v)`, `name*K` (K slots)
/// or `name@i/j` (explicit slots).
pub fn parse_agents(s: &str) -> Result<Vec<AgentSpec>> {
    let parts = split_top(s.trim(), ',')?;
    if parts.is_empty() {
        return Err(HarnessError::Usage("empty agent list".into()));
    }
    parts
        .iter()
        .map(|part| {
            let (name, params, rest) = parse_call(part)?;
            check_name(&name, part)?;
            let rest = rest.trim();
            let slots = if let Some(k) = rest.strip_prefix('*') {
                SlotSel::Count(
                    k.trim().parse().map_err(|_| HarnessError::Usage(format!("bad slot count in {part:?}")))?,
                )
            } else if let Some(list) = rest.strip_prefix('@') {
                SlotSel::List(
                    list.split('/')
                        .map(|x| x.trim().parse())
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| HarnessError::Usage(format!("bad slot list in {part:?}")))?,
                )
            } else if rest.is_empty() {
                SlotSel::default()
            } else {
                return Err(HarnessError::Usage(format!("trailing text in {part:?}")));
            };
            Ok(AgentSpec { params, slots, ..AgentSpec::new(name) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn compact_pipeline() {
        let p = parse_pipeline("bomber.board_map, make_team(sizes=[2,2]),wrap.clip_reward(low=-1;high=1)").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[1].params["sizes"], json!([2, 2]));
        assert_eq!(p[2].params["low"], json!(-1));
    }

    #[test]
    fn json_pipeline_matches_compact() {
        let a = parse_pipeline(r#"[{"name":"pong.screen_obs","res":32},"map_to_vector"]"#).unwrap();
        let b = parse_pipeline("pong.screen_obs(res=32),map_to_vector").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn agent_lists() {
        let a = parse_agents("bomber.simple@0/2,random@1/3").unwrap();
        assert_eq!(a[0].slots, SlotSel::List(vec![0, 2]));
        let a = parse_agents("battle.hit_and_run*5,constant(action=8)*5").unwrap();
        assert_eq!(a[1].slots, SlotSel::Count(5));
        assert_eq!(a[1].params["action"], json!(8));
        assert!(parse_agents("random*x").is_err());
        assert!(parse_agents("ran dom").is_err());
        assert!(parse_agents("random(").is_err());
    }

    #[test]
    fn bare_strings_stay_strings() {
        assert_eq!(parse_kv("mode=2v2").unwrap().1, json!("2v2"));
        assert_eq!(parse_kv("scenario=5I").unwrap().1, json!("5I"));
        assert_eq!(parse_kv("step_limit=100").unwrap().1, json!(100));
    }

    #[test]
    fn match_spec_round_trips() {
        let j = json!({
            "env": "bomber", "env_params": {"mode": "2v2"},
            "env_interfaces": ["bomber.board_map"],
            "agents": [{"name": "bomber.simple", "slots": [0, 2]}, {"name": "random", "slots": [1, 3]}],
            "episodes": 4, "seed": 7, "swap_sides": true
        });
        let m: MatchSpec = serde_json::from_value(j).unwrap();
        let back: MatchSpec = serde_json::from_value(serde_json::to_value(&m).unwrap()).unwrap();
        assert_eq!(m, back);
        assert!(serde_json::from_value::<MatchSpec>(json!({"env": "x", "agents": [], "bogus": 1})).is_err());
    }
}
