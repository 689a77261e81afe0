//! Canonical encodings of [`Value`]s.
//!
//! Text form (used in replays), one JSON object per value with a one-letter
//! variant tag:
//!
//! ```text
//! {"d":3}                                   Discrete
//! {"v":[1.0,-0.5]}                          Vector
//! {"g":{"data":[...],"shape":[h,w,c]}}      Grid
//! {"m":{"a":{...},"b":{...}}}               Mapping, keys ascending
//! {"s":[{...},{...}]}                       Seq
//! ```
//!
//! Output is compact (no whitespace) with object keys in ascending byte
//! order. Finite reals are written in shortest round-trip form; non-finite
//! reals are the strings `"nan"`, `"inf"` and `"-inf"` (NaN payloads are not
//! preserved).
//!
//! Binary form (used for hashing): a tag byte (`0` discrete, `1` vector,
//! `2` grid, `3` mapping, `4` seq) followed by little-endian `u64` counts /
//! indices and little-endian IEEE-754 bits for reals; mapping keys are
//! length-prefixed UTF-8.

use serde_json::{Map, Number, Value as Json};
use sha2::{Digest, Sha256};

use crate::bundle::Bundle;
use crate::error::{Error, Result};
use crate::value::{Grid, Value};

fn real_to_json(x: f64) -> Json {
    match Number::from_f64(x) {
        Some(n) => Json::Number(n),
        None if x.is_nan() => Json::String("nan".into()),
        None if x > 0.0 => Json::String("inf".into()),
        None => Json::String("-inf".into()),
    }
}

fn real_from_json(j: &Json) -> Result<f64> {
    match j {
        Json::Number(n) => n
            .as_f64()
            .ok_or_else(|| Error::Format(format!("number {n} is not representable"))),
        Json::String(s) => match s.as_str() {
            "nan" => Ok(f64::NAN),
            "inf" => Ok(f64::INFINITY),
            "-inf" => Ok(f64::NEG_INFINITY),
            other => Err(Error::Format(format!("bad real {other:?}"))),
        },
        other => Err(Error::Format(format!("expected a real, got {other}"))),
    }
}

fn reals_to_json(xs: &[f64]) -> Json {
    Json::Array(xs.iter().copied().map(real_to_json).collect())
}

fn reals_from_json(j: &Json) -> Result<Vec<f64>> {
    j.as_array()
        .ok_or_else(|| Error::Format("expected an array of reals".into()))?
        .iter()
        .map(real_from_json)
        .collect()
}

fn tagged(tag: &str, payload: Json) -> Json {
    let mut m = Map::new();
    m.insert(tag.to_owned(), payload);
    Json::Object(m)
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Discrete(i) => tagged("d", Json::Number((*i).into())),
        Value::Vector(xs) => tagged("v", reals_to_json(xs)),
        Value::Grid(g) => {
            let mut m = Map::new();
            m.insert("data".into(), reals_to_json(g.data()));
            m.insert(
                "shape".into(),
                Json::Array(g.shape().iter().map(|&d| Json::Number(d.into())).collect()),
            );
            tagged("g", Json::Object(m))
        }
        Value::Mapping(entries) => tagged(
            "m",
            Json::Object(entries.iter().map(|(k, x)| (k.clone(), value_to_json(x))).collect()),
        ),
        Value::Seq(items) => tagged("s", Json::Array(items.iter().map(value_to_json).collect())),
    }
}

pub fn value_from_json(j: &Json) -> Result<Value> {
    let obj = j
        .as_object()
        .ok_or_else(|| Error::Format(format!("expected a tagged object, got {j}")))?;
    if obj.len() != 1 {
        return Err(Error::Format(format!("tagged object needs exactly one key, got {}", obj.len())));
    }
    let (tag, payload) = obj.iter().next().expect("one entry");
    match tag.as_str() {
        "d" => payload
            .as_u64()
            .map(Value::Discrete)
            .ok_or_else(|| Error::Format(format!("bad discrete index {payload}"))),
        "v" => Ok(Value::Vector(reals_from_json(payload)?)),
        "g" => {
            let g = payload
                .as_object()
                .ok_or_else(|| Error::Format("grid payload must be an object".into()))?;
            if g.len() != 2 {
                return Err(Error::Format("grid payload needs exactly data and shape".into()));
            }
            let shape = g
                .get("shape")
                .and_then(Json::as_array)
                .ok_or_else(|| Error::Format("grid shape missing".into()))?;
            let dims: Vec<usize> = shape
                .iter()
                .map(|d| d.as_u64().and_then(|d| usize::try_from(d).ok()))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::Format("grid shape must be non-negative integers".into()))?;
            let shape: [usize; 3] = dims
                .try_into()
                .map_err(|_| Error::Format("grid shape must have three dimensions".into()))?;
            let data = reals_from_json(
                g.get("data")
                    .ok_or_else(|| Error::Format("grid data missing".into()))?,
            )?;
            Ok(Value::Grid(Grid::new(shape, data)?))
        }
        "m" => {
            let m = payload
                .as_object()
                .ok_or_else(|| Error::Format("mapping payload must be an object".into()))?;
            m.iter()
                .map(|(k, x)| Ok((k.clone(), value_from_json(x)?)))
                .collect::<Result<_>>()
                .map(Value::Mapping)
        }
        "s" => payload
            .as_array()
            .ok_or_else(|| Error::Format("seq payload must be an array".into()))?
            .iter()
            .map(value_from_json)
            .collect::<Result<_>>()
            .map(Value::Seq),
        other => Err(Error::Format(format!("unknown value tag {other:?}"))),
    }
}

/// Canonical compact text of a value.
pub fn to_canonical_string(v: &Value) -> String {
    value_to_json(v).to_string()
}

/// Parse a value from text. Accepts any JSON spelling of the tagged form.
pub fn from_str(s: &str) -> Result<Value> {
    let j: Json = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
    value_from_json(&j)
}

pub fn bundle_to_json(b: &Bundle) -> Json {
    Json::Array(b.iter().map(value_to_json).collect())
}

pub fn bundle_from_json(j: &Json) -> Result<Bundle> {
    let items = j
        .as_array()
        .ok_or_else(|| Error::Format("bundle must be an array".into()))?;
    let slots = items.iter().map(value_from_json).collect::<Result<Vec<_>>>()?;
    Bundle::new(slots).map_err(|_| Error::Format("bundle must not be empty".into()))
}

/// Append the canonical little-endian binary form of `v` to `out`.
pub fn write_bytes(v: &Value, out: &mut Vec<u8>) {
    fn put_u64(out: &mut Vec<u8>, x: u64) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    fn put_reals(out: &mut Vec<u8>, xs: &[f64]) {
        for x in xs {
            out.extend_from_slice(&x.to_bits().to_le_bytes());
        }
    }
    match v {
        Value::Discrete(i) => {
            out.push(0);
            put_u64(out, *i);
        }
        Value::Vector(xs) => {
            out.push(1);
            put_u64(out, xs.len() as u64);
            put_reals(out, xs);
        }
        Value::Grid(g) => {
            out.push(2);
            for d in g.shape() {
                put_u64(out, d as u64);
            }
            put_reals(out, g.data());
        }
        Value::Mapping(m) => {
            out.push(3);
            put_u64(out, m.len() as u64);
            for (k, x) in m {
                put_u64(out, k.len() as u64);
                out.extend_from_slice(k.as_bytes());
                write_bytes(x, out);
            }
        }
        Value::Seq(items) => {
            out.push(4);
            put_u64(out, items.len() as u64);
            for x in items {
                write_bytes(x, out);
            }
        }
    }
}

pub fn bundle_bytes(b: &Bundle) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&(b.len() as u64).to_le_bytes());
    for v in b {
        write_bytes(v, &mut out);
    }
    out
}

/// First eight bytes (little-endian) of the SHA-256 of the concatenated parts.
pub fn hash64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn value_hash(v: &Value) -> u64 {
    let mut bytes = Vec::new();
    write_bytes(v, &mut bytes);
    hash64(&[&bytes])
}
