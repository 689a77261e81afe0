//! Space descriptors and the operations defined over them.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::value::{Grid, Value};

/// Describes the set of admissible values for one observation or action slot.
///
/// A `Box` with a one-element shape `[len]` admits `Value::Vector`s of that
/// length; a three-element shape `[h, w, c]` admits `Value::Grid`s.
#[derive(Debug, Clone, PartialEq)]
pub enum SpaceSpec {
    Discrete(u64),
    Box {
        shape: Vec<usize>,
        low: f64,
        high: f64,
    },
    Mapping(BTreeMap<String, SpaceSpec>),
    Seq(Vec<SpaceSpec>),
}

impl SpaceSpec {
    pub fn vector(len: usize, low: f64, high: f64) -> Self {
        SpaceSpec::Box {
            shape: vec![len],
            low,
            high,
        }
    }

    pub fn grid(shape: [usize; 3], low: f64, high: f64) -> Self {
        SpaceSpec::Box {
            shape: shape.to_vec(),
            low,
            high,
        }
    }

    pub fn mapping<K: Into<String>>(entries: impl IntoIterator<Item = (K, SpaceSpec)>) -> Self {
        SpaceSpec::Mapping(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    /// Check the structural invariants (`n >= 1`, `low <= high`, shape rank).
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Discrete(0) => Err(Error::Config("discrete space needs n >= 1".into())),
            SpaceSpec::Discrete(_) => Ok(()),
            SpaceSpec::Box { shape, low, high } => {
                if shape.len() != 1 && shape.len() != 3 {
                    return Err(Error::Config(format!("box shape {shape:?} must be [len] or [h,w,c]")));
                }
                // NaN bounds fail this comparison too.
                if !(low <= high) {
                    return Err(Error::Config(format!("box bounds [{low}, {high}] are inverted")));
                }
                Ok(())
            }
            SpaceSpec::Mapping(m) => m.values().try_for_each(SpaceSpec::validate),
            SpaceSpec::Seq(s) => s.iter().try_for_each(SpaceSpec::validate),
        }
    }

    pub fn contains(&self, v: &Value) -> bool {
        space_contains(self, v)
    }

    /// Number of scalars `flatten` produces for a value of this space
    /// (discretes count as one scalar).
    pub fn flat_len(&self) -> usize {
        match self {
            SpaceSpec::Discrete(_) => 1,
            SpaceSpec::Box { shape, .. } => shape.iter().product(),
            SpaceSpec::Mapping(m) => m.values().map(SpaceSpec::flat_len).sum(),
            SpaceSpec::Seq(s) => s.iter().map(SpaceSpec::flat_len).sum(),
        }
    }

    /// Flattened length when discretes are one-hot encoded.
    pub fn one_hot_len(&self) -> usize {
        match self {
            SpaceSpec::Discrete(n) => *n as usize,
            SpaceSpec::Box { shape, .. } => shape.iter().product(),
            SpaceSpec::Mapping(m) => m.values().map(SpaceSpec::one_hot_len).sum(),
            SpaceSpec::Seq(s) => s.iter().map(SpaceSpec::one_hot_len).sum(),
        }
    }

    /// Tightest `[low, high]` enclosing every flattened scalar.
    pub fn flat_bounds(&self, one_hot: bool) -> (f64, f64) {
        match self {
            SpaceSpec::Discrete(_) if one_hot => (0.0, 1.0),
            SpaceSpec::Discrete(n) => (0.0, (*n - 1) as f64),
            SpaceSpec::Box { low, high, .. } => (*low, *high),
            SpaceSpec::Mapping(m) => fold_bounds(m.values().map(|s| s.flat_bounds(one_hot))),
            SpaceSpec::Seq(s) => fold_bounds(s.iter().map(|s| s.flat_bounds(one_hot))),
        }
    }

    pub fn sample(&self, rng: &mut RngStream) -> Value {
        space_sample(self, rng)
    }

    /// A member of the space with every scalar as close to zero as the bounds allow.
    pub fn zero_value(&self) -> Value {
        match self {
            SpaceSpec::Discrete(_) => Value::Discrete(0),
            SpaceSpec::Box { shape, low, high } => {
                let z = 0.0f64.clamp(*low, *high);
                let n: usize = shape.iter().product();
                box_value(shape, vec![z; n])
            }
            SpaceSpec::Mapping(m) => {
                Value::Mapping(m.iter().map(|(k, s)| (k.clone(), s.zero_value())).collect())
            }
            SpaceSpec::Seq(s) => Value::Seq(s.iter().map(SpaceSpec::zero_value).collect()),
        }
    }
}

fn fold_bounds(it: impl Iterator<Item = (f64, f64)>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (l, h) in it {
        lo = lo.min(l);
        hi = hi.max(h);
    }
    if lo > hi {
        (0.0, 0.0)
    } else {
        (lo, hi)
    }
}

fn box_value(shape: &[usize], data: Vec<f64>) -> Value {
    match shape {
        [_] => Value::Vector(data),
        [h, w, c] => Value::Grid(Grid::new([*h, *w, *c], data).expect("shape matches data")),
        _ => panic!("box shape {shape:?} must be [len] or [h,w,c]"),
    }
}

fn in_bounds(xs: &[f64], low: f64, high: f64) -> bool {
    xs.iter().all(|x| *x >= low && *x <= high)
}

/// True iff `v` structurally matches `spec`, every real lies in the box
/// bounds and every discrete index is below its `n`.
pub fn space_contains(spec: &SpaceSpec, v: &Value) -> bool {
    match (spec, v) {
        (SpaceSpec::Discrete(n), Value::Discrete(i)) => i < n,
        (SpaceSpec::Box { shape, low, high }, Value::Vector(xs)) => {
            shape.len() == 1 && shape[0] == xs.len() && in_bounds(xs, *low, *high)
        }
        (SpaceSpec::Box { shape, low, high }, Value::Grid(g)) => {
            shape.as_slice() == g.shape() && in_bounds(g.data(), *low, *high)
        }
        (SpaceSpec::Mapping(ms), Value::Mapping(mv)) => {
            ms.len() == mv.len()
                && ms
                    .iter()
                    .zip(mv)
                    .all(|((ks, s), (kv, x))| ks == kv && space_contains(s, x))
        }
        (SpaceSpec::Seq(ss), Value::Seq(sv)) => {
            ss.len() == sv.len() && ss.iter().zip(sv).all(|(s, x)| space_contains(s, x))
        }
        _ => false,
    }
}

fn sample_real(rng: &mut RngStream, low: f64, high: f64) -> f64 {
    if low == high {
        return low;
    }
    // Unbounded sides are sampled within one unit of the finite bound (or of 0).
    let (lo, hi) = match (low.is_finite(), high.is_finite()) {
        (true, true) => (low, high),
        (true, false) => (low, low + 1.0),
        (false, true) => (high - 1.0, high),
        (false, false) => (-1.0, 1.0),
    };
    let x = if (hi - lo).is_finite() {
        rng.gen_range(lo..=hi)
    } else {
        // span overflows f64; interpolate instead of subtracting
        let t: f64 = rng.gen();
        lo * (1.0 - t) + hi * t
    };
    x.clamp(low, high)
}

/// Draw a member of `spec` from `rng`.
pub fn space_sample(spec: &SpaceSpec, rng: &mut RngStream) -> Value {
    match spec {
        SpaceSpec::Discrete(n) => Value::Discrete(rng.gen_range(0..(*n).max(1))),
        SpaceSpec::Box { shape, low, high } => {
            let n: usize = shape.iter().product();
            let data = (0..n).map(|_| sample_real(rng, *low, *high)).collect();
            box_value(shape, data)
        }
        SpaceSpec::Mapping(m) => {
            Value::Mapping(m.iter().map(|(k, s)| (k.clone(), space_sample(s, rng))).collect())
        }
        SpaceSpec::Seq(s) => Value::Seq(s.iter().map(|s| space_sample(s, rng)).collect()),
    }
}

/// Canonical flattening: mappings by ascending key, sequences in order,
/// grids row-major, each discrete as its index.
pub fn flatten(v: &Value) -> Value {
    let mut out = Vec::with_capacity(v.scalar_count());
    flatten_into(v, None, &mut out);
    Value::Vector(out)
}

/// Like [`flatten`], but discretes matched by a `Discrete(n)` spec are one-hot
/// encoded with length `n`. Parts of `v` that don't line up with `spec` fall
/// back to the spec-free encoding.
pub fn flatten_with_spec(v: &Value, spec: &SpaceSpec) -> Value {
    let mut out = Vec::new();
    flatten_into(v, Some(spec), &mut out);
    Value::Vector(out)
}

fn flatten_into(v: &Value, spec: Option<&SpaceSpec>, out: &mut Vec<f64>) {
    match v {
        Value::Discrete(i) => match spec {
            Some(SpaceSpec::Discrete(n)) if i < n => {
                let start = out.len();
                out.resize(start + *n as usize, 0.0);
                out[start + *i as usize] = 1.0;
            }
            _ => out.push(*i as f64),
        },
        Value::Vector(xs) => out.extend_from_slice(xs),
        Value::Grid(g) => out.extend_from_slice(g.data()),
        Value::Mapping(m) => {
            let specs = match spec {
                Some(SpaceSpec::Mapping(ms)) => Some(ms),
                _ => None,
            };
            for (k, x) in m {
                flatten_into(x, specs.and_then(|ms| ms.get(k)), out);
            }
        }
        Value::Seq(items) => {
            let specs = match spec {
                Some(SpaceSpec::Seq(ss)) if ss.len() == items.len() => Some(ss),
                _ => None,
            };
            for (i, x) in items.iter().enumerate() {
                flatten_into(x, specs.map(|ss| &ss[i]), out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_of(shape: [usize; 3], x: f64) -> Value {
        Value::Grid(Grid::new(shape, vec![x; shape.iter().product()]).unwrap())
    }

    #[test]
    fn discrete_membership_boundaries() {
        assert!(space_contains(&SpaceSpec::Discrete(9), &Value::Discrete(8)));
        assert!(!space_contains(&SpaceSpec::Discrete(9), &Value::Discrete(9)));
    }

    #[test]
    fn grid_feature_map_membership() {
        let spec = SpaceSpec::grid([8, 8, 6], 0.0, 1.0);
        assert!(space_contains(&spec, &grid_of([8, 8, 6], 0.5)));
        assert!(!space_contains(&spec, &grid_of([8, 8, 6], 1.5)));
        assert!(!space_contains(&spec, &grid_of([8, 6, 8], 0.5)));
        assert!(!space_contains(&spec, &Value::Vector(vec![0.5; 384])));
    }

    #[test]
    fn nan_is_never_contained() {
        let spec = SpaceSpec::vector(1, f64::NEG_INFINITY, f64::INFINITY);
        assert!(!space_contains(&spec, &Value::scalar(f64::NAN)));
        assert!(space_contains(&spec, &Value::scalar(1e300)));
    }

    #[test]
    fn mapping_requires_identical_keys() {
        let spec = SpaceSpec::mapping([("a", SpaceSpec::Discrete(2))]);
        assert!(space_contains(&spec, &Value::mapping([("a", Value::Discrete(1))])));
        assert!(!space_contains(&spec, &Value::mapping([("b", Value::Discrete(1))])));
        assert!(!space_contains(
            &spec,
            &Value::mapping([("a", Value::Discrete(1)), ("b", Value::Discrete(0))])
        ));
    }

    #[test]
    fn singleton_and_degenerate_samples() {
        let mut rng = RngStream::new(3);
        assert_eq!(space_sample(&SpaceSpec::Discrete(1), &mut rng), Value::Discrete(0));
        assert_eq!(
            space_sample(&SpaceSpec::vector(2, 0.0, 0.0), &mut rng),
            Value::Vector(vec![0.0, 0.0])
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let a: Vec<Value> = {
            let mut r = RngStream::new(42);
            (0..20).map(|_| space_sample(&SpaceSpec::Discrete(6), &mut r)).collect()
        };
        let b: Vec<Value> = {
            let mut r = RngStream::new(42);
            (0..20).map(|_| space_sample(&SpaceSpec::Discrete(6), &mut r)).collect()
        };
        assert_eq!(a, b);
    }

    #[test]
    fn unbounded_box_samples_stay_in_space() {
        let mut rng = RngStream::new(5);
        for spec in [
            SpaceSpec::vector(4, f64::NEG_INFINITY, f64::INFINITY),
            SpaceSpec::vector(4, 2.0, f64::INFINITY),
            SpaceSpec::vector(4, f64::MIN, f64::MAX),
        ] {
            for _ in 0..50 {
                assert!(space_contains(&spec, &space_sample(&spec, &mut rng)));
            }
        }
    }

    #[test]
    fn flatten_orders_mapping_keys() {
        let v = Value::mapping([
            ("b", Value::Vector(vec![3.0])),
            ("a", Value::Vector(vec![1.0, 2.0])),
        ]);
        assert_eq!(flatten(&v), Value::Vector(vec![1.0, 2.0, 3.0]));
    }

    #[test]
    fn flatten_grid_is_row_major() {
        let g = Value::Grid(Grid::new([1, 2, 1], vec![5.0, 7.0]).unwrap());
        assert_eq!(flatten(&g), Value::Vector(vec![5.0, 7.0]));
    }

    #[test]
    fn flatten_with_spec_one_hots_discretes() {
        let spec = SpaceSpec::Seq(vec![SpaceSpec::Discrete(3), SpaceSpec::vector(1, 0.0, 9.0)]);
        let v = Value::Seq(vec![Value::Discrete(2), Value::scalar(4.0)]);
        assert_eq!(flatten_with_spec(&v, &spec), Value::Vector(vec![0.0, 0.0, 1.0, 4.0]));
        assert_eq!(spec.one_hot_len(), 4);
        assert_eq!(flatten(&v), Value::Vector(vec![2.0, 4.0]));
    }

    #[test]
    fn validate_rejects_bad_specs() {
        assert!(SpaceSpec::Discrete(0).validate().is_err());
        assert!(SpaceSpec::vector(1, 1.0, 0.0).validate().is_err());
        assert!(SpaceSpec::Box { shape: vec![2, 2], low: 0.0, high: 1.0 }.validate().is_err());
        assert!(SpaceSpec::vector(1, f64::NAN, 0.0).validate().is_err());
    }

    #[test]
    fn zero_value_respects_bounds() {
        let spec = SpaceSpec::mapping([
            ("a", SpaceSpec::vector(2, 1.0, 3.0)),
            ("b", SpaceSpec::grid([2, 2, 1], -1.0, 1.0)),
        ]);
        let z = spec.zero_value();
        assert!(spec.contains(&z));
        assert_eq!(z.get("a"), Some(&Value::Vector(vec![1.0, 1.0])));
    }
}
