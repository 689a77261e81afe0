//! Observation and action payloads.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A dense `[height, width, channels]` array of reals stored row-major.
#[derive(Debug, Clone)]
pub struct Grid {
    shape: [usize; 3],
    data: Vec<f64>,
}

impl Grid {
    pub fn new(shape: [usize; 3], data: Vec<f64>) -> Result<Self> {
        let expected = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::Format(format!("grid shape {shape:?} overflows")))?;
        if data.len() != expected {
            return Err(Error::Format(format!(
                "grid shape {shape:?} needs {expected} entries, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: [usize; 3]) -> Self {
        let n = shape[0] * shape[1] * shape[2];
        Self {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    fn index(&self, row: usize, col: usize, ch: usize) -> usize {
        let [h, w, c] = self.shape;
        assert!(row < h && col < w && ch < c, "grid index out of bounds");
        (row * w + col) * c + ch
    }

    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[self.index(row, col, ch)]
    }

    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        let i = self.index(row, col, ch);
        self.data[i] = v;
    }

    /// Rotate a square grid by 90 degrees counter-clockwise in the
    /// row-down image convention: the top row becomes the left column.
    pub fn rot90_ccw(&self) -> Grid {
        let [h, w, c] = self.shape;
        let mut out = Grid::zeros([w, h, c]);
        for r in 0..w {
            for col in 0..h {
                for ch in 0..c {
                    out.set(r, col, ch, self.get(col, w - 1 - r, ch));
                }
            }
        }
        out
    }

    /// Sum of one channel over all cells.
    pub fn channel_sum(&self, ch: usize) -> f64 {
        let c = self.shape[2];
        self.data.iter().skip(ch).step_by(c).sum()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && bits_eq(&self.data, &other.data)
    }
}

/// Observation/action payload. Equality is structural and bitwise on reals.
#[derive(Debug, Clone)]
pub enum Value {
    Discrete(u64),
    Vector(Vec<f64>),
    Grid(Grid),
    Mapping(BTreeMap<String, Value>),
    Seq(Vec<Value>),
}

fn bits_eq(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Value::Discrete(a), Value::Discrete(b)) => a == b,
            (Value::Vector(a), Value::Vector(b)) => bits_eq(a, b),
            (Value::Grid(a), Value::Grid(b)) => a == b,
            (Value::Mapping(a), Value::Mapping(b)) => a == b,
            (Value::Seq(a), Value::Seq(b)) => a == b,
            _ => false,
        }
    }
}

impl Value {
    pub fn scalar(x: f64) -> Value {
        Value::Vector(vec![x])
    }

    pub fn mapping<K: Into<String>>(entries: impl IntoIterator<Item = (K, Value)>) -> Value {
        Value::Mapping(entries.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Value::Discrete(_) => "discrete",
            Value::Vector(_) => "vector",
            Value::Grid(_) => "grid",
            Value::Mapping(_) => "mapping",
            Value::Seq(_) => "seq",
        }
    }

    pub fn as_discrete(&self) -> Option<u64> {
        match self {
            Value::Discrete(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_vector(&self) -> Option<&[f64]> {
        match self {
            Value::Vector(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_grid(&self) -> Option<&Grid> {
        match self {
            Value::Grid(g) => Some(g),
            _ => None,
        }
    }

    pub fn as_mapping(&self) -> Option<&BTreeMap<String, Value>> {
        match self {
            Value::Mapping(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_seq(&self) -> Option<&[Value]> {
        match self {
            Value::Seq(s) => Some(s),
            _ => None,
        }
    }

    /// Look up a key of a mapping value.
    pub fn get(&self, key: &str) -> Option<&Value> {
        self.as_mapping().and_then(|m| m.get(key))
    }

    /// First entry of a vector stored under `key`.
    pub fn scalar_at(&self, key: &str) -> Option<f64> {
        self.get(key)?.as_vector()?.first().copied()
    }

    /// Number of real/discrete leaves, each discrete counting as one scalar.
    pub fn scalar_count(&self) -> usize {
        match self {
            Value::Discrete(_) => 1,
            Value::Vector(v) => v.len(),
            Value::Grid(g) => g.data().len(),
            Value::Mapping(m) => m.values().map(Value::scalar_count).sum(),
            Value::Seq(s) => s.iter().map(Value::scalar_count).sum(),
        }
    }
}

impl From<Grid> for Value {
    fn from(g: Grid) -> Self {
        Value::Grid(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_wrong_entry_count() {
        assert!(Grid::new([2, 2, 1], vec![0.0; 3]).is_err());
        assert!(Grid::new([2, 2, 1], vec![0.0; 4]).is_ok());
    }

    #[test]
    fn equality_is_bitwise() {
        assert_ne!(Value::scalar(0.0), Value::scalar(-0.0));
        assert_eq!(Value::scalar(f64::NAN), Value::scalar(f64::NAN));
        assert_ne!(Value::Discrete(1), Value::scalar(1.0));
    }

    #[test]
    fn four_rotations_are_identity() {
        let data: Vec<f64> = (0..3 * 3 * 2).map(f64::from).collect();
        let g = Grid::new([3, 3, 2], data).unwrap();
        let r = g.rot90_ccw().rot90_ccw().rot90_ccw().rot90_ccw();
        assert_eq!(g, r);
        assert_ne!(g, g.rot90_ccw());
    }

    #[test]
    fn rotation_moves_top_row_to_left_column() {
        // 2x2: [[a, b], [c, d]] -> [[b, d], [a, c]]
        let g = Grid::new([2, 2, 1], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = g.rot90_ccw();
        assert_eq!(r.data(), &[2.0, 4.0, 1.0, 3.0]);
    }
}
