//! Typed access to JSON parameter objects, rejecting leftovers.

use serde_json::{Map, Value as Json};

use crate::error::{config, Result};

pub type ParamMap = Map<String, Json>;

pub struct Params {
    owner: String,
    rest: ParamMap,
}

impl Params {
    pub fn new(owner: impl Into<String>, map: &ParamMap) -> Self {
        Self { owner: owner.into(), rest: map.clone() }
    }

    fn take(&mut self, key: &str) -> Option<Json> {
        self.rest.remove(key)
    }

    fn bad(&self, key: &str, want: &str, got: &Json) -> crate::HarnessError {
        config(format!("{}: parameter {key:?} must be {want}, got {got}", self.owner))
    }

    pub fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(j) => j.as_f64().map(Some).ok_or_else(|| self.bad(key, "a number", &j)),
        }
    }

    pub fn u64(&mut self, key: &str) -> Result<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(j) => j.as_u64().map(Some).ok_or_else(|| self.bad(key, "a non-negative integer", &j)),
        }
    }

    pub fn u32(&mut self, key: &str) -> Result<Option<u32>> {
        match self.u64(key)? {
            None => Ok(None),
            Some(x) => u32::try_from(x)
                .map(Some)
                .map_err(|_| config(format!("{}: parameter {key:?} is too large", self.owner))),
        }
    }

    pub fn usize(&mut self, key: &str) -> Result<Option<usize>> {
        Ok(self.u32(key)?.map(|x| x as usize))
    }

    pub fn bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key) {
            None => Ok(None),
            Some(j) => j.as_bool().map(Some).ok_or_else(|| self.bad(key, "true or false", &j)),
        }
    }

    /// Strings, plus bare numbers spelled as strings (`3I2Z` vs `2v2`).
    pub fn string(&mut self, key: &str) -> Result<Option<String>> {
        match self.take(key) {
            None => Ok(None),
            Some(Json::String(s)) => Ok(Some(s)),
            Some(Json::Number(n)) => Ok(Some(n.to_string())),
            Some(j) => Err(self.bad(key, "a string", &j)),
        }
    }

    pub fn raw(&mut self, key: &str) -> Option<Json> {
        self.take(key)
    }

    /// List of lists of slot indices.
    pub fn groups(&mut self, key: &str) -> Result<Option<Vec<Vec<usize>>>> {
        match self.take(key) {
            None => Ok(None),
            Some(j) => serde_json::from_value(j.clone())
                .map(Some)
                .map_err(|_| self.bad(key, "a list of slot lists", &j)),
        }
    }

    pub fn sizes(&mut self, key: &str) -> Result<Option<Vec<usize>>> {
        match self.take(key) {
            None => Ok(None),
            Some(j) => serde_json::from_value(j.clone())
                .map(Some)
                .map_err(|_| self.bad(key, "a list of group sizes", &j)),
        }
    }

    /// Fail on any parameter nobody asked for.
    pub fn finish(self) -> Result<()> {
        match self.rest.keys().next() {
            None => Ok(()),
            Some(k) => Err(config(format!("{}: unknown parameter {k:?}", self.owner))),
        }
    }
}
