use std::fmt;
use std::ops::Index;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A sparse `vertex → real` map stored as a vector sorted by vertex.
///
/// Rounds hold one of these per message kind, and long runs hold many
/// rounds, so this trades the general map for two words per entry.
/// Serializes as a JSON object keyed by vertex id.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VertexValues {
    entries: Vec<(usize, f64)>,
}

impl VertexValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(capacity: usize) -> Self {
        VertexValues {
            entries: Vec::with_capacity(capacity),
        }
    }

    /// Appends an entry. Panics unless `v` is larger than every key so far.
    pub fn push(&mut self, v: usize, value: f64) {
        if let Some(&(last, _)) = self.entries.last() {
            assert!(v > last, "vertex {v} pushed after {last}");
        }
        self.entries.push((v, value));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, v: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&v, |&(u, _)| u)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn contains_key(&self, v: usize) -> bool {
        self.get(v).is_some()
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn keys(&self) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.entries.iter().map(|&(v, _)| v)
    }

    pub fn values(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        self.entries.iter().map(|&(_, x)| x)
    }
}

impl Index<usize> for VertexValues {
    type Output = f64;

    fn index(&self, v: usize) -> &f64 {
        let i = self
            .entries
            .binary_search_by_key(&v, |&(u, _)| u)
            .unwrap_or_else(|_| panic!("no value for vertex {v}"));
        &self.entries[i].1
    }
}

/// Collects pairs in any order; a repeated vertex keeps its last value.
impl FromIterator<(usize, f64)> for VertexValues {
    fn from_iter<I: IntoIterator<Item = (usize, f64)>>(iter: I) -> Self {
        let mut entries: Vec<(usize, f64)> = iter.into_iter().collect();
        entries.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (v, x) in entries {
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = x,
                _ => out.push((v, x)),
            }
        }
        VertexValues { entries: out }
    }
}

impl<const N: usize> From<[(usize, f64); N]> for VertexValues {
    fn from(pairs: [(usize, f64); N]) -> Self {
        pairs.into_iter().collect()
    }
}

impl Serialize for VertexValues {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.entries.len()))?;
        for (v, x) in &self.entries {
            map.serialize_entry(v, x)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for VertexValues {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct ValuesVisitor;

        impl<'de> Visitor<'de> for ValuesVisitor {
            type Value = VertexValues;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a map from vertex id to number")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<VertexValues, A::Error> {
                let mut entries = Vec::with_capacity(access.size_hint().unwrap_or(0));
                while let Some((v, x)) = access.next_entry::<usize, f64>()? {
                    entries.push((v, x));
                }
                entries.sort_by_key(|&(v, _)| v);
                if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
                    return Err(serde::de::Error::custom(format!(
                        "duplicate vertex {}",
                        w[0].0
                    )));
                }
                Ok(VertexValues { entries })
            }
        }

        d.deserialize_map(ValuesVisitor)
    }
}
