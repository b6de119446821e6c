use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kg_store::{DirectedRelation, EntityId, Value};

/// Deduplicated values in canonical text order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueSet(Vec<Value>);

impl ValueSet {
    pub fn new() -> Self {
        ValueSet(Vec::new())
    }

    pub fn singleton(value: impl Into<Value>) -> Self {
        ValueSet(vec![value.into()])
    }

    /// Caller guarantees `values` is strictly ascending.
    pub(crate) fn from_sorted(values: Vec<Value>) -> Self {
        debug_assert!(values.windows(2).all(|w| w[0] < w[1]));
        ValueSet(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Value> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Value] {
        &self.0
    }

    pub fn contains(&self, value: &Value) -> bool {
        self.0.binary_search(value).is_ok()
    }

    pub fn is_subset(&self, other: &ValueSet) -> bool {
        self.0.iter().all(|v| other.contains(v))
    }

    pub fn intersection(&self, other: &ValueSet) -> ValueSet {
        ValueSet(self.0.iter().filter(|v| other.contains(v)).cloned().collect())
    }

    pub fn union(&self, other: &ValueSet) -> ValueSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.0.iter().peekable(), other.0.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(x), Some(y)) => match x.cmp(y) {
                    std::cmp::Ordering::Less => out.push(a.next().unwrap().clone()),
                    std::cmp::Ordering::Greater => out.push(b.next().unwrap().clone()),
                    std::cmp::Ordering::Equal => {
                        out.push(a.next().unwrap().clone());
                        b.next();
                    }
                },
                (Some(_), None) => out.push(a.next().unwrap().clone()),
                (None, Some(_)) => out.push(b.next().unwrap().clone()),
                (None, None) => break,
            }
        }
        ValueSet(out)
    }

    /// Entity members, or the first literal found.
    pub fn entities(&self) -> Result<Vec<&EntityId>, &Value> {
        self.0
            .iter()
            .map(|v| v.as_entity().ok_or(v))
            .collect()
    }

    pub fn into_vec(self) -> Vec<Value> {
        self.0
    }
}

impl FromIterator<Value> for ValueSet {
    fn from_iter<I: IntoIterator<Item = Value>>(iter: I) -> Self {
        let mut values: Vec<Value> = iter.into_iter().collect();
        values.sort();
        values.dedup();
        ValueSet(values)
    }
}

impl FromIterator<EntityId> for ValueSet {
    fn from_iter<I: IntoIterator<Item = EntityId>>(iter: I) -> Self {
        iter.into_iter().map(Value::Entity).collect()
    }
}

impl<'a> IntoIterator for &'a ValueSet {
    type Item = &'a Value;
    type IntoIter = std::slice::Iter<'a, Value>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ValueSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        f.write_str("}")
    }
}

/// Relations with directions. Order is meaningful: neighbor lookups produce
/// (name, direction) order, relation retrieval produces ranked order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationSet(Vec<DirectedRelation>);

impl RelationSet {
    /// Sorts and deduplicates.
    pub fn sorted(mut relations: Vec<DirectedRelation>) -> Self {
        relations.sort();
        relations.dedup();
        RelationSet(relations)
    }

    /// Keeps the given order, dropping repeats.
    pub fn ranked(relations: Vec<DirectedRelation>) -> Self {
        let mut seen = std::collections::HashSet::new();
        RelationSet(
            relations
                .into_iter()
                .filter(|r| seen.insert(r.clone()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DirectedRelation> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[DirectedRelation] {
        &self.0
    }

    pub fn names(&self) -> impl Iterator<Item = &str> + '_ {
        self.0.iter().map(|r| r.relation.as_str())
    }
}

impl fmt::Display for RelationSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(ids: &[&str]) -> ValueSet {
        ids.iter().map(|s| EntityId::new(s).unwrap()).collect()
    }

    #[test]
    fn dedup_and_order() {
        let s = set(&["#c", "#a", "#c", "#b"]);
        assert_eq!(s.to_string(), "{#a, #b, #c}");
    }

    #[test]
    fn set_algebra() {
        let a = set(&["#a", "#b"]);
        let b = set(&["#b", "#c"]);
        assert_eq!(a.intersection(&b), set(&["#b"]));
        assert_eq!(a.union(&b), set(&["#a", "#b", "#c"]));
        assert!(set(&["#b"]).is_subset(&a));
    }

    #[test]
    fn ranked_relations_keep_order() {
        let r = RelationSet::ranked(vec![
            DirectedRelation::out("z"),
            DirectedRelation::out("a"),
            DirectedRelation::out("z"),
        ]);
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["z", "a"]);
    }
}
