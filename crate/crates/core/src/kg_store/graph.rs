use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::term::{EntityId, Literal, LiteralKind, Value};
use super::KgError;

pub(crate) type TermId = u32;
pub(crate) type RelId = u32;

/// Relation names with reserved meaning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphSchema {
    pub type_relation: String,
    pub label_relation: String,
}

impl Default for GraphSchema {
    fn default() -> Self {
        GraphSchema {
            type_relation: "type".to_string(),
            label_relation: "label".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: EntityId,
    pub relation: String,
    pub tail: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The entity is the head of the triple.
    Out,
    /// The entity is the tail of the triple.
    In,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Out => "out",
            Direction::In => "in",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectedRelation {
    pub relation: String,
    pub direction: Direction,
}

impl DirectedRelation {
    pub fn new(relation: impl Into<String>, direction: Direction) -> Self {
        DirectedRelation {
            relation: relation.into(),
            direction,
        }
    }

    pub fn out(relation: impl Into<String>) -> Self {
        DirectedRelation::new(relation, Direction::Out)
    }

    pub fn incoming(relation: impl Into<String>) -> Self {
        DirectedRelation::new(relation, Direction::In)
    }
}

impl fmt::Display for DirectedRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.relation, self.direction)
    }
}

/// Label normalization: lowercase, collapse internal whitespace, strip
/// surrounding punctuation.
pub fn normalize_label(text: &str) -> String {
    let lowered = text.to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

/// Tokens of a normalized label, each stripped of surrounding punctuation.
pub fn label_tokens(text: &str) -> Vec<String> {
    normalize_label(text)
        .split(' ')
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn is_subsequence(needle: &[String], haystack: &[String]) -> bool {
    let mut it = haystack.iter();
    needle.iter().all(|n| it.any(|h| h == n))
}

/// Incrementally collects triples; [`GraphBuilder::build`] produces the
/// immutable indexed graph.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    schema: GraphSchema,
    terms: HashMap<Value, TermId>,
    term_list: Vec<Value>,
    relations: HashMap<String, RelId>,
    relation_list: Vec<String>,
    triples: Vec<[u32; 3]>,
}

impl GraphBuilder {
    pub fn new(schema: GraphSchema) -> Self {
        GraphBuilder {
            schema,
            ..Default::default()
        }
    }

    fn intern(&mut self, value: Value) -> TermId {
        if let Some(&id) = self.terms.get(&value) {
            return id;
        }
        let id = self.term_list.len() as TermId;
        self.term_list.push(value.clone());
        self.terms.insert(value, id);
        id
    }

    fn intern_relation(&mut self, relation: &str) -> RelId {
        if let Some(&id) = self.relations.get(relation) {
            return id;
        }
        let id = self.relation_list.len() as RelId;
        self.relation_list.push(relation.to_string());
        self.relations.insert(relation.to_string(), id);
        id
    }

    pub fn add(&mut self, head: EntityId, relation: &str, tail: Value) -> Result<(), KgError> {
        if relation.is_empty() || relation.chars().any(char::is_whitespace) {
            return Err(KgError::InvalidRelation(relation.to_string()));
        }
        let h = self.intern(Value::Entity(head));
        let r = self.intern_relation(relation);
        let t = self.intern(tail);
        self.triples.push([h, r, t]);
        Ok(())
    }

    pub fn add_triple(&mut self, triple: Triple) -> Result<(), KgError> {
        self.add(triple.head, &triple.relation, triple.tail)
    }

    /// Registers an entity that may have no triples.
    pub fn declare_entity(&mut self, entity: EntityId) {
        self.intern(Value::Entity(entity));
    }

    pub fn build(self) -> KnowledgeGraph {
        let GraphBuilder {
            schema,
            term_list,
            relation_list,
            mut triples,
            ..
        } = self;

        // Renumber terms and relations so that id order is canonical order.
        let mut term_order: Vec<(String, TermId)> = term_list
            .iter()
            .enumerate()
            .map(|(i, v)| (v.canonical(), i as TermId))
            .collect();
        term_order.sort_unstable();
        let mut term_remap = vec![0; term_list.len()];
        let mut slots: Vec<Option<Value>> = term_list.into_iter().map(Some).collect();
        let mut terms = Vec::with_capacity(slots.len());
        for (new_id, (_, old_id)) in term_order.into_iter().enumerate() {
            term_remap[old_id as usize] = new_id as TermId;
            terms.push(slots[old_id as usize].take().expect("each term moved once"));
        }

        let mut rel_order: Vec<(String, RelId)> = relation_list
            .into_iter()
            .enumerate()
            .map(|(i, r)| (r, i as RelId))
            .collect();
        rel_order.sort_unstable();
        let mut rel_remap = vec![0; rel_order.len()];
        let mut relations = Vec::with_capacity(rel_order.len());
        for (new_id, (name, old_id)) in rel_order.into_iter().enumerate() {
            rel_remap[old_id as usize] = new_id as RelId;
            relations.push(name);
        }

        for t in triples.iter_mut() {
            *t = [
                term_remap[t[0] as usize],
                rel_remap[t[1] as usize],
                term_remap[t[2] as usize],
            ];
        }
        triples.sort_unstable();
        triples.dedup();

        KnowledgeGraph::from_parts(schema, terms, relations, triples)
    }
}

/// Immutable in-memory knowledge graph.
///
/// Triples are held twice, sorted as (head, relation, tail) and as
/// (tail, relation, head); every lookup is a range search in one of the two.
/// Term ids are assigned in canonical text order, so id-sorted results are
/// already in canonical value order.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    schema: GraphSchema,
    terms: Vec<Value>,
    entity_index: HashMap<EntityId, TermId>,
    literal_index: HashMap<Literal, TermId>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelId>,
    spo: Vec<[u32; 3]>,
    ops: Vec<[u32; 3]>,
    /// normalized label -> entity ids (sorted)
    labels: HashMap<String, Vec<TermId>>,
    /// label token -> entity ids (sorted)
    label_token_index: HashMap<String, Vec<TermId>>,
}

impl KnowledgeGraph {
    pub fn empty() -> Self {
        GraphBuilder::default().build()
    }

    fn from_parts(
        schema: GraphSchema,
        terms: Vec<Value>,
        relations: Vec<String>,
        spo: Vec<[u32; 3]>,
    ) -> Self {
        let mut entity_index = HashMap::new();
        let mut literal_index = HashMap::new();
        for (i, t) in terms.iter().enumerate() {
            match t {
                Value::Entity(e) => entity_index.insert(e.clone(), i as TermId),
                Value::Literal(l) => literal_index.insert(l.clone(), i as TermId),
            };
        }
        let relation_index = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.clone(), i as RelId))
            .collect();
        let mut ops: Vec<[u32; 3]> = spo.iter().map(|&[h, r, t]| [t, r, h]).collect();
        ops.sort_unstable();

        let mut graph = KnowledgeGraph {
            schema,
            terms,
            entity_index,
            literal_index,
            relations,
            relation_index,
            spo,
            ops,
            labels: HashMap::new(),
            label_token_index: HashMap::new(),
        };
        let (labels, tokens) = graph.build_label_indexes();
        graph.labels = labels;
        graph.label_token_index = tokens;
        graph
    }

    #[allow(clippy::type_complexity)]
    fn build_label_indexes(
        &self,
    ) -> (HashMap<String, Vec<TermId>>, HashMap<String, Vec<TermId>>) {
        let mut labels: HashMap<String, Vec<TermId>> = HashMap::new();
        let mut tokens: HashMap<String, Vec<TermId>> = HashMap::new();
        if let Some(label_rel) = self.relation_id(&self.schema.label_relation) {
            for &[h, r, t] in &self.spo {
                if r != label_rel {
                    continue;
                }
                let Value::Literal(lit) = &self.terms[t as usize] else {
                    continue;
                };
                if lit.kind() != LiteralKind::String {
                    continue;
                }
                labels.entry(normalize_label(lit.text())).or_default().push(h);
                for tok in label_tokens(lit.text()) {
                    tokens.entry(tok).or_default().push(h);
                }
            }
        }
        for ids in labels.values_mut().chain(tokens.values_mut()) {
            ids.sort_unstable();
            ids.dedup();
        }
        (labels, tokens)
    }

    pub fn schema(&self) -> &GraphSchema {
        &self.schema
    }

    pub fn triple_count(&self) -> usize {
        self.spo.len()
    }

    pub fn entity_count(&self) -> usize {
        self.entity_index.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn literal_count(&self) -> usize {
        self.literal_index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spo.is_empty() && self.terms.is_empty()
    }

    /// All entities in canonical order.
    pub fn entities(&self) -> impl Iterator<Item = &EntityId> + '_ {
        self.terms.iter().filter_map(Value::as_entity)
    }

    /// All relation names in lexicographic order.
    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn contains_entity(&self, entity: &EntityId) -> bool {
        self.entity_index.contains_key(entity)
    }

    /// Triples in (head, relation, tail) id order.
    pub fn triples(&self) -> impl Iterator<Item = Triple> + '_ {
        self.spo.iter().map(|t| self.triple_at(*t))
    }

    fn triple_at(&self, [h, r, t]: [u32; 3]) -> Triple {
        Triple {
            head: self.terms[h as usize]
                .as_entity()
                .expect("heads are entities")
                .clone(),
            relation: self.relations[r as usize].clone(),
            tail: self.terms[t as usize].clone(),
        }
    }

    pub(crate) fn entity_id(&self, entity: &EntityId) -> Option<TermId> {
        self.entity_index.get(entity).copied()
    }

    pub(crate) fn relation_id(&self, relation: &str) -> Option<RelId> {
        self.relation_index.get(relation).copied()
    }

    pub(crate) fn term(&self, id: TermId) -> &Value {
        &self.terms[id as usize]
    }

    fn require(&self, entity: &EntityId) -> Result<TermId, KgError> {
        self.entity_id(entity)
            .ok_or_else(|| KgError::UnknownEntity(entity.clone()))
    }

    fn range(index: &[[u32; 3]], first: u32, second: u32) -> &[[u32; 3]] {
        let lo = index.partition_point(|t| (t[0], t[1]) < (first, second));
        let hi = index.partition_point(|t| (t[0], t[1]) <= (first, second));
        &index[lo..hi]
    }

    fn node_range(index: &[[u32; 3]], first: u32) -> &[[u32; 3]] {
        let lo = index.partition_point(|t| t[0] < first);
        let hi = index.partition_point(|t| t[0] <= first);
        &index[lo..hi]
    }

    /// Tail ids of (head, relation), ascending.
    pub(crate) fn tail_ids(&self, head: TermId, relation: RelId) -> impl Iterator<Item = TermId> + '_ {
        Self::range(&self.spo, head, relation).iter().map(|t| t[2])
    }

    /// Head ids of (tail, relation), ascending.
    pub(crate) fn head_ids(&self, tail: TermId, relation: RelId) -> impl Iterator<Item = TermId> + '_ {
        Self::range(&self.ops, tail, relation).iter().map(|t| t[2])
    }

    /// Incoming and outgoing relations of the given entities, sorted by
    /// (relation name, direction).
    pub fn neighboring_relations<'a, I>(&self, entities: I) -> Result<Vec<DirectedRelation>, KgError>
    where
        I: IntoIterator<Item = &'a EntityId>,
    {
        let mut found: BTreeSet<(RelId, Direction)> = BTreeSet::new();
        for e in entities {
            let id = self.require(e)?;
            for t in Self::node_range(&self.spo, id) {
                found.insert((t[1], Direction::Out));
            }
            for t in Self::node_range(&self.ops, id) {
                found.insert((t[1], Direction::In));
            }
        }
        // relation ids are in name order, so this is (name, direction) order
        Ok(found
            .into_iter()
            .map(|(r, d)| DirectedRelation::new(self.relations[r as usize].clone(), d))
            .collect())
    }

    /// Tails of `(entity, relation)` in canonical order; empty when the
    /// relation is absent.
    pub fn lookup_tails(&self, entity: &EntityId, relation: &str) -> Result<Vec<Value>, KgError> {
        let id = self.require(entity)?;
        Ok(match self.relation_id(relation) {
            Some(r) => self.tail_ids(id, r).map(|t| self.term(t).clone()).collect(),
            None => Vec::new(),
        })
    }

    /// Heads `h` with `(h, relation, value)`, in canonical order.
    pub fn lookup_heads(&self, value: &EntityId, relation: &str) -> Result<Vec<EntityId>, KgError> {
        let id = self.require(value)?;
        Ok(self.heads_of_id(id, relation))
    }

    fn heads_of_id(&self, id: TermId, relation: &str) -> Vec<EntityId> {
        match self.relation_id(relation) {
            Some(r) => self
                .head_ids(id, r)
                .filter_map(|h| self.term(h).as_entity().cloned())
                .collect(),
            None => Vec::new(),
        }
    }

    /// Entities carrying a `type` triple pointing at `type_entity`.
    pub fn entities_of_type(&self, type_entity: &EntityId) -> Vec<EntityId> {
        match self.entity_id(type_entity) {
            Some(id) => self.heads_of_id(id, &self.schema.type_relation.clone()),
            None => Vec::new(),
        }
    }

    /// Entities whose normalized label equals the normalized mention.
    pub fn entities_by_label(&self, mention: &str) -> Vec<EntityId> {
        self.ids_to_entities(self.labels.get(&normalize_label(mention)))
    }

    /// Entities having a label whose tokens contain the mention's tokens as
    /// an ordered subsequence.
    pub fn entities_by_label_tokens(&self, mention: &str) -> Vec<EntityId> {
        let needle = label_tokens(mention);
        let Some(first) = needle.first() else {
            return Vec::new();
        };
        let Some(candidates) = self.label_token_index.get(first) else {
            return Vec::new();
        };
        candidates
            .iter()
            .filter(|&&id| {
                let e = self.term(id).as_entity().expect("labelled terms are entities");
                self.labels_of(e)
                    .iter()
                    .any(|l| is_subsequence(&needle, &label_tokens(l)))
            })
            .map(|&id| self.term(id).as_entity().expect("entity").clone())
            .collect()
    }

    fn ids_to_entities(&self, ids: Option<&Vec<TermId>>) -> Vec<EntityId> {
        ids.map(|ids| {
            ids.iter()
                .filter_map(|&id| self.term(id).as_entity().cloned())
                .collect()
        })
        .unwrap_or_default()
    }

    /// String labels of an entity in canonical order.
    pub fn labels_of(&self, entity: &EntityId) -> Vec<&str> {
        let (Some(id), Some(r)) = (
            self.entity_id(entity),
            self.relation_id(&self.schema.label_relation),
        ) else {
            return Vec::new();
        };
        self.tail_ids(id, r)
            .filter_map(|t| match self.term(t) {
                Value::Literal(l) if l.kind() == LiteralKind::String => Some(l.text()),
                _ => None,
            })
            .collect()
    }

    /// First label in canonical order, if any.
    pub fn label_of(&self, entity: &EntityId) -> Option<&str> {
        self.labels_of(entity).into_iter().next()
    }

    /// Rebuilds every index from the triple list and compares.
    pub fn audit(&self) -> Result<(), String> {
        let triples: Vec<Triple> = self.triples().collect();
        let mut builder = GraphBuilder::new(self.schema.clone());
        for e in self.entities() {
            builder.declare_entity(e.clone());
        }
        for t in triples {
            builder.add_triple(t).map_err(|e| e.to_string())?;
        }
        let rebuilt = builder.build();
        if rebuilt.terms != self.terms {
            return Err("term table differs from rebuild".into());
        }
        if rebuilt.relations != self.relations {
            return Err("relation table differs from rebuild".into());
        }
        if rebuilt.spo != self.spo {
            return Err("(head, relation) index differs from rebuild".into());
        }
        if rebuilt.ops != self.ops {
            return Err("(tail, relation) index differs from rebuild".into());
        }
        if rebuilt.labels != self.labels || rebuilt.label_token_index != self.label_token_index {
            return Err("label index differs from rebuild".into());
        }
        if !self.ops.windows(2).all(|w| w[0] < w[1]) || !self.spo.windows(2).all(|w| w[0] < w[1]) {
            return Err("index not strictly sorted".into());
        }
        Ok(())
    }

    /// Writes the graph in the tab-separated file format. Entities without
    /// triples are written as single-token declaration lines.
    pub fn write_to(&self, out: &mut impl Write) -> io::Result<()> {
        for t in self.triples() {
            writeln!(out, "{}\t{}\t{}", t.head, t.relation, t.tail)?;
        }
        for (i, term) in self.terms.iter().enumerate() {
            if let Value::Entity(e) = term {
                let id = i as TermId;
                if Self::node_range(&self.spo, id).is_empty()
                    && Self::node_range(&self.ops, id).is_empty()
                {
                    writeln!(out, "{e}")?;
                }
            }
        }
        Ok(())
    }
}
