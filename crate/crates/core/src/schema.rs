//! Relational schema: tables, column roles and parent/child relationships.
//!
//! A [`SchemaMetadata`] is validated on construction. Every table owns exactly one
//! primary key, every foreign key belongs to exactly one [`Relationship`], and the
//! relationship graph is acyclic. Table iteration is lexicographic throughout so
//! that every order derived from a schema is reproducible.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numerical,
    Categorical,
    Discrete,
    PrimaryKey,
    ForeignKey,
}

impl ColumnKind {
    pub fn is_key(self) -> bool {
        matches!(self, ColumnKind::PrimaryKey | ColumnKind::ForeignKey)
    }

    /// Categorical and discrete columns share the one-hot treatment.
    pub fn is_discrete(self) -> bool {
        matches!(self, ColumnKind::Categorical | ColumnKind::Discrete)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(rename = "ref", default, skip_serializing_if = "Option::is_none")]
    pub referenced_table: Option<String>,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind) -> Self {
        ColumnSpec { name: name.into(), kind, referenced_table: None }
    }

    pub fn foreign_key(name: impl Into<String>, parent: impl Into<String>) -> Self {
        ColumnSpec {
            name: name.into(),
            kind: ColumnKind::ForeignKey,
            referenced_table: Some(parent.into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationshipKind {
    OneToOne,
    OneToMany,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relationship {
    pub parent: String,
    pub child: String,
    pub kind: RelationshipKind,
    #[serde(rename = "foreign_key")]
    pub foreign_key_column: String,
}

impl Relationship {
    pub fn new(
        parent: impl Into<String>,
        child: impl Into<String>,
        kind: RelationshipKind,
        foreign_key_column: impl Into<String>,
    ) -> Self {
        Relationship {
            parent: parent.into(),
            child: child.into(),
            kind,
            foreign_key_column: foreign_key_column.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TableSpec {
    pub columns: Vec<ColumnSpec>,
}

impl TableSpec {
    pub fn new(columns: Vec<ColumnSpec>) -> Self {
        TableSpec { columns }
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn primary_key(&self) -> &ColumnSpec {
        self.columns
            .iter()
            .find(|c| c.kind == ColumnKind::PrimaryKey)
            .expect("validated schema has a primary key per table")
    }

    /// Columns modelled by the generator, in declaration order.
    pub fn data_columns(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().filter(|c| !c.kind.is_key())
    }
}

/// Raw document shape; validated into [`SchemaMetadata`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SchemaDocument {
    tables: BTreeMap<String, TableSpec>,
    #[serde(default)]
    relationships: Vec<Relationship>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SchemaDocument", into = "SchemaDocument")]
pub struct SchemaMetadata {
    tables: BTreeMap<String, TableSpec>,
    relationships: Vec<Relationship>,
}

impl TryFrom<SchemaDocument> for SchemaMetadata {
    type Error = Error;

    fn try_from(doc: SchemaDocument) -> Result<Self> {
        SchemaMetadata::new(doc.tables, doc.relationships)
    }
}

impl From<SchemaMetadata> for SchemaDocument {
    fn from(s: SchemaMetadata) -> Self {
        SchemaDocument { tables: s.tables, relationships: s.relationships }
    }
}

impl SchemaMetadata {
    /// Builds a schema, checking every structural invariant and acyclicity.
    pub fn new(
        tables: BTreeMap<String, TableSpec>,
        relationships: Vec<Relationship>,
    ) -> Result<Self> {
        for (name, table) in &tables {
            check_table(name, table, &tables)?;
        }

        let mut seen = BTreeSet::new();
        let mut used_fks: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for rel in &relationships {
            let child = tables
                .get(&rel.child)
                .ok_or_else(|| Error::schema(&rel.child, "relationship child table does not exist"))?;
            if !tables.contains_key(&rel.parent) {
                return Err(Error::schema(
                    &rel.parent,
                    "relationship parent table does not exist",
                ));
            }
            if rel.parent == rel.child {
                return Err(Error::schema(&rel.child, "self-referencing relationship"));
            }
            let col = child.column(&rel.foreign_key_column).ok_or_else(|| {
                Error::schema(
                    &rel.child,
                    format!("foreign key column `{}` does not exist", rel.foreign_key_column),
                )
            })?;
            if col.kind != ColumnKind::ForeignKey {
                return Err(Error::schema(
                    &rel.child,
                    format!("column `{}` is not a foreign_key", col.name),
                ));
            }
            if col.referenced_table.as_deref() != Some(rel.parent.as_str()) {
                return Err(Error::schema(
                    &rel.child,
                    format!("column `{}` does not reference `{}`", col.name, rel.parent),
                ));
            }
            if !seen.insert((&rel.parent, &rel.child, &rel.foreign_key_column)) {
                return Err(Error::schema(
                    &rel.child,
                    format!("duplicate relationship on `{}`", rel.foreign_key_column),
                ));
            }
            *used_fks.entry((&rel.child, &rel.foreign_key_column)).or_default() += 1;
        }

        for (name, table) in &tables {
            for col in table.columns.iter().filter(|c| c.kind == ColumnKind::ForeignKey) {
                match used_fks.get(&(name.as_str(), col.name.as_str())) {
                    Some(1) => {}
                    Some(_) => {
                        return Err(Error::schema(
                            name,
                            format!("foreign key `{}` used by several relationships", col.name),
                        ))
                    }
                    None => {
                        return Err(Error::schema(
                            name,
                            format!("foreign key `{}` has no relationship", col.name),
                        ))
                    }
                }
            }
        }

        let names: Vec<&str> = tables.keys().map(String::as_str).collect();
        if let Some(cycle) = find_cycle(&names, &relationships) {
            return Err(Error::Cycle(cycle));
        }

        Ok(SchemaMetadata { tables, relationships })
    }

    pub fn tables(&self) -> &BTreeMap<String, TableSpec> {
        &self.tables
    }

    pub fn table(&self, name: &str) -> Result<&TableSpec> {
        self.tables.get(name).ok_or_else(|| Error::UnknownTable(name.to_string()))
    }

    pub fn relationships(&self) -> &[Relationship] {
        &self.relationships
    }

    pub fn table_names(&self) -> impl Iterator<Item = &str> {
        self.tables.keys().map(String::as_str)
    }

    /// 𝒫(table): incoming relationships, ordered by parent name then foreign key.
    pub fn parents(&self, table: &str) -> Result<Vec<&Relationship>> {
        self.table(table)?;
        let mut out: Vec<&Relationship> =
            self.relationships.iter().filter(|r| r.child == table).collect();
        out.sort_by(|a, b| {
            (a.parent.as_str(), a.foreign_key_column.as_str())
                .cmp(&(b.parent.as_str(), b.foreign_key_column.as_str()))
        });
        Ok(out)
    }

    pub fn children(&self, table: &str) -> Result<Vec<&Relationship>> {
        self.table(table)?;
        let mut out: Vec<&Relationship> =
            self.relationships.iter().filter(|r| r.parent == table).collect();
        out.sort_by(|a, b| {
            (a.child.as_str(), a.foreign_key_column.as_str())
                .cmp(&(b.child.as_str(), b.foreign_key_column.as_str()))
        });
        Ok(out)
    }

    /// Tables such that every parent precedes its children; ties break
    /// lexicographically.
    pub fn topological_order(&self) -> Result<Vec<String>> {
        let mut indegree: BTreeMap<&str, usize> =
            self.tables.keys().map(|k| (k.as_str(), 0)).collect();
        for rel in &self.relationships {
            *indegree.get_mut(rel.child.as_str()).expect("validated") += 1;
        }
        let mut ready: BTreeSet<&str> =
            indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
        let mut order = Vec::with_capacity(self.tables.len());
        while let Some(next) = ready.pop_first() {
            order.push(next.to_string());
            for rel in self.relationships.iter().filter(|r| r.parent == next) {
                let d = indegree.get_mut(rel.child.as_str()).expect("validated");
                *d -= 1;
                if *d == 0 {
                    ready.insert(rel.child.as_str());
                }
            }
        }
        if order.len() != self.tables.len() {
            let names: Vec<&str> = self.table_names().collect();
            let cycle = find_cycle(&names, &self.relationships).unwrap_or_default();
            return Err(Error::Cycle(cycle));
        }
        Ok(order)
    }
}

fn check_table(
    name: &str,
    table: &TableSpec,
    tables: &BTreeMap<String, TableSpec>,
) -> Result<()> {
    let pk_count = table.columns.iter().filter(|c| c.kind == ColumnKind::PrimaryKey).count();
    if pk_count != 1 {
        return Err(Error::schema(
            name,
            format!("expected exactly one primary_key column, found {pk_count}"),
        ));
    }
    let mut names = BTreeSet::new();
    for col in &table.columns {
        if !names.insert(col.name.as_str()) {
            return Err(Error::schema(name, format!("duplicate column `{}`", col.name)));
        }
        match (col.kind, &col.referenced_table) {
            (ColumnKind::ForeignKey, Some(parent)) => {
                if !tables.contains_key(parent) {
                    return Err(Error::schema(
                        name,
                        format!("column `{}` references missing table `{parent}`", col.name),
                    ));
                }
            }
            (ColumnKind::ForeignKey, None) => {
                return Err(Error::schema(
                    name,
                    format!("foreign key `{}` has no `ref`", col.name),
                ))
            }
            (_, Some(_)) => {
                return Err(Error::schema(
                    name,
                    format!("only foreign_key columns may carry `ref` (`{}`)", col.name),
                ))
            }
            (_, None) => {}
        }
    }
    Ok(())
}

/// Returns one directed cycle (as the visited path) if the relationship graph
/// has any. Search starts from tables in lexicographic order.
pub fn find_cycle(tables: &[&str], relationships: &[Relationship]) -> Option<Vec<String>> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }

    let mut sorted: Vec<&str> = tables.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let index = |name: &str| sorted.binary_search(&name).ok();

    let mut adjacency: Vec<Vec<usize>> = alloc::vec![Vec::new(); sorted.len()];
    for rel in relationships {
        if let (Some(p), Some(c)) = (index(&rel.parent), index(&rel.child)) {
            adjacency[p].push(c);
        }
    }
    for next in &mut adjacency {
        next.sort_unstable();
        next.dedup();
    }

    let mut marks = alloc::vec![Mark::New; sorted.len()];
    for start in 0..sorted.len() {
        if marks[start] != Mark::New {
            continue;
        }
        // Iterative DFS: (node, next edge index).
        let mut stack: Vec<(usize, usize)> = alloc::vec![(start, 0)];
        marks[start] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let node = top.0;
            if let Some(&next) = adjacency[node].get(top.1) {
                top.1 += 1;
                match marks[next] {
                    Mark::New => {
                        marks[next] = Mark::Active;
                        stack.push((next, 0));
                    }
                    Mark::Active => {
                        let from = stack.iter().position(|(n, _)| *n == next).expect("on stack");
                        return Some(
                            stack[from..].iter().map(|(n, _)| sorted[*n].to_string()).collect(),
                        );
                    }
                    Mark::Done => {}
                }
            } else {
                marks[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

/// Succeeds iff the schema is acyclic and has at least one relationship.
pub fn validate_acyclic(schema: &SchemaMetadata) -> Result<()> {
    let names: Vec<&str> = schema.table_names().collect();
    if let Some(cycle) = find_cycle(&names, schema.relationships()) {
        return Err(Error::Cycle(cycle));
    }
    if schema.relationships().is_empty() {
        return Err(Error::NoRelationships);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(cols: Vec<ColumnSpec>) -> TableSpec {
        TableSpec::new(cols)
    }

    fn pk() -> ColumnSpec {
        ColumnSpec::new("id", ColumnKind::PrimaryKey)
    }

    /// Builds a schema of bare tables linked by one-to-many edges `parent -> child`.
    fn chain(edges: &[(&str, &str)], extra: &[&str]) -> Result<SchemaMetadata> {
        let mut tables: BTreeMap<String, TableSpec> = BTreeMap::new();
        for name in edges.iter().flat_map(|(a, b)| [*a, *b]).chain(extra.iter().copied()) {
            tables.entry(name.to_string()).or_insert_with(|| table(vec![pk()]));
        }
        let mut rels = Vec::new();
        for (p, c) in edges {
            let fk = format!("{p}_id");
            tables.get_mut(*c).unwrap().columns.push(ColumnSpec::foreign_key(&fk, *p));
            rels.push(Relationship::new(*p, *c, RelationshipKind::OneToMany, fk));
        }
        SchemaMetadata::new(tables, rels)
    }

    #[test]
    fn minimal_two_table_schema() {
        let s = chain(&[("parent", "child")], &[]).unwrap();
        assert_eq!(s.relationships().len(), 1);
        assert_eq!(s.topological_order().unwrap(), vec!["parent", "child"]);
        validate_acyclic(&s).unwrap();
    }

    #[test]
    fn missing_reference_rejected() {
        let mut tables = BTreeMap::new();
        tables.insert(
            "child".to_string(),
            table(vec![pk(), ColumnSpec::foreign_key("p", "ghost")]),
        );
        let err = SchemaMetadata::new(tables, vec![]).unwrap_err();
        assert!(matches!(err, Error::Schema { ref table, .. } if table == "child"), "{err}");
    }

    #[test]
    fn two_cycle_is_listed() {
        let err = chain(&[("A", "B"), ("B", "A")], &[]).unwrap_err();
        assert_eq!(err, Error::Cycle(vec!["A".into(), "B".into()]));
    }

    #[test]
    fn single_table_has_no_relation() {
        let s = chain(&[], &["solo"]).unwrap();
        assert_eq!(validate_acyclic(&s), Err(Error::NoRelationships));
    }

    #[test]
    fn diamond_order_and_parents() {
        let s = chain(&[("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")], &[]).unwrap();
        assert_eq!(s.topological_order().unwrap(), vec!["A", "B", "C", "D"]);
        let parents: Vec<&str> =
            s.parents("D").unwrap().iter().map(|r| r.parent.as_str()).collect();
        assert_eq!(parents, vec!["B", "C"]);
        assert!(s.parents("A").unwrap().is_empty());
        assert_eq!(s.parents("nope").unwrap_err(), Error::UnknownTable("nope".into()));
    }

    #[test]
    fn self_reference_rejected() {
        let mut tables = BTreeMap::new();
        tables.insert("a".to_string(), table(vec![pk(), ColumnSpec::foreign_key("a_id", "a")]));
        let rels = vec![Relationship::new("a", "a", RelationshipKind::OneToMany, "a_id")];
        assert!(matches!(SchemaMetadata::new(tables, rels), Err(Error::Schema { .. })));
    }

    #[test]
    fn primary_key_count_enforced() {
        let mut tables = BTreeMap::new();
        tables.insert("a".to_string(), table(vec![ColumnSpec::new("x", ColumnKind::Numerical)]));
        assert!(SchemaMetadata::new(tables.clone(), vec![]).is_err());
        tables.get_mut("a").unwrap().columns.push(pk());
        tables.get_mut("a").unwrap().columns.push(ColumnSpec::new("id2", ColumnKind::PrimaryKey));
        assert!(SchemaMetadata::new(tables, vec![]).is_err());
    }

    #[test]
    fn dangling_foreign_key_without_relationship() {
        let mut tables = BTreeMap::new();
        tables.insert("p".to_string(), table(vec![pk()]));
        tables.insert("c".to_string(), table(vec![pk(), ColumnSpec::foreign_key("p_id", "p")]));
        assert!(SchemaMetadata::new(tables, vec![]).is_err());
    }

    #[test]
    fn ref_on_non_foreign_key_rejected() {
        let mut tables = BTreeMap::new();
        tables.insert("p".to_string(), table(vec![pk()]));
        let mut col = ColumnSpec::new("x", ColumnKind::Numerical);
        col.referenced_table = Some("p".into());
        tables.insert("c".to_string(), table(vec![pk(), col]));
        assert!(SchemaMetadata::new(tables, vec![]).is_err());
    }
}
