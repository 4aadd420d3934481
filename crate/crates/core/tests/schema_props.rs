use std::collections::BTreeMap;

use proptest::prelude::*;
use relgen_core::schema::find_cycle;
use relgen_core::{ColumnKind, ColumnSpec, Error, Relationship, RelationshipKind, SchemaMetadata, TableSpec};

fn build(n: usize, edges: &[(usize, usize)]) -> (BTreeMap<String, TableSpec>, Vec<Relationship>) {
    let name = |i: usize| format!("t{i}");
    let mut tables: BTreeMap<String, TableSpec> = (0..n)
        .map(|i| {
            (name(i), TableSpec::new(vec![ColumnSpec::new("id", ColumnKind::PrimaryKey), ColumnSpec::new("x", ColumnKind::Numerical)]))
        })
        .collect();
    let mut rels = Vec::new();
    for (k, &(p, c)) in edges.iter().enumerate() {
        let fk = format!("fk{k}");
        tables.get_mut(&name(c)).unwrap().columns.push(ColumnSpec::foreign_key(&fk, name(p)));
        let kind = if k % 3 == 0 { RelationshipKind::OneToOne } else { RelationshipKind::OneToMany };
        rels.push(Relationship::new(name(p), name(c), kind, fk));
    }
    (tables, rels)
}

/// Transitive closure by repeated relaxation.
fn has_cycle(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut reach = vec![vec![false; n]; n];
    for &(p, c) in edges {
        reach[p][c] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if reach[i][k] && reach[k][j] {
                    reach[i][j] = true;
                }
            }
        }
    }
    (0..n).any(|i| reach[i][i])
}

fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=6).prop_flat_map(|n| {
        let edge = (0..n, 1..n).prop_map(move |(p, d)| (p, (p + d) % n));
        (Just(n), prop::collection::vec(edge, 0..=8))
    })
}

fn dag() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=6).prop_flat_map(|n| {
        let edge = (0..n, 0..n).prop_filter_map("forward edges", |(a, b)| (a != b).then(|| (a.min(b), a.max(b))));
        let perm = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
        (Just(n), prop::collection::vec(edge, 0..=8), perm).prop_map(|(n, edges, perm)| {
            (n, edges.into_iter().map(|(a, b)| (perm[a], perm[b])).collect())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn accepted_iff_acyclic((n, edges) in graph()) {
        let (tables, rels) = build(n, &edges);
        let result = SchemaMetadata::new(tables, rels.clone());
        if has_cycle(n, &edges) {
            let Err(Error::Cycle(path)) = result else { panic!("cycle not reported: {result:?}") };
            prop_assert!(!path.is_empty());
            let linked = |a: &String, b: &String| rels.iter().any(|r| &r.parent == a && &r.child == b);
            for w in path.windows(2) {
                prop_assert!(linked(&w[0], &w[1]), "{path:?}");
            }
            prop_assert!(linked(path.last().unwrap(), &path[0]), "{path:?}");
        } else {
            prop_assert!(result.is_ok(), "{result:?}");
        }
    }

    #[test]
    fn topological_order_puts_parents_first((n, edges) in dag()) {
        let (tables, rels) = build(n, &edges);
        let schema = SchemaMetadata::new(tables, rels).unwrap();
        let order = schema.topological_order().unwrap();
        let mut sorted = order.clone();
        sorted.sort();
        let mut names: Vec<String> = schema.table_names().map(str::to_string).collect();
        names.sort();
        prop_assert_eq!(sorted, names);
        let pos = |t: &str| order.iter().position(|o| o == t).unwrap();
        for r in schema.relationships() {
            prop_assert!(pos(&r.parent) < pos(&r.child));
        }
        let table_refs: Vec<&str> = schema.table_names().collect();
        prop_assert!(find_cycle(&table_refs, schema.relationships()).is_none());
    }
}

#[test]
fn two_table_cycle_is_named() {
    let (tables, rels) = build(2, &[(0, 1), (1, 0)]);
    match SchemaMetadata::new(tables, rels) {
        Err(Error::Cycle(path)) => assert_eq!(path.len(), 2),
        other => panic!("expected a cycle, got {other:?}"),
    }
}
