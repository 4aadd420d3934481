//! Deterministic fixture databases with the table/relationship layout of three
//! public relational benchmarks.
//!
//! Column layouts are our own construction. Numerical columns are drawn from
//! Gaussian mixtures (some shifted by a parent-row value), categorical columns
//! from Zipf-weighted vocabularies, and one-to-many child counts per parent from
//! a Poisson distribution. Every root table gets `n_root_rows` rows.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnData, Provenance, RelationalDataset, Table};
use crate::error::{Error, Result};
use crate::schema::{ColumnKind, ColumnSpec, Relationship, RelationshipKind, SchemaMetadata, TableSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureShape {
    /// 5 tables: three parents, two children with two parents each.
    University,
    /// 7 tables: four parents, three children with two parents each.
    Hepatitis,
    /// 2 tables joined by one one-to-many relationship.
    Pyrimidine,
}

impl FixtureShape {
    pub const ALL: [FixtureShape; 3] =
        [FixtureShape::University, FixtureShape::Hepatitis, FixtureShape::Pyrimidine];

    pub fn name(self) -> &'static str {
        match self {
            FixtureShape::University => "university",
            FixtureShape::Hepatitis => "hepatitis",
            FixtureShape::Pyrimidine => "pyrimidine",
        }
    }
}

impl fmt::Display for FixtureShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FixtureShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureShape::ALL
            .into_iter()
            .find(|shape| shape.name() == s)
            .ok_or_else(|| Error::argument(alloc::format!("unknown fixture shape `{s}`")))
    }
}

#[derive(Clone, Copy)]
enum Gen {
    /// (weight, mean, std) components.
    Mixture(&'static [(f64, f64, f64)]),
    Zipf(&'static [&'static str]),
    Discrete(&'static [&'static str]),
    /// `scale * parent.column + N(0, noise)`, parent reached through `fk`.
    Linked { fk: &'static str, column: &'static str, scale: f64, noise: f64 },
}

impl Gen {
    fn kind(self) -> ColumnKind {
        match self {
            Gen::Mixture(_) | Gen::Linked { .. } => ColumnKind::Numerical,
            Gen::Zipf(_) => ColumnKind::Categorical,
            Gen::Discrete(_) => ColumnKind::Discrete,
        }
    }
}

struct TablePlan {
    name: &'static str,
    columns: &'static [(&'static str, Gen)],
    /// Poisson mean of children per driving parent row.
    mean_children: f64,
}

struct Plan {
    tables: &'static [TablePlan],
    relationships: &'static [(&'static str, &'static str, RelationshipKind, &'static str)],
}

use RelationshipKind::{OneToMany, OneToOne};

const PYRIMIDINE: Plan = Plan {
    tables: &[
        TablePlan {
            name: "molecule",
            columns: &[
                ("weight", Gen::Mixture(&[(0.6, 120.0, 10.0), (0.4, 180.0, 15.0)])),
                ("polarity", Gen::Mixture(&[(0.5, -1.0, 0.3), (0.5, 1.5, 0.5)])),
                ("family", Gen::Zipf(&["pyrimidine", "purine", "pteridine", "quinazoline", "other"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "measurement",
            columns: &[
                ("activity", Gen::Linked { fk: "molecule_id", column: "weight", scale: 0.05, noise: 0.5 }),
                ("temperature", Gen::Mixture(&[(0.7, 25.0, 2.0), (0.3, 37.0, 1.0)])),
                ("assay", Gen::Zipf(&["binding", "inhibition", "toxicity", "solubility"])),
                ("replicate", Gen::Discrete(&["1", "2", "3"])),
            ],
            mean_children: 3.0,
        },
    ],
    relationships: &[("molecule", "measurement", OneToMany, "molecule_id")],
};

const UNIVERSITY: Plan = Plan {
    tables: &[
        TablePlan {
            name: "course",
            columns: &[
                ("credits", Gen::Mixture(&[(0.5, 3.0, 0.3), (0.5, 6.0, 0.5)])),
                ("difficulty", Gen::Mixture(&[(1.0, 2.5, 0.8)])),
                ("department", Gen::Zipf(&["math", "physics", "biology", "history", "art"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "professor",
            columns: &[
                ("salary", Gen::Mixture(&[(0.7, 60000.0, 5000.0), (0.3, 95000.0, 8000.0)])),
                ("popularity", Gen::Mixture(&[(1.0, 3.0, 1.0)])),
                ("rank", Gen::Zipf(&["assistant", "associate", "full"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "student",
            columns: &[
                ("gpa", Gen::Mixture(&[(0.6, 3.2, 0.3), (0.4, 2.4, 0.4)])),
                ("age", Gen::Mixture(&[(0.8, 21.0, 1.5), (0.2, 30.0, 4.0)])),
                ("program", Gen::Zipf(&["bachelor", "master", "phd"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "registration",
            columns: &[
                ("grade", Gen::Linked { fk: "student_id", column: "gpa", scale: 1.0, noise: 0.4 }),
                ("hours", Gen::Mixture(&[(0.5, 40.0, 5.0), (0.5, 80.0, 10.0)])),
                ("status", Gen::Zipf(&["passed", "enrolled", "failed", "withdrawn"])),
            ],
            mean_children: 3.0,
        },
        TablePlan {
            name: "research_assistant",
            columns: &[
                ("stipend", Gen::Mixture(&[(0.5, 1500.0, 100.0), (0.5, 2500.0, 200.0)])),
                ("weekly_hours", Gen::Mixture(&[(1.0, 15.0, 3.0)])),
                ("capability", Gen::Discrete(&["1", "2", "3", "4", "5"])),
            ],
            mean_children: 0.0,
        },
    ],
    relationships: &[
        ("course", "registration", OneToMany, "course_id"),
        ("student", "registration", OneToMany, "student_id"),
        ("professor", "research_assistant", OneToMany, "professor_id"),
        ("student", "research_assistant", OneToOne, "student_id"),
    ],
};

const HEPATITIS: Plan = Plan {
    tables: &[
        TablePlan {
            name: "bio",
            columns: &[
                ("fibros", Gen::Mixture(&[(0.5, 1.0, 0.3), (0.5, 3.0, 0.5)])),
                ("activity", Gen::Mixture(&[(1.0, 2.0, 0.7)])),
                ("biopsy", Gen::Zipf(&["positive", "negative"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "dispat",
            columns: &[
                ("age", Gen::Mixture(&[(0.5, 35.0, 6.0), (0.5, 55.0, 8.0)])),
                ("weight", Gen::Mixture(&[(1.0, 72.0, 10.0)])),
                ("type", Gen::Zipf(&["B", "C", "B+C"])),
                ("sex", Gen::Zipf(&["M", "F"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "indis",
            columns: &[
                ("got", Gen::Mixture(&[(0.7, 40.0, 8.0), (0.3, 120.0, 20.0)])),
                ("gpt", Gen::Mixture(&[(0.7, 45.0, 9.0), (0.3, 150.0, 25.0)])),
                ("alb", Gen::Zipf(&["normal", "low", "high"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "inf",
            columns: &[
                ("dur", Gen::Mixture(&[(0.5, 6.0, 1.0), (0.5, 12.0, 2.0)])),
                ("dose", Gen::Mixture(&[(1.0, 3.0, 0.5)])),
                ("regimen", Gen::Zipf(&["interferon", "ribavirin", "combined", "none"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "rel11",
            columns: &[
                ("score", Gen::Linked { fk: "bio_id", column: "fibros", scale: 2.0, noise: 0.5 }),
                ("delay", Gen::Mixture(&[(1.0, 10.0, 3.0)])),
                ("grade", Gen::Discrete(&["0", "1", "2", "3"])),
            ],
            mean_children: 0.0,
        },
        TablePlan {
            name: "rel12",
            columns: &[
                ("ratio", Gen::Linked { fk: "indis_id", column: "got", scale: 0.01, noise: 0.1 }),
                ("visits", Gen::Mixture(&[(0.5, 4.0, 1.0), (0.5, 9.0, 1.5)])),
                ("clinic", Gen::Zipf(&["north", "south", "east", "west"])),
            ],
            mean_children: 2.0,
        },
        TablePlan {
            name: "rel13",
            columns: &[
                ("response", Gen::Linked { fk: "inf_id", column: "dose", scale: 1.5, noise: 0.3 }),
                ("cost", Gen::Mixture(&[(0.6, 900.0, 80.0), (0.4, 1500.0, 120.0)])),
                ("outcome", Gen::Zipf(&["improved", "stable", "worse"])),
            ],
            mean_children: 0.0,
        },
    ],
    relationships: &[
        ("bio", "rel11", OneToOne, "bio_id"),
        ("dispat", "rel11", OneToMany, "dispat_id"),
        ("dispat", "rel12", OneToMany, "dispat_id"),
        ("indis", "rel12", OneToMany, "indis_id"),
        ("dispat", "rel13", OneToMany, "dispat_id"),
        ("inf", "rel13", OneToOne, "inf_id"),
    ],
};

fn plan(shape: FixtureShape) -> &'static Plan {
    match shape {
        FixtureShape::University => &UNIVERSITY,
        FixtureShape::Hepatitis => &HEPATITIS,
        FixtureShape::Pyrimidine => &PYRIMIDINE,
    }
}

/// Schema of a fixture shape: `id` primary key, then foreign keys, then data columns.
pub fn fixture_schema(shape: FixtureShape) -> SchemaMetadata {
    let plan = plan(shape);
    let mut tables = BTreeMap::new();
    for t in plan.tables {
        let mut columns = alloc::vec![ColumnSpec::new("id", ColumnKind::PrimaryKey)];
        for (parent, child, _, fk) in plan.relationships {
            if *child == t.name {
                columns.push(ColumnSpec::foreign_key(*fk, *parent));
            }
        }
        for (name, gen) in t.columns {
            columns.push(ColumnSpec::new(*name, gen.kind()));
        }
        tables.insert(t.name.to_string(), TableSpec::new(columns));
    }
    let relationships = plan
        .relationships
        .iter()
        .map(|(p, c, k, fk)| Relationship::new(*p, *c, *k, *fk))
        .collect();
    SchemaMetadata::new(tables, relationships).expect("fixture schemas are valid")
}

pub fn generate_fixture(shape: FixtureShape, n_root_rows: usize, seed: u64) -> Result<RelationalDataset> {
    if n_root_rows < 10 {
        return Err(Error::argument("fixtures need at least 10 root rows"));
    }
    let plan = plan(shape);
    let schema = fixture_schema(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tables: BTreeMap<String, Table> = BTreeMap::new();

    for name in schema.topological_order()? {
        let spec = schema.table(&name)?;
        let blueprint = plan.tables.iter().find(|t| t.name == name).expect("planned table");
        let parents = schema.parents(&name)?;

        let mut fk_columns: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
        let n_rows = if parents.is_empty() {
            n_root_rows
        } else if let Some(one) = parents.iter().find(|r| r.kind == RelationshipKind::OneToOne) {
            let count = tables[&one.parent].n_rows();
            fk_columns.insert(&one.foreign_key_column, (0..count as u64).collect());
            count
        } else {
            let driver = parents[0];
            let count = tables[&driver.parent].n_rows();
            let poisson = Poisson::new(blueprint.mean_children).map_err(|_| {
                Error::argument("fixture child mean must be positive for one-to-many drivers")
            })?;
            let mut fks = Vec::new();
            for key in 0..count as u64 {
                let children = poisson.sample(&mut rng) as usize;
                fks.extend(core::iter::repeat_n(key, children));
            }
            let n = fks.len();
            fk_columns.insert(&driver.foreign_key_column, fks);
            n
        };
        for rel in &parents {
            if !fk_columns.contains_key(rel.foreign_key_column.as_str()) {
                let parent_rows = tables[&rel.parent].n_rows() as u64;
                let fks = (0..n_rows).map(|_| rng.random_range(0..parent_rows)).collect();
                fk_columns.insert(&rel.foreign_key_column, fks);
            }
        }

        let mut data = Vec::with_capacity(spec.columns.len());
        for col in &spec.columns {
            let column = match col.kind {
                ColumnKind::PrimaryKey => ColumnData::Key((0..n_rows as u64).collect()),
                ColumnKind::ForeignKey => ColumnData::Key(fk_columns.remove(col.name.as_str()).expect("fk")),
                _ => {
                    let gen = blueprint
                        .columns
                        .iter()
                        .find(|(n, _)| *n == col.name)
                        .map(|(_, g)| *g)
                        .expect("planned column");
                    sample_column(gen, n_rows, &schema, &name, &tables, &data, spec, &mut rng)
                }
            };
            data.push(column);
        }
        tables.insert(name.clone(), Table::new(&name, spec, data)?);
    }

    RelationalDataset::new(schema, tables, Provenance::Fixture)
}

#[allow(clippy::too_many_arguments)]
fn sample_column(
    gen: Gen,
    n_rows: usize,
    schema: &SchemaMetadata,
    table: &str,
    built: &BTreeMap<String, Table>,
    columns_so_far: &[ColumnData],
    spec: &TableSpec,
    rng: &mut ChaCha8Rng,
) -> ColumnData {
    match gen {
        Gen::Mixture(components) => ColumnData::Numerical(
            (0..n_rows).map(|_| round4(sample_mixture(components, rng))).collect(),
        ),
        Gen::Zipf(vocab) | Gen::Discrete(vocab) => {
            let weights: Vec<f64> = (1..=vocab.len()).map(|r| 1.0 / libm::pow(r as f64, 1.1)).collect();
            let total: f64 = weights.iter().sum();
            ColumnData::Categorical(
                (0..n_rows)
                    .map(|_| {
                        let mut u = rng.random::<f64>() * total;
                        let mut pick = vocab.len() - 1;
                        for (i, w) in weights.iter().enumerate() {
                            if u < *w {
                                pick = i;
                                break;
                            }
                            u -= w;
                        }
                        vocab[pick].to_string()
                    })
                    .collect(),
            )
        }
        Gen::Linked { fk, column, scale, noise } => {
            let rel = schema
                .relationships()
                .iter()
                .find(|r| r.child == table && r.foreign_key_column == fk)
                .expect("linked fk");
            let parent_values = built[&rel.parent].numerical(column).expect("linked column");
            let fk_index = spec.columns.iter().position(|c| c.name == fk).expect("fk column");
            let ColumnData::Key(fks) = &columns_so_far[fk_index] else {
                unreachable!("foreign keys precede data columns")
            };
            let normal = Normal::new(0.0, noise).expect("positive noise");
            ColumnData::Numerical(
                fks.iter()
                    .map(|k| round4(scale * parent_values[*k as usize] + normal.sample(rng)))
                    .collect(),
            )
        }
    }
}

fn sample_mixture(components: &[(f64, f64, f64)], rng: &mut ChaCha8Rng) -> f64 {
    let mut u: f64 = rng.random();
    for (w, mean, std) in components {
        if u < *w {
            return Normal::new(*mean, *std).expect("valid").sample(rng);
        }
        u -= w;
    }
    let (_, mean, std) = components[components.len() - 1];
    Normal::new(mean, std).expect("valid").sample(rng)
}

fn round4(x: f64) -> f64 {
    libm::round(x * 1e4) / 1e4
}
