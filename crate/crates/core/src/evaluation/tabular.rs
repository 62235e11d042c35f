//! Tabular benchmark: exhaustive objective tables for small search spaces.
//!
//! File layout (UTF-8, one record per line, fields separated by spaces):
//!
//! ```text
//! mpae-tabular
//! format_version 1
//! layers 3
//! nodes 1
//! ops op0:0 op1:1
//! objectives 2
//! records 64
//! <architecture key> <objective 0> <objective 1>
//! ...
//! ```
//!
//! The key is [`FullArchitecture::key`]. Floats use Rust's shortest
//! round-trip formatting, so a written table reads back bit-identically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::{FullArchitecture, ObjectiveVector};
use crate::error::{Error, Result};
use crate::genome::{CellShape, OpSpec, OpVocabulary};

pub const TABULAR_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "mpae-tabular";

#[derive(Clone, Debug, PartialEq)]
pub struct TabularBenchmark {
    shape: CellShape,
    layers: usize,
    vocab: OpVocabulary,
    num_objectives: usize,
    table: BTreeMap<String, ObjectiveVector>,
}

impl TabularBenchmark {
    pub fn new(
        shape: CellShape,
        layers: usize,
        vocab: OpVocabulary,
        num_objectives: usize,
        table: BTreeMap<String, ObjectiveVector>,
    ) -> Result<Self> {
        if vocab.len() != shape.num_ops {
            return Err(Error::LengthMismatch {
                expected: shape.num_ops,
                actual: vocab.len(),
            });
        }
        for (key, objectives) in &table {
            FullArchitecture::from_key(shape, layers, key)?;
            if objectives.len() != num_objectives {
                return Err(Error::LengthMismatch {
                    expected: num_objectives,
                    actual: objectives.len(),
                });
            }
        }
        Ok(Self {
            shape,
            layers,
            vocab,
            num_objectives,
            table,
        })
    }

    pub fn shape(&self) -> CellShape {
        self.shape
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn vocab(&self) -> &OpVocabulary {
        &self.vocab
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&ObjectiveVector> {
        self.table.get(key)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &ObjectiveVector)> {
        self.table.iter()
    }

    pub fn lookup(&self, arch: &FullArchitecture) -> Result<ObjectiveVector> {
        let key = arch.key();
        self.table.get(&key).cloned().ok_or(Error::MissingKey(key))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let ops: Vec<String> = self
            .vocab
            .ops
            .iter()
            .map(|o| format!("{}:{}", o.label, o.cost))
            .collect();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "format_version {TABULAR_FORMAT_VERSION}");
        let _ = writeln!(out, "layers {}", self.layers);
        let _ = writeln!(out, "nodes {}", self.shape.num_intermediate_nodes);
        let _ = writeln!(out, "ops {}", ops.join(" "));
        let _ = writeln!(out, "objectives {}", self.num_objectives);
        let _ = writeln!(out, "records {}", self.table.len());
        for (key, objectives) in &self.table {
            out.push_str(key);
            for v in objectives.values() {
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::Parse(format!("tabular file ends before {what}")))
        };
        if next("magic")? != MAGIC {
            return Err(Error::Parse("not a tabular benchmark file".into()));
        }
        let version = header_value(next("format_version")?, "format_version")?;
        if version != TABULAR_FORMAT_VERSION.to_string() {
            return Err(Error::VersionMismatch {
                what: "tabular benchmark",
                found: version.to_string(),
                expected: TABULAR_FORMAT_VERSION,
            });
        }
        let layers = parse_usize(header_value(next("layers")?, "layers")?)?;
        let nodes = parse_usize(header_value(next("nodes")?, "nodes")?)?;
        let ops = header_value(next("ops")?, "ops")?
            .split_whitespace()
            .map(|tok| {
                let (label, cost) = tok
                    .rsplit_once(':')
                    .ok_or_else(|| Error::Parse(format!("op entry {tok:?} lacks a cost")))?;
                Ok(OpSpec {
                    label: label.to_string(),
                    cost: parse_f64(cost)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let num_objectives = parse_usize(header_value(next("objectives")?, "objectives")?)?;
        let records = parse_usize(header_value(next("records")?, "records")?)?;
        let shape = CellShape::new(nodes, ops.len())?;
        let mut table = BTreeMap::new();
        for line in lines.by_ref() {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let key = fields.next().expect("nonempty line").to_string();
            let values = fields.map(parse_f64).collect::<Result<Vec<_>>>()?;
            if values.len() != num_objectives {
                return Err(Error::Parse(format!(
                    "record {key} has {} objectives, header says {num_objectives}",
                    values.len()
                )));
            }
            if table.insert(key.clone(), ObjectiveVector::new(values)?).is_some() {
                return Err(Error::Parse(format!("duplicate record {key}")));
            }
        }
        if table.len() != records {
            return Err(Error::Parse(format!(
                "header announces {records} records, found {}",
                table.len()
            )));
        }
        Self::new(shape, layers, OpVocabulary { ops }, num_objectives, table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

fn header_value<'a>(line: &'a str, name: &str) -> Result<&'a str> {
    line.strip_prefix(name)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Parse(format!("expected header field {name:?}, got {line:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("expected an integer, got {s:?}")))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("expected a number, got {s:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{compose, Backend, Evaluator, LandscapeParams, SyntheticLandscape};
    use crate::genome::{enumerate_valid, random_genome};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table(layers: usize) -> TabularBenchmark {
        let shape = CellShape::new(1, 2).unwrap();
        let vocab = OpVocabulary::generic(2);
        let land = SyntheticLandscape::new(shape, layers, vocab.clone(), LandscapeParams::default());
        let cells = enumerate_valid(shape);
        let mut map = BTreeMap::new();
        let mut cursor = vec![0usize; layers];
        'outer: loop {
            let picks: Vec<_> = cursor.iter().map(|&i| cells[i].clone()).collect();
            let arch = compose(&picks, layers).unwrap();
            map.insert(arch.key(), land.evaluate(&arch).unwrap());
            for pos in (0..layers).rev() {
                cursor[pos] += 1;
                if cursor[pos] < cells.len() {
                    continue 'outer;
                }
                cursor[pos] = 0;
            }
            break;
        }
        TabularBenchmark::new(shape, layers, vocab, 2, map).unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let t = table(3);
        assert_eq!(t.len(), 64);
        let text = t.to_text();
        let back = TabularBenchmark::from_text(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn lookup_agrees_with_direct_reads() {
        let t = table(3);
        let backend = Backend::Tabular(t.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let picks: Vec<_> = (0..3).map(|_| random_genome(t.shape(), &mut rng)).collect();
            let arch = compose(&picks, 3).unwrap();
            assert_eq!(&backend.evaluate(&arch, None).unwrap(), t.get(&arch.key()).unwrap());
        }
    }

    #[test]
    fn missing_key_is_reported() {
        let t = table(2);
        let mut map: BTreeMap<_, _> = t.entries().map(|(k, v)| (k.clone(), v.clone())).collect();
        let (first, _) = map.pop_first().unwrap();
        let partial = TabularBenchmark::new(t.shape(), 2, t.vocab().clone(), 2, map).unwrap();
        let arch = FullArchitecture::from_key(t.shape(), 2, &first).unwrap();
        assert!(matches!(partial.lookup(&arch), Err(Error::MissingKey(k)) if k == first));
    }

    #[test]
    fn rejects_bad_headers() {
        let text = table(2).to_text();
        let bumped = text.replacen("format_version 1", "format_version 7", 1);
        assert!(matches!(
            TabularBenchmark::from_text(&bumped),
            Err(Error::VersionMismatch { .. })
        ));
        let short = text.replacen("records 16", "records 17", 1);
        assert!(TabularBenchmark::from_text(&short).is_err());
        assert!(TabularBenchmark::from_text("hello\n").is_err());
    }
}
