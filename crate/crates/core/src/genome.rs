//! Binary cell genomes.
//!
//! A cell has two inputs and `B` intermediate nodes. Node `j` picks exactly
//! two incoming edges among its `j + 2` candidate sources (both inputs plus
//! every earlier node) and one operation per edge. The genome stores, for
//! every node, one block of `K` op bits per candidate source:
//!
//! ```text
//! node 0: [src in0: K bits][src in1: K bits]
//! node 1: [src in0: K bits][src in1: K bits][src node0: K bits]
//! ...
//! ```
//!
//! A block is active when one of its bits is set. A valid genome has exactly
//! two active blocks per node and exactly one bit per active block.

use std::fmt;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_INPUTS: usize = 2;
pub const EDGES_PER_NODE: usize = 2;

/// Version tag written into genotype exports.
pub const GENOTYPE_FORMAT_VERSION: u32 = 1;

/// Dimensions of one cell: `B` intermediate nodes over a vocabulary of `K` ops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellShape {
    pub num_intermediate_nodes: usize,
    pub num_ops: usize,
}

impl CellShape {
    pub fn new(num_intermediate_nodes: usize, num_ops: usize) -> Result<Self> {
        let shape = Self {
            num_intermediate_nodes,
            num_ops,
        };
        shape.validate()?;
        Ok(shape)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_intermediate_nodes < 1 {
            return Err(Error::InvalidShape(
                "a cell needs at least one intermediate node".into(),
            ));
        }
        if self.num_ops < 2 {
            return Err(Error::InvalidShape(format!(
                "operation vocabulary must hold at least 2 ops, got {}",
                self.num_ops
            )));
        }
        Ok(())
    }

    pub fn num_inputs(&self) -> usize {
        NUM_INPUTS
    }

    pub fn edges_per_node(&self) -> usize {
        EDGES_PER_NODE
    }

    /// Candidate sources of node `node`: both inputs and every earlier node.
    pub fn candidate_sources(&self, node: usize) -> usize {
        node + NUM_INPUTS
    }

    /// Bit offset of node `node`'s segment.
    pub fn node_offset(&self, node: usize) -> usize {
        // sum_{i<node} (i + 2) * K
        self.num_ops * (node * node.saturating_sub(1) / 2 + NUM_INPUTS * node)
    }

    /// Number of bits in node `node`'s segment.
    pub fn node_len(&self, node: usize) -> usize {
        self.candidate_sources(node) * self.num_ops
    }

    pub fn genome_length(&self) -> usize {
        self.node_offset(self.num_intermediate_nodes)
    }

    pub fn bit_index(&self, node: usize, source: usize, op: usize) -> usize {
        self.node_offset(node) + source * self.num_ops + op
    }

    /// Inverse of [`bit_index`](Self::bit_index).
    pub fn locate_bit(&self, bit: usize) -> (usize, usize, usize) {
        let mut node = 0;
        while self.node_offset(node + 1) <= bit {
            node += 1;
        }
        let within = bit - self.node_offset(node);
        (node, within / self.num_ops, within % self.num_ops)
    }

    /// Number of valid genomes: prod_j C(j+2, 2) * K^2.
    pub fn valid_cell_count(&self) -> u128 {
        let k2 = (self.num_ops as u128).pow(EDGES_PER_NODE as u32);
        (0..self.num_intermediate_nodes)
            .map(|j| {
                let n = self.candidate_sources(j) as u128;
                n * (n - 1) / 2 * k2
            })
            .product()
    }
}

/// One operation in the vocabulary, with the cost used by the size objective.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpSpec {
    pub label: String,
    pub cost: f64,
}

/// Ordered list of operation labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpVocabulary {
    pub ops: Vec<OpSpec>,
}

impl OpVocabulary {
    /// The eight DARTS operations. Costs are relative parameter counts with
    /// `sep_conv_3x3` as the unit; parameter-free ops cost nothing.
    pub fn darts() -> Self {
        let ops = [
            ("none", 0.0),
            ("max_pool_3x3", 0.0),
            ("avg_pool_3x3", 0.0),
            ("skip_connect", 0.0),
            ("sep_conv_3x3", 1.0),
            ("sep_conv_5x5", 1.64),
            ("dil_conv_3x3", 0.5),
            ("dil_conv_5x5", 0.82),
        ];
        Self {
            ops: ops
                .iter()
                .map(|&(label, cost)| OpSpec {
                    label: label.to_string(),
                    cost,
                })
                .collect(),
        }
    }

    /// `op0..op{K-1}` with costs spaced evenly on `[0, 1]`.
    pub fn generic(num_ops: usize) -> Self {
        let denom = num_ops.saturating_sub(1).max(1) as f64;
        Self {
            ops: (0..num_ops)
                .map(|k| OpSpec {
                    label: format!("op{k}"),
                    cost: k as f64 / denom,
                })
                .collect(),
        }
    }

    /// DARTS labels when `K = 8`, generic labels otherwise.
    pub fn for_ops(num_ops: usize) -> Self {
        if num_ops == 8 {
            Self::darts()
        } else {
            Self::generic(num_ops)
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn cost(&self, op: usize) -> f64 {
        self.ops[op].cost
    }

    pub fn max_cost(&self) -> f64 {
        self.ops.iter().map(|o| o.cost).fold(0.0, f64::max)
    }

    pub fn label(&self, op: usize) -> &str {
        &self.ops[op].label
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.label == label)
    }
}

/// Fixed-length binary encoding of one cell.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Genome {
    shape: CellShape,
    bits: Vec<u8>,
}

impl fmt::Debug for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Genome({})", self.to_bit_string())
    }
}

impl Genome {
    pub fn zeros(shape: CellShape) -> Self {
        Self {
            shape,
            bits: vec![0; shape.genome_length()],
        }
    }

    /// Wraps raw bits. Validity is not required, only length and `{0, 1}`.
    pub fn from_bits(shape: CellShape, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != shape.genome_length() {
            return Err(Error::LengthMismatch {
                expected: shape.genome_length(),
                actual: bits.len(),
            });
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Parse(format!("bit {pos} is not 0 or 1")));
        }
        Ok(Self { shape, bits })
    }

    pub fn from_bit_string(shape: CellShape, s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::Parse(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bits(shape, bits)
    }

    pub fn shape(&self) -> CellShape {
        self.shape
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn to_bit_string(&self) -> String {
        self.bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
    }

    pub fn to_hex(&self) -> String {
        bits_to_hex(&self.bits)
    }

    pub fn from_hex(shape: CellShape, hex: &str) -> Result<Self> {
        Self::from_bits(shape, hex_to_bits(hex, shape.genome_length())?)
    }

    fn node_bits(&self, node: usize) -> &[u8] {
        let off = self.shape.node_offset(node);
        &self.bits[off..off + self.shape.node_len(node)]
    }

    fn node_bits_mut(&mut self, node: usize) -> &mut [u8] {
        let off = self.shape.node_offset(node);
        let len = self.shape.node_len(node);
        &mut self.bits[off..off + len]
    }

    /// Checks the per-node constraint, reporting the first violating node.
    pub fn validate(&self) -> Result<()> {
        let k = self.shape.num_ops;
        for node in 0..self.shape.num_intermediate_nodes {
            let mut active = 0;
            for (source, block) in self.node_bits(node).chunks(k).enumerate() {
                let set = block.iter().filter(|&&b| b == 1).count();
                if set > 1 {
                    return Err(Error::InvalidGenome {
                        node,
                        reason: format!("edge block from source {source} has {set} op bits set"),
                    });
                }
                active += set;
            }
            if active != EDGES_PER_NODE {
                return Err(Error::InvalidGenome {
                    node,
                    reason: format!("{active} active edges, expected {EDGES_PER_NODE}"),
                });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// Replaces node `node`'s segment with a uniformly random valid one.
    pub fn randomize_node<R: Rng + ?Sized>(&mut self, node: usize, rng: &mut R) {
        let k = self.shape.num_ops;
        let candidates = self.shape.candidate_sources(node);
        let segment = self.node_bits_mut(node);
        segment.fill(0);
        for source in index::sample(rng, candidates, EDGES_PER_NODE).into_iter() {
            let op = rng.gen_range(0..k);
            segment[source * k + op] = 1;
        }
    }

    /// Swaps node `node`'s segment with the same segment of `other`.
    pub fn swap_node(&mut self, other: &mut Genome, node: usize) {
        debug_assert_eq!(self.shape, other.shape);
        self.node_bits_mut(node).swap_with_slice(other.node_bits_mut(node));
    }
}

/// Packs a bit vector into lower-case hex, zero-padding the last nibble.
pub fn bits_to_hex(bits: &[u8]) -> String {
    bits.chunks(4)
        .map(|chunk| {
            let nibble = chunk
                .iter()
                .chain(std::iter::repeat(&0))
                .take(4)
                .fold(0u32, |acc, &b| (acc << 1) | b as u32);
            char::from_digit(nibble, 16).expect("nibble < 16")
        })
        .collect()
}

/// Inverse of [`bits_to_hex`] for a known bit length.
pub fn hex_to_bits(hex: &str, len: usize) -> Result<Vec<u8>> {
    if hex.len() != len.div_ceil(4) {
        return Err(Error::Parse(format!(
            "hex string of {} digits cannot hold {len} bits",
            hex.len()
        )));
    }
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let nibble = c
            .to_digit(16)
            .ok_or_else(|| Error::Parse(format!("invalid hex digit {c:?}")))?;
        for shift in (0..4).rev() {
            bits.push(((nibble >> shift) & 1) as u8);
        }
    }
    if bits[len..].iter().any(|&b| b != 0) {
        return Err(Error::Parse("nonzero padding bits in hex string".into()));
    }
    bits.truncate(len);
    Ok(bits)
}

/// One incoming edge of an intermediate node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    /// 0 and 1 are the cell inputs, `2 + i` is intermediate node `i`.
    pub source: usize,
    pub op: usize,
}

/// Decoded cell: each intermediate node with its incoming edges, ordered by
/// source. The cell output concatenates every intermediate node.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellDag {
    pub shape: CellShape,
    pub nodes: Vec<[Edge; EDGES_PER_NODE]>,
}

impl CellDag {
    pub fn edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(node, edges)| edges.iter().map(move |e| (node, e)))
    }

    /// Kahn's algorithm over inputs and intermediate nodes; `None` on a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = NUM_INPUTS + self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (node, edge) in self.edges() {
            if edge.source >= n {
                return None;
            }
            out[edge.source].push(NUM_INPUTS + node);
            indegree[NUM_INPUTS + node] += 1;
        }
        let mut ready: Vec<usize> = (0..n).filter(|&v| indegree[v] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(v) = ready.pop() {
            order.push(v);
            for &w in &out[v] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(w);
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// Decodes a valid genome into its cell DAG.
pub fn decode(genome: &Genome) -> Result<CellDag> {
    genome.validate()?;
    let shape = genome.shape;
    let k = shape.num_ops;
    let nodes = (0..shape.num_intermediate_nodes)
        .map(|node| {
            let mut edges = genome.node_bits(node).chunks(k).enumerate().filter_map(
                |(source, block)| block.iter().position(|&b| b == 1).map(|op| Edge { source, op }),
            );
            let first = edges.next().expect("validated");
            let second = edges.next().expect("validated");
            [first, second]
        })
        .collect();
    Ok(CellDag { shape, nodes })
}

/// Encodes a DAG with the canonical node-major, source-major, op-minor layout.
pub fn encode(dag: &CellDag) -> Result<Genome> {
    let shape = dag.shape;
    shape.validate()?;
    if dag.nodes.len() != shape.num_intermediate_nodes {
        return Err(Error::MalformedDag {
            node: dag.nodes.len().min(shape.num_intermediate_nodes),
            reason: format!(
                "dag has {} intermediate nodes, shape expects {}",
                dag.nodes.len(),
                shape.num_intermediate_nodes
            ),
        });
    }
    let mut genome = Genome::zeros(shape);
    for (node, edges) in dag.nodes.iter().enumerate() {
        for edge in edges {
            if edge.source >= shape.candidate_sources(node) {
                return Err(Error::MalformedDag {
                    node,
                    reason: format!("edge references source {} which is not earlier", edge.source),
                });
            }
            if edge.op >= shape.num_ops {
                return Err(Error::MalformedDag {
                    node,
                    reason: format!("op index {} outside vocabulary of {}", edge.op, shape.num_ops),
                });
            }
        }
        if edges[0].source == edges[1].source {
            return Err(Error::MalformedDag {
                node,
                reason: format!("both edges come from source {}", edges[0].source),
            });
        }
        for edge in edges {
            genome.bits[shape.bit_index(node, edge.source, edge.op)] = 1;
        }
    }
    Ok(genome)
}

/// Uniformly random valid genome.
pub fn random_genome<R: Rng + ?Sized>(shape: CellShape, rng: &mut R) -> Genome {
    let mut genome = Genome::zeros(shape);
    for node in 0..shape.num_intermediate_nodes {
        genome.randomize_node(node, rng);
    }
    genome
}

/// Minimal-change repair.
///
/// Per node: blocks with several op bits keep one uniformly chosen bit, then
/// surplus active blocks are cleared (uniform choice of survivors) or missing
/// ones are activated with a uniform op. Valid nodes draw nothing from `rng`.
pub fn repair<R: Rng + ?Sized>(genome: &Genome, rng: &mut R) -> Genome {
    let mut out = genome.clone();
    let shape = genome.shape;
    let k = shape.num_ops;
    for node in 0..shape.num_intermediate_nodes {
        let segment = out.node_bits_mut(node);
        let mut active = Vec::new();
        let mut inactive = Vec::new();
        for (source, block) in segment.chunks_mut(k).enumerate() {
            let set: Vec<usize> = (0..k).filter(|&op| block[op] == 1).collect();
            match set.len() {
                0 => inactive.push(source),
                1 => active.push(source),
                n => {
                    let keep = set[rng.gen_range(0..n)];
                    block.fill(0);
                    block[keep] = 1;
                    active.push(source);
                }
            }
        }
        if active.len() > EDGES_PER_NODE {
            let keep: Vec<usize> = index::sample(rng, active.len(), EDGES_PER_NODE)
                .into_iter()
                .map(|i| active[i])
                .collect();
            for &source in active.iter().filter(|s| !keep.contains(s)) {
                segment[source * k..(source + 1) * k].fill(0);
            }
        } else if active.len() < EDGES_PER_NODE {
            let missing = EDGES_PER_NODE - active.len();
            let picks: Vec<usize> = index::sample(rng, inactive.len(), missing)
                .into_iter()
                .map(|i| inactive[i])
                .collect();
            for source in picks {
                let op = rng.gen_range(0..k);
                segment[source * k + op] = 1;
            }
        }
    }
    out
}

/// `sum_k a[k] * b_sum[k]`.
pub fn genome_dot(a: &Genome, b_sum: &[u32]) -> Result<u64> {
    if a.len() != b_sum.len() {
        return Err(Error::LengthMismatch {
            expected: a.len(),
            actual: b_sum.len(),
        });
    }
    Ok(a.bits
        .iter()
        .zip(b_sum)
        .map(|(&bit, &s)| bit as u64 * s as u64)
        .sum())
}

/// Every valid genome of `shape`, in lexicographic order of
/// (node, first source, second source, first op, second op).
pub fn enumerate_valid(shape: CellShape) -> Vec<Genome> {
    let k = shape.num_ops;
    let per_node: Vec<Vec<[Edge; 2]>> = (0..shape.num_intermediate_nodes)
        .map(|node| {
            let n = shape.candidate_sources(node);
            let mut choices = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    for op_a in 0..k {
                        for op_b in 0..k {
                            choices.push([
                                Edge { source: a, op: op_a },
                                Edge { source: b, op: op_b },
                            ]);
                        }
                    }
                }
            }
            choices
        })
        .collect();
    let mut out = Vec::new();
    let mut cursor = vec![0usize; per_node.len()];
    loop {
        let dag = CellDag {
            shape,
            nodes: cursor
                .iter()
                .enumerate()
                .map(|(node, &i)| per_node[node][i])
                .collect(),
        };
        out.push(encode(&dag).expect("enumerated dags are well formed"));
        // odometer increment, last node fastest
        let mut pos = per_node.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            cursor[pos] += 1;
            if cursor[pos] < per_node[pos].len() {
                break;
            }
            cursor[pos] = 0;
        }
    }
}

/// Human-readable name of a source index.
pub fn source_label(source: usize) -> String {
    if source < NUM_INPUTS {
        format!("input{source}")
    } else {
        format!("node{}", source - NUM_INPUTS)
    }
}

fn parse_source_label(label: &str) -> Result<usize> {
    let parse = |digits: &str| {
        digits
            .parse::<usize>()
            .map_err(|_| Error::Parse(format!("bad source label {label:?}")))
    };
    if let Some(d) = label.strip_prefix("input") {
        let i = parse(d)?;
        if i >= NUM_INPUTS {
            return Err(Error::Parse(format!("bad source label {label:?}")));
        }
        Ok(i)
    } else if let Some(d) = label.strip_prefix("node") {
        Ok(parse(d)? + NUM_INPUTS)
    } else {
        Err(Error::Parse(format!("bad source label {label:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportEdge {
    pub source: String,
    pub op: String,
}

/// Genotype export document: per-node edges by label plus the raw bits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenotypeExport {
    pub format_version: u32,
    pub nodes: usize,
    pub ops: Vec<String>,
    pub cell: Vec<Vec<ExportEdge>>,
    pub bits: String,
}

impl GenotypeExport {
    pub fn new(genome: &Genome, vocab: &OpVocabulary) -> Result<Self> {
        if vocab.len() != genome.shape.num_ops {
            return Err(Error::LengthMismatch {
                expected: genome.shape.num_ops,
                actual: vocab.len(),
            });
        }
        let dag = decode(genome)?;
        Ok(Self {
            format_version: GENOTYPE_FORMAT_VERSION,
            nodes: genome.shape.num_intermediate_nodes,
            ops: vocab.ops.iter().map(|o| o.label.clone()).collect(),
            cell: dag
                .nodes
                .iter()
                .map(|edges| {
                    edges
                        .iter()
                        .map(|e| ExportEdge {
                            source: source_label(e.source),
                            op: vocab.label(e.op).to_string(),
                        })
                        .collect()
                })
                .collect(),
            bits: genome.to_bit_string(),
        })
    }

    /// Rebuilds the genome, checking that the edge list and raw bits agree.
    pub fn to_genome(&self) -> Result<Genome> {
        if self.format_version != GENOTYPE_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                what: "genotype",
                found: self.format_version.to_string(),
                expected: GENOTYPE_FORMAT_VERSION,
            });
        }
        let shape = CellShape::new(self.nodes, self.ops.len())?;
        let genome = Genome::from_bit_string(shape, &self.bits)?;
        let nodes = self
            .cell
            .iter()
            .enumerate()
            .map(|(node, edges)| {
                let parsed = edges
                    .iter()
                    .map(|e| {
                        let op = self.ops.iter().position(|o| *o == e.op).ok_or_else(|| {
                            Error::Parse(format!("unknown op label {:?}", e.op))
                        })?;
                        Ok(Edge {
                            source: parse_source_label(&e.source)?,
                            op,
                        })
                    })
                    .collect::<Result<Vec<Edge>>>()?;
                <[Edge; EDGES_PER_NODE]>::try_from(parsed).map_err(|_| Error::MalformedDag {
                    node,
                    reason: "node must list exactly two edges".into(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let from_edges = encode(&CellDag { shape, nodes })?;
        if from_edges != genome {
            return Err(Error::Parse(
                "genotype edge list disagrees with its bit string".into(),
            ));
        }
        Ok(genome)
    }
}
