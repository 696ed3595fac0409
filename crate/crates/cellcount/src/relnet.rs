//! Two-terminal network unreliability by reduction to projected counting.
//!
//! Edges fail independently; an edge's up-probability is a dyadic rational
//! `k/2^m`. Weighted edges are first replaced by chain-graph gadgets of
//! `m` half-probability edges (the gadget connects its endpoints in
//! exactly `k` of its `2^m` edge states), then disconnection of the
//! unweighted graph is encoded as a CNF whose models, projected on the
//! edge variables, are exactly the disconnecting edge subsets. The
//! unreliability is `count / 2^M`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::counting::{approxmc2_with_oracle, ApproxCount, CountError};
use crate::formula::{CnfFormula, Formula, ProblemInstance, SamplingSet, Var};
use crate::oracle::{Backend, InstanceOracle};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphParseError {
    #[error("line {0}: malformed graph header")]
    MalformedHeader(usize),
    #[error("line {0}: malformed edge line")]
    MalformedEdge(usize),
    #[error("line {line}: edge probability {k}/2^{m} invalid (need odd k, 1 ≤ k < 2^m)")]
    BadProbability { line: usize, k: u64, m: u32 },
    #[error("line {line}: node {node} out of range (graph declares {nodes})")]
    DanglingNode { line: usize, node: u32, nodes: u32 },
    #[error("missing `p graph` header")]
    MissingHeader,
}

#[derive(Debug, Error)]
pub enum RelnetError {
    #[error("node {0} not in the graph")]
    MissingNode(u32),
    #[error("source and sink must differ")]
    SameEndpoints,
    #[error("graph too large for brute force ({0} edges, cap 24)")]
    TooLargeForBruteForce(usize),
    #[error(transparent)]
    Count(#[from] CountError),
}

/// One edge with dyadic up-probability `k/2^m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub start: u32,
    pub end: u32,
    pub k: u64,
    pub m: u32,
}

impl Edge {
    pub fn up_probability(&self) -> BigRational {
        BigRational::new(BigInt::from(self.k), BigInt::one() << self.m as usize)
    }

    fn is_half(&self) -> bool {
        self.k == 1 && self.m == 1
    }
}

/// A probabilistic graph; multi-edges are allowed, orientation is kept but
/// interpreted per the `directed` flag of the encoding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliabilityGraph {
    pub nodes: u32,
    pub edges: Vec<Edge>,
}

impl ReliabilityGraph {
    /// Total bit width `M = Σ mᵢ`.
    pub fn total_bits(&self) -> u32 {
        self.edges.iter().map(|e| e.m).sum()
    }
}

/// Parses the graph format: `p graph <|V|> <|E|>`, `e <u> <v> [k m]`
/// lines (probability defaults to 1/2), `c` comment lines.
pub fn parse_graph(text: &str) -> Result<ReliabilityGraph, GraphParseError> {
    let mut header: Option<(u32, u64)> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.first() {
            None | Some(&"c") => continue,
            Some(&"p") => {
                if toks.len() != 4 || toks[1] != "graph" {
                    return Err(GraphParseError::MalformedHeader(line_no));
                }
                let nodes: u32 = toks[2]
                    .parse()
                    .map_err(|_| GraphParseError::MalformedHeader(line_no))?;
                let m: u64 = toks[3]
                    .parse()
                    .map_err(|_| GraphParseError::MalformedHeader(line_no))?;
                header = Some((nodes, m));
            }
            Some(&"e") => {
                let (nodes, _) = header.ok_or(GraphParseError::MissingHeader)?;
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(GraphParseError::MalformedEdge(line_no));
                }
                let u: u32 = toks[1]
                    .parse()
                    .map_err(|_| GraphParseError::MalformedEdge(line_no))?;
                let v: u32 = toks[2]
                    .parse()
                    .map_err(|_| GraphParseError::MalformedEdge(line_no))?;
                for &node in &[u, v] {
                    if node == 0 || node > nodes {
                        return Err(GraphParseError::DanglingNode {
                            line: line_no,
                            node,
                            nodes,
                        });
                    }
                }
                let (k, m) = if toks.len() == 5 {
                    let k: u64 = toks[3]
                        .parse()
                        .map_err(|_| GraphParseError::MalformedEdge(line_no))?;
                    let m: u32 = toks[4]
                        .parse()
                        .map_err(|_| GraphParseError::MalformedEdge(line_no))?;
                    (k, m)
                } else {
                    (1, 1)
                };
                if m == 0 || m >= 32 || k % 2 == 0 || k >= 1u64 << m {
                    return Err(GraphParseError::BadProbability { line: line_no, k, m });
                }
                edges.push(Edge {
                    start: u,
                    end: v,
                    k,
                    m,
                });
            }
            Some(_) => return Err(GraphParseError::MalformedEdge(line_no)),
        }
    }
    let (nodes, _) = header.ok_or(GraphParseError::MissingHeader)?;
    Ok(ReliabilityGraph { nodes, edges })
}

/// Replaces each weighted edge by its chain-graph gadget, leaving
/// half-probability edges untouched. Returns the unweighted graph and `M`.
///
/// The gadget walks the bits `c₁…c_m` of `k`: a zero bit adds a series
/// edge to a fresh node, a one bit adds an edge straight to the far
/// endpoint (consecutive ∨-connected slots share a node). This yields
/// `z+2` gadget nodes (`z` = number of zero bits) and `m` edges, and the
/// number of gadget edge-states connecting the endpoints is exactly `k`.
pub fn expand_weighted_edges(g: &ReliabilityGraph) -> (ReliabilityGraph, u32) {
    let mut nodes = g.nodes;
    let mut edges = Vec::with_capacity(g.edges.len());
    let mut total_bits = 0;
    for e in &g.edges {
        total_bits += e.m;
        if e.is_half() {
            edges.push(*e);
            continue;
        }
        let mut current = e.start;
        for j in 0..e.m {
            let bit = e.k >> (e.m - 1 - j) & 1 == 1;
            if bit {
                edges.push(Edge {
                    start: current,
                    end: e.end,
                    k: 1,
                    m: 1,
                });
            } else {
                nodes += 1;
                edges.push(Edge {
                    start: current,
                    end: nodes,
                    k: 1,
                    m: 1,
                });
                current = nodes;
            }
        }
    }
    (ReliabilityGraph { nodes, edges }, total_bits)
}

/// Encodes disconnection of `u` from `v` as a CNF over node variables
/// `p_w` and edge variables `q_e`, sampling set `{q_e}`.
///
/// Clauses: `(p_u)`, `(¬p_v)` and per edge `(¬p_start ∨ ¬q_e ∨ p_end)`
/// (plus the reverse implication when undirected). Projected on the edge
/// variables, models are exactly the edge subsets under which `v` is
/// unreachable from `u`.
pub fn encode_disconnection(
    g: &ReliabilityGraph,
    u: u32,
    v: u32,
    directed: bool,
) -> Result<ProblemInstance, RelnetError> {
    for &node in &[u, v] {
        if node == 0 || node > g.nodes {
            return Err(RelnetError::MissingNode(node));
        }
    }
    if u == v {
        return Err(RelnetError::SameEndpoints);
    }
    let num_vars = g.nodes + g.edges.len() as u32;
    let edge_var = |i: usize| Var::new(g.nodes + i as u32 + 1);
    let node_var = |w: u32| Var::new(w);
    let mut f = CnfFormula::new(num_vars);
    f.add_clause(vec![node_var(u).positive()]);
    f.add_clause(vec![node_var(v).negative()]);
    for (i, e) in g.edges.iter().enumerate() {
        let q = edge_var(i);
        f.add_clause(vec![
            node_var(e.start).negative(),
            q.negative(),
            node_var(e.end).positive(),
        ]);
        if !directed {
            f.add_clause(vec![
                node_var(e.end).negative(),
                q.negative(),
                node_var(e.start).positive(),
            ]);
        }
    }
    let sampling_set = SamplingSet::new((0..g.edges.len()).map(edge_var).collect());
    Ok(ProblemInstance {
        formula: Formula::Cnf(f),
        sampling_set,
        weights: crate::formula::WeightMap::new(),
    })
}

/// The estimate: an unreliability in [0,1] with the raw count attached.
#[derive(Debug, Clone)]
pub struct ReliabilityEstimate {
    pub unreliability: BigRational,
    pub raw_count: ApproxCount,
    pub total_bits: u32,
    pub epsilon: f64,
    pub delta: f64,
}

/// The three-step pipeline: expand gadgets, encode disconnection, count.
/// `r(u,v) = count / 2^M`, inheriting the counter's PAC guarantee.
pub fn estimate_unreliability(
    g: &ReliabilityGraph,
    u: u32,
    v: u32,
    directed: bool,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<ReliabilityEstimate, RelnetError> {
    let (expanded, total_bits) = expand_weighted_edges(g);
    let instance = encode_disconnection(&expanded, u, v, directed)?;
    let mut oracle = InstanceOracle::new(&instance, Backend::from_env());
    let raw = approxmc2_with_oracle(&mut oracle, epsilon, delta, seed)?;
    // A high-side approximation can overshoot the probability space; the
    // reported unreliability stays in [0,1] (raw_count is unclamped).
    let unreliability = BigRational::new(
        BigInt::from(raw.value()),
        BigInt::one() << total_bits as usize,
    )
    .min(BigRational::one());
    Ok(ReliabilityEstimate {
        unreliability,
        raw_count: raw,
        total_bits,
        epsilon,
        delta,
    })
}

/// Exact unreliability by exhaustive edge-subset enumeration (test oracle;
/// cap 24 edges). Connectivity by search over up-edges.
pub fn brute_force_unreliability(
    g: &ReliabilityGraph,
    u: u32,
    v: u32,
    directed: bool,
) -> Result<BigRational, RelnetError> {
    if g.edges.len() > 24 {
        return Err(RelnetError::TooLargeForBruteForce(g.edges.len()));
    }
    for &node in &[u, v] {
        if node == 0 || node > g.nodes {
            return Err(RelnetError::MissingNode(node));
        }
    }
    if u == v {
        return Err(RelnetError::SameEndpoints);
    }
    let mut total = BigRational::zero();
    for subset in 0..1u32 << g.edges.len() {
        if !connected_under(g, subset, u, v, directed) {
            let mut p = BigRational::one();
            for (i, e) in g.edges.iter().enumerate() {
                let up = e.up_probability();
                if subset >> i & 1 == 1 {
                    p *= up;
                } else {
                    p *= BigRational::one() - up;
                }
            }
            total += p;
        }
    }
    Ok(total)
}

/// Reachability of `v` from `u` using only the edges present in `subset`.
pub fn connected_under(
    g: &ReliabilityGraph,
    subset: u32,
    u: u32,
    v: u32,
    directed: bool,
) -> bool {
    let mut reached = vec![false; g.nodes as usize + 1];
    let mut queue = vec![u];
    reached[u as usize] = true;
    while let Some(w) = queue.pop() {
        if w == v {
            return true;
        }
        for (i, e) in g.edges.iter().enumerate() {
            if subset >> i & 1 == 0 {
                continue;
            }
            if e.start == w && !reached[e.end as usize] {
                reached[e.end as usize] = true;
                queue.push(e.end);
            }
            if !directed && e.end == w && !reached[e.start as usize] {
                reached[e.start as usize] = true;
                queue.push(e.start);
            }
        }
    }
    reached[v as usize]
}
