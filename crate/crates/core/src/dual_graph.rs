//! Weighted resolution dual graphs.
//!
//! Vertices are exceptional curves (weighted by `-E^2`) or boundary
//! components (carrying a coefficient in `[0, 1]`). Nodes are kept sorted by
//! id; that lexicographic order is the canonical order used by every
//! computation downstream.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::linalg;
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("edge references unknown id `{0}`")]
    UnknownId(String),
    #[error("curve `{id}` has non-positive weight {weight}")]
    NonPositiveWeight { id: String, weight: i64 },
    #[error("boundary `{id}` has coefficient {coeff} outside [0,1]")]
    CoeffOutOfRange { id: String, coeff: Rational },
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("edge {0}-{1} has non-positive multiplicity")]
    NonPositiveMultiplicity(String, String),
    #[error("graph has no exceptional curves")]
    Empty,
    #[error("exceptional locus is disconnected")]
    Disconnected,
    #[error("chain needs at least one weight")]
    EmptyChain,
    #[error("E-type family {0} outside 1..=15")]
    FamilyOutOfRange(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// A smooth rational exceptional curve with `weight = -E^2`.
    Exceptional { weight: u32 },
    /// A boundary component meeting the exceptional locus.
    Boundary { coeff: Rational },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CurveNode {
    pub id: String,
    pub kind: NodeKind,
}

impl CurveNode {
    pub fn exceptional(id: impl Into<String>, weight: u32) -> Self {
        CurveNode {
            id: id.into(),
            kind: NodeKind::Exceptional { weight },
        }
    }

    pub fn boundary(id: impl Into<String>, coeff: Rational) -> Self {
        CurveNode {
            id: id.into(),
            kind: NodeKind::Boundary { coeff },
        }
    }

    pub fn weight(&self) -> Option<u32> {
        match self.kind {
            NodeKind::Exceptional { weight } => Some(weight),
            NodeKind::Boundary { .. } => None,
        }
    }

    pub fn is_exceptional(&self) -> bool {
        matches!(self.kind, NodeKind::Exceptional { .. })
    }
}

/// Undirected edge between node indices `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DualGraph {
    nodes: Vec<CurveNode>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SingularityClass {
    A(usize),
    D(usize),
    E { family: u32, p: u32 },
    Other,
}

impl fmt::Display for SingularityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SingularityClass::A(r) => write!(f, "A({r})"),
            SingularityClass::D(r) => write!(f, "D({r})"),
            SingularityClass::E { family, p } => write!(f, "E({family},{p})"),
            SingularityClass::Other => write!(f, "Other"),
        }
    }
}

/// The fifteen E-type diagrams as (left arm, right arm), each listed from the
/// centre outward. Every diagram also carries a single `-2` pendant on the
/// centre.
pub const E_FAMILIES: [(&[u32], &[u32]); 15] = [
    (&[3], &[3]),
    (&[2, 2], &[3]),
    (&[2, 2], &[2, 2]),
    (&[3], &[4]),
    (&[2, 2], &[4]),
    (&[3], &[2, 2, 2]),
    (&[2, 2], &[2, 2, 2]),
    (&[3], &[5]),
    (&[2, 2], &[5]),
    (&[3], &[2, 3]),
    (&[2, 2], &[2, 3]),
    (&[3], &[3, 2]),
    (&[2, 2], &[3, 2]),
    (&[3], &[2, 2, 2, 2]),
    (&[2, 2], &[2, 2, 2, 2]),
];

/// Trivalent fork whose centre carries two `-2` leaves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForkShape {
    pub leaves: [usize; 2],
    /// Chain `E_1, ..., E_r` starting at the centre.
    pub chain: Vec<usize>,
}

impl DualGraph {
    /// Builds and validates a graph. Parallel edge records for the same pair
    /// are merged by adding their multiplicities.
    pub fn new(
        mut nodes: Vec<CurveNode>,
        edges: Vec<(String, String, u32)>,
    ) -> Result<Self, GraphError> {
        nodes.sort_by(|x, y| x.id.cmp(&y.id));
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(GraphError::DuplicateId(w[0].id.clone()));
            }
        }
        for n in &nodes {
            match &n.kind {
                NodeKind::Exceptional { weight } if *weight == 0 => {
                    return Err(GraphError::NonPositiveWeight {
                        id: n.id.clone(),
                        weight: 0,
                    })
                }
                NodeKind::Boundary { coeff } if coeff.is_negative() || *coeff > 1 => {
                    return Err(GraphError::CoeffOutOfRange {
                        id: n.id.clone(),
                        coeff: coeff.clone(),
                    })
                }
                _ => {}
            }
        }
        let index: BTreeMap<&str, usize> = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let mut merged: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (x, y, m) in &edges {
            let ix = *index
                .get(x.as_str())
                .ok_or_else(|| GraphError::UnknownId(x.clone()))?;
            let iy = *index
                .get(y.as_str())
                .ok_or_else(|| GraphError::UnknownId(y.clone()))?;
            if ix == iy {
                return Err(GraphError::SelfLoop(x.clone()));
            }
            if *m == 0 {
                return Err(GraphError::NonPositiveMultiplicity(x.clone(), y.clone()));
            }
            *merged.entry((ix.min(iy), ix.max(iy))).or_insert(0) += m;
        }
        let edges = merged
            .into_iter()
            .map(|((a, b), multiplicity)| Edge { a, b, multiplicity })
            .collect();
        Ok(DualGraph { nodes, edges })
    }

    pub fn empty() -> Self {
        DualGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &[CurveNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.nodes.binary_search_by(|n| n.id.as_str().cmp(id)).ok()
    }

    pub fn node(&self, id: &str) -> Option<&CurveNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    pub fn id(&self, i: usize) -> &str {
        &self.nodes[i].id
    }

    pub fn weight(&self, i: usize) -> Option<u32> {
        self.nodes[i].weight()
    }

    pub fn multiplicity(&self, i: usize, j: usize) -> u32 {
        let (a, b) = (i.min(j), i.max(j));
        self.edges
            .iter()
            .find(|e| e.a == a && e.b == b)
            .map_or(0, |e| e.multiplicity)
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.a == i {
                Some((e.b, e.multiplicity))
            } else if e.b == i {
                Some((e.a, e.multiplicity))
            } else {
                None
            }
        })
    }

    /// Indices of exceptional curves in canonical order.
    pub fn exceptional(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].is_exceptional())
            .collect()
    }

    pub fn boundaries(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| !self.nodes[i].is_exceptional())
            .collect()
    }

    pub fn has_boundary(&self) -> bool {
        self.nodes.iter().any(|n| !n.is_exceptional())
    }

    fn exceptional_neighbors(&self, i: usize) -> Vec<(usize, u32)> {
        self.neighbors(i)
            .filter(|&(j, _)| self.nodes[j].is_exceptional())
            .collect()
    }

    /// Intersection matrix of the exceptional curves in canonical order.
    pub fn intersection_matrix(&self) -> Vec<Vec<i64>> {
        let exc = self.exceptional();
        exc.iter()
            .map(|&i| {
                exc.iter()
                    .map(|&j| {
                        if i == j {
                            -i64::from(self.weight(i).unwrap())
                        } else {
                            i64::from(self.multiplicity(i, j))
                        }
                    })
                    .collect()
            })
            .collect()
    }

    pub fn is_exceptional_connected(&self) -> bool {
        let exc = self.exceptional();
        let Some(&start) = exc.first() else {
            return true;
        };
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for (j, _) in self.exceptional_neighbors(i) {
                if seen.insert(j) {
                    stack.push(j);
                }
            }
        }
        seen.len() == exc.len()
    }

    /// True iff the intersection matrix is negative definite.
    pub fn is_contractible(&self) -> bool {
        linalg::is_negative_definite(&linalg::to_big(&self.intersection_matrix()))
    }

    fn exceptional_edge_stats(&self) -> (usize, bool) {
        let mut count = 0;
        let mut simple = true;
        for e in &self.edges {
            if self.nodes[e.a].is_exceptional() && self.nodes[e.b].is_exceptional() {
                count += 1;
                simple &= e.multiplicity == 1;
            }
        }
        (count, simple)
    }

    /// Exceptional curves in path order when the exceptional locus is a simple
    /// chain. The walk starts at the lexicographically smaller endpoint.
    pub fn chain_order(&self) -> Option<Vec<usize>> {
        let exc = self.exceptional();
        if exc.is_empty() || !self.is_exceptional_connected() {
            return None;
        }
        let (edge_count, simple) = self.exceptional_edge_stats();
        if !simple || edge_count + 1 != exc.len() {
            return None;
        }
        if exc.len() == 1 {
            return Some(exc);
        }
        let degree = |i: usize| self.exceptional_neighbors(i).len();
        if exc.iter().any(|&i| degree(i) > 2) {
            return None;
        }
        let start = *exc.iter().find(|&&i| degree(i) == 1)?;
        let mut order = vec![start];
        let mut prev = usize::MAX;
        let mut cur = start;
        while let Some((next, _)) = self
            .exceptional_neighbors(cur)
            .into_iter()
            .find(|&(j, _)| j != prev)
        {
            order.push(next);
            prev = cur;
            cur = next;
        }
        Some(order)
    }

    fn arm(&self, centre: usize, first: usize) -> Option<Vec<usize>> {
        let mut arm = vec![first];
        let mut prev = centre;
        let mut cur = first;
        loop {
            let nbrs = self.exceptional_neighbors(cur);
            let onward: Vec<usize> = nbrs
                .iter()
                .map(|&(j, _)| j)
                .filter(|&j| j != prev)
                .collect();
            match onward.as_slice() {
                [] => return Some(arm),
                [next] => {
                    arm.push(*next);
                    prev = cur;
                    cur = *next;
                }
                _ => return None,
            }
        }
    }

    /// Tree with exactly one trivalent vertex: returns the centre and its
    /// three arms (each listed from the centre outward).
    fn star(&self) -> Option<(usize, Vec<Vec<usize>>)> {
        let exc = self.exceptional();
        let (edge_count, simple) = self.exceptional_edge_stats();
        if !simple || edge_count + 1 != exc.len() || !self.is_exceptional_connected() {
            return None;
        }
        let centres: Vec<usize> = exc
            .iter()
            .copied()
            .filter(|&i| self.exceptional_neighbors(i).len() >= 3)
            .collect();
        let [centre] = centres.as_slice() else {
            return None;
        };
        let nbrs = self.exceptional_neighbors(*centre);
        if nbrs.len() != 3 {
            return None;
        }
        let arms = nbrs
            .iter()
            .map(|&(j, _)| self.arm(*centre, j))
            .collect::<Option<Vec<_>>>()?;
        Some((*centre, arms))
    }

    /// The D-type fork structure, if the exceptional locus has one.
    pub fn fork_shape(&self) -> Option<ForkShape> {
        let (centre, arms) = self.star()?;
        let mut leaves: Vec<usize> = arms
            .iter()
            .filter(|a| a.len() == 1 && self.weight(a[0]) == Some(2))
            .map(|a| a[0])
            .collect();
        if leaves.len() < 2 {
            return None;
        }
        leaves.sort_by(|&x, &y| self.id(x).cmp(self.id(y)));
        let leaves = [leaves[0], leaves[1]];
        let rest = arms
            .into_iter()
            .find(|a| !(a.len() == 1 && leaves.contains(&a[0])))
            .expect("three arms, two leaves");
        let mut chain = vec![centre];
        chain.extend(rest);
        Some(ForkShape { leaves, chain })
    }

    fn e_type(&self) -> Option<(u32, u32)> {
        let (centre, arms) = self.star()?;
        let p = self.weight(centre)?;
        if p < 2 {
            return None;
        }
        let weights: Vec<Vec<u32>> = arms
            .iter()
            .map(|a| a.iter().map(|&i| self.weight(i).unwrap()).collect())
            .collect();
        let mut observed = weights.clone();
        observed.sort();
        for (f, (left, right)) in E_FAMILIES.iter().enumerate() {
            let mut expected = vec![left.to_vec(), right.to_vec(), vec![2]];
            expected.sort();
            if expected == observed {
                return Some((f as u32 + 1, p));
            }
        }
        None
    }

    /// Shape classification of the exceptional locus; boundary nodes are ignored.
    pub fn classify(&self) -> Result<SingularityClass, GraphError> {
        if self.exceptional().is_empty() {
            return Err(GraphError::Empty);
        }
        if !self.is_exceptional_connected() {
            return Err(GraphError::Disconnected);
        }
        if let Some(order) = self.chain_order() {
            return Ok(SingularityClass::A(order.len()));
        }
        if let Some(fork) = self.fork_shape() {
            return Ok(SingularityClass::D(fork.chain.len()));
        }
        if let Some((family, p)) = self.e_type() {
            return Ok(SingularityClass::E { family, p });
        }
        Ok(SingularityClass::Other)
    }

    /// Copy of this graph with the boundary nodes (and their edges) removed.
    pub fn without_boundary(&self) -> DualGraph {
        let nodes: Vec<CurveNode> = self
            .nodes
            .iter()
            .filter(|n| n.is_exceptional())
            .cloned()
            .collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| self.nodes[e.a].is_exceptional() && self.nodes[e.b].is_exceptional())
            .map(|e| {
                (
                    self.id(e.a).to_string(),
                    self.id(e.b).to_string(),
                    e.multiplicity,
                )
            })
            .collect();
        DualGraph::new(nodes, edges).expect("subgraph of a valid graph")
    }

    /// Adds a boundary node meeting the given curve once.
    pub fn with_boundary(
        &self,
        id: &str,
        coeff: Rational,
        attached_to: &str,
    ) -> Result<DualGraph, GraphError> {
        let mut nodes = self.nodes.clone();
        nodes.push(CurveNode::boundary(id, coeff));
        let mut edges: Vec<(String, String, u32)> = self
            .edges
            .iter()
            .map(|e| {
                (
                    self.id(e.a).to_string(),
                    self.id(e.b).to_string(),
                    e.multiplicity,
                )
            })
            .collect();
        edges.push((id.to_string(), attached_to.to_string(), 1));
        DualGraph::new(nodes, edges)
    }

    /// Serializes in the line format accepted by [`parse_graph`].
    pub fn serialize(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DualGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for n in self.nodes.iter().filter(|n| n.is_exceptional()) {
            writeln!(f, "curve {} w={}", n.id, n.weight().unwrap())?;
        }
        for n in &self.nodes {
            if let NodeKind::Boundary { coeff } = &n.kind {
                writeln!(f, "boundary {} b={}", n.id, coeff)?;
            }
        }
        for e in &self.edges {
            if e.multiplicity == 1 {
                writeln!(f, "edge {} {}", self.id(e.a), self.id(e.b))?;
            } else {
                writeln!(
                    f,
                    "edge {} {} m={}",
                    self.id(e.a),
                    self.id(e.b),
                    e.multiplicity
                )?;
            }
        }
        Ok(())
    }
}

fn numbered_ids(prefix: &str, count: usize) -> Vec<String> {
    let width = count.to_string().len();
    (1..=count)
        .map(|i| format!("{prefix}{i:0width$}"))
        .collect()
}

fn path_edges(ids: &[String]) -> Vec<(String, String, u32)> {
    ids.windows(2)
        .map(|w| (w[0].clone(), w[1].clone(), 1))
        .collect()
}

/// All weight sequences of length `r` with entries in `[lo, hi]`, in
/// lexicographic order.
pub fn weight_sequences(r: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::with_capacity(r)];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |w| {
                    let mut next = prefix.clone();
                    next.push(w);
                    next
                })
            })
            .collect();
    }
    out
}

/// Path graph `e1 - e2 - ... - er` with the given weights.
pub fn generate_chain(weights: &[u32]) -> Result<DualGraph, GraphError> {
    if weights.is_empty() {
        return Err(GraphError::EmptyChain);
    }
    let ids = numbered_ids("e", weights.len());
    let nodes = ids
        .iter()
        .zip(weights)
        .map(|(id, &w)| CurveNode::exceptional(id.clone(), w))
        .collect();
    DualGraph::new(nodes, path_edges(&ids))
}

/// D-type fork: chain `e1 - ... - er` with two `-2` leaves `f1`, `f2` on `e1`.
pub fn generate_fork(chain_weights: &[u32]) -> Result<DualGraph, GraphError> {
    if chain_weights.is_empty() {
        return Err(GraphError::EmptyChain);
    }
    let ids = numbered_ids("e", chain_weights.len());
    let mut nodes: Vec<CurveNode> = ids
        .iter()
        .zip(chain_weights)
        .map(|(id, &w)| CurveNode::exceptional(id.clone(), w))
        .collect();
    nodes.push(CurveNode::exceptional("f1", 2));
    nodes.push(CurveNode::exceptional("f2", 2));
    let mut edges = path_edges(&ids);
    edges.push(("f1".into(), ids[0].clone(), 1));
    edges.push(("f2".into(), ids[0].clone(), 1));
    DualGraph::new(nodes, edges)
}

/// The E-type diagram of the given family with centre weight `p`.
///
/// Ids: centre `c`, pendant `d`, left arm `l1, l2, ...`, right arm
/// `r1, r2, ...`, numbered from the centre outward. Any `p >= 1` is accepted
/// so that non-contractible neighbours of the catalogue can be built;
/// [`DualGraph::classify`] only reports `E` for `p >= 2`.
pub fn generate_e_type(family: u32, p: u32) -> Result<DualGraph, GraphError> {
    if !(1..=15).contains(&family) {
        return Err(GraphError::FamilyOutOfRange(family));
    }
    if p == 0 {
        return Err(GraphError::NonPositiveWeight {
            id: "c".into(),
            weight: 0,
        });
    }
    let (left, right) = E_FAMILIES[family as usize - 1];
    let mut nodes = vec![
        CurveNode::exceptional("c", p),
        CurveNode::exceptional("d", 2),
    ];
    let mut edges = vec![("c".to_string(), "d".to_string(), 1)];
    for (prefix, arm) in [("l", left), ("r", right)] {
        let mut prev = "c".to_string();
        for (k, &w) in arm.iter().enumerate() {
            let id = format!("{prefix}{}", k + 1);
            nodes.push(CurveNode::exceptional(id.clone(), w));
            edges.push((prev, id.clone(), 1));
            prev = id;
        }
    }
    DualGraph::new(nodes, edges)
}

/// Parses the line-oriented graph format:
///
/// ```text
/// curve <id> w=<positive-int>
/// boundary <id> b=<rational>
/// edge <id> <id> [m=<positive-int>]
/// ```
///
/// `#` starts a comment.
pub fn parse_graph(text: &str) -> Result<DualGraph, GraphError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(content);
        let Some(&(col, keyword)) = tokens.first() else {
            continue;
        };
        let syntax = |column: usize, message: String| GraphError::Syntax {
            line,
            column,
            message,
        };
        let arg = |k: usize, what: &str| -> Result<(usize, &str), GraphError> {
            tokens
                .get(k)
                .copied()
                .ok_or_else(|| syntax(raw.len() + 1, format!("missing {what}")))
        };
        let keyed = |k: usize, key: &str| -> Result<(usize, &str), GraphError> {
            let (c, tok) = arg(k, &format!("`{key}=`"))?;
            tok.strip_prefix(key)
                .and_then(|t| t.strip_prefix('='))
                .map(|v| (c, v))
                .ok_or_else(|| syntax(c, format!("expected `{key}=`, found `{tok}`")))
        };
        match keyword {
            "curve" => {
                let (_, id) = arg(1, "curve id")?;
                let (c, w) = keyed(2, "w")?;
                let weight: i64 = w
                    .parse()
                    .map_err(|_| syntax(c, format!("invalid weight `{w}`")))?;
                if weight <= 0 {
                    return Err(GraphError::NonPositiveWeight {
                        id: id.to_string(),
                        weight,
                    });
                }
                let weight = u32::try_from(weight)
                    .map_err(|_| syntax(c, format!("weight `{w}` too large")))?;
                if let Some(&(c, extra)) = tokens.get(3) {
                    return Err(syntax(c, format!("unexpected `{extra}`")));
                }
                nodes.push(CurveNode::exceptional(id, weight));
            }
            "boundary" => {
                let (_, id) = arg(1, "boundary id")?;
                let (c, b) = keyed(2, "b")?;
                let coeff: Rational = b.parse().map_err(|e| syntax(c, format!("{e}")))?;
                if let Some(&(c, extra)) = tokens.get(3) {
                    return Err(syntax(c, format!("unexpected `{extra}`")));
                }
                nodes.push(CurveNode::boundary(id, coeff));
            }
            "edge" => {
                let (_, x) = arg(1, "edge endpoint")?;
                let (_, y) = arg(2, "edge endpoint")?;
                let m = if tokens.len() > 3 {
                    let (c, m) = keyed(3, "m")?;
                    let m: u32 = m
                        .parse()
                        .map_err(|_| syntax(c, format!("invalid multiplicity `{m}`")))?;
                    if let Some(&(c, extra)) = tokens.get(4) {
                        return Err(syntax(c, format!("unexpected `{extra}`")));
                    }
                    m
                } else {
                    1
                };
                edges.push((x.to_string(), y.to_string(), m));
            }
            other => return Err(syntax(col, format!("unknown directive `{other}`"))),
        }
    }
    DualGraph::new(nodes, edges)
}

/// Whitespace tokens with their 1-based byte columns.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;
    use proptest::prelude::*;

    #[test]
    fn parse_single_curve() {
        let g = parse_graph("curve e1 w=2").unwrap();
        assert_eq!(g.nodes().len(), 1);
        assert_eq!(g.classify().unwrap(), SingularityClass::A(1));
    }

    #[test]
    fn parse_two_chain_matches_generator() {
        let g = parse_graph("curve e1 w=3\ncurve e2 w=4\nedge e1 e2").unwrap();
        assert_eq!(g, generate_chain(&[3, 4]).unwrap());
        assert_eq!(g.intersection_matrix(), vec![vec![-3, 1], vec![1, -4]]);
    }

    #[test]
    fn parse_errors() {
        assert_eq!(
            parse_graph("curve e1 w=0"),
            Err(GraphError::NonPositiveWeight {
                id: "e1".into(),
                weight: 0
            })
        );
        assert!(matches!(
            parse_graph("curve a w=2\ncurve a w=3"),
            Err(GraphError::DuplicateId(id)) if id == "a"
        ));
        assert!(matches!(
            parse_graph("curve a w=2\nedge a b"),
            Err(GraphError::UnknownId(id)) if id == "b"
        ));
        assert!(matches!(
            parse_graph("curve a w=2\nboundary c b=3/2\nedge a c"),
            Err(GraphError::CoeffOutOfRange { .. })
        ));
        assert_eq!(
            parse_graph("curve a w=2\n  bogus a"),
            Err(GraphError::Syntax {
                line: 2,
                column: 3,
                message: "unknown directive `bogus`".into()
            })
        );
        assert!(matches!(
            parse_graph("curve a weight=2"),
            Err(GraphError::Syntax {
                line: 1,
                column: 9,
                ..
            })
        ));
        assert!(matches!(
            parse_graph("edge a a\ncurve a w=2"),
            Err(GraphError::SelfLoop(_))
        ));
    }

    #[test]
    fn comments_boundaries_and_multiplicities() {
        let text = "# a chain\ncurve x w=3 # centre\nboundary c b=1/2\nedge x c\nedge x c m=2\n";
        let g = parse_graph(text).unwrap();
        let (x, c) = (g.index_of("x").unwrap(), g.index_of("c").unwrap());
        assert_eq!(g.multiplicity(x, c), 3);
        assert_eq!(
            g.serialize(),
            "curve x w=3\nboundary c b=1/2\nedge c x m=3\n"
        );
    }

    #[test]
    fn classify_shapes() {
        assert_eq!(
            generate_chain(&[2, 2, 2]).unwrap().classify().unwrap(),
            SingularityClass::A(3)
        );
        assert_eq!(
            generate_fork(&[3, 2, 5]).unwrap().classify().unwrap(),
            SingularityClass::D(3)
        );
        assert_eq!(
            generate_e_type(1, 2).unwrap().classify().unwrap(),
            SingularityClass::E { family: 1, p: 2 }
        );
        let disconnected = parse_graph("curve a w=2\ncurve b w=2").unwrap();
        assert_eq!(disconnected.classify(), Err(GraphError::Disconnected));
        let double = parse_graph("curve a w=2\ncurve b w=2\nedge a b m=2").unwrap();
        assert_eq!(double.classify().unwrap(), SingularityClass::Other);
        let cycle =
            parse_graph("curve a w=2\ncurve b w=2\ncurve c w=2\nedge a b\nedge b c\nedge a c")
                .unwrap();
        assert_eq!(cycle.classify().unwrap(), SingularityClass::Other);
        assert_eq!(
            generate_e_type(1, 1).unwrap().classify().unwrap(),
            SingularityClass::Other
        );
    }

    #[test]
    fn classify_ignores_boundary() {
        let g = generate_chain(&[3, 4])
            .unwrap()
            .with_boundary("c", q(1, 2), "e1")
            .unwrap();
        assert_eq!(g.classify().unwrap(), SingularityClass::A(2));
    }

    #[test]
    fn e_type_one_p2_structure() {
        let g = generate_e_type(1, 2).unwrap();
        let c = g.index_of("c").unwrap();
        let mut nbr_weights: Vec<u32> = g.neighbors(c).map(|(j, _)| g.weight(j).unwrap()).collect();
        nbr_weights.sort();
        assert_eq!(nbr_weights, vec![2, 3, 3]);
        assert_eq!(g.weight(c), Some(2));
    }

    #[test]
    fn e_type_fifteen_is_longest() {
        let g = generate_e_type(15, 3).unwrap();
        assert_eq!(g.nodes().len(), 8);
        assert!(matches!(
            generate_e_type(16, 2),
            Err(GraphError::FamilyOutOfRange(16))
        ));
    }

    #[test]
    fn d4_matrix() {
        let g = generate_fork(&[2, 2]).unwrap();
        let m = g.intersection_matrix();
        assert_eq!(m.len(), 4);
        let e1 = g
            .exceptional()
            .iter()
            .position(|&i| g.id(i) == "e1")
            .unwrap();
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row[i], -2);
            let off: i64 = row
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| x)
                .sum();
            assert_eq!(off, if i == e1 { 3 } else { 1 });
        }
    }

    #[test]
    fn contractibility() {
        assert!(generate_chain(&[2, 2]).unwrap().is_contractible());
        assert!(!generate_chain(&[1, 1]).unwrap().is_contractible());
        assert!(!generate_e_type(1, 1).unwrap().is_contractible());
        assert!(generate_e_type(15, 2).unwrap().is_contractible());
    }

    #[test]
    fn classify_chain_exhaustive() {
        fn rec(ws: &mut Vec<u32>, max_len: usize) {
            if !ws.is_empty() {
                let g = generate_chain(ws).unwrap();
                assert_eq!(g.classify().unwrap(), SingularityClass::A(ws.len()));
            }
            if ws.len() == max_len {
                return;
            }
            for w in 2..=5 {
                ws.push(w);
                rec(ws, max_len);
                ws.pop();
            }
        }
        rec(&mut Vec::new(), 6);
    }

    #[test]
    fn classify_e_catalogue() {
        for f in 1..=15 {
            for p in 2..=8 {
                assert_eq!(
                    generate_e_type(f, p).unwrap().classify().unwrap(),
                    SingularityClass::E { family: f, p }
                );
            }
        }
    }

    #[test]
    fn chain_order_follows_generator_for_long_chains() {
        let ws: Vec<u32> = (0..12).map(|i| 2 + (i % 3)).collect();
        let g = generate_chain(&ws).unwrap();
        let order = g.chain_order().unwrap();
        let got: Vec<u32> = order.iter().map(|&i| g.weight(i).unwrap()).collect();
        assert_eq!(got, ws);
    }

    fn arb_graph() -> impl Strategy<Value = DualGraph> {
        (
            1usize..6,
            proptest::collection::vec(1u32..6, 6),
            proptest::collection::vec((0usize..6, 0usize..6, 1u32..3), 0..6),
            proptest::option::of(0i64..=12),
        )
            .prop_map(|(n, ws, es, b)| {
                let mut nodes: Vec<CurveNode> = (0..n)
                    .map(|i| CurveNode::exceptional(format!("n{i}"), ws[i]))
                    .collect();
                let mut edges: Vec<(String, String, u32)> = es
                    .into_iter()
                    .filter(|&(x, y, _)| x < n && y < n && x != y)
                    .map(|(x, y, m)| (format!("n{x}"), format!("n{y}"), m))
                    .collect();
                if let Some(b) = b {
                    nodes.push(CurveNode::boundary("bd", q(b, 12)));
                    edges.push(("bd".into(), "n0".into(), 1));
                }
                DualGraph::new(nodes, edges).unwrap()
            })
    }

    proptest! {
        #[test]
        fn serialize_parse_identity(g in arb_graph()) {
            let text = g.serialize();
            prop_assert_eq!(parse_graph(&text).unwrap(), g);
        }

        #[test]
        fn intersection_matrix_symmetric(g in arb_graph()) {
            let m = g.intersection_matrix();
            for (i, row) in m.iter().enumerate() {
                for (j, x) in row.iter().enumerate() {
                    prop_assert_eq!(*x, m[j][i]);
                }
            }
        }
    }
}
