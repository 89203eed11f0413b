//! Bargaining-network instances, matchings and outcomes.
//!
//! Nodes are `0..node_count` in the API. Files and error messages use the
//! 1-based numbering people write by hand, and the conversion happens only
//! at those boundaries.

mod generate;
mod io;

use std::collections::HashMap;

pub use generate::{
    generate_random_bipartite, generate_ring, BipartiteParams, RingInstance, RingParams,
};
pub use io::{parse_instance, parse_outcome, write_instance, write_outcome};

use crate::error::InstanceError;
use crate::DEFAULT_TOL_EQ;

pub type NodeId = usize;
pub type EdgeId = usize;

/// An undirected edge with the split fraction of its first endpoint.
///
/// `r` is the share of the edge surplus that `u` receives when the edge is
/// matched; `v` receives `1 - r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: f64,
    pub r: f64,
}

impl Edge {
    /// Endpoint opposite to `node`.
    #[inline]
    pub fn other(&self, node: NodeId) -> NodeId {
        if node == self.u {
            self.v
        } else {
            self.u
        }
    }

    /// Split fraction seen from `node`.
    #[inline]
    pub fn fraction_for(&self, node: NodeId) -> f64 {
        if node == self.u {
            self.r
        } else {
            1.0 - self.r
        }
    }
}

/// A validated weighted graph with per-edge split fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    node_count: usize,
    weight_bound: f64,
    edges: Vec<Edge>,
    /// For every node, `(neighbour, edge id)` in edge-list order.
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
    lookup: HashMap<(NodeId, NodeId), EdgeId>,
}

impl Instance {
    pub fn new(node_count: usize, edges: Vec<Edge>) -> Result<Self, InstanceError> {
        Self::with_bound(node_count, 1.0, edges)
    }

    pub fn with_bound(
        node_count: usize,
        weight_bound: f64,
        edges: Vec<Edge>,
    ) -> Result<Self, InstanceError> {
        if node_count == 0 {
            return Err(InstanceError::NoNodes);
        }
        if !(weight_bound.is_finite() && weight_bound > 0.0) {
            return Err(InstanceError::BadBound(weight_bound));
        }
        let mut adjacency = vec![Vec::new(); node_count];
        let mut lookup = HashMap::with_capacity(edges.len());
        for (id, e) in edges.iter().enumerate() {
            validate_edge(node_count, weight_bound, e)?;
            let key = (e.u.min(e.v), e.u.max(e.v));
            if lookup.insert(key, id).is_some() {
                return Err(InstanceError::DuplicateEdge(key.0 + 1, key.1 + 1));
            }
            adjacency[e.u].push((e.v, id));
            adjacency[e.v].push((e.u, id));
        }
        Ok(Self {
            node_count,
            weight_bound,
            edges,
            adjacency,
            lookup,
        })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn weight_bound(&self) -> f64 {
        self.weight_bound
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id]
    }

    #[inline]
    pub fn neighbors(&self, node: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: NodeId) -> usize {
        self.adjacency[node].len()
    }

    /// Edge joining `a` and `b`, in either orientation.
    pub fn find_edge(&self, a: NodeId, b: NodeId) -> Option<EdgeId> {
        self.lookup.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn max_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.w).fold(0.0, f64::max)
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.edges.iter().map(|e| e.w).reduce(f64::min)
    }

    /// True when the graph is two-colourable.
    pub fn is_bipartite(&self) -> bool {
        let mut colour: Vec<Option<bool>> = vec![None; self.node_count];
        let mut stack = Vec::new();
        for root in 0..self.node_count {
            if colour[root].is_some() {
                continue;
            }
            colour[root] = Some(false);
            stack.push(root);
            while let Some(x) = stack.pop() {
                let cx = colour[x].unwrap_or(false);
                for &(y, _) in &self.adjacency[x] {
                    match colour[y] {
                        None => {
                            colour[y] = Some(!cx);
                            stack.push(y);
                        }
                        Some(cy) if cy == cx => return false,
                        Some(_) => {}
                    }
                }
            }
        }
        true
    }

    /// Copy with every weight and the bound multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                w: e.w * factor,
                ..*e
            })
            .collect();
        let mut out = self.clone();
        out.edges = edges;
        out.weight_bound = self.weight_bound * factor;
        out
    }
}

fn validate_edge(node_count: usize, bound: f64, e: &Edge) -> Result<(), InstanceError> {
    for node in [e.u, e.v] {
        if node >= node_count {
            return Err(InstanceError::NodeOutOfRange {
                node: node + 1,
                node_count,
            });
        }
    }
    if e.u == e.v {
        return Err(InstanceError::SelfLoop(e.u + 1));
    }
    if !(e.w > 0.0 && e.w <= bound) {
        return Err(InstanceError::WeightOutOfRange { weight: e.w, bound });
    }
    if !(e.r > 0.0 && e.r < 1.0) {
        return Err(InstanceError::FractionOutOfRange(e.r));
    }
    Ok(())
}

/// The partner of a matched node together with the joining edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mate {
    pub node: NodeId,
    pub edge: EdgeId,
}

/// A set of pairwise node-disjoint edges of one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matching {
    edges: Vec<EdgeId>,
    mate: Vec<Option<Mate>>,
}

impl Matching {
    pub fn empty(inst: &Instance) -> Self {
        Self {
            edges: Vec::new(),
            mate: vec![None; inst.node_count()],
        }
    }

    pub fn from_edge_ids(
        inst: &Instance,
        ids: impl IntoIterator<Item = EdgeId>,
    ) -> Result<Self, InstanceError> {
        let mut m = Self::empty(inst);
        for id in ids {
            let Some(e) = inst.edges().get(id) else {
                return Err(InstanceError::Parameter(format!("edge id {id} out of range")));
            };
            for (a, b) in [(e.u, e.v), (e.v, e.u)] {
                if m.mate[a].is_some() {
                    return Err(InstanceError::NodeMatchedTwice(a + 1));
                }
                m.mate[a] = Some(Mate { node: b, edge: id });
            }
            m.edges.push(id);
        }
        m.edges.sort_unstable();
        Ok(m)
    }

    pub fn from_pairs(
        inst: &Instance,
        pairs: impl IntoIterator<Item = (NodeId, NodeId)>,
    ) -> Result<Self, InstanceError> {
        let ids = pairs
            .into_iter()
            .map(|(a, b)| {
                inst.find_edge(a, b)
                    .ok_or(InstanceError::UnknownEdge(a + 1, b + 1))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_edge_ids(inst, ids)
    }

    /// Matched edge ids in increasing order.
    #[inline]
    pub fn edge_ids(&self) -> &[EdgeId] {
        &self.edges
    }

    #[inline]
    pub fn mate(&self, node: NodeId) -> Option<Mate> {
        self.mate[node]
    }

    #[inline]
    pub fn is_matched(&self, node: NodeId) -> bool {
        self.mate[node].is_some()
    }

    pub fn contains_edge(&self, id: EdgeId) -> bool {
        self.edges.binary_search(&id).is_ok()
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn weight(&self, inst: &Instance) -> f64 {
        self.edges.iter().map(|&id| inst.edge(id).w).sum()
    }

    /// Matched pairs, each ordered as listed in the instance.
    pub fn pairs<'a>(&'a self, inst: &'a Instance) -> impl Iterator<Item = (NodeId, NodeId)> + 'a {
        self.edges.iter().map(move |&id| {
            let e = inst.edge(id);
            (e.u, e.v)
        })
    }
}

/// An allocation paired with the matching it splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub gamma: Vec<f64>,
    pub matching: Matching,
}

impl Outcome {
    /// Builds an outcome and checks its invariants to `DEFAULT_TOL_EQ`.
    pub fn new(inst: &Instance, gamma: Vec<f64>, matching: Matching) -> Result<Self, InstanceError> {
        let out = Self { gamma, matching };
        out.validate(inst, DEFAULT_TOL_EQ)?;
        Ok(out)
    }

    /// Matched sums equal the edge weight, unmatched nodes earn nothing and
    /// every earning lies in `[0, W]`, all to tolerance `tol`.
    pub fn validate(&self, inst: &Instance, tol: f64) -> Result<(), InstanceError> {
        check_allocation(inst, &self.matching, &self.gamma, tol)?;
        let bound = inst.weight_bound();
        for (node, &value) in self.gamma.iter().enumerate() {
            if !(value >= -tol && value <= bound + tol) {
                return Err(InstanceError::EarningOutOfRange {
                    node: node + 1,
                    value,
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// Membership in the extended allocation set for `matching`: matched sums
/// hold and unmatched nodes are zero, with no sign constraint.
pub fn check_allocation(
    inst: &Instance,
    matching: &Matching,
    gamma: &[f64],
    tol: f64,
) -> Result<(), InstanceError> {
    if gamma.len() != inst.node_count() {
        return Err(InstanceError::AllocationLength {
            got: gamma.len(),
            expected: inst.node_count(),
        });
    }
    for &id in matching.edge_ids() {
        let e = inst.edge(id);
        let sum = gamma[e.u] + gamma[e.v];
        if !((sum - e.w).abs() <= tol) {
            return Err(InstanceError::MatchedSum {
                u: e.u + 1,
                v: e.v + 1,
                sum,
                weight: e.w,
            });
        }
    }
    for (node, &value) in gamma.iter().enumerate() {
        if !matching.is_matched(node) && !(value.abs() <= tol) {
            return Err(InstanceError::UnmatchedEarns {
                node: node + 1,
                value,
            });
        }
    }
    Ok(())
}
