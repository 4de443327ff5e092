//! Geometry of one-dimensional domains and compact metric graphs.
//!
//! A [`MetricDomain`] is either a circle, an interval with endpoint
//! conditions, or a compact connected metric graph whose edges carry an
//! arclength parameter `0..L_j` and whose vertices carry Dirichlet or
//! Neumann–Kirchhoff conditions.  Loops are stored with two incidences at
//! the same vertex so that the loop derivative convention
//! `∂f(v) = f′(0) − f′(L_j)` falls out of the generic Kirchhoff sum.
//!
//! [`Grid`] is the uniform per-edge discretization used by the
//! finite-difference solver and the propagator.  Vertex values are stored
//! once per incident edge end; equality across the incidences is enforced
//! as a constraint by the consumers, not by aliasing the storage.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex (or interval endpoint) boundary condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryKind {
    /// `f(v) = 0`.
    Dirichlet,
    /// Continuity at `v` plus vanishing sum of outgoing derivatives.
    NeumannKirchhoff,
}

/// Which end of an edge an incidence refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndMarker {
    /// The `x = 0` end.
    Start,
    /// The `x = L_j` end.
    End,
}

/// An edge of a metric graph with arclength parameter `0..length`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    /// Index of this edge; must equal its position in the edge list.
    pub id: usize,
    /// Edge length `L_j > 0`.
    pub length: f64,
    /// Vertex id at `x = 0`.
    pub from: usize,
    /// Vertex id at `x = length`.
    pub to: usize,
}

impl Edge {
    /// A loop starts and ends at the same vertex.
    pub fn is_loop(&self) -> bool {
        self.from == self.to
    }
}

/// A vertex of a metric graph together with its incidence list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    /// Index of this vertex; must equal its position in the vertex list.
    pub id: usize,
    /// Incident edge ends; a loop contributes two entries.
    pub incident: Vec<(usize, EndMarker)>,
    /// Boundary condition imposed at this vertex.
    pub condition: BoundaryKind,
}

impl Vertex {
    /// Number of incident edge ends (loops count twice).
    pub fn degree(&self) -> usize {
        self.incident.len()
    }

    /// A vertex is external when it sees exactly one edge end.
    pub fn is_external(&self) -> bool {
        self.incident.len() == 1
    }
}

/// A compact one-dimensional domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricDomain {
    /// Circle of the given circumference (periodic conditions).
    Circle {
        /// Circumference, strictly positive.
        length: f64,
    },
    /// Interval `[0, length]` with endpoint conditions.
    Interval {
        /// Length, strictly positive.
        length: f64,
        /// Condition at `x = 0`.
        bc_left: BoundaryKind,
        /// Condition at `x = length`.
        bc_right: BoundaryKind,
    },
    /// Compact connected metric graph.
    Graph {
        /// Edge list, indexed by `Edge::id`.
        edges: Vec<Edge>,
        /// Vertex list, indexed by `Vertex::id`.
        vertices: Vec<Vertex>,
    },
}

/// Errors raised by domain construction and discretization.
#[derive(Debug, Error)]
pub enum DomainError {
    /// The graph splits into at least two components.
    #[error("graph is not connected")]
    DisconnectedGraph,
    /// A Dirichlet condition was requested at an internal vertex.
    #[error("Dirichlet condition at internal vertex {0}")]
    DirichletAtInternalVertex(usize),
    /// Edge endpoints and vertex incidence lists disagree.
    #[error("dangling incidence: {0}")]
    DanglingIncidence(String),
    /// An edge or circle has non-positive length.
    #[error("non-positive length {0}")]
    NonPositiveLength(f64),
    /// The requested resolution is below the supported minimum.
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),
}

impl MetricDomain {
    /// Total arclength of the domain.
    pub fn total_length(&self) -> f64 {
        match self {
            MetricDomain::Circle { length } | MetricDomain::Interval { length, .. } => *length,
            MetricDomain::Graph { edges, .. } => edges.iter().map(|e| e.length).sum(),
        }
    }

    /// Number of edges when the domain is viewed edgewise (1 for circle
    /// and interval).
    pub fn num_edges(&self) -> usize {
        match self {
            MetricDomain::Graph { edges, .. } => edges.len(),
            _ => 1,
        }
    }

    /// Edge lengths in edge order (single entry for circle/interval).
    pub fn edge_lengths(&self) -> Vec<f64> {
        match self {
            MetricDomain::Graph { edges, .. } => edges.iter().map(|e| e.length).collect(),
            MetricDomain::Circle { length } | MetricDomain::Interval { length, .. } => {
                vec![*length]
            }
        }
    }
}

/// Validate and assemble a metric graph from raw edge and vertex data.
///
/// Checks ids, incidence consistency (each edge end appears exactly once
/// in the incidence list of the matching vertex), connectivity, and that
/// Dirichlet conditions only occur at external vertices.  Internal
/// vertices are forced to Neumann–Kirchhoff.
pub fn build_graph(edges: Vec<Edge>, mut vertices: Vec<Vertex>) -> Result<MetricDomain, DomainError> {
    if edges.is_empty() {
        return Err(DomainError::DanglingIncidence("no edges".into()));
    }
    for (i, e) in edges.iter().enumerate() {
        if e.id != i {
            return Err(DomainError::DanglingIncidence(format!(
                "edge id {} at position {}",
                e.id, i
            )));
        }
        if !(e.length > 0.0) {
            return Err(DomainError::NonPositiveLength(e.length));
        }
        if e.from >= vertices.len() || e.to >= vertices.len() {
            return Err(DomainError::DanglingIncidence(format!(
                "edge {} references unknown vertex",
                e.id
            )));
        }
    }
    for (i, v) in vertices.iter().enumerate() {
        if v.id != i {
            return Err(DomainError::DanglingIncidence(format!(
                "vertex id {} at position {}",
                v.id, i
            )));
        }
        if v.incident.is_empty() {
            return Err(DomainError::DanglingIncidence(format!(
                "vertex {} has no incidences",
                v.id
            )));
        }
        for &(eid, end) in &v.incident {
            let Some(e) = edges.get(eid) else {
                return Err(DomainError::DanglingIncidence(format!(
                    "vertex {} lists unknown edge {}",
                    v.id, eid
                )));
            };
            let expected = match end {
                EndMarker::Start => e.from,
                EndMarker::End => e.to,
            };
            if expected != v.id {
                return Err(DomainError::DanglingIncidence(format!(
                    "edge {} {:?} end belongs to vertex {}, not {}",
                    eid, end, expected, v.id
                )));
            }
        }
    }
    // Every edge end must be listed exactly once.
    for e in &edges {
        for (vid, end) in [(e.from, EndMarker::Start), (e.to, EndMarker::End)] {
            let count = vertices[vid]
                .incident
                .iter()
                .filter(|&&(eid, m)| eid == e.id && m == end)
                .count();
            if count != 1 {
                return Err(DomainError::DanglingIncidence(format!(
                    "edge {} {:?} end listed {} times at vertex {}",
                    e.id, end, count, vid
                )));
            }
        }
    }
    // Connectivity over the vertex set.
    let n = vertices.len();
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for &(eid, _) in &vertices[v].incident {
            let e = &edges[eid];
            for w in [e.from, e.to] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    if seen.iter().any(|&s| !s) {
        return Err(DomainError::DisconnectedGraph);
    }
    // Boundary-condition sanity: Dirichlet only at external, non-loop ends.
    for v in vertices.iter_mut() {
        let external = v.incident.len() == 1;
        match v.condition {
            BoundaryKind::Dirichlet if !external => {
                return Err(DomainError::DirichletAtInternalVertex(v.id));
            }
            BoundaryKind::Dirichlet => {}
            BoundaryKind::NeumannKirchhoff => {}
        }
    }
    Ok(MetricDomain::Graph { edges, vertices })
}

/// The canonical eight graph: two loops of length `2π` at one vertex.
pub fn eight_graph() -> MetricDomain {
    let tau = 2.0 * std::f64::consts::PI;
    let edges = vec![
        Edge { id: 0, length: tau, from: 0, to: 0 },
        Edge { id: 1, length: tau, from: 0, to: 0 },
    ];
    let vertices = vec![Vertex {
        id: 0,
        incident: vec![
            (0, EndMarker::Start),
            (0, EndMarker::End),
            (1, EndMarker::Start),
            (1, EndMarker::End),
        ],
        condition: BoundaryKind::NeumannKirchhoff,
    }];
    build_graph(edges, vertices).expect("canonical eight graph is valid")
}

/// The canonical three-branch graph: three edges of length `2π` joining
/// two vertices.
pub fn three_branch_graph() -> MetricDomain {
    let tau = 2.0 * std::f64::consts::PI;
    let edges = (0..3)
        .map(|id| Edge { id, length: tau, from: 0, to: 1 })
        .collect::<Vec<_>>();
    let vertices = vec![
        Vertex {
            id: 0,
            incident: vec![
                (0, EndMarker::Start),
                (1, EndMarker::Start),
                (2, EndMarker::Start),
            ],
            condition: BoundaryKind::NeumannKirchhoff,
        },
        Vertex {
            id: 1,
            incident: vec![(0, EndMarker::End), (1, EndMarker::End), (2, EndMarker::End)],
            condition: BoundaryKind::NeumannKirchhoff,
        },
    ];
    build_graph(edges, vertices).expect("canonical three-branch graph is valid")
}

/// Uniform per-edge grid.
///
/// For non-periodic edges the nodes include both endpoints and
/// `h = L_j/(n_j − 1)`.  For the circle the grid is periodic: `n` nodes
/// with spacing `h = L/n`, the node after the last wrapping to the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// One block per edge.
    pub edges: Vec<GridEdge>,
    /// True when the single block closes on itself (circle only).
    pub periodic: bool,
}

/// Grid block for a single edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridEdge {
    /// Number of stored nodes.
    pub n: usize,
    /// Uniform spacing.
    pub h: f64,
    /// Node coordinates along the edge parameter.
    pub xs: Vec<f64>,
}

impl Grid {
    /// Total number of stored nodes across all blocks.
    pub fn total_nodes(&self) -> usize {
        self.edges.iter().map(|e| e.n).sum()
    }

    /// Trapezoidal quadrature weight of node `i` on edge block `e`
    /// (uniform `h` when periodic).
    pub fn weight(&self, e: usize, i: usize) -> f64 {
        let blk = &self.edges[e];
        if self.periodic {
            blk.h
        } else if i == 0 || i + 1 == blk.n {
            0.5 * blk.h
        } else {
            blk.h
        }
    }

    /// All quadrature weights flattened in block-major order.
    pub fn weights_flat(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.total_nodes());
        for (e, blk) in self.edges.iter().enumerate() {
            for i in 0..blk.n {
                w.push(self.weight(e, i));
            }
        }
        w
    }
}

/// Minimum admissible nodes-per-unit-length for [`discretize`].
pub const MIN_NODES_PER_UNIT: f64 = 8.0 / (2.0 * std::f64::consts::PI);

/// Discretize a domain with roughly `n_per_unit_length` nodes per unit
/// arclength (at least 8 nodes per edge).
pub fn discretize(domain: &MetricDomain, n_per_unit_length: f64) -> Result<Grid, DomainError> {
    let node_count = |len: f64| (len * n_per_unit_length).round() as usize;
    match domain {
        MetricDomain::Circle { length } => {
            let n = node_count(*length);
            if n < 8 {
                return Err(DomainError::GridTooCoarse(format!("{n} nodes on circle")));
            }
            let h = length / n as f64;
            let xs = (0..n).map(|i| i as f64 * h).collect();
            Ok(Grid { edges: vec![GridEdge { n, h, xs }], periodic: true })
        }
        MetricDomain::Interval { length, .. } => {
            let n = node_count(*length).max(2);
            if n < 3 {
                return Err(DomainError::GridTooCoarse(format!("{n} nodes on interval")));
            }
            Ok(Grid { edges: vec![edge_block(*length, n)], periodic: false })
        }
        MetricDomain::Graph { edges, .. } => {
            let mut blocks = Vec::with_capacity(edges.len());
            for e in edges {
                let n = node_count(e.length);
                if n < 8 {
                    return Err(DomainError::GridTooCoarse(format!(
                        "{n} nodes on edge {}",
                        e.id
                    )));
                }
                blocks.push(edge_block(e.length, n));
            }
            Ok(Grid { edges: blocks, periodic: false })
        }
    }
}

/// Discretize with an exact node count per edge (endpoints included on
/// non-periodic edges; periodic count on the circle).
pub fn discretize_nodes(domain: &MetricDomain, nodes_per_edge: usize) -> Result<Grid, DomainError> {
    if nodes_per_edge < 8 {
        return Err(DomainError::GridTooCoarse(format!("{nodes_per_edge} nodes per edge")));
    }
    match domain {
        MetricDomain::Circle { length } => {
            let n = nodes_per_edge;
            let h = length / n as f64;
            let xs = (0..n).map(|i| i as f64 * h).collect();
            Ok(Grid { edges: vec![GridEdge { n, h, xs }], periodic: true })
        }
        MetricDomain::Interval { length, .. } => {
            Ok(Grid { edges: vec![edge_block(*length, nodes_per_edge)], periodic: false })
        }
        MetricDomain::Graph { edges, .. } => Ok(Grid {
            edges: edges.iter().map(|e| edge_block(e.length, nodes_per_edge)).collect(),
            periodic: false,
        }),
    }
}

fn edge_block(length: f64, n: usize) -> GridEdge {
    let h = length / (n - 1) as f64;
    let xs = (0..n).map(|i| i as f64 * h).collect();
    GridEdge { n, h, xs }
}
