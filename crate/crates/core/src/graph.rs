//! Weighted graphs with a Dirichlet boundary.
//!
//! Node functions live on the interior nodes only (boundary values are
//! pinned to zero), and edge functions live on the stored edges. Each stored
//! edge `(u, v)` has `u < v`, which fixes the sign of the discrete gradient
//! `ω_uv (f(v) - f(u))`. Edges with both endpoints on the boundary carry an
//! identically zero gradient and are dropped when the graph is built.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An undirected weighted edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    boundary: Vec<usize>,
    interior: Vec<usize>,
    /// node id -> position in `interior`
    interior_pos: Vec<Option<usize>>,
    edges: Vec<Edge>,
    /// interior positions of each edge's endpoints, `None` for boundary nodes
    ends: Vec<(Option<usize>, Option<usize>)>,
}

/// On-disk JSON layout.
#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    nodes: usize,
    boundary: Vec<usize>,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Builds a graph from raw records, canonicalizing edge orientation and
    /// dropping boundary–boundary edges.
    pub fn new<B, E>(num_nodes: usize, boundary: B, edges: E) -> Result<Self>
    where
        B: IntoIterator<Item = usize>,
        E: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut is_boundary = vec![false; num_nodes];
        for id in boundary {
            if id >= num_nodes {
                return Err(Error::NodeOutOfRange {
                    what: "boundary",
                    id,
                    nodes: num_nodes,
                });
            }
            is_boundary[id] = true;
        }

        let mut seen = HashSet::new();
        let mut kept = Vec::new();
        for (index, (a, b, weight)) in edges.into_iter().enumerate() {
            for id in [a, b] {
                if id >= num_nodes {
                    return Err(Error::NodeOutOfRange {
                        what: "edge endpoint",
                        id,
                        nodes: num_nodes,
                    });
                }
            }
            if a == b {
                return Err(Error::SelfLoop { index, u: a, v: b });
            }
            if !(weight.is_finite() && weight > 0.0) {
                return Err(Error::BadEdgeWeight {
                    index,
                    u: a,
                    v: b,
                    weight,
                });
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge { index, u: a, v: b });
            }
            if is_boundary[u] && is_boundary[v] {
                continue;
            }
            kept.push(Edge { u, v, weight });
        }
        kept.sort_by_key(|e| (e.u, e.v));

        let boundary: Vec<usize> = (0..num_nodes).filter(|&i| is_boundary[i]).collect();
        let interior: Vec<usize> = (0..num_nodes).filter(|&i| !is_boundary[i]).collect();
        let mut interior_pos = vec![None; num_nodes];
        for (pos, &id) in interior.iter().enumerate() {
            interior_pos[id] = Some(pos);
        }
        let ends = kept
            .iter()
            .map(|e| (interior_pos[e.u], interior_pos[e.v]))
            .collect();

        Ok(Graph {
            num_nodes,
            boundary,
            interior,
            interior_pos,
            edges: kept,
            ends,
        })
    }

    /// 4-neighbour grid on the unit square. Perimeter nodes form the boundary
    /// and edge weights are reciprocal edge lengths. Node `(r, c)` has id
    /// `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Result<Self> {
        if rows < 2 || cols < 2 {
            return Err(Error::GridTooSmall { rows, cols });
        }
        let id = |r: usize, c: usize| r * cols + c;
        let w_horizontal = (cols - 1) as f64;
        let w_vertical = (rows - 1) as f64;

        let mut boundary = Vec::new();
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if r == 0 || c == 0 || r == rows - 1 || c == cols - 1 {
                    boundary.push(id(r, c));
                }
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1), w_horizontal));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c), w_vertical));
                }
            }
        }
        Graph::new(rows * cols, boundary, edges)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_str(text)?;
        Graph::new(file.nodes, file.boundary, file.edges)
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            nodes: self.num_nodes,
            boundary: self.boundary.clone(),
            edges: self.edges.iter().map(|e| (e.u, e.v, e.weight)).collect(),
        };
        serde_json::to_string(&file).expect("graph serialization is infallible")
    }

    /// Whether the subgraph induced by the interior nodes is connected.
    /// Graphs with at most one interior node count as connected.
    pub fn is_connected(&self) -> bool {
        let n = self.interior.len();
        if n <= 1 {
            return true;
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &self.ends {
            if let (Some(a), Some(b)) = (a, b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
        let mut visited = vec![false; n];
        let mut stack = vec![0];
        visited[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &y in &adjacency[x] {
                if !visited[y] {
                    visited[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count == n
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Sorted boundary node ids.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    /// Interior node ids in ascending order; node functions are indexed by
    /// position in this list.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        node < self.num_nodes && self.interior_pos[node].is_none()
    }

    /// Position of `node` among the interior nodes.
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_pos.get(node).copied().flatten()
    }

    /// Interior positions of the endpoints of every stored edge.
    pub fn edge_ends(&self) -> &[(Option<usize>, Option<usize>)] {
        &self.ends
    }
}
