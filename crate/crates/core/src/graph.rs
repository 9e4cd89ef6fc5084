//! Order-constraint graphs.
//!
//! Vertex `0` is the fixed root (the noise covariance); an edge `(i, j)`
//! constrains `Q_i ⪯ Q_j`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph contains a cycle through vertex {vertex}")]
    CyclicGraph { vertex: usize },
    #[error("vertex {vertex} is not reachable from the root")]
    UnreachableVertex { vertex: usize },
    #[error("malformed edge #{index} ({from}, {to}): {reason}")]
    MalformedEdge { index: usize, from: usize, to: usize, reason: &'static str },
    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("graph needs at least one non-root vertex")]
    InvalidSize,
}

/// Directed edge `from → to`, meaning `Q_from ⪯ Q_to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub const fn new(from: usize, to: usize) -> Self {
        Edge { from, to }
    }

    pub fn is_root(&self) -> bool {
        self.from == 0
    }
}

impl From<(usize, usize)> for Edge {
    fn from((from, to): (usize, usize)) -> Self {
        Edge { from, to }
    }
}

/// DAG on vertices `{0, …, n}` rooted at `0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderDag {
    n: usize,
    edges: Vec<Edge>,
}

impl OrderDag {
    /// Builds and validates a graph.
    pub fn new(n: usize, edges: impl IntoIterator<Item = impl Into<Edge>>) -> Result<Self, GraphError> {
        let dag = Self::new_unchecked(n, edges);
        dag.validate()?;
        Ok(dag)
    }

    /// Builds a graph without validation; call [`OrderDag::validate`] before solving.
    pub fn new_unchecked(n: usize, edges: impl IntoIterator<Item = impl Into<Edge>>) -> Self {
        OrderDag { n, edges: edges.into_iter().map(Into::into).collect() }
    }

    /// The chain `0 → 1 → … → n`.
    pub fn chain(n: usize) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidSize);
        }
        Ok(OrderDag { n, edges: (0..n).map(|i| Edge::new(i, i + 1)).collect() })
    }

    /// Number of non-root vertices.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        self.n + 1
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<Edge, GraphError> {
        self.edges.get(e).copied().ok_or(GraphError::IndexOutOfRange { index: e, limit: self.edges.len() })
    }

    /// Checks acyclicity, root reachability and edge well-formedness.
    pub fn validate(&self) -> Result<(), GraphError> {
        if self.n == 0 {
            return Err(GraphError::InvalidSize);
        }
        let nv = self.num_vertices();
        for (index, e) in self.edges.iter().enumerate() {
            let malformed = |reason| GraphError::MalformedEdge { index, from: e.from, to: e.to, reason };
            if e.from >= nv || e.to >= nv {
                return Err(malformed("endpoint out of range"));
            }
            if e.from == e.to {
                return Err(malformed("self-loop"));
            }
            if e.to == 0 {
                return Err(malformed("edge into the root"));
            }
            if self.edges[..index].contains(e) {
                return Err(malformed("duplicate edge"));
            }
        }

        // Kahn's algorithm; leftover vertices lie on or behind a cycle.
        let mut indeg = vec![0usize; nv];
        for e in &self.edges {
            indeg[e.to] += 1;
        }
        let mut stack: Vec<usize> = (0..nv).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for e in self.edges.iter().filter(|e| e.from == v) {
                indeg[e.to] -= 1;
                if indeg[e.to] == 0 {
                    stack.push(e.to);
                }
            }
        }
        if seen != nv {
            let vertex = (0..nv).find(|&v| indeg[v] > 0).unwrap_or(0);
            return Err(GraphError::CyclicGraph { vertex });
        }

        let mut reached = vec![false; nv];
        reached[0] = true;
        let mut stack = vec![0usize];
        while let Some(v) = stack.pop() {
            for e in self.edges.iter().filter(|e| e.from == v) {
                if !reached[e.to] {
                    reached[e.to] = true;
                    stack.push(e.to);
                }
            }
        }
        if let Some(vertex) = reached.iter().position(|r| !r) {
            return Err(GraphError::UnreachableVertex { vertex });
        }
        Ok(())
    }

    /// Incidence coefficient `b_ie`: `+1` if `e` leaves `i`, `-1` if it enters `i`.
    pub fn incidence(&self, vertex: usize, edge: usize) -> Result<i8, GraphError> {
        if vertex >= self.num_vertices() {
            return Err(GraphError::IndexOutOfRange { index: vertex, limit: self.num_vertices() });
        }
        let e = self.edge(edge)?;
        Ok(if e.from == vertex {
            1
        } else if e.to == vertex {
            -1
        } else {
            0
        })
    }

    /// Directed path `0 → … → target`, traced backwards through the
    /// lowest-index predecessor at each step.
    pub fn path_from_root(&self, target: usize) -> Result<Vec<Edge>, GraphError> {
        if target == 0 || target >= self.num_vertices() {
            return Err(GraphError::IndexOutOfRange { index: target, limit: self.num_vertices() });
        }
        let mut path = Vec::new();
        let mut v = target;
        while v != 0 {
            let pred = self
                .edges
                .iter()
                .filter(|e| e.to == v)
                .map(|e| e.from)
                .min()
                .ok_or(GraphError::UnreachableVertex { vertex: target })?;
            path.push(Edge::new(pred, v));
            if path.len() > self.edges.len() {
                return Err(GraphError::CyclicGraph { vertex: v });
            }
            v = pred;
        }
        path.reverse();
        Ok(path)
    }

    /// Indices into [`OrderDag::edges`] of a root path to `target`.
    pub fn path_edge_indices(&self, target: usize) -> Result<Vec<usize>, GraphError> {
        let path = self.path_from_root(target)?;
        Ok(path
            .iter()
            .map(|p| self.edges.iter().position(|e| e == p).expect("path edges come from the graph"))
            .collect())
    }
}
