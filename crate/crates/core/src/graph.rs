//! Weighted undirected graphs and their JSON form
//! `{"n": 4, "edges": [[0, 1, 1.0], ...]}` with 0-based node indices.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

/// Undirected graph with real edge weights and no self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    /// Validates and normalizes an edge list; each edge is stored as `(i, j, w)`
    /// with `i < j`, in input order.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".into()));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(edges.len());
        for (k, (i, j, w)) in edges.into_iter().enumerate() {
            if i >= n || j >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} ({i}, {j}) references a node outside 0..{n}"
                )));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("edge {k} is a self-loop on node {i}")));
            }
            if !w.is_finite() {
                return Err(Error::InvalidGraph(format!("edge {k} has non-finite weight {w}")));
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!(
                    "edge {k} duplicates the edge between {} and {}",
                    key.0, key.1
                )));
            }
            out.push((key.0, key.1, w));
        }
        Ok(Self { n, edges: out })
    }

    /// Star graph `K_{1, n-1}` with unit weights, centered on node 0.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|j| (0, j, 1.0)).collect())
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: GraphJson =
            serde_json::from_str(text).map_err(|e| Error::InvalidGraph(format!("malformed graph JSON: {e}")))?;
        Self::new(raw.n, raw.edges)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidGraph(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson { n: self.n, edges: self.edges.clone() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Symmetric adjacency matrix with zero diagonal.
    pub fn adjacency<T: Real>(&self) -> DMatrix<T> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            a[(i, j)] = lit(w);
            a[(j, i)] = lit(w);
        }
        a
    }

    /// Same graph with node labels permuted: node `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        let mut sorted = perm.to_vec();
        sorted.sort_unstable();
        if sorted != (0..self.n).collect::<Vec<_>>() {
            return Err(Error::InvalidArgument("relabeling is not a permutation".into()));
        }
        Self::new(self.n, self.edges.iter().map(|&(i, j, w)| (perm[i], perm[j], w)).collect())
    }
}
