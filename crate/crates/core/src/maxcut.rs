//! Cut weights, the exhaustive Max-Cut oracle and photon-count binarization.

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use serde::{Deserialize, Serialize};

/// Largest node count accepted by [`brute_force_maxcut`].
pub const BRUTE_FORCE_LIMIT: usize = 24;

/// Side of the cut for each node, 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CutAssignment {
    bits: Vec<u8>,
}

impl CutAssignment {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(b) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidArgument(format!("cut bits must be 0 or 1, got {b}")));
        }
        Ok(Self { bits })
    }

    /// Assignment whose bit `i` is bit `n - 1 - i` of `mask` (node 0 is the
    /// most significant bit).
    pub fn from_mask(mask: usize, n: usize) -> Self {
        Self { bits: (0..n).map(|i| ((mask >> (n - 1 - i)) & 1) as u8).collect() }
    }

    pub fn to_mask(&self) -> usize {
        self.bits.iter().fold(0, |m, &b| (m << 1) | b as usize)
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

    pub fn complement(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| 1 - b).collect() }
    }

    /// Representative with node 0 on side 0.
    pub fn canonical(&self) -> Self {
        if self.bits.first() == Some(&1) {
            self.complement()
        } else {
            self.clone()
        }
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// Total weight of edges whose endpoints lie on different sides.
pub fn cut_weight(graph: &WeightedGraph, cut: &CutAssignment) -> Result<f64> {
    if cut.len() != graph.n() {
        return Err(Error::DimensionMismatch(format!(
            "cut has {} bits for a graph of {} nodes",
            cut.len(),
            graph.n()
        )));
    }
    Ok(mask_cut_weight(graph, cut.to_mask()))
}

/// Cut weight for an assignment given as a bit mask (node 0 = highest bit).
pub fn mask_cut_weight(graph: &WeightedGraph, mask: usize) -> f64 {
    let n = graph.n();
    graph
        .edges()
        .iter()
        .filter(|&&(i, j, _)| ((mask >> (n - 1 - i)) ^ (mask >> (n - 1 - j))) & 1 == 1)
        .map(|&(_, _, w)| w)
        .sum()
}

/// Cut weight of every one of the `2^n` assignments, indexed by mask.
pub fn cut_table(graph: &WeightedGraph) -> Vec<f64> {
    (0..1usize << graph.n()).map(|m| mask_cut_weight(graph, m)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxCutSolution {
    pub mc: f64,
    /// Every optimal assignment with node 0 on side 0, in ascending mask order.
    pub maximizers: Vec<CutAssignment>,
}

/// Exhaustive Max-Cut over the `2^(n-1)` bipartitions with node 0 fixed.
/// Cuts within `1e-12` (relative) of the best are reported as maximizers.
pub fn brute_force_maxcut(graph: &WeightedGraph) -> Result<MaxCutSolution> {
    let n = graph.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { n, limit: BRUTE_FORCE_LIMIT });
    }
    let half = 1usize << (n - 1);
    let weights: Vec<f64> = (0..half).map(|m| mask_cut_weight(graph, m)).collect();
    let mc = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-12 * mc.abs().max(1.0);
    let maximizers = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w >= mc - tol)
        .map(|(m, _)| CutAssignment::from_mask(m, n))
        .collect();
    Ok(MaxCutSolution { mc, maximizers })
}

/// Zero counts map to side 0, any detection to side 1.
pub fn binarize(counts: &[usize]) -> CutAssignment {
    CutAssignment { bits: counts.iter().map(|&k| u8::from(k != 0)).collect() }
}
