//! Region adjacency graph and its minimum spanning tree.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::raster::{LabelMap, Raster};
use crate::union_find::UnionFind;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RagEdge {
    pub u: u32,
    pub v: u32,
    pub weight: f64,
    /// Number of 4-adjacent pixel pairs shared by the two regions.
    pub boundary_length: u64,
}

/// Region adjacency graph.
///
/// Edges are stored with `u < v`, sorted lexicographically by `(u, v)`; an
/// edge's id is its index in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct Rag {
    node_count: usize,
    edges: Vec<RagEdge>,
    pixel_counts: Vec<u64>,
    intensity_sums: Vec<f64>,
}

impl Rag {
    /// Graph from an explicit edge list (unit node sizes, unit boundaries).
    pub fn from_edges(
        node_count: usize,
        edges: impl IntoIterator<Item = (u32, u32, f64)>,
    ) -> Result<Self> {
        let mut list: Vec<RagEdge> = Vec::new();
        for (a, b, weight) in edges {
            if a == b {
                return Err(Error::Validation(format!("self-loop on node {a}")));
            }
            if a as usize >= node_count || b as usize >= node_count {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) references a missing node"
                )));
            }
            if weight.is_nan() || weight < 0.0 {
                return Err(Error::Validation(format!(
                    "edge ({a}, {b}) has invalid weight {weight}"
                )));
            }
            list.push(RagEdge {
                u: a.min(b),
                v: a.max(b),
                weight,
                boundary_length: 1,
            });
        }
        list.sort_by_key(|e| (e.u, e.v));
        if let Some(w) = list
            .windows(2)
            .find(|w| (w[0].u, w[0].v) == (w[1].u, w[1].v))
        {
            return Err(Error::Validation(format!(
                "duplicate edge ({}, {})",
                w[0].u, w[0].v
            )));
        }
        Ok(Self {
            node_count,
            edges: list,
            pixel_counts: vec![1; node_count],
            intensity_sums: vec![0.0; node_count],
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[RagEdge] {
        &self.edges
    }

    pub fn pixel_count(&self, node: usize) -> u64 {
        self.pixel_counts[node]
    }

    pub fn mean_intensity(&self, node: usize) -> f64 {
        self.intensity_sums[node] / self.pixel_counts[node] as f64
    }
}

/// Builds the RAG of `labels`, weighting each edge by the absolute difference of
/// the mean intensities of its two regions.
pub fn build_rag(labels: &LabelMap, image: &Raster) -> Result<Rag> {
    if labels.dims() != image.dims() {
        return Err(Error::DimensionMismatch {
            expected: labels.dims(),
            found: image.dims(),
        });
    }
    let n = labels.region_count();
    if n < 2 {
        return Err(Error::SingleRegion);
    }
    let (w, h) = labels.dims();
    let lab = labels.labels();
    let mut pixel_counts = vec![0u64; n];
    let mut intensity_sums = vec![0.0; n];
    let mut boundaries: HashMap<(u32, u32), u64> = HashMap::new();
    for (i, (&l, &v)) in lab.iter().zip(image.values()).enumerate() {
        pixel_counts[l as usize] += 1;
        intensity_sums[l as usize] += v;
        let x = i % w;
        let mut touch = |m: u32| {
            if m != l {
                *boundaries.entry((l.min(m), l.max(m))).or_insert(0) += 1;
            }
        };
        if x + 1 < w {
            touch(lab[i + 1]);
        }
        if i + w < w * h {
            touch(lab[i + w]);
        }
    }
    let mean = |r: u32| intensity_sums[r as usize] / pixel_counts[r as usize] as f64;
    let mut edges: Vec<RagEdge> = boundaries
        .into_iter()
        .map(|((u, v), boundary_length)| RagEdge {
            u,
            v,
            weight: (mean(u) - mean(v)).abs(),
            boundary_length,
        })
        .collect();
    edges.sort_by_key(|e| (e.u, e.v));
    Ok(Rag {
        node_count: n,
        edges,
        pixel_counts,
        intensity_sums,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeEdge {
    pub u: u32,
    pub v: u32,
    pub weight: f64,
    /// Canonical id of the edge in the graph the tree was extracted from.
    pub edge_id: usize,
}

/// A spanning tree: `node_count - 1` edges, ordered by `edge_id`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    node_count: usize,
    edges: Vec<TreeEdge>,
}

impl Tree {
    /// Validates that `edges` form a spanning tree over `node_count` nodes.
    pub fn new(node_count: usize, mut edges: Vec<TreeEdge>) -> Result<Self> {
        if node_count == 0 || edges.len() + 1 != node_count {
            return Err(Error::Validation(format!(
                "a spanning tree over {node_count} nodes needs {} edges, got {}",
                node_count.saturating_sub(1),
                edges.len()
            )));
        }
        let mut uf = UnionFind::new(node_count);
        for e in &edges {
            if e.u as usize >= node_count || e.v as usize >= node_count {
                return Err(Error::Validation(format!(
                    "edge {} references a missing node",
                    e.edge_id
                )));
            }
            if uf.same(e.u as usize, e.v as usize) {
                return Err(Error::Validation(format!(
                    "edge {} closes a cycle",
                    e.edge_id
                )));
            }
            uf.union(e.u as usize, e.v as usize);
        }
        edges.sort_by_key(|e| e.edge_id);
        if edges.windows(2).any(|w| w[0].edge_id == w[1].edge_id) {
            return Err(Error::Validation("duplicate edge ids".into()));
        }
        Ok(Self { node_count, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    pub fn total_weight(&self) -> f64 {
        self.edges.iter().map(|e| e.weight).sum()
    }

    /// Same topology with new weights (one per edge, in `edges()` order).
    pub fn with_weights(&self, weights: &[f64]) -> Tree {
        assert_eq!(weights.len(), self.edges.len());
        let edges = self
            .edges
            .iter()
            .zip(weights)
            .map(|(e, &weight)| TreeEdge { weight, ..*e })
            .collect();
        Tree {
            node_count: self.node_count,
            edges,
        }
    }

    /// Indices into `edges()` sorted by increasing `(key, edge_id)`.
    pub(crate) fn order_by(&self, key: &[f64]) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.edges.len()).collect();
        order.sort_by(|&a, &b| {
            key[a]
                .total_cmp(&key[b])
                .then(self.edges[a].edge_id.cmp(&self.edges[b].edge_id))
        });
        order
    }

    /// Indices into `edges()` sorted by increasing `(weight, edge_id)`.
    pub(crate) fn weight_order(&self) -> Vec<usize> {
        let weights: Vec<f64> = self.edges.iter().map(|e| e.weight).collect();
        self.order_by(&weights)
    }
}

/// Kruskal's algorithm with ties broken by edge id.
pub fn minimum_spanning_tree(rag: &Rag) -> Result<Tree> {
    let n = rag.node_count();
    let mut order: Vec<usize> = (0..rag.edges.len()).collect();
    order.sort_by(|&a, &b| {
        rag.edges[a]
            .weight
            .total_cmp(&rag.edges[b].weight)
            .then(a.cmp(&b))
    });
    let mut uf = UnionFind::new(n);
    let mut kept = Vec::with_capacity(n.saturating_sub(1));
    for id in order {
        let e = rag.edges[id];
        if !uf.same(e.u as usize, e.v as usize) {
            uf.union(e.u as usize, e.v as usize);
            kept.push(TreeEdge {
                u: e.u,
                v: e.v,
                weight: e.weight,
                edge_id: id,
            });
            if kept.len() + 1 == n {
                break;
            }
        }
    }
    if uf.set_count() != 1 {
        return Err(Error::Disconnected {
            components: uf.set_count(),
        });
    }
    Tree::new(n, kept)
}
