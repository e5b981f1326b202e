//! Turning a valued tree into partitions, saliencies and contour maps.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::graph::{Rag, Tree};
use crate::raster::{LabelMap, SaliencyGrid};
use crate::sws::HierarchyValuation;
use crate::union_find::UnionFind;

/// A partition of the tree's nodes, labelled `0..region_count` in order of
/// first node occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePartition {
    labels: Vec<u32>,
    region_count: usize,
}

impl NodePartition {
    fn from_union_find<S: crate::union_find::Additive>(uf: &mut UnionFind<S>) -> Self {
        let mut remap = HashMap::new();
        let labels = (0..uf.len())
            .map(|i| {
                let next = remap.len() as u32;
                *remap.entry(uf.find(i)).or_insert(next)
            })
            .collect();
        Self {
            labels,
            region_count: remap.len(),
        }
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> u32 {
        self.labels[node]
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    /// Pixel-level label map through the fine partition, relabelled by first
    /// raster occurrence.
    pub fn to_label_map(&self, fine: &LabelMap) -> Result<LabelMap> {
        if fine.region_count() != self.labels.len() {
            return Err(Error::InvalidArgument(format!(
                "partition covers {} nodes but the fine partition has {} regions",
                self.labels.len(),
                fine.region_count()
            )));
        }
        let ids: Vec<u32> = fine
            .labels()
            .iter()
            .map(|&l| self.labels[l as usize])
            .collect();
        Ok(LabelMap::from_components(fine.width(), fine.height(), &ids))
    }
}

/// Saliency of region pairs: the largest cut probability on the tree path
/// between the two regions.
#[derive(Clone, Debug, PartialEq)]
pub struct Ultrametric {
    values: HashMap<(u32, u32), f64>,
}

impl Ultrametric {
    /// `d(u, v)`, if the pair was requested.
    pub fn get(&self, u: u32, v: u32) -> Option<f64> {
        if u == v {
            return Some(0.0);
        }
        self.values.get(&(u.min(v), u.max(v))).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Path-maximum saliency for each requested pair.
///
/// Sweeps tree edges by increasing `(p, edge_id)`; a pair is resolved by the
/// edge that first connects its endpoints. Pending pairs are kept per
/// component and the smaller list is scanned on each merge.
pub fn ultrametric(
    tree: &Tree,
    valuation: &HierarchyValuation,
    pairs: &[(u32, u32)],
) -> Result<Ultrametric> {
    valuation.check_covers(tree)?;
    let n = tree.node_count();
    if let Some(&(a, b)) = pairs
        .iter()
        .find(|&&(a, b)| a as usize >= n || b as usize >= n)
    {
        return Err(Error::InvalidArgument(format!(
            "pair ({a}, {b}) references a missing node"
        )));
    }
    let probs = valuation.probabilities();
    let mut values = HashMap::with_capacity(pairs.len());
    let mut resolved = vec![false; pairs.len()];
    let mut pending: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (q, &(a, b)) in pairs.iter().enumerate() {
        if a == b {
            resolved[q] = true;
            continue;
        }
        pending[a as usize].push(q);
        pending[b as usize].push(q);
    }

    let mut uf = UnionFind::new(n);
    for idx in tree.order_by(&probs) {
        let e = tree.edges()[idx];
        let ra = uf.find(e.u as usize);
        let rb = uf.find(e.v as usize);
        let (small, large) = if pending[ra].len() < pending[rb].len() {
            (ra, rb)
        } else {
            (rb, ra)
        };
        let small_list = std::mem::take(&mut pending[small]);
        let mut kept = Vec::with_capacity(small_list.len());
        for q in small_list {
            if resolved[q] {
                continue;
            }
            let (a, b) = pairs[q];
            let (fa, fb) = (uf.find(a as usize), uf.find(b as usize));
            if (fa == small && fb == large) || (fa == large && fb == small) {
                resolved[q] = true;
                values.insert((a.min(b), a.max(b)), probs[idx]);
            } else {
                kept.push(q);
            }
        }
        let mut merged = std::mem::take(&mut pending[large]);
        merged.extend(kept);
        let root = uf.union(ra, rb);
        pending[root] = merged;
    }
    Ok(Ultrametric { values })
}

/// Saliency of every adjacency of the RAG.
pub fn rag_ultrametric(
    tree: &Tree,
    valuation: &HierarchyValuation,
    rag: &Rag,
) -> Result<Ultrametric> {
    let pairs: Vec<(u32, u32)> = rag.edges().iter().map(|e| (e.u, e.v)).collect();
    ultrametric(tree, valuation, &pairs)
}

/// Cuts every tree edge with `p > lambda`.
pub fn cut_threshold(
    tree: &Tree,
    valuation: &HierarchyValuation,
    lambda: f64,
) -> Result<NodePartition> {
    valuation.check_covers(tree)?;
    let mut uf = UnionFind::new(tree.node_count());
    for (e, v) in tree.edges().iter().zip(valuation.edges()) {
        if v.probability <= lambda {
            uf.union(e.u as usize, e.v as usize);
        }
    }
    Ok(NodePartition::from_union_find(&mut uf))
}

/// Cuts the `k - 1` edges with the largest `(p, edge_id)`, leaving exactly `k` regions.
pub fn cut_k(tree: &Tree, valuation: &HierarchyValuation, k: usize) -> Result<NodePartition> {
    valuation.check_covers(tree)?;
    let n = tree.node_count();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "region count {k} outside 1..={n}"
        )));
    }
    let mut uf = UnionFind::new(n);
    for idx in tree
        .order_by(&valuation.probabilities())
        .into_iter()
        .take(n - k)
    {
        let e = tree.edges()[idx];
        uf.union(e.u as usize, e.v as usize);
    }
    Ok(NodePartition::from_union_find(&mut uf))
}

/// Marker-based segmentation on the tree: one region per marker.
///
/// Edges are scanned by increasing `(p, edge_id)` and merged unless both sides
/// already hold a marker. The refused edges are exactly the highest edges on
/// the paths between pairs of markers.
pub fn marker_cut(
    tree: &Tree,
    valuation: &HierarchyValuation,
    markers: &[u32],
) -> Result<NodePartition> {
    valuation.check_covers(tree)?;
    let n = tree.node_count();
    let marked: BTreeSet<u32> = markers.iter().copied().collect();
    if marked.is_empty() {
        return Err(Error::InvalidArgument("marker set is empty".into()));
    }
    if let Some(&m) = marked.iter().find(|&&m| m as usize >= n) {
        return Err(Error::InvalidArgument(format!(
            "marker {m} is not a tree node"
        )));
    }
    let flags = (0..n as u32)
        .map(|i| u64::from(marked.contains(&i)))
        .collect();
    let mut uf = UnionFind::with_stats(flags);
    for idx in tree.order_by(&valuation.probabilities()) {
        let e = tree.edges()[idx];
        if *uf.stats(e.u as usize) > 0 && *uf.stats(e.v as usize) > 0 {
            continue;
        }
        uf.union(e.u as usize, e.v as usize);
    }
    Ok(NodePartition::from_union_find(&mut uf))
}

/// Renders the ultrametric contour map of the fine partition on the
/// inter-pixel grid. Corner cells take the largest value of their incident
/// boundary cells so that every threshold yields closed contours.
pub fn render_ucm(fine: &LabelMap, saliency: &Ultrametric) -> Result<SaliencyGrid> {
    let (w, h) = fine.dims();
    let mut grid = SaliencyGrid::zeros(w, h);
    let lookup = |a: u32, b: u32| {
        saliency.get(a, b).ok_or_else(|| {
            Error::Validation(format!("no saliency for adjacent regions {a} and {b}"))
        })
    };
    for y in 0..h {
        for x in 0..w {
            let l = fine.get(x, y);
            if x + 1 < w && fine.get(x + 1, y) != l {
                grid.set(2 * x + 2, 2 * y + 1, lookup(l, fine.get(x + 1, y))?);
            }
            if y + 1 < h && fine.get(x, y + 1) != l {
                grid.set(2 * x + 1, 2 * y + 2, lookup(l, fine.get(x, y + 1))?);
            }
        }
    }
    let (gw, gh) = (grid.width(), grid.height());
    for cy in (0..gh).step_by(2) {
        for cx in (0..gw).step_by(2) {
            let mut m: f64 = 0.0;
            if cx > 0 {
                m = m.max(grid.get(cx - 1, cy));
            }
            if cx + 1 < gw {
                m = m.max(grid.get(cx + 1, cy));
            }
            if cy > 0 {
                m = m.max(grid.get(cx, cy - 1));
            }
            if cy + 1 < gh {
                m = m.max(grid.get(cx, cy + 1));
            }
            grid.set(cx, cy, m);
        }
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TreeEdge;
    use crate::sws::{sws_valuation, DensityField};

    /// Path tree over `probs.len() + 1` nodes valued with `probs`.
    fn valued_path(probs: &[f64]) -> (Tree, HierarchyValuation) {
        let edges = (0..probs.len())
            .map(|i| TreeEdge {
                u: i as u32,
                v: i as u32 + 1,
                weight: 0.0,
                edge_id: i,
            })
            .collect();
        let tree = Tree::new(probs.len() + 1, edges).unwrap();
        let val = HierarchyValuation::new(&tree, probs.to_vec()).unwrap();
        (tree, val)
    }

    #[test]
    fn path_max_saliency() {
        let (tree, val) = valued_path(&[0.2, 0.9]);
        let u = ultrametric(&tree, &val, &[(0, 2), (0, 1), (1, 2)]).unwrap();
        assert_eq!(u.get(0, 2), Some(0.9));
        assert_eq!(u.get(2, 0), Some(0.9));
        assert_eq!(u.get(0, 1), Some(0.2));
        assert_eq!(u.get(1, 1), Some(0.0));
    }

    #[test]
    fn threshold_extremes() {
        let (tree, val) = valued_path(&[0.2, 0.9, 0.4]);
        assert_eq!(cut_threshold(&tree, &val, 1.0).unwrap().region_count(), 1);
        let finest = cut_threshold(&tree, &val, 0.1).unwrap();
        assert_eq!(finest.labels(), &[0, 1, 2, 3]);
        assert_eq!(
            cut_threshold(&tree, &val, 0.4).unwrap().labels(),
            &[0, 0, 1, 1]
        );
    }

    #[test]
    fn k_cut_extremes_and_ties() {
        let (tree, val) = valued_path(&[0.5, 0.5, 0.5]);
        assert_eq!(cut_k(&tree, &val, 1).unwrap().region_count(), 1);
        assert_eq!(cut_k(&tree, &val, 4).unwrap().labels(), &[0, 1, 2, 3]);
        // the largest (p, edge_id) is edge 2
        assert_eq!(cut_k(&tree, &val, 2).unwrap().labels(), &[0, 0, 0, 1]);
        assert!(cut_k(&tree, &val, 0).is_err());
        assert!(cut_k(&tree, &val, 5).is_err());
    }

    #[test]
    fn marker_cut_on_path() {
        // a-b-c-d with p = [0.1, 0.9, 0.2], markers {a, d}
        let (tree, val) = valued_path(&[0.1, 0.9, 0.2]);
        assert_eq!(
            marker_cut(&tree, &val, &[0, 3]).unwrap().labels(),
            &[0, 0, 1, 1]
        );
        assert_eq!(marker_cut(&tree, &val, &[2]).unwrap().region_count(), 1);
        assert_eq!(
            marker_cut(&tree, &val, &[0, 1, 2, 3]).unwrap().labels(),
            &[0, 1, 2, 3]
        );
        assert!(marker_cut(&tree, &val, &[]).is_err());
        assert!(marker_cut(&tree, &val, &[7]).is_err());
    }

    #[test]
    fn markers_anywhere_in_their_domain_give_the_same_cut() {
        // the 0.9 edge separates the domains {0, 1} and {2, 3}; one marker in
        // each domain always cuts it
        let (tree, val) = valued_path(&[0.1, 0.9, 0.2]);
        let reference = marker_cut(&tree, &val, &[0, 3]).unwrap();
        for a in [0u32, 1] {
            for b in [2u32, 3] {
                assert_eq!(marker_cut(&tree, &val, &[a, b]).unwrap(), reference);
            }
        }
    }

    #[test]
    fn ucm_of_single_region_is_zero() {
        let fine = LabelMap::from_labels(3, 2, vec![0; 6]).unwrap();
        let u = Ultrametric {
            values: HashMap::new(),
        };
        let grid = render_ucm(&fine, &u).unwrap();
        assert!(grid.values().iter().all(|&v| v == 0.0));
        assert_eq!((grid.width(), grid.height()), (7, 5));
    }

    #[test]
    fn ucm_of_two_pixels() {
        let fine = LabelMap::from_labels(2, 1, vec![0, 1]).unwrap();
        let mut values = HashMap::new();
        values.insert((0, 1), 0.7);
        let grid = render_ucm(&fine, &Ultrametric { values }).unwrap();
        let lit: Vec<(usize, usize)> = (0..grid.height())
            .flat_map(|y| (0..grid.width()).map(move |x| (x, y)))
            .filter(|&(x, y)| grid.get(x, y) != 0.0)
            .collect();
        assert_eq!(lit, vec![(2, 0), (2, 1), (2, 2)]);
        assert!(lit.iter().all(|&(x, y)| grid.get(x, y) == 0.7));
    }

    #[test]
    fn ucm_needs_every_adjacency() {
        let fine = LabelMap::from_labels(2, 1, vec![0, 1]).unwrap();
        let err = render_ucm(
            &fine,
            &Ultrametric {
                values: HashMap::new(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn mismatched_valuation_is_rejected() {
        let (tree, _) = valued_path(&[0.1, 0.2]);
        let other = Tree::new(
            2,
            vec![TreeEdge {
                u: 0,
                v: 1,
                weight: 0.0,
                edge_id: 5,
            }],
        )
        .unwrap();
        let d = DensityField::new(vec![1.0, 1.0]).unwrap();
        let val = sws_valuation(&other, &d).unwrap();
        assert!(cut_threshold(&tree, &val, 0.5).is_err());
    }
}
