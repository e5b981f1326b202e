#![allow(dead_code)]

use std::collections::{HashMap, VecDeque};

use hrfseg::graph::{Tree, TreeEdge};
use hrfseg::raster::{LabelMap, Raster};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random spanning tree on `n` nodes. With `ties`, weights come from a small
/// set so equal-weight batches are common.
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, ties: bool) -> Tree {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let j = rng.random_range(0..i);
        let (a, b) = (perm[i], perm[j]);
        let weight = if ties {
            rng.random_range(1..4) as f64
        } else {
            rng.random_range(0.0..10.0)
        };
        edges.push(TreeEdge {
            u: a.min(b),
            v: a.max(b),
            weight,
            edge_id: 0,
        });
    }
    edges.sort_by_key(|e| (e.u, e.v));
    for (i, e) in edges.iter_mut().enumerate() {
        e.edge_id = i;
    }
    Tree::new(n, edges).unwrap()
}

/// Labels of connected components, numbered by first occurrence.
pub fn components(n: usize, edges: &[(usize, usize)]) -> Vec<u32> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut label = vec![u32::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if label[s] != u32::MAX {
            continue;
        }
        label[s] = next;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if label[y] == u32::MAX {
                    label[y] = next;
                    queue.push_back(y);
                }
            }
        }
        next += 1;
    }
    label
}

/// Whether two labelings describe the same partition.
pub fn same_partition(a: &[u32], b: &[u32]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let mut fwd = HashMap::new();
    let mut back = HashMap::new();
    a.iter()
        .zip(b)
        .all(|(&x, &y)| *fwd.entry(x).or_insert(y) == y && *back.entry(y).or_insert(x) == x)
}

/// Whether every region of `fine` lies inside a single region of `coarse`.
pub fn refines(fine: &[u32], coarse: &[u32]) -> bool {
    let mut map = HashMap::new();
    fine.iter()
        .zip(coarse)
        .all(|(&f, &c)| *map.entry(f).or_insert(c) == c)
}

/// Node sets on each side of tree edge `i`, using only tree edges of strictly
/// smaller weight.
pub fn sides(tree: &Tree, i: usize) -> (Vec<usize>, Vec<usize>) {
    let w = tree.edges()[i].weight;
    let lower: Vec<(usize, usize)> = tree
        .edges()
        .iter()
        .filter(|e| e.weight < w)
        .map(|e| (e.u as usize, e.v as usize))
        .collect();
    let comp = components(tree.node_count(), &lower);
    let e = &tree.edges()[i];
    let side = |root: usize| {
        (0..tree.node_count())
            .filter(|&x| comp[x] == comp[root])
            .collect()
    };
    (side(e.u as usize), side(e.v as usize))
}

pub fn closed_form(a: f64, b: f64) -> f64 {
    (1.0 - (-a).exp()) * (1.0 - (-b).exp())
}

/// Valuation computed edge by edge from explicit side sets.
pub fn naive_valuation(tree: &Tree, measures: &[f64], chi: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..tree.edges().len())
        .map(|i| {
            let (s, t) = sides(tree, i);
            let a: f64 = s.iter().map(|&x| measures[x]).sum();
            let b: f64 = t.iter().map(|&x| measures[x]).sum();
            closed_form(chi(i) * a, chi(i) * b)
        })
        .collect()
}

/// Largest value on the tree path between `a` and `b`.
pub fn path_max(tree: &Tree, values: &[f64], a: usize, b: usize) -> f64 {
    let mut adj = vec![Vec::new(); tree.node_count()];
    for (i, e) in tree.edges().iter().enumerate() {
        adj[e.u as usize].push((e.v as usize, values[i]));
        adj[e.v as usize].push((e.u as usize, values[i]));
    }
    let mut best = vec![f64::NAN; tree.node_count()];
    best[a] = 0.0;
    let mut stack = vec![a];
    while let Some(x) = stack.pop() {
        for &(y, w) in &adj[x] {
            if best[y].is_nan() {
                best[y] = best[x].max(w);
                stack.push(y);
            }
        }
    }
    best[b]
}

pub fn random_connected_graph<R: Rng>(
    rng: &mut R,
    n: usize,
    extra: usize,
    ties: bool,
) -> Vec<(u32, u32, f64)> {
    let mut used = std::collections::HashSet::new();
    let mut edges = Vec::new();
    let weight = |rng: &mut R| {
        if ties {
            rng.random_range(0..3) as f64
        } else {
            rng.random_range(0.0..1.0)
        }
    };
    for i in 1..n as u32 {
        let j = rng.random_range(0..i);
        used.insert((j, i));
        let w = weight(rng);
        edges.push((j, i, w));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n as u32);
        let b = rng.random_range(0..n as u32);
        if a != b && used.insert((a.min(b), a.max(b))) {
            let w = weight(rng);
            edges.push((a.min(b), a.max(b), w));
        }
    }
    edges
}

/// Minimum spanning tree weight by trying every subset of `n - 1` edges.
pub fn exhaustive_mst_weight(n: usize, edges: &[(u32, u32, f64)]) -> f64 {
    let m = edges.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let chosen: Vec<(usize, usize)> = (0..m)
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| (edges[i].0 as usize, edges[i].1 as usize))
            .collect();
        let comp = components(n, &chosen);
        if comp.iter().all(|&c| c == 0) {
            let w: f64 = (0..m)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| edges[i].2)
                .sum();
            best = best.min(w);
        }
    }
    best
}

/// A strip of `n` regions, region `r` spanning `sizes[r]` columns.
pub fn strip(sizes: &[usize]) -> LabelMap {
    let raw: Vec<u32> = sizes
        .iter()
        .enumerate()
        .flat_map(|(r, &s)| std::iter::repeat_n(r as u32, s))
        .collect();
    LabelMap::from_labels(raw.len(), 1, raw).unwrap()
}

/// Prior pixel pools per node: node `r` owns the pixels `pools[r]`.
pub fn pooled_chi(tree: &Tree, pools: &[Vec<f64>], i: usize) -> f64 {
    let (s, t) = sides(tree, i);
    let stats = |side: &[usize]| {
        let values: Vec<f64> = side
            .iter()
            .flat_map(|&r| pools[r].iter().copied())
            .collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
        (mean, var.sqrt())
    };
    let ((ms, ss), (mt, st)) = (stats(&s), stats(&t));
    ms.max(mt) * (1.0 - ms.min(mt)) / (0.01 + ss * st)
}

pub fn random_pools<R: Rng>(rng: &mut R, n: usize) -> (LabelMap, Raster, Vec<Vec<f64>>) {
    let sizes: Vec<usize> = (0..n).map(|_| rng.random_range(1..6)).collect();
    let labels = strip(&sizes);
    let prior = Raster::from_fn(labels.width(), 1, |_, _| rng.random_range(0.0..=1.0)).unwrap();
    let mut pools = vec![Vec::new(); n];
    for (p, &l) in labels.labels().iter().enumerate() {
        pools[l as usize].push(prior.values()[p]);
    }
    (labels, prior, pools)
}
