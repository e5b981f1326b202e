//! Closed-form stochastic watershed valuation of a minimum spanning tree.
//!
//! Markers are modelled as a Poisson point process. The expected number of
//! markers in a fine region is its *measure*; measures add up over unions, so
//! the measure of any component is accumulated while sweeping the tree edges in
//! increasing weight order.
//!
//! An edge `(s, t)` of weight `w` separates the component `C_s` containing `s`
//! from the component `C_t` containing `t`, where the components are built
//! from tree edges of weight strictly below `w` (all edges of weight `>= w` are
//! cut). The edge survives marker-based segmentation iff both sides receive a
//! marker, which happens with probability
//!
//! ```text
//! P = 1 - exp(-L(C_s)) - exp(-L(C_t)) + exp(-L(C_s) - L(C_t))
//!   = (1 - exp(-L(C_s))) * (1 - exp(-L(C_t)))
//! ```
//!
//! Edges of equal weight form one batch and are all valued before any of them
//! is merged.

use crate::error::{Error, Result};
use crate::graph::{Tree, TreeEdge};
use crate::partition::RegionPriorMeans;
use crate::raster::{LabelMap, Raster};
use crate::stats::Moments;
use crate::union_find::{Additive, UnionFind};

/// Expected marker count per fine region.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    measures: Vec<f64>,
}

impl DensityField {
    pub fn new(measures: Vec<f64>) -> Result<Self> {
        if let Some(m) = measures.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "region measure {m} must be finite and >= 0"
            )));
        }
        Ok(Self { measures })
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn measure(&self, region: usize) -> f64 {
        self.measures[region]
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.measures.iter().sum()
    }
}

fn check_marker_count(markers: f64) -> Result<()> {
    if markers.is_finite() && markers > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "expected marker count must be positive, got {markers}"
        )))
    }
}

/// Homogeneous density scaled so that `markers` fall in the image on average.
pub fn uniform_density(labels: &LabelMap, markers: f64) -> Result<DensityField> {
    uniform_density_from_sizes(&labels.region_sizes(), markers)
}

pub fn uniform_density_from_sizes(sizes: &[usize], markers: f64) -> Result<DensityField> {
    check_marker_count(markers)?;
    let total = sizes.iter().sum::<usize>() as f64;
    DensityField::new(
        sizes
            .iter()
            .map(|&n| markers * (n as f64 / total))
            .collect(),
    )
}

/// Density proportional to the prior, normalized so that `markers` fall in the
/// image on average.
///
/// A region's measure is its share of the pixel domain times the ratio of its
/// mean prior to the global mean prior. A constant prior therefore reproduces
/// [`uniform_density`] exactly.
pub fn prior_density(means: &RegionPriorMeans, markers: f64) -> Result<DensityField> {
    check_marker_count(markers)?;
    let mut global = Moments::default();
    for m in means.iter() {
        global.merge(m);
    }
    if global.mean().is_nan() || global.mean() <= 0.0 {
        return Err(Error::DegeneratePrior);
    }
    let total = global.count();
    DensityField::new(
        means
            .iter()
            .map(|m| markers * (m.count() / total) * (m.mean() / global.mean()))
            .collect(),
    )
}

/// Pixel-wise average of two prior maps.
///
/// Any global positive factor is absorbed by marker-count normalization, so the
/// halving only keeps the result in `[0, 1]`.
pub fn combine_priors(a: &Raster, b: &Raster) -> Result<Raster> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            expected: a.dims(),
            found: b.dims(),
        });
    }
    a.validate_probability()?;
    b.validate_probability()?;
    let values = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x + y) / 2.0)
        .collect();
    Raster::new(a.width(), a.height(), values)
}

/// Probability that both sides of an edge receive at least one marker.
pub fn cut_probability(measure_s: f64, measure_t: f64) -> f64 {
    (-(-measure_s).exp_m1()) * (-(-measure_t).exp_m1())
}

/// The same probability written by inclusion-exclusion over the two sides.
pub fn cut_probability_inclusion_exclusion(measure_s: f64, measure_t: f64) -> f64 {
    1.0 - (-measure_s).exp() - (-measure_t).exp() + (-(measure_s + measure_t)).exp()
}

/// Per-edge `chi` factor for foreground/background transitions: high when one
/// side is likely foreground and the other background, damped when either side
/// is internally inconsistent.
pub fn transition_chi(mean_s: f64, mean_t: f64, std_s: f64, std_t: f64, epsilon: f64) -> f64 {
    mean_s.max(mean_t) * (1.0 - mean_s.min(mean_t)) / (epsilon + std_s * std_t)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValuedEdge {
    pub edge_id: usize,
    pub weight: f64,
    pub probability: f64,
}

/// Cut probability of every tree edge, in the tree's edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct HierarchyValuation {
    edges: Vec<ValuedEdge>,
}

impl HierarchyValuation {
    /// Wraps externally computed probabilities, one per tree edge in `tree.edges()` order.
    pub fn new(tree: &Tree, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != tree.edges().len() {
            return Err(Error::InvalidArgument(format!(
                "{} probabilities for {} tree edges",
                probabilities.len(),
                tree.edges().len()
            )));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!(
                "probability {p} is outside [0, 1]"
            )));
        }
        Ok(Self::from_probabilities(tree, probabilities))
    }

    fn from_probabilities(tree: &Tree, probabilities: Vec<f64>) -> Self {
        let edges = tree
            .edges()
            .iter()
            .zip(probabilities)
            .map(|(e, probability)| ValuedEdge {
                edge_id: e.edge_id,
                weight: e.weight,
                probability: probability.clamp(0.0, 1.0),
            })
            .collect();
        Self { edges }
    }

    pub fn edges(&self) -> &[ValuedEdge] {
        &self.edges
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.edges.iter().map(|e| e.probability).collect()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.edges[index].probability
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Checks that this valuation belongs to `tree`.
    pub fn check_covers(&self, tree: &Tree) -> Result<()> {
        let ok = self.edges.len() == tree.edges().len()
            && self
                .edges
                .iter()
                .zip(tree.edges())
                .all(|(v, e)| v.edge_id == e.edge_id);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "valuation does not match the tree's edges".into(),
            ))
        }
    }
}

/// Statistics carried by each component during the sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RegionStats {
    /// Expected marker count.
    pub measure: f64,
    /// Pixel statistics of the prior map.
    pub prior: Moments,
}

impl Additive for RegionStats {
    fn absorb(&mut self, other: &Self) {
        self.measure += other.measure;
        self.prior.merge(&other.prior);
    }
}

/// Visits the tree edges in increasing `(weight, edge_id)` order. Each edge of a
/// batch of equal weight sees the component statistics as they stood before
/// that batch; the batch is merged afterwards. Returns one value per edge.
pub fn sweep<S: Additive>(
    tree: &Tree,
    stats: Vec<S>,
    mut value: impl FnMut(&TreeEdge, &S, &S) -> f64,
) -> Vec<f64> {
    let order = tree.weight_order();
    let edges = tree.edges();
    let mut uf = UnionFind::with_stats(stats);
    let mut out = vec![0.0; edges.len()];
    let mut start = 0;
    while start < order.len() {
        let w = edges[order[start]].weight;
        let end = start
            + order[start..]
                .iter()
                .take_while(|&&i| edges[i].weight.total_cmp(&w).is_eq())
                .count();
        for &i in &order[start..end] {
            let e = &edges[i];
            let s = uf.stats(e.u as usize).clone();
            let t = uf.stats(e.v as usize).clone();
            out[i] = value(e, &s, &t);
        }
        for &i in &order[start..end] {
            uf.union(edges[i].u as usize, edges[i].v as usize);
        }
        start = end;
    }
    out
}

fn check_density(tree: &Tree, density: &DensityField) -> Result<()> {
    if density.len() != tree.node_count() {
        return Err(Error::InvalidArgument(format!(
            "density covers {} regions but the tree has {} nodes",
            density.len(),
            tree.node_count()
        )));
    }
    Ok(())
}

/// Stochastic watershed valuation under the given marker density.
pub fn sws_valuation(tree: &Tree, density: &DensityField) -> Result<HierarchyValuation> {
    check_density(tree, density)?;
    let p = sweep(tree, density.measures().to_vec(), |_, s, t| {
        cut_probability(*s, *t)
    });
    Ok(HierarchyValuation::from_probabilities(tree, p))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ChiMode {
    /// `chi = 1`: plain stochastic watershed.
    #[default]
    None,
    /// `chi` is the edge's dissimilarity (volume-based stochastic watershed).
    Volume,
    /// `chi` from the prior statistics of the two sides, see [`transition_chi`].
    Transition,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChiParams {
    pub epsilon: f64,
    pub mode: ChiMode,
}

impl Default for ChiParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            mode: ChiMode::None,
        }
    }
}

impl ChiParams {
    pub fn new(mode: ChiMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }
}

fn chi_stats(
    tree: &Tree,
    density: Option<&DensityField>,
    prior: Option<&RegionPriorMeans>,
    params: ChiParams,
) -> Result<Vec<RegionStats>> {
    if params.epsilon.is_nan() || params.epsilon <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be > 0, got {}",
            params.epsilon
        )));
    }
    let n = tree.node_count();
    let mut stats = vec![RegionStats::default(); n];
    if let Some(d) = density {
        check_density(tree, d)?;
        for (s, &m) in stats.iter_mut().zip(d.measures()) {
            s.measure = m;
        }
    }
    if params.mode == ChiMode::Transition {
        let prior = prior.ok_or_else(|| {
            Error::InvalidArgument("transition modulation needs region prior statistics".into())
        })?;
        if prior.len() != n {
            return Err(Error::InvalidArgument(format!(
                "prior statistics cover {} regions but the tree has {n} nodes",
                prior.len()
            )));
        }
        for (s, m) in stats.iter_mut().zip(prior.iter()) {
            s.prior = *m;
        }
    }
    Ok(stats)
}

fn chi_of(e: &TreeEdge, s: &RegionStats, t: &RegionStats, params: ChiParams) -> f64 {
    match params.mode {
        ChiMode::None => 1.0,
        ChiMode::Volume => e.weight,
        ChiMode::Transition => transition_chi(
            s.prior.mean(),
            t.prior.mean(),
            s.prior.std_dev(),
            t.prior.std_dev(),
            params.epsilon,
        ),
    }
}

/// The `chi` factor of every tree edge, evaluated on the same two components
/// the valuation uses.
pub fn edge_chi(
    tree: &Tree,
    prior: Option<&RegionPriorMeans>,
    params: ChiParams,
) -> Result<Vec<f64>> {
    let stats = chi_stats(tree, None, prior, params)?;
    Ok(sweep(tree, stats, |e, s, t| chi_of(e, s, t, params)))
}

/// Valuation with marker rates scaled per edge by `chi`:
/// `P = (1 - exp(-chi L(C_s))) (1 - exp(-chi L(C_t)))`.
pub fn chi_valuation(
    tree: &Tree,
    density: &DensityField,
    prior: Option<&RegionPriorMeans>,
    params: ChiParams,
) -> Result<HierarchyValuation> {
    let stats = chi_stats(tree, Some(density), prior, params)?;
    let p = sweep(tree, stats, |e, s, t| {
        let chi = chi_of(e, s, t, params);
        cut_probability(chi * s.measure, chi * t.measure)
    });
    Ok(HierarchyValuation::from_probabilities(tree, p))
}

/// Re-weights the tree with the valuation's probabilities so another valuation
/// can be stacked on top of it.
pub fn chain(tree: &Tree, valuation: &HierarchyValuation) -> Result<Tree> {
    valuation.check_covers(tree)?;
    Ok(tree.with_weights(&valuation.probabilities()))
}
