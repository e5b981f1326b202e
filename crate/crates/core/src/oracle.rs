//! Monte-Carlo stochastic watershed.
//!
//! Markers are drawn per fine region as independent Poisson counts (exactly the
//! law of a Poisson point process restricted to a partition), then every tree
//! edge is checked for markers on both of its sides. Cut frequencies estimate
//! the closed-form probabilities of [`crate::sws`] without evaluating them.
//!
//! Randomness: each trial `i` gets its own ChaCha8 stream seeded with
//! [`trial_seed`]`(seed, i)`. ChaCha8 output is specified bit-for-bit, so
//! reports are reproducible across platforms and thread counts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Tree;
use crate::sws::{DensityField, HierarchyValuation};
use crate::union_find::{Additive, UnionFind};

/// Agreement tolerance in standard errors.
pub const TOLERANCE_SIGMAS: f64 = 4.0;

/// Poisson means above this are drawn as sums of smaller independent draws so
/// the sequential search never starts from an underflowed `exp(-lambda)`.
const POISSON_CHUNK: f64 = 64.0;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` derived from the run seed.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ splitmix64(trial))
}

/// Poisson draw by inversion with sequential search.
pub fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> u64 {
    let mut remaining = lambda;
    let mut total = 0;
    while remaining > 0.0 {
        let l = remaining.min(POISSON_CHUNK);
        remaining -= l;
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut p = (-l).exp();
        let mut cdf = p;
        while u > cdf {
            k += 1;
            p *= l / k as f64;
            cdf += p;
            // rounding can leave the cdf a hair below 1
            if p < f64::EPSILON * cdf && k as f64 > l {
                break;
            }
        }
        total += k;
    }
    total
}

/// Marker count of every region for one configuration.
pub fn sample_markers(density: &DensityField, seed: u64) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    density
        .measures()
        .iter()
        .map(|&m| sample_poisson(&mut rng, m))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeTally {
    pub edge_id: usize,
    pub u: u32,
    pub v: u32,
    pub cut_count: u64,
}

/// Per-edge cut counts over a number of trials, in the tree's edge order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrialReport {
    trials: u64,
    edges: Vec<EdgeTally>,
}

impl TrialReport {
    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn edges(&self) -> &[EdgeTally] {
        &self.edges
    }

    pub fn frequency(&self, index: usize) -> f64 {
        self.edges[index].cut_count as f64 / self.trials as f64
    }

    /// `sqrt(f (1 - f) / trials)` for the observed frequency `f`.
    pub fn standard_error(&self, index: usize) -> f64 {
        let f = self.frequency(index);
        (f * (1.0 - f) / self.trials as f64).sqrt()
    }

    /// CSV `edge_id,u,v,p_closed_form,frequency,std_err`.
    pub fn to_csv(&self, closed_form: &HierarchyValuation) -> String {
        let mut out = String::from("edge_id,u,v,p_closed_form,frequency,std_err\n");
        for (i, e) in self.edges.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.edge_id,
                e.u,
                e.v,
                closed_form.probability(i),
                self.frequency(i),
                self.standard_error(i)
            ));
        }
        out
    }

    /// Indices of edges whose frequency is further than [`TOLERANCE_SIGMAS`]
    /// standard errors (computed from the closed-form `p`) from `p`.
    pub fn disagreements(&self, closed_form: &HierarchyValuation) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&i| !agrees(closed_form.probability(i), self.frequency(i), self.trials))
            .collect()
    }
}

/// `|f - p| <= 4 sqrt(p (1 - p) / trials)`.
pub fn agrees(p: f64, frequency: f64, trials: u64) -> bool {
    (frequency - p).abs() <= TOLERANCE_SIGMAS * (p * (1.0 - p) / trials as f64).sqrt()
}

#[derive(Clone, Copy, Default)]
struct SideStats {
    markers: u64,
    measure: f64,
}

impl Additive for SideStats {
    fn absorb(&mut self, other: &Self) {
        self.markers += other.markers;
        self.measure += other.measure;
    }
}

/// Edge indices grouped into batches of equal weight, batches in increasing weight.
fn batches(tree: &Tree) -> Vec<Vec<usize>> {
    let edges = tree.edges();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    order.sort_by(|&a, &b| {
        edges[a]
            .weight
            .total_cmp(&edges[b].weight)
            .then(edges[a].edge_id.cmp(&edges[b].edge_id))
    });
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match out.last_mut() {
            Some(batch) if edges[batch[0]].weight.total_cmp(&edges[i].weight).is_eq() => {
                batch.push(i)
            }
            _ => out.push(vec![i]),
        }
    }
    out
}

/// How the marker rate seen by each edge is modulated.
enum Modulation<'a> {
    None,
    /// Rate `chi[e] * L` for edge `e`: thinning of the sampled markers when
    /// `chi <= 1`, superposition of extra Poisson markers when `chi > 1`.
    PerEdge(&'a [f64]),
}

fn check_inputs(tree: &Tree, density: &DensityField, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument(
            "at least one trial is required".into(),
        ));
    }
    if density.len() != tree.node_count() {
        return Err(Error::InvalidArgument(format!(
            "density covers {} regions but the tree has {} nodes",
            density.len(),
            tree.node_count()
        )));
    }
    Ok(())
}

/// Cut frequencies of the plain stochastic watershed.
pub fn estimate_cut_frequencies(
    tree: &Tree,
    density: &DensityField,
    trials: u64,
    seed: u64,
) -> Result<TrialReport> {
    check_inputs(tree, density, trials)?;
    Ok(run(tree, density, Modulation::None, trials, seed))
}

/// Cut frequencies when edge `e` sees markers at rate `chi[e]` times the density.
pub fn estimate_modulated_cut_frequencies(
    tree: &Tree,
    density: &DensityField,
    chi: &[f64],
    trials: u64,
    seed: u64,
) -> Result<TrialReport> {
    check_inputs(tree, density, trials)?;
    if chi.len() != tree.edges().len() {
        return Err(Error::InvalidArgument(format!(
            "{} chi values for {} tree edges",
            chi.len(),
            tree.edges().len()
        )));
    }
    if let Some(c) = chi.iter().find(|c| !(c.is_finite() && **c >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "chi {c} must be finite and >= 0"
        )));
    }
    Ok(run(tree, density, Modulation::PerEdge(chi), trials, seed))
}

fn run(
    tree: &Tree,
    density: &DensityField,
    modulation: Modulation<'_>,
    trials: u64,
    seed: u64,
) -> TrialReport {
    let batches = batches(tree);
    let m = tree.edges().len();
    let counts = (0..trials)
        .into_par_iter()
        .fold(
            || vec![0u64; m],
            |mut acc, i| {
                one_trial(
                    tree,
                    density,
                    &batches,
                    &modulation,
                    trial_seed(seed, i),
                    &mut acc,
                );
                acc
            },
        )
        .reduce(
            || vec![0u64; m],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    let edges = tree
        .edges()
        .iter()
        .zip(counts)
        .map(|(e, cut_count)| EdgeTally {
            edge_id: e.edge_id,
            u: e.u,
            v: e.v,
            cut_count,
        })
        .collect();
    TrialReport { trials, edges }
}

fn one_trial(
    tree: &Tree,
    density: &DensityField,
    batches: &[Vec<usize>],
    modulation: &Modulation<'_>,
    seed: u64,
    counts: &mut [u64],
) {
    let markers = sample_markers(density, seed);
    let stats = markers
        .iter()
        .zip(density.measures())
        .map(|(&markers, &measure)| SideStats { markers, measure })
        .collect();
    let mut uf = UnionFind::with_stats(stats);
    let mut extra = match modulation {
        Modulation::None => None,
        Modulation::PerEdge(_) => Some(ChaCha8Rng::seed_from_u64(splitmix64(
            seed ^ 0xC2B2_AE3D_27D4_EB4F,
        ))),
    };
    let edges = tree.edges();
    for batch in batches {
        for &i in batch {
            let s = *uf.stats(edges[i].u as usize);
            let t = *uf.stats(edges[i].v as usize);
            let cut = match (modulation, extra.as_mut()) {
                (Modulation::PerEdge(chi), Some(rng)) => {
                    let a = modulated_count(rng, s, chi[i]);
                    let b = modulated_count(rng, t, chi[i]);
                    a > 0 && b > 0
                }
                _ => s.markers > 0 && t.markers > 0,
            };
            if cut {
                counts[i] += 1;
            }
        }
        for &i in batch {
            uf.union(edges[i].u as usize, edges[i].v as usize);
        }
    }
}

/// Markers of one side at rate `chi` times its measure, derived from the
/// markers actually sampled there.
fn modulated_count(rng: &mut ChaCha8Rng, side: SideStats, chi: f64) -> u64 {
    if chi <= 1.0 {
        (0..side.markers)
            .filter(|_| rng.random::<f64>() < chi)
            .count() as u64
    } else {
        side.markers + sample_poisson(rng, (chi - 1.0) * side.measure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::TreeEdge;
    use std::f64::consts::LN_2;

    fn pair_tree() -> Tree {
        Tree::new(
            2,
            vec![TreeEdge {
                u: 0,
                v: 1,
                weight: 1.0,
                edge_id: 0,
            }],
        )
        .unwrap()
    }

    #[test]
    fn zero_measure_never_gets_markers() {
        let d = DensityField::new(vec![0.0, 0.0, 3.0]).unwrap();
        for s in 0..100 {
            let m = sample_markers(&d, s);
            assert_eq!(&m[..2], &[0, 0]);
        }
    }

    #[test]
    fn same_seed_same_markers() {
        let d = DensityField::new(vec![0.5, 2.0, 7.5, 300.0]).unwrap();
        assert_eq!(sample_markers(&d, 99), sample_markers(&d, 99));
        assert_ne!(sample_markers(&d, 99), sample_markers(&d, 100));
    }

    #[test]
    fn poisson_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| sample_poisson(&mut rng, 4.0) as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 4.0).abs() < 4.0 * 2.0 / 1000.0, "mean {mean}");
        assert!((var - 4.0).abs() < 0.02 * 4.0, "variance {var}");
    }

    #[test]
    fn large_means_are_sampled_in_chunks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 20_000;
        let mean = (0..n)
            .map(|_| sample_poisson(&mut rng, 1000.0) as f64)
            .sum::<f64>()
            / n as f64;
        // standard error sqrt(1000 / 20000) ~ 0.22
        assert!((mean - 1000.0).abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn zero_density_is_never_cut() {
        let d = DensityField::new(vec![0.0, 0.0]).unwrap();
        let r = estimate_cut_frequencies(&pair_tree(), &d, 1000, 1).unwrap();
        assert_eq!(r.frequency(0), 0.0);
    }

    #[test]
    fn two_regions_quarter_probability() {
        let d = DensityField::new(vec![LN_2, LN_2]).unwrap();
        let trials = 1_000_000;
        let r = estimate_cut_frequencies(&pair_tree(), &d, trials, 11).unwrap();
        let f = r.frequency(0);
        assert!(
            (f - 0.25).abs() <= 4.0 * r.standard_error(0),
            "frequency {f}"
        );
    }

    #[test]
    fn report_is_deterministic() {
        let d = DensityField::new(vec![0.3, 1.2]).unwrap();
        let a = estimate_cut_frequencies(&pair_tree(), &d, 5000, 3).unwrap();
        let b = estimate_cut_frequencies(&pair_tree(), &d, 5000, 3).unwrap();
        assert_eq!(a, b);
        let r = estimate_modulated_cut_frequencies(&pair_tree(), &d, &[2.5], 5000, 3).unwrap();
        assert_eq!(
            r,
            estimate_modulated_cut_frequencies(&pair_tree(), &d, &[2.5], 5000, 3).unwrap()
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let d = DensityField::new(vec![1.0, 1.0]).unwrap();
        assert!(estimate_cut_frequencies(&pair_tree(), &d, 0, 1).is_err());
        assert!(estimate_modulated_cut_frequencies(&pair_tree(), &d, &[], 10, 1).is_err());
        assert!(estimate_modulated_cut_frequencies(&pair_tree(), &d, &[-1.0], 10, 1).is_err());
        let bad = DensityField::new(vec![1.0]).unwrap();
        assert!(estimate_cut_frequencies(&pair_tree(), &bad, 10, 1).is_err());
    }

    #[test]
    fn agreement_rule() {
        assert!(agrees(0.25, 0.25, 100));
        assert!(agrees(0.0, 0.0, 100));
        assert!(!agrees(0.0, 0.01, 100));
        assert!(!agrees(0.5, 0.75, 100));
    }
}
