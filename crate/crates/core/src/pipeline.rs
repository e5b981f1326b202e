//! File-to-file orchestration used by the `hrfseg` binary.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use crate::error::Error;
use crate::graph::{build_rag, minimum_spanning_tree, Rag, Tree};
use crate::hierarchy::{cut_k, cut_threshold, rag_ultrametric, render_ucm};
use crate::io::{
    load_label_map, load_raster, rag_csv, save_label_map, save_ucm, write_file, RasterKind,
};
use crate::oracle::{
    estimate_cut_frequencies, estimate_modulated_cut_frequencies, TOLERANCE_SIGMAS,
};
use crate::partition::{morphological_gradient, region_prior_means, watershed, RegionPriorMeans};
use crate::raster::{LabelMap, Raster};
use crate::sws::{
    chain, chi_valuation, combine_priors, edge_chi, prior_density, sws_valuation, uniform_density,
    ChiMode, ChiParams, DensityField, HierarchyValuation,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// Homogeneous marker density.
    Uniform,
    /// Marker rate scaled by each edge's dissimilarity; uses the prior density
    /// when priors are given.
    #[default]
    Volume,
    /// Marker density proportional to the prior.
    Hrf,
    /// Prior density with foreground/background transition modulation.
    HrfTransition,
}

impl Mode {
    fn chi_mode(self) -> ChiMode {
        match self {
            Mode::Uniform | Mode::Hrf => ChiMode::None,
            Mode::Volume => ChiMode::Volume,
            Mode::HrfTransition => ChiMode::Transition,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Granularity {
    Regions(usize),
    Threshold(f64),
}

#[derive(Clone, Debug, Default)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub priors: Vec<PathBuf>,
    pub labels_in: Option<PathBuf>,
    pub mode: Mode,
    /// Expected marker count; defaults to the number of fine regions.
    pub markers: Option<f64>,
    pub chain: usize,
    pub out_ucm: Option<PathBuf>,
    pub out_labels: Option<PathBuf>,
    pub granularity: Option<Granularity>,
    pub seed: u64,
    pub trials: u64,
    pub dump_edges: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let config = |m: &str| Err(PipelineError::Config(m.to_string()));
        if self.priors.len() > 2 {
            return config("at most two priors can be combined");
        }
        match self.mode {
            Mode::Hrf | Mode::HrfTransition if self.priors.is_empty() => {
                return config("modes hrf and hrf-transition need --prior");
            }
            Mode::Uniform if !self.priors.is_empty() => {
                return config("mode uniform does not use priors; use hrf instead");
            }
            _ => {}
        }
        if self.out_labels.is_some() && self.granularity.is_none() {
            return config("--out-labels needs one of --k or --threshold");
        }
        if let Some(m) = self.markers {
            if !(m.is_finite() && m > 0.0) {
                return config("--markers must be positive");
            }
        }
        if let Some(Granularity::Threshold(t)) = self.granularity {
            if !(0.0..=1.0).contains(&t) {
                return config("--threshold must lie in [0, 1]");
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Error,
    },
}

trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError>;
}

impl<T> StageExt<T> for crate::Result<T> {
    fn stage(self, stage: &'static str) -> Result<T, PipelineError> {
        self.map_err(|source| PipelineError::Stage { stage, source })
    }
}

/// Wall-clock time per pipeline stage.
#[derive(Clone, Debug, Default)]
pub struct Timings {
    pub stages: Vec<(&'static str, Duration)>,
    pub wall: Duration,
}

#[derive(Clone, Debug)]
pub struct SegmentSummary {
    pub fine_regions: usize,
    pub output_regions: Option<usize>,
    pub timings: Timings,
}

struct Clock {
    start: Instant,
    last: Instant,
    timings: Timings,
}

impl Clock {
    fn new() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            last: now,
            timings: Timings::default(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.stages.push((stage, now - self.last));
        self.last = now;
    }

    fn finish(mut self) -> Timings {
        self.timings.wall = self.start.elapsed();
        self.timings
    }
}

/// Everything up to and including the (possibly chained) valuation.
struct Valued {
    fine: LabelMap,
    rag: Rag,
    tree: Tree,
    density: DensityField,
    prior: Option<RegionPriorMeans>,
    valuation: HierarchyValuation,
}

fn load_prior(
    config: &PipelineConfig,
    dims: (usize, usize),
) -> Result<Option<Raster>, PipelineError> {
    let mut priors = Vec::new();
    for path in &config.priors {
        let p = load_raster(path, RasterKind::Prior).stage("load")?;
        if p.dims() != dims {
            return Err(PipelineError::Stage {
                stage: "load",
                source: Error::DimensionMismatch {
                    expected: dims,
                    found: p.dims(),
                },
            });
        }
        priors.push(p);
    }
    Ok(match priors.as_slice() {
        [] => None,
        [a] => Some(a.clone()),
        [a, b] => Some(combine_priors(a, b).stage("density")?),
        _ => unreachable!("validated"),
    })
}

fn value(config: &PipelineConfig, clock: &mut Clock) -> Result<Valued, PipelineError> {
    config.validate()?;
    let image = load_raster(&config.input, RasterKind::Image).stage("load")?;
    let prior = load_prior(config, image.dims())?;
    clock.lap("load");

    let fine = match &config.labels_in {
        Some(path) => {
            let fine = load_label_map(path).stage("fine-partition")?;
            if fine.dims() != image.dims() {
                return Err(PipelineError::Stage {
                    stage: "fine-partition",
                    source: Error::DimensionMismatch {
                        expected: image.dims(),
                        found: fine.dims(),
                    },
                });
            }
            fine
        }
        None => watershed(&morphological_gradient(&image)),
    };
    clock.lap("fine-partition");

    let rag = build_rag(&fine, &image).stage("rag")?;
    if let Some(path) = &config.dump_edges {
        write_file(path, rag_csv(&rag).as_bytes()).stage("rag")?;
    }
    clock.lap("rag");

    let mut tree = minimum_spanning_tree(&rag).stage("mst")?;
    clock.lap("mst");

    let markers = config.markers.unwrap_or(fine.region_count() as f64);
    let prior = match &prior {
        Some(p) => Some(region_prior_means(&fine, p).stage("density")?),
        None => None,
    };
    let density = match &prior {
        Some(means) => prior_density(means, markers),
        None => uniform_density(&fine, markers),
    }
    .stage("density")?;
    clock.lap("density");

    let params = ChiParams::new(config.mode.chi_mode());
    let evaluate = |tree: &Tree| match params.mode {
        ChiMode::None => sws_valuation(tree, &density),
        _ => chi_valuation(tree, &density, prior.as_ref(), params),
    };
    let mut valuation = evaluate(&tree).stage("valuation")?;
    clock.lap("valuation");
    for _ in 0..config.chain {
        tree = chain(&tree, &valuation).stage("chain")?;
        valuation = evaluate(&tree).stage("chain")?;
    }
    if config.chain > 0 {
        clock.lap("chain");
    }
    Ok(Valued {
        fine,
        rag,
        tree,
        density,
        prior,
        valuation,
    })
}

/// Image to UCM and/or partition.
pub fn run_segment(config: &PipelineConfig) -> Result<SegmentSummary, PipelineError> {
    let mut clock = Clock::new();
    let v = value(config, &mut clock)?;

    if let Some(path) = &config.out_ucm {
        let saliency = rag_ultrametric(&v.tree, &v.valuation, &v.rag).stage("ultrametric")?;
        clock.lap("ultrametric");
        let ucm = render_ucm(&v.fine, &saliency).stage("ucm")?;
        save_ucm(&ucm, path).stage("save")?;
        clock.lap("ucm");
    }

    let mut output_regions = None;
    if let Some(path) = &config.out_labels {
        let partition = match config.granularity.expect("validated") {
            Granularity::Regions(k) => cut_k(&v.tree, &v.valuation, k),
            Granularity::Threshold(t) => cut_threshold(&v.tree, &v.valuation, t),
        }
        .and_then(|p| p.to_label_map(&v.fine))
        .stage("partition")?;
        output_regions = Some(partition.region_count());
        save_label_map(&partition, path).stage("save")?;
        clock.lap("partition");
    }

    Ok(SegmentSummary {
        fine_regions: v.fine.region_count(),
        output_regions,
        timings: clock.finish(),
    })
}

#[derive(Clone, Debug)]
pub struct OracleOutcome {
    /// Report CSV followed by a `#` result line.
    pub report: String,
    pub edges: usize,
    pub failures: usize,
}

impl OracleOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Compares the closed-form valuation against Monte-Carlo cut frequencies.
pub fn run_oracle(config: &PipelineConfig) -> Result<OracleOutcome, PipelineError> {
    if config.trials == 0 {
        return Err(PipelineError::Config("--trials must be at least 1".into()));
    }
    let mut clock = Clock::new();
    let v = value(config, &mut clock)?;
    let params = ChiParams::new(config.mode.chi_mode());
    let report = match params.mode {
        ChiMode::None => estimate_cut_frequencies(&v.tree, &v.density, config.trials, config.seed),
        _ => edge_chi(&v.tree, v.prior.as_ref(), params).and_then(|chi| {
            estimate_modulated_cut_frequencies(
                &v.tree,
                &v.density,
                &chi,
                config.trials,
                config.seed,
            )
        }),
    }
    .stage("oracle")?;
    let failures = report.disagreements(&v.valuation).len();
    let edges = report.edges().len();
    let mut text = report.to_csv(&v.valuation);
    text.push_str(&format!(
        "# {} {}/{} edges within {} standard errors ({} trials)\n",
        if failures == 0 { "PASS" } else { "FAIL" },
        edges - failures,
        edges,
        TOLERANCE_SIGMAS,
        config.trials
    ));
    Ok(OracleOutcome {
        report: text,
        edges,
        failures,
    })
}
