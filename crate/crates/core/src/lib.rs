//! Hierarchical image segmentation with regionalized fineness.
//!
//! The pipeline over-segments an image with a watershed, builds the region
//! adjacency graph and its minimum spanning tree, then re-values every tree
//! edge with the probability that randomly placed markers separate its two
//! sides. Markers follow a Poisson process whose density can be modulated by a
//! prior map, which concentrates contour strength (and therefore detail at any
//! level of the hierarchy) inside regions of interest.
//!
//! ```no_run
//! use hrfseg::prelude::*;
//!
//! # fn main() -> hrfseg::Result<()> {
//! let image = load_raster("scene.pgm", RasterKind::Image)?;
//! let prior = load_raster("face.pgm", RasterKind::Prior)?;
//! let fine = watershed(&morphological_gradient(&image));
//! let rag = build_rag(&fine, &image)?;
//! let tree = minimum_spanning_tree(&rag)?;
//! let means = region_prior_means(&fine, &prior)?;
//! let density = prior_density(&means, fine.region_count() as f64)?;
//! let valuation = sws_valuation(&tree, &density)?;
//! let coarse = cut_k(&tree, &valuation, 100)?.to_label_map(&fine)?;
//! let ucm = render_ucm(&fine, &rag_ultrametric(&tree, &valuation, &rag)?)?;
//! save_label_map(&coarse, "coarse.lbl")?;
//! save_ucm(&ucm, "ucm.pgm")?;
//! # Ok(())
//! # }
//! ```

pub mod error;
pub mod graph;
pub mod hierarchy;
pub mod io;
pub mod oracle;
pub mod partition;
pub mod pipeline;
pub mod raster;
pub mod stats;
pub mod sws;
pub mod synthetic;
pub mod union_find;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::error::{Error, Result};
    pub use crate::graph::{build_rag, minimum_spanning_tree, Rag, Tree, TreeEdge};
    pub use crate::hierarchy::{
        cut_k, cut_threshold, marker_cut, rag_ultrametric, render_ucm, ultrametric, NodePartition,
        Ultrametric,
    };
    pub use crate::io::{load_label_map, load_raster, save_label_map, save_ucm, RasterKind};
    pub use crate::partition::{
        morphological_gradient, region_prior_means, watershed, RegionPriorMeans,
    };
    pub use crate::raster::{LabelMap, Raster, SaliencyGrid};
    pub use crate::sws::{
        chain, chi_valuation, combine_priors, prior_density, sws_valuation, uniform_density,
        ChiMode, ChiParams, DensityField, HierarchyValuation,
    };
}
