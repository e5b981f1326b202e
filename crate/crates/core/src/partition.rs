//! Fine partition of an image: morphological gradient, flooding watershed and
//! per-region prior statistics.
//!
//! Connectivity is 4 everywhere. The watershed is boundaryless: every pixel is
//! assigned to a basin, so the output is a true partition of the pixel domain.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::raster::{LabelMap, Raster};
use crate::stats::Moments;

/// `max - min` over the clamped 3x3 neighbourhood of every pixel.
pub fn morphological_gradient(image: &Raster) -> Raster {
    let (w, h) = image.dims();
    Raster::from_fn(w, h, |x, y| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
            for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                let v = image.get(nx, ny);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        hi - lo
    })
    .expect("same dimensions as input")
}

/// 4-neighbours of pixel `i` in the fixed order up, left, right, down.
pub(crate) fn neighbors4(i: usize, w: usize, h: usize) -> impl Iterator<Item = usize> {
    let (x, y) = (i % w, i / w);
    [
        (y > 0).then(|| i - w),
        (x > 0).then(|| i - 1),
        (x + 1 < w).then(|| i + 1),
        (y + 1 < h).then(|| i + w),
    ]
    .into_iter()
    .flatten()
}

/// Labels every regional minimum plateau of `relief`.
///
/// Returns per-pixel `Some(label)` for pixels on a minimum plateau, labels
/// assigned in raster order of each plateau's first pixel, and the minimum count.
pub fn regional_minima(relief: &Raster) -> (Vec<Option<u32>>, usize) {
    let (w, h) = relief.dims();
    let v = relief.values();
    let mut plateau = vec![usize::MAX; v.len()];
    let mut marks = vec![None; v.len()];
    let mut count = 0u32;
    let mut members = Vec::new();
    for start in 0..v.len() {
        if plateau[start] != usize::MAX {
            continue;
        }
        plateau[start] = start;
        members.clear();
        members.push(start);
        let mut is_minimum = true;
        let mut head = 0;
        while head < members.len() {
            let p = members[head];
            head += 1;
            for q in neighbors4(p, w, h) {
                match v[q].total_cmp(&v[p]) {
                    Ordering::Less => is_minimum = false,
                    Ordering::Equal if plateau[q] == usize::MAX => {
                        plateau[q] = start;
                        members.push(q);
                    }
                    _ => {}
                }
            }
        }
        if is_minimum {
            for &p in &members {
                marks[p] = Some(count);
            }
            count += 1;
        }
    }
    (marks, count as usize)
}

/// Flooding watershed seeded by the regional minima of `gradient`.
///
/// Pixels are processed from a priority queue ordered by altitude and then by
/// insertion order. When a pixel leaves the queue, each unlabelled 4-neighbour
/// (visited up, left, right, down) takes its label and is queued.
pub fn watershed(gradient: &Raster) -> LabelMap {
    let (w, h) = gradient.dims();
    let alt = gradient.values();
    let (marks, count) = regional_minima(gradient);

    let mut labels = vec![u32::MAX; alt.len()];
    let mut queue = BinaryHeap::new();
    let mut seq = 0u64;
    for (i, m) in marks.iter().enumerate() {
        if let Some(l) = m {
            labels[i] = *l;
            queue.push(Reverse(QueueItem {
                altitude: alt[i],
                seq,
                pixel: i,
            }));
            seq += 1;
        }
    }
    while let Some(Reverse(item)) = queue.pop() {
        let p = item.pixel;
        for q in neighbors4(p, w, h) {
            if labels[q] == u32::MAX {
                labels[q] = labels[p];
                let altitude = if alt[q] < item.altitude {
                    item.altitude
                } else {
                    alt[q]
                };
                queue.push(Reverse(QueueItem {
                    altitude,
                    seq,
                    pixel: q,
                }));
                seq += 1;
            }
        }
    }
    LabelMap::from_dense(w, h, labels, count)
}

#[derive(Debug)]
struct QueueItem {
    altitude: f64,
    seq: u64,
    pixel: usize,
}

impl PartialEq for QueueItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueItem {}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        self.altitude
            .total_cmp(&other.altitude)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Per-region statistics of a prior map over a fine partition.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPriorMeans {
    regions: Vec<Moments>,
}

impl RegionPriorMeans {
    pub fn len(&self) -> usize {
        self.regions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn mean_prior(&self, region: usize) -> f64 {
        self.regions[region].mean()
    }

    pub fn pixel_count(&self, region: usize) -> usize {
        self.regions[region].count() as usize
    }

    /// Full moments (count, mean, spread) of region `region`.
    pub fn moments(&self, region: usize) -> &Moments {
        &self.regions[region]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Moments> {
        self.regions.iter()
    }
}

/// Mean (and spread) of the prior over each region of `labels`.
pub fn region_prior_means(labels: &LabelMap, prior: &Raster) -> Result<RegionPriorMeans> {
    if labels.dims() != prior.dims() {
        return Err(Error::DimensionMismatch {
            expected: labels.dims(),
            found: prior.dims(),
        });
    }
    let mut regions = vec![Moments::default(); labels.region_count()];
    for (&l, &v) in labels.labels().iter().zip(prior.values()) {
        regions[l as usize].push(v);
    }
    Ok(RegionPriorMeans { regions })
}
