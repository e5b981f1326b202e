//! In-memory grids: scalar rasters, label maps and inter-pixel saliency grids.
//!
//! All grids are row-major with `index = y * width + x`.

use std::collections::HashMap;

use crate::error::{Error, Result};

/// A 2D grid of scalar values.
///
/// Images keep their raw intensities; prior maps hold probabilities in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds a raster by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Checks that every value lies in `[0, 1]`, as required of prior maps.
    pub fn validate_probability(&self) -> Result<()> {
        match self.values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            Some(i) => Err(Error::Validation(format!(
                "prior value {} at pixel ({}, {}) is outside [0, 1]",
                self.values[i],
                i % self.width,
                i / self.width
            ))),
            None => Ok(()),
        }
    }
}

/// A partition of the pixel domain into 4-connected regions labelled `0..region_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    region_count: usize,
}

impl LabelMap {
    /// Accepts arbitrary label values, remaps them densely in order of first
    /// raster occurrence and checks that each label forms one 4-connected region.
    pub fn from_labels(width: usize, height: usize, raw: Vec<u32>) -> Result<Self> {
        check_dims(width, height, raw.len())?;
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut original = Vec::new();
        let labels: Vec<u32> = raw
            .iter()
            .map(|&l| {
                let next = remap.len() as u32;
                *remap.entry(l).or_insert_with(|| {
                    original.push(l);
                    next
                })
            })
            .collect();
        let map = Self {
            width,
            height,
            region_count: remap.len(),
            labels,
        };
        if let Some(bad) = map.first_disconnected_label() {
            return Err(Error::Validation(format!(
                "label {} is not 4-connected",
                original[bad as usize]
            )));
        }
        Ok(map)
    }

    /// Wraps labels that are already dense and 4-connected.
    pub(crate) fn from_dense(
        width: usize,
        height: usize,
        labels: Vec<u32>,
        region_count: usize,
    ) -> Self {
        debug_assert_eq!(labels.len(), width * height);
        Self {
            width,
            height,
            labels,
            region_count,
        }
    }

    /// Relabels an arbitrary per-pixel component id map so ids follow first raster occurrence.
    pub(crate) fn from_components(width: usize, height: usize, ids: &[u32]) -> Self {
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let labels = ids
            .iter()
            .map(|&c| {
                let next = remap.len() as u32;
                *remap.entry(c).or_insert(next)
            })
            .collect();
        Self::from_dense(width, height, labels, remap.len())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn region_count(&self) -> usize {
        self.region_count
    }

    /// Pixel count per region.
    pub fn region_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.region_count];
        for &l in &self.labels {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Returns the first dense label whose pixels split into more than one 4-connected part.
    fn first_disconnected_label(&self) -> Option<u32> {
        let (w, h) = (self.width, self.height);
        let mut seen = vec![false; self.labels.len()];
        let mut visited_label = vec![false; self.region_count];
        let mut stack = Vec::new();
        for start in 0..self.labels.len() {
            if seen[start] {
                continue;
            }
            let label = self.labels[start];
            if visited_label[label as usize] {
                return Some(label);
            }
            visited_label[label as usize] = true;
            seen[start] = true;
            stack.push(start);
            while let Some(i) = stack.pop() {
                let (x, y) = (i % w, i / w);
                let mut visit = |j: usize| {
                    if !seen[j] && self.labels[j] == label {
                        seen[j] = true;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(i - 1);
                }
                if x + 1 < w {
                    visit(i + 1);
                }
                if y > 0 {
                    visit(i - w);
                }
                if y + 1 < h {
                    visit(i + w);
                }
            }
        }
        None
    }
}

/// Saliency values on the `(2W+1) x (2H+1)` inter-pixel (Khalimsky) grid of a `W x H` image.
///
/// Pixel `(x, y)` sits at cell `(2x+1, 2y+1)`. Cells with one even and one odd
/// coordinate separate two pixels (or a pixel and the outside); cells with two
/// even coordinates are corners.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl SaliencyGrid {
    pub fn zeros(image_width: usize, image_height: usize) -> Self {
        let (width, height) = (2 * image_width + 1, 2 * image_height + 1);
        Self {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if width.is_multiple_of(2) || height.is_multiple_of(2) || width < 3 || height < 3 {
            return Err(Error::Validation(format!(
                "saliency grid must have odd dimensions >= 3, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Dimensions of the underlying pixel image.
    pub fn image_dims(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, cx: usize, cy: usize) -> f64 {
        self.values[cy * self.width + cx]
    }

    pub(crate) fn set(&mut self, cx: usize, cy: usize, v: f64) {
        self.values[cy * self.width + cx] = v;
    }

    /// Partition obtained by thresholding: 4-adjacent pixels are joined when the
    /// cell between them holds a saliency `<= lambda`.
    pub fn threshold_partition(&self, lambda: f64) -> LabelMap {
        let (w, h) = self.image_dims();
        let mut uf = crate::union_find::UnionFind::new(w * h);
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if x + 1 < w && self.get(2 * x + 2, 2 * y + 1) <= lambda {
                    uf.union(i, i + 1);
                }
                if y + 1 < h && self.get(2 * x + 1, 2 * y + 2) <= lambda {
                    uf.union(i, i + w);
                }
            }
        }
        let ids: Vec<u32> = (0..w * h).map(|i| uf.find(i) as u32).collect();
        LabelMap::from_components(w, h, &ids)
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Validation(format!(
            "raster dimensions must be positive, got {width}x{height}"
        )));
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Validation(format!(
            "expected {width}x{height} values, got {len}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_remap_follows_first_occurrence() {
        let map = LabelMap::from_labels(2, 2, vec![5, 5, 9, 9]).unwrap();
        assert_eq!(map.labels(), &[0, 0, 1, 1]);
        assert_eq!(map.region_count(), 2);
    }

    #[test]
    fn diagonal_labels_are_rejected() {
        let err = LabelMap::from_labels(2, 2, vec![0, 1, 1, 0]).unwrap_err();
        match err {
            Error::Validation(msg) => {
                assert!(msg.contains("label 0") || msg.contains("label 1"), "{msg}")
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn constant_labels_give_one_region() {
        let map = LabelMap::from_labels(3, 2, vec![7; 6]).unwrap();
        assert_eq!(map.region_count(), 1);
        assert_eq!(map.region_sizes(), vec![6]);
    }

    #[test]
    fn disconnected_label_names_original_value() {
        // 42 appears on both sides of a column of 3s.
        let err = LabelMap::from_labels(3, 1, vec![42, 3, 42]).unwrap_err();
        assert!(err.to_string().contains("label 42"), "{err}");
    }

    #[test]
    fn raster_rejects_bad_dimensions() {
        assert!(Raster::new(0, 1, vec![]).is_err());
        assert!(Raster::new(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn probability_check() {
        assert!(Raster::new(2, 1, vec![0.0, 1.0])
            .unwrap()
            .validate_probability()
            .is_ok());
        assert!(Raster::new(2, 1, vec![0.0, 1.5])
            .unwrap()
            .validate_probability()
            .is_err());
    }
}
