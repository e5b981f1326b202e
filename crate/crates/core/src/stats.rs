//! Mergeable per-component statistics.

use crate::union_find::Additive;

/// Count, mean and sum of squared deviations of a set of samples.
///
/// Samples are added with Welford's update and sets are merged with the
/// pairwise formula of Chan et al., so a set of identical samples keeps that
/// exact value as its mean and a zero spread.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0.0 {
            return;
        }
        if self.count == 0.0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * (other.count / n);
        self.m2 += other.m2 + delta * delta * (self.count * other.count / n);
        self.count = n;
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn sum(&self) -> f64 {
        self.mean * self.count
    }

    /// Population variance.
    pub fn variance(&self) -> f64 {
        if self.count == 0.0 {
            0.0
        } else {
            (self.m2 / self.count).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

impl Additive for Moments {
    fn absorb(&mut self, other: &Self) {
        self.merge(other);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_samples_are_exact() {
        let m: Moments = std::iter::repeat_n(0.1, 37).collect();
        assert_eq!(m.mean(), 0.1);
        assert_eq!(m.variance(), 0.0);
        let mut a: Moments = std::iter::repeat_n(0.1, 5).collect();
        a.merge(&m);
        assert_eq!(a.mean(), 0.1);
        assert_eq!(a.count(), 42.0);
    }

    proptest! {
        #[test]
        fn merge_matches_direct(xs in prop::collection::vec(0.0f64..1.0, 1..40), split in 0usize..40) {
            let split = split.min(xs.len());
            let mut left: Moments = xs[..split].iter().copied().collect();
            let right: Moments = xs[split..].iter().copied().collect();
            left.merge(&right);
            let n = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            prop_assert!((left.mean() - mean).abs() < 1e-12);
            prop_assert!((left.variance() - var).abs() < 1e-12);
            prop_assert_eq!(left.count(), n);
        }
    }
}
