//! Disjoint sets with union by rank, path compression and per-root statistics.
//!
//! Every set carries an accumulator that is combined on union, so the root of a
//! component always holds the combined statistics of all its members.

/// Statistics that can be combined when two components merge.
pub trait Additive: Clone {
    fn absorb(&mut self, other: &Self);
}

impl Additive for () {
    fn absorb(&mut self, _: &Self) {}
}

impl Additive for u64 {
    fn absorb(&mut self, other: &Self) {
        *self += *other;
    }
}

impl Additive for f64 {
    fn absorb(&mut self, other: &Self) {
        *self += *other;
    }
}

#[derive(Clone, Debug)]
pub struct UnionFind<S: Additive = ()> {
    parent: Vec<usize>,
    rank: Vec<u8>,
    stats: Vec<S>,
    sets: usize,
}

impl UnionFind<()> {
    pub fn new(n: usize) -> Self {
        Self::with_stats(vec![(); n])
    }
}

impl<S: Additive> UnionFind<S> {
    /// One singleton set per entry of `stats`.
    pub fn with_stats(stats: Vec<S>) -> Self {
        let n = stats.len();
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
            stats,
            sets: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    /// Number of disjoint sets.
    pub fn set_count(&self) -> usize {
        self.sets
    }

    pub fn find(&mut self, mut node: usize) -> usize {
        let mut root = node;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[node] != root {
            let next = self.parent[node];
            self.parent[node] = root;
            node = next;
        }
        root
    }

    /// Merges the sets containing `a` and `b` and returns the new root.
    pub fn union(&mut self, a: usize, b: usize) -> usize {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return ra;
        }
        if self.rank[ra] < self.rank[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] += 1;
        }
        let absorbed = self.stats[rb].clone();
        self.stats[ra].absorb(&absorbed);
        self.sets -= 1;
        ra
    }

    pub fn same(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }

    /// Statistics of the set containing `node`.
    pub fn stats(&mut self, node: usize) -> &S {
        let root = self.find(node);
        &self.stats[root]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn union_joins_sets() {
        let mut uf = UnionFind::new(5);
        assert!(!uf.same(0, 1));
        uf.union(0, 1);
        uf.union(3, 4);
        assert!(uf.same(0, 1));
        assert!(uf.same(4, 3));
        assert!(!uf.same(1, 3));
        assert_eq!(uf.set_count(), 3);
        // merging twice is a no-op
        uf.union(1, 0);
        assert_eq!(uf.set_count(), 3);
    }

    proptest! {
        #[test]
        fn root_stats_are_member_sums(
            weights in prop::collection::vec(0u64..1000, 1..12),
            pairs in prop::collection::vec((0usize..12, 0usize..12), 0..20),
        ) {
            let n = weights.len();
            let mut uf = UnionFind::with_stats(weights.clone());
            for (a, b) in pairs {
                uf.union(a % n, b % n);
                // find is idempotent and unions are visible from both ends
                let r = uf.find(a % n);
                prop_assert_eq!(uf.find(r), r);
                prop_assert_eq!(uf.find(b % n), r);
            }
            for i in 0..n {
                let root = uf.find(i);
                let brute: u64 = (0..n).filter(|&j| uf.find(j) == root).map(|j| weights[j]).sum();
                prop_assert_eq!(*uf.stats(i), brute);
            }
        }
    }
}
