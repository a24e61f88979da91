//! Interval partitions of the particle indices `0..m`.
//!
//! A coalescing ensemble on the line never reorders its particles, so the
//! "who is stuck to whom" relation is always a partition of the index set into
//! runs of consecutive indices. Each run is led by its smallest index (the free
//! particle); the others are attached to it.

use std::ops::Range;

use crate::error::{Error, Result};

/// Partition of `0..m` into blocks of consecutive indices.
///
/// Stored as `leader_of[i]`, the smallest index of the block containing `i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntervalPartition {
    leader_of: Vec<usize>,
}

impl IntervalPartition {
    /// Every index in its own block.
    pub fn discrete(m: usize) -> Self {
        Self {
            leader_of: (0..m).collect(),
        }
    }

    /// A single block holding all `m` indices.
    pub fn single_block(m: usize) -> Self {
        Self { leader_of: vec![0; m] }
    }

    /// Builds the partition whose consecutive blocks have the given sizes.
    pub fn from_block_sizes(sizes: &[usize]) -> Result<Self> {
        let mut leader_of = Vec::with_capacity(sizes.iter().sum());
        for &size in sizes {
            if size == 0 {
                return Err(crate::error::invalid("block size", "blocks must be nonempty"));
            }
            let leader = leader_of.len();
            leader_of.extend(std::iter::repeat(leader).take(size));
        }
        Ok(Self { leader_of })
    }

    /// Number of indices `m`.
    pub fn len(&self) -> usize {
        self.leader_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leader_of.is_empty()
    }

    /// Number of blocks, `l(π)`.
    pub fn num_blocks(&self) -> usize {
        self.leaders().count()
    }

    /// Block leaders in increasing order.
    pub fn leaders(&self) -> impl Iterator<Item = usize> + '_ {
        self.leader_of.iter().enumerate().filter(|(i, &l)| *i == l).map(|(i, _)| i)
    }

    pub fn leader_of(&self, index: usize) -> usize {
        self.leader_of[index]
    }

    pub fn same_block(&self, i: usize, j: usize) -> bool {
        self.leader_of[i] == self.leader_of[j]
    }

    /// Position of the block containing `index` in the left-to-right order.
    pub fn block_index_of(&self, index: usize) -> usize {
        let leader = self.leader_of[index];
        self.leaders().take_while(|&l| l < leader).count()
    }

    /// Index range of every block, left to right.
    pub fn blocks(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.len() {
            if i == self.len() || self.leader_of[i] == i {
                if i > start {
                    out.push(start..i);
                }
                start = i;
            }
        }
        out
    }

    /// Index range of block `b`.
    pub fn block(&self, b: usize) -> Range<usize> {
        self.blocks()[b].clone()
    }

    /// Merges block `b` with block `b + 1`; the right block attaches to the
    /// left block's leader. This is the only mutation the dynamics need.
    pub fn merge_with_next(&mut self, b: usize) -> Result<()> {
        let blocks = self.blocks();
        if b + 1 >= blocks.len() {
            return Err(Error::IndexOutOfRange {
                index: b + 1,
                len: blocks.len(),
            });
        }
        let leader = blocks[b].start;
        for i in blocks[b + 1].clone() {
            self.leader_of[i] = leader;
        }
        Ok(())
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Self) -> bool {
        self.len() == coarser.len()
            && self
                .blocks()
                .iter()
                .all(|b| b.clone().all(|i| coarser.leader_of[i] == coarser.leader_of[b.start]))
    }
}

fn check_nondecreasing<T: PartialOrd>(v: &[T], what: &'static str) -> Result<()> {
    if v.windows(2).all(|w| w[0] <= w[1]) {
        Ok(())
    } else {
        Err(Error::NonMonotone { what })
    }
}

/// The partition whose blocks are the level sets of a nondecreasing vector.
pub fn partition_of<T: PartialOrd>(positions: &[T]) -> Result<IntervalPartition> {
    check_nondecreasing(positions, "positions")?;
    let mut leader_of = Vec::with_capacity(positions.len());
    for i in 0..positions.len() {
        if i > 0 && positions[i] == positions[i - 1] {
            leader_of.push(leader_of[i - 1]);
        } else {
            leader_of.push(i);
        }
    }
    Ok(IntervalPartition { leader_of })
}

/// Leader coordinates of a vector that is constant on each block of `pi`.
pub fn project<T: PartialOrd + Copy>(x: &[T], pi: &IntervalPartition) -> Result<Vec<T>> {
    if x.len() != pi.len() {
        return Err(Error::LengthMismatch {
            what: "vector",
            expected: pi.len(),
            found: x.len(),
        });
    }
    check_nondecreasing(x, "vector")?;
    pi.blocks()
        .iter()
        .enumerate()
        .map(|(b, r)| {
            if x[r.clone()].iter().all(|v| *v == x[r.start]) {
                Ok(x[r.start])
            } else {
                Err(Error::NotConstantOnBlock { block: b })
            }
        })
        .collect()
}

/// Inverse of [`project`]: spreads each leader coordinate over its block.
pub fn lift<T: PartialOrd + Copy>(reduced: &[T], pi: &IntervalPartition) -> Result<Vec<T>> {
    let blocks = pi.blocks();
    if reduced.len() != blocks.len() {
        return Err(Error::LengthMismatch {
            what: "reduced vector",
            expected: blocks.len(),
            found: reduced.len(),
        });
    }
    check_nondecreasing(reduced, "reduced vector")?;
    let mut out = Vec::with_capacity(pi.len());
    for (r, v) in blocks.iter().zip(reduced) {
        out.extend(std::iter::repeat(*v).take(r.len()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn level_sets_become_blocks() {
        assert_eq!(partition_of(&[1, 1, 3]).unwrap().blocks(), vec![0..2, 2..3]);
        let d = partition_of(&[0, 1, 2]).unwrap();
        assert_eq!(d, IntervalPartition::discrete(3));
        let full = partition_of(&[5, 5, 5]).unwrap();
        assert_eq!(full.num_blocks(), 1);
        assert_eq!(full.blocks(), vec![0..3]);
    }

    #[test]
    fn non_monotone_input_is_rejected() {
        assert!(matches!(partition_of(&[2, 1]), Err(Error::NonMonotone { .. })));
        assert!(partition_of(&[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn project_and_lift_examples() {
        let pi = IntervalPartition::from_block_sizes(&[2, 1]).unwrap();
        assert_eq!(project(&[5, 5, 7], &pi).unwrap(), vec![5, 7]);
        assert_eq!(lift(&[5, 7], &pi).unwrap(), vec![5, 5, 7]);
        let d = IntervalPartition::discrete(3);
        assert_eq!(project(&[0, 1, 2], &d).unwrap(), vec![0, 1, 2]);
        let one = IntervalPartition::single_block(3);
        assert_eq!(project(&[2, 2, 2], &one).unwrap(), vec![2]);
        assert_eq!(lift(&[3], &one).unwrap(), vec![3, 3, 3]);
    }

    #[test]
    fn project_rejects_vectors_that_split_a_block() {
        let pi = IntervalPartition::from_block_sizes(&[2, 1]).unwrap();
        assert!(matches!(project(&[4, 5, 7], &pi), Err(Error::NotConstantOnBlock { block: 0 })));
        assert!(lift(&[7, 5], &pi).is_err());
    }

    #[test]
    fn leaders_and_lookup() {
        let pi = IntervalPartition::from_block_sizes(&[1, 3, 2]).unwrap();
        assert_eq!(pi.leaders().collect::<Vec<_>>(), vec![0, 1, 4]);
        assert_eq!(pi.leader_of(3), 1);
        assert_eq!(pi.block_index_of(5), 2);
        assert!(pi.same_block(1, 3));
        assert!(!pi.same_block(3, 4));
    }

    #[test]
    fn merging_only_coarsens() {
        let mut pi = IntervalPartition::discrete(4);
        let before = pi.clone();
        pi.merge_with_next(1).unwrap();
        assert_eq!(pi.blocks(), vec![0..1, 1..3, 3..4]);
        assert!(before.refines(&pi));
        assert!(!pi.refines(&before));
        assert!(pi.merge_with_next(2).is_err());
    }

    fn sorted_vec() -> impl Strategy<Value = Vec<i32>> {
        prop::collection::vec(-4i32..4, 1..8).prop_map(|mut v| {
            v.sort();
            v
        })
    }

    proptest! {
        #[test]
        fn lift_inverts_project(x in sorted_vec()) {
            let pi = partition_of(&x).unwrap();
            let r = project(&x, &pi).unwrap();
            prop_assert_eq!(r.len(), pi.num_blocks());
            prop_assert!(r.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(lift(&r, &pi).unwrap(), x);
        }

        #[test]
        fn blocks_are_exactly_level_sets(x in sorted_vec()) {
            let pi = partition_of(&x).unwrap();
            for i in 0..x.len() {
                for j in 0..x.len() {
                    prop_assert_eq!(pi.same_block(i, j), x[i] == x[j]);
                }
            }
        }
    }
}
