//! Permutations of sender ids `1..=n`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::topology::SenderSet;

/// A bijection on `{1..=n}` stored as its image list: `pi(i) = images[i - 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<u32>);

impl Permutation {
    pub fn new(images: Vec<u32>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x == 0 || x as usize > n || std::mem::replace(&mut seen[x as usize - 1], true) {
                return Err(Error::NotAPermutation(n));
            }
        }
        Ok(Permutation(images))
    }

    pub fn identity(n: u32) -> Self {
        Permutation((1..=n).collect())
    }

    /// Uniformly random permutation.
    pub fn random<R: Rng + ?Sized>(n: u32, rng: &mut R) -> Self {
        let mut v: Vec<u32> = (1..=n).collect();
        v.shuffle(rng);
        Permutation(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn images(&self) -> &[u32] {
        &self.0
    }

    /// `pi(i)`; panics when `i` is outside `1..=n`.
    pub fn apply(&self, i: u32) -> u32 {
        self.0[i as usize - 1]
    }

    pub fn apply_set(&self, s: &SenderSet) -> SenderSet {
        s.iter().map(|i| self.apply(i)).collect()
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            inv[x as usize - 1] = i as u32 + 1;
        }
        Permutation(inv)
    }

    /// All permutations of `1..=n` in lexicographic order of image lists.
    pub fn all(n: u32) -> LexPermutations {
        LexPermutations {
            next: Some((1..=n).collect()),
        }
    }
}

/// Iterator behind [`Permutation::all`].
pub struct LexPermutations {
    next: Option<Vec<u32>>,
}

impl Iterator for LexPermutations {
    type Item = Permutation;

    fn next(&mut self) -> Option<Permutation> {
        let cur = self.next.take()?;
        let mut v = cur.clone();
        if let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) {
            let j = (i..v.len())
                .rev()
                .find(|&j| v[j] > v[i - 1])
                .expect("successor exists");
            v.swap(i - 1, j);
            v[i..].reverse();
            self.next = Some(v);
        }
        Some(Permutation(cur))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicographic_enumeration() {
        let all: Vec<Vec<u32>> = Permutation::all(3).map(|p| p.0).collect();
        assert_eq!(
            all,
            vec![
                vec![1, 2, 3],
                vec![1, 3, 2],
                vec![2, 1, 3],
                vec![2, 3, 1],
                vec![3, 1, 2],
                vec![3, 2, 1]
            ]
        );
        assert_eq!(Permutation::all(5).count(), 120);
        assert_eq!(Permutation::all(1).count(), 1);
    }

    #[test]
    fn rejects_non_bijections() {
        assert_eq!(Permutation::new(vec![1, 1]), Err(Error::NotAPermutation(2)));
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![3, 1]).is_err());
    }

    #[test]
    fn inverse_roundtrip() {
        for p in Permutation::all(4) {
            let inv = p.inverse();
            for i in 1..=4 {
                assert_eq!(inv.apply(p.apply(i)), i);
            }
        }
    }
}
