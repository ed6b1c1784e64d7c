//! Signal subsets as bitmasks.

/// A subset of signal indices; bit `i` set means signal `i` is in the set.
pub type Mask = u32;

pub const EMPTY: Mask = 0;

pub fn full(n: usize) -> Mask {
    debug_assert!(n <= 31);
    (1u32 << n) - 1
}

pub fn contains(mask: Mask, i: usize) -> bool {
    mask >> i & 1 == 1
}

pub fn complement(mask: Mask, n: usize) -> Mask {
    !mask & full(n)
}

pub fn count(mask: Mask) -> usize {
    mask.count_ones() as usize
}

/// All `2^n` subsets, empty set first.
pub fn subsets(n: usize) -> impl Iterator<Item = Mask> {
    0..=full(n)
}

pub fn members(mask: Mask) -> impl Iterator<Item = usize> {
    (0..32).filter(move |&i| contains(mask, i))
}

pub fn from_indices<I: IntoIterator<Item = usize>>(iter: I) -> Mask {
    iter.into_iter().fold(0, |m, i| m | 1 << i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = from_indices([0, 2]);
        assert!(contains(m, 0) && !contains(m, 1) && contains(m, 2));
        assert_eq!(members(m).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(complement(m, 3), from_indices([1]));
        assert_eq!(subsets(3).count(), 8);
    }
}
