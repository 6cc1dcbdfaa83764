//! Mixed-radix indexing of joint action profiles.
//!
//! Profiles are flattened row-major with user 0 as the most significant digit,
//! so iterating indices `0..len` visits profiles in lexicographic order.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    counts: Vec<usize>,
    len: usize,
}

impl ActionSpace {
    pub fn new(counts: Vec<usize>) -> Self {
        let len = counts.iter().product();
        Self { counts, len }
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn num_players(&self) -> usize {
        self.counts.len()
    }

    /// Number of pure profiles.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn index(&self, profile: &[usize]) -> usize {
        debug_assert_eq!(profile.len(), self.counts.len());
        profile.iter().zip(&self.counts).fold(0, |acc, (&a, &n)| acc * n + a)
    }

    pub fn profile(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.counts.len()];
        for (slot, &n) in out.iter_mut().zip(&self.counts).rev() {
            *slot = index % n;
            index /= n;
        }
        out
    }

    /// Returns the index reached by replacing `player`'s action in the
    /// profile at `index` with `action`.
    pub fn with_action(&self, index: usize, player: usize, action: usize) -> usize {
        let stride: usize = self.counts[player + 1..].iter().product();
        let current = (index / stride) % self.counts[player];
        index - current * stride + action * stride
    }

    pub fn contains(&self, profile: &[usize]) -> bool {
        profile.len() == self.counts.len() && profile.iter().zip(&self.counts).all(|(&a, &n)| a < n)
    }
}
