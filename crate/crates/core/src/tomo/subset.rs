use crate::error::{invalid, Result};
use crate::rng::SplitMix64;
use alloc::format;
use alloc::vec::Vec;

/// Image indices used for an n-image experiment. Always starts with the
/// master (0) and is strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetSelection {
    pub indices: Vec<usize>,
    pub seed: u64,
}

impl SubsetSelection {
    pub fn n(&self) -> usize {
        self.indices.len()
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        if self.indices.first() != Some(&0) {
            return Err(invalid("subset must start with the master image 0"));
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("subset indices must be strictly increasing"));
        }
        if let Some(&i) = self.indices.iter().find(|&&i| i >= total) {
            return Err(invalid(format!("subset index {i} out of range for {total} images")));
        }
        Ok(())
    }
}

/// Picks `n` of `total` images, always keeping the master.
///
/// Partial Fisher–Yates over `1..total` driven by SplitMix64(`seed`): step
/// `k` swaps position `k` with `k + next_u64() % (remaining)`. The first
/// `n − 1` entries are sorted and prefixed with 0.
pub fn select_subset(n: usize, total: usize, seed: u64) -> Result<SubsetSelection> {
    if n == 0 || n > total {
        return Err(invalid(format!("cannot select {n} of {total} images")));
    }
    let mut pool: Vec<usize> = (1..total).collect();
    let mut rng = SplitMix64::new(seed);
    let take = n - 1;
    for k in 0..take {
        let j = k + rng.below((pool.len() - k) as u64) as usize;
        pool.swap(k, j);
    }
    let mut picked: Vec<usize> = pool[..take].to_vec();
    picked.sort_unstable();
    let mut indices = Vec::with_capacity(n);
    indices.push(0);
    indices.extend(picked);
    Ok(SubsetSelection { indices, seed })
}
