use crate::error::{Error, Result};
use crate::numeric::Rng;

/// The sample indices owned by one worker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataShard {
    pub worker: usize,
    pub indices: Vec<usize>,
}

impl DataShard {
    /// Shard for population objectives that have no samples.
    pub fn population(worker: usize) -> Self {
        DataShard { worker, indices: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `batch` indices drawn uniformly with replacement. Empty for population shards.
    pub fn sample(&self, batch: usize, rng: &mut Rng) -> Vec<usize> {
        if self.indices.is_empty() {
            return Vec::new();
        }
        (0..batch).map(|_| self.indices[rng.below(self.indices.len())]).collect()
    }
}

/// Seeded permutation of `0..n_samples` cut into `p` contiguous pieces whose
/// sizes differ by at most one (the first `n % p` shards get the extra sample).
pub fn shard(n_samples: usize, p: usize, seed: u64) -> Result<Vec<DataShard>> {
    if p == 0 {
        return Err(Error::config("worker count must be at least 1"));
    }
    if p > n_samples {
        return Err(Error::config(format!("cannot shard {n_samples} samples over {p} workers")));
    }
    let mut perm: Vec<usize> = (0..n_samples).collect();
    Rng::new(seed).shuffle(&mut perm);
    let base = n_samples / p;
    let extra = n_samples % p;
    let mut start = 0;
    Ok((0..p)
        .map(|worker| {
            let len = base + usize::from(worker < extra);
            let indices = perm[start..start + len].to_vec();
            start += len;
            DataShard { worker, indices }
        })
        .collect())
}
