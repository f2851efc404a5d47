//! Train/val/test frame splits.
//!
//! Sequential datasets correlate strongly between neighboring frames, so the
//! random split works on contiguous chunks: whole chunks are shuffled and
//! dealt to the splits, keeping temporal neighbors of held-out frames out of
//! the training set except at chunk boundaries. The extrapolation split holds
//! out the tail of the sequence wholesale.

use crate::dataset::rng::Rng;
use crate::error::{Error, Result};

/// Disjoint, sorted frame index lists covering [0, n).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitPlan {
    pub fn total(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }
}

/// Shuffle contiguous chunks of `chunk_len` frames and deal whole chunks to
/// train/val/test so each split's chunk share is within one chunk of its
/// ratio. The last chunk may be short when `chunk_len` does not divide `n`.
pub fn partitioned_split(
    n: usize,
    chunk_len: usize,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<SplitPlan> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot split zero frames".into()));
    }
    if chunk_len == 0 || chunk_len > n {
        return Err(Error::InvalidArgument(format!(
            "chunk length {chunk_len} invalid for {n} frames"
        )));
    }
    let (rt, rv, rs) = ratios;
    for (name, r) in [("train", rt), ("val", rv), ("test", rs)] {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} ratio must be positive, got {r}"
            )));
        }
    }
    if ((rt + rv + rs) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "ratios must sum to 1, got {}",
            rt + rv + rs
        )));
    }
    let n_chunks = n.div_ceil(chunk_len);
    // Largest-remainder apportionment of chunks; ties resolve in
    // train, val, test order so the result is deterministic.
    let exact = [rt * n_chunks as f64, rv * n_chunks as f64, rs * n_chunks as f64];
    let mut quota = [
        exact[0].floor() as usize,
        exact[1].floor() as usize,
        exact[2].floor() as usize,
    ];
    let mut leftover = n_chunks - (quota[0] + quota[1] + quota[2]);
    let mut order: Vec<usize> = vec![0, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &s in &order {
        if leftover == 0 {
            break;
        }
        quota[s] += 1;
        leftover -= 1;
    }

    let mut chunk_ids: Vec<usize> = (0..n_chunks).collect();
    Rng::new(seed).shuffle(&mut chunk_ids);

    let mut plan = SplitPlan {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (pos, &chunk) in chunk_ids.iter().enumerate() {
        let dest = if pos < quota[0] {
            &mut plan.train
        } else if pos < quota[0] + quota[1] {
            &mut plan.val
        } else {
            &mut plan.test
        };
        let start = chunk * chunk_len;
        let end = ((chunk + 1) * chunk_len).min(n);
        dest.extend(start..end);
    }
    plan.train.sort_unstable();
    plan.val.sort_unstable();
    plan.test.sort_unstable();
    Ok(plan)
}

/// Hold out the tail: the first `train_fraction` of frames is the training
/// era, the rest is test. `val_fraction` of the training era (its last
/// frames) is carved off for validation; 0 disables the carve.
pub fn extrapolation_split(n: usize, train_fraction: f64, val_fraction: f64) -> Result<SplitPlan> {
    if n == 0 {
        return Err(Error::InvalidArgument("cannot split zero frames".into()));
    }
    if !(train_fraction.is_finite() && 0.0 < train_fraction && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    if !(val_fraction.is_finite() && (0.0..1.0).contains(&val_fraction)) {
        return Err(Error::InvalidArgument(format!(
            "val fraction must lie in [0, 1), got {val_fraction}"
        )));
    }
    let era = (n as f64 * train_fraction).floor() as usize;
    if era == 0 {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} leaves no training frames out of {n}"
        )));
    }
    let val_len = (era as f64 * val_fraction).floor() as usize;
    Ok(SplitPlan {
        train: (0..era - val_len).collect(),
        val: (era - val_len..era).collect(),
        test: (era..n).collect(),
    })
}
