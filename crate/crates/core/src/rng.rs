//! Per-trial random streams and order-independent parallel trial execution.
//!
//! Every trial owns a ChaCha8 stream keyed by `(seed, trial_index)`: the seed fixes the key and
//! the trial index selects one of the 2^64 stream ids. A trial's draws therefore do not depend
//! on which worker runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub type TrialRng = ChaCha8Rng;

pub fn trial_rng(seed: u64, trial_index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

/// Runs `trial` for every index in `0..n` on the current rayon pool and returns the outputs in
/// index order.
pub fn run_trials<R, F>(n: u64, trial: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    (0..n).into_par_iter().map(trial).collect()
}
