//! Deterministic parallel reduction over trials.
//!
//! Trials are cut into fixed-size chunks independent of the worker count.
//! Each chunk is folded in trial order on some worker, and chunk results are
//! merged in chunk order on the calling thread, so the floating-point result
//! does not depend on scheduling.

use rayon::prelude::*;
use rayon::ThreadPool;

use fluctlab_core::Result;

/// Trials per chunk.
pub const TRIAL_CHUNK: u64 = 256;

pub fn pool(workers: usize) -> std::result::Result<ThreadPool, rayon::ThreadPoolBuildError> {
    rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()
}

pub fn fold_trials<A, I, S, M>(pool: &ThreadPool, trials: u64, init: I, step: S, mut merge: M) -> Result<A>
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64) -> Result<()> + Sync,
    M: FnMut(&mut A, A) -> Result<()>,
{
    let chunks = trials.div_ceil(TRIAL_CHUNK);
    let parts: Vec<A> = pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                for trial in c * TRIAL_CHUNK..((c + 1) * TRIAL_CHUNK).min(trials) {
                    step(&mut acc, trial)?;
                }
                Ok(acc)
            })
            .collect::<Result<Vec<A>>>()
    })?;
    let mut total = init();
    for part in parts {
        merge(&mut total, part)?;
    }
    Ok(total)
}

/// Order-preserving parallel map.
pub fn map_ordered<T, U, F>(pool: &ThreadPool, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> Result<U> + Sync,
{
    pool.install(|| items.par_iter().map(&f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_is_worker_independent() {
        let run = |w| {
            fold_trials(
                &pool(w).unwrap(),
                10_000,
                || 0.0f64,
                |acc, t| {
                    *acc += 1.0 / (t as f64 + 1.0);
                    Ok(())
                },
                |a, b| {
                    *a += b;
                    Ok(())
                },
            )
            .unwrap()
        };
        assert_eq!(run(1).to_bits(), run(8).to_bits());
    }

    #[test]
    fn errors_propagate() {
        let r = fold_trials(
            &pool(2).unwrap(),
            1000,
            || (),
            |_, t| if t == 700 { Err(fluctlab_core::Error::Numerical("x".into())) } else { Ok(()) },
            |_, _| Ok(()),
        );
        assert!(r.is_err());
    }
}
