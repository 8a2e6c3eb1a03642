//! Index-ordered fan-out over independent work items.
//!
//! With the `parallel` feature (default) work runs on a rayon pool; without
//! it, or with one worker, everything runs on the calling thread. Results are
//! always returned in index order, so reductions done by the caller are
//! independent of the worker count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exec {
    workers: usize,
}

impl Default for Exec {
    fn default() -> Self {
        Exec::parallel(0)
    }
}

impl Exec {
    pub fn sequential() -> Self {
        Exec { workers: 1 }
    }

    /// `workers == 0` uses every available core.
    pub fn parallel(workers: usize) -> Self {
        Exec { workers }
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && self.workers != 1
    }

    pub fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.workers != 1 && n > 1 {
            let run = || (0..n).into_par_iter().map(&f).collect();
            if self.workers == 0 {
                return run();
            }
            match rayon::ThreadPoolBuilder::new().num_threads(self.workers).build() {
                Ok(pool) => return pool.install(run),
                Err(_) => return run(),
            }
        }
        (0..n).map(f).collect()
    }

    /// Like [`Exec::map`], but stops at the lowest-index failure.
    pub fn try_map<T, E, F>(&self, n: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map(n, f).into_iter().collect()
    }
}
