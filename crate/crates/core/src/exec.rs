//! Trial-level parallelism.
//!
//! Every Monte Carlo routine maps a trial index to a result and then reduces
//! the collected results in index order. The reduction never depends on how
//! the map was scheduled, so sequential and parallel runs agree bit for bit.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    /// Runs on the current rayon pool. Without the `parallel` feature this
    /// falls back to sequential execution.
    #[default]
    Parallel,
}

impl Exec {
    /// Evaluates `f(0), ..., f(n - 1)` and returns the results in index order.
    pub fn map<T, F>(self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => (0..n).map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => (0..n).map(f).collect(),
        }
    }

    /// Like [`Exec::map`] but over an owned list of work items.
    pub fn map_items<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Exec::Parallel => items.par_iter().map(f).collect(),
            #[cfg(not(feature = "parallel"))]
            Exec::Parallel => items.iter().map(f).collect(),
        }
    }
}

/// Monte Carlo run parameters shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub exec: Exec,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        McConfig { trials, seed, exec: Exec::default() }
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}
