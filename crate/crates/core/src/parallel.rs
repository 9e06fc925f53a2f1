//! Worker-pool handle passed into the denoisers.
//!
//! With the `parallel` feature (default) work is spread over a rayon pool;
//! without it, or with one thread, everything runs on the caller's thread.
//! Results always come back in input order.

use crate::error::{Error, Result};

#[derive(Clone, Default)]
pub struct Parallelism {
    #[cfg(feature = "parallel")]
    pool: Option<std::sync::Arc<rayon::ThreadPool>>,
}

impl std::fmt::Debug for Parallelism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Parallelism").field("threads", &self.threads()).finish()
    }
}

impl Parallelism {
    pub fn sequential() -> Self {
        Parallelism::default()
    }

    /// `threads == 0` means one worker per available core.
    pub fn with_threads(threads: usize) -> Result<Self> {
        let threads = if threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            threads
        };
        if threads == 1 {
            return Ok(Parallelism::sequential());
        }
        #[cfg(feature = "parallel")]
        {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::invalid(format!("cannot start {threads} worker threads: {e}")))?;
            Ok(Parallelism {
                pool: Some(std::sync::Arc::new(pool)),
            })
        }
        #[cfg(not(feature = "parallel"))]
        {
            Err(Error::invalid(format!(
                "{threads} threads requested but parallel support is compiled out"
            )))
        }
    }

    pub fn threads(&self) -> usize {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            return pool.current_num_threads();
        }
        1
    }

    /// Ordered map with a per-worker scratch value built by `init`.
    pub fn map_init<T, S, R, I, F>(&self, items: &[T], init: I, f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        I: Fn() -> S + Sync + Send,
        F: Fn(&mut S, &T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| items.par_iter().map_init(&init, |s, t| f(s, t)).collect());
        }
        let mut scratch = init();
        items.iter().map(|t| f(&mut scratch, t)).collect()
    }
}
