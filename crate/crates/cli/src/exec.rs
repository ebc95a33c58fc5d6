use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use zoll_core::exec::{Executor, Sequential};

use crate::error::{CliError, CliResult};

/// Per-representative jobs on a fixed-size rayon pool. Each job owns its
/// output chunk, so results do not depend on the thread count.
pub struct Pool {
    pool: ThreadPool,
}

impl Pool {
    pub fn new(threads: usize) -> CliResult<Self> {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {threads} threads: {e}")))?;
        Ok(Pool { pool })
    }
}

impl Executor for Pool {
    fn run(&self, width: usize, out: &mut [f64], job: &(dyn Fn(usize, &mut [f64]) + Sync)) {
        if width == 0 {
            return;
        }
        self.pool
            .install(|| out.par_chunks_mut(width).enumerate().for_each(|(i, c)| job(i, c)));
    }
}

/// Executor for `threads` workers; one thread runs inline.
pub fn executor(threads: usize) -> CliResult<Box<dyn Executor>> {
    match threads {
        0 => Err(CliError::usage("--threads must be at least 1")),
        1 => Ok(Box::new(Sequential)),
        t => Ok(Box::new(Pool::new(t)?)),
    }
}
