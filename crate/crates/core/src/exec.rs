//! Pluggable parallel map.
//!
//! Hot loops (one equator or one kernel row per job) write into disjoint
//! fixed-width output slots, so the result never depends on scheduling.

/// Runs `job(i, out_i)` for `i in 0..count`, where `out_i` is the `i`-th
/// chunk of width `width` of `out`.
pub trait Executor: Sync {
    fn run(&self, width: usize, out: &mut [f64], job: &(dyn Fn(usize, &mut [f64]) + Sync));
}

/// In-order execution on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn run(&self, width: usize, out: &mut [f64], job: &(dyn Fn(usize, &mut [f64]) + Sync)) {
        if width == 0 {
            return;
        }
        for (i, chunk) in out.chunks_mut(width).enumerate() {
            job(i, chunk);
        }
    }
}
