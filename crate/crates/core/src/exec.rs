//! Sequential or rayon-backed execution of independent per-item work.
//!
//! Without the `parallel` feature every [`Exec`] runs sequentially. Results
//! are written by index, so both modes produce identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items a parallel request still runs inline.
pub const PAR_MIN_ITEMS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// True when this request will actually fan out for `len` items.
    pub fn fans_out(self, len: usize) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel && len >= PAR_MIN_ITEMS
    }

    /// `(0..len).map(f).collect()`, fanned out when worthwhile.
    pub fn map_indexed<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.fans_out(len) {
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Maps a slice of independent jobs regardless of size.
    pub fn map_jobs<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Exec::Parallel {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}
