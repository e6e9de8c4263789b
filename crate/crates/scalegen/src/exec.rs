//! Execution backend: data-parallel map over work items with a sequential
//! fallback. The rayon arm is compiled only with the `parallel` feature;
//! without it `Rayon` degrades to the sequential loop. Results are identical
//! either way because every work item owns its RNG substream.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parallelism {
    Sequential,
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        Parallelism::auto()
    }
}

impl Parallelism {
    /// The preferred backend for this build.
    pub fn auto() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Rayon
        } else {
            Parallelism::Sequential
        }
    }
}

/// Maps `f` over `0..len`, preserving index order in the output.
pub fn map_indexed<T, F>(mode: Parallelism, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if mode == Parallelism::Rayon {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = mode;
    (0..len).map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_preserved() {
        let seq = map_indexed(Parallelism::Sequential, 100, |i| i * i);
        let auto = map_indexed(Parallelism::auto(), 100, |i| i * i);
        assert_eq!(seq, auto);
    }
}
