//! Batch execution over independent checks.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seed used by the randomized suites when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed_2009;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Parallel,
    Sequential,
}

impl Mode {
    /// `Parallel` when the crate is built with the `parallel` feature.
    pub fn available() -> Mode {
        if cfg!(feature = "parallel") {
            Mode::Parallel
        } else {
            Mode::Sequential
        }
    }
}

/// Order-preserving map. Falls back to a sequential loop without the
/// `parallel` feature.
pub fn map<T, R, F>(mode: Mode, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => items.par_iter().map(f).collect(),
        _ => items.iter().map(f).collect(),
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let xs: Vec<u64> = (0..200).collect();
        let a = map(Mode::Parallel, &xs, |x| x * x + 1);
        let b = map(Mode::Sequential, &xs, |x| x * x + 1);
        assert_eq!(a, b);
    }
}
