//! Thread-count control for the data-parallel stages.
//!
//! Every parallel loop in the crate produces scheduling-independent results, so the thread
//! count only affects wall time.

use crate::error::{Error, Result};

/// Environment variable consulted by the command-line tool for a default thread count.
pub const THREADS_ENV: &str = "SU2TOMO_THREADS";

/// Runs `f` inside a dedicated rayon pool with `threads` workers, or in the global pool when
/// `threads` is `None`.
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::invalid("threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::invalid("threads", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_has_requested_size() {
        assert_eq!(
            with_threads(Some(3), rayon::current_num_threads).unwrap(),
            3
        );
        assert!(with_threads(Some(0), || ()).is_err());
    }
}
