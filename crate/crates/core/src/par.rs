//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature (default) work runs on rayon; without it every
//! [`Parallelism`] setting falls back to a sequential loop. Output order always
//! matches input order.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    /// `threads: None` uses the global rayon pool.
    Parallel { threads: Option<usize> },
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Parallel { threads: None }
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// `Some(1)` means sequential, `Some(n)` a dedicated pool of `n` threads.
    pub fn from_threads(threads: Option<usize>) -> Self {
        match threads {
            Some(0 | 1) => Parallelism::Sequential,
            other => Parallelism::Parallel { threads: other },
        }
    }
}

pub fn map<T, R, F>(items: &[T], parallelism: Parallelism, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match parallelism {
        Parallelism::Sequential => items.iter().map(f).collect(),
        Parallelism::Parallel { threads } => parallel_map(items, threads, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, R, F>(items: &[T], threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;

    match threads {
        None => items.par_iter().map(f).collect(),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| items.par_iter().map(f).collect()),
            Err(_) => items.par_iter().map(f).collect(),
        },
    }
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, R, F>(items: &[T], _threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map(&xs, Parallelism::Sequential, |x| x * x);
        for p in [
            Parallelism::Parallel { threads: None },
            Parallelism::Parallel { threads: Some(3) },
        ] {
            assert_eq!(map(&xs, p, |x| x * x), seq);
        }
    }

    #[test]
    fn thread_settings() {
        assert_eq!(Parallelism::from_threads(Some(1)), Parallelism::Sequential);
        assert_eq!(
            Parallelism::from_threads(Some(4)),
            Parallelism::Parallel { threads: Some(4) }
        );
    }
}
