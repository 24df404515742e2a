//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) these fan out over rayon's current
//! pool; without it, or after [`set_sequential`]`(true)`, they run in order on
//! the calling thread. Either way results come back in input order, so callers
//! never observe scheduling.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Forces every helper in this module onto the sequential path.
pub fn set_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel") && !FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Configures the global worker pool. Returns false if it was already built.
pub fn init_workers(workers: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build_global()
            .is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = workers;
        false
    }
}

pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    items.iter().map(f).collect()
}

pub fn map_indexed<R, F>(len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    (0..len).map(f).collect()
}

/// Maps fallibly; the error reported is the one at the lowest index. Items
/// above the lowest failure seen so far are skipped.
pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if is_parallel() {
        use std::sync::atomic::AtomicUsize;
        // Only ever lowered to an index that failed, so it never drops below
        // the lowest failing index and that item always runs.
        let first_err = AtomicUsize::new(usize::MAX);
        let results = map_indexed(items.len(), |i| {
            if i > first_err.load(Ordering::Relaxed) {
                return None;
            }
            let r = f(&items[i]);
            if r.is_err() {
                first_err.fetch_min(i, Ordering::Relaxed);
            }
            Some(r)
        });
        return results.into_iter().map_while(|r| r).collect();
    }
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let ys = map(&xs, |x| x * 2);
        assert!(ys.iter().enumerate().all(|(i, y)| *y == 2 * i as u64));
        assert_eq!(map_indexed(5, |i| i), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn first_error_wins() {
        let xs: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> = try_map(&xs, |&x| if x % 10 == 7 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(7));
    }

    #[test]
    fn parallel_and_sequential_errors_agree() {
        let xs: Vec<u32> = (0..500).collect();
        for bad in [0u32, 3, 250, 499] {
            let f = |&x: &u32| if x >= bad && x % 3 == bad % 3 { Err(x) } else { Ok(x) };
            let par = try_map(&xs, f);
            let seq: Result<Vec<u32>, u32> = xs.iter().map(f).collect();
            assert_eq!(par, seq);
        }
        let ok: Result<Vec<u32>, u32> = try_map(&xs, |&x| Ok(x + 1));
        assert_eq!(ok.unwrap().len(), 500);
    }
}
