/// How independent work items (scan cells, per-season builds) are executed.
///
/// Results never depend on the choice: every map preserves input order and
/// reductions run sequentially afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon work stealing. Falls back to [`Execution::Serial`] when the
    /// crate is built without the `parallel` feature.
    #[default]
    Parallel,
    Serial,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_parallel_agree_in_order() {
        let items: Vec<u64> = (0..1000).collect();
        let a = Execution::Serial.map(&items, |x| x * x + 1);
        let b = Execution::Parallel.map(&items, |x| x * x + 1);
        assert_eq!(a, b);
    }
}
