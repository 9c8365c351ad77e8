/// One row of an iteration trace: the monitored objective and the
/// Frobenius movement of each named parameter matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<T> {
    /// Starts at 1.
    pub iteration: usize,
    pub objective: T,
    pub deltas: Vec<(&'static str, T)>,
}

impl<T: Copy + PartialOrd> TraceRow<T> {
    pub fn max_delta(&self) -> Option<T> {
        self.deltas.iter().map(|&(_, d)| d).fold(None, |acc, d| match acc {
            Some(a) if a >= d => Some(a),
            _ => Some(d),
        })
    }
}
