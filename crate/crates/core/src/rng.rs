use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator on an independent stream of the master seed.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Matrix with i.i.d. uniform(0, 1) entries.
pub(crate) fn uniform_matrix<T: crate::Real>(
    rows: usize,
    cols: usize,
    rng: &mut ChaCha8Rng,
) -> nalgebra::DMatrix<T> {
    use rand::Rng;
    nalgebra::DMatrix::from_fn(rows, cols, |_, _| T::lit(rng.random::<f64>()))
}
