//! Seeded random streams.
//!
//! Every stochastic routine draws from a ChaCha8 generator keyed by a
//! `(seed, stream)` pair. ChaCha is counter based, so distinct stream ids give
//! independent sequences and work split over streams is reproducible no matter
//! how the streams are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on (0, 1]; zero is redrawn so the result can be fed to `ln`.
pub(crate) fn open_unit(rng: &mut StreamRng) -> f64 {
    use rand::Rng;
    loop {
        let u: f64 = rng.gen();
        if u > 0.0 {
            return u;
        }
    }
}

/// Number of worker threads, capped by `SIMPLEXSLICE_THREADS` when set.
pub fn thread_cap() -> Option<usize> {
    std::env::var("SIMPLEXSLICE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Runs `f` inside a rayon pool honouring [`thread_cap`].
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    match thread_cap() {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        None => f(),
    }
}
