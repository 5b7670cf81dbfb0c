//! Reproducible random streams.
//!
//! Every stochastic operation takes a master seed; work item `i` draws from
//! a ChaCha stream keyed by `(seed, i)` so results do not depend on how
//! items are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG for work item `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Standard complex Gaussian `N_ℂ(0, 1)`: independent real and imaginary
/// parts of variance 1/2.
pub fn complex_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    use rand_distr::{Distribution, StandardNormal};
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    num_complex::Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
