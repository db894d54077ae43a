//! Seeded, portable random stream.

use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{frobenius_norm, DenseMatrix};

/// Explicitly seeded generator. ChaCha8 output is specified independently of
/// platform word size, so equal seeds give equal streams everywhere.
#[derive(Clone, Debug)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream, e.g. one per certification instance.
    pub fn fork(&self, stream: u64) -> Rng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(stream.wrapping_add(1));
        Rng {
            seed: self.seed,
            inner,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    /// Uniform in [lo, hi).
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index range must be non-empty");
        self.inner.random_range(0..n as u64) as usize
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        self.shuffle(&mut p);
        p
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.normal())
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| self.uniform_range(lo, hi))
    }
}

/// Uniform sample from the Frobenius ball of `radius` around `center`:
/// gaussian direction, radius scaled by `u^(1/n)`.
pub fn sample_in_ball(rng: &mut Rng, center: &DenseMatrix, radius: f64) -> DenseMatrix {
    assert!(radius >= 0.0, "radius must be non-negative");
    if radius == 0.0 {
        return center.clone();
    }
    let (rows, cols) = center.shape();
    let n = (rows * cols) as f64;
    let mut dir = rng.normal_matrix(rows, cols);
    let mut norm = frobenius_norm(&dir);
    while norm == 0.0 {
        dir = rng.normal_matrix(rows, cols);
        norm = frobenius_norm(&dir);
    }
    let r = radius * rng.uniform().powf(1.0 / n);
    let step = dir.scale(r / norm);
    let mut out = center.add(&step).expect("same shape");
    // Guard the rounding in `center + step` so the norm bound holds exactly.
    let dist = frobenius_norm(&out.sub(center).expect("same shape"));
    if dist > radius {
        out = center
            .add(&step.scale(radius / dist * (1.0 - 1e-15)))
            .expect("same shape");
    }
    out
}
