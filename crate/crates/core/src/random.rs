//! Seeded random instances: Haar pure states, Ginibre mixed states, random
//! isometries and channels.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, CMat, CVec};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> num_complex::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c(re, im)
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Haar-random unit vector (normalized complex Gaussian).
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(d, |_, _| gaussian(rng));
    let norm = v.norm();
    v / c(norm, 0.0)
}

/// Random mixed state `G G^† / tr(G G^†)` with a `d x rank` Ginibre `G`.
pub fn ginibre_state<R: Rng + ?Sized>(d: usize, rank: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, rank, rng);
    let m = &g * g.adjoint();
    let t = crate::linalg::trace(&m).re;
    crate::linalg::hermitize(&(m / c(t, 0.0)))
}

/// Random Hermitian matrix with Gaussian entries.
pub fn hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    crate::linalg::hermitize(&ginibre(d, d, rng))
}

/// Columns orthonormalized by modified Gram-Schmidt: an isometry `d_in -> d_out`.
pub fn isometry<R: Rng + ?Sized>(d_out: usize, d_in: usize, rng: &mut R) -> CMat {
    assert!(d_out >= d_in, "isometry needs d_out >= d_in");
    let mut m = ginibre(d_out, d_in, rng);
    for j in 0..d_in {
        for k in 0..j {
            let proj: num_complex::Complex64 =
                (0..d_out).map(|i| m[(i, k)].conj() * m[(i, j)]).sum();
            for i in 0..d_out {
                let v = m[(i, k)];
                m[(i, j)] -= proj * v;
            }
        }
        let norm: f64 = (0..d_out).map(|i| m[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..d_out {
            m[(i, j)] /= c(norm, 0.0);
        }
    }
    m
}

pub fn unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    isometry(d, d, rng)
}

/// `count` Kraus operators `d_out x d_in` cut from a random isometry.
pub fn kraus_set<R: Rng + ?Sized>(d_out: usize, d_in: usize, count: usize, rng: &mut R) -> Vec<CMat> {
    let v = isometry(d_out * count, d_in, rng);
    (0..count)
        .map(|k| v.rows(k * d_out, d_out).into_owned())
        .collect()
}
