#![allow(dead_code)]

use clv_core::linalg::{self, Mat};
use clv_core::Subspace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_subspace(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Subspace {
    Subspace::span(&linalg::gaussian_matrix(rng, d, k)).unwrap()
}

/// Two subspaces of dimensions `m` and `n` sharing a planted `shared`-dimensional part.
pub fn planted_pair(rng: &mut ChaCha8Rng, d: usize, m: usize, n: usize, shared: usize) -> (Subspace, Subspace, Subspace) {
    let q = linalg::random_orthogonal(rng, d);
    let common = q.columns(0, shared).into_owned();
    let mut a = Mat::zeros(d, m);
    a.columns_mut(0, shared).copy_from(&common);
    a.columns_mut(shared, m - shared).copy_from(&q.columns(shared, m - shared));
    // The rest of N mixes fresh directions with M's private part, keeping the planted block exact.
    let rest = n - shared;
    let mut b = Mat::zeros(d, n);
    b.columns_mut(0, shared).copy_from(&common);
    let fresh = q.columns(m, rest).into_owned();
    let mix = linalg::gaussian_matrix(rng, m - shared, rest) * 0.5;
    let private = q.columns(shared, m - shared).into_owned();
    b.columns_mut(shared, rest).copy_from(&(fresh + private * mix));
    (Subspace::span(&a).unwrap(), Subspace::span(&b).unwrap(), Subspace::span(&common).unwrap())
}

/// Orthogonal matrix close to the identity: Cayley transform of `eps * S`, S skew.
pub fn small_rotation(rng: &mut ChaCha8Rng, d: usize, eps: f64) -> Mat {
    let g = linalg::gaussian_matrix(rng, d, d);
    let s = (&g - g.transpose()) * (eps / 2.0);
    let id = Mat::identity(d, d);
    (&id - &s).try_inverse().unwrap() * (&id + &s)
}

pub fn apply_orthogonal(v: &Mat, m: &Subspace) -> Subspace {
    Subspace::from_orthonormal(v * m.basis()).unwrap()
}
