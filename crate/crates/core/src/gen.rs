//! Seeded input generators. All generators are pure functions of their
//! arguments (ChaCha8 stream seeded from `seed`).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::Matrix;
use crate::scalar::{Scalar, ScalarKind};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn entry(rng: &mut ChaCha8Rng, kind: ScalarKind) -> Scalar {
    match kind {
        ScalarKind::F64 => Scalar::F64(rng.gen_range(-1.0..1.0)),
        ScalarKind::Rat => Scalar::from_i64(rng.gen_range(-9..=9), kind),
    }
}

/// Square `n x n`: uniform in [-1, 1) for floats, integers in [-9, 9]
/// for rationals.
pub fn random_dense(n: usize, kind: ScalarKind, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let data = (0..n * n).map(|_| entry(&mut r, kind)).collect();
    Matrix::from_scalars(n, n, kind, data).expect("shape")
}

/// Lower triangular with diagonal entries in ±[1, 9].
pub fn random_lower_triangular(n: usize, kind: ScalarKind, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let mut m = Matrix::zeros(n, n, kind);
    for i in 0..n {
        for j in 0..i {
            m.set(i, j, entry(&mut r, kind));
        }
        let d = r.gen_range(1..=9) * if r.gen_bool(0.5) { 1 } else { -1 };
        m.set(i, i, Scalar::from_i64(d, kind));
    }
    m
}

/// Strictly diagonally dominant with positive diagonal. Every leading
/// block and every Schur complement of such a matrix is again strictly
/// diagonally dominant, hence invertible.
pub fn random_diag_dominant(n: usize, kind: ScalarKind, seed: u64) -> Matrix {
    let mut r = rng(seed);
    let mut m = Matrix::zeros(n, n, kind);
    for i in 0..n {
        let mut row_sum = Scalar::zero(kind);
        for j in 0..n {
            if i != j {
                let v = entry(&mut r, kind);
                row_sum = &row_sum + &v.abs();
                m.set(i, j, v);
            }
        }
        let margin = Scalar::from_i64(r.gen_range(1..=9), kind);
        m.set(i, i, &row_sum + &margin);
    }
    m
}

/// Symmetric positive definite `G Gᵀ + n I` with `G` uniform in [-1, 1).
pub fn random_spd(n: usize, seed: u64) -> Matrix {
    let g = random_dense(n, ScalarKind::F64, seed);
    let mut m = Matrix::zeros(n, n, ScalarKind::F64);
    for i in 0..n {
        for j in 0..=i {
            let mut acc = 0.0;
            for k in 0..n {
                acc += g.get(i, k).to_f64() * g.get(j, k).to_f64();
            }
            if i == j {
                acc += n as f64;
            }
            m.set(i, j, Scalar::F64(acc));
            m.set(j, i, Scalar::F64(acc));
        }
    }
    m
}
