use crate::error::{Error, Result};
use crate::kernels::{mul_accum_recursive, multiply, KernelConfig, OpCounter};
use crate::matrix::{Matrix, Quadrants};
use crate::scalar::ScalarKind;

use super::qp::recurse as qp_recurse;
use super::sequential::sequential_with;
use super::QRResult;

/// Block-recursive QR of `M = [A B; C D]` in three stages:
///
/// 1. `C = Q₁C₁` recursively, and `D₁ = Q₁ᵀD`;
/// 2. the parallelogram between `A` and the triangular `C₁` is cancelled,
///    `T₂[A; C₁] = [A₁; 0]`, and `T₂` is applied to `[B; D₁]`;
/// 3. the new lower-right block `D₂ = Q₃D₃` recursively.
///
/// Then `R = [A₁ B₁; 0 D₃]` and `Q = diag(I, Q₁)·T₂ᵀ·diag(I, Q₃)`.
pub fn qr_g(m: &Matrix, cfg: &KernelConfig) -> Result<QRResult> {
    let mut ctr = OpCounter::new();
    let (q, r) = qr_g_pair(m, cfg, &mut ctr)?;
    Ok(QRResult { q, r, counter: ctr })
}

/// [`qr_g`] with a caller-owned counter; returns `(Q, R)`.
pub fn qr_g_pair(m: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    cfg.validate()?;
    if !m.is_square() || !m.rows().is_power_of_two() {
        return Err(Error::InvalidShape(format!(
            "qr_g needs a square power-of-two order, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if m.kind() != ScalarKind::F64 {
        return Err(Error::UnsupportedScalar("QR needs f64 scalars".into()));
    }
    recurse(m, cfg, ctr)
}

pub(crate) fn recurse(m: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    let n = m.rows();
    if n <= cfg.leaf_size || n == 1 {
        return sequential_with(m, ctr);
    }
    let h = n / 2;
    let blk = m.split()?;

    let (q1, c1) = recurse(&blk.a2, cfg, ctr)?;
    let d1 = multiply(&q1.transpose(), &blk.a3, cfg, ctr)?;

    let (t2, a1) = qp_recurse(&blk.a0, &c1, cfg, ctr)?;
    let t = t2.split()?;
    let m0 = multiply(&t.a0, &blk.a1, cfg, ctr)?;
    let b1 = mul_accum_recursive(&t.a1, &d1, &m0, cfg, ctr)?;
    let m2 = multiply(&t.a2, &blk.a1, cfg, ctr)?;
    let d2 = mul_accum_recursive(&t.a3, &d1, &m2, cfg, ctr)?;

    let (q3, d3) = recurse(&d2, cfg, ctr)?;

    let s = t2.transpose().split()?;
    let top_right = multiply(&s.a1, &q3, cfg, ctr)?;
    let bottom_left = multiply(&q1, &s.a2, cfg, ctr)?;
    let s3q3 = multiply(&s.a3, &q3, cfg, ctr)?;
    let bottom_right = multiply(&q1, &s3q3, cfg, ctr)?;

    let q = Matrix::join(&Quadrants { a0: s.a0, a1: top_right, a2: bottom_left, a3: bottom_right })?;
    let zero = Matrix::zeros(h, h, ScalarKind::F64);
    let r = Matrix::join(&Quadrants { a0: a1, a1: b1, a2: zero, a3: d3 })?;
    Ok((q, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::{orthogonality_defect, relative_residual};
    use crate::qr::qr_sequential;
    use proptest::prelude::*;

    #[test]
    fn identity() {
        let i = Matrix::identity(16, ScalarKind::F64);
        let res = qr_g(&i, &KernelConfig::with_leaf(2)).unwrap();
        assert!(res.q.is_identity());
        assert!(res.r.is_identity());
    }

    #[test]
    fn order_two_delegates_to_sequential() {
        let a = gen::random_dense(2, ScalarKind::F64, 5);
        let g = qr_g(&a, &KernelConfig::default()).unwrap();
        let s = qr_sequential(&a).unwrap();
        assert!(g.q.bitwise_eq(&s.q) && g.r.bitwise_eq(&s.r));
    }

    #[test]
    fn seeded_sixteen() {
        let a = gen::random_dense(16, ScalarKind::F64, 21);
        for leaf in [1, 2, 4] {
            let res = qr_g(&a, &KernelConfig::with_leaf(leaf)).unwrap();
            assert!(orthogonality_defect(&res.q) <= 1e-10);
            assert!(res.r.is_upper_triangular());
            assert!(relative_residual(&res.q, &res.r, &a) <= 1e-9);
        }
    }

    #[test]
    fn errors() {
        let a = Matrix::zeros(3, 3, ScalarKind::F64);
        assert!(matches!(qr_g(&a, &KernelConfig::default()), Err(Error::InvalidShape(_))));
        let r = Matrix::identity(4, ScalarKind::Rat);
        assert!(matches!(qr_g(&r, &KernelConfig::default()), Err(Error::UnsupportedScalar(_))));
    }

    #[test]
    fn parallel_matches_sequential() {
        let a = gen::random_dense(32, ScalarKind::F64, 4);
        let p = KernelConfig::with_leaf(4);
        let s = KernelConfig { parallel: false, ..p };
        let (x, y) = (qr_g(&a, &p).unwrap(), qr_g(&a, &s).unwrap());
        assert!(x.q.bitwise_eq(&y.q) && x.r.bitwise_eq(&y.r));
        assert_eq!(x.counter, y.counter);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]
        #[test]
        fn agrees_with_sequential(seed in 0u64..1_000_000, log_n in 0u32..=6, log_leaf in 0u32..=3) {
            let n = 1usize << log_n;
            let a = gen::random_dense(n, ScalarKind::F64, seed);
            let g = qr_g(&a, &KernelConfig::with_leaf(1 << log_leaf)).unwrap();
            let s = qr_sequential(&a).unwrap();
            for res in [&g, &s] {
                prop_assert!(res.r.is_upper_triangular());
                prop_assert!(orthogonality_defect(&res.q) <= 1e-10);
                prop_assert!(relative_residual(&res.q, &res.r, &a) <= 1e-9);
            }
            for i in 0..n {
                let (x, y) = (g.r.get(i, i).to_f64().abs(), s.r.get(i, i).to_f64().abs());
                prop_assert!((x - y).abs() <= 1e-8 * y.max(f64::MIN_POSITIVE), "{} vs {}", x, y);
            }
        }
    }
}
