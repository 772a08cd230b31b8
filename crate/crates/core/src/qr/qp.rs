use crate::error::{Error, Result};
use crate::kernels::{mul_accum_recursive, multiply, KernelConfig, OpCounter};
use crate::matrix::{Matrix, Quadrants};
use crate::par;
use crate::scalar::ScalarKind;

use super::givens::{count_givens, givens2};

/// Splits a `2n x n` matrix into its top and bottom `n x n` blocks and
/// cancels the parallelogram between their diagonals.
///
/// Returns `(T, P)` with `T` orthogonal, `T·m = [P; 0]` and `P` upper
/// triangular.
pub fn qp_decompose(m: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    let n = m.cols();
    if m.rows() != 2 * n || n == 0 {
        return Err(Error::InvalidShape(format!("qp_decompose needs a 2n x n matrix, got {}x{}", m.rows(), n)));
    }
    qp_pair(&m.block(0, 0, n, n), &m.block(n, 0, n, n), cfg, ctr)
}

/// [`qp_decompose`] on the already separated blocks `top` (dense) and
/// `bottom` (upper triangular).
pub fn qp_pair(top: &Matrix, bottom: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    cfg.validate()?;
    let n = top.rows();
    if !top.is_square() || !n.is_power_of_two() || bottom.rows() != n || bottom.cols() != n {
        return Err(Error::InvalidShape(format!(
            "qp needs two square blocks of one power-of-two order, got {}x{} and {}x{}",
            top.rows(),
            top.cols(),
            bottom.rows(),
            bottom.cols()
        )));
    }
    if top.kind() != ScalarKind::F64 || bottom.kind() != ScalarKind::F64 {
        return Err(Error::UnsupportedScalar("QR needs f64 scalars".into()));
    }
    if !bottom.is_upper_triangular() {
        return Err(Error::PreconditionViolated("lower block of qp input is not upper triangular".into()));
    }
    recurse(top, bottom, cfg, ctr)
}

fn base(top: &Matrix, bottom: &Matrix, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    let (g, a) = givens2(top.get(0, 0), bottom.get(0, 0))?;
    if !g.is_identity() {
        count_givens(ctr);
    }
    let t = Matrix::from_f64(2, 2, &[g.c, g.s, -g.s, g.c]);
    let p = Matrix::from_scalars(1, 1, ScalarKind::F64, vec![a])?;
    Ok((t, p))
}

/// Block rows of the input are `[A00 A01; A10 A11; B00 B01; 0 B11]`.
/// The four sub-parallelograms are cancelled in the order ld (rows 1-2,
/// column 0), then lu (rows 0-1) and rd (rows 2-3) which touch disjoint
/// rows, then ru (rows 1-2, column 1).
pub(crate) fn recurse(top: &Matrix, bottom: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<(Matrix, Matrix)> {
    let n = top.rows();
    if n == 1 {
        return base(top, bottom, ctr);
    }
    let h = n / 2;
    let a = top.split()?;
    let b = bottom.split()?;

    let (t_ld, a10p) = recurse(&a.a2, &b.a0, cfg, ctr)?;
    let l = t_ld.split()?;
    let m1 = multiply(&l.a0, &a.a3, cfg, ctr)?;
    let a11p = mul_accum_recursive(&l.a1, &b.a1, &m1, cfg, ctr)?;
    let m3 = multiply(&l.a2, &a.a3, cfg, ctr)?;
    let b01p = mul_accum_recursive(&l.a3, &b.a1, &m3, cfg, ctr)?;

    let (lu, rd) = par::join(
        cfg.fork(n),
        || {
            let mut c = OpCounter::new();
            recurse(&a.a0, &a10p, cfg, &mut c).map(|r| (r, c))
        },
        || {
            let mut c = OpCounter::new();
            recurse(&b01p, &b.a3, cfg, &mut c).map(|r| (r, c))
        },
    );
    let ((t_lu, a00p), c_lu) = lu?;
    let ((t_rd, b01pp), c_rd) = rd?;
    ctr.merge(&c_lu);
    ctr.merge(&c_rd);
    let u = t_lu.split()?;
    let d = t_rd.split()?;

    let m7 = multiply(&u.a0, &a.a1, cfg, ctr)?;
    let a01p = mul_accum_recursive(&u.a1, &a11p, &m7, cfg, ctr)?;
    let m9 = multiply(&u.a2, &a.a1, cfg, ctr)?;
    let a11pp = mul_accum_recursive(&u.a3, &a11p, &m9, cfg, ctr)?;

    let (t_ru, a11ppp) = recurse(&a11pp, &b01pp, cfg, ctr)?;
    let r = t_ru.split()?;

    let t = assemble(&l, &u, &d, &r, cfg, ctr)?;
    let zero = Matrix::zeros(h, h, ScalarKind::F64);
    let p = Matrix::join(&Quadrants { a0: a00p, a1: a01p, a2: zero, a3: a11ppp })?;
    Ok((t, p))
}

/// `T = diag(I, R, I) · diag(U, D) · diag(I, L, I)` as a 4x4 grid of
/// order-h blocks.
fn assemble(
    l: &Quadrants,
    u: &Quadrants,
    d: &Quadrants,
    r: &Quadrants,
    cfg: &KernelConfig,
    ctr: &mut OpCounter,
) -> Result<Matrix> {
    let h = l.a0.rows();
    let x01 = multiply(&u.a1, &l.a0, cfg, ctr)?;
    let x02 = multiply(&u.a1, &l.a1, cfg, ctr)?;
    let x11 = multiply(&u.a3, &l.a0, cfg, ctr)?;
    let x12 = multiply(&u.a3, &l.a1, cfg, ctr)?;
    let x21 = multiply(&d.a0, &l.a2, cfg, ctr)?;
    let x22 = multiply(&d.a0, &l.a3, cfg, ctr)?;
    let x31 = multiply(&d.a2, &l.a2, cfg, ctr)?;
    let x32 = multiply(&d.a2, &l.a3, cfg, ctr)?;

    // rows 1 and 2 of diag(U, D)·diag(I, L, I) are [u10 x11 x12 0] and
    // [0 x21 x22 d01]; R mixes them
    let mut rows = Vec::with_capacity(2);
    for (ri, rj) in [(&r.a0, &r.a1), (&r.a2, &r.a3)] {
        let c0 = multiply(ri, &u.a2, cfg, ctr)?;
        let m = multiply(ri, &x11, cfg, ctr)?;
        let c1 = mul_accum_recursive(rj, &x21, &m, cfg, ctr)?;
        let m = multiply(ri, &x12, cfg, ctr)?;
        let c2 = mul_accum_recursive(rj, &x22, &m, cfg, ctr)?;
        let c3 = multiply(rj, &d.a1, cfg, ctr)?;
        rows.push([c0, c1, c2, c3]);
    }

    let mut t = Matrix::zeros(4 * h, 4 * h, ScalarKind::F64);
    t.set_block(0, 0, &u.a0);
    t.set_block(0, h, &x01);
    t.set_block(0, 2 * h, &x02);
    for (k, row) in rows.iter().enumerate() {
        for (j, blk) in row.iter().enumerate() {
            t.set_block((k + 1) * h, j * h, blk);
        }
    }
    t.set_block(3 * h, h, &x31);
    t.set_block(3 * h, 2 * h, &x32);
    t.set_block(3 * h, 3 * h, &d.a3);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::oracle::{naive_mul, orthogonality_defect};
    use crate::scalar::Scalar;

    fn stacked(n: usize, seed: u64) -> Matrix {
        let top = gen::random_dense(n, ScalarKind::F64, seed);
        let mut bottom = gen::random_dense(n, ScalarKind::F64, seed + 1000);
        for i in 0..n {
            for j in 0..i {
                bottom.set(i, j, Scalar::F64(0.0));
            }
        }
        let mut m = Matrix::zeros(2 * n, n, ScalarKind::F64);
        m.set_block(0, 0, &top);
        m.set_block(n, 0, &bottom);
        m
    }

    fn check(m: &Matrix, cfg: &KernelConfig) {
        let n = m.cols();
        let (t, p) = qp_decompose(m, cfg, &mut OpCounter::new()).unwrap();
        assert!(p.is_upper_triangular());
        assert!(orthogonality_defect(&t) <= 1e-12 * (n as f64).max(1.0));
        let tm = naive_mul(&t, m);
        let mut want = Matrix::zeros(2 * n, n, ScalarKind::F64);
        want.set_block(0, 0, &p);
        assert!(tm.frobenius_distance(&want).unwrap() <= 1e-12 * m.frobenius_norm().max(1.0));
    }

    #[test]
    fn identity_over_zero() {
        for n in [1, 2, 4, 8] {
            let mut m = Matrix::zeros(2 * n, n, ScalarKind::F64);
            m.set_block(0, 0, &Matrix::identity(n, ScalarKind::F64));
            let (t, p) = qp_decompose(&m, &KernelConfig::with_leaf(1), &mut OpCounter::new()).unwrap();
            assert!(t.is_identity());
            assert!(p.is_identity());
        }
    }

    #[test]
    fn order_one_is_one_rotation() {
        let m = Matrix::from_f64(2, 1, &[3.0, 4.0]);
        let (t, p) = qp_decompose(&m, &KernelConfig::default(), &mut OpCounter::new()).unwrap();
        assert_eq!(t.to_f64_vec(), vec![0.6, 0.8, -0.8, 0.6]);
        assert_eq!(p.to_f64_vec(), vec![5.0]);
    }

    #[test]
    fn seeded_reconstruction() {
        for seed in 0..4 {
            check(&stacked(2, seed), &KernelConfig::default());
            check(&stacked(8, seed), &KernelConfig::with_leaf(2));
            check(&stacked(16, seed), &KernelConfig::with_leaf(4));
        }
    }

    #[test]
    fn diagonal_magnitudes_match_sweep() {
        // |P| diagonal equals |R| diagonal of a Givens sweep over the same columns
        let m = stacked(4, 7);
        let (_, p) = qp_decompose(&m, &KernelConfig::with_leaf(1), &mut OpCounter::new()).unwrap();
        let mut sq = Matrix::zeros(8, 8, ScalarKind::F64);
        sq.set_block(0, 0, &m);
        let r = crate::oracle::givens_sweep_r(&sq);
        for i in 0..4 {
            let (x, y) = (p.get(i, i).to_f64().abs(), r[i][i].abs());
            assert!((x - y).abs() <= 1e-10 * y.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn rejects_dense_bottom() {
        let m = Matrix::from_f64(4, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert!(matches!(
            qp_decompose(&m, &KernelConfig::default(), &mut OpCounter::new()),
            Err(Error::PreconditionViolated(_))
        ));
        let r = Matrix::from_i64(2, 1, &[3, 4], ScalarKind::Rat);
        assert!(matches!(
            qp_decompose(&r, &KernelConfig::default(), &mut OpCounter::new()),
            Err(Error::UnsupportedScalar(_))
        ));
    }

    #[test]
    fn block_products_per_level() {
        // with leaf >= n every product records exactly one block multiplication
        let count = |n: usize| {
            let mut ctr = OpCounter::new();
            qp_decompose(&stacked(n, 3), &KernelConfig::with_leaf(n), &mut ctr).unwrap();
            ctr.total_block_muls()
        };
        assert_eq!(count(1), 0);
        for n in [1, 2, 4, 8] {
            assert_eq!(count(2 * n), 4 * count(n) + 28);
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let m = stacked(16, 11);
        let par_cfg = KernelConfig::with_leaf(2);
        let seq_cfg = KernelConfig { parallel: false, ..par_cfg };
        let (mut c1, mut c2) = (OpCounter::new(), OpCounter::new());
        let (t1, p1) = qp_decompose(&m, &par_cfg, &mut c1).unwrap();
        let (t2, p2) = qp_decompose(&m, &seq_cfg, &mut c2).unwrap();
        assert!(t1.bitwise_eq(&t2) && p1.bitwise_eq(&p2));
        assert_eq!(c1, c2);
    }
}
