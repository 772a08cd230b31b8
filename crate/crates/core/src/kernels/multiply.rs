use crate::error::{Error, Result};
use crate::matrix::{Matrix, Quadrants};
use crate::par;

use super::{require_square_pow2, KernelConfig, MultiplyAlgo, OpCounter};

fn check_operands(ms: &[&Matrix], what: &str) -> Result<usize> {
    let n = require_square_pow2(ms[0], what)?;
    for m in &ms[1..] {
        if m.rows() != n || m.cols() != n || m.kind() != ms[0].kind() {
            return Err(Error::InvalidShape(format!(
                "{what}: operand {}x{} ({}) does not match order {n} ({})",
                m.rows(),
                m.cols(),
                m.kind(),
                ms[0].kind()
            )));
        }
    }
    Ok(n)
}

/// Triple loop with fused accumulation: d_ij = c_ij + Σ_k a_ik b_kj,
/// summed in increasing k.
fn leaf_mul_accum(a: &Matrix, b: &Matrix, c: &Matrix, ctr: &mut OpCounter) -> Matrix {
    let n = a.rows();
    let mut d = c.clone();
    for i in 0..n {
        for j in 0..n {
            let mut acc = c.get(i, j).clone();
            for k in 0..n {
                acc = &acc + &(a.get(i, k) * b.get(k, j));
            }
            d.set(i, j, acc);
        }
    }
    let n3 = (n * n * n) as u64;
    ctr.mul_count += n3;
    ctr.addsub_count += n3;
    d
}

/// `A·B + C` by the quadrant equations
/// `D₀ = A₀B₀ + (A₁B₂ + C₀)`, `D₁ = A₀B₁ + (A₁B₃ + C₁)`,
/// `D₂ = A₂B₀ + (A₃B₂ + C₂)`, `D₃ = A₂B₁ + (A₃B₃ + C₃)`.
pub fn mul_accum_recursive(
    a: &Matrix,
    b: &Matrix,
    c: &Matrix,
    cfg: &KernelConfig,
    ctr: &mut OpCounter,
) -> Result<Matrix> {
    let n = check_operands(&[a, b, c], "mul_accum")?;
    ctr.record_block_mul(n);
    if n <= cfg.leaf_size {
        return Ok(leaf_mul_accum(a, b, c, ctr));
    }
    let (qa, qb, qc) = (a.split()?, b.split()?, c.split()?);
    let quad = |ai: &Matrix, aj: &Matrix, bi: &Matrix, bj: &Matrix, ci: &Matrix| {
        let mut local = OpCounter::new();
        let inner = mul_accum_recursive(aj, bj, ci, cfg, &mut local)?;
        let d = mul_accum_recursive(ai, bi, &inner, cfg, &mut local)?;
        Ok::<_, Error>((d, local))
    };
    let fork = cfg.fork(n);
    let ((d0, d1), (d2, d3)) = par::join(
        fork,
        || {
            par::join(
                fork,
                || quad(&qa.a0, &qa.a1, &qb.a0, &qb.a2, &qc.a0),
                || quad(&qa.a0, &qa.a1, &qb.a1, &qb.a3, &qc.a1),
            )
        },
        || {
            par::join(
                fork,
                || quad(&qa.a2, &qa.a3, &qb.a0, &qb.a2, &qc.a2),
                || quad(&qa.a2, &qa.a3, &qb.a1, &qb.a3, &qc.a3),
            )
        },
    );
    let mut blocks = Vec::with_capacity(4);
    for r in [d0, d1, d2, d3] {
        let (d, local) = r?;
        ctr.merge(&local);
        blocks.push(d);
    }
    let blocks: [Matrix; 4] = blocks.try_into().expect("four blocks");
    Matrix::join(&Quadrants::from_array(blocks))
}

/// `A·B` by Strassen's seven-product scheme above the leaf size.
pub fn mul_strassen(
    a: &Matrix,
    b: &Matrix,
    cfg: &KernelConfig,
    ctr: &mut OpCounter,
) -> Result<Matrix> {
    let n = check_operands(&[a, b], "mul_strassen")?;
    ctr.record_block_mul(n);
    if n <= cfg.leaf_size {
        let zero = Matrix::zeros(n, n, a.kind());
        return Ok(leaf_mul_accum(a, b, &zero, ctr));
    }
    let h = n / 2;
    let (qa, qb) = (a.split()?, b.split()?);
    let add = |x: &Matrix, y: &Matrix, ctr: &mut OpCounter| {
        ctr.addsub_count += (h * h) as u64;
        x.add(y)
    };
    let sub = |x: &Matrix, y: &Matrix, ctr: &mut OpCounter| {
        ctr.addsub_count += (h * h) as u64;
        x.sub(y)
    };
    let mut pre = OpCounter::new();
    let operands = vec![
        (add(&qa.a0, &qa.a3, &mut pre)?, add(&qb.a0, &qb.a3, &mut pre)?),
        (add(&qa.a2, &qa.a3, &mut pre)?, qb.a0.clone()),
        (qa.a0.clone(), sub(&qb.a1, &qb.a3, &mut pre)?),
        (qa.a3.clone(), sub(&qb.a2, &qb.a0, &mut pre)?),
        (add(&qa.a0, &qa.a1, &mut pre)?, qb.a3.clone()),
        (sub(&qa.a2, &qa.a0, &mut pre)?, add(&qb.a0, &qb.a1, &mut pre)?),
        (sub(&qa.a1, &qa.a3, &mut pre)?, add(&qb.a2, &qb.a3, &mut pre)?),
    ];
    ctr.merge(&pre);
    let products = par::map(cfg.fork(n), operands, |(x, y)| {
        let mut local = OpCounter::new();
        mul_strassen(&x, &y, cfg, &mut local).map(|m| (m, local))
    });
    let mut m = Vec::with_capacity(7);
    for r in products {
        let (p, local) = r?;
        ctr.merge(&local);
        m.push(p);
    }
    let c0 = add(&sub(&add(&m[0], &m[3], ctr)?, &m[4], ctr)?, &m[6], ctr)?;
    let c1 = add(&m[2], &m[4], ctr)?;
    let c2 = add(&m[1], &m[3], ctr)?;
    let c3 = add(&add(&sub(&m[0], &m[1], ctr)?, &m[2], ctr)?, &m[5], ctr)?;
    Matrix::join(&Quadrants { a0: c0, a1: c1, a2: c2, a3: c3 })
}

/// `A·B` with the configured algorithm. The standard path is
/// `mul_accum_recursive(A, B, 0)`.
pub fn multiply(a: &Matrix, b: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Matrix> {
    match cfg.multiply_algo {
        MultiplyAlgo::Standard => {
            let zero = Matrix::zeros(a.rows(), b.cols(), a.kind());
            mul_accum_recursive(a, b, &zero, cfg, ctr)
        }
        MultiplyAlgo::Strassen => mul_strassen(a, b, cfg, ctr),
    }
}

/// `−(A·B)`.
pub fn mul_neg(a: &Matrix, b: &Matrix, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Matrix> {
    Ok(multiply(a, b, cfg, ctr)?.negate())
}
