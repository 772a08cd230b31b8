use std::fmt::Write as _;
use std::path::PathBuf;

use blockrec::qr::{qp_decompose, qr_g_pair, ComplexityModel};
use blockrec::{gen, KernelConfig, Matrix, OpCounter, ScalarKind};
use clap::Args;

use crate::Failure;

/// Products per QP level in the recurrence being checked.
const RECURRENCE_PRODUCTS: i64 = 24;

#[derive(Debug, Args)]
pub struct ComplexityArgs {
    /// Row counts n (powers of two >= 2).
    #[arg(long, value_delimiter = ',', default_values_t = [2u64, 4, 8, 16, 32, 64])]
    orders: Vec<u64>,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value_t = 3.0)]
    beta: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// CSV output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Scalar operations and order-(n/2)-or-smaller block products of a QP on
/// `n` rows (an `n × n/2` input).
fn count_qp(n: usize, seed: u64) -> Result<(u64, u64), Failure> {
    let h = n / 2;
    let dense = gen::random_dense(h, ScalarKind::F64, seed);
    let upper = blockrec::qr::qr_sequential(&gen::random_dense(h, ScalarKind::F64, seed + 1))?.r;
    let mut m = Matrix::zeros(n, h, ScalarKind::F64);
    m.set_block(0, 0, &dense);
    m.set_block(h, 0, &upper);
    let mut ops = OpCounter::new();
    qp_decompose(&m, &KernelConfig { parallel: false, ..KernelConfig::with_leaf(1) }, &mut ops)?;
    // with leaf = h each product records exactly one block multiplication
    let mut blocks = OpCounter::new();
    qp_decompose(&m, &KernelConfig { parallel: false, ..KernelConfig::with_leaf(h.max(1)) }, &mut blocks)?;
    Ok((ops.scalar_ops(), blocks.total_block_muls()))
}

fn count_qr(n: usize, seed: u64) -> Result<u64, Failure> {
    let a = gen::random_dense(n, ScalarKind::F64, seed);
    let mut ctr = OpCounter::new();
    qr_g_pair(&a, &KernelConfig { parallel: false, ..KernelConfig::with_leaf(1) }, &mut ctr)?;
    Ok(ctr.scalar_ops())
}

pub fn run(args: ComplexityArgs) -> Result<(), Failure> {
    let model = ComplexityModel::new(args.gamma, args.beta)?;
    let mut orders = args.orders.clone();
    orders.sort_unstable();
    orders.dedup();
    let mut csv = String::from("n,counted_cp,predicted_cp,counted_c,predicted_c,block_products,recurrence_residual\n");
    let mut prev: Option<(u64, u64)> = None;
    for &n in &orders {
        let predicted_cp = model.predicted_cp(n)?;
        let predicted_c = model.predicted_c(n)?;
        let (counted_cp, blocks) = count_qp(n as usize, args.seed)?;
        let counted_c = count_qr(n as usize, args.seed)?;
        // residual of count(n) = 4·count(n/2) + 24, only between consecutive orders
        let residual = match prev {
            Some((m, b)) if 2 * m == n => (blocks as i64 - 4 * b as i64 - RECURRENCE_PRODUCTS).to_string(),
            _ => String::new(),
        };
        let _ = writeln!(csv, "{n},{counted_cp},{predicted_cp},{counted_c},{predicted_c},{blocks},{residual}");
        prev = Some((n, blocks));
    }
    match &args.out {
        Some(p) => std::fs::write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}
