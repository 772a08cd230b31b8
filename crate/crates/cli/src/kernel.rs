use std::fmt::Write as _;
use std::path::PathBuf;

use blockrec::kernels::{cholesky, inv_lower_triangular, inv_strassen, mul_accum_recursive, mul_strassen};
use blockrec::qr::{qr_g, qr_sequential};
use blockrec::{gen, oracle, KernelConfig, Matrix, OpCounter, ScalarKind};
use clap::{Args, ValueEnum};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Mul,
    MulStrassen,
    InvTri,
    Cholesky,
    InvStrassen,
    QrSeq,
    QrG,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(value_enum)]
    algo: Algo,
    /// Input matrix file(s); `mul` takes two.
    #[arg(long = "in", conflicts_with = "random")]
    input: Vec<PathBuf>,
    /// Generate a seeded random input of this order.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "f64")]
    scalar: ScalarKind,
    #[arg(long, default_value_t = 16)]
    leaf: usize,
    /// Run sub-problems sequentially.
    #[arg(long)]
    sequential: bool,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Seeded inputs suited to each algorithm.
pub fn random_inputs(algo: Algo, n: usize, kind: ScalarKind, seed: u64) -> Vec<Matrix> {
    match algo {
        Algo::Mul | Algo::MulStrassen => {
            vec![gen::random_dense(n, kind, seed), gen::random_dense(n, kind, seed.wrapping_add(1))]
        }
        Algo::InvTri => vec![gen::random_lower_triangular(n, kind, seed)],
        Algo::Cholesky => vec![gen::random_spd(n, seed).to_kind(kind)],
        Algo::InvStrassen => vec![gen::random_diag_dominant(n, kind, seed)],
        Algo::QrSeq | Algo::QrG => vec![gen::random_dense(n, kind, seed)],
    }
}

fn load_inputs(args: &KernelArgs) -> Result<Vec<Matrix>, Failure> {
    let want = if matches!(args.algo, Algo::Mul | Algo::MulStrassen) { 2 } else { 1 };
    if let Some(n) = args.random {
        return Ok(random_inputs(args.algo, n, args.scalar, args.seed));
    }
    if args.input.len() != want {
        return Err(Failure::Usage(format!("{:?} needs {want} --in file(s) or --random N", args.algo)));
    }
    args.input
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            Ok(Matrix::from_text(&text)?)
        })
        .collect()
}

fn residual_to_identity(a: &Matrix, x: &Matrix) -> f64 {
    let id = Matrix::identity(a.rows(), a.kind());
    oracle::naive_mul(a, x).frobenius_distance(&id).expect("square")
}

pub fn run(args: KernelArgs) -> Result<(), Failure> {
    let cfg = KernelConfig { leaf_size: args.leaf, parallel: !args.sequential, ..KernelConfig::default() };
    cfg.validate()?;
    let inputs = load_inputs(&args)?;
    let a = &inputs[0];
    let mut ctr = OpCounter::new();
    let mut stats: Vec<(&str, String)> = Vec::new();
    let outputs: Vec<(&str, Matrix)> = match args.algo {
        Algo::Mul => {
            let zero = Matrix::zeros(a.rows(), inputs[1].cols(), a.kind());
            vec![("C", mul_accum_recursive(a, &inputs[1], &zero, &cfg, &mut ctr)?)]
        }
        Algo::MulStrassen => vec![("C", mul_strassen(a, &inputs[1], &cfg, &mut ctr)?)],
        Algo::InvTri => {
            let x = inv_lower_triangular(a, &cfg, &mut ctr)?;
            stats.push(("identity_residual", residual_to_identity(a, &x).to_string()));
            vec![("Ainv", x)]
        }
        Algo::InvStrassen => {
            let x = inv_strassen(a, &cfg, &mut ctr)?;
            stats.push(("identity_residual", residual_to_identity(a, &x).to_string()));
            vec![("Ainv", x)]
        }
        Algo::Cholesky => {
            let (h, hinv) = cholesky(a, &cfg, &mut ctr)?;
            stats.push(("reconstruction_residual", oracle::relative_residual(&h, &h.transpose(), a).to_string()));
            stats.push(("identity_residual", residual_to_identity(&h, &hinv).to_string()));
            vec![("H", h), ("Hinv", hinv)]
        }
        Algo::QrSeq | Algo::QrG => {
            let res = if args.algo == Algo::QrSeq { qr_sequential(a)? } else { qr_g(a, &cfg)? };
            ctr = res.counter.clone();
            let s = res.stats(a);
            stats.push(("orthogonality_defect", s.orthogonality_defect.to_string()));
            stats.push(("relative_residual", s.relative_residual.to_string()));
            stats.push(("r_upper_triangular", s.r_upper_triangular.to_string()));
            vec![("Q", res.q), ("R", res.r)]
        }
    };
    let mut doc = String::new();
    for (name, m) in &outputs {
        let _ = writeln!(doc, "# {name}");
        doc.push_str(&m.to_text());
    }
    let _ = writeln!(doc, "# stats");
    let _ = writeln!(doc, "mul_count = {}", ctr.mul_count);
    let _ = writeln!(doc, "addsub_count = {}", ctr.addsub_count);
    let _ = writeln!(doc, "div_count = {}", ctr.div_count);
    let _ = writeln!(doc, "sqrt_count = {}", ctr.sqrt_count);
    for (order, n) in &ctr.block_mul_calls {
        let _ = writeln!(doc, "block_muls[{order}] = {n}");
    }
    for (k, v) in stats {
        let _ = writeln!(doc, "{k} = {v}");
    }
    match &args.out {
        Some(p) => std::fs::write(p, doc)?,
        None => print!("{doc}"),
    }
    Ok(())
}
