use blockrec::kernels::{cholesky, inv_lower_triangular, inv_strassen, mul_accum_recursive, mul_strassen};
use blockrec::qr::{qr_g, qr_sequential, QRResult};
use blockrec::{gen, oracle, KernelConfig, Matrix, OpCounter, Result, Scalar, ScalarKind};
use clap::Args;

use crate::Failure;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Orders to sweep (powers of two).
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 4, 8, 16, 32])]
    orders: Vec<usize>,
    /// Seeds per order, starting at 1.
    #[arg(long, default_value_t = 3)]
    seeds: u64,
    #[arg(long, default_value_t = 4)]
    leaf: usize,
    /// Test hook: perturb one entry of every multiply result.
    #[arg(long, hide = true)]
    perturb: bool,
}

struct Case {
    check: &'static str,
    order: usize,
    seed: u64,
    outcome: std::result::Result<String, String>,
}

fn rel(x: &Matrix, want: &Matrix) -> f64 {
    let d = x.frobenius_distance(want).expect("same shape");
    let n = want.frobenius_norm();
    if n == 0.0 {
        d
    } else {
        d / n
    }
}

fn bound(value: f64, limit: f64, what: &str) -> std::result::Result<String, String> {
    if value <= limit {
        Ok(format!("{what} {value:.3e}"))
    } else {
        Err(format!("{what} {value:.3e} > {limit:e}"))
    }
}

fn exact(ok: bool, what: &str) -> std::result::Result<String, String> {
    if ok {
        Ok(format!("{what} exact"))
    } else {
        Err(format!("{what} not exact"))
    }
}

fn qr_props(res: &QRResult, a: &Matrix) -> std::result::Result<String, String> {
    let s = res.stats(a);
    if !s.r_upper_triangular {
        return Err("R has nonzero subdiagonal entries".into());
    }
    bound(s.orthogonality_defect, 1e-10, "|QtQ-I|")?;
    bound(s.relative_residual, 1e-9, "|QR-A|/|A|")?;
    let sweep = oracle::givens_sweep_r(a);
    let worst = (0..a.rows())
        .map(|i| {
            let (x, y) = (res.r.get(i, i).to_f64().abs(), sweep[i][i].abs());
            (x - y).abs() / y.max(f64::MIN_POSITIVE)
        })
        .fold(0.0, f64::max);
    bound(worst, 1e-8, "diag(R) vs sweep")
}

fn run_case(check: &'static str, n: usize, seed: u64, cfg: &KernelConfig, perturb: bool) -> Result<std::result::Result<String, String>> {
    let mut ctr = OpCounter::new();
    let out = match check {
        "mul-rat" | "mul-f64" | "strassen-rat" | "strassen-f64" => {
            let kind = if check.ends_with("rat") { ScalarKind::Rat } else { ScalarKind::F64 };
            let a = gen::random_dense(n, kind, seed);
            let b = gen::random_dense(n, kind, seed + 1000);
            let mut c = if check.starts_with("mul") {
                mul_accum_recursive(&a, &b, &Matrix::zeros(n, n, kind), cfg, &mut ctr)?
            } else {
                mul_strassen(&a, &b, cfg, &mut ctr)?
            };
            if perturb {
                let v = c.get(0, 0) + &Scalar::ratio(1, 1000).to_kind(kind);
                c.set(0, 0, v);
            }
            let want = oracle::naive_mul(&a, &b);
            match kind {
                ScalarKind::Rat => exact(c.bitwise_eq(&want), "A*B vs naive"),
                ScalarKind::F64 => bound(rel(&c, &want), 1e-9, "A*B vs naive"),
            }
        }
        "inv-tri" => {
            let a = gen::random_lower_triangular(n, ScalarKind::Rat, seed);
            let x = inv_lower_triangular(&a, cfg, &mut ctr)?;
            exact(oracle::naive_mul(&a, &x).is_identity(), "L*Linv = I")
        }
        "inv-strassen" => {
            let a = gen::random_diag_dominant(n, ScalarKind::Rat, seed);
            let x = inv_strassen(&a, cfg, &mut ctr)?;
            exact(oracle::naive_mul(&a, &x).is_identity(), "A*Ainv = I")
        }
        "cholesky" => {
            let a = gen::random_spd(n, seed);
            let (h, hinv) = cholesky(&a, cfg, &mut ctr)?;
            let id = oracle::naive_mul(&h, &hinv).frobenius_distance(&Matrix::identity(n, ScalarKind::F64))?;
            bound(oracle::relative_residual(&h, &h.transpose(), &a), 1e-9, "|HHt-A|/|A|")
                .and_then(|_| bound(id, 1e-9, "|H*Hinv-I|"))
        }
        "qr-seq" => {
            let a = gen::random_dense(n, ScalarKind::F64, seed);
            qr_props(&qr_sequential(&a)?, &a)
        }
        "qr-g" => {
            let a = gen::random_dense(n, ScalarKind::F64, seed);
            qr_props(&qr_g(&a, cfg)?, &a)
        }
        other => unreachable!("unknown check {other}"),
    };
    Ok(out)
}

const CHECKS: [&str; 9] =
    ["mul-rat", "mul-f64", "strassen-rat", "strassen-f64", "inv-tri", "inv-strassen", "cholesky", "qr-seq", "qr-g"];

pub fn run(args: VerifyArgs) -> std::result::Result<(), Failure> {
    let cfg = KernelConfig::with_leaf(args.leaf);
    cfg.validate()?;
    if let Some(&n) = args.orders.iter().find(|n| !n.is_power_of_two()) {
        return Err(Failure::Usage(format!("order {n} is not a power of two")));
    }
    let mut cases = Vec::new();
    for check in CHECKS {
        for &order in &args.orders {
            for seed in 1..=args.seeds {
                let outcome = run_case(check, order, seed, &cfg, args.perturb).unwrap_or_else(|e| Err(e.to_string()));
                cases.push(Case { check, order, seed, outcome });
            }
        }
    }
    println!("{:<14} {:>5} {:>5}  {:<4}  detail", "check", "order", "seed", "");
    for c in &cases {
        let (tag, detail) = match &c.outcome {
            Ok(d) => ("pass", d),
            Err(d) => ("FAIL", d),
        };
        println!("{:<14} {:>5} {:>5}  {tag}  {detail}", c.check, c.order, c.seed);
    }
    let failed: Vec<&Case> = cases.iter().filter(|c| c.outcome.is_err()).collect();
    println!("{} of {} checks passed", cases.len() - failed.len(), cases.len());
    match failed.first() {
        None => Ok(()),
        Some(c) => Err(Failure::Check(format!(
            "{} failed at order {} seed {} ({} failures)",
            c.check,
            c.order,
            c.seed,
            failed.len()
        ))),
    }
}
