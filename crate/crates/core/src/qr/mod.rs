//! Givens-rotation QR: the sequential column sweep, the QP cancellation
//! of a dense-over-upper-triangular block pair, the three-stage recursive
//! QR_G, and the block-multiplication cost model.

mod complexity;
mod givens;
mod qp;
mod qrg;
mod sequential;

use serde::{Deserialize, Serialize};

use crate::kernels::OpCounter;
use crate::matrix::Matrix;

pub use complexity::{ComplexityModel, QP_BLOCK_PRODUCTS_PER_LEVEL};
pub use givens::{apply_givens_rows, givens2, GivensPair};
pub use qp::{qp_decompose, qp_pair};
pub use qrg::{qr_g, qr_g_pair};
pub use sequential::qr_sequential;

/// `A = Q·R` with `Q` orthogonal and `R` upper triangular with exact zeros
/// below the diagonal.
#[derive(Debug, Clone)]
pub struct QRResult {
    pub q: Matrix,
    pub r: Matrix,
    pub counter: OpCounter,
}

/// Plain-number summary of a QR run, for reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QRStats {
    pub orthogonality_defect: f64,
    pub relative_residual: f64,
    pub r_upper_triangular: bool,
}

impl QRResult {
    pub fn stats(&self, a: &Matrix) -> QRStats {
        QRStats {
            orthogonality_defect: crate::oracle::orthogonality_defect(&self.q),
            relative_residual: crate::oracle::relative_residual(&self.q, &self.r, a),
            r_upper_triangular: self.r.is_upper_triangular(),
        }
    }
}

pub(crate) use qp::recurse as qp_pair_block;
pub(crate) use qrg::recurse as qr_g_block;
