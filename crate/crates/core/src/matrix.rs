//! Dense row-major matrices with power-of-two padding and quadrant views.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::scalar::{Scalar, ScalarKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaddingScheme {
    /// New cells are zero.
    ZeroPad,
    /// New diagonal cells are one, everything else new is zero.
    IdentityPad,
}

/// Dense matrix. Every element has the same [`ScalarKind`].
#[derive(Debug, Clone)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    kind: ScalarKind,
    data: Vec<Scalar>,
    logical_rows: usize,
    logical_cols: usize,
}

/// The four equal blocks of a square matrix of even order:
/// top-left, top-right, bottom-left, bottom-right.
#[derive(Debug, Clone)]
pub struct Quadrants {
    pub a0: Matrix,
    pub a1: Matrix,
    pub a2: Matrix,
    pub a3: Matrix,
}

impl Quadrants {
    pub fn into_array(self) -> [Matrix; 4] {
        [self.a0, self.a1, self.a2, self.a3]
    }

    pub fn from_array([a0, a1, a2, a3]: [Matrix; 4]) -> Self {
        Quadrants { a0, a1, a2, a3 }
    }
}

impl PartialEq for Matrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize, kind: ScalarKind) -> Self {
        Matrix {
            rows,
            cols,
            kind,
            data: vec![Scalar::zero(kind); rows * cols],
            logical_rows: rows,
            logical_cols: cols,
        }
    }

    pub fn identity(n: usize, kind: ScalarKind) -> Self {
        let mut m = Matrix::zeros(n, n, kind);
        for i in 0..n {
            m.data[i * n + i] = Scalar::one(kind);
        }
        m
    }

    /// Builds from row-major scalars; all must share `kind`.
    pub fn from_scalars(rows: usize, cols: usize, kind: ScalarKind, data: Vec<Scalar>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|s| s.kind() != kind) {
            return Err(Error::InvalidShape("mixed scalar kinds".into()));
        }
        Ok(Matrix { rows, cols, kind, data, logical_rows: rows, logical_cols: cols })
    }

    pub fn from_f64(rows: usize, cols: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), rows * cols, "entry count");
        let data = values.iter().map(|&v| Scalar::F64(v)).collect();
        Matrix { rows, cols, kind: ScalarKind::F64, data, logical_rows: rows, logical_cols: cols }
    }

    pub fn from_i64(rows: usize, cols: usize, values: &[i64], kind: ScalarKind) -> Self {
        assert_eq!(values.len(), rows * cols, "entry count");
        let data = values.iter().map(|&v| Scalar::from_i64(v, kind)).collect();
        Matrix { rows, cols, kind, data, logical_rows: rows, logical_cols: cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn logical_dims(&self) -> (usize, usize) {
        (self.logical_rows, self.logical_cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Order of a square matrix.
    pub fn order(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &Scalar {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Scalar) {
        debug_assert_eq!(v.kind(), self.kind);
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn to_kind(&self, kind: ScalarKind) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            kind,
            data: self.data.iter().map(|s| s.to_kind(kind)).collect(),
            logical_rows: self.logical_rows,
            logical_cols: self.logical_cols,
        }
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.data.iter().map(Scalar::to_f64).collect()
    }

    /// Copy of the `r x c` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, r: usize, c: usize) -> Matrix {
        assert!(r0 + r <= self.rows && c0 + c <= self.cols, "block out of range");
        let mut data = Vec::with_capacity(r * c);
        for i in r0..r0 + r {
            data.extend_from_slice(&self.data[i * self.cols + c0..i * self.cols + c0 + c]);
        }
        Matrix { rows: r, cols: c, kind: self.kind, data, logical_rows: r, logical_cols: c }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Matrix) {
        assert!(r0 + b.rows <= self.rows && c0 + b.cols <= self.cols, "block out of range");
        for i in 0..b.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + b.cols].clone_from_slice(&b.data[i * b.cols..(i + 1) * b.cols]);
        }
    }

    /// Pads to the smallest square power-of-two order that holds the
    /// matrix. Logical dimensions are kept for [`Matrix::crop`].
    pub fn pad_to_pow2(&self, scheme: PaddingScheme) -> Matrix {
        let target = self.rows.max(self.cols).max(1).next_power_of_two();
        if self.rows == target && self.cols == target {
            return self.clone();
        }
        let mut out = Matrix::zeros(target, target, self.kind);
        out.set_block(0, 0, self);
        if scheme == PaddingScheme::IdentityPad {
            for i in self.rows.min(self.cols)..target {
                if i >= self.rows || i >= self.cols {
                    out.data[i * target + i] = Scalar::one(self.kind);
                }
            }
        }
        out.logical_rows = self.logical_rows;
        out.logical_cols = self.logical_cols;
        out
    }

    /// Cuts back to the logical dimensions recorded at padding time.
    pub fn crop(&self) -> Matrix {
        self.block(0, 0, self.logical_rows, self.logical_cols)
    }

    pub fn split(&self) -> Result<Quadrants> {
        if !self.is_square() || !self.rows.is_multiple_of(2) {
            return Err(Error::InvalidShape(format!(
                "split needs a square matrix of even order, got {}x{}",
                self.rows, self.cols
            )));
        }
        let h = self.rows / 2;
        Ok(Quadrants {
            a0: self.block(0, 0, h, h),
            a1: self.block(0, h, h, h),
            a2: self.block(h, 0, h, h),
            a3: self.block(h, h, h, h),
        })
    }

    pub fn join(q: &Quadrants) -> Result<Matrix> {
        let h = q.a0.rows;
        let blocks = [&q.a0, &q.a1, &q.a2, &q.a3];
        if blocks.iter().any(|b| b.rows != h || b.cols != h) {
            return Err(Error::InvalidShape("join needs four square blocks of one order".into()));
        }
        if blocks.iter().any(|b| b.kind != q.a0.kind) {
            return Err(Error::InvalidShape("join of mixed scalar kinds".into()));
        }
        let mut out = Matrix::zeros(2 * h, 2 * h, q.a0.kind);
        out.set_block(0, 0, &q.a0);
        out.set_block(0, h, &q.a1);
        out.set_block(h, 0, &q.a2);
        out.set_block(h, h, &q.a3);
        Ok(out)
    }

    fn check_same_shape(&self, other: &Matrix, what: &str) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::InvalidShape(format!(
                "{what}: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        if self.kind != other.kind {
            return Err(Error::InvalidShape(format!("{what}: mixed scalar kinds")));
        }
        Ok(())
    }

    /// `self + sign * other` with `sign` in {+1, -1}.
    pub fn add_signed(&self, other: &Matrix, sign: i8) -> Result<Matrix> {
        self.check_same_shape(other, "add")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| if sign >= 0 { a + b } else { a - b })
            .collect();
        Ok(Matrix { data, ..self.clone_shape() })
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.add_signed(other, 1)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.add_signed(other, -1)
    }

    pub fn negate(&self) -> Matrix {
        Matrix { data: self.data.iter().map(|a| -a).collect(), ..self.clone_shape() }
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.data[i * self.cols + j].clone());
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            kind: self.kind,
            data,
            logical_rows: self.logical_cols,
            logical_cols: self.logical_rows,
        }
    }

    fn clone_shape(&self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            kind: self.kind,
            data: Vec::new(),
            logical_rows: self.logical_rows,
            logical_cols: self.logical_cols,
        }
    }

    /// sqrt(Σ (a_ij - b_ij)²); rational differences are taken exactly
    /// before conversion.
    pub fn frobenius_distance(&self, other: &Matrix) -> Result<f64> {
        Ok(self.sub(other)?.frobenius_norm())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|s| s.to_f64().powi(2)).sum::<f64>().sqrt()
    }

    pub fn bitwise_eq(&self, other: &Matrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.bitwise_eq(b))
    }

    /// Entries strictly above the diagonal are exactly zero.
    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self.get(i, j).is_zero()))
    }

    /// Entries strictly below the diagonal are exactly zero.
    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self.get(i, j).is_zero()))
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let v = self.get(i, j);
                    if i == j { *v == Scalar::one(self.kind) } else { v.is_zero() }
                })
            })
    }

    /// Serializes in the line-oriented text format:
    /// `rows cols kind` then one line per row.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {} {}", self.rows, self.cols, self.kind);
        for i in 0..self.rows {
            let row: Vec<String> =
                (0..self.cols).map(|j| self.get(i, j).to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Matrix> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty matrix text".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let rows: usize = fields[0].parse().map_err(|_| Error::Parse("bad row count".into()))?;
        let cols: usize = fields[1].parse().map_err(|_| Error::Parse("bad column count".into()))?;
        let kind: ScalarKind = fields[2].parse()?;
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {i}")))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(Scalar::parse(tok, kind)?);
            }
            if data.len() - before != cols {
                return Err(Error::Parse(format!("row {i} has {} entries", data.len() - before)));
            }
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing rows".into()));
        }
        Matrix::from_scalars(rows, cols, kind, data)
    }
}

/// Serialized as the text format, so traces and reports stay readable
/// and floats round-trip exactly.
impl serde::Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_text())
    }
}

impl<'de> serde::Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Matrix::from_text(&text).map_err(serde::de::Error::custom)
    }
}
