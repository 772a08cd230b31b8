//! Drops, Amines and one-level expansion of every recursive drop type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{
    cholesky_block, inv_lower_block, inv_strassen_block, mul_accum_recursive, mul_neg, multiply, KernelConfig,
    OpCounter, Position,
};
use crate::matrix::Matrix;
use crate::qr::{qp_pair_block, qr_g_block};

/// Address of a drop: processor, Amine within that processor's Pine, and
/// drop within the Amine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pad {
    pub proc_id: usize,
    pub amine_id: usize,
    pub drop_id: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DropType {
    /// `A·B + C`
    MulAccum,
    Mul,
    /// `−A·B`
    MulNeg,
    /// Inverse of a lower triangular matrix.
    InvTri,
    /// `(H, H⁻¹)` of a symmetric positive definite matrix.
    Cholesky,
    InvStrassen,
    /// `(Q, R)`
    QRG,
    /// `(T, P)` for a dense block over an upper triangular block.
    QP,
    MatAdd,
    MatTranspose,
}

impl DropType {
    pub fn arity(self) -> usize {
        match self {
            DropType::MulAccum => 3,
            DropType::Mul | DropType::MulNeg | DropType::QP | DropType::MatAdd => 2,
            _ => 1,
        }
    }

    /// Orders of the outputs when the operands have order `n`.
    pub fn output_orders(self, n: usize) -> Vec<usize> {
        match self {
            DropType::Cholesky | DropType::QRG => vec![n, n],
            DropType::QP => vec![2 * n, n],
            _ => vec![n],
        }
    }

    /// Element-wise drops are never split.
    pub fn is_recursive(self) -> bool {
        !matches!(self, DropType::MatAdd | DropType::MatTranspose)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropState {
    Waiting,
    Ready,
    Expanded,
    Sent(usize),
    Done,
}

/// Global coordinates of a diagonal sub-problem, used only so that pivot
/// failures name indices of the original matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub offset: usize,
    pub total: usize,
}

/// A schedulable unit of work as it travels between nodes: the operands
/// plus the address its results must be written to (`None` for the root).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub ret: Option<Pad>,
    pub drop_type: DropType,
    pub rec_num: usize,
    pub origin: Origin,
    pub in_data: Vec<Matrix>,
}

impl Task {
    pub fn root(drop_type: DropType, in_data: Vec<Matrix>) -> Task {
        let n = in_data.first().map_or(0, Matrix::rows);
        Task { ret: None, drop_type, rec_num: 0, origin: Origin { offset: 0, total: n }, in_data }
    }

    pub fn order(&self) -> usize {
        self.in_data.first().map_or(0, Matrix::rows)
    }

    pub fn is_leaf(&self, leaf_size: usize) -> bool {
        !self.drop_type.is_recursive() || self.order() <= leaf_size
    }

    /// Operand count, shape and structural checks for a task submitted
    /// from outside the runtime.
    pub fn validate(&self) -> Result<()> {
        let ty = self.drop_type;
        if self.in_data.len() != ty.arity() {
            return Err(Error::InvalidShape(format!("{ty:?} takes {} operands, got {}", ty.arity(), self.in_data.len())));
        }
        let n = self.order();
        let kind = self.in_data[0].kind();
        for m in &self.in_data {
            if !m.is_square() || m.rows() != n || !n.is_power_of_two() || m.kind() != kind {
                return Err(Error::InvalidShape(format!(
                    "{ty:?} needs square operands of one power-of-two order and scalar kind"
                )));
            }
        }
        let a = &self.in_data[0];
        let needs_f64 = matches!(ty, DropType::Cholesky | DropType::QRG | DropType::QP);
        if needs_f64 && kind != crate::ScalarKind::F64 {
            return Err(Error::UnsupportedScalar(format!("{ty:?} needs f64 scalars")));
        }
        match ty {
            DropType::InvTri => {
                if !a.is_lower_triangular() {
                    return Err(Error::PreconditionViolated("matrix is not lower triangular".into()));
                }
                if let Some(i) = (0..n).find(|&i| a.get(i, i).is_zero()) {
                    return Err(Error::Singular(i));
                }
            }
            DropType::Cholesky if !a.transpose().bitwise_eq(a) => {
                return Err(Error::PreconditionViolated("matrix is not symmetric".into()));
            }
            DropType::QP if !self.in_data[1].is_upper_triangular() => {
                return Err(Error::PreconditionViolated("lower block of qp input is not upper triangular".into()));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Computes a drop without expanding it, with the same kernels the direct
/// (non-distributed) algorithms use.
pub fn compute_direct(task: &Task, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Vec<Matrix>> {
    let d = &task.in_data;
    let o = task.origin;
    Ok(match task.drop_type {
        DropType::MulAccum => vec![mul_accum_recursive(&d[0], &d[1], &d[2], cfg, ctr)?],
        DropType::Mul => vec![multiply(&d[0], &d[1], cfg, ctr)?],
        DropType::MulNeg => vec![mul_neg(&d[0], &d[1], cfg, ctr)?],
        DropType::InvTri => vec![inv_lower_block(&d[0], cfg, ctr)?],
        DropType::Cholesky => {
            let (h, hi) = cholesky_block(&d[0], o.offset, cfg, ctr)?;
            vec![h, hi]
        }
        DropType::InvStrassen => {
            vec![inv_strassen_block(&d[0], Position { offset: o.offset, total: o.total }, cfg, ctr)?]
        }
        DropType::QRG => {
            let (q, r) = qr_g_block(&d[0], cfg, ctr)?;
            vec![q, r]
        }
        DropType::QP => {
            let (t, p) = qp_pair_block(&d[0], &d[1], cfg, ctr)?;
            vec![t, p]
        }
        DropType::MatAdd => {
            let n = d[0].rows();
            ctr.addsub_count += (n * n) as u64;
            vec![d[0].add(&d[1])?]
        }
        DropType::MatTranspose => vec![d[0].transpose()],
    })
}

/// Which part of a produced matrix travels along an arc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum View {
    Whole,
    /// Quadrant 0..4 in row-major order.
    Quad(u8),
}

impl View {
    fn apply(self, m: &Matrix) -> Result<Matrix> {
        match self {
            View::Whole => Ok(m.clone()),
            View::Quad(k) => {
                let h = m.rows() / 2;
                if !m.is_square() || !m.rows().is_multiple_of(2) {
                    return Err(Error::InvalidShape("quadrant of an odd or non-square matrix".into()));
                }
                let (r, c) = ((k as usize / 2) * h, (k as usize % 2) * h);
                Ok(m.block(r, c, h, h))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    /// Input slot of another drop of the same Amine.
    Drop { drop_id: usize, slot: usize },
    /// Block of one of the Amine's outputs.
    Out { slot: usize, block: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arc {
    pub target: Target,
    pub view: View,
}

#[derive(Debug, Clone)]
pub struct Drop {
    pub pad: Pad,
    pub drop_type: DropType,
    pub in_data: Vec<Option<Matrix>>,
    pub out_data: Vec<Option<Matrix>>,
    pub rec_num: usize,
    pub origin: Origin,
    /// Per output slot, where the result goes.
    pub arcs: Vec<Vec<Arc>>,
    pub state: DropState,
}

impl Drop {
    pub fn inputs_complete(&self) -> bool {
        self.in_data.iter().all(Option::is_some)
    }

    /// The drop as a task addressed back to itself.
    pub fn to_task(&self) -> Task {
        Task {
            ret: Some(self.pad),
            drop_type: self.drop_type,
            rec_num: self.rec_num,
            origin: self.origin,
            in_data: self.in_data.iter().map(|m| m.clone().expect("ready drop")).collect(),
        }
    }
}

/// One output of an Amine, assembled from a `dim x dim` grid of blocks.
#[derive(Debug, Clone)]
pub struct OutGrid {
    pub dim: usize,
    pub blocks: Vec<Option<Matrix>>,
    pub negate: bool,
}

impl OutGrid {
    fn assemble(&self) -> Result<Matrix> {
        let first = self.blocks[0].as_ref().expect("complete grid");
        let (b, kind) = (first.rows(), first.kind());
        let mut m = Matrix::zeros(self.dim * b, self.dim * b, kind);
        for (k, blk) in self.blocks.iter().enumerate() {
            let blk = blk.as_ref().expect("complete grid");
            m.set_block((k / self.dim) * b, (k % self.dim) * b, blk);
        }
        Ok(if self.negate { m.negate() } else { m })
    }
}

/// The expansion of one drop into a graph of child drops.
#[derive(Debug, Clone)]
pub struct Amine {
    /// `None` when the Amine computes the root task.
    pub return_pad: Option<Pad>,
    pub amine_type: DropType,
    pub in_data: Vec<Matrix>,
    pub out_data: Vec<Option<Matrix>>,
    pub outs: Vec<OutGrid>,
    pub drops: Vec<Drop>,
    /// Set when the node the result was for has failed.
    pub abandoned: bool,
}

impl Amine {
    /// Stamps processor and Amine ids into every drop address.
    pub fn place(&mut self, proc_id: usize, amine_id: usize) {
        for d in &mut self.drops {
            d.pad.proc_id = proc_id;
            d.pad.amine_id = amine_id;
        }
    }

    pub fn is_complete(&self) -> bool {
        self.out_data.iter().all(Option::is_some)
    }

    pub fn ready_drops(&self) -> Vec<usize> {
        self.drops.iter().filter(|d| d.state == DropState::Ready).map(|d| d.pad.drop_id).collect()
    }

    /// Topological order of the drops, or `None` if the arcs have a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.drops.len();
        let mut indeg = vec![0usize; n];
        for d in &self.drops {
            for arcs in &d.arcs {
                for a in arcs {
                    if let Target::Drop { drop_id, .. } = a.target {
                        indeg[drop_id] += 1;
                    }
                }
            }
        }
        let mut stack: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = stack.pop() {
            order.push(i);
            for arcs in &self.drops[i].arcs {
                for a in arcs {
                    if let Target::Drop { drop_id, .. } = a.target {
                        indeg[drop_id] -= 1;
                        if indeg[drop_id] == 0 {
                            stack.push(drop_id);
                        }
                    }
                }
            }
        }
        (order.len() == n).then_some(order)
    }
}

/// Routes the outputs of `drop_id` along its arcs and marks it Done.
/// Returns the drops whose last missing input just arrived; when the Amine
/// output becomes complete it is assembled into `amine.out_data`.
///
/// A repeated delivery is accepted only if it is bitwise identical to the
/// first one, in which case it is a no-op.
pub fn write_results_to_amine(amine: &mut Amine, drop_id: usize, results: Vec<Matrix>) -> Result<Vec<usize>> {
    let drop = amine
        .drops
        .get(drop_id)
        .ok_or_else(|| Error::InvalidIndex(format!("drop {drop_id} not in Amine")))?;
    if results.len() != drop.out_data.len() {
        return Err(Error::InvalidShape(format!(
            "drop {drop_id} has {} outputs, got {}",
            drop.out_data.len(),
            results.len()
        )));
    }
    if drop.state == DropState::Done {
        let same = drop
            .out_data
            .iter()
            .zip(&results)
            .all(|(old, new)| old.as_ref().is_some_and(|o| o.bitwise_eq(new)));
        return if same {
            Ok(Vec::new())
        } else {
            Err(Error::DuplicateWrite(format!("drop {drop_id} already holds a different result")))
        };
    }
    let arcs = drop.arcs.clone();
    let mut ready = Vec::new();
    for (slot, out_arcs) in arcs.iter().enumerate() {
        for arc in out_arcs {
            let value = arc.view.apply(&results[slot])?;
            match arc.target {
                Target::Drop { drop_id: t, slot: s } => {
                    let target = &mut amine.drops[t];
                    if let Some(old) = &target.in_data[s] {
                        if !old.bitwise_eq(&value) {
                            return Err(Error::DuplicateWrite(format!("input {s} of drop {t} is occupied")));
                        }
                        continue;
                    }
                    target.in_data[s] = Some(value);
                    if target.state == DropState::Waiting && target.inputs_complete() {
                        target.state = DropState::Ready;
                        ready.push(t);
                    }
                }
                Target::Out { slot: o, block } => {
                    let cell = &mut amine.outs[o].blocks[block];
                    if let Some(old) = cell {
                        if !old.bitwise_eq(&value) {
                            return Err(Error::DuplicateWrite(format!("block {block} of output {o} is occupied")));
                        }
                        continue;
                    }
                    *cell = Some(value);
                }
            }
        }
    }
    let drop = &mut amine.drops[drop_id];
    drop.out_data = results.into_iter().map(Some).collect();
    drop.state = DropState::Done;
    for i in 0..amine.outs.len() {
        if amine.out_data[i].is_none() && amine.outs[i].blocks.iter().all(Option::is_some) {
            amine.out_data[i] = Some(amine.outs[i].assemble()?);
        }
    }
    Ok(ready)
}

/// Source of a value inside an expansion recipe.
#[derive(Debug, Clone, Copy)]
enum S {
    /// Quadrant `k` of input `i`.
    InQ(usize, u8),
    /// Output `slot` of child drop `d`.
    D(usize, usize),
    /// Quadrant `k` of output `slot` of child drop `d`.
    DQ(usize, usize, u8),
    Zero,
}

struct Recipe {
    drops: Vec<(DropType, Vec<S>, Option<Origin>)>,
    outs: Vec<(usize, Vec<S>)>,
    negate: bool,
}

impl Recipe {
    fn new() -> Self {
        Recipe { drops: Vec::new(), outs: Vec::new(), negate: false }
    }

    fn add(&mut self, ty: DropType, inputs: &[S]) -> usize {
        self.drops.push((ty, inputs.to_vec(), None));
        self.drops.len() - 1
    }

    fn add_at(&mut self, ty: DropType, inputs: &[S], origin: Origin) -> usize {
        self.drops.push((ty, inputs.to_vec(), Some(origin)));
        self.drops.len() - 1
    }

    fn out(&mut self, dim: usize, blocks: &[S]) {
        self.outs.push((dim, blocks.to_vec()));
    }
}

const Q0: u8 = 0;
const Q1: u8 = 1;
const Q2: u8 = 2;
const Q3: u8 = 3;

/// `A·B (+ C)` by the quadrant equations: the four inner products
/// `A₁B₂, A₁B₃, A₃B₂, A₃B₃` (accumulating into `C` when present) feed the
/// four outer ones `A₀B₀, A₀B₁, A₂B₀, A₂B₁`.
fn recipe_mul(accum: bool) -> Recipe {
    let mut r = Recipe::new();
    let (a, b) = (0, 1);
    let pairs = [(Q1, Q2), (Q1, Q3), (Q3, Q2), (Q3, Q3)];
    let inner: Vec<usize> = pairs
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            if accum {
                r.add(DropType::MulAccum, &[S::InQ(a, x), S::InQ(b, y), S::InQ(2, i as u8)])
            } else {
                r.add(DropType::Mul, &[S::InQ(a, x), S::InQ(b, y)])
            }
        })
        .collect();
    let outer = [(Q0, Q0), (Q0, Q1), (Q2, Q0), (Q2, Q1)];
    let outs: Vec<S> = outer
        .iter()
        .zip(&inner)
        .map(|(&(x, y), &t)| S::D(r.add(DropType::MulAccum, &[S::InQ(a, x), S::InQ(b, y), S::D(t, 0)]), 0))
        .collect();
    r.out(2, &outs);
    r
}

fn recipe_inv_tri() -> Recipe {
    let mut r = Recipe::new();
    let f = r.add(DropType::InvTri, &[S::InQ(0, Q0)]);
    let g = r.add(DropType::InvTri, &[S::InQ(0, Q3)]);
    let h = r.add(DropType::Mul, &[S::InQ(0, Q2), S::D(f, 0)]);
    let x = r.add(DropType::MulNeg, &[S::D(g, 0), S::D(h, 0)]);
    r.out(2, &[S::D(f, 0), S::Zero, S::D(x, 0), S::D(g, 0)]);
    r
}

fn recipe_cholesky(o: Origin, h: usize) -> Recipe {
    let mut r = Recipe::new();
    let b = r.add_at(DropType::Cholesky, &[S::InQ(0, Q0)], o);
    let a1t = r.add(DropType::MatTranspose, &[S::InQ(0, Q1)]);
    let bit = r.add(DropType::MatTranspose, &[S::D(b, 1)]);
    let c = r.add(DropType::Mul, &[S::D(a1t, 0), S::D(bit, 0)]);
    let ct = r.add(DropType::MatTranspose, &[S::D(c, 0)]);
    let ncc = r.add(DropType::MulNeg, &[S::D(c, 0), S::D(ct, 0)]);
    let f = r.add(DropType::MatAdd, &[S::InQ(0, Q3), S::D(ncc, 0)]);
    let d = r.add_at(DropType::Cholesky, &[S::D(f, 0)], Origin { offset: o.offset + h, ..o });
    let e = r.add(DropType::Mul, &[S::D(c, 0), S::D(b, 1)]);
    let corner = r.add(DropType::MulNeg, &[S::D(d, 1), S::D(e, 0)]);
    r.out(2, &[S::D(b, 0), S::Zero, S::D(c, 0), S::D(d, 0)]);
    r.out(2, &[S::D(b, 1), S::Zero, S::D(corner, 0), S::D(d, 1)]);
    r
}

fn recipe_inv_strassen(o: Origin, h: usize) -> Recipe {
    let mut r = Recipe::new();
    let p = r.add_at(DropType::InvStrassen, &[S::InQ(0, Q0)], o);
    let m1 = r.add(DropType::MulNeg, &[S::D(p, 0), S::InQ(0, Q1)]);
    let m2 = r.add(DropType::MulNeg, &[S::InQ(0, Q2), S::D(p, 0)]);
    let m3 = r.add(DropType::Mul, &[S::D(m2, 0), S::InQ(0, Q1)]);
    let s = r.add(DropType::MatAdd, &[S::InQ(0, Q3), S::D(m3, 0)]);
    let m4 = r.add_at(DropType::InvStrassen, &[S::D(s, 0)], Origin { offset: o.offset + h, ..o });
    let m5 = r.add(DropType::Mul, &[S::D(m4, 0), S::D(m2, 0)]);
    let m6 = r.add(DropType::MulAccum, &[S::D(m1, 0), S::D(m5, 0), S::D(p, 0)]);
    let tr = r.add(DropType::Mul, &[S::D(m1, 0), S::D(m4, 0)]);
    r.out(2, &[S::D(m6, 0), S::D(tr, 0), S::D(m5, 0), S::D(m4, 0)]);
    r
}

fn recipe_qrg() -> Recipe {
    let mut r = Recipe::new();
    let (a, b, c, d) = (S::InQ(0, Q0), S::InQ(0, Q1), S::InQ(0, Q2), S::InQ(0, Q3));
    let qc = r.add(DropType::QRG, &[c]);
    let q1t = r.add(DropType::MatTranspose, &[S::D(qc, 0)]);
    let d1 = r.add(DropType::Mul, &[S::D(q1t, 0), d]);
    let qp = r.add(DropType::QP, &[a, S::D(qc, 1)]);
    let m0 = r.add(DropType::Mul, &[S::DQ(qp, 0, Q0), b]);
    let b1 = r.add(DropType::MulAccum, &[S::DQ(qp, 0, Q1), S::D(d1, 0), S::D(m0, 0)]);
    let m2 = r.add(DropType::Mul, &[S::DQ(qp, 0, Q2), b]);
    let d2 = r.add(DropType::MulAccum, &[S::DQ(qp, 0, Q3), S::D(d1, 0), S::D(m2, 0)]);
    let qd = r.add(DropType::QRG, &[S::D(d2, 0)]);
    let t2t = r.add(DropType::MatTranspose, &[S::D(qp, 0)]);
    let top_right = r.add(DropType::Mul, &[S::DQ(t2t, 0, Q1), S::D(qd, 0)]);
    let bottom_left = r.add(DropType::Mul, &[S::D(qc, 0), S::DQ(t2t, 0, Q2)]);
    let s3q3 = r.add(DropType::Mul, &[S::DQ(t2t, 0, Q3), S::D(qd, 0)]);
    let bottom_right = r.add(DropType::Mul, &[S::D(qc, 0), S::D(s3q3, 0)]);
    r.out(2, &[S::DQ(t2t, 0, Q0), S::D(top_right, 0), S::D(bottom_left, 0), S::D(bottom_right, 0)]);
    r.out(2, &[S::D(qp, 1), S::D(b1, 0), S::Zero, S::D(qd, 1)]);
    r
}

fn recipe_qp() -> Recipe {
    use DropType::{Mul, MulAccum, QP};
    let mut r = Recipe::new();
    let (a00, a01, a10, a11) = (S::InQ(0, Q0), S::InQ(0, Q1), S::InQ(0, Q2), S::InQ(0, Q3));
    let (b00, b01, b11) = (S::InQ(1, Q0), S::InQ(1, Q1), S::InQ(1, Q3));

    let ld = r.add(QP, &[a10, b00]);
    let l = |k| S::DQ(ld, 0, k);
    let m1 = r.add(Mul, &[l(Q0), a11]);
    let a11p = r.add(MulAccum, &[l(Q1), b01, S::D(m1, 0)]);
    let m3 = r.add(Mul, &[l(Q2), a11]);
    let b01p = r.add(MulAccum, &[l(Q3), b01, S::D(m3, 0)]);

    let lu = r.add(QP, &[a00, S::D(ld, 1)]);
    let rd = r.add(QP, &[S::D(b01p, 0), b11]);
    let u = |k| S::DQ(lu, 0, k);
    let dq = |k| S::DQ(rd, 0, k);
    let m7 = r.add(Mul, &[u(Q0), a01]);
    let a01p = r.add(MulAccum, &[u(Q1), S::D(a11p, 0), S::D(m7, 0)]);
    let m9 = r.add(Mul, &[u(Q2), a01]);
    let a11pp = r.add(MulAccum, &[u(Q3), S::D(a11p, 0), S::D(m9, 0)]);

    let ru = r.add(QP, &[S::D(a11pp, 0), S::D(rd, 1)]);
    let rq = |k| S::DQ(ru, 0, k);

    let x01 = r.add(Mul, &[u(Q1), l(Q0)]);
    let x02 = r.add(Mul, &[u(Q1), l(Q1)]);
    let x11 = r.add(Mul, &[u(Q3), l(Q0)]);
    let x12 = r.add(Mul, &[u(Q3), l(Q1)]);
    let x21 = r.add(Mul, &[dq(Q0), l(Q2)]);
    let x22 = r.add(Mul, &[dq(Q0), l(Q3)]);
    let x31 = r.add(Mul, &[dq(Q2), l(Q2)]);
    let x32 = r.add(Mul, &[dq(Q2), l(Q3)]);

    let mut rows = Vec::new();
    for (ri, rj) in [(rq(Q0), rq(Q1)), (rq(Q2), rq(Q3))] {
        let c0 = r.add(Mul, &[ri, u(Q2)]);
        let m = r.add(Mul, &[ri, S::D(x11, 0)]);
        let c1 = r.add(MulAccum, &[rj, S::D(x21, 0), S::D(m, 0)]);
        let m = r.add(Mul, &[ri, S::D(x12, 0)]);
        let c2 = r.add(MulAccum, &[rj, S::D(x22, 0), S::D(m, 0)]);
        let c3 = r.add(Mul, &[rj, dq(Q1)]);
        rows.push([c0, c1, c2, c3].map(|x| S::D(x, 0)));
    }
    let mut t = vec![u(Q0), S::D(x01, 0), S::D(x02, 0), S::Zero];
    t.extend(rows[0]);
    t.extend(rows[1]);
    t.extend([S::Zero, S::D(x31, 0), S::D(x32, 0), dq(Q3)]);
    r.out(4, &t);
    r.out(2, &[S::D(lu, 1), S::D(a01p, 0), S::Zero, S::D(ru, 1)]);
    r
}

/// Expands a task one recursion level into an Amine whose child drops
/// reproduce, operation for operation, the direct kernel's recursion.
/// Drop addresses carry processor and Amine id 0 until [`Amine::place`].
pub fn expand(task: &Task, cfg: &KernelConfig) -> Result<Amine> {
    let n = task.order();
    if task.is_leaf(cfg.leaf_size) || n < 2 {
        return Err(Error::NotExpandable(format!(
            "{:?} of order {n} is at or below leaf size {}",
            task.drop_type, cfg.leaf_size
        )));
    }
    let h = n / 2;
    let o = task.origin;
    let mut recipe = match task.drop_type {
        DropType::Mul => recipe_mul(false),
        DropType::MulNeg => {
            let mut r = recipe_mul(false);
            r.negate = true;
            r
        }
        DropType::MulAccum => recipe_mul(true),
        DropType::InvTri => recipe_inv_tri(),
        DropType::Cholesky => recipe_cholesky(o, h),
        DropType::InvStrassen => recipe_inv_strassen(o, h),
        DropType::QRG => recipe_qrg(),
        DropType::QP => recipe_qp(),
        DropType::MatAdd | DropType::MatTranspose => unreachable!("leaf types"),
    };
    build(task, &mut recipe)
}

fn build(task: &Task, recipe: &mut Recipe) -> Result<Amine> {
    let input = |i: usize, view: View| view.apply(&task.in_data[i]);
    let n = task.order();
    let kind = task.in_data[0].kind();
    let mut drops: Vec<Drop> = recipe
        .drops
        .iter()
        .enumerate()
        .map(|(id, (ty, ins, origin))| Drop {
            pad: Pad { proc_id: 0, amine_id: 0, drop_id: id },
            drop_type: *ty,
            in_data: vec![None; ins.len()],
            out_data: vec![None; ty.output_orders(1).len()],
            rec_num: task.rec_num + 1,
            origin: origin.unwrap_or(task.origin),
            arcs: vec![Vec::new(); ty.output_orders(1).len()],
            state: DropState::Waiting,
        })
        .collect();

    for (id, (_, ins, _)) in recipe.drops.iter().enumerate() {
        for (slot, src) in ins.iter().enumerate() {
            let target = Target::Drop { drop_id: id, slot };
            match *src {
                S::InQ(i, k) => drops[id].in_data[slot] = Some(input(i, View::Quad(k))?),
                S::D(d, s) => drops[d].arcs[s].push(Arc { target, view: View::Whole }),
                S::DQ(d, s, k) => drops[d].arcs[s].push(Arc { target, view: View::Quad(k) }),
                S::Zero => unreachable!("zero operand"),
            }
        }
    }

    let out_orders = task.drop_type.output_orders(n);
    let mut outs = Vec::with_capacity(recipe.outs.len());
    for (slot, (dim, blocks)) in recipe.outs.iter().enumerate() {
        let b = out_orders[slot] / dim;
        let mut cells = vec![None; blocks.len()];
        for (block, src) in blocks.iter().enumerate() {
            let target = Target::Out { slot, block };
            match *src {
                S::InQ(i, k) => cells[block] = Some(input(i, View::Quad(k))?),
                S::D(d, s) => drops[d].arcs[s].push(Arc { target, view: View::Whole }),
                S::DQ(d, s, k) => drops[d].arcs[s].push(Arc { target, view: View::Quad(k) }),
                S::Zero => cells[block] = Some(Matrix::zeros(b, b, kind)),
            }
        }
        outs.push(OutGrid { dim: *dim, blocks: cells, negate: recipe.negate });
    }

    for d in &mut drops {
        if d.inputs_complete() {
            d.state = DropState::Ready;
        }
    }
    Ok(Amine {
        return_pad: task.ret,
        amine_type: task.drop_type,
        in_data: task.in_data.clone(),
        out_data: vec![None; outs.len()],
        outs,
        drops,
        abandoned: false,
    })
}

/// Computes a task on one node by expanding every drop above leaf size
/// and running the Amines in topological order. Used as a reference for
/// the distributed execution.
pub fn execute_local(task: &Task, cfg: &KernelConfig, ctr: &mut OpCounter) -> Result<Vec<Matrix>> {
    if task.is_leaf(cfg.leaf_size) {
        return compute_direct(task, cfg, ctr);
    }
    let mut amine = expand(task, cfg)?;
    let order = amine.topological_order().ok_or_else(|| Error::PreconditionViolated("cyclic Amine".into()))?;
    for id in order {
        let sub = amine.drops[id].to_task();
        let out = execute_local(&sub, cfg, ctr)?;
        write_results_to_amine(&mut amine, id, out)?;
    }
    amine.out_data.into_iter().map(|m| m.ok_or_else(|| Error::PreconditionViolated("incomplete Amine".into()))).collect()
}
