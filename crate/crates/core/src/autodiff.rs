//! Define-by-run reverse-mode automatic differentiation.
//!
//! Every node on a [`Tape`] holds a dense `f64` matrix; column vectors are
//! `n x 1` and scalars are `1 x 1`. Nodes are appended in evaluation order,
//! so the tape itself is a topological order and the backward pass is a
//! single reverse sweep over it.
//!
//! ```
//! use vqs::autodiff::Tape;
//!
//! let tape = Tape::new();
//! let x = tape.scalar(3.0);
//! let y = x.square();
//! let grads = tape.backward(y).unwrap();
//! assert_eq!(grads.scalar_wrt(x), 6.0);
//! ```

use std::cell::RefCell;

use ndarray::linalg::general_mat_mul;
use ndarray::{Array2, ArrayView2, Axis};

use crate::error::AutodiffError;

/// How a node was produced. Operand indices always point to earlier nodes.
#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Scale(usize, f64),
    MatVec(usize, usize),
    MatMul(usize, usize),
    /// `x * w^T + b`, with `b` a `1 x out` row broadcast over the batch.
    Affine(usize, usize, usize),
    Dot(usize, usize),
    Relu(usize),
    Sin(usize),
    Square(usize),
    Sum(usize),
}

#[derive(Debug)]
struct Node {
    value: Array2<f64>,
    op: Op,
    requires_grad: bool,
}

/// Node storage for one forward/backward evaluation.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
}

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

/// Gradients of one scalar root with respect to every node of the tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
    shapes: Vec<(usize, usize)>,
}

impl Gradients {
    /// Gradient with respect to the leaf `var`; zero when the root does not
    /// depend on it. Interior nodes are not retained and also report zero.
    pub fn wrt(&self, var: Var<'_>) -> Array2<f64> {
        match &self.grads[var.id] {
            Some(g) => g.clone(),
            None => Array2::zeros(self.shapes[var.id]),
        }
    }

    pub fn scalar_wrt(&self, var: Var<'_>) -> f64 {
        self.wrt(var)[[0, 0]]
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Trainable leaf.
    pub fn variable(&self, value: Array2<f64>) -> Var<'_> {
        self.push(value, Op::Leaf, true)
    }

    /// Leaf excluded from differentiation.
    pub fn constant(&self, value: Array2<f64>) -> Var<'_> {
        self.push(value, Op::Leaf, false)
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.variable(Array2::from_elem((1, 1), value))
    }

    /// Column vector leaf.
    pub fn vector(&self, values: &[f64]) -> Var<'_> {
        self.variable(column(values))
    }

    fn push(&self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        let id = nodes.len();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var { tape: self, id }
    }

    fn value_of(&self, id: usize) -> std::cell::Ref<'_, Array2<f64>> {
        std::cell::Ref::map(self.nodes.borrow(), |n| &n[id].value)
    }

    fn needs(&self, ids: &[usize]) -> bool {
        let nodes = self.nodes.borrow();
        ids.iter().any(|&i| nodes[i].requires_grad)
    }

    fn check_same(&self, a: Var<'_>, b: Var<'_>) -> Result<(), AutodiffError> {
        if !std::ptr::eq(a.tape, self) || !std::ptr::eq(b.tape, self) {
            return Err(AutodiffError::ForeignTape);
        }
        Ok(())
    }

    fn binary<'t>(
        &'t self,
        a: Var<'t>,
        b: Var<'t>,
        op: Op,
        compute: impl FnOnce(&Array2<f64>, &Array2<f64>) -> Result<Array2<f64>, AutodiffError>,
    ) -> Result<Var<'t>, AutodiffError> {
        self.check_same(a, b)?;
        let value = {
            let av = self.value_of(a.id);
            let bv = self.value_of(b.id);
            compute(&av, &bv)?
        };
        let rg = self.needs(&[a.id, b.id]);
        Ok(self.push(value, op, rg))
    }

    fn unary<'t>(&'t self, a: Var<'t>, op: Op, f: impl Fn(f64) -> f64) -> Var<'t> {
        let value = self.value_of(a.id).mapv(f);
        let rg = self.needs(&[a.id]);
        self.push(value, op, rg)
    }

    /// Reverse sweep from a scalar root.
    ///
    /// Gradients live in the returned map, never on the tape, so repeated
    /// calls on the same root give identical results.
    pub fn backward(&self, root: Var<'_>) -> Result<Gradients, AutodiffError> {
        if !std::ptr::eq(root.tape, self) {
            return Err(AutodiffError::ForeignTape);
        }
        let nodes = self.nodes.borrow();
        let shape = nodes[root.id].value.dim();
        if shape != (1, 1) {
            return Err(AutodiffError::NonScalarRoot {
                rows: shape.0,
                cols: shape.1,
            });
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; nodes.len()];
        grads[root.id] = Some(Array2::ones((1, 1)));

        for id in (0..=root.id).rev() {
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            // Interior gradients are consumed here; only leaves keep theirs.
            let Some(owned) = grads[id].take() else { continue };
            if matches!(node.op, Op::Leaf) {
                grads[id] = Some(owned);
                continue;
            }
            let g = &owned;
            let val = |i: usize| &nodes[i].value;
            let wants = |i: usize| nodes[i].requires_grad;
            let mut out: Vec<(usize, Array2<f64>)> = Vec::with_capacity(3);
            match node.op {
                Op::Leaf => {}
                Op::Add(a, b) => {
                    out.push((a, g.clone()));
                    out.push((b, g.clone()));
                }
                Op::Sub(a, b) => {
                    out.push((a, g.clone()));
                    out.push((b, -g));
                }
                Op::Mul(a, b) => {
                    if wants(a) {
                        out.push((a, g * val(b)));
                    }
                    if wants(b) {
                        out.push((b, g * val(a)));
                    }
                }
                Op::Div(a, b) => {
                    let bv = val(b);
                    if wants(a) {
                        out.push((a, g / bv));
                    }
                    if wants(b) {
                        out.push((b, -(g * val(a)) / (bv * bv)));
                    }
                }
                Op::Scale(a, s) => out.push((a, g * s)),
                Op::MatVec(m, v) | Op::MatMul(m, v) => {
                    if wants(m) {
                        out.push((m, g.dot(&val(v).t())));
                    }
                    if wants(v) {
                        out.push((v, val(m).t().dot(g)));
                    }
                }
                Op::Affine(x, w, b) => {
                    if wants(x) {
                        let mut gx = Array2::zeros(val(x).dim());
                        gemm_acc(&g.view(), &val(w).view(), &mut gx);
                        out.push((x, gx));
                    }
                    if wants(w) {
                        let mut gw = Array2::zeros(val(w).dim());
                        general_mat_mul(1.0, &g.t(), val(x), 0.0, &mut gw);
                        out.push((w, gw));
                    }
                    if wants(b) {
                        out.push((b, g.sum_axis(Axis(0)).insert_axis(Axis(0))));
                    }
                }
                Op::Dot(a, b) => {
                    let s = g[[0, 0]];
                    if wants(a) {
                        out.push((a, val(b) * s));
                    }
                    if wants(b) {
                        out.push((b, val(a) * s));
                    }
                }
                Op::Relu(a) => {
                    let mut d = owned;
                    d.zip_mut_with(val(a), |o, &x| {
                        // subgradient at exactly zero is zero
                        if x <= 0.0 {
                            *o = 0.0;
                        }
                    });
                    out.push((a, d));
                }
                Op::Sin(a) => out.push((a, g * &val(a).mapv(f64::cos))),
                Op::Square(a) => out.push((a, g * &(val(a) * 2.0))),
                Op::Sum(a) => out.push((a, Array2::from_elem(val(a).dim(), g[[0, 0]]))),
            }
            for (i, contrib) in out {
                if !nodes[i].requires_grad {
                    continue;
                }
                match &mut grads[i] {
                    Some(existing) => *existing += &contrib,
                    slot @ None => *slot = Some(contrib),
                }
            }
        }

        let shapes = nodes.iter().map(|n| n.value.dim()).collect();
        Ok(Gradients { grads, shapes })
    }
}

// Arithmetic is fallible (shape checks, zero division), so the std operator
// traits do not fit.
#[allow(clippy::should_implement_trait)]
impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn value(&self) -> Array2<f64> {
        self.tape.value_of(self.id).clone()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.value_of(self.id).dim()
    }

    /// Value of a `1 x 1` node.
    pub fn item(&self) -> f64 {
        self.tape.value_of(self.id)[[0, 0]]
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        self.tape.binary(self, other, Op::Add(self.id, other.id), |a, b| {
            same_shape("add", a, b)?;
            Ok(a + b)
        })
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        self.tape.binary(self, other, Op::Sub(self.id, other.id), |a, b| {
            same_shape("sub", a, b)?;
            Ok(a - b)
        })
    }

    /// Elementwise product.
    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        self.tape.binary(self, other, Op::Mul(self.id, other.id), |a, b| {
            same_shape("mul", a, b)?;
            Ok(a * b)
        })
    }

    /// Elementwise quotient; any zero in the denominator is an error.
    pub fn div(self, other: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        self.tape.binary(self, other, Op::Div(self.id, other.id), |a, b| {
            same_shape("div", a, b)?;
            if b.iter().any(|&v| v == 0.0) {
                return Err(AutodiffError::DivisionByZero);
            }
            Ok(a / b)
        })
    }

    pub fn scale(self, factor: f64) -> Var<'t> {
        self.tape.unary(self, Op::Scale(self.id, factor), |v| v * factor)
    }

    /// `self` is an `n x k` matrix, `v` a `k x 1` column.
    pub fn matvec(self, v: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        self.tape.binary(self, v, Op::MatVec(self.id, v.id), |m, x| {
            if x.ncols() != 1 || m.ncols() != x.nrows() {
                return Err(shape_err("matvec", m, x));
            }
            Ok(m.dot(x))
        })
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        self.tape.binary(self, other, Op::MatMul(self.id, other.id), |a, b| {
            if a.ncols() != b.nrows() {
                return Err(shape_err("matmul", a, b));
            }
            Ok(a.dot(b))
        })
    }

    /// Dense layer: `self` is a `batch x in` input, `weight` is `out x in`,
    /// `bias` is `1 x out`.
    pub fn affine(self, weight: Var<'t>, bias: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        let tape = self.tape;
        tape.check_same(self, weight)?;
        tape.check_same(self, bias)?;
        let value = {
            let x = tape.value_of(self.id);
            let w = tape.value_of(weight.id);
            let b = tape.value_of(bias.id);
            if x.ncols() != w.ncols() {
                return Err(shape_err("affine", &x, &w));
            }
            if b.dim() != (1, w.nrows()) {
                return Err(shape_err("affine bias", &w, &b));
            }
            let mut out = Array2::zeros((x.nrows(), w.nrows()));
            out += &*b;
            gemm_acc(&x.view(), &w.t(), &mut out);
            out
        };
        let rg = tape.needs(&[self.id, weight.id, bias.id]);
        Ok(tape.push(value, Op::Affine(self.id, weight.id, bias.id), rg))
    }

    /// Inner product of two equally shaped nodes.
    pub fn dot(self, other: Var<'t>) -> Result<Var<'t>, AutodiffError> {
        self.tape.binary(self, other, Op::Dot(self.id, other.id), |a, b| {
            same_shape("dot", a, b)?;
            let s: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
            Ok(Array2::from_elem((1, 1), s))
        })
    }

    pub fn relu(self) -> Var<'t> {
        self.tape.unary(self, Op::Relu(self.id), |v| v.max(0.0))
    }

    pub fn sin(self) -> Var<'t> {
        self.tape.unary(self, Op::Sin(self.id), f64::sin)
    }

    pub fn square(self) -> Var<'t> {
        self.tape.unary(self, Op::Square(self.id), |v| v * v)
    }

    pub fn sum(self) -> Var<'t> {
        let total = self.tape.value_of(self.id).sum();
        let rg = self.tape.needs(&[self.id]);
        self.tape
            .push(Array2::from_elem((1, 1), total), Op::Sum(self.id), rg)
    }
}

/// `out += a * b`, with a fast path for rank-one products.
fn gemm_acc(a: &ArrayView2<'_, f64>, b: &ArrayView2<'_, f64>, out: &mut Array2<f64>) {
    if a.ncols() == 1 {
        let col = a.column(0);
        let row = b.row(0);
        for (mut dst, &s) in out.rows_mut().into_iter().zip(col.iter()) {
            dst.scaled_add(s, &row);
        }
    } else {
        general_mat_mul(1.0, a, b, 1.0, out);
    }
}

fn same_shape(op: &'static str, a: &Array2<f64>, b: &Array2<f64>) -> Result<(), AutodiffError> {
    if a.dim() != b.dim() {
        return Err(shape_err(op, a, b));
    }
    Ok(())
}

fn shape_err(op: &'static str, a: &Array2<f64>, b: &Array2<f64>) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        left: a.dim(),
        right: b.dim(),
    }
}

fn column(values: &[f64]) -> Array2<f64> {
    Array2::from_shape_vec((values.len(), 1), values.to_vec()).expect("column shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn forward_values() {
        let t = Tape::new();
        let a = t.scalar(3.0);
        let b = t.scalar(4.0);
        assert_eq!(a.mul(b).unwrap().item(), 12.0);
        assert_eq!(t.scalar(-1.0).relu().item(), 0.0);
        let u = t.vector(&[1.0, 2.0]);
        let v = t.vector(&[3.0, 4.0]);
        assert_eq!(u.dot(v).unwrap().item(), 11.0);
        assert_eq!(u.sub(v).unwrap().sum().item(), -4.0);
        assert_eq!(u.add(v).unwrap().value(), array![[4.0], [6.0]]);
    }

    #[test]
    fn square_and_relu_derivatives() {
        let t = Tape::new();
        let x = t.scalar(3.0);
        let y = x.square();
        assert_eq!(t.backward(y).unwrap().scalar_wrt(x), 6.0);

        let t = Tape::new();
        let x = t.scalar(-1.0);
        let y = x.relu();
        assert_eq!(t.backward(y).unwrap().scalar_wrt(x), 0.0);

        let t = Tape::new();
        let x = t.scalar(0.0);
        let y = x.relu();
        assert_eq!(t.backward(y).unwrap().scalar_wrt(x), 0.0);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let t = Tape::new();
        let a = t.scalar(1.0);
        let z = t.scalar(0.0);
        assert_eq!(a.div(z).unwrap_err(), AutodiffError::DivisionByZero);
    }

    #[test]
    fn non_scalar_root_is_rejected() {
        let t = Tape::new();
        let v = t.vector(&[1.0, 2.0]);
        let w = v.square();
        assert_eq!(
            t.backward(w).unwrap_err(),
            AutodiffError::NonScalarRoot { rows: 2, cols: 1 }
        );
    }

    #[test]
    fn shape_and_tape_mismatches() {
        let t = Tape::new();
        let u = t.vector(&[1.0, 2.0]);
        let v = t.vector(&[1.0, 2.0, 3.0]);
        assert!(matches!(u.add(v), Err(AutodiffError::ShapeMismatch { .. })));
        assert!(matches!(u.matvec(v), Err(AutodiffError::ShapeMismatch { .. })));
        let other = Tape::new();
        let w = other.vector(&[1.0, 2.0]);
        assert_eq!(u.add(w).unwrap_err(), AutodiffError::ForeignTape);
        let s = other.scalar(1.0);
        assert_eq!(t.backward(s).unwrap_err(), AutodiffError::ForeignTape);
    }

    #[test]
    fn repeated_backward_is_not_accumulated() {
        let t = Tape::new();
        let x = t.vector(&[0.3, -1.2, 2.0]);
        let y = x.sin().square().sum();
        let g1 = t.backward(y).unwrap().wrt(x);
        let g2 = t.backward(y).unwrap().wrt(x);
        assert_eq!(g1, g2);
    }

    #[test]
    fn unrelated_leaves_get_zero() {
        let t = Tape::new();
        let x = t.scalar(2.0);
        let unused = t.vector(&[1.0, 1.0]);
        let y = x.square();
        let g = t.backward(y).unwrap();
        assert_eq!(g.wrt(unused), Array2::zeros((2, 1)));
    }

    #[test]
    fn constants_receive_no_gradient() {
        let t = Tape::new();
        let c = t.constant(array![[2.0]]);
        let x = t.scalar(5.0);
        let y = c.mul(x).unwrap();
        let g = t.backward(y).unwrap();
        assert_eq!(g.scalar_wrt(x), 2.0);
        assert_eq!(g.scalar_wrt(c), 0.0);
    }

    #[test]
    fn linearity_of_backward() {
        let vals = [0.4, -0.7, 1.3, 0.9];
        let grad_of = |which: u8| {
            let t = Tape::new();
            let x = t.vector(&vals);
            let m = t.constant(array![
                [1.0, 2.0, -1.0, 0.5],
                [0.0, -3.0, 2.0, 1.0],
                [0.5, 0.5, 0.5, 0.5]
            ]);
            let f = x.sin().square().sum();
            let g = m.matvec(x).unwrap().relu().sum();
            let root = match which {
                0 => f,
                1 => g,
                _ => f.add(g).unwrap(),
            };
            t.backward(root).unwrap().wrt(x)
        };
        let sum = grad_of(0) + grad_of(1);
        let both = grad_of(2);
        for (a, b) in sum.iter().zip(both.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    /// Central difference of `f` in every coordinate of `x0`.
    fn numeric_gradient(f: impl Fn(&[f64]) -> f64, x0: &[f64], h: f64) -> Vec<f64> {
        (0..x0.len())
            .map(|i| {
                let mut up = x0.to_vec();
                let mut dn = x0.to_vec();
                up[i] += h;
                dn[i] -= h;
                (f(&up) - f(&dn)) / (2.0 * h)
            })
            .collect()
    }

    fn close(analytic: f64, numeric: f64, rel: f64) -> bool {
        (analytic - numeric).abs() <= rel * analytic.abs().max(numeric.abs()).max(1e-3)
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        #[derive(Debug, Clone, Copy)]
        enum Unary {
            Sin,
            Square,
            Relu,
            Scale,
        }

        #[derive(Debug, Clone, Copy)]
        enum Binary {
            Add,
            Sub,
            Mul,
            Div,
            Dot,
        }

        fn unary(op: Unary, xs: &[f64]) -> f64 {
            let t = Tape::new();
            let x = t.vector(xs);
            let y = match op {
                Unary::Sin => x.sin(),
                Unary::Square => x.square(),
                Unary::Relu => x.relu(),
                Unary::Scale => x.scale(-2.5),
            };
            y.sum().item()
        }

        fn binary(op: Binary, xs: &[f64], ys: &[f64]) -> f64 {
            let t = Tape::new();
            let x = t.vector(xs);
            let y = t.vector(ys);
            let z = match op {
                Binary::Add => x.add(y).unwrap().square().sum(),
                Binary::Sub => x.sub(y).unwrap().square().sum(),
                Binary::Mul => x.mul(y).unwrap().sum(),
                Binary::Div => x.div(y).unwrap().sum(),
                Binary::Dot => x.dot(y).unwrap(),
            };
            z.item()
        }

        proptest! {
            #[test]
            fn unary_ops_match_finite_differences(
                op in prop_oneof![Just(Unary::Sin), Just(Unary::Square), Just(Unary::Relu), Just(Unary::Scale)],
                xs in prop::collection::vec(
                    prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], 1..6),
            ) {
                let t = Tape::new();
                let x = t.vector(&xs);
                let y = match op {
                    Unary::Sin => x.sin(),
                    Unary::Square => x.square(),
                    Unary::Relu => x.relu(),
                    Unary::Scale => x.scale(-2.5),
                }.sum();
                let g = t.backward(y).unwrap().wrt(x);
                let fd = numeric_gradient(|v| unary(op, v), &xs, 1e-6);
                for (a, n) in g.iter().zip(&fd) {
                    prop_assert!(close(*a, *n, 1e-6), "{op:?}: {a} vs {n}");
                }
            }

            #[test]
            fn binary_ops_match_finite_differences(
                op in prop_oneof![Just(Binary::Add), Just(Binary::Sub), Just(Binary::Mul), Just(Binary::Div), Just(Binary::Dot)],
                pairs in prop::collection::vec(
                    (-2.0f64..2.0, prop_oneof![-2.0f64..-0.5, 0.5f64..2.0]), 1..6),
            ) {
                let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
                let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
                let t = Tape::new();
                let x = t.vector(&xs);
                let y = t.vector(&ys);
                let z = match op {
                    Binary::Add => x.add(y).unwrap().square().sum(),
                    Binary::Sub => x.sub(y).unwrap().square().sum(),
                    Binary::Mul => x.mul(y).unwrap().sum(),
                    Binary::Div => x.div(y).unwrap().sum(),
                    Binary::Dot => x.dot(y).unwrap(),
                };
                let grads = t.backward(z).unwrap();
                let (gx, gy) = (grads.wrt(x), grads.wrt(y));
                let fdx = numeric_gradient(|v| binary(op, v, &ys), &xs, 1e-6);
                let fdy = numeric_gradient(|v| binary(op, &xs, v), &ys, 1e-6);
                for (a, n) in gx.iter().zip(&fdx).chain(gy.iter().zip(&fdy)) {
                    prop_assert!(close(*a, *n, 1e-6), "{op:?}: {a} vs {n}");
                }
            }

            #[test]
            fn matrix_ops_match_finite_differences(
                m in prop::collection::vec(-1.0f64..1.0, 12),
                v in prop::collection::vec(-1.0f64..1.0, 4),
                w in prop::collection::vec(-1.0f64..1.0, 8),
                b in prop::collection::vec(-0.5f64..0.5, 2),
            ) {
                // f(M, v, W, b) = sum(sin(affine(M^T-ish batch, W, b))) + |M v|^2
                let eval = |m: &[f64], v: &[f64], w: &[f64], b: &[f64]| -> f64 {
                    let t = Tape::new();
                    let mv = t.variable(Array2::from_shape_vec((3, 4), m.to_vec()).unwrap());
                    let vv = t.vector(v);
                    let wv = t.variable(Array2::from_shape_vec((2, 4), w.to_vec()).unwrap());
                    let bv = t.variable(Array2::from_shape_vec((1, 2), b.to_vec()).unwrap());
                    let a = mv.affine(wv, bv).unwrap().sin().sum();
                    let q = mv.matvec(vv).unwrap().square().sum();
                    a.add(q).unwrap().item()
                };
                let t = Tape::new();
                let mv = t.variable(Array2::from_shape_vec((3, 4), m.clone()).unwrap());
                let vv = t.vector(&v);
                let wv = t.variable(Array2::from_shape_vec((2, 4), w.clone()).unwrap());
                let bv = t.variable(Array2::from_shape_vec((1, 2), b.clone()).unwrap());
                let a = mv.affine(wv, bv).unwrap().sin().sum();
                let q = mv.matvec(vv).unwrap().square().sum();
                let root = a.add(q).unwrap();
                let g = t.backward(root).unwrap();
                let checks = [
                    (g.wrt(mv), numeric_gradient(|x| eval(x, &v, &w, &b), &m, 1e-6)),
                    (g.wrt(vv), numeric_gradient(|x| eval(&m, x, &w, &b), &v, 1e-6)),
                    (g.wrt(wv), numeric_gradient(|x| eval(&m, &v, x, &b), &w, 1e-6)),
                    (g.wrt(bv), numeric_gradient(|x| eval(&m, &v, &w, x), &b, 1e-6)),
                ];
                for (analytic, numeric) in &checks {
                    for (a, n) in analytic.iter().zip(numeric) {
                        prop_assert!(close(*a, *n, 1e-6), "{a} vs {n}");
                    }
                }
            }

            #[test]
            fn matmul_matches_finite_differences(
                a in prop::collection::vec(-1.0f64..1.0, 6),
                b in prop::collection::vec(-1.0f64..1.0, 6),
            ) {
                let eval = |a: &[f64], b: &[f64]| {
                    let t = Tape::new();
                    let av = t.variable(Array2::from_shape_vec((2, 3), a.to_vec()).unwrap());
                    let bv = t.variable(Array2::from_shape_vec((3, 2), b.to_vec()).unwrap());
                    av.matmul(bv).unwrap().square().sum().item()
                };
                let t = Tape::new();
                let av = t.variable(Array2::from_shape_vec((2, 3), a.clone()).unwrap());
                let bv = t.variable(Array2::from_shape_vec((3, 2), b.clone()).unwrap());
                let root = av.matmul(bv).unwrap().square().sum();
                let g = t.backward(root).unwrap();
                let na = numeric_gradient(|x| eval(x, &b), &a, 1e-6);
                let nb = numeric_gradient(|x| eval(&a, x), &b, 1e-6);
                for (x, n) in g.wrt(av).iter().zip(&na).chain(g.wrt(bv).iter().zip(&nb)) {
                    prop_assert!(close(*x, *n, 1e-6), "{x} vs {n}");
                }
            }
        }
    }
}
