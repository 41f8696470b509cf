//! Expression tapes for analytic vector fields.
//!
//! Every Hamiltonian in this crate is written once, generically over [`Scalar`].
//! Evaluated with `f64` it gives point values; evaluated with [`Var`] it records
//! a hash-consed expression graph on a [`Tape`]. The tape can then be
//! differentiated symbolically (reverse mode for gradients, forward mode for
//! directional derivatives) and compiled into a [`Program`] that evaluates both
//! point values and Taylor coefficients of its outputs along a solution.

use std::cell::RefCell;
use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic needed by the Hamiltonians: field operations, mixed operations with
/// `f64` constants, and square roots.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn sqrt(self) -> Self;

    /// A constant living in the same context as `self`.
    fn lift(self, c: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }

    #[inline]
    fn lift(self, c: f64) -> Self {
        c
    }
}

pub fn dot<S: Scalar>(a: &[S; 3], b: &[S; 3]) -> S {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm_sq<S: Scalar>(a: &[S; 3]) -> S {
    dot(a, a)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Node {
    Input(u32),
    Const(u64),
    Add(u32, u32),
    Sub(u32, u32),
    Mul(u32, u32),
    Div(u32, u32),
    Neg(u32),
    Sqrt(u32),
}

#[derive(Default)]
struct Inner {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
    n_inputs: u32,
}

/// An append-only expression graph.
#[derive(Default)]
pub struct Tape {
    inner: RefCell<Inner>,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: u32,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Var({})", self.id)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Appends a fresh independent variable.
    pub fn input(&self) -> Var<'_> {
        let k = {
            let mut inner = self.inner.borrow_mut();
            let k = inner.n_inputs;
            inner.n_inputs += 1;
            k
        };
        let id = self.push(Node::Input(k));
        Var { tape: self, id }
    }

    pub fn inputs(&self, n: usize) -> Vec<Var<'_>> {
        (0..n).map(|_| self.input()).collect()
    }

    pub fn constant(&self, c: f64) -> Var<'_> {
        Var {
            tape: self,
            id: self.push(Node::Const(c.to_bits())),
        }
    }

    fn node(&self, id: u32) -> Node {
        self.inner.borrow().nodes[id as usize]
    }

    fn const_of(&self, id: u32) -> Option<f64> {
        match self.node(id) {
            Node::Const(bits) => Some(f64::from_bits(bits)),
            _ => None,
        }
    }

    fn cst(&self, c: f64) -> u32 {
        self.push(Node::Const(c.to_bits()))
    }

    /// Inserts a node after local simplification and common-subexpression lookup.
    fn push(&self, node: Node) -> u32 {
        let node = match self.simplify(node) {
            Ok(existing) => return existing,
            Err(node) => node,
        };
        let mut inner = self.inner.borrow_mut();
        if let Some(&id) = inner.index.get(&node) {
            return id;
        }
        let id = inner.nodes.len() as u32;
        inner.nodes.push(node);
        inner.index.insert(node, id);
        id
    }

    /// `Ok(id)` when the node reduces to an existing (or constant) node.
    fn simplify(&self, node: Node) -> Result<u32, Node> {
        let c = |id| self.const_of(id);
        match node {
            Node::Add(a, b) => match (c(a), c(b)) {
                (Some(x), Some(y)) => Ok(self.cst(x + y)),
                (Some(0.0), _) => Ok(b),
                (_, Some(0.0)) => Ok(a),
                _ => Err(Node::Add(a.min(b), a.max(b))),
            },
            Node::Sub(a, b) => match (c(a), c(b)) {
                (Some(x), Some(y)) => Ok(self.cst(x - y)),
                (_, Some(0.0)) => Ok(a),
                (Some(0.0), _) => Ok(self.push(Node::Neg(b))),
                _ if a == b => Ok(self.cst(0.0)),
                _ => Err(node),
            },
            Node::Mul(a, b) => match (c(a), c(b)) {
                (Some(x), Some(y)) => Ok(self.cst(x * y)),
                (Some(x), _) | (_, Some(x)) if x == 0.0 => Ok(self.cst(0.0)),
                (Some(1.0), _) => Ok(b),
                (_, Some(1.0)) => Ok(a),
                (Some(-1.0), _) => Ok(self.push(Node::Neg(b))),
                (_, Some(-1.0)) => Ok(self.push(Node::Neg(a))),
                _ => Err(Node::Mul(a.min(b), a.max(b))),
            },
            Node::Div(a, b) => match (c(a), c(b)) {
                (Some(x), Some(y)) => Ok(self.cst(x / y)),
                (Some(0.0), _) => Ok(self.cst(0.0)),
                (_, Some(1.0)) => Ok(a),
                _ => Err(node),
            },
            Node::Neg(a) => match self.node(a) {
                Node::Const(bits) => Ok(self.cst(-f64::from_bits(bits))),
                Node::Neg(inner) => Ok(inner),
                _ => Err(node),
            },
            Node::Sqrt(a) => match c(a) {
                Some(x) => Ok(self.cst(x.sqrt())),
                None => Err(node),
            },
            Node::Input(_) | Node::Const(_) => Err(node),
        }
    }

    fn wrap(&self, id: u32) -> Var<'_> {
        Var { tape: self, id }
    }

    /// Symbolic reverse-mode gradient of `output` with respect to `wrt`.
    pub fn gradient<'t>(&'t self, output: Var<'t>, wrt: &[Var<'t>]) -> Vec<Var<'t>> {
        let top = output.id as usize;
        let mut adjoint: Vec<Option<u32>> = vec![None; top + 1];
        adjoint[top] = Some(self.cst(1.0));

        let accumulate = |adjoint: &mut Vec<Option<u32>>, target: u32, term: u32| {
            let slot = &mut adjoint[target as usize];
            *slot = Some(match *slot {
                Some(prev) => self.push(Node::Add(prev, term)),
                None => term,
            });
        };

        for i in (0..=top).rev() {
            let Some(bar) = adjoint[i] else { continue };
            match self.node(i as u32) {
                Node::Input(_) | Node::Const(_) => {}
                Node::Add(a, b) => {
                    accumulate(&mut adjoint, a, bar);
                    accumulate(&mut adjoint, b, bar);
                }
                Node::Sub(a, b) => {
                    accumulate(&mut adjoint, a, bar);
                    let neg = self.push(Node::Neg(bar));
                    accumulate(&mut adjoint, b, neg);
                }
                Node::Mul(a, b) => {
                    let ta = self.push(Node::Mul(bar, b));
                    accumulate(&mut adjoint, a, ta);
                    let tb = self.push(Node::Mul(bar, a));
                    accumulate(&mut adjoint, b, tb);
                }
                Node::Div(a, b) => {
                    let ta = self.push(Node::Div(bar, b));
                    accumulate(&mut adjoint, a, ta);
                    // d(a/b)/db = -(a/b)/b
                    let quotient = i as u32;
                    let t = self.push(Node::Mul(ta, quotient));
                    let tb = self.push(Node::Neg(t));
                    accumulate(&mut adjoint, b, tb);
                }
                Node::Neg(a) => {
                    let t = self.push(Node::Neg(bar));
                    accumulate(&mut adjoint, a, t);
                }
                Node::Sqrt(a) => {
                    // d sqrt(a) = da / (2 sqrt(a))
                    let root = i as u32;
                    let two_root = self.push(Node::Add(root, root));
                    let t = self.push(Node::Div(bar, two_root));
                    accumulate(&mut adjoint, a, t);
                }
            }
        }

        wrt.iter()
            .map(|v| match adjoint.get(v.id as usize).copied().flatten() {
                Some(id) => self.wrap(id),
                None => self.constant(0.0),
            })
            .collect()
    }

    /// Symbolic forward-mode derivative of `outputs` along the direction that maps
    /// each `wrt[i]` to `direction[i]`.
    pub fn directional<'t>(
        &'t self,
        outputs: &[Var<'t>],
        wrt: &[Var<'t>],
        direction: &[Var<'t>],
    ) -> Vec<Var<'t>> {
        assert_eq!(wrt.len(), direction.len());
        let top = outputs.iter().map(|v| v.id as usize).max().unwrap_or(0);
        let mut tangent: Vec<Option<u32>> = vec![None; top + 1];
        for (w, d) in wrt.iter().zip(direction) {
            if (w.id as usize) <= top {
                tangent[w.id as usize] = Some(d.id);
            }
        }
        for i in 0..=top {
            if tangent[i].is_some() {
                continue;
            }
            let t = |id: u32| tangent[id as usize];
            tangent[i] = match self.node(i as u32) {
                Node::Input(_) | Node::Const(_) => None,
                Node::Add(a, b) => match (t(a), t(b)) {
                    (None, None) => None,
                    (Some(x), None) | (None, Some(x)) => Some(x),
                    (Some(x), Some(y)) => Some(self.push(Node::Add(x, y))),
                },
                Node::Sub(a, b) => match (t(a), t(b)) {
                    (None, None) => None,
                    (Some(x), None) => Some(x),
                    (None, Some(y)) => Some(self.push(Node::Neg(y))),
                    (Some(x), Some(y)) => Some(self.push(Node::Sub(x, y))),
                },
                Node::Mul(a, b) => {
                    let left = t(a).map(|x| self.push(Node::Mul(x, b)));
                    let right = t(b).map(|y| self.push(Node::Mul(a, y)));
                    match (left, right) {
                        (None, None) => None,
                        (Some(x), None) | (None, Some(x)) => Some(x),
                        (Some(x), Some(y)) => Some(self.push(Node::Add(x, y))),
                    }
                }
                Node::Div(a, b) => {
                    // (a/b)' = (a' - (a/b) b') / b
                    let quotient = i as u32;
                    let num = match (t(a), t(b)) {
                        (None, None) => None,
                        (Some(x), None) => Some(x),
                        (ta, Some(y)) => {
                            let qb = self.push(Node::Mul(quotient, y));
                            Some(match ta {
                                Some(x) => self.push(Node::Sub(x, qb)),
                                None => self.push(Node::Neg(qb)),
                            })
                        }
                    };
                    num.map(|n| self.push(Node::Div(n, b)))
                }
                Node::Neg(a) => t(a).map(|x| self.push(Node::Neg(x))),
                Node::Sqrt(a) => t(a).map(|x| {
                    let root = i as u32;
                    let two_root = self.push(Node::Add(root, root));
                    self.push(Node::Div(x, two_root))
                }),
            };
        }
        outputs
            .iter()
            .map(|v| match tangent[v.id as usize] {
                Some(id) => self.wrap(id),
                None => self.constant(0.0),
            })
            .collect()
    }

    /// Compiles the sub-graph needed for `outputs` into an evaluation program over
    /// the tape's inputs (in creation order).
    pub fn compile(&self, outputs: &[Var<'_>]) -> Program {
        let inner = self.inner.borrow();
        let n = inner.nodes.len();
        let mut live = vec![false; n];
        for (i, node) in inner.nodes.iter().enumerate() {
            if matches!(node, Node::Input(_)) {
                live[i] = true;
            }
        }
        for v in outputs {
            live[v.id as usize] = true;
        }
        for i in (0..n).rev() {
            if !live[i] {
                continue;
            }
            match inner.nodes[i] {
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    live[a as usize] = true;
                    live[b as usize] = true;
                }
                Node::Neg(a) | Node::Sqrt(a) => live[a as usize] = true,
                Node::Input(_) | Node::Const(_) => {}
            }
        }

        let mut remap = vec![usize::MAX; n];
        let mut ops = Vec::new();
        let mut input_slots = vec![usize::MAX; inner.n_inputs as usize];
        let konst = |id: u32| match inner.nodes[id as usize] {
            Node::Const(bits) => Some(f64::from_bits(bits)),
            _ => None,
        };
        for i in 0..n {
            if !live[i] {
                continue;
            }
            let r = |id: u32| remap[id as usize];
            let op = match inner.nodes[i] {
                Node::Input(k) => {
                    input_slots[k as usize] = ops.len();
                    Op::Input(k as usize)
                }
                Node::Const(bits) => Op::Const(f64::from_bits(bits)),
                Node::Add(a, b) => match (konst(a), konst(b)) {
                    (Some(c), _) => Op::Affine(1.0, c, r(b)),
                    (_, Some(c)) => Op::Affine(1.0, c, r(a)),
                    _ => Op::Add(r(a), r(b)),
                },
                Node::Sub(a, b) => match (konst(a), konst(b)) {
                    (Some(c), _) => Op::Affine(-1.0, c, r(b)),
                    (_, Some(c)) => Op::Affine(1.0, -c, r(a)),
                    _ => Op::Sub(r(a), r(b)),
                },
                Node::Mul(a, b) => match (konst(a), konst(b)) {
                    (Some(c), _) => Op::Affine(c, 0.0, r(b)),
                    (_, Some(c)) => Op::Affine(c, 0.0, r(a)),
                    _ => Op::Mul(r(a), r(b)),
                },
                Node::Div(a, b) => match konst(b) {
                    Some(c) => Op::Affine(1.0 / c, 0.0, r(a)),
                    None => Op::Div(r(a), r(b)),
                },
                Node::Neg(a) => Op::Affine(-1.0, 0.0, r(a)),
                Node::Sqrt(a) => Op::Sqrt(r(a)),
            };
            remap[i] = ops.len();
            ops.push(op);
        }
        Program {
            input_slots,
            outputs: outputs.iter().map(|v| remap[v.id as usize]).collect(),
            ops,
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Input(usize),
    Const(f64),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Div(usize, usize),
    Sqrt(usize),
    /// `scale * x + offset`
    Affine(f64, f64, usize),
}

/// A compiled straight-line program mapping `n_inputs` reals to `n_outputs` reals.
#[derive(Clone, Debug)]
pub struct Program {
    input_slots: Vec<usize>,
    ops: Vec<Op>,
    outputs: Vec<usize>,
}

impl Program {
    pub fn n_inputs(&self) -> usize {
        self.input_slots.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Point evaluation.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        let mut values = vec![0.0; self.ops.len()];
        self.eval_with(x, out, &mut values);
    }

    pub fn eval_with(&self, x: &[f64], out: &mut [f64], values: &mut Vec<f64>) {
        debug_assert_eq!(x.len(), self.n_inputs());
        values.resize(self.ops.len(), 0.0);
        for i in 0..self.ops.len() {
            values[i] = match self.ops[i] {
                Op::Input(k) => x[k],
                Op::Const(c) => c,
                Op::Add(a, b) => values[a] + values[b],
                Op::Sub(a, b) => values[a] - values[b],
                Op::Mul(a, b) => values[a] * values[b],
                Op::Div(a, b) => values[a] / values[b],
                Op::Sqrt(a) => values[a].sqrt(),
                Op::Affine(s, c, a) => s * values[a] + c,
            };
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = values[slot];
        }
    }

    pub fn eval_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_outputs()];
        self.eval(x, &mut out);
        out
    }

    /// Taylor coefficients of the solution of `x' = program(x)` through `x0`.
    ///
    /// Requires `n_outputs == n_inputs`. On return `coefs[i * (order + 1) + k]`
    /// holds the k-th normalized Taylor coefficient of state component `i`.
    pub fn taylor_jet(&self, x0: &[f64], order: usize, jet: &mut TaylorJet) {
        assert_eq!(self.n_outputs(), self.n_inputs());
        let width = order + 1;
        let n_ops = self.ops.len();
        jet.order = order;
        jet.nodes.clear();
        jet.nodes.resize(n_ops * width, 0.0);
        jet.state.clear();
        jet.state.resize(self.n_inputs() * width, 0.0);
        for (i, &x) in x0.iter().enumerate() {
            jet.state[i * width] = x;
        }

        let c = &mut jet.nodes;
        for k in 0..width {
            for i in 0..n_ops {
                let (lo, hi) = c.split_at_mut(i * width);
                let row = &mut hi[..width];
                let at = |j: usize| &lo[j * width..j * width + width];
                row[k] = match self.ops[i] {
                    Op::Input(s) => jet.state[s * width + k],
                    Op::Const(v) => {
                        if k == 0 {
                            v
                        } else {
                            0.0
                        }
                    }
                    Op::Add(a, b) => at(a)[k] + at(b)[k],
                    Op::Sub(a, b) => at(a)[k] - at(b)[k],
                    Op::Affine(s, off, a) => {
                        let v = s * at(a)[k];
                        if k == 0 {
                            v + off
                        } else {
                            v
                        }
                    }
                    Op::Mul(a, b) => {
                        let (ra, rb) = (at(a), at(b));
                        let mut acc = 0.0;
                        for j in 0..=k {
                            acc += ra[j] * rb[k - j];
                        }
                        acc
                    }
                    Op::Div(a, b) => {
                        let (ra, rb) = (at(a), at(b));
                        let mut acc = ra[k];
                        for j in 0..k {
                            acc -= row[j] * rb[k - j];
                        }
                        acc / rb[0]
                    }
                    Op::Sqrt(a) => {
                        let ra = at(a);
                        if k == 0 {
                            ra[0].sqrt()
                        } else {
                            let mut acc = ra[k];
                            for j in 1..k {
                                acc -= row[j] * row[k - j];
                            }
                            acc / (2.0 * row[0])
                        }
                    }
                };
            }
            if k + 1 < width {
                let scale = 1.0 / (k as f64 + 1.0);
                for (s, &o) in self.outputs.iter().enumerate() {
                    jet.state[s * width + k + 1] = c[o * width + k] * scale;
                }
            }
        }
    }
}

/// Scratch storage and result of [`Program::taylor_jet`].
#[derive(Clone, Debug, Default)]
pub struct TaylorJet {
    order: usize,
    nodes: Vec<f64>,
    state: Vec<f64>,
}

impl TaylorJet {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Coefficients of state component `i`, lowest order first.
    pub fn component(&self, i: usize) -> &[f64] {
        let w = self.order + 1;
        &self.state[i * w..(i + 1) * w]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.state
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident, $node:ident) => {
        impl<'t> $trait for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: Var<'t>) -> Var<'t> {
                let id = self.tape.push(Node::$node(self.id, rhs.id));
                Var { tape: self.tape, id }
            }
        }

        impl<'t> $trait<f64> for Var<'t> {
            type Output = Var<'t>;
            fn $method(self, rhs: f64) -> Var<'t> {
                let c = self.tape.cst(rhs);
                let id = self.tape.push(Node::$node(self.id, c));
                Var { tape: self.tape, id }
            }
        }
    };
}

binary_op!(Add, add, Add);
binary_op!(Sub, sub, Sub);
binary_op!(Mul, mul, Mul);
binary_op!(Div, div, Div);

impl<'t> Neg for Var<'t> {
    type Output = Var<'t>;
    fn neg(self) -> Var<'t> {
        let id = self.tape.push(Node::Neg(self.id));
        Var { tape: self.tape, id }
    }
}

impl<'t> Scalar for Var<'t> {
    fn sqrt(self) -> Self {
        let id = self.tape.push(Node::Sqrt(self.id));
        Var { tape: self.tape, id }
    }

    fn lift(self, c: f64) -> Self {
        self.tape.constant(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly<S: Scalar>(x: S, y: S) -> S {
        (x * y + x.lift(3.0)) / (y * y + 1.0).sqrt() - x * 2.0
    }

    #[test]
    fn compiled_program_matches_direct_evaluation() {
        let tape = Tape::new();
        let v = tape.inputs(2);
        let f = poly(v[0], v[1]);
        let prog = tape.compile(&[f]);
        for &(x, y) in &[(0.3, -1.2), (2.0, 0.5), (-4.0, 7.0)] {
            let got = prog.eval_vec(&[x, y])[0];
            assert!((got - poly(x, y)).abs() < 1e-15);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let tape = Tape::new();
        let v = tape.inputs(2);
        let f = poly(v[0], v[1]);
        let g = tape.gradient(f, &v);
        let prog = tape.compile(&g);
        let (x, y) = (0.7, -0.4);
        let got = prog.eval_vec(&[x, y]);
        let e = 1e-6;
        let fx = (poly(x + e, y) - poly(x - e, y)) / (2.0 * e);
        let fy = (poly(x, y + e) - poly(x, y - e)) / (2.0 * e);
        assert!((got[0] - fx).abs() < 1e-8);
        assert!((got[1] - fy).abs() < 1e-8);
    }

    #[test]
    fn directional_derivative_is_gradient_projection() {
        let tape = Tape::new();
        let v = tape.inputs(4);
        let f = poly(v[0], v[1]);
        let g = tape.gradient(f, &v[..2]);
        let d = tape.directional(&[f], &v[..2], &v[2..]);
        let prog = tape.compile(&[g[0], g[1], d[0]]);
        let out = prog.eval_vec(&[0.2, 1.1, 0.3, -2.0]);
        assert!((out[2] - (0.3 * out[0] - 2.0 * out[1])).abs() < 1e-14);
    }

    #[test]
    fn simplification_folds_constants_and_shares_nodes() {
        let tape = Tape::new();
        let x = tape.input();
        let a = x * 1.0 + 0.0;
        assert_eq!(a.id, x.id);
        let b = x * x;
        let c = x * x;
        assert_eq!(b.id, c.id);
        let z = x - x;
        assert_eq!(tape.const_of(z.id), Some(0.0));
    }

    #[test]
    fn taylor_jet_of_exponential_and_oscillator() {
        // x' = x from x0 = 1: coefficients 1/k!
        let tape = Tape::new();
        let x = tape.input();
        let prog = tape.compile(&[x]);
        let mut jet = TaylorJet::default();
        prog.taylor_jet(&[1.0], 10, &mut jet);
        let mut fact = 1.0;
        for (k, &c) in jet.component(0).iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            assert!((c - 1.0 / fact).abs() < 1e-15);
        }

        // q' = p, p' = -q from (1, 0): cos and -sin series
        let tape = Tape::new();
        let v = tape.inputs(2);
        let prog = tape.compile(&[v[1], -v[0]]);
        prog.taylor_jet(&[1.0, 0.0], 6, &mut jet);
        let q = jet.component(0);
        assert_eq!(q[1], 0.0);
        assert!((q[2] + 0.5).abs() < 1e-16);
        assert!((q[4] - 1.0 / 24.0).abs() < 1e-16);
    }

    #[test]
    fn taylor_jet_handles_division_and_roots() {
        // x' = sqrt(x), x(t) = (sqrt(x0) + t/2)^2
        let tape = Tape::new();
        let x = tape.input();
        let prog = tape.compile(&[x.sqrt()]);
        let mut jet = TaylorJet::default();
        prog.taylor_jet(&[4.0], 5, &mut jet);
        // (2 + t/2)^2 = 4 + 2t + t^2/4
        let c = jet.component(0);
        assert!((c[0] - 4.0).abs() < 1e-15);
        assert!((c[1] - 2.0).abs() < 1e-15);
        assert!((c[2] - 0.25).abs() < 1e-15);
        assert!(c[3].abs() < 1e-15 && c[4].abs() < 1e-15);

        // x' = 1/x, x(t) = sqrt(x0^2 + 2t); from x0 = 1: 1 + t - t^2/2 + t^3/2
        let tape = Tape::new();
        let x = tape.input();
        let one = tape.constant(1.0);
        let prog = tape.compile(&[one / x]);
        prog.taylor_jet(&[1.0], 4, &mut jet);
        let c = jet.component(0);
        assert!((c[1] - 1.0).abs() < 1e-15);
        assert!((c[2] + 0.5).abs() < 1e-15);
        assert!((c[3] - 0.5).abs() < 1e-15);
    }
}
