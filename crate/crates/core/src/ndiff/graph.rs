use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::kernels::{axpy, dot, gemm_nn, gemm_nt, gemm_tn};
use super::tensor::Tensor;
use crate::error::{shape_mismatch, Error, Result};
use crate::real::Real;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn id(self) -> usize {
        self.0
    }
}

/// Reduction applied by [`Graph::mse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    /// Mean over all elements.
    #[default]
    Mean,
    /// Plain sum of squared differences.
    Sum,
}

#[derive(Debug, Clone, Copy)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Linear { x: Var, w: Var, b: Var },
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Gelu(Var),
    LayerNorm { x: Var, gain: Var, bias: Var },
    Softmax(Var),
    Attention { qkv: Var, heads: usize, seq_len: usize },
    Sum(Var),
    Mean(Var),
    Mse { a: Var, b: Var, reduction: Reduction },
}

#[derive(Debug)]
struct Node<T> {
    shape: Vec<usize>,
    value: Vec<T>,
    grad: Option<Vec<T>>,
    op: Op,
    requires_grad: bool,
    // op-specific forward cache (layer-norm moments, attention weights)
    aux: Vec<T>,
}

/// Define-by-run computation graph.
///
/// Nodes are appended in evaluation order, so every parent has a smaller id
/// than its children and a reverse sweep over ids is a valid topological
/// order for backpropagation.
#[derive(Debug, Default)]
pub struct Graph<T> {
    nodes: Vec<Node<T>>,
}

fn last(shape: &[usize]) -> usize {
    shape.last().copied().unwrap_or(1)
}

fn slot<T: Real>(adj: &mut [Option<Vec<T>>], v: Var, len: usize) -> &mut Vec<T> {
    adj[v.0].get_or_insert_with(|| vec![T::zero(); len])
}

impl<T: Real> Graph<T> {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<T>, op: Op, requires_grad: bool) -> Var {
        self.push_aux(shape, value, op, requires_grad, Vec::new())
    }

    fn push_aux(
        &mut self,
        shape: Vec<usize>,
        value: Vec<T>,
        op: Op,
        requires_grad: bool,
        aux: Vec<T>,
    ) -> Var {
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        self.nodes.push(Node {
            shape,
            value,
            grad: None,
            op,
            requires_grad,
            aux,
        });
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// Adds a trainable leaf holding a copy of `t`.
    pub fn param(&mut self, t: &Tensor<T>) -> Var {
        self.push(t.shape().to_vec(), t.data().to_vec(), Op::Leaf, true)
    }

    /// Adds a constant leaf; no gradient is tracked for it.
    pub fn constant(&mut self, t: Tensor<T>) -> Var {
        let shape = t.shape().to_vec();
        self.push(shape, t.into_data(), Op::Leaf, false)
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    pub fn value(&self, v: Var) -> &[T] {
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> T {
        self.nodes[v.0].value[0]
    }

    pub fn tensor(&self, v: Var) -> Tensor<T> {
        let n = &self.nodes[v.0];
        Tensor::new(&n.shape, n.value.clone()).expect("node shape and value agree")
    }

    /// Accumulated gradient, `None` until a backward pass reached `v`.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.nodes[v.0].grad.as_deref()
    }

    /// Gradient as a tensor, zero-filled when nothing reached `v`.
    pub fn grad_tensor(&self, v: Var) -> Tensor<T> {
        let n = &self.nodes[v.0];
        match &n.grad {
            Some(g) => Tensor::new(&n.shape, g.clone()).expect("grad shape"),
            None => Tensor::zeros(&n.shape),
        }
    }

    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.grad = None;
        }
    }

    /// `x · w`, with `x: [*, k]` and `w: [k, n]`.
    pub fn matmul(&mut self, x: Var, w: Var) -> Result<Var> {
        let (xs, ws) = (self.shape(x), self.shape(w));
        if ws.len() != 2 || last(xs) != ws[0] {
            return Err(shape_mismatch("matmul", xs, ws));
        }
        let (k, n) = (ws[0], ws[1]);
        let m = self.nodes[x.0].value.len() / k.max(1);
        let mut shape = xs.to_vec();
        *shape.last_mut().unwrap() = n;
        let mut out = vec![T::zero(); m * n];
        gemm_nn(self.value(x), self.value(w), &mut out, m, k, n);
        let rg = self.rg(x) || self.rg(w);
        Ok(self.push(shape, out, Op::MatMul(x, w), rg))
    }

    /// `x · w + b` with the bias broadcast over rows.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xs, ws, bs) = (self.shape(x), self.shape(w), self.shape(b));
        if ws.len() != 2 || last(xs) != ws[0] {
            return Err(shape_mismatch("linear", xs, ws));
        }
        if bs.len() != 1 || bs[0] != ws[1] {
            return Err(shape_mismatch("linear bias", ws, bs));
        }
        let (k, n) = (ws[0], ws[1]);
        let m = self.nodes[x.0].value.len() / k.max(1);
        let mut shape = xs.to_vec();
        *shape.last_mut().unwrap() = n;
        let mut out = Vec::with_capacity(m * n);
        for _ in 0..m {
            out.extend_from_slice(self.value(b));
        }
        gemm_nn(self.value(x), self.value(w), &mut out, m, k, n);
        let rg = self.rg(x) || self.rg(w) || self.rg(b);
        Ok(self.push(shape, out, Op::Linear { x, w, b }, rg))
    }

    fn binary(&mut self, a: Var, b: Var, name: &'static str, f: impl Fn(T, T) -> T, op: Op) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_mismatch(name, self.shape(a), self.shape(b)));
        }
        let out: Vec<T> = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(self.shape(a).to_vec(), out, op, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "add", |x, y| x + y, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "sub", |x, y| x - y, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(a, b, "mul", |x, y| x * y, Op::Mul(a, b))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let f = T::of(factor);
        let out = self.value(x).iter().map(|&v| v * f).collect();
        let rg = self.rg(x);
        self.push(self.shape(x).to_vec(), out, Op::Scale(x, factor), rg)
    }

    /// Exact (erf-based) GELU.
    pub fn gelu(&mut self, x: Var) -> Var {
        let half = T::of(0.5);
        let inv_sqrt2 = T::of(core::f64::consts::FRAC_1_SQRT_2);
        let out = self
            .value(x)
            .iter()
            .map(|&v| half * v * (T::one() + (v * inv_sqrt2).erf()))
            .collect();
        let rg = self.rg(x);
        self.push(self.shape(x).to_vec(), out, Op::Gelu(x), rg)
    }

    /// Standardizes each row over the last axis, then applies `gain` and `bias`.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var> {
        let xs = self.shape(x);
        let d = last(xs);
        if d == 0 || !(eps > 0.0) {
            return Err(Error::Config("layer_norm needs d >= 1 and eps > 0".into()));
        }
        if self.shape(gain) != [d] {
            return Err(shape_mismatch("layer_norm gain", xs, self.shape(gain)));
        }
        if self.shape(bias) != [d] {
            return Err(shape_mismatch("layer_norm bias", xs, self.shape(bias)));
        }
        let eps = T::of(eps);
        let dn = T::of(d as f64);
        let xv = self.value(x);
        let (g, b) = (self.value(gain), self.value(bias));
        let rows = xv.len() / d;
        let mut out = Vec::with_capacity(xv.len());
        let mut aux = Vec::with_capacity(2 * rows);
        for r in xv.chunks_exact(d) {
            let mean = r.iter().copied().sum::<T>() / dn;
            let var = r.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / dn;
            let rstd = T::one() / (var + eps).sqrt();
            for j in 0..d {
                out.push((r[j] - mean) * rstd * g[j] + b[j]);
            }
            aux.push(mean);
            aux.push(rstd);
        }
        let rg = self.rg(x) || self.rg(gain) || self.rg(bias);
        let shape = xs.to_vec();
        Ok(self.push_aux(shape, out, Op::LayerNorm { x, gain, bias }, rg, aux))
    }

    /// Softmax over the last axis, stabilized by subtracting the row maximum.
    pub fn softmax(&mut self, x: Var) -> Var {
        let d = last(self.shape(x));
        let mut out = self.value(x).to_vec();
        if d > 0 {
            for r in out.chunks_exact_mut(d) {
                softmax_in_place(r);
            }
        }
        let rg = self.rg(x);
        self.push(self.shape(x).to_vec(), out, Op::Softmax(x), rg)
    }

    /// Scaled dot-product attention over packed projections.
    ///
    /// `qkv` is `[n_seq * seq_len, 3 * d_model]` holding queries, keys and
    /// values side by side; head `h` owns columns `h*d_head..(h+1)*d_head` of
    /// each block. Tokens attend only within their own sequence of
    /// `seq_len` consecutive rows. No mask is applied.
    pub fn attention(&mut self, qkv: Var, heads: usize, seq_len: usize) -> Result<Var> {
        let s = self.shape(qkv);
        let width = last(s);
        if heads == 0 || !width.is_multiple_of(3) || !(width / 3).is_multiple_of(heads) {
            return Err(Error::Config(alloc::format!(
                "attention: packed width {width} not divisible into 3 x {heads} heads"
            )));
        }
        let d = width / 3;
        let dh = d / heads;
        let tokens = self.nodes[qkv.0].value.len() / width;
        if seq_len == 0 || !tokens.is_multiple_of(seq_len) {
            return Err(Error::Config(alloc::format!(
                "attention: {tokens} tokens do not split into sequences of {seq_len}"
            )));
        }
        let n_seq = tokens / seq_len;
        let scale = T::one() / T::of(dh as f64).sqrt();
        let v = self.value(qkv);
        let mut out = vec![T::zero(); tokens * d];
        let mut probs = vec![T::zero(); n_seq * heads * seq_len * seq_len];
        for sq in 0..n_seq {
            for h in 0..heads {
                let pbase = (sq * heads + h) * seq_len * seq_len;
                for i in 0..seq_len {
                    let ti = sq * seq_len + i;
                    let q = &v[ti * width + h * dh..ti * width + (h + 1) * dh];
                    let row = &mut probs[pbase + i * seq_len..pbase + (i + 1) * seq_len];
                    for (j, p) in row.iter_mut().enumerate() {
                        let tj = sq * seq_len + j;
                        let k = &v[tj * width + d + h * dh..tj * width + d + (h + 1) * dh];
                        *p = dot(q, k) * scale;
                    }
                    softmax_in_place(row);
                    let o = &mut out[ti * d + h * dh..ti * d + (h + 1) * dh];
                    for (j, &a) in row.iter().enumerate() {
                        let tj = sq * seq_len + j;
                        let val = &v[tj * width + 2 * d + h * dh..tj * width + 2 * d + (h + 1) * dh];
                        axpy(a, val, o);
                    }
                }
            }
        }
        let mut shape = s.to_vec();
        *shape.last_mut().unwrap() = d;
        let rg = self.rg(qkv);
        Ok(self.push_aux(shape, out, Op::Attention { qkv, heads, seq_len }, rg, probs))
    }

    /// Multi-head self-attention: packed QKV projection, attention, output
    /// projection. `x` is `[n_seq * seq_len, d_model]`.
    #[allow(clippy::too_many_arguments)]
    pub fn self_attention(
        &mut self,
        x: Var,
        w_qkv: Var,
        b_qkv: Var,
        w_out: Var,
        b_out: Var,
        heads: usize,
        seq_len: usize,
    ) -> Result<Var> {
        let d = last(self.shape(x));
        if heads == 0 || !d.is_multiple_of(heads) {
            return Err(Error::Config(alloc::format!(
                "d_model {d} is not divisible by n_heads {heads}"
            )));
        }
        let qkv = self.linear(x, w_qkv, b_qkv)?;
        let att = self.attention(qkv, heads, seq_len)?;
        self.linear(att, w_out, b_out)
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).iter().copied().sum::<T>();
        let rg = self.rg(x);
        self.push(vec![1], vec![s], Op::Sum(x), rg)
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let s = v.iter().copied().sum::<T>() / T::of(v.len().max(1) as f64);
        let rg = self.rg(x);
        self.push(vec![1], vec![s], Op::Mean(x), rg)
    }

    /// Squared-error loss between equally shaped tensors.
    pub fn mse(&mut self, a: Var, b: Var, reduction: Reduction) -> Result<Var> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_mismatch("mse", self.shape(a), self.shape(b)));
        }
        let (av, bv) = (self.value(a), self.value(b));
        let mut s = T::zero();
        for (&x, &y) in av.iter().zip(bv) {
            s += (x - y) * (x - y);
        }
        if reduction == Reduction::Mean {
            s /= T::of(av.len().max(1) as f64);
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(vec![1], vec![s], Op::Mse { a, b, reduction }, rg))
    }

    /// Reverse sweep from a scalar `root`.
    ///
    /// Gradients are added to whatever earlier passes left in the nodes, so
    /// two calls without [`Graph::zero_grad`] double every gradient.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        if self.nodes[root.0].value.len() != 1 {
            return Err(Error::NonScalarRoot(self.nodes[root.0].shape.clone()));
        }
        let mut adj: Vec<Option<Vec<T>>> = Vec::new();
        adj.resize_with(root.0 + 1, || None);
        adj[root.0] = Some(vec![T::one()]);
        for i in (0..=root.0).rev() {
            let Some(g) = adj[i].take() else { continue };
            if !self.nodes[i].requires_grad {
                continue;
            }
            self.propagate(i, &g, &mut adj);
            let node = &mut self.nodes[i];
            match &mut node.grad {
                Some(acc) => {
                    for (a, d) in acc.iter_mut().zip(&g) {
                        *a += *d;
                    }
                }
                None => node.grad = Some(g),
            }
        }
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[T], adj: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[i];
        let nodes = &self.nodes;
        let val = |v: Var| nodes[v.0].value.as_slice();
        let rg = |v: Var| nodes[v.0].requires_grad;
        match node.op {
            Op::Leaf => {}
            Op::MatMul(x, w) | Op::Linear { x, w, .. } => {
                let (k, n) = (nodes[w.0].shape[0], nodes[w.0].shape[1]);
                let m = g.len() / n.max(1);
                if rg(x) {
                    gemm_nt(g, val(w), slot(adj, x, m * k), m, n, k);
                }
                if rg(w) {
                    gemm_tn(val(x), g, slot(adj, w, k * n), k, m, n);
                }
                if let Op::Linear { b, .. } = node.op {
                    if rg(b) {
                        let db = slot(adj, b, n);
                        for r in g.chunks_exact(n) {
                            axpy(T::one(), r, db);
                        }
                    }
                }
            }
            Op::Add(a, b) | Op::Sub(a, b) => {
                let sign = if matches!(node.op, Op::Sub(..)) { -T::one() } else { T::one() };
                if rg(a) {
                    axpy(T::one(), g, slot(adj, a, g.len()));
                }
                if rg(b) {
                    axpy(sign, g, slot(adj, b, g.len()));
                }
            }
            Op::Mul(a, b) => {
                if rg(a) {
                    let da = slot(adj, a, g.len());
                    for ((d, &gi), &bv) in da.iter_mut().zip(g).zip(val(b)) {
                        *d += gi * bv;
                    }
                }
                if rg(b) {
                    let db = slot(adj, b, g.len());
                    for ((d, &gi), &av) in db.iter_mut().zip(g).zip(val(a)) {
                        *d += gi * av;
                    }
                }
            }
            Op::Scale(x, f) => axpy(T::of(f), g, slot(adj, x, g.len())),
            Op::Gelu(x) => {
                let inv_sqrt2 = T::of(core::f64::consts::FRAC_1_SQRT_2);
                let inv_sqrt2pi = T::of(0.398_942_280_401_432_7);
                let half = T::of(0.5);
                let dx = slot(adj, x, g.len());
                for ((d, &gi), &v) in dx.iter_mut().zip(g).zip(val(x)) {
                    let cdf = half * (T::one() + (v * inv_sqrt2).erf());
                    let pdf = inv_sqrt2pi * (-half * v * v).exp();
                    *d += gi * (cdf + v * pdf);
                }
            }
            Op::LayerNorm { x, gain, bias } => {
                let d = *node.shape.last().unwrap();
                let dn = T::of(d as f64);
                let xv = val(x);
                let gv = val(gain);
                let mut xhat = vec![T::zero(); d];
                let mut dxhat = vec![T::zero(); d];
                for (r, (gr, xr)) in g.chunks_exact(d).zip(xv.chunks_exact(d)).enumerate() {
                    let (mean, rstd) = (node.aux[2 * r], node.aux[2 * r + 1]);
                    for j in 0..d {
                        xhat[j] = (xr[j] - mean) * rstd;
                        dxhat[j] = gr[j] * gv[j];
                    }
                    if rg(gain) {
                        let dg = slot(adj, gain, d);
                        for j in 0..d {
                            dg[j] += gr[j] * xhat[j];
                        }
                    }
                    if rg(bias) {
                        axpy(T::one(), gr, slot(adj, bias, d));
                    }
                    if rg(x) {
                        let m1 = dxhat.iter().copied().sum::<T>() / dn;
                        let m2 = dot(&dxhat, &xhat) / dn;
                        let dx = slot(adj, x, xv.len());
                        let dr = &mut dx[r * d..(r + 1) * d];
                        for j in 0..d {
                            dr[j] += rstd * (dxhat[j] - m1 - xhat[j] * m2);
                        }
                    }
                }
            }
            Op::Softmax(x) => {
                let d = *node.shape.last().unwrap();
                let dx = slot(adj, x, g.len());
                for ((dr, gr), yr) in dx
                    .chunks_exact_mut(d)
                    .zip(g.chunks_exact(d))
                    .zip(node.value.chunks_exact(d))
                {
                    let s = dot(gr, yr);
                    for j in 0..d {
                        dr[j] += yr[j] * (gr[j] - s);
                    }
                }
            }
            Op::Attention { qkv, heads, seq_len } => {
                let width = nodes[qkv.0].shape.last().copied().unwrap();
                let d = width / 3;
                let dh = d / heads;
                let n_seq = g.len() / d / seq_len;
                let scale = T::one() / T::of(dh as f64).sqrt();
                let v = val(qkv);
                let dqkv = slot(adj, qkv, v.len());
                let mut da = vec![T::zero(); seq_len];
                for sq in 0..n_seq {
                    for h in 0..heads {
                        let pbase = (sq * heads + h) * seq_len * seq_len;
                        for i in 0..seq_len {
                            let ti = sq * seq_len + i;
                            let go = &g[ti * d + h * dh..ti * d + (h + 1) * dh];
                            let a = &node.aux[pbase + i * seq_len..pbase + (i + 1) * seq_len];
                            for j in 0..seq_len {
                                let tj = sq * seq_len + j;
                                let voff = tj * width + 2 * d + h * dh;
                                da[j] = dot(go, &v[voff..voff + dh]);
                                // dV_j += A_ij dO_i
                                axpy(a[j], go, &mut dqkv[voff..voff + dh]);
                            }
                            let s = dot(&da, a);
                            let qoff = ti * width + h * dh;
                            for j in 0..seq_len {
                                let ds = a[j] * (da[j] - s) * scale;
                                if ds == T::zero() {
                                    continue;
                                }
                                let tj = sq * seq_len + j;
                                let koff = tj * width + d + h * dh;
                                for c in 0..dh {
                                    let (qc, kc) = (v[qoff + c], v[koff + c]);
                                    dqkv[qoff + c] += ds * kc;
                                    dqkv[koff + c] += ds * qc;
                                }
                            }
                        }
                    }
                }
            }
            Op::Sum(x) => {
                let len = nodes[x.0].value.len();
                let dx = slot(adj, x, len);
                for d in dx.iter_mut() {
                    *d += g[0];
                }
            }
            Op::Mean(x) => {
                let len = nodes[x.0].value.len();
                let gi = g[0] / T::of(len.max(1) as f64);
                let dx = slot(adj, x, len);
                for d in dx.iter_mut() {
                    *d += gi;
                }
            }
            Op::Mse { a, b, reduction } => {
                let len = nodes[a.0].value.len();
                let mut c = T::of(2.0) * g[0];
                if reduction == Reduction::Mean {
                    c /= T::of(len.max(1) as f64);
                }
                let (av, bv) = (val(a), val(b));
                if rg(a) {
                    let da = slot(adj, a, len);
                    for j in 0..len {
                        da[j] += c * (av[j] - bv[j]);
                    }
                }
                if rg(b) {
                    let db = slot(adj, b, len);
                    for j in 0..len {
                        db[j] -= c * (av[j] - bv[j]);
                    }
                }
            }
        }
    }
}

fn softmax_in_place<T: Real>(row: &mut [T]) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let mut sum = T::zero();
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}
