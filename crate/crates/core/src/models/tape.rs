//! Reverse-mode automatic differentiation over a linear tape.

use std::borrow::Cow;

use super::gemm::{gemm, View, ViewMut};
use super::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy)]
struct ConvGeom {
    c: usize,
    h: usize,
    w: usize,
    o: usize,
    kh: usize,
    kw: usize,
}

impl ConvGeom {
    fn out_h(&self) -> usize {
        self.h - self.kh + 1
    }
    fn out_w(&self) -> usize {
        self.w - self.kw + 1
    }
    fn patch_len(&self) -> usize {
        self.c * self.kh * self.kw
    }
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    PrependRow(Var, Var),
    Row(Var, usize),
    Reshape(Var),
    Gelu(Var),
    LeakyRelu(Var, f64),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    Attention {
        q: Var,
        k: Var,
        v: Var,
        heads: usize,
        probs: Vec<f64>,
    },
    Conv2d {
        x: Var,
        w: Var,
        b: Var,
        geom: ConvGeom,
        cols: Vec<f64>,
    },
    MaxPool2 {
        x: Var,
        argmax: Vec<usize>,
    },
    CrossEntropy {
        logits: Var,
        probs: Vec<f64>,
        class: usize,
    },
}

struct Node<'p> {
    value: Cow<'p, Tensor>,
    op: Op,
}

/// Records a forward pass; parameters are borrowed, not copied.
pub struct Tape<'p> {
    nodes: Vec<Node<'p>>,
    first_nonfinite: Option<&'static str>,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Self::new()
    }
}

fn softmax_in_place(row: &mut [f64]) {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in row.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in row.iter_mut() {
        *v /= sum;
    }
}

/// Numerically stable `-ln softmax(logits)[class]` and its gradient `softmax - onehot`.
pub fn softmax_cross_entropy(logits: &[f64], class: usize) -> Result<(f64, Vec<f64>)> {
    if class >= logits.len() {
        return Err(Error::invalid(format!("class {class} out of range for {} logits", logits.len())));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    let mut grad: Vec<f64> = logits.iter().map(|&z| (z - lse).exp()).collect();
    grad[class] -= 1.0;
    Ok((lse - logits[class], grad))
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

fn slot<'g>(grads: &'g mut [Option<Vec<f64>>], nodes: &[Node], v: Var) -> &'g mut Vec<f64> {
    let len = nodes[v.0].value.len();
    grads[v.0].get_or_insert_with(|| vec![0.0; len])
}

fn shape_err(op: &str, detail: String) -> Error {
    Error::invalid(format!("{op}: {detail}"))
}

impl<'p> Tape<'p> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            first_nonfinite: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, name: &'static str) -> Var {
        if self.first_nonfinite.is_none() && !value.is_finite() {
            self.first_nonfinite = Some(name);
        }
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf, "input")
    }

    /// Non-finite parameters are reported by the first op that consumes them.
    pub fn param(&mut self, t: &'p Tensor) -> Var {
        self.nodes.push(Node {
            value: Cow::Borrowed(t),
            op: Op::Leaf,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Fails with a numeric error naming `context` if any recorded value is non-finite.
    pub fn check(&self, context: impl FnOnce() -> String) -> Result<()> {
        match self.first_nonfinite {
            None => Ok(()),
            Some(op) => Err(Error::NumericFailure {
                context: format!("{} ({op})", context()),
            }),
        }
    }

    /// Per-head attention probabilities `[heads, T, T]` of an attention node.
    pub fn attention_probs(&self, v: Var) -> Option<&[f64]> {
        match &self.nodes[v.0].op {
            Op::Attention { probs, .. } => Some(probs),
            _ => None,
        }
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.value(a).dims2()?;
        let (k2, n) = self.value(b).dims2()?;
        if k != k2 {
            return Err(shape_err("matmul", format!("{m}x{k} times {k2}x{n}")));
        }
        let mut out = vec![0.0; m * n];
        gemm(
            1.0,
            View::new(self.value(a).data(), m, k),
            View::new(self.value(b).data(), k, n),
            0.0,
            ViewMut::new(&mut out, m, n),
        );
        Ok(self.push(Tensor::new(vec![m, n], out)?, Op::MatMul(a, b), "matmul"))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.shape() != tb.shape() {
            return Err(shape_err("add", format!("{:?} vs {:?}", ta.shape(), tb.shape())));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x + y).collect();
        let t = Tensor::new(ta.shape().to_vec(), data)?;
        Ok(self.push(t, Op::Add(a, b), "add"))
    }

    /// Adds a length-`n` vector to every row of an `m x n` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (_, n) = self.value(x).dims2()?;
        if self.value(bias).len() != n {
            return Err(shape_err("add_bias", format!("{} columns, bias of {}", n, self.value(bias).len())));
        }
        let b = self.value(bias).data();
        let mut t = self.value(x).clone();
        for row in t.data_mut().chunks_mut(n) {
            for (v, bb) in row.iter_mut().zip(b) {
                *v += bb;
            }
        }
        Ok(self.push(t, Op::AddBias(x, bias), "add_bias"))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let t = self.value(x);
        let t = Tensor::new(t.shape().to_vec(), t.data().iter().map(|v| v * s).collect()).expect("same shape");
        self.push(t, Op::Scale(x, s), "scale")
    }

    /// Stacks a single row on top of an `m x n` matrix.
    pub fn prepend_row(&mut self, top: Var, rest: Var) -> Result<Var> {
        let (m, n) = self.value(rest).dims2()?;
        if self.value(top).len() != n {
            return Err(shape_err("prepend_row", format!("row of {} onto {n} columns", self.value(top).len())));
        }
        let mut data = self.value(top).data().to_vec();
        data.extend_from_slice(self.value(rest).data());
        Ok(self.push(Tensor::new(vec![m + 1, n], data)?, Op::PrependRow(top, rest), "prepend_row"))
    }

    pub fn row(&mut self, x: Var, i: usize) -> Result<Var> {
        let (m, n) = self.value(x).dims2()?;
        if i >= m {
            return Err(shape_err("row", format!("row {i} of {m}")));
        }
        let data = self.value(x).data()[i * n..(i + 1) * n].to_vec();
        Ok(self.push(Tensor::new(vec![1, n], data)?, Op::Row(x, i), "row"))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let t = self.value(x).clone().reshaped(shape)?;
        Ok(self.push(t, Op::Reshape(x), "reshape"))
    }

    pub fn gelu(&mut self, x: Var) -> Var {
        let t = self.value(x);
        let t = Tensor::new(t.shape().to_vec(), t.data().iter().map(|&v| gelu(v)).collect()).expect("same shape");
        self.push(t, Op::Gelu(x), "gelu")
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let t = self.value(x);
        let data = t.data().iter().map(|&v| if v > 0.0 { v } else { slope * v }).collect();
        let t = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        self.push(t, Op::LeakyRelu(x, slope), "leaky_relu")
    }

    /// Row-wise layer normalization with learned scale and shift.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let (m, n) = self.value(x).dims2()?;
        if self.value(gamma).len() != n || self.value(beta).len() != n {
            return Err(shape_err("layer_norm", format!("width {n} vs scale/shift")));
        }
        let xs = self.value(x).data();
        let (g, b) = (self.value(gamma).data(), self.value(beta).data());
        let mut xhat = vec![0.0; m * n];
        let mut inv_std = vec![0.0; m];
        let mut out = vec![0.0; m * n];
        for r in 0..m {
            let row = &xs[r * n..(r + 1) * n];
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + eps).sqrt();
            inv_std[r] = inv;
            for j in 0..n {
                let h = (row[j] - mean) * inv;
                xhat[r * n + j] = h;
                out[r * n + j] = h * g[j] + b[j];
            }
        }
        let shape = self.value(x).shape().to_vec();
        Ok(self.push(
            Tensor::new(shape, out)?,
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            "layer_norm",
        ))
    }

    /// Scaled dot-product attention per head over `T x d` projections; heads concatenated.
    pub fn attention(&mut self, q: Var, k: Var, v: Var, heads: usize) -> Result<Var> {
        let (t, d) = self.value(q).dims2()?;
        if self.value(k).dims2()? != (t, d) || self.value(v).dims2()? != (t, d) {
            return Err(shape_err("attention", "q, k, v shapes differ".into()));
        }
        if heads == 0 || d % heads != 0 {
            return Err(shape_err("attention", format!("{d} not divisible into {heads} heads")));
        }
        let dh = d / heads;
        let scale = 1.0 / (dh as f64).sqrt();
        let (qd, kd, vd) = (self.value(q).data(), self.value(k).data(), self.value(v).data());
        let mut probs = vec![0.0; heads * t * t];
        let mut out = vec![0.0; t * d];
        for h in 0..heads {
            let p = &mut probs[h * t * t..(h + 1) * t * t];
            gemm(
                scale,
                View::new(qd, t, d).cols(h * dh, dh),
                View::new(kd, t, d).cols(h * dh, dh).t(),
                0.0,
                ViewMut::new(p, t, t),
            );
            for row in p.chunks_mut(t) {
                softmax_in_place(row);
            }
            gemm(
                1.0,
                View::new(p, t, t),
                View::new(vd, t, d).cols(h * dh, dh),
                0.0,
                ViewMut::cols(&mut out, t, d, h * dh, dh),
            );
        }
        Ok(self.push(
            Tensor::new(vec![t, d], out)?,
            Op::Attention { q, k, v, heads, probs },
            "attention",
        ))
    }

    /// Valid-padding 2-D convolution: `[C,H,W] * [O,C,kh,kw] + [O] -> [O,H-kh+1,W-kw+1]`.
    pub fn conv2d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (c, h, wd) = match self.value(x).shape() {
            &[c, h, w] => (c, h, w),
            s => return Err(shape_err("conv2d", format!("input shape {s:?}"))),
        };
        let (o, kh, kw) = match self.value(w).shape() {
            &[o, c2, kh, kw] if c2 == c => (o, kh, kw),
            s => return Err(shape_err("conv2d", format!("kernel {s:?} for {c} input channels"))),
        };
        if kh > h || kw > wd || self.value(b).len() != o {
            return Err(shape_err("conv2d", format!("kernel {kh}x{kw} on {h}x{wd}")));
        }
        let geom = ConvGeom { c, h, w: wd, o, kh, kw };
        let (oh, ow) = (geom.out_h(), geom.out_w());
        let npix = oh * ow;
        let xs = self.value(x).data();
        let mut cols = vec![0.0; geom.patch_len() * npix];
        for ci in 0..c {
            for i in 0..kh {
                for j in 0..kw {
                    let r = (ci * kh + i) * kw + j;
                    let dst = &mut cols[r * npix..(r + 1) * npix];
                    for y in 0..oh {
                        let src = &xs[ci * h * wd + (y + i) * wd + j..][..ow];
                        dst[y * ow..(y + 1) * ow].copy_from_slice(src);
                    }
                }
            }
        }
        let mut out = vec![0.0; o * npix];
        for (oi, bias) in self.value(b).data().iter().enumerate() {
            out[oi * npix..(oi + 1) * npix].fill(*bias);
        }
        gemm(
            1.0,
            View::new(self.value(w).data(), o, geom.patch_len()),
            View::new(&cols, geom.patch_len(), npix),
            1.0,
            ViewMut::new(&mut out, o, npix),
        );
        Ok(self.push(
            Tensor::new(vec![o, oh, ow], out)?,
            Op::Conv2d { x, w, b, geom, cols },
            "conv2d",
        ))
    }

    /// 2x2 max pooling with stride 2 over `[C,H,W]`; odd trailing rows/columns are dropped.
    pub fn max_pool2(&mut self, x: Var) -> Result<Var> {
        let (c, h, w) = match self.value(x).shape() {
            &[c, h, w] if h >= 2 && w >= 2 => (c, h, w),
            s => return Err(shape_err("max_pool2", format!("input shape {s:?}"))),
        };
        let (oh, ow) = (h / 2, w / 2);
        let xs = self.value(x).data();
        let mut out = vec![0.0; c * oh * ow];
        let mut argmax = vec![0; c * oh * ow];
        for ci in 0..c {
            for y in 0..oh {
                for xx in 0..ow {
                    let base = ci * h * w + 2 * y * w + 2 * xx;
                    let mut best = base;
                    for idx in [base + 1, base + w, base + w + 1] {
                        if xs[idx] > xs[best] {
                            best = idx;
                        }
                    }
                    let o = (ci * oh + y) * ow + xx;
                    out[o] = xs[best];
                    argmax[o] = best;
                }
            }
        }
        Ok(self.push(
            Tensor::new(vec![c, oh, ow], out)?,
            Op::MaxPool2 { x, argmax },
            "max_pool2",
        ))
    }

    /// Scalar softmax cross-entropy of a logit vector against `class`.
    pub fn cross_entropy(&mut self, logits: Var, class: usize) -> Result<Var> {
        let (loss, grad) = softmax_cross_entropy(self.value(logits).data(), class)?;
        let mut probs = grad;
        probs[class] += 1.0;
        Ok(self.push(
            Tensor::new(vec![1], vec![loss])?,
            Op::CrossEntropy { logits, probs, class },
            "cross_entropy",
        ))
    }

    /// Gradients of the scalar `loss` with respect to every recorded value.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::invalid("backward needs a scalar loss"));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else {
                continue;
            };
            self.backprop_node(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    fn backprop_node(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = self.value(*a).dims2().expect("checked in forward");
                let n = self.value(*b).dims2().expect("checked in forward").1;
                let (ad, bd) = (self.value(*a).data(), self.value(*b).data());
                gemm(1.0, View::new(g, m, n), View::new(bd, k, n).t(), 1.0, ViewMut::new(slot(grads, &self.nodes, *a), m, k));
                gemm(1.0, View::new(ad, m, k).t(), View::new(g, m, n), 1.0, ViewMut::new(slot(grads, &self.nodes, *b), k, n));
            }
            Op::Add(a, b) => {
                for (d, s) in slot(grads, &self.nodes, *a).iter_mut().zip(g) {
                    *d += s;
                }
                for (d, s) in slot(grads, &self.nodes, *b).iter_mut().zip(g) {
                    *d += s;
                }
            }
            Op::AddBias(x, bias) => {
                for (d, s) in slot(grads, &self.nodes, *x).iter_mut().zip(g) {
                    *d += s;
                }
                let db = slot(grads, &self.nodes, *bias);
                let n = db.len();
                for row in g.chunks(n) {
                    for (d, s) in db.iter_mut().zip(row) {
                        *d += s;
                    }
                }
            }
            Op::Scale(x, s) => {
                for (d, gv) in slot(grads, &self.nodes, *x).iter_mut().zip(g) {
                    *d += s * gv;
                }
            }
            Op::PrependRow(top, rest) => {
                let n = self.value(*top).len();
                for (d, s) in slot(grads, &self.nodes, *top).iter_mut().zip(&g[..n]) {
                    *d += s;
                }
                for (d, s) in slot(grads, &self.nodes, *rest).iter_mut().zip(&g[n..]) {
                    *d += s;
                }
            }
            Op::Row(x, r) => {
                let n = g.len();
                for (d, s) in slot(grads, &self.nodes, *x)[r * n..(r + 1) * n].iter_mut().zip(g) {
                    *d += s;
                }
            }
            Op::Reshape(x) => {
                for (d, s) in slot(grads, &self.nodes, *x).iter_mut().zip(g) {
                    *d += s;
                }
            }
            Op::Gelu(x) => {
                let xs = self.value(*x).data();
                for ((d, s), &xv) in slot(grads, &self.nodes, *x).iter_mut().zip(g).zip(xs) {
                    *d += s * gelu_grad(xv);
                }
            }
            Op::LeakyRelu(x, slope) => {
                let xs = self.value(*x).data();
                for ((d, s), &xv) in slot(grads, &self.nodes, *x).iter_mut().zip(g).zip(xs) {
                    *d += if xv > 0.0 { *s } else { slope * s };
                }
            }
            Op::LayerNorm {
                x,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let gam = self.value(*gamma).data();
                let n = gam.len();
                {
                    let dg = slot(grads, &self.nodes, *gamma);
                    for (row_g, row_h) in g.chunks(n).zip(xhat.chunks(n)) {
                        for j in 0..n {
                            dg[j] += row_g[j] * row_h[j];
                        }
                    }
                }
                {
                    let db = slot(grads, &self.nodes, *beta);
                    for row_g in g.chunks(n) {
                        for j in 0..n {
                            db[j] += row_g[j];
                        }
                    }
                }
                let dx = slot(grads, &self.nodes, *x);
                let nf = n as f64;
                for (r, (row_g, row_h)) in g.chunks(n).zip(xhat.chunks(n)).enumerate() {
                    let dxhat: Vec<f64> = (0..n).map(|j| row_g[j] * gam[j]).collect();
                    let sum: f64 = dxhat.iter().sum();
                    let dot: f64 = dxhat.iter().zip(row_h).map(|(a, b)| a * b).sum();
                    for j in 0..n {
                        dx[r * n + j] += inv_std[r] / nf * (nf * dxhat[j] - sum - row_h[j] * dot);
                    }
                }
            }
            Op::Attention { q, k, v, heads, probs } => {
                let (t, d) = self.value(*q).dims2().expect("checked in forward");
                let dh = d / heads;
                let scale = 1.0 / (dh as f64).sqrt();
                let (qd, kd, vd) = (self.value(*q).data(), self.value(*k).data(), self.value(*v).data());
                let mut dq = vec![0.0; t * d];
                let mut dk = vec![0.0; t * d];
                let mut dv = vec![0.0; t * d];
                let mut dp = vec![0.0; t * t];
                for h in 0..*heads {
                    let p = &probs[h * t * t..(h + 1) * t * t];
                    let gh = View::new(g, t, d).cols(h * dh, dh);
                    gemm(1.0, gh, View::new(vd, t, d).cols(h * dh, dh).t(), 0.0, ViewMut::new(&mut dp, t, t));
                    gemm(1.0, View::new(p, t, t).t(), gh, 1.0, ViewMut::cols(&mut dv, t, d, h * dh, dh));
                    for (dp_row, p_row) in dp.chunks_mut(t).zip(p.chunks(t)) {
                        let dot: f64 = dp_row.iter().zip(p_row).map(|(a, b)| a * b).sum();
                        for (x, &pv) in dp_row.iter_mut().zip(p_row) {
                            *x = pv * (*x - dot) * scale;
                        }
                    }
                    gemm(
                        1.0,
                        View::new(&dp, t, t),
                        View::new(kd, t, d).cols(h * dh, dh),
                        1.0,
                        ViewMut::cols(&mut dq, t, d, h * dh, dh),
                    );
                    gemm(
                        1.0,
                        View::new(&dp, t, t).t(),
                        View::new(qd, t, d).cols(h * dh, dh),
                        1.0,
                        ViewMut::cols(&mut dk, t, d, h * dh, dh),
                    );
                }
                for (var, src) in [(*q, dq), (*k, dk), (*v, dv)] {
                    for (d, s) in slot(grads, &self.nodes, var).iter_mut().zip(&src) {
                        *d += s;
                    }
                }
            }
            Op::Conv2d { x, w, b, geom, cols } => {
                let npix = geom.out_h() * geom.out_w();
                let plen = geom.patch_len();
                {
                    let db = slot(grads, &self.nodes, *b);
                    for (oi, d) in db.iter_mut().enumerate() {
                        *d += g[oi * npix..(oi + 1) * npix].iter().sum::<f64>();
                    }
                }
                gemm(
                    1.0,
                    View::new(g, geom.o, npix),
                    View::new(cols, plen, npix).t(),
                    1.0,
                    ViewMut::new(slot(grads, &self.nodes, *w), geom.o, plen),
                );
                let mut dcols = vec![0.0; plen * npix];
                gemm(
                    1.0,
                    View::new(self.value(*w).data(), geom.o, plen).t(),
                    View::new(g, geom.o, npix),
                    0.0,
                    ViewMut::new(&mut dcols, plen, npix),
                );
                let (h, wd, oh, ow) = (geom.h, geom.w, geom.out_h(), geom.out_w());
                let dx = slot(grads, &self.nodes, *x);
                for ci in 0..geom.c {
                    for i in 0..geom.kh {
                        for j in 0..geom.kw {
                            let r = (ci * geom.kh + i) * geom.kw + j;
                            let src = &dcols[r * npix..(r + 1) * npix];
                            for y in 0..oh {
                                let dst = &mut dx[ci * h * wd + (y + i) * wd + j..][..ow];
                                for (d, s) in dst.iter_mut().zip(&src[y * ow..(y + 1) * ow]) {
                                    *d += s;
                                }
                            }
                        }
                    }
                }
            }
            Op::MaxPool2 { x, argmax } => {
                let dx = slot(grads, &self.nodes, *x);
                for (&idx, s) in argmax.iter().zip(g) {
                    dx[idx] += s;
                }
            }
            Op::CrossEntropy { logits, probs, class } => {
                let dl = slot(grads, &self.nodes, *logits);
                for (j, (d, p)) in dl.iter_mut().zip(probs).enumerate() {
                    *d += g[0] * (p - if j == *class { 1.0 } else { 0.0 });
                }
            }
        }
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// `None` when the value does not influence the loss.
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    pub fn take(&mut self, v: Var) -> Option<Vec<f64>> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}
