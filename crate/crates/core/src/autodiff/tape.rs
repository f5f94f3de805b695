use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduction {
    Sum,
    Mean,
}

#[derive(Debug)]
enum Op {
    Leaf,
    Affine {
        x: Var,
        w: Var,
        b: Option<Var>,
        rows: usize,
        din: usize,
        dout: usize,
    },
    Pointwise(Var, Activation),
    Gather {
        x: Var,
        idx: Vec<usize>,
        cols: usize,
    },
    Concat {
        parts: Vec<Var>,
        widths: Vec<usize>,
    },
    Softmax {
        x: Var,
        k: usize,
        c: usize,
    },
    Reduce {
        x: Var,
        len: usize,
        inner: usize,
        kind: Reduction,
    },
    SumAll(Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Mse(Var, Var),
    Reshape(Var),
}

#[derive(Debug)]
struct Node {
    shape: Vec<usize>,
    value: Vec<f64>,
    op: Op,
}

/// Append-only record of a forward computation. Nodes are stored in
/// creation order, which is a topological order.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    consumed: bool,
}

/// Gradients of a scalar loss with respect to every node of a tape.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Gradient of `v`, or zeros of the given length when the loss does not
    /// depend on it.
    pub fn get_or_zeros(&self, v: Var, len: usize) -> Vec<f64> {
        self.get(v).map_or_else(|| vec![0.0; len], <[f64]>::to_vec)
    }
}

fn same_shape(a: &[usize], b: &[usize], what: &str) -> Result<()> {
    if a != b {
        return Err(Error::param(format!("{what}: shape mismatch {a:?} vs {b:?}")));
    }
    Ok(())
}

/// `c[m×n] (+)= a[m×k] · b[k×n]` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    a_strides: (isize, isize),
    b: &[f64],
    b_strides: (isize, isize),
    c: &mut [f64],
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(c.len() >= m * n);
    // SAFETY: the slices cover every index addressed by the given shapes
    // and strides; the callers construct them from tensors of exactly
    // these shapes.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            a_strides.0,
            a_strides.1,
            b.as_ptr(),
            b_strides.0,
            b_strides.1,
            if accumulate { 1.0 } else { 0.0 },
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].shape
    }

    fn push(&mut self, shape: Vec<usize>, value: Vec<f64>, op: Op) -> Result<Var> {
        if self.consumed {
            return Err(Error::State("tape already differentiated; record a new forward pass".into()));
        }
        debug_assert_eq!(shape.iter().product::<usize>(), value.len());
        if let Some(i) = value.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite value at element {i} of {op:?} output")));
        }
        self.nodes.push(Node { shape, value, op });
        Ok(Var(self.nodes.len() - 1))
    }

    /// Input or parameter node.
    pub fn leaf(&mut self, shape: Vec<usize>, value: Vec<f64>) -> Result<Var> {
        if shape.iter().product::<usize>() != value.len() {
            return Err(Error::param(format!("leaf shape {shape:?} does not match {} values", value.len())));
        }
        self.push(shape, value, Op::Leaf)
    }

    /// A leaf whose gradient is simply never read.
    pub fn constant(&mut self, shape: Vec<usize>, value: Vec<f64>) -> Result<Var> {
        self.leaf(shape, value)
    }

    /// Row-wise `x·W + b` over the last axis of `x`.
    pub fn affine(&mut self, x: Var, w: Var, b: Option<Var>) -> Result<Var> {
        let xs = self.shape(x).to_vec();
        let ws = self.shape(w).to_vec();
        if ws.len() != 2 || xs.is_empty() || *xs.last().unwrap() != ws[0] {
            return Err(Error::param(format!("affine: x {xs:?} incompatible with W {ws:?}")));
        }
        let (din, dout) = (ws[0], ws[1]);
        if let Some(b) = b {
            same_shape(self.shape(b), &[dout], "affine bias")?;
        }
        let rows = self.nodes[x.0].value.len() / din.max(1);
        let mut out = vec![0.0; rows * dout];
        if let Some(b) = b {
            let bv = self.value(b);
            for r in out.chunks_exact_mut(dout) {
                r.copy_from_slice(bv);
            }
        }
        gemm(
            rows,
            din,
            dout,
            self.value(x),
            (din as isize, 1),
            self.value(w),
            (dout as isize, 1),
            &mut out,
            b.is_some(),
        );
        let mut shape = xs;
        *shape.last_mut().unwrap() = dout;
        self.push(shape, out, Op::Affine { x, w, b, rows, din, dout })
    }

    pub fn pointwise(&mut self, x: Var, kind: Activation) -> Var {
        let value: Vec<f64> = match kind {
            Activation::Relu => self.value(x).iter().map(|&v| v.max(0.0)).collect(),
            Activation::Tanh => self.value(x).iter().map(|&v| v.tanh()).collect(),
        };
        let shape = self.shape(x).to_vec();
        self.push(shape, value, Op::Pointwise(x, kind))
            .expect("activations of finite inputs are finite")
    }

    pub fn relu(&mut self, x: Var) -> Var {
        self.pointwise(x, Activation::Relu)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        self.pointwise(x, Activation::Tanh)
    }

    /// `out[i][j] = x[idx[i·k + j]]` for `x` viewed as rows; output shape
    /// `[idx.len()/k, k, cols]`. Indices carry no gradient.
    pub fn gather_rows(&mut self, x: Var, idx: &[usize], k: usize) -> Result<Var> {
        let xs = self.shape(x);
        if xs.is_empty() || k == 0 || !idx.len().is_multiple_of(k) {
            return Err(Error::param("gather_rows: bad shapes"));
        }
        let n = xs[0];
        let cols = self.nodes[x.0].value.len() / n.max(1);
        if let Some(&bad) = idx.iter().find(|&&i| i >= n) {
            return Err(Error::param(format!("gather_rows: index {bad} out of range for {n} rows")));
        }
        let xv = self.value(x);
        let mut out = Vec::with_capacity(idx.len() * cols);
        for &i in idx {
            out.extend_from_slice(&xv[i * cols..(i + 1) * cols]);
        }
        self.push(
            vec![idx.len() / k, k, cols],
            out,
            Op::Gather {
                x,
                idx: idx.to_vec(),
                cols,
            },
        )
    }

    /// Concatenation along the last axis.
    pub fn concat_last(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts.first().ok_or_else(|| Error::param("concat of nothing"))?;
        let lead = {
            let s = self.shape(*first);
            s[..s.len() - 1].to_vec()
        };
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let s = self.shape(p);
            if s.len() != lead.len() + 1 || s[..s.len() - 1] != lead[..] {
                return Err(Error::param(format!("concat: leading dims {:?} vs {lead:?}", s)));
            }
            widths.push(*s.last().unwrap());
        }
        let rows: usize = lead.iter().product();
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for (&p, &w) in parts.iter().zip(&widths) {
                out.extend_from_slice(&self.value(p)[r * w..(r + 1) * w]);
            }
        }
        let mut shape = lead;
        shape.push(total);
        self.push(
            shape,
            out,
            Op::Concat {
                parts: parts.to_vec(),
                widths,
            },
        )
    }

    /// Softmax along axis 1 of an `N×k×C` tensor, independently per
    /// `(i, channel)`, with max subtraction.
    pub fn softmax_over_neighbors(&mut self, x: Var) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if s.len() != 3 {
            return Err(Error::param(format!("softmax expects N×k×C, got {s:?}")));
        }
        let (n, k, c) = (s[0], s[1], s[2]);
        let xv = self.value(x);
        let mut out = vec![0.0; xv.len()];
        let mut maxes = vec![0.0; c];
        let mut sums = vec![0.0; c];
        for i in 0..n {
            let base = i * k * c;
            maxes.iter_mut().for_each(|m| *m = f64::NEG_INFINITY);
            for j in 0..k {
                for ch in 0..c {
                    maxes[ch] = maxes[ch].max(xv[base + j * c + ch]);
                }
            }
            sums.iter_mut().for_each(|s| *s = 0.0);
            for j in 0..k {
                for ch in 0..c {
                    let e = (xv[base + j * c + ch] - maxes[ch]).exp();
                    out[base + j * c + ch] = e;
                    sums[ch] += e;
                }
            }
            for j in 0..k {
                for ch in 0..c {
                    out[base + j * c + ch] /= sums[ch];
                }
            }
        }
        self.push(s, out, Op::Softmax { x, k, c })
    }

    /// Sum or mean over one axis.
    pub fn reduce(&mut self, x: Var, kind: Reduction, axis: usize) -> Result<Var> {
        let s = self.shape(x).to_vec();
        if axis >= s.len() {
            return Err(Error::param(format!("reduce axis {axis} out of range for {s:?}")));
        }
        let outer: usize = s[..axis].iter().product();
        let len = s[axis];
        let inner: usize = s[axis + 1..].iter().product();
        let xv = self.value(x);
        let mut out = vec![0.0; outer * inner];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for l in 0..len {
                let src = &xv[(o * len + l) * inner..(o * len + l + 1) * inner];
                for (d, v) in dst.iter_mut().zip(src) {
                    *d += v;
                }
            }
        }
        if kind == Reduction::Mean && len > 0 {
            let inv = 1.0 / len as f64;
            out.iter_mut().for_each(|v| *v *= inv);
        }
        let mut shape = s;
        shape.remove(axis);
        self.push(shape, out, Op::Reduce { x, len, inner, kind })
    }

    /// Sum of every element, as a scalar (shape `[]`).
    pub fn sum_all(&mut self, x: Var) -> Var {
        let s: f64 = self.value(x).iter().sum();
        self.push(vec![], vec![s], Op::SumAll(x)).expect("sum of finite values")
    }

    pub fn mean_all(&mut self, x: Var) -> Var {
        let n = self.value(x).len().max(1) as f64;
        let s = self.sum_all(x);
        self.scale(s, 1.0 / n)
    }

    fn binary(&mut self, a: Var, b: Var, what: &str, f: impl Fn(f64, f64) -> f64) -> Result<(Vec<usize>, Vec<f64>)> {
        same_shape(self.shape(a), self.shape(b), what)?;
        let out = self.value(a).iter().zip(self.value(b)).map(|(&x, &y)| f(x, y)).collect();
        Ok((self.shape(a).to_vec(), out))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, v) = self.binary(a, b, "add", |x, y| x + y)?;
        self.push(s, v, Op::Add(a, b))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, v) = self.binary(a, b, "sub", |x, y| x - y)?;
        self.push(s, v, Op::Sub(a, b))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (s, v) = self.binary(a, b, "mul", |x, y| x * y)?;
        self.push(s, v, Op::Mul(a, b))
    }

    pub fn scale(&mut self, x: Var, c: f64) -> Var {
        let v = self.value(x).iter().map(|&a| a * c).collect();
        let s = self.shape(x).to_vec();
        self.push(s, v, Op::Scale(x, c)).expect("finite scale of finite values")
    }

    /// Mean of squared differences over all elements.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        same_shape(self.shape(a), self.shape(b), "mse")?;
        let n = self.value(a).len().max(1) as f64;
        let s: f64 = self.value(a).iter().zip(self.value(b)).map(|(x, y)| (x - y) * (x - y)).sum();
        self.push(vec![], vec![s / n], Op::Mse(a, b))
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        if shape.iter().product::<usize>() != self.value(x).len() {
            return Err(Error::param(format!("cannot reshape {:?} to {shape:?}", self.shape(x))));
        }
        let v = self.value(x).to_vec();
        self.push(shape.to_vec(), v, Op::Reshape(x))
    }

    /// Reverse sweep from a scalar loss. A tape can be differentiated once.
    pub fn backward(&mut self, loss: Var) -> Result<Gradients> {
        if self.consumed {
            return Err(Error::State("backward already ran on this tape".into()));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return Err(Error::param(format!(
                "backward needs a scalar loss, got shape {:?}",
                self.nodes[loss.0].shape
            )));
        }
        self.consumed = true;
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        fn acc(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
            grads[v.0].get_or_insert_with(|| vec![0.0; len])
        }

        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf => {}
                &Op::Affine { x, w, b, rows, din, dout } => {
                    let xv = &self.nodes[x.0].value;
                    let wv = &self.nodes[w.0].value;
                    let gx = acc(&mut grads, x, rows * din);
                    // dX += dY · Wᵀ
                    gemm(rows, dout, din, &g, (dout as isize, 1), wv, (1, dout as isize), gx, true);
                    let gw = acc(&mut grads, w, din * dout);
                    // dW += Xᵀ · dY
                    gemm(din, rows, dout, xv, (1, din as isize), &g, (dout as isize, 1), gw, true);
                    if let Some(b) = b {
                        let gb = acc(&mut grads, b, dout);
                        for r in g.chunks_exact(dout) {
                            for (d, v) in gb.iter_mut().zip(r) {
                                *d += v;
                            }
                        }
                    }
                }
                &Op::Pointwise(x, kind) => {
                    let out = &node.value;
                    let xv = &self.nodes[x.0].value;
                    let gx = acc(&mut grads, x, g.len());
                    match kind {
                        Activation::Relu => {
                            for ((d, &gi), &xi) in gx.iter_mut().zip(&g).zip(xv) {
                                if xi > 0.0 {
                                    *d += gi;
                                }
                            }
                        }
                        Activation::Tanh => {
                            for ((d, &gi), &yi) in gx.iter_mut().zip(&g).zip(out) {
                                *d += gi * (1.0 - yi * yi);
                            }
                        }
                    }
                }
                Op::Gather { x, idx, cols } => {
                    let (x, cols) = (*x, *cols);
                    let len = self.nodes[x.0].value.len();
                    let gx = acc(&mut grads, x, len);
                    for (r, &i) in idx.iter().enumerate() {
                        let src = &g[r * cols..(r + 1) * cols];
                        for (d, v) in gx[i * cols..(i + 1) * cols].iter_mut().zip(src) {
                            *d += v;
                        }
                    }
                }
                Op::Concat { parts, widths } => {
                    let total: usize = widths.iter().sum();
                    let rows = g.len() / total.max(1);
                    let mut off = 0;
                    for (&p, &w) in parts.iter().zip(widths) {
                        let gp = acc(&mut grads, p, rows * w);
                        for r in 0..rows {
                            for c in 0..w {
                                gp[r * w + c] += g[r * total + off + c];
                            }
                        }
                        off += w;
                    }
                }
                &Op::Softmax { x, k, c } => {
                    let y = &node.value;
                    let n = y.len() / (k * c).max(1);
                    let gx = acc(&mut grads, x, y.len());
                    let mut dots = vec![0.0; c];
                    for i in 0..n {
                        let base = i * k * c;
                        dots.iter_mut().for_each(|d| *d = 0.0);
                        for j in 0..k {
                            for ch in 0..c {
                                dots[ch] += y[base + j * c + ch] * g[base + j * c + ch];
                            }
                        }
                        for j in 0..k {
                            for ch in 0..c {
                                let e = base + j * c + ch;
                                gx[e] += y[e] * (g[e] - dots[ch]);
                            }
                        }
                    }
                }
                &Op::Reduce { x, len, inner, kind } => {
                    let outer = g.len() / inner.max(1);
                    let f = if kind == Reduction::Mean { 1.0 / len.max(1) as f64 } else { 1.0 };
                    let gx = acc(&mut grads, x, outer * len * inner);
                    for o in 0..outer {
                        let src = &g[o * inner..(o + 1) * inner];
                        for l in 0..len {
                            let dst = &mut gx[(o * len + l) * inner..(o * len + l + 1) * inner];
                            for (d, v) in dst.iter_mut().zip(src) {
                                *d += f * v;
                            }
                        }
                    }
                }
                &Op::SumAll(x) => {
                    let len = self.nodes[x.0].value.len();
                    acc(&mut grads, x, len).iter_mut().for_each(|d| *d += g[0]);
                }
                &Op::Add(a, b) => {
                    for v in [a, b] {
                        acc(&mut grads, v, g.len()).iter_mut().zip(&g).for_each(|(d, x)| *d += x);
                    }
                }
                &Op::Sub(a, b) => {
                    acc(&mut grads, a, g.len()).iter_mut().zip(&g).for_each(|(d, x)| *d += x);
                    acc(&mut grads, b, g.len()).iter_mut().zip(&g).for_each(|(d, x)| *d -= x);
                }
                &Op::Mul(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let ga: Vec<f64> = g.iter().zip(bv).map(|(x, y)| x * y).collect();
                    let gb: Vec<f64> = g.iter().zip(av).map(|(x, y)| x * y).collect();
                    acc(&mut grads, a, g.len()).iter_mut().zip(&ga).for_each(|(d, x)| *d += x);
                    acc(&mut grads, b, g.len()).iter_mut().zip(&gb).for_each(|(d, x)| *d += x);
                }
                &Op::Scale(x, c) => {
                    acc(&mut grads, x, g.len()).iter_mut().zip(&g).for_each(|(d, v)| *d += c * v);
                }
                &Op::Mse(a, b) => {
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let f = 2.0 * g[0] / av.len().max(1) as f64;
                    let diff: Vec<f64> = av.iter().zip(bv).map(|(x, y)| f * (x - y)).collect();
                    acc(&mut grads, a, diff.len()).iter_mut().zip(&diff).for_each(|(d, x)| *d += x);
                    acc(&mut grads, b, diff.len()).iter_mut().zip(&diff).for_each(|(d, x)| *d -= x);
                }
                &Op::Reshape(x) => {
                    acc(&mut grads, x, g.len()).iter_mut().zip(&g).for_each(|(d, v)| *d += v);
                }
            }
            grads[id] = Some(g);
        }
        Ok(Gradients { grads })
    }
}
