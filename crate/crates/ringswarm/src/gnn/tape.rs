//! Minimal reverse-mode autodiff over f64 vectors, just enough for the
//! message-passing network and its losses.

use super::losses::loss_total_grad;

pub type NodeId = usize;

#[derive(Debug)]
enum Op {
    Leaf,
    /// y = W x, with W a leaf holding a row-major (rows x cols) matrix.
    MatVec {
        w: NodeId,
        x: NodeId,
        rows: usize,
        cols: usize,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    /// y = a + k * b, k a constant.
    AddScaled {
        a: NodeId,
        b: NodeId,
        k: f64,
    },
    Tanh {
        x: NodeId,
    },
    Concat {
        parts: Vec<NodeId>,
    },
    SumVecs {
        parts: Vec<NodeId>,
    },
    Softmax {
        x: NodeId,
    },
    /// y = x[0..len].
    Prefix {
        x: NodeId,
        len: usize,
    },
    /// y = k * x, k a constant.
    Scale {
        x: NodeId,
        k: f64,
    },
    /// Segmented matvec: the same (rows x cols) leaf matrix applied to each
    /// of `n` consecutive `cols`-long segments of x, producing `n` stacked
    /// `rows`-long segments. One op covers a weight-shared layer over all
    /// goal slots of an agent.
    MatVecSeg {
        w: NodeId,
        x: NodeId,
        rows: usize,
        cols: usize,
        n: usize,
    },
    /// y = a + b tiled; len(a) must be a multiple of len(b). Segmented
    /// bias add companion to `MatVecSeg`.
    AddTiled {
        a: NodeId,
        b: NodeId,
    },
    /// Builds `n` stacked segments, each the concatenation of one
    /// `width`-long slice from every stacked source followed by every
    /// shared vector in full. Assembles per-slot MLP inputs in one op.
    ZipStack {
        stacked: Vec<(NodeId, usize)>,
        shared: Vec<NodeId>,
        n: usize,
    },
    /// Mean over the `n` consecutive segments of x.
    SegMean {
        x: NodeId,
        n: usize,
    },
    /// Scalar assignment loss over per-agent candidate-space rows.
    AssignLoss {
        rows: Vec<NodeId>,
        meta: LossMeta,
    },
}

/// Everything the fused loss op needs besides the row values.
#[derive(Debug, Clone)]
pub struct LossMeta {
    /// Candidate goal indices per agent (maps row slots to goal columns).
    pub candidates: Vec<Vec<usize>>,
    /// One-hot label matrix, n_agents x n_goals.
    pub y: Vec<Vec<f64>>,
    pub n_goals: usize,
    pub alpha: f64,
    pub eps: f64,
}

#[derive(Debug)]
struct Node {
    value: Vec<f64>,
    grad: Vec<f64>,
    op: Op,
}

#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        let grad = vec![0.0; value.len()];
        self.nodes.push(Node { value, grad, op });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    pub fn grad(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].grad
    }

    pub fn leaf(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn matvec(&mut self, w: NodeId, rows: usize, cols: usize, x: NodeId) -> NodeId {
        debug_assert_eq!(self.nodes[w].value.len(), rows * cols);
        debug_assert_eq!(self.nodes[x].value.len(), cols);
        let mut out = vec![0.0; rows];
        {
            let wv = &self.nodes[w].value;
            let xv = &self.nodes[x].value;
            for (i, slot) in out.iter_mut().enumerate() {
                let row = &wv[i * cols..(i + 1) * cols];
                *slot = row.iter().zip(xv).map(|(a, b)| a * b).sum();
            }
        }
        self.push(out, Op::MatVec { w, x, rows, cols })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .zip(&self.nodes[b].value)
            .map(|(x, y)| x + y)
            .collect();
        self.push(out, Op::Add { a, b })
    }

    pub fn add_scaled(&mut self, a: NodeId, b: NodeId, k: f64) -> NodeId {
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .zip(&self.nodes[b].value)
            .map(|(x, y)| x + k * y)
            .collect();
        self.push(out, Op::AddScaled { a, b, k })
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let out: Vec<f64> = self.nodes[x].value.iter().map(|v| v.tanh()).collect();
        self.push(out, Op::Tanh { x })
    }

    pub fn concat(&mut self, parts: Vec<NodeId>) -> NodeId {
        let mut out = Vec::new();
        for &p in &parts {
            out.extend_from_slice(&self.nodes[p].value);
        }
        self.push(out, Op::Concat { parts })
    }

    pub fn sum_vecs(&mut self, parts: Vec<NodeId>) -> NodeId {
        let len = self.nodes[parts[0]].value.len();
        let mut out = vec![0.0; len];
        for &p in &parts {
            for (slot, v) in out.iter_mut().zip(&self.nodes[p].value) {
                *slot += v;
            }
        }
        self.push(out, Op::SumVecs { parts })
    }

    pub fn softmax(&mut self, x: NodeId) -> NodeId {
        let xv = &self.nodes[x].value;
        let max = xv.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = xv.iter().map(|v| (v - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let out: Vec<f64> = exps.iter().map(|e| e / total).collect();
        self.push(out, Op::Softmax { x })
    }

    pub fn prefix(&mut self, x: NodeId, len: usize) -> NodeId {
        debug_assert!(len <= self.nodes[x].value.len());
        let out = self.nodes[x].value[..len].to_vec();
        self.push(out, Op::Prefix { x, len })
    }

    pub fn scale(&mut self, x: NodeId, k: f64) -> NodeId {
        let out: Vec<f64> = self.nodes[x].value.iter().map(|v| k * v).collect();
        self.push(out, Op::Scale { x, k })
    }

    pub fn matvec_seg(&mut self, w: NodeId, rows: usize, cols: usize, x: NodeId, n: usize) -> NodeId {
        debug_assert_eq!(self.nodes[w].value.len(), rows * cols);
        debug_assert_eq!(self.nodes[x].value.len(), cols * n);
        let wv = &self.nodes[w].value;
        let xv = &self.nodes[x].value;
        let mut out = vec![0.0; rows * n];
        for k in 0..n {
            let xs = &xv[k * cols..(k + 1) * cols];
            for i in 0..rows {
                out[k * rows + i] = wv[i * cols..(i + 1) * cols]
                    .iter()
                    .zip(xs)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
        self.push(out, Op::MatVecSeg { w, x, rows, cols, n })
    }

    pub fn add_tiled(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let bv = &self.nodes[b].value;
        debug_assert_eq!(self.nodes[a].value.len() % bv.len(), 0);
        let out: Vec<f64> = self.nodes[a]
            .value
            .iter()
            .enumerate()
            .map(|(i, x)| x + bv[i % bv.len()])
            .collect();
        self.push(out, Op::AddTiled { a, b })
    }

    pub fn zip_stack(&mut self, stacked: Vec<(NodeId, usize)>, shared: Vec<NodeId>, n: usize) -> NodeId {
        let seg: usize = stacked.iter().map(|&(_, w)| w).sum::<usize>()
            + shared.iter().map(|&s| self.nodes[s].value.len()).sum::<usize>();
        let mut out = Vec::with_capacity(seg * n);
        for k in 0..n {
            for &(node, width) in &stacked {
                debug_assert_eq!(self.nodes[node].value.len(), width * n);
                out.extend_from_slice(&self.nodes[node].value[k * width..(k + 1) * width]);
            }
            for &s in &shared {
                out.extend_from_slice(&self.nodes[s].value);
            }
        }
        self.push(out, Op::ZipStack { stacked, shared, n })
    }

    pub fn seg_mean(&mut self, x: NodeId, n: usize) -> NodeId {
        let len = self.nodes[x].value.len();
        debug_assert_eq!(len % n, 0);
        let seg = len / n;
        let mut out = vec![0.0; seg];
        for (i, v) in self.nodes[x].value.iter().enumerate() {
            out[i % seg] += v / n as f64;
        }
        self.push(out, Op::SegMean { x, n })
    }

    /// Fused training loss over the per-agent soft rows.
    pub fn assign_loss(&mut self, rows: Vec<NodeId>, meta: LossMeta) -> NodeId {
        let a = self.scatter_rows(&rows, &meta);
        let (value, _) = loss_total_grad(&a, &meta.y, meta.alpha, meta.eps);
        self.push(vec![value], Op::AssignLoss { rows, meta })
    }

    fn scatter_rows(&self, rows: &[NodeId], meta: &LossMeta) -> Vec<Vec<f64>> {
        rows.iter()
            .enumerate()
            .map(|(i, &r)| {
                let mut full = vec![0.0; meta.n_goals];
                for (slot, &g) in meta.candidates[i].iter().enumerate() {
                    full[g] = self.nodes[r].value[slot];
                }
                full
            })
            .collect()
    }

    /// Reverse pass from a scalar node.
    pub fn backward(&mut self, loss: NodeId) {
        assert_eq!(self.nodes[loss].value.len(), 1);
        self.nodes[loss].grad[0] = 1.0;
        for id in (0..=loss).rev() {
            // Take grad and op out so parent grads can be written freely.
            let grad = std::mem::take(&mut self.nodes[id].grad);
            let op = std::mem::replace(&mut self.nodes[id].op, Op::Leaf);
            match &op {
                Op::Leaf => {}
                Op::MatVec { w, x, rows, cols } => {
                    let (w, x, rows, cols) = (*w, *x, *rows, *cols);
                    let xv = self.nodes[x].value.clone();
                    let wv = self.nodes[w].value.clone();
                    for i in 0..rows {
                        let gi = grad[i];
                        if gi == 0.0 {
                            continue;
                        }
                        let wg = &mut self.nodes[w].grad[i * cols..(i + 1) * cols];
                        for (j, slot) in wg.iter_mut().enumerate() {
                            *slot += gi * xv[j];
                        }
                    }
                    for j in 0..cols {
                        let mut acc = 0.0;
                        for i in 0..rows {
                            acc += wv[i * cols + j] * grad[i];
                        }
                        self.nodes[x].grad[j] += acc;
                    }
                }
                Op::Add { a, b } => {
                    let (a, b) = (*a, *b);
                    for (slot, g) in self.nodes[a].grad.iter_mut().zip(&grad) {
                        *slot += g;
                    }
                    for (slot, g) in self.nodes[b].grad.iter_mut().zip(&grad) {
                        *slot += g;
                    }
                }
                Op::AddScaled { a, b, k } => {
                    let (a, b, k) = (*a, *b, *k);
                    for (slot, g) in self.nodes[a].grad.iter_mut().zip(&grad) {
                        *slot += g;
                    }
                    for (slot, g) in self.nodes[b].grad.iter_mut().zip(&grad) {
                        *slot += k * g;
                    }
                }
                Op::Tanh { x } => {
                    let x = *x;
                    let yv = self.nodes[id].value.clone();
                    for ((slot, g), y) in self.nodes[x].grad.iter_mut().zip(&grad).zip(&yv) {
                        *slot += g * (1.0 - y * y);
                    }
                }
                Op::Concat { parts } => {
                    let parts = parts.clone();
                    let mut off = 0;
                    for p in parts {
                        let len = self.nodes[p].value.len();
                        for (slot, g) in self.nodes[p].grad.iter_mut().zip(&grad[off..off + len]) {
                            *slot += g;
                        }
                        off += len;
                    }
                }
                Op::SumVecs { parts } => {
                    let parts = parts.clone();
                    for p in parts {
                        for (slot, g) in self.nodes[p].grad.iter_mut().zip(&grad) {
                            *slot += g;
                        }
                    }
                }
                Op::Softmax { x } => {
                    let x = *x;
                    let yv = self.nodes[id].value.clone();
                    let inner: f64 = yv.iter().zip(&grad).map(|(y, g)| y * g).sum();
                    for ((slot, y), g) in self.nodes[x].grad.iter_mut().zip(&yv).zip(&grad) {
                        *slot += y * (g - inner);
                    }
                }
                Op::Prefix { x, len } => {
                    let (x, len) = (*x, *len);
                    for (slot, g) in self.nodes[x].grad[..len].iter_mut().zip(&grad) {
                        *slot += g;
                    }
                }
                Op::Scale { x, k } => {
                    let (x, k) = (*x, *k);
                    for (slot, g) in self.nodes[x].grad.iter_mut().zip(&grad) {
                        *slot += k * g;
                    }
                }
                Op::MatVecSeg { w, x, rows, cols, n } => {
                    let (w, x, rows, cols, n) = (*w, *x, *rows, *cols, *n);
                    let xv = self.nodes[x].value.clone();
                    let wv = self.nodes[w].value.clone();
                    for k in 0..n {
                        let xs = &xv[k * cols..(k + 1) * cols];
                        let gs = &grad[k * rows..(k + 1) * rows];
                        for i in 0..rows {
                            let gi = gs[i];
                            if gi == 0.0 {
                                continue;
                            }
                            let wg = &mut self.nodes[w].grad[i * cols..(i + 1) * cols];
                            for (j, slot) in wg.iter_mut().enumerate() {
                                *slot += gi * xs[j];
                            }
                        }
                        let xg = &mut self.nodes[x].grad[k * cols..(k + 1) * cols];
                        for (j, slot) in xg.iter_mut().enumerate() {
                            let mut acc = 0.0;
                            for i in 0..rows {
                                acc += wv[i * cols + j] * gs[i];
                            }
                            *slot += acc;
                        }
                    }
                }
                Op::AddTiled { a, b } => {
                    let (a, b) = (*a, *b);
                    for (slot, g) in self.nodes[a].grad.iter_mut().zip(&grad) {
                        *slot += g;
                    }
                    let blen = self.nodes[b].grad.len();
                    for (i, g) in grad.iter().enumerate() {
                        self.nodes[b].grad[i % blen] += g;
                    }
                }
                Op::ZipStack { stacked, shared, n } => {
                    let stacked = stacked.clone();
                    let shared = shared.clone();
                    let n = *n;
                    let mut off = 0;
                    for k in 0..n {
                        for &(node, width) in &stacked {
                            let dst = &mut self.nodes[node].grad[k * width..(k + 1) * width];
                            for (slot, g) in dst.iter_mut().zip(&grad[off..off + width]) {
                                *slot += g;
                            }
                            off += width;
                        }
                        for &s in &shared {
                            let len = self.nodes[s].grad.len();
                            for (slot, g) in
                                self.nodes[s].grad.iter_mut().zip(&grad[off..off + len])
                            {
                                *slot += g;
                            }
                            off += len;
                        }
                    }
                }
                Op::SegMean { x, n } => {
                    let (x, n) = (*x, *n);
                    let seg = grad.len();
                    for (i, slot) in self.nodes[x].grad.iter_mut().enumerate() {
                        *slot += grad[i % seg] / n as f64;
                    }
                }
                Op::AssignLoss { rows, meta } => {
                    let rows = rows.clone();
                    let meta = meta.clone();
                    let a = self.scatter_rows(&rows, &meta);
                    let (_, dl_da) = loss_total_grad(&a, &meta.y, meta.alpha, meta.eps);
                    let upstream = grad[0];
                    for (i, &r) in rows.iter().enumerate() {
                        for (slot, &g) in meta.candidates[i].iter().enumerate() {
                            self.nodes[r].grad[slot] += upstream * dl_da[i][g];
                        }
                    }
                }
            }
            self.nodes[id].grad = grad;
            self.nodes[id].op = op;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_tanh_chain_gradients() {
        // f(w, x) = sum(tanh(W x)); finite-difference each input.
        let w_data = vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4];
        let x_data = vec![0.9, -1.1];
        let eval = |wd: &[f64], xd: &[f64]| {
            let mut t = Tape::new();
            let w = t.leaf(wd.to_vec());
            let x = t.leaf(xd.to_vec());
            let y = t.matvec(w, 3, 2, x);
            let z = t.tanh(y);
            t.value(z).iter().sum::<f64>()
        };
        let mut t = Tape::new();
        let w = t.leaf(w_data.clone());
        let x = t.leaf(x_data.clone());
        let y = t.matvec(w, 3, 2, x);
        let z = t.tanh(y);
        // Reduce to scalar via a ones matvec.
        let ones = t.leaf(vec![1.0; 3]);
        let s = t.matvec(ones, 1, 3, z);
        t.backward(s);

        let step = 1e-6;
        for (idx, base) in w_data.iter().enumerate() {
            let mut plus = w_data.clone();
            plus[idx] = base + step;
            let mut minus = w_data.clone();
            minus[idx] = base - step;
            let fd = (eval(&plus, &x_data) - eval(&minus, &x_data)) / (2.0 * step);
            assert!((t.grad(w)[idx] - fd).abs() < 1e-8, "w[{idx}]");
        }
        for (idx, base) in x_data.iter().enumerate() {
            let mut plus = x_data.clone();
            plus[idx] = base + step;
            let mut minus = x_data.clone();
            minus[idx] = base - step;
            let fd = (eval(&w_data, &plus) - eval(&w_data, &minus)) / (2.0 * step);
            assert!((t.grad(x)[idx] - fd).abs() < 1e-8, "x[{idx}]");
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut t = Tape::new();
        let x = t.leaf(vec![1.0, 2.0, -0.5, 100.0]);
        let s = t.softmax(x);
        let sum: f64 = t.value(s).iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        assert!(t.value(s).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn softmax_backward_matches_fd() {
        let x_data = vec![0.2, -1.3, 0.8];
        let weights = [0.5, -0.25, 1.5];
        let eval = |xd: &[f64]| {
            let mut t = Tape::new();
            let x = t.leaf(xd.to_vec());
            let s = t.softmax(x);
            t.value(s)
                .iter()
                .zip(&weights)
                .map(|(v, w)| v * w)
                .sum::<f64>()
        };
        let mut t = Tape::new();
        let x = t.leaf(x_data.clone());
        let s = t.softmax(x);
        let wnode = t.leaf(weights.to_vec());
        let out = t.matvec(wnode, 1, 3, s);
        t.backward(out);
        let step = 1e-6;
        for idx in 0..3 {
            let mut plus = x_data.clone();
            plus[idx] += step;
            let mut minus = x_data.clone();
            minus[idx] -= step;
            let fd = (eval(&plus) - eval(&minus)) / (2.0 * step);
            assert!((t.grad(x)[idx] - fd).abs() < 1e-8);
        }
    }
}
