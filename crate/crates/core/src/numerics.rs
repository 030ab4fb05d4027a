//! Dense fp64 matrices, the layer primitives the model needs, their analytic
//! backward passes, Adam, and a central-difference gradient checker.
//!
//! Everything here is deterministic: no threading, no reduction-order tricks.
//! Backward functions return gradients of a scalar loss with respect to each
//! input, verified against finite differences in the test suite.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },
}

/// Row-major dense matrix of f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, values: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols, "value length must equal rows*cols");
        Matrix { rows, cols, values }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            values.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.values[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.values[c * self.rows + r] = self.values[r * self.cols + c];
            }
        }
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn fill(&mut self, v: f64) {
        self.values.iter_mut().for_each(|x| *x = v);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Vertical stack: rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "vstack needs equal column counts");
        let mut values = Vec::with_capacity((self.rows + other.rows) * self.cols);
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Matrix { rows: self.rows + other.rows, cols: self.cols, values }
    }

    /// Rows `lo..hi` as a new matrix.
    pub fn slice_rows(&self, lo: usize, hi: usize) -> Matrix {
        assert!(lo <= hi && hi <= self.rows);
        Matrix {
            rows: hi - lo,
            cols: self.cols,
            values: self.values[lo * self.cols..hi * self.cols].to_vec(),
        }
    }
}

fn shape_err(expected: (usize, usize), got: (usize, usize)) -> NumericsError {
    NumericsError::ShapeMismatch {
        expected: format!("{}x{}", expected.0, expected.1),
        got: format!("{}x{}", got.0, got.1),
    }
}

/// C = A * B.
pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    assert_eq!(a.cols, b.rows, "matmul inner dimensions must agree");
    let mut out = Matrix::zeros(a.rows, b.cols);
    // i-k-j loop order keeps the inner traversal contiguous in both B and C.
    for i in 0..a.rows {
        for k in 0..a.cols {
            let aik = a.values[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let brow = &b.values[k * b.cols..(k + 1) * b.cols];
            let crow = &mut out.values[i * b.cols..(i + 1) * b.cols];
            for j in 0..b.cols {
                crow[j] += aik * brow[j];
            }
        }
    }
    out
}

/// Gradients of `L` w.r.t. both matmul inputs given dL/dC.
/// dA = G * B^T, dB = A^T * G.
pub fn matmul_backward(a: &Matrix, b: &Matrix, upstream: &Matrix) -> (Matrix, Matrix) {
    assert_eq!(upstream.shape(), (a.rows, b.cols), "upstream shape mismatch");
    (matmul(upstream, &b.transpose()), matmul(&a.transpose(), upstream))
}

/// Elementwise sum; backward is the identity on both inputs.
pub fn add(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    if a.shape() != b.shape() {
        return Err(shape_err(a.shape(), b.shape()));
    }
    Ok(Matrix {
        rows: a.rows,
        cols: a.cols,
        values: a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect(),
    })
}

/// Adds a 1 x cols row vector to every row (bias broadcast).
pub fn add_row_broadcast(a: &Matrix, row: &Matrix) -> Result<Matrix, NumericsError> {
    if row.rows != 1 || row.cols != a.cols {
        return Err(shape_err((1, a.cols), row.shape()));
    }
    let mut out = a.clone();
    for r in 0..a.rows {
        for c in 0..a.cols {
            out.values[r * a.cols + c] += row.values[c];
        }
    }
    Ok(out)
}

/// Backward of the broadcast add w.r.t. the row vector: column sums of G.
pub fn row_broadcast_backward(upstream: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, upstream.cols);
    for r in 0..upstream.rows {
        for c in 0..upstream.cols {
            out.values[c] += upstream.values[r * upstream.cols + c];
        }
    }
    out
}

pub fn scale(a: &Matrix, s: f64) -> Matrix {
    a.map(|v| v * s)
}

pub fn scale_backward(upstream: &Matrix, s: f64) -> Matrix {
    scale(upstream, s)
}

/// ReLU with subgradient 0 at the kink.
pub fn relu(a: &Matrix) -> Matrix {
    a.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// dL/dx = dL/dy where x > 0, else 0. `input` is the pre-activation.
pub fn relu_backward(input: &Matrix, upstream: &Matrix) -> Matrix {
    assert_eq!(input.shape(), upstream.shape());
    Matrix {
        rows: input.rows,
        cols: input.cols,
        values: input
            .values
            .iter()
            .zip(&upstream.values)
            .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
            .collect(),
    }
}

#[inline]
pub fn sigmoid_scalar(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(a: &Matrix) -> Matrix {
    a.map(sigmoid_scalar)
}

/// dL/dx = dL/dy * s(x) * (1 - s(x)). `input` is the pre-activation.
pub fn sigmoid_backward(input: &Matrix, upstream: &Matrix) -> Matrix {
    assert_eq!(input.shape(), upstream.shape());
    Matrix {
        rows: input.rows,
        cols: input.cols,
        values: input
            .values
            .iter()
            .zip(&upstream.values)
            .map(|(&x, &g)| {
                let s = sigmoid_scalar(x);
                g * s * (1.0 - s)
            })
            .collect(),
    }
}

/// Mean squared error over all entries and its gradient w.r.t. `pred`.
pub fn mse_loss(pred: &Matrix, target: &Matrix) -> Result<(f64, Matrix), NumericsError> {
    if pred.shape() != target.shape() {
        return Err(shape_err(pred.shape(), target.shape()));
    }
    let n = pred.values.len().max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(pred.rows, pred.cols);
    for i in 0..pred.values.len() {
        let d = pred.values[i] - target.values[i];
        loss += d * d;
        grad.values[i] = 2.0 * d / n;
    }
    Ok((loss / n, grad))
}

/// MSE restricted to entries where `mask` is true; the mean divides by the
/// number of unmasked entries. Gradient is zero on masked-out entries.
pub fn masked_mse_loss(
    pred: &Matrix,
    target: &Matrix,
    mask: &[bool],
    denom: usize,
) -> Result<(f64, Matrix), NumericsError> {
    if pred.shape() != target.shape() {
        return Err(shape_err(pred.shape(), target.shape()));
    }
    assert_eq!(mask.len(), pred.values.len());
    let n = denom.max(1) as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::zeros(pred.rows, pred.cols);
    for i in 0..pred.values.len() {
        if mask[i] {
            let d = pred.values[i] - target.values[i];
            loss += d * d;
            grad.values[i] = 2.0 * d / n;
        }
    }
    Ok((loss / n, grad))
}

/// Mean binary cross-entropy on logits, in the overflow-safe form
/// `max(z,0) - z*y + ln(1 + exp(-|z|))`. Gradient is `(sigmoid(z) - y)/n`.
pub fn bce_logits_loss(logits: &[f64], labels: &[f64]) -> Result<(f64, Vec<f64>), NumericsError> {
    if logits.len() != labels.len() {
        return Err(NumericsError::ShapeMismatch {
            expected: format!("{} labels", logits.len()),
            got: format!("{} labels", labels.len()),
        });
    }
    if logits.is_empty() {
        return Ok((0.0, Vec::new()));
    }
    let n = logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.iter().zip(labels) {
        loss += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        grad.push((sigmoid_scalar(z) - y) / n);
    }
    Ok((loss / n, grad))
}

/// A named value/gradient pair. Gradients are zeroed by `adam_step`.
#[derive(Debug, Clone)]
pub struct Parameter {
    pub name: String,
    pub value: Matrix,
    pub grad: Matrix,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: Matrix) -> Self {
        let grad = Matrix::zeros(value.rows(), value.cols());
        Parameter { name: name.into(), value, grad }
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}

/// First/second moment accumulators, one pair per parameter, plus the
/// shared timestep.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<Matrix>,
    v: Vec<Matrix>,
    t: u64,
}

#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl AdamState {
    pub fn new(params: &[&Parameter]) -> Self {
        AdamState {
            m: params.iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect(),
            v: params.iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect(),
            t: 0,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update over all parameters; gradients are zeroed
/// afterwards.
pub fn adam_step(
    params: &mut [&mut Parameter],
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<(), NumericsError> {
    if params.len() != state.m.len() {
        return Err(NumericsError::ShapeMismatch {
            expected: format!("{} parameters", state.m.len()),
            got: format!("{} parameters", params.len()),
        });
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for (idx, p) in params.iter_mut().enumerate() {
        if p.value.shape() != state.m[idx].shape() {
            return Err(shape_err(state.m[idx].shape(), p.value.shape()));
        }
        let m = &mut state.m[idx];
        let v = &mut state.v[idx];
        for i in 0..p.value.values().len() {
            let g = p.grad.values()[i];
            m.values_mut()[i] = cfg.beta1 * m.values()[i] + (1.0 - cfg.beta1) * g;
            v.values_mut()[i] = cfg.beta2 * v.values()[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m.values()[i] / bc1;
            let v_hat = v.values()[i] / bc2;
            p.value.values_mut()[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        p.zero_grad();
    }
    Ok(())
}

/// Relative disagreement between an analytic gradient entry and its
/// central-difference estimate. The denominator is floored at 1 so that
/// near-zero gradients are compared absolutely.
pub fn grad_rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1.0)
}

/// Central-difference check of a scalar loss against prepopulated analytic
/// gradients. `loss` re-evaluates the loss from the current parameter values;
/// coordinates are perturbed in place and restored. Returns the maximum
/// relative error over all checked coordinates.
///
/// `max_coords_per_param` caps the number of coordinates checked per
/// parameter (sampled with a stream seeded by `sample_seed`); `None` checks
/// every coordinate.
pub fn finite_diff_check<F>(
    mut loss: F,
    params: &mut [&mut Parameter],
    eps: f64,
    max_coords_per_param: Option<usize>,
    sample_seed: u64,
) -> f64
where
    F: FnMut(&[&mut Parameter]) -> f64,
{
    use rand::seq::SliceRandom;
    let mut worst = 0.0f64;
    for pi in 0..params.len() {
        let n = params[pi].value.values().len();
        let coords: Vec<usize> = match max_coords_per_param {
            Some(cap) if cap < n => {
                let mut rng =
                    crate::rng::salted_stream(sample_seed, crate::rng::Purpose::FdSampling, pi as u64);
                let mut all: Vec<usize> = (0..n).collect();
                all.shuffle(&mut rng);
                all.truncate(cap);
                all
            }
            _ => (0..n).collect(),
        };
        for ci in coords {
            let orig = params[pi].value.values()[ci];
            params[pi].value.values_mut()[ci] = orig + eps;
            let f_plus = loss(params);
            params[pi].value.values_mut()[ci] = orig - eps;
            let f_minus = loss(params);
            params[pi].value.values_mut()[ci] = orig;
            let numeric = (f_plus - f_minus) / (2.0 * eps);
            let analytic = params[pi].grad.values()[ci];
            worst = worst.max(grad_rel_err(analytic, numeric));
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = crate::rng::stream(seed, crate::rng::Purpose::ParamInit);
        Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect())
    }

    #[test]
    fn relu_forward_and_backward() {
        let x = Matrix::from_vec(1, 3, vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).values(), &[0.0, 0.0, 2.0]);
        let g = Matrix::from_vec(1, 3, vec![1.0, 1.0, 1.0]);
        // subgradient at exactly 0 is 0
        assert_eq!(relu_backward(&x, &g).values(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn identity_matmul_preserves_input() {
        let x = random_matrix(3, 3, 1);
        let mut eye = Matrix::zeros(3, 3);
        for i in 0..3 {
            eye.set(i, i, 1.0);
        }
        assert_eq!(matmul(&x, &eye), x);
    }

    #[test]
    fn matmul_backward_matches_finite_differences() {
        let a = random_matrix(3, 4, 2);
        let b = random_matrix(4, 2, 3);
        // loss = sum of entries of A*B, so upstream gradient is all ones
        let ones = Matrix::from_vec(3, 2, vec![1.0; 6]);
        let (da, db) = matmul_backward(&a, &b, &ones);

        let loss = |a: &Matrix, b: &Matrix| matmul(a, b).values().iter().sum::<f64>();
        let eps = 1e-6;
        let mut worst = 0.0f64;
        for i in 0..a.values().len() {
            let mut ap = a.clone();
            ap.values_mut()[i] += eps;
            let mut am = a.clone();
            am.values_mut()[i] -= eps;
            let fd = (loss(&ap, &b) - loss(&am, &b)) / (2.0 * eps);
            worst = worst.max(grad_rel_err(da.values()[i], fd));
        }
        for i in 0..b.values().len() {
            let mut bp = b.clone();
            bp.values_mut()[i] += eps;
            let mut bm = b.clone();
            bm.values_mut()[i] -= eps;
            let fd = (loss(&a, &bp) - loss(&a, &bm)) / (2.0 * eps);
            worst = worst.max(grad_rel_err(db.values()[i], fd));
        }
        assert!(worst < 1e-6, "matmul backward rel err {worst}");
    }

    #[test]
    fn mse_loss_examples() {
        let p = Matrix::from_vec(1, 2, vec![1.0, 0.0]);
        let t = Matrix::zeros(1, 2);
        let (loss, _) = mse_loss(&p, &t).unwrap();
        assert_eq!(loss, 0.5);
        let (zero, _) = mse_loss(&t, &t).unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let p = random_matrix(5, 3, 4);
        let t = random_matrix(5, 3, 5);
        let (_, grad) = mse_loss(&p, &t).unwrap();
        let eps = 1e-6;
        let mut worst = 0.0f64;
        for i in 0..p.values().len() {
            let mut pp = p.clone();
            pp.values_mut()[i] += eps;
            let mut pm = p.clone();
            pm.values_mut()[i] -= eps;
            let fd = (mse_loss(&pp, &t).unwrap().0 - mse_loss(&pm, &t).unwrap().0) / (2.0 * eps);
            worst = worst.max(grad_rel_err(grad.values()[i], fd));
        }
        assert!(worst < 1e-6, "mse grad rel err {worst}");
    }

    #[test]
    fn mse_shape_mismatch_is_an_error() {
        let a = Matrix::zeros(2, 2);
        let b = Matrix::zeros(2, 3);
        assert!(mse_loss(&a, &b).is_err());
    }

    #[test]
    fn bce_known_values_and_stability() {
        let (l, _) = bce_logits_loss(&[0.0], &[1.0]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        // extreme logit must not overflow
        let (l, g) = bce_logits_loss(&[50.0], &[1.0]).unwrap();
        assert!(l.is_finite() && l < 1e-20);
        assert!(g[0].is_finite());
        let (l, _) = bce_logits_loss(&[-50.0], &[0.0]).unwrap();
        assert!(l.is_finite() && l < 1e-20);
    }

    #[test]
    fn bce_gradient_matches_finite_differences() {
        let mut rng = crate::rng::stream(6, crate::rng::Purpose::ParamInit);
        let logits: Vec<f64> = (0..20).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let labels: Vec<f64> = (0..20).map(|_| if rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect();
        let (_, grad) = bce_logits_loss(&logits, &labels).unwrap();
        let eps = 1e-6;
        let mut worst = 0.0f64;
        for i in 0..logits.len() {
            let mut lp = logits.clone();
            lp[i] += eps;
            let mut lm = logits.clone();
            lm[i] -= eps;
            let fd = (bce_logits_loss(&lp, &labels).unwrap().0
                - bce_logits_loss(&lm, &labels).unwrap().0)
                / (2.0 * eps);
            worst = worst.max(grad_rel_err(grad[i], fd));
        }
        assert!(worst < 1e-6, "bce grad rel err {worst}");
    }

    #[test]
    fn sigmoid_backward_matches_finite_differences() {
        let x = random_matrix(2, 4, 7);
        let g = Matrix::from_vec(2, 4, vec![1.0; 8]);
        let grad = sigmoid_backward(&x, &g);
        let eps = 1e-6;
        for i in 0..x.values().len() {
            let mut xp = x.clone();
            xp.values_mut()[i] += eps;
            let mut xm = x.clone();
            xm.values_mut()[i] -= eps;
            let fd = (sigmoid(&xp).values().iter().sum::<f64>()
                - sigmoid(&xm).values().iter().sum::<f64>())
                / (2.0 * eps);
            assert!(grad_rel_err(grad.values()[i], fd) < 1e-6);
        }
    }

    #[test]
    fn adam_first_step_magnitude() {
        // With g = 1 everywhere, the bias-corrected first step is
        // lr * 1 / (1 + eps) which is approximately lr.
        let mut p = Parameter::new("w", Matrix::zeros(2, 2));
        p.grad.fill(1.0);
        let mut state = AdamState::new(&[&p]);
        let cfg = AdamConfig { lr: 0.1, ..AdamConfig::default() };
        adam_step(&mut [&mut p], &mut state, &cfg).unwrap();
        for &v in p.value.values() {
            assert!((v + 0.1).abs() < 1e-6, "step {v}");
        }
        assert_eq!(state.timestep(), 1);
        assert!(p.grad.values().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn adam_zero_gradient_leaves_parameters() {
        let mut p = Parameter::new("w", Matrix::from_vec(1, 2, vec![3.0, -2.0]));
        let mut state = AdamState::new(&[&p]);
        adam_step(&mut [&mut p], &mut state, &AdamConfig::default()).unwrap();
        assert_eq!(p.value.values(), &[3.0, -2.0]);
        assert_eq!(state.timestep(), 1);
    }

    #[test]
    fn adam_converges_on_quadratic() {
        // 100 steps on f(w) = w^2 from w = 1 with lr = 0.05 ends below 0.1.
        let mut p = Parameter::new("w", Matrix::from_vec(1, 1, vec![1.0]));
        let mut state = AdamState::new(&[&p]);
        let cfg = AdamConfig { lr: 0.05, ..AdamConfig::default() };
        for _ in 0..100 {
            let w = p.value.get(0, 0);
            p.grad.set(0, 0, 2.0 * w);
            adam_step(&mut [&mut p], &mut state, &cfg).unwrap();
        }
        assert!(p.value.get(0, 0).abs() < 0.1);
    }

    #[test]
    fn finite_diff_check_linear_loss_is_exact() {
        let mut p = Parameter::new("w", random_matrix(3, 3, 8));
        let coeff = random_matrix(3, 3, 9);
        p.grad = coeff.clone();
        let c = coeff.clone();
        let err = finite_diff_check(
            |ps| {
                ps[0].value.values().iter().zip(c.values()).map(|(w, k)| w * k).sum::<f64>()
            },
            &mut [&mut p],
            1e-5,
            None,
            0,
        );
        assert!(err < 1e-9, "linear loss rel err {err}");
    }

    #[test]
    fn finite_diff_check_detects_corruption() {
        let mut p = Parameter::new("w", random_matrix(2, 2, 10));
        let coeff = random_matrix(2, 2, 11);
        p.grad = coeff.clone();
        p.grad.values_mut()[0] += 0.1;
        let c = coeff.clone();
        let err = finite_diff_check(
            |ps| {
                ps[0].value.values().iter().zip(c.values()).map(|(w, k)| w * k).sum::<f64>()
            },
            &mut [&mut p],
            1e-5,
            None,
            0,
        );
        assert!(err > 1e-2, "corrupted gradient not detected: {err}");
    }
}
