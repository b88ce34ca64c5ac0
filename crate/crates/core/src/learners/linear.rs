//! L2-regularized logistic regression fitted by damped Newton steps.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnKind, FeatureColumn};

/// Maps raw features to `[0, 1]` numeric columns followed by one-hot nominals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    parts: Vec<EncodedColumn>,
    width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum EncodedColumn {
    Numeric { min: f64, range: f64 },
    Nominal { values: usize },
}

impl Encoder {
    pub fn fit(columns: &[FeatureColumn], features: &Array2<f64>) -> Self {
        let mut width = 0;
        let parts = columns
            .iter()
            .zip(features.columns())
            .map(|(c, col)| match &c.kind {
                ColumnKind::Numeric => {
                    width += 1;
                    let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                    let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    EncodedColumn::Numeric {
                        min: lo,
                        range: hi - lo,
                    }
                }
                ColumnKind::Nominal(values) => {
                    width += values.len();
                    EncodedColumn::Nominal { values: values.len() }
                }
            })
            .collect();
        Encoder { parts, width }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn encode_row(&self, row: ArrayView1<'_, f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.width];
        let mut at = 0;
        for (part, &x) in self.parts.iter().zip(row.iter()) {
            match *part {
                EncodedColumn::Numeric { min, range } => {
                    out[at] = if range > 0.0 { (x - min) / range } else { 0.0 };
                    at += 1;
                }
                EncodedColumn::Nominal { values } => {
                    let v = x as usize;
                    if v < values {
                        out[at + v] = 1.0;
                    }
                    at += values;
                }
            }
        }
        out
    }

    pub fn encode(&self, features: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros((features.nrows(), self.width));
        for (i, row) in features.rows().into_iter().enumerate() {
            out.row_mut(i).assign(&ArrayView1::from(&self.encode_row(row)[..]));
        }
        out
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + exp(z))` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `l2/2 * |w|^2` (bias unpenalized) and its
/// gradient. `params` holds the weights followed by the bias.
pub fn objective(x: &Array2<f64>, y: &[u8], l2: f64, params: &[f64]) -> (f64, Vec<f64>) {
    let (n, d) = x.dim();
    let (w, b) = params.split_at(d);
    let mut loss = 0.0;
    let mut grad = vec![0.0; d + 1];
    for (i, row) in x.rows().into_iter().enumerate() {
        let z = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b[0];
        let yi = f64::from(y[i]);
        loss += softplus(z) - yi * z;
        let r = sigmoid(z) - yi;
        for (g, a) in grad.iter_mut().zip(row.iter()) {
            *g += r * a;
        }
        grad[d] += r;
    }
    let nf = n as f64;
    loss /= nf;
    for g in grad.iter_mut() {
        *g /= nf;
    }
    for j in 0..d {
        loss += 0.5 * l2 * w[j] * w[j];
        grad[j] += l2 * w[j];
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub params: Vec<f64>,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes [`objective`] until the gradient max-norm drops below `tol`.
pub fn fit(x: &Array2<f64>, y: &[u8], l2: f64, tol: f64, max_iter: usize) -> FitResult {
    let (n, d) = x.dim();
    let dim = d + 1;
    let mut params = vec![0.0; dim];
    let (mut loss, mut grad) = objective(x, y, l2, &params);
    let mut iterations = 0;
    let max_abs = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    while max_abs(&grad) >= tol && iterations < max_iter {
        iterations += 1;
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for row in x.rows() {
            let z = row.iter().zip(&params).map(|(a, b)| a * b).sum::<f64>() + params[d];
            let p = sigmoid(z);
            let s = p * (1.0 - p) / n as f64;
            for a in 0..d {
                let sa = s * row[a];
                if sa == 0.0 {
                    continue;
                }
                for b in a..d {
                    h[(a, b)] += sa * row[b];
                }
                h[(a, d)] += sa;
            }
            h[(d, d)] += s;
        }
        for a in 0..dim {
            for b in 0..a {
                h[(a, b)] = h[(b, a)];
            }
            h[(a, a)] += if a < d { l2 } else { 1e-12 };
        }
        let g = DVector::from_column_slice(&grad);
        let step = match h.clone().cholesky() {
            Some(ch) => ch.solve(&g),
            None => g.clone(),
        };
        let slope: f64 = -g.dot(&step);
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, s)| p - t * s).collect();
            let (l, gr) = objective(x, y, l2, &trial);
            if l <= loss + 1e-4 * t * slope || t < 1e-10 {
                params = trial;
                loss = l;
                grad = gr;
                break;
            }
            t *= 0.5;
        }
    }
    FitResult {
        grad_norm: max_abs(&grad),
        params,
        iterations,
    }
}
