//! The skip-gram negative-sampling objective for one (center, context)
//! pair, written in f64 for gradient checking. The center representation
//! is the mean of its composition rows; the loss is
//! `-log σ(u_pos·h) - Σ log σ(-u_neg·h)`.

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable `log σ(x)`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Derivative of the logistic loss with respect to the score `u·h`,
/// where `label` is 1 for the observed context and 0 for a negative.
pub fn score_gradient(score: f64, label: f64) -> f64 {
    sigmoid(score) - label
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn compose(rows: &[Vec<f64>]) -> Vec<f64> {
    let dim = rows[0].len();
    let mut h = vec![0.0; dim];
    for r in rows {
        for (acc, v) in h.iter_mut().zip(r) {
            *acc += v;
        }
    }
    let n = rows.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

pub fn pair_loss(rows: &[Vec<f64>], positive: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let h = compose(rows);
    let mut loss = -log_sigmoid(dot(positive, &h));
    for u in negatives {
        loss -= log_sigmoid(-dot(u, &h));
    }
    loss
}

/// Analytic partial derivatives of [`pair_loss`].
#[derive(Debug, Clone)]
pub struct PairGradient {
    /// Gradient with respect to the composed center vector.
    pub hidden: Vec<f64>,
    /// Gradient with respect to each composition row (all rows share it).
    pub row: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn pair_gradient(rows: &[Vec<f64>], positive: &[f64], negatives: &[Vec<f64>]) -> PairGradient {
    let h = compose(rows);
    let g = score_gradient(dot(positive, &h), 1.0);
    let mut hidden: Vec<f64> = positive.iter().map(|u| g * u).collect();
    let positive_grad = h.iter().map(|v| g * v).collect();
    let mut negatives_grad = Vec::with_capacity(negatives.len());
    for u in negatives {
        let g = score_gradient(dot(u, &h), 0.0);
        for (acc, v) in hidden.iter_mut().zip(u) {
            *acc += g * v;
        }
        negatives_grad.push(h.iter().map(|v| g * v).collect());
    }
    let n = rows.len() as f64;
    let row = hidden.iter().map(|v| v / n).collect();
    PairGradient {
        hidden,
        row,
        positive: positive_grad,
        negatives: negatives_grad,
    }
}
