//! Semi-supervised K+1 losses.
//!
//! The discriminator emits K class logits plus one fake logit. The labeled
//! term is K+1-way cross entropy; the unlabeled and generated terms reduce
//! to logistic regression on the fake logit against the stable log-sum-exp
//! of the class logits.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Probabilities are clamped into [PROB_EPS, 1 - PROB_EPS] before logs.
pub const PROB_EPS: f64 = 1e-7;

/// Per-step loss terms. `l_total` is the discriminator objective
/// l_labeled + l_unlabeled + l_generated; `l_generator` is logged alongside.
#[derive(Clone, Copy, Debug, Default)]
pub struct LossBreakdown {
    pub l_labeled: f64,
    pub l_unlabeled: f64,
    pub l_generated: f64,
    pub l_total: f64,
    pub l_generator: f64,
}

fn logsumexp(v: ArrayView1<'_, f64>) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    v.iter().map(|p| (p - max).exp()).sum::<f64>().ln() + max
}

/// Stable log-sum-exp over the K class logits:
/// p_sum = log(sum_i exp(p_i - p_max)) + p_max.
pub fn real_logit_logsumexp(class_logits: ArrayView1<'_, f64>) -> f64 {
    logsumexp(class_logits)
}

/// Probability that a sample is fake: the softmax mass on class K+1,
/// computed as sigma(p_{K+1} - p_sum).
pub fn p_fake(logits: ArrayView1<'_, f64>) -> f64 {
    let k1 = logits.len();
    let p_sum = real_logit_logsumexp(logits.slice(ndarray::s![..k1 - 1]));
    sigmoid(logits[k1 - 1] - p_sum)
}

fn sigmoid(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Softmax over one row of K+1 logits.
fn softmax_row(row: ArrayView1<'_, f64>) -> Vec<f64> {
    let lse = logsumexp(row);
    row.iter().map(|p| (p - lse).exp()).collect()
}

/// Softmax over the first K entries, zero on the fake slot.
fn class_softmax_row(row: ArrayView1<'_, f64>) -> Vec<f64> {
    let k1 = row.len();
    let lse = logsumexp(row.slice(ndarray::s![..k1 - 1]));
    let mut out: Vec<f64> = row.iter().map(|p| (p - lse).exp()).collect();
    out[k1 - 1] = 0.0;
    out
}

/// Mean K+1-way cross entropy of labeled rows; labels are 1..=K.
/// Returns the loss and its gradient w.r.t. the logits.
pub fn labeled_loss_and_grad(
    logits: ArrayView2<'_, f64>,
    labels: &[usize],
) -> Result<(f64, Array2<f64>)> {
    let (b, k1) = logits.dim();
    debug_assert_eq!(b, labels.len());
    let mut grad = Array2::<f64>::zeros((b, k1));
    if b == 0 {
        return Ok((0.0, grad));
    }
    let k = k1 - 1;
    let mut loss = 0.0;
    for (i, (&label, row)) in labels.iter().zip(logits.rows()).enumerate() {
        if label < 1 || label > k {
            return Err(Error::LabelOutOfRange {
                label: label as i64,
                k,
            });
        }
        let lse = logsumexp(row);
        loss -= row[label - 1] - lse;
        let sm = softmax_row(row);
        for j in 0..k1 {
            grad[[i, j]] = sm[j] / b as f64;
        }
        grad[[i, label - 1]] -= 1.0 / b as f64;
    }
    Ok((loss / b as f64, grad))
}

/// Mean of -log(1 - p_fake) over rows: pushes real samples away from the
/// fake class. Also the generator's non-saturating objective.
pub fn real_side_loss_and_grad(logits: ArrayView2<'_, f64>) -> (f64, Array2<f64>) {
    let (b, k1) = logits.dim();
    let mut grad = Array2::<f64>::zeros((b, k1));
    if b == 0 {
        return (0.0, grad);
    }
    let mut loss = 0.0;
    for (i, row) in logits.rows().into_iter().enumerate() {
        loss -= (1.0 - clamp_prob(p_fake(row))).ln();
        let sm = softmax_row(row);
        let csm = class_softmax_row(row);
        for j in 0..k1 {
            grad[[i, j]] = (sm[j] - csm[j]) / b as f64;
        }
    }
    (loss / b as f64, grad)
}

/// Mean of -log p_fake over rows: pushes generated samples into the fake
/// class.
pub fn generated_loss_and_grad(logits: ArrayView2<'_, f64>) -> (f64, Array2<f64>) {
    let (b, k1) = logits.dim();
    let mut grad = Array2::<f64>::zeros((b, k1));
    if b == 0 {
        return (0.0, grad);
    }
    let mut loss = 0.0;
    for (i, row) in logits.rows().into_iter().enumerate() {
        loss -= clamp_prob(p_fake(row)).ln();
        let sm = softmax_row(row);
        for j in 0..k1 {
            grad[[i, j]] = sm[j] / b as f64;
        }
        grad[[i, k1 - 1]] -= 1.0 / b as f64;
    }
    (loss / b as f64, grad)
}

/// Discriminator loss over the three sample groups (empty groups contribute
/// zero). `l_generator` is left at zero; the training loop fills it in.
pub fn discriminator_loss(
    labeled_logits: ArrayView2<'_, f64>,
    labels: &[usize],
    unlabeled_logits: ArrayView2<'_, f64>,
    fake_logits: ArrayView2<'_, f64>,
) -> Result<(LossBreakdown, Array2<f64>, Array2<f64>, Array2<f64>)> {
    let (l_labeled, g_labeled) = labeled_loss_and_grad(labeled_logits, labels)?;
    let (l_unlabeled, g_unlabeled) = real_side_loss_and_grad(unlabeled_logits);
    let (l_generated, g_generated) = generated_loss_and_grad(fake_logits);
    Ok((
        LossBreakdown {
            l_labeled,
            l_unlabeled,
            l_generated,
            l_total: l_labeled + l_unlabeled + l_generated,
            l_generator: 0.0,
        },
        g_labeled,
        g_unlabeled,
        g_generated,
    ))
}

/// Generator objective: mean of -log(1 - p_fake) over the fake batch,
/// i.e. maximize the discriminator's belief that fakes are real.
pub fn generator_loss_and_grad(fake_logits: ArrayView2<'_, f64>) -> (f64, Array2<f64>) {
    real_side_loss_and_grad(fake_logits)
}
