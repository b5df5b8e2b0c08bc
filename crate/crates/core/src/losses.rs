//! Loss numerics with analytic gradients.
//!
//! These are pure reference implementations: no batching, no autograd, every
//! gradient is written out by hand and checked against central finite
//! differences in the test suite. Training code can use them as an oracle.

use crate::geometry::{iou_3d, normalize_angle, Box3D};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LossError {
    #[error("domain error: {0}")]
    DomainError(String),
}

/// A scalar loss plus its gradient with respect to the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossValue {
    pub value: f64,
    pub grad: Option<Vec<f64>>,
}

impl LossValue {
    fn with_grad(value: f64, grad: Vec<f64>) -> Self {
        Self {
            value,
            grad: Some(grad),
        }
    }
}

/// A probability distribution over k classes: entries in [0, 1] summing to 1
/// within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self, LossError> {
        if probs.is_empty() {
            return Err(LossError::DomainError("empty probability vector".into()));
        }
        if probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(LossError::DomainError(format!(
                "probabilities outside [0, 1]: {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(LossError::DomainError(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Skip the sum check. Finite-difference probes sit slightly off the
    /// probability simplex by construction; entries must still be in [0, 1].
    pub fn new_unchecked(probs: Vec<f64>) -> Self {
        Self(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Focal loss `-alpha (1-p)^gamma ln p` of the true-class probability, with
/// its derivative in p. Reduces to cross-entropy at gamma = 0, alpha = 1.
pub fn focal_loss(p: f64, alpha: f64, gamma: f64) -> Result<LossValue, LossError> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(LossError::DomainError(format!(
            "true-class probability must be in (0, 1], got {p}"
        )));
    }
    if alpha < 0.0 || gamma < 0.0 {
        return Err(LossError::DomainError(
            "alpha and gamma must be non-negative".into(),
        ));
    }
    let q = 1.0 - p;
    let value = -alpha * q.powf(gamma) * p.ln();
    let dpow = if gamma == 0.0 { 0.0 } else { gamma * q.powf(gamma - 1.0) };
    let grad = -alpha * (-dpow * p.ln() + q.powf(gamma) / p);
    Ok(LossValue::with_grad(value, vec![grad]))
}

/// Smooth L1: quadratic inside the transition point beta, linear outside;
/// continuous and once-differentiable at the joins.
pub fn smooth_l1(residual: f64, beta: f64) -> LossValue {
    assert!(beta > 0.0, "beta must be positive");
    let (value, grad) = if residual.abs() < beta {
        (0.5 * residual * residual / beta, residual / beta)
    } else {
        (residual.abs() - 0.5 * beta, residual.signum())
    };
    LossValue::with_grad(value, vec![grad])
}

/// Weighted cross-entropy `-w[target] ln p[target]`; gradient over the whole
/// probability vector.
pub fn weighted_cross_entropy(
    probs: &ProbVector,
    target: usize,
    weights: &[f64],
) -> Result<LossValue, LossError> {
    let k = probs.len();
    if target >= k {
        return Err(LossError::DomainError(format!(
            "target {target} out of range for {k} classes"
        )));
    }
    if weights.len() != k {
        return Err(LossError::DomainError(format!(
            "{} weights for {k} classes",
            weights.len()
        )));
    }
    let p = probs.as_slice()[target];
    if p <= 0.0 {
        return Err(LossError::DomainError(format!(
            "zero probability at target class {target}"
        )));
    }
    let mut grad = vec![0.0; k];
    grad[target] = -weights[target] / p;
    Ok(LossValue::with_grad(-weights[target] * p.ln(), grad))
}

/// Gradient of the Jaccard loss along a sorted error vector
/// (the discrete derivative of the Lovasz extension).
fn lovasz_grad(gt_sorted: &[f64]) -> Vec<f64> {
    let p = gt_sorted.len();
    let gts: f64 = gt_sorted.iter().sum();
    let mut cum_fg = 0.0;
    let mut cum_bg = 0.0;
    let mut jaccard = Vec::with_capacity(p);
    for &g in gt_sorted {
        cum_fg += g;
        cum_bg += 1.0 - g;
        jaccard.push(1.0 - (gts - cum_fg) / (gts + cum_bg));
    }
    let mut grad = jaccard.clone();
    for j in (1..p).rev() {
        grad[j] -= jaccard[j - 1];
    }
    grad
}

/// Lovasz-softmax: per-class Lovasz extension of the Jaccard loss over the
/// sorted error vector, averaged over the classes present in the labels.
/// Zero exactly when every point puts probability 1 on its true class.
///
/// The gradient is with respect to the flattened N x k probability matrix
/// (row-major) and is exact away from ties in the error vector.
pub fn lovasz_softmax(probs: &[ProbVector], labels: &[usize]) -> Result<LossValue, LossError> {
    if probs.len() != labels.len() {
        return Err(LossError::DomainError(format!(
            "{} probability rows vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let n = probs.len();
    if n == 0 {
        return Ok(LossValue::with_grad(0.0, vec![]));
    }
    let k = probs[0].len();
    if probs.iter().any(|row| row.len() != k) {
        return Err(LossError::DomainError("ragged probability rows".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
        return Err(LossError::DomainError(format!(
            "label {bad} out of range for {k} classes"
        )));
    }

    let mut present: Vec<usize> = labels.to_vec();
    present.sort_unstable();
    present.dedup();

    let mut value = 0.0;
    let mut grad = vec![0.0; n * k];
    for &c in &present {
        // Hinge-style error for class c at every point: 1 - p for points of
        // the class, p for the rest.
        let mut errors: Vec<(f64, usize)> = (0..n)
            .map(|i| {
                let p = probs[i].as_slice()[c];
                let e = if labels[i] == c { 1.0 - p } else { p };
                (e, i)
            })
            .collect();
        errors.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        let gt_sorted: Vec<f64> = errors
            .iter()
            .map(|&(_, i)| if labels[i] == c { 1.0 } else { 0.0 })
            .collect();
        let g = lovasz_grad(&gt_sorted);
        for (rank, &(e, i)) in errors.iter().enumerate() {
            value += e * g[rank];
            let sign = if labels[i] == c { -1.0 } else { 1.0 };
            grad[i * k + c] += sign * g[rank];
        }
    }
    let scale = 1.0 / present.len() as f64;
    for v in &mut grad {
        *v *= scale;
    }
    Ok(LossValue::with_grad(value * scale, grad))
}

/// Segmentation training loss: mean weighted cross-entropy plus
/// lovasz-softmax, with unit coefficients. Gradient over the flattened
/// N x k probabilities.
pub fn total_seg_loss(
    probs: &[ProbVector],
    labels: &[usize],
    weights: &[f64],
) -> Result<LossValue, LossError> {
    if probs.len() != labels.len() {
        return Err(LossError::DomainError(format!(
            "{} probability rows vs {} labels",
            probs.len(),
            labels.len()
        )));
    }
    let n = probs.len();
    if n == 0 {
        return Ok(LossValue::with_grad(0.0, vec![]));
    }
    let k = probs[0].len();
    let lovasz = lovasz_softmax(probs, labels)?;
    let mut value = lovasz.value;
    let mut grad = lovasz.grad.unwrap();
    for (i, (row, &label)) in probs.iter().zip(labels).enumerate() {
        let ce = weighted_cross_entropy(row, label, weights)?;
        value += ce.value / n as f64;
        for (j, g) in ce.grad.unwrap().into_iter().enumerate() {
            grad[i * k + j] += g / n as f64;
        }
    }
    Ok(LossValue::with_grad(value, grad))
}

/// Softmax cross-entropy over the two direction bins; gradient over the
/// logits.
pub fn direction_loss(pred_logits: [f64; 2], gt_positive: bool) -> LossValue {
    let target = usize::from(gt_positive);
    let max = pred_logits[0].max(pred_logits[1]);
    let exps = [(pred_logits[0] - max).exp(), (pred_logits[1] - max).exp()];
    let sum = exps[0] + exps[1];
    let value = sum.ln() - (pred_logits[target] - max);
    let mut grad = [exps[0] / sum, exps[1] / sum];
    grad[target] -= 1.0;
    LossValue::with_grad(value, grad.to_vec())
}

/// Ground-truth direction bit for an orientation target: whether the yaw
/// offset from the anchor is non-negative.
pub fn direction_bit(gt_yaw: f64, anchor_yaw: f64) -> bool {
    normalize_angle(gt_yaw - anchor_yaw) >= 0.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProposalLabel {
    Positive,
    Negative,
}

/// Second-stage label assignment: a proposal is positive iff its best 3D IoU
/// against the ground truth reaches the threshold (inclusive). Only positive
/// proposals feed the refinement losses.
pub fn assign_proposal_labels(
    proposals: &[Box3D],
    gts: &[Box3D],
    threshold: f64,
) -> Vec<ProposalLabel> {
    proposals
        .iter()
        .map(|p| {
            let best = gts
                .iter()
                .map(|g| iou_3d(p, g))
                .fold(0.0f64, f64::max);
            if best >= threshold {
                ProposalLabel::Positive
            } else {
                ProposalLabel::Negative
            }
        })
        .collect()
}
