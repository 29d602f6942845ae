use crate::error::{Error, Result};
use crate::graddiff::bce_term;

/// Mean binary cross-entropy over items, in the stable logit form with
/// logits clamped to `±40`.
pub fn loss_bce(logits: &[f64], target: &[f64]) -> Result<f64> {
    if logits.len() != target.len() || logits.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: logits.len(),
            got: target.len(),
        });
    }
    let s: f64 = logits.iter().zip(target).map(|(&l, &t)| bce_term(l, t)).sum();
    Ok(s / logits.len() as f64)
}

/// `bce + β·kl/|items|`.
pub fn loss_elbo(logits: &[f64], target: &[f64], kl_sample: f64, beta: f64) -> Result<f64> {
    Ok(loss_bce(logits, target)? + beta * kl_sample / logits.len() as f64)
}
