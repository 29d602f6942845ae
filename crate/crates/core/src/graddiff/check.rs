use super::tape::{NodeId, Tape};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Per-input outcome of [`gradcheck`].
#[derive(Debug, Clone)]
pub struct InputCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub worst_index: usize,
}

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub inputs: Vec<InputCheck>,
    pub max_rel_error: f64,
    pub tol: f64,
    /// Set when the check could not be performed at this point.
    pub skipped: Option<String>,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.skipped.is_none() && self.max_rel_error <= self.tol
    }
}

/// Denominator floor for relative errors of near-zero gradient entries.
const REL_FLOOR: f64 = 1e-6;

fn evaluate<F>(f: &F, inputs: &[(String, Tensor)]) -> Result<(Tape, NodeId, Vec<NodeId>)>
where
    F: Fn(&mut Tape, &[NodeId]) -> NodeId,
{
    let mut tape = Tape::new();
    let ids: Vec<NodeId> = inputs
        .iter()
        .map(|(name, t)| tape.param(name, t.clone()))
        .collect();
    let out = f(&mut tape, &ids);
    tape.check_finite()?;
    if tape.value(out).shape() != (1, 1) {
        return Err(Error::InvalidArgument("gradcheck needs a scalar function".into()));
    }
    Ok((tape, out, ids))
}

/// Compares tape gradients of the scalar function `f` with central finite
/// differences of step `h` at `point`.
///
/// Points where a norm-clipping node is active are reported as skipped:
/// the clipped map has a kink there.
pub fn gradcheck<F>(f: F, point: &[(&str, Tensor)], h: f64, tol: f64) -> Result<GradcheckReport>
where
    F: Fn(&mut Tape, &[NodeId]) -> NodeId,
{
    let mut inputs: Vec<(String, Tensor)> = point
        .iter()
        .map(|(n, t)| (n.to_string(), t.clone()))
        .collect();
    let (tape, out, _) = evaluate(&f, &inputs)?;
    if tape.projection_active() {
        return Ok(GradcheckReport {
            inputs: vec![],
            max_rel_error: 0.0,
            tol,
            skipped: Some("skipped: projection active".into()),
        });
    }
    let grads = tape.backward(out)?;
    let mut checks = Vec::with_capacity(inputs.len());
    for k in 0..inputs.len() {
        let name = inputs[k].0.clone();
        let analytic = grads
            .get(&name)
            .cloned()
            .unwrap_or_else(|| Tensor::zeros(inputs[k].1.rows(), inputs[k].1.cols()));
        let mut worst = (0.0f64, 0usize);
        for idx in 0..inputs[k].1.len() {
            let orig = inputs[k].1.data()[idx];
            inputs[k].1.data_mut()[idx] = orig + h;
            let (tp, op, _) = evaluate(&f, &inputs)?;
            let fp = tp.value(op).item();
            inputs[k].1.data_mut()[idx] = orig - h;
            let (tm, om, _) = evaluate(&f, &inputs)?;
            let fm = tm.value(om).item();
            inputs[k].1.data_mut()[idx] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            let a = analytic.data()[idx];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(REL_FLOOR);
            if rel > worst.0 {
                worst = (rel, idx);
            }
        }
        checks.push(InputCheck {
            name,
            max_rel_error: worst.0,
            worst_index: worst.1,
        });
    }
    let max_rel_error = checks.iter().map(|c| c.max_rel_error).fold(0.0, f64::max);
    Ok(GradcheckReport {
        inputs: checks,
        max_rel_error,
        tol,
        skipped: None,
    })
}
