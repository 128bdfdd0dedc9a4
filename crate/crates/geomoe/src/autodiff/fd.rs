//! Central finite-difference oracle for gradient verification.

use super::{AutodiffError, NodeId, ParamStore, Result, Tape};

/// Outcome of a finite-difference sweep over every trainable coordinate.
#[derive(Debug, Clone)]
pub struct FdReport {
    pub max_rel_err: f64,
    /// `(param name, flat coordinate)` of the worst coordinate, if any.
    pub worst: Option<(String, usize)>,
    pub coords_checked: usize,
}

/// Compares the tape gradient of `build`'s scalar output against central
/// differences with step `h`, perturbing every coordinate of every trainable
/// parameter in `store`. The relative error per coordinate is
/// `|analytic - fd| / max(1, |analytic|)`.
pub fn finite_difference_check<F>(
    store: &mut ParamStore,
    mut build: F,
    h: f64,
) -> Result<FdReport>
where
    F: FnMut(&ParamStore, &mut Tape) -> Result<NodeId>,
{
    if h <= 0.0 {
        return Err(AutodiffError::Usage(format!("fd step must be positive, got {h}")));
    }

    let mut tape = Tape::new();
    let root = build(store, &mut tape)?;
    let center = tape.scalar_value(root);
    if !center.is_finite() {
        return Err(AutodiffError::OracleFailure(format!(
            "objective non-finite at center ({center})"
        )));
    }
    let grads = tape.backward(root)?;

    let ids: Vec<_> = store.iter().filter(|(_, p)| p.trainable).map(|(id, _)| id).collect();
    let mut report = FdReport { max_rel_err: 0.0, worst: None, coords_checked: 0 };

    for id in ids {
        let n = store.value(id).data.len();
        for coord in 0..n {
            let original = store.value(id).data[coord];

            store.value_mut(id).data[coord] = original + h;
            let f_plus = eval_scalar(store, &mut build)?;
            store.value_mut(id).data[coord] = original - h;
            let f_minus = eval_scalar(store, &mut build)?;
            store.value_mut(id).data[coord] = original;

            if !f_plus.is_finite() || !f_minus.is_finite() {
                return Err(AutodiffError::OracleFailure(format!(
                    "objective non-finite at perturbed point (param `{}`, coord {coord})",
                    store.get(id).name
                )));
            }

            let fd = (f_plus - f_minus) / (2.0 * h);
            let analytic = grads.get(id).map(|g| g.data[coord]).unwrap_or(0.0);
            let rel = (analytic - fd).abs() / f64::max(1.0, analytic.abs());
            report.coords_checked += 1;
            if rel > report.max_rel_err {
                report.max_rel_err = rel;
                report.worst = Some((store.get(id).name.clone(), coord));
            }
        }
    }
    Ok(report)
}

fn eval_scalar<F>(store: &ParamStore, build: &mut F) -> Result<f64>
where
    F: FnMut(&ParamStore, &mut Tape) -> Result<NodeId>,
{
    let mut tape = Tape::new();
    let root = build(store, &mut tape)?;
    Ok(tape.scalar_value(root))
}
