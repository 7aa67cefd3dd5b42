//! Central finite-difference checking of analytic gradients.

use super::objective::Objective;
use super::params::TaggerParams;
use crate::error::Result;

/// Numerical gradient by central differences with the given step.
pub fn finite_difference_grad(params: &TaggerParams, objective: &impl Objective, step: f64) -> Result<TaggerParams> {
    let mut probe = params.clone();
    let mut numeric = params.zeros_like();
    let shapes: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();
    for (t, &len) in shapes.iter().enumerate() {
        for k in 0..len {
            let original = probe.tensors_mut()[t][k];
            probe.tensors_mut()[t][k] = original + step;
            let plus = objective.loss(&probe)?;
            probe.tensors_mut()[t][k] = original - step;
            let minus = objective.loss(&probe)?;
            probe.tensors_mut()[t][k] = original;
            numeric.tensors_mut()[t][k] = (plus - minus) / (2.0 * step);
        }
    }
    Ok(numeric)
}

/// Worst coordinate of an analytic/numeric comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub coordinates: usize,
}

/// `|a − n| / max(|a|, |n|, floor)`. The floor keeps coordinates whose true
/// gradient is essentially zero from dividing round-off by round-off.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(floor)
}

pub fn compare_gradients(analytic: &TaggerParams, numeric: &TaggerParams, floor: f64) -> GradCheckReport {
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        tensor: String::new(),
        index: 0,
        analytic: 0.0,
        numeric: 0.0,
        coordinates: 0,
    };
    for ((name, a), (_, n)) in analytic.tensors().into_iter().zip(numeric.tensors()) {
        for (k, (&av, &nv)) in a.iter().zip(n).enumerate() {
            report.coordinates += 1;
            let err = relative_error(av, nv, floor);
            if err > report.max_relative_error || report.tensor.is_empty() {
                report = GradCheckReport { max_relative_error: err, tensor: name.clone(), index: k, analytic: av, numeric: nv, ..report };
            }
        }
    }
    report
}

/// Runs both gradients and compares them.
pub fn check_gradients(params: &TaggerParams, objective: &impl Objective, step: f64, floor: f64) -> Result<GradCheckReport> {
    let (_, analytic) = objective.loss_and_grad(params)?;
    let numeric = finite_difference_grad(params, objective, step)?;
    Ok(compare_gradients(&analytic, &numeric, floor))
}
