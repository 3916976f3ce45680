use super::tensor::Param;
use crate::error::{Error, Result};

/// A scalar objective over a set of parameters.
pub trait Differentiable {
    fn params_mut(&mut self) -> Vec<&mut Param>;
    /// Loss value only.
    fn loss(&mut self) -> Result<f64>;
    /// Loss value, accumulating gradients into the parameters.
    fn loss_and_grad(&mut self) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_param: String,
    pub worst_index: usize,
    pub checked: usize,
}

/// Compare analytic gradients against central differences for every
/// parameter element. Relative error is `|a − n| / max(|a| + |n|, 1e-5)`.
pub fn gradient_check<M: Differentiable>(model: &mut M, step: f64) -> Result<GradCheckReport> {
    if step <= 0.0 {
        return Err(Error::InvalidInput("finite-difference step must be positive".into()));
    }
    for p in model.params_mut() {
        p.zero_grad();
    }
    model.loss_and_grad()?;
    let analytic: Vec<Vec<f64>> = model.params_mut().iter().map(|p| p.grad.data().to_vec()).collect();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_param: String::new(),
        worst_index: 0,
        checked: 0,
    };
    for (pi, grads) in analytic.iter().enumerate() {
        for (k, &a) in grads.iter().enumerate() {
            let orig = model.params_mut()[pi].value.data()[k];
            model.params_mut()[pi].value.data_mut()[k] = orig + step;
            let up = model.loss()?;
            model.params_mut()[pi].value.data_mut()[k] = orig - step;
            let down = model.loss()?;
            model.params_mut()[pi].value.data_mut()[k] = orig;
            let num = (up - down) / (2.0 * step);
            if !num.is_finite() || !a.is_finite() {
                return Err(Error::Numerical("non-finite gradient during check".into()));
            }
            let rel = (a - num).abs() / (a.abs() + num.abs()).max(1e-5);
            report.checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_param = model.params_mut()[pi].name.clone();
                report.worst_index = k;
            }
        }
    }
    Ok(report)
}
