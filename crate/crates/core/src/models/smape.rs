use crate::error::{Error, Result};

/// `|y − ŷ| / (|y| + |ŷ|)`, with `0/0` taken as zero.
pub fn smape_term(y: f64, yhat: f64) -> f64 {
    let s = y.abs() + yhat.abs();
    if s == 0.0 {
        0.0
    } else {
        (y - yhat).abs() / s
    }
}

/// Derivative of [`smape_term`] with respect to `ŷ`.
pub fn smape_grad(y: f64, yhat: f64) -> f64 {
    let s = y.abs() + yhat.abs();
    if s == 0.0 {
        return 0.0;
    }
    let d = yhat - y;
    let sd = if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    };
    let sy = if yhat > 0.0 {
        1.0
    } else if yhat < 0.0 {
        -1.0
    } else {
        0.0
    };
    sd / s - d.abs() * sy / (s * s)
}

/// `100 · mean |y − ŷ| / (|y| + |ŷ|)`, in `[0, 100]`.
pub fn smape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::Shape(format!(
            "smape arguments differ in length: {} vs {}",
            y.len(),
            yhat.len()
        )));
    }
    if y.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = y.iter().zip(yhat).map(|(&a, &b)| smape_term(a, b)).sum();
    Ok(100.0 * total / y.len() as f64)
}

/// SMAPE of target `k` over interleaved `[n, targets]` rows.
pub fn target_smape(y: &[f64], yhat: &[f64], targets: usize, k: usize) -> Result<f64> {
    if y.len() != yhat.len() || y.len() % targets != 0 || k >= targets {
        return Err(Error::Shape("target_smape: inconsistent arguments".into()));
    }
    let a: Vec<f64> = y.iter().skip(k).step_by(targets).copied().collect();
    let b: Vec<f64> = yhat.iter().skip(k).step_by(targets).copied().collect();
    smape(&a, &b)
}
