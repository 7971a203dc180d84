use thiserror::Error;

/// `t = a * n^b`, fitted by least squares in log-log space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFit {
    pub a: f64,
    pub b: f64,
    /// Root-mean-square residual of `ln t`.
    pub residual: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("a power-law fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("point ({0}, {1}) is not strictly positive")]
    NonPositive(f64, f64),
    #[error("all points share one abscissa")]
    Degenerate,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerFit, FitError> {
    if points.len() < 3 {
        return Err(FitError::TooFewPoints(points.len()));
    }
    if let Some(&(n, t)) = points.iter().find(|(n, t)| !(*n > 0.0 && *t > 0.0)) {
        return Err(FitError::NonPositive(n, t));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(n, t)| (n.ln(), t.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(FitError::Degenerate);
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    let ln_a = my - b * mx;
    let residual = (logs
        .iter()
        .map(|p| (p.1 - ln_a - b * p.0).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(PowerFit {
        a: ln_a.exp(),
        b,
        residual,
    })
}
