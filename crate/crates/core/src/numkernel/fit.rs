use crate::error::{Error, Result};

/// Ordinary least-squares line through `(ln rank, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square of the fit residuals in log space.
    pub residual: f64,
}

/// Fits `ln value = intercept + slope · ln rank` by least squares.
pub fn loglog_slope(points: &[(usize, f64)]) -> Result<LogLogFit> {
    if points.len() < 2 {
        return Err(Error::shape(format!(
            "log-log fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(rank, value) in points {
        if rank == 0 {
            return Err(Error::domain("ranks are 1-based"));
        }
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::domain(format!("nonpositive value {value} at rank {rank}")));
        }
        xs.push((rank as f64).ln());
        ys.push(value.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::shape("log-log fit needs at least two distinct ranks"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let e = y - (intercept + slope * x);
            e * e
        })
        .sum();
    Ok(LogLogFit {
        slope,
        intercept,
        residual: (sse / n).sqrt(),
    })
}
