//! Small regression helpers for slopes and their standard errors.

/// Ordinary least squares `y = a x + b`; returns `(a, b, stderr(a))`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if x.len() > 2 {
        let sse: f64 = x.iter().zip(y).map(|(&a, &b)| (b - slope * a - intercept).powi(2)).sum();
        (sse / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (slope, intercept, stderr)
}

/// Slope of `log y` against `log x` with its standard error.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let (s, _, e) = linear_fit(&lx, &ly);
    (s, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let (a, b, e) = linear_fit(&[0.0, 1.0, 2.0, 3.0], &[1.0, 3.0, 5.0, 7.0]);
        assert!((a - 2.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14 && e < 1e-12);
    }

    #[test]
    fn power_law() {
        let x = [0.1, 0.2, 0.3];
        let y: Vec<f64> = x.iter().map(|v: &f64| 5.0 * v.powi(4)).collect();
        let (s, e) = log_log_slope(&x, &y);
        assert!((s - 4.0).abs() < 1e-12 && e < 1e-10);
    }
}
