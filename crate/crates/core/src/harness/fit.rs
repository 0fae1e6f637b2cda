use serde::Serialize;

use crate::error::{Error, Result};

/// A fitted exponent or rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub value: f64,
    pub window: (f64, f64),
    /// Root-mean-square residual of the log-space fit.
    pub residual: f64,
    /// Delete-one-block jackknife standard error, doubled.
    pub half_width: f64,
    pub n: usize,
}

const JACKKNIFE_BLOCKS: usize = 8;

/// Least squares for `y ≈ X β` via normal equations on centered, scaled columns.
/// Returns `β` (intercept first) and the RMS residual.
fn least_squares(cols: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    let p = cols.len();
    if n < p + 1 {
        return Err(Error::Fit(format!("{n} points cannot fix {} parameters", p + 1)));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let my = mean(y);
    let mut centered = Vec::with_capacity(p);
    let mut scales = Vec::with_capacity(p);
    for c in cols {
        let m = mean(c);
        let v: Vec<f64> = c.iter().map(|x| x - m).collect();
        let sc = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(sc > 0.0) {
            return Err(Error::Fit("degenerate regressor".into()));
        }
        scales.push(sc);
        centered.push(v.into_iter().map(|x| x / sc).collect::<Vec<_>>());
    }
    let yc: Vec<f64> = y.iter().map(|v| v - my).collect();
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..p {
        for j in 0..p {
            a[i][j] = centered[i].iter().zip(&centered[j]).map(|(x, z)| x * z).sum();
        }
        a[i][p] = centered[i].iter().zip(&yc).map(|(x, z)| x * z).sum();
    }
    // Gaussian elimination with partial pivoting on the small augmented system.
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, piv);
        if a[c][c].abs() < 1e-14 {
            return Err(Error::Fit("ill-conditioned fit".into()));
        }
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let mut beta = vec![0.0; p + 1];
    let mut intercept = my;
    for i in 0..p {
        let b = a[i][p] / a[i][i] / scales[i];
        beta[i + 1] = b;
        intercept -= b * mean(&cols[i]);
    }
    beta[0] = intercept;
    let mut ss = 0.0;
    for r in 0..n {
        let mut pred = beta[0];
        for i in 0..p {
            pred += beta[i + 1] * cols[i][r];
        }
        ss += (y[r] - pred).powi(2);
    }
    Ok((beta, (ss / n as f64).sqrt()))
}

fn windowed(series: &[(f64, f64)], window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (a, b) = window;
    if !(a < b) {
        return Err(Error::Fit(format!("empty window [{a}, {b}]")));
    }
    let pts: Vec<(f64, f64)> = series.iter().copied().filter(|&(t, _)| t >= a && t <= b).collect();
    if let Some(&(t, v)) = pts.iter().find(|&&(_, v)| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Fit(format!("nonpositive value {v} at t = {t}")));
    }
    Ok(pts)
}

/// Delete-one-block jackknife around `estimate`; twice the standard error.
fn jackknife(pts: &[(f64, f64)], estimate: impl Fn(&[(f64, f64)]) -> Result<f64>) -> f64 {
    let n = pts.len();
    let blocks = JACKKNIFE_BLOCKS.min(n);
    let mut vals = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let lo = b * n / blocks;
        let hi = (b + 1) * n / blocks;
        let rest: Vec<(f64, f64)> = pts[..lo].iter().chain(&pts[hi..]).copied().collect();
        if let Ok(v) = estimate(&rest) {
            vals.push(v);
        }
    }
    if vals.len() < 2 {
        return f64::INFINITY;
    }
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (m - 1.0) / m;
    2.0 * var.sqrt()
}

fn power_slope(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let x: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (b, r) = least_squares(&[x], &y)?;
    Ok((b[1], r))
}

/// Slope of `ln value` against `ln t` on the window.
pub fn fit_power_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let pts = windowed(series, window)?;
    let (value, residual) = power_slope(&pts)?;
    Ok(FitResult {
        value,
        window,
        residual,
        half_width: jackknife(&pts, |p| power_slope(p).map(|r| r.0)),
        n: pts.len(),
    })
}

fn exp_rate(pts: &[(f64, f64)]) -> Result<(f64, f64)> {
    let t: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let lt: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let (b, r) = least_squares(&[lt, t], &y)?;
    Ok((-b[2], r))
}

/// Decay rate `r` from `ln value ≈ a + b ln t − r t`: the power-law prefactor is fitted
/// alongside and divided out.
pub fn fit_exp_rate(series: &[(f64, f64)], window: (f64, f64)) -> Result<FitResult> {
    let pts = windowed(series, window)?;
    let (value, residual) = exp_rate(&pts)?;
    Ok(FitResult {
        value,
        window,
        residual,
        half_width: jackknife(&pts, |p| exp_rate(p).map(|r| r.0)),
        n: pts.len(),
    })
}

/// Slope of `ln y` against `ln x` over all points, with a delete-one jackknife.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(&(x, v)) = pts.iter().find(|&&(x, v)| !(v > 0.0 && x > 0.0)) {
        return Err(Error::Fit(format!("nonpositive point ({x}, {v})")));
    }
    let (value, residual) = power_slope(&pts)?;
    let n = pts.len();
    let mut loo = Vec::new();
    for i in 0..n {
        let rest: Vec<_> = pts.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| *p).collect();
        if let Ok((v, _)) = power_slope(&rest) {
            loo.push(v);
        }
    }
    let half_width = if loo.len() >= 2 {
        let m = loo.len() as f64;
        let mean = loo.iter().sum::<f64>() / m;
        2.0 * (loo.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (m - 1.0) / m).sqrt()
    } else {
        f64::INFINITY
    };
    Ok(FitResult {
        value,
        window: (lo, hi),
        residual,
        half_width,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_exact() {
        let s: Vec<_> = (0..200).map(|i| 5.0 + i as f64).map(|t| (t, 3.0 * t.powf(-1.5))).collect();
        let f = fit_power_decay(&s, (10.0, 100.0)).unwrap();
        assert!((f.value + 1.5).abs() < 1e-10);
        assert!(f.residual < 1e-12);
        let c: Vec<_> = s.iter().map(|&(t, _)| (t, 2.0)).collect();
        assert!(fit_power_decay(&c, (10.0, 100.0)).unwrap().value.abs() < 1e-12);
        let bad: Vec<_> = s.iter().map(|&(t, _)| (t, -1.0)).collect();
        assert!(fit_power_decay(&bad, (10.0, 100.0)).is_err());
    }

    #[test]
    fn exp_exact_and_two_rate() {
        let s: Vec<_> = (0..500).map(|i| i as f64).map(|t| (t, (-0.01 * t).exp())).collect();
        let f = fit_exp_rate(&s, (5.0, 400.0)).unwrap();
        assert!((f.value - 0.01).abs() < 1e-8);
        let s: Vec<_> = (0..500).map(|i| i as f64).map(|t| (t, t.powf(0.7) * (-0.02 * t).exp())).collect();
        assert!((fit_exp_rate(&s, (5.0, 400.0)).unwrap().value - 0.02).abs() < 1e-8);
        let two: Vec<_> = (0..500)
            .map(|i| i as f64)
            .map(|t| (t, (-0.01 * t).exp() + 1e3 * (-0.1 * t).exp()))
            .collect();
        assert!(fit_exp_rate(&two, (5.0, 400.0)).unwrap().residual > 1e-2);
    }
}
