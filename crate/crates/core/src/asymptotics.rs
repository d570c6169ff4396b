//! Power-law and logarithmic fits of boundary asymptotics, and the case
//! split of the rank-two `J_{β,c}` asymptotics.

use crate::error::{Error, Result};
use crate::mc::McEstimate;
use serde::Serialize;
use std::fmt;

/// One grid value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSample {
    pub t: f64,
    pub value: f64,
    pub std_error: f64,
}

impl GridSample {
    pub fn new(t: f64, e: &McEstimate) -> Self {
        Self { t, value: e.value, std_error: e.std_error }
    }
}

/// Straight-line fit `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Weighted least squares; `weights` of `None` means unweighted.
pub fn fit_line(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidArgument("line fit needs at least two paired points".into()));
    }
    let ones = vec![1.0; x.len()];
    let w = weights.unwrap_or(&ones);
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let my = y.iter().zip(w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((a, b), w) in x.iter().zip(y).zip(w) {
        sxx += w * (a - mx) * (a - mx);
        sxy += w * (a - mx) * (b - my);
        syy += w * (b - my) * (b - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LineFit { slope, intercept: my - slope * mx, r_squared })
}

/// Power-law fit of `log(value)` against `log(1 - t)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub grid: Vec<GridSample>,
}

/// Weighted by inverse relative variance `(value/std_error)^2`; unweighted
/// when any standard error is zero.
pub fn fit_exponent(grid: &[GridSample]) -> Result<ExponentFit> {
    if grid.len() < 4 {
        return Err(Error::InvalidArgument("exponent fit needs at least 4 grid points".into()));
    }
    if let Some(g) = grid.iter().find(|g| !(g.value > 0.0) || !(g.t < 1.0)) {
        return Err(Error::InvalidArgument(format!("exponent fit needs positive values and t < 1, got {g:?}")));
    }
    let x: Vec<f64> = grid.iter().map(|g| (1.0 - g.t).ln()).collect();
    let y: Vec<f64> = grid.iter().map(|g| g.value.ln()).collect();
    let w: Option<Vec<f64>> =
        if grid.iter().all(|g| g.std_error > 0.0) { Some(grid.iter().map(|g| (g.value / g.std_error).powi(2)).collect()) } else { None };
    let f = fit_line(&x, &y, w.as_deref())?;
    Ok(ExponentFit { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, grid: grid.to_vec() })
}

/// Fit `value = intercept + slope log(1/(1-t))`, weighted by `1/std_error^2`.
pub fn fit_log_affine(grid: &[GridSample]) -> Result<LineFit> {
    if grid.len() < 3 {
        return Err(Error::InvalidArgument("log-affine fit needs at least 3 grid points".into()));
    }
    let x: Vec<f64> = grid.iter().map(|g| -(1.0 - g.t).ln()).collect();
    let y: Vec<f64> = grid.iter().map(|g| g.value).collect();
    let w: Option<Vec<f64>> =
        if grid.iter().all(|g| g.std_error > 0.0) { Some(grid.iter().map(|g| g.std_error.powi(-2)).collect()) } else { None };
    fit_line(&x, &y, w.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseId {
    I,
    Ii,
    Iii,
    Iv,
    V,
}

impl fmt::Display for CaseId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CaseId::I => "i",
            CaseId::Ii => "ii",
            CaseId::Iii => "iii",
            CaseId::Iv => "iv",
            CaseId::V => "v",
        })
    }
}

/// Predicted rate `(1-t)^{t_exponent} (1-T)^{big_t_exponent}` times a
/// logarithmic factor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub t_exponent: f64,
    pub big_t_exponent: f64,
    pub log_factor: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Classification {
    /// A case of the rank-two asymptotics, `|2pc| <= a`.
    Case { case_id: CaseId, predicted: Prediction },
    /// `2pc < -a`: bounded on the domain.
    Bounded,
    /// `2pc > a`: comparable to `K(z)^c`.
    KernelPower { c: f64 },
}

/// Relative tolerance for the case boundaries `2pc = ±a` and `c = 0`.
pub const CASE_TOLERANCE: f64 = 1e-12;

pub fn classify_case(p: f64, a: f64, c: f64) -> Result<Classification> {
    if !(p > 0.0 && a > 0.0) {
        return Err(Error::InvalidArgument(format!("need p > 0 and a > 0, got p={p}, a={a}")));
    }
    let x = 2.0 * p * c;
    let eq = |u: f64, v: f64| (u - v).abs() <= CASE_TOLERANCE * a.max(1.0);
    let pred = |t_exponent, big_t_exponent, log_factor| Prediction { t_exponent, big_t_exponent, log_factor };
    let half = -a / 2.0;
    Ok(if eq(x, a) {
        Classification::Case { case_id: CaseId::I, predicted: pred(half, half, "1 - log(1-t)") }
    } else if eq(x, -a) {
        Classification::Case { case_id: CaseId::V, predicted: pred(0.0, 0.0, "1 - log(1-t)") }
    } else if eq(c, 0.0) {
        Classification::Case { case_id: CaseId::Iii, predicted: pred(half, 0.0, "1 + log((1-t)/(1-T))") }
    } else if x > a {
        Classification::KernelPower { c }
    } else if x < -a {
        Classification::Bounded
    } else if x > 0.0 {
        Classification::Case { case_id: CaseId::Ii, predicted: pred(half, -p * c, "1") }
    } else {
        Classification::Case { case_id: CaseId::Iv, predicted: pred(-p * c + half, 0.0, "1") }
    })
}
