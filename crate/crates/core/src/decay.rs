//! Decay-rate fitting, the iteration lemma check, and the verdict/fit
//! consistency report.

use crate::error::FitError;
use crate::search::{DecayKind, DecayVerdict};
use serde::{Deserialize, Serialize};

/// Least-squares fit of one decay model on log E.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ModelFit {
    /// Decay rate `a` (exponential) or exponent `p` (polynomial).
    pub rate: f64,
    /// Multiplicative constant C.
    pub amplitude: f64,
    /// RMS of the log-E residuals over the window.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChosenModel {
    Exponential,
    Polynomial,
    /// Residuals within the selection margin of each other.
    Ambiguous,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DecayFit {
    pub exponential: ModelFit,
    pub polynomial: ModelFit,
    pub chosen: ChosenModel,
    pub window: (f64, f64),
}

/// Residual margin of the model selection: the better model must win by
/// at least this relative factor, otherwise the fit is ambiguous.
pub const SELECTION_MARGIN: f64 = 0.10;

/// Fits log E against t (exponential) and against log(t+1) (polynomial) on
/// the window and selects the model with the smaller residual, with a 10%
/// margin. Requires at least 32 samples with positive, non-constant E.
pub fn fit_decay(series: &[(f64, f64)], window: (f64, f64)) -> Result<DecayFit, FitError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 && *t <= window.1)
        .cloned()
        .collect();
    if pts.len() < 32 {
        return Err(FitError::DegenerateSeries(format!(
            "{} samples in window, need at least 32",
            pts.len()
        )));
    }
    if pts.iter().any(|(_, e)| *e <= 0.0) {
        return Err(FitError::DegenerateSeries(
            "energy must be positive on the window".into(),
        ));
    }
    let log_e: Vec<f64> = pts.iter().map(|(_, e)| e.ln()).collect();
    let spread = log_e.iter().cloned().fold(f64::MIN, f64::max)
        - log_e.iter().cloned().fold(f64::MAX, f64::min);
    if spread < 1e-12 {
        return Err(FitError::DegenerateSeries("energy is constant".into()));
    }
    let xs_exp: Vec<f64> = pts.iter().map(|(t, _)| *t).collect();
    let xs_pol: Vec<f64> = pts.iter().map(|(t, _)| (t + 1.0).ln()).collect();
    let (a_exp, b_exp, r_exp) = line_fit(&xs_exp, &log_e);
    let (a_pol, b_pol, r_pol) = line_fit(&xs_pol, &log_e);
    let exponential = ModelFit {
        rate: -a_exp,
        amplitude: b_exp.exp(),
        residual: r_exp,
    };
    let polynomial = ModelFit {
        rate: -a_pol,
        amplitude: b_pol.exp(),
        residual: r_pol,
    };
    let chosen = if r_exp < (1.0 - SELECTION_MARGIN) * r_pol {
        ChosenModel::Exponential
    } else if r_pol < (1.0 - SELECTION_MARGIN) * r_exp {
        ChosenModel::Polynomial
    } else {
        ChosenModel::Ambiguous
    };
    Ok(DecayFit {
        exponential,
        polynomial,
        chosen,
        window,
    })
}

/// Closed-form least squares of y = a x + b; returns (a, b, rms residual).
fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let b = my - a * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (a * x + b);
            r * r
        })
        .sum();
    (a, b, (rss / n).sqrt())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RussellCheck {
    /// The recurrence beta_{n+1}^2 <= M0 (beta_n - beta_{n+1}) holds termwise.
    pub holds: bool,
    pub first_violation: Option<usize>,
    /// Conclusion beta_n <= 2 M0 / n for n >= 1 (checked when the
    /// hypothesis holds).
    pub conclusion_holds: bool,
    /// max over n >= 1 of beta_n n / (2 M0).
    pub max_bound_ratio: f64,
}

/// Checks the iteration lemma on a finite sequence: the per-period
/// recurrence implies the harmonic bound.
pub fn russell_step_check(beta: &[f64], m0: f64) -> RussellCheck {
    assert!(m0 > 0.0, "M0 must be positive");
    let slack = 1e-12 * m0;
    let mut holds = true;
    let mut first_violation = None;
    for n in 0..beta.len().saturating_sub(1) {
        let lhs = beta[n + 1] * beta[n + 1];
        let rhs = m0 * (beta[n] - beta[n + 1]);
        if lhs > rhs + slack + 1e-12 * lhs.abs() {
            holds = false;
            first_violation = Some(n);
            break;
        }
    }
    let mut max_bound_ratio = 0.0f64;
    let mut conclusion_holds = true;
    if holds {
        for (n, b) in beta.iter().enumerate().skip(1) {
            let bound = 2.0 * m0 / n as f64;
            let ratio = b / bound;
            max_bound_ratio = max_bound_ratio.max(ratio);
            if *b > bound * (1.0 + 1e-12) {
                conclusion_holds = false;
            }
        }
    } else {
        conclusion_holds = false;
    }
    RussellCheck {
        holds,
        first_violation,
        conclusion_holds,
        max_bound_ratio,
    }
}

/// Constructive sampler saturating the recurrence: beta_{n+1} is the
/// positive root of x^2 + M0 x - M0 beta_n = 0. Used by the property tests.
pub fn russell_equality_sequence(beta0: f64, m0: f64, len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut b = beta0;
    out.push(b);
    for _ in 1..len {
        b = 0.5 * (-m0 + (m0 * m0 + 4.0 * m0 * b).sqrt());
        out.push(b);
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub verdict_kind: DecayKind,
    pub verdict_k: Option<u32>,
    pub chosen: ChosenModel,
    pub fit_exponential: ModelFit,
    pub fit_polynomial: ModelFit,
    pub consistent: bool,
    pub note: String,
}

/// Compares the geometric verdict with the measured fit: uniform expects an
/// exponential model; polynomial of order K expects a polynomial model with
/// exponent at least 1/K (one-sided, the theorem gives an upper bound).
pub fn predicted_vs_measured(verdict: &DecayVerdict, fit: &DecayFit) -> ConsistencyReport {
    let (consistent, note) = match (verdict.kind, fit.chosen) {
        (DecayKind::Uniform, ChosenModel::Exponential) => (true, "uniform verdict, exponential fit".to_string()),
        (DecayKind::Polynomial, ChosenModel::Polynomial) | (DecayKind::PolynomialSuspected, ChosenModel::Polynomial) => {
            let k = verdict.k.unwrap_or(2).max(1);
            let p = fit.polynomial.rate;
            if p >= 1.0 / k as f64 {
                (true, format!("polynomial fit p = {p:.3} >= 1/K = {:.3}", 1.0 / k as f64))
            } else {
                (
                    false,
                    format!("polynomial fit p = {p:.3} below 1/K = {:.3}", 1.0 / k as f64),
                )
            }
        }
        (_, ChosenModel::Ambiguous) => (false, "fit ambiguous within the selection margin".to_string()),
        (DecayKind::Uniform, ChosenModel::Polynomial) => (
            false,
            format!(
                "uniform verdict but polynomial fit (residuals {:.3e} vs {:.3e})",
                fit.exponential.residual, fit.polynomial.residual
            ),
        ),
        (_, ChosenModel::Exponential) => (
            false,
            format!(
                "polynomial verdict but exponential fit (residuals {:.3e} vs {:.3e})",
                fit.exponential.residual, fit.polynomial.residual
            ),
        ),
    };
    ConsistencyReport {
        verdict_kind: verdict.kind,
        verdict_k: verdict.k,
        chosen: fit.chosen,
        fit_exponential: fit.exponential,
        fit_polynomial: fit.polynomial,
        consistent,
        note,
    }
}
