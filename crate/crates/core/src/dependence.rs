//! Coupling-coefficient diagnostics: Monte Carlo estimates of
//! `delta_p(l) = ||X_k - X_k^{(l,')}||_p`, decay classification, and the
//! summability verdict for the weighted tail `sum_l l^2 delta_p(l)`.

use thiserror::Error;

use crate::innovations::{Seed64, SwapPlan};
use crate::processes::{ProcessSpec, SpecError};
use crate::stats;

/// Mean squared log-residual above which a decay fit is considered too poor
/// to ground a summability verdict.
pub const GOODNESS_MSR_MAX: f64 = 0.25;

/// Preference margin toward the geometric class on near-tied fits.
const GEOMETRIC_PREFERENCE: f64 = 1.1;

#[derive(Debug, Error, PartialEq)]
pub enum DependenceError {
    #[error("at least 100 replications required for a meaningful standard error, got {0}")]
    TooFewReplications(usize),
    #[error("requested moment order {requested} exceeds the spec's declared order {declared}")]
    MomentOrderTooHigh { requested: f64, declared: f64 },
    #[error("lag {lag} lies beyond the truncation window {window}")]
    LagBeyondWindow { lag: u32, window: u32 },
    #[error("lags must be strictly increasing")]
    LagsNotIncreasing,
    #[error("profile too short: {got} strictly positive coefficients, need at least {need}")]
    ProfileTooShort { got: usize, need: usize },
    #[error(transparent)]
    Spec(#[from] SpecError),
}

/// Monte Carlo estimates of the coupling coefficients with their weighted
/// partial sums `sum_{l' <= l} l'^2 delta_hat(l')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependenceProfile {
    pub lags: Vec<u32>,
    pub delta_hat: Vec<f64>,
    pub se: Vec<f64>,
    pub p: f64,
    pub replications: usize,
    pub weighted_partial_sums: Vec<f64>,
}

impl DependenceProfile {
    /// Assemble a profile from per-lag estimates, deriving the partial sums.
    pub fn from_estimates(
        lags: Vec<u32>,
        delta_hat: Vec<f64>,
        se: Vec<f64>,
        p: f64,
        replications: usize,
    ) -> Result<Self, DependenceError> {
        assert!(lags.len() == delta_hat.len() && lags.len() == se.len());
        if !lags.windows(2).all(|w| w[0] < w[1]) {
            return Err(DependenceError::LagsNotIncreasing);
        }
        let mut acc = 0.0;
        let weighted_partial_sums = lags
            .iter()
            .zip(&delta_hat)
            .map(|(l, d)| {
                acc += (*l as f64) * (*l as f64) * d;
                acc
            })
            .collect();
        Ok(DependenceProfile { lags, delta_hat, se, p, replications, weighted_partial_sums })
    }

    pub fn all_zero(&self) -> bool {
        self.delta_hat.iter().all(|d| *d == 0.0)
    }

    /// CSV rows `(lag, delta_hat, se, weighted_partial_sum)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag,delta_hat,se,weighted_partial_sum\n");
        for i in 0..self.lags.len() {
            out.push_str(&format!(
                "{},{:.16e},{:.16e},{:.16e}\n",
                self.lags[i], self.delta_hat[i], self.se[i], self.weighted_partial_sums[i]
            ));
        }
        out
    }
}

/// Estimate `delta_p(l)` for each lag by coupling a single coordinate: under
/// stationarity `sup_k ||X_k - X_k^{(l,')}||_p = ||X_l - X_l'||_p`, so a
/// fixed anchor suffices.
pub fn dependence_profile(
    spec: &ProcessSpec,
    p: f64,
    lags: &[u32],
    replications: usize,
    seed: Seed64,
) -> Result<DependenceProfile, DependenceError> {
    spec.validate()?;
    if replications < 100 {
        return Err(DependenceError::TooFewReplications(replications));
    }
    if p > spec.moment_order {
        return Err(DependenceError::MomentOrderTooHigh {
            requested: p,
            declared: spec.moment_order,
        });
    }
    if !lags.windows(2).all(|w| w[0] < w[1]) {
        return Err(DependenceError::LagsNotIncreasing);
    }
    let window = spec.window();
    if let Some(bad) = lags.iter().find(|l| **l > window) {
        return Err(DependenceError::LagBeyondWindow { lag: *bad, window });
    }

    let anchor = 0i64;
    // |X - X^{(l,')}|^p per replication and lag, replication-major so the
    // reduction order is fixed by replication index.
    let powers: Vec<Vec<f64>> = crate::runner::par_map(replications, |r| {
        let seed_r = seed.derive(r as u64);
        lags.iter()
            .map(|l| {
                let (base, swapped) = spec
                    .coupled_value_at(anchor, SwapPlan::single(*l), seed_r, seed_r)
                    .expect("validated spec");
                (base - swapped).abs().powf(p)
            })
            .collect()
    });

    let mut delta_hat = Vec::with_capacity(lags.len());
    let mut se = Vec::with_capacity(lags.len());
    for i in 0..lags.len() {
        let ys: Vec<f64> = powers.iter().map(|row| row[i]).collect();
        let (m, se_m) = stats::mean_with_se(&ys);
        if m <= 0.0 {
            delta_hat.push(0.0);
            se.push(0.0);
        } else {
            // Delta method on the p-th absolute moment.
            delta_hat.push(m.powf(1.0 / p));
            se.push((1.0 / p) * m.powf(1.0 / p - 1.0) * se_m);
        }
    }
    DependenceProfile::from_estimates(lags.to_vec(), delta_hat, se, p, replications)
}

/// Decay class of a fitted profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayClass {
    Geometric,
    Polynomial,
}

/// Log-linear decay fit of a dependence profile.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub class: DecayClass,
    /// `rho_hat` for the geometric class, exponent `a_hat` for polynomial.
    pub parameter: f64,
    /// Amplitude `C` with `delta(l) ~ C rho^l` or `C l^{-a}`.
    pub amplitude: f64,
    /// Residual sum of squares of the selected log-linear fit.
    pub goodness: f64,
    /// Extrapolated tail `sum_{l > L_max} l^2 delta(l)` under the fit;
    /// infinite when the fitted class is not summable.
    pub extrapolated_tail: f64,
}

/// Fit `log delta` against `l` (geometric) and against `log l` (polynomial),
/// selecting the class with lower residual; near ties go to geometric.
pub fn decay_fit(profile: &DependenceProfile) -> Result<DecayFit, DependenceError> {
    let pts: Vec<(f64, f64)> = profile
        .lags
        .iter()
        .zip(&profile.delta_hat)
        .filter(|(l, d)| **l >= 1 && **d > 0.0)
        .map(|(l, d)| (*l as f64, d.ln()))
        .collect();
    if pts.len() < 5 {
        return Err(DependenceError::ProfileTooShort { got: pts.len(), need: 5 });
    }
    let ls: Vec<f64> = pts.iter().map(|(l, _)| *l).collect();
    let logs: Vec<f64> = pts.iter().map(|(_, y)| *y).collect();
    let log_ls: Vec<f64> = ls.iter().map(|l| l.ln()).collect();
    let geo = stats::line_fit(&ls, &logs);
    let poly = stats::line_fit(&log_ls, &logs);

    let l_max = *profile.lags.last().unwrap() as u64;
    let geo_valid = geo.slope < 0.0;
    if geo_valid && geo.rss <= GEOMETRIC_PREFERENCE * poly.rss {
        let rho = geo.slope.exp();
        let amplitude = geo.intercept.exp();
        Ok(DecayFit {
            class: DecayClass::Geometric,
            parameter: rho,
            amplitude,
            goodness: geo.rss,
            extrapolated_tail: amplitude * geometric_weighted_tail(rho, l_max),
        })
    } else {
        let a = -poly.slope;
        let amplitude = poly.intercept.exp();
        let tail = if a > 3.0 {
            // sum_{l > L} l^{2-a} <= integral_L^inf x^{2-a} dx
            amplitude * (l_max as f64).powf(3.0 - a) / (a - 3.0)
        } else {
            f64::INFINITY
        };
        Ok(DecayFit {
            class: DecayClass::Polynomial,
            parameter: a,
            amplitude,
            goodness: poly.rss,
            extrapolated_tail: tail,
        })
    }
}

/// `sum_{l = L+1}^{inf} l^2 rho^l` for `rho in (0,1)`.
fn geometric_weighted_tail(rho: f64, l_max: u64) -> f64 {
    let full = rho * (1.0 + rho) / (1.0 - rho).powi(3);
    let mut head = 0.0;
    for l in 1..=l_max {
        head += (l as f64) * (l as f64) * rho.powi(l as i32);
    }
    (full - head).max(0.0)
}

/// Verdict on the weighted summability condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummabilityVerdict {
    Summable,
    NotSummable,
    Inconclusive,
}

impl SummabilityVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            SummabilityVerdict::Summable => "summable",
            SummabilityVerdict::NotSummable => "not-summable",
            SummabilityVerdict::Inconclusive => "inconclusive",
        }
    }
}

/// Summability report: verdict plus the extrapolated tail beyond the last
/// profiled lag.
#[derive(Debug, Clone, PartialEq)]
pub struct SummabilityReport {
    pub verdict: SummabilityVerdict,
    pub tail_estimate: f64,
    /// Largest computed weighted partial sum. The theory sets no threshold
    /// for how small the full sum must be, so the magnitude is reported,
    /// not judged.
    pub partial_sum: f64,
}

/// Decide whether `sum_l l^2 delta_p(l)` is finite under the fitted decay
/// class. An all-zero profile is summable with zero tail; a missing or poor
/// fit yields an inconclusive verdict.
pub fn summability_report(
    profile: &DependenceProfile,
    fit: Option<&DecayFit>,
) -> Result<SummabilityReport, DependenceError> {
    if profile.lags.len() < 5 {
        return Err(DependenceError::ProfileTooShort { got: profile.lags.len(), need: 5 });
    }
    let partial_sum = profile.weighted_partial_sums.last().copied().unwrap_or(0.0);
    if profile.all_zero() {
        return Ok(SummabilityReport {
            verdict: SummabilityVerdict::Summable,
            tail_estimate: 0.0,
            partial_sum,
        });
    }
    let Some(fit) = fit else {
        return Ok(SummabilityReport {
            verdict: SummabilityVerdict::Inconclusive,
            tail_estimate: f64::NAN,
            partial_sum,
        });
    };
    let msr = fit.goodness / profile.lags.len() as f64;
    let verdict = match fit.class {
        _ if msr > GOODNESS_MSR_MAX => SummabilityVerdict::Inconclusive,
        DecayClass::Geometric => {
            if fit.parameter > 0.0 && fit.parameter < 1.0 {
                SummabilityVerdict::Summable
            } else {
                SummabilityVerdict::Inconclusive
            }
        }
        DecayClass::Polynomial => {
            if fit.parameter > 3.0 {
                SummabilityVerdict::Summable
            } else {
                SummabilityVerdict::NotSummable
            }
        }
    };
    Ok(SummabilityReport { verdict, tail_estimate: fit.extrapolated_tail, partial_sum })
}
