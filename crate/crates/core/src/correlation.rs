//! Correlation structure of the two deseasonalized series.
//!
//! The two-factor model implies autocorrelations that are mixtures of two
//! exponentials sharing the slow rate λ_z, and a cross-correlation carried
//! by the common factor alone:
//!
//! ```text
//! ρ_g(τ)  = φ_g e^{−λ_g τ} + (1−φ_g) e^{−λ_z τ}
//! ρ_e(τ)  = φ_e e^{−λ_e τ} + (1−φ_e) e^{−λ_z τ}
//! ρ_ge(τ) = φ_ge e^{−λ_z τ}
//! ```
//!
//! with τ in years. Fitting minimizes the summed squared distance of the
//! three model curves to their empirical counterparts over lags 1..max_lag
//! (in observation days), with rates kept positive and ordered
//! (λ_g, λ_e > λ_z) and weights kept in [0,1] by an unconstrained
//! reparameterization: λ_z = e^u, λ_g = λ_z + e^v, λ_e = λ_z + e^w,
//! φ = logistic(s).

use crate::error::{Error, Result};
use crate::optim::{self, NmOptions};

/// Fitted correlation parameters. `sigma_z`, `var_yg`, `var_ye` are zero
/// until `derive_sigma_z` attaches them; afterwards
/// σ_z² = 2·λ_z·φ_ge·√(var_yg·var_ye) holds exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrStructure {
    pub lambda_g: f64,
    pub lambda_e: f64,
    pub lambda_z: f64,
    pub phi_g: f64,
    pub phi_e: f64,
    pub phi_ge: f64,
    pub sigma_z: f64,
    pub var_yg: f64,
    pub var_ye: f64,
}

impl CorrStructure {
    /// Default optimizer starting point: λ_g = λ_e = 50, λ_z = 2, φ = ½.
    pub fn default_init() -> Self {
        CorrStructure {
            lambda_g: 50.0,
            lambda_e: 50.0,
            lambda_z: 2.0,
            phi_g: 0.5,
            phi_e: 0.5,
            phi_ge: 0.5,
            sigma_z: 0.0,
            var_yg: 0.0,
            var_ye: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_z > 0.0 && self.lambda_g > 0.0 && self.lambda_e > 0.0) {
            return Err(Error::invalid("correlation rates must be positive"));
        }
        if self.lambda_g <= self.lambda_z || self.lambda_e <= self.lambda_z {
            return Err(Error::invalid(format!(
                "fast rates must exceed the common rate (λ_g={}, λ_e={}, λ_z={})",
                self.lambda_g, self.lambda_e, self.lambda_z
            )));
        }
        for (name, w) in [("phi_g", self.phi_g), ("phi_e", self.phi_e), ("phi_ge", self.phi_ge)] {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!("{name} = {w} outside [0,1]")));
            }
        }
        Ok(())
    }

    /// Model gas ACF at lag τ (years).
    pub fn acf_g(&self, tau: f64) -> f64 {
        self.phi_g * (-self.lambda_g * tau).exp()
            + (1.0 - self.phi_g) * (-self.lambda_z * tau).exp()
    }

    /// Model electricity ACF at lag τ (years).
    pub fn acf_e(&self, tau: f64) -> f64 {
        self.phi_e * (-self.lambda_e * tau).exp()
            + (1.0 - self.phi_e) * (-self.lambda_z * tau).exp()
    }

    /// Model cross-correlation at lag τ (years).
    pub fn ccf(&self, tau: f64) -> f64 {
        self.phi_ge * (-self.lambda_z * tau).exp()
    }
}

fn centered(y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = y.len();
    if n < 2 {
        return Err(Error::invalid("series too short for correlation"));
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = y.iter().map(|v| v - mean).collect();
    let var = x.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(Error::invalid("series has zero variance"));
    }
    Ok((x, var))
}

/// Sample autocorrelations at lags 1..=max_lag: the lag-τ covariance is
/// averaged over the n−τ valid pairs around the full-sample mean and
/// normalized by the full-sample variance (stationarity assumed).
pub fn empirical_acf(y: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 || max_lag >= y.len() {
        return Err(Error::invalid(format!(
            "max_lag {max_lag} out of range for series of length {}",
            y.len()
        )));
    }
    let (x, var) = centered(y)?;
    let n = x.len();
    Ok((1..=max_lag)
        .map(|tau| {
            let num: f64 = (0..n - tau).map(|t| x[t + tau] * x[t]).sum();
            num / (n - tau) as f64 / var
        })
        .collect())
}

/// Sample cross-correlations Corr(yg_{t+τ}, ye_t) at lags 1..=max_lag.
/// With `symmetrize`, averages the two orientations
/// ½[Corr(yg_{t+τ}, ye_t) + Corr(ye_{t+τ}, yg_t)].
pub fn empirical_ccf(yg: &[f64], ye: &[f64], max_lag: usize, symmetrize: bool) -> Result<Vec<f64>> {
    if yg.len() != ye.len() {
        return Err(Error::invalid(format!(
            "cross-correlation needs aligned series (lengths {} and {})",
            yg.len(),
            ye.len()
        )));
    }
    if max_lag == 0 || max_lag >= yg.len() {
        return Err(Error::invalid(format!(
            "max_lag {max_lag} out of range for series of length {}",
            yg.len()
        )));
    }
    let (g, vg) = centered(yg)?;
    let (e, ve) = centered(ye)?;
    let n = g.len();
    let denom = (vg * ve).sqrt();
    Ok((1..=max_lag)
        .map(|tau| {
            let fwd: f64 =
                (0..n - tau).map(|t| g[t + tau] * e[t]).sum::<f64>() / (n - tau) as f64 / denom;
            if symmetrize {
                let rev: f64 = (0..n - tau).map(|t| e[t + tau] * g[t]).sum::<f64>()
                    / (n - tau) as f64
                    / denom;
                0.5 * (fwd + rev)
            } else {
                fwd
            }
        })
        .collect())
}

/// Summed squared distance of the three model curves to the empirical ones.
pub fn correlation_objective(
    acf_g: &[f64],
    acf_e: &[f64],
    ccf: &[f64],
    days_per_year: u32,
    cs: &CorrStructure,
) -> f64 {
    let dpy = days_per_year as f64;
    let mut sse = 0.0;
    for (i, &v) in acf_g.iter().enumerate() {
        let d = cs.acf_g((i + 1) as f64 / dpy) - v;
        sse += d * d;
    }
    for (i, &v) in acf_e.iter().enumerate() {
        let d = cs.acf_e((i + 1) as f64 / dpy) - v;
        sse += d * d;
    }
    for (i, &v) in ccf.iter().enumerate() {
        let d = cs.ccf((i + 1) as f64 / dpy) - v;
        sse += d * d;
    }
    sse
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

fn logistic(s: f64) -> f64 {
    1.0 / (1.0 + (-s).exp())
}

fn decode(theta: &[f64]) -> CorrStructure {
    let lambda_z = theta[0].exp();
    CorrStructure {
        lambda_z,
        lambda_g: lambda_z + theta[1].exp(),
        lambda_e: lambda_z + theta[2].exp(),
        phi_g: logistic(theta[3]),
        phi_e: logistic(theta[4]),
        phi_ge: logistic(theta[5]),
        sigma_z: 0.0,
        var_yg: 0.0,
        var_ye: 0.0,
    }
}

fn encode(cs: &CorrStructure) -> Vec<f64> {
    let lz = cs.lambda_z.max(1e-8);
    vec![
        lz.ln(),
        (cs.lambda_g - lz).max(1e-3 * lz).ln(),
        (cs.lambda_e - lz).max(1e-3 * lz).ln(),
        logit(cs.phi_g),
        logit(cs.phi_e),
        logit(cs.phi_ge),
    ]
}

/// Least-squares fit of the exponential-mixture model to empirical
/// ACF/CCF curves (lags 1..=max_lag observation days, converted to years).
/// Returns the structure without σ_z; attach it with `derive_sigma_z`.
pub fn fit_correlation(
    acf_g: &[f64],
    acf_e: &[f64],
    ccf: &[f64],
    days_per_year: u32,
    init: &CorrStructure,
) -> Result<CorrStructure> {
    let max_lag = acf_g.len();
    if max_lag == 0 || acf_e.len() != max_lag || ccf.len() != max_lag {
        return Err(Error::invalid(format!(
            "ACF/CCF curves must share a positive length (got {}, {}, {})",
            acf_g.len(),
            acf_e.len(),
            ccf.len()
        )));
    }
    if days_per_year == 0 {
        return Err(Error::invalid("days_per_year must be positive"));
    }
    let objective =
        |theta: &[f64]| correlation_objective(acf_g, acf_e, ccf, days_per_year, &decode(theta));
    let opts = NmOptions {
        max_evals: 60_000,
        x_tol: 1e-12,
        f_tol: 1e-18,
        init_step: 0.4,
        restarts: 3,
    };
    let res = optim::nelder_mead(objective, &encode(init), &opts);
    if !res.converged {
        return Err(Error::numerical(format!(
            "correlation fit did not converge after {} evaluations (best objective {:.6e} at {:?})",
            res.evals, res.f, decode(&res.x)
        )));
    }
    Ok(decode(&res.x))
}

/// Attach σ_z = √(2·λ_z·φ_ge·√(var_yg·var_ye)) and record the variances.
pub fn derive_sigma_z(cs: &CorrStructure, var_yg: f64, var_ye: f64) -> Result<CorrStructure> {
    if !(var_yg > 0.0 && var_ye > 0.0) {
        return Err(Error::invalid(format!(
            "stationary variances must be positive (got {var_yg}, {var_ye})"
        )));
    }
    let mut out = *cs;
    out.var_yg = var_yg;
    out.var_ye = var_ye;
    out.sigma_z = (2.0 * cs.lambda_z * cs.phi_ge * (var_yg * var_ye).sqrt()).sqrt();
    Ok(out)
}
