//! Joint trajectory simulation of the two-commodity price model.
//!
//! Each deseasonalized log price is X^j + Z: the spike factor X^j advances by
//! the exponential-Euler or Milstein scheme of its diffusion, the Gaussian
//! factor Z by the exact OU kernel
//!   Z_{k+1} = e^{−λ_z Δ} Z_k + σ_z √((1 − e^{−2λ_z Δ})/(2λ_z)) G.
//! Cases: `Full` shares one Z across the commodities, `Independent` draws
//! Z^g ⊥ Z^e with the same (λ_z, σ_z), `Gaussian` replaces each X^j by an OU
//! process with the same rate and stationary moments matched to φ_j·Var(Y^j).
//!
//! Paths are independent tasks: path i draws from stream i of a counter-based
//! generator seeded once, so serial and parallel runs are bit-identical.

use crate::correlation::CorrStructure;
use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::nig::{self, NigParams};
use crate::seasonality::SeasonalFn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::fmt;
use std::str::FromStr;

/// Steps discarded after initializing X at its stationary mean and Z at 0,
/// before the first recorded point.
pub const BURN_IN_STEPS: usize = 252;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelCase {
    Full,
    Independent,
    Gaussian,
}

impl fmt::Display for ModelCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelCase::Full => "full",
            ModelCase::Independent => "independent",
            ModelCase::Gaussian => "gaussian",
        })
    }
}

impl FromStr for ModelCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "full" => Ok(ModelCase::Full),
            "independent" => Ok(ModelCase::Independent),
            "gaussian" => Ok(ModelCase::Gaussian),
            other => Err(Error::invalid(format!("unknown model case '{other}'"))),
        }
    }
}

/// Price assembly. `Geometric` models the log ratio: S = s(t)·e^{X+Z}.
/// `Arithmetic` models the deseasonalized ratio itself: S = s(t)·(X+Z)
/// (positivity is then up to the calibrated factor levels).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceForm {
    Geometric,
    Arithmetic,
}

impl fmt::Display for PriceForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriceForm::Geometric => "geometric",
            PriceForm::Arithmetic => "arithmetic",
        })
    }
}

impl FromStr for PriceForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "geometric" => Ok(PriceForm::Geometric),
            "arithmetic" => Ok(PriceForm::Arithmetic),
            other => Err(Error::invalid(format!("unknown price form '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Euler,
    Milstein,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Euler => "euler",
            Scheme::Milstein => "milstein",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euler" => Ok(Scheme::Euler),
            "milstein" => Ok(Scheme::Milstein),
            other => Err(Error::invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Calibrated model: seasonal curves, correlation structure, spike parameters
/// and the case/form switches.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub seasonal_g: SeasonalFn,
    pub seasonal_e: SeasonalFn,
    pub corr: CorrStructure,
    pub theta_g: NigParams,
    pub theta_e: NigParams,
    pub case: ModelCase,
    pub form: PriceForm,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.corr.validate()?;
        if !(self.corr.sigma_z >= 0.0 && self.corr.sigma_z.is_finite()) {
            return Err(Error::config("sigma_z", "must be finite and >= 0 (run derive_sigma_z)"));
        }
        if self.case == ModelCase::Gaussian
            && !(self.corr.var_yg >= 0.0 && self.corr.var_ye >= 0.0)
        {
            return Err(Error::config(
                "var_yg/var_ye",
                "Gaussian case needs the observed variances for moment matching",
            ));
        }
        Ok(())
    }

    /// Per-commodity factor diffusions for the configured case.
    fn factor_specs(&self) -> Result<(DiffusionSpec, DiffusionSpec)> {
        match self.case {
            ModelCase::Full | ModelCase::Independent => Ok((
                nig::quasi_saddlepoint_spec(&self.theta_g, self.corr.lambda_g)?,
                nig::quasi_saddlepoint_spec(&self.theta_e, self.corr.lambda_e)?,
            )),
            ModelCase::Gaussian => {
                let sg = (2.0 * self.corr.lambda_g * self.corr.phi_g * self.corr.var_yg).sqrt();
                let se = (2.0 * self.corr.lambda_e * self.corr.phi_e * self.corr.var_ye).sqrt();
                Ok((
                    DiffusionSpec::gaussian_ou(self.corr.lambda_g, self.theta_g.mean(), sg)?,
                    DiffusionSpec::gaussian_ou(self.corr.lambda_e, self.theta_e.mean(), se)?,
                ))
            }
        }
    }

    fn price_at(&self, seasonal: &SeasonalFn, t_years: f64, factor_sum: f64) -> f64 {
        let s = seasonal.eval(t_years * seasonal.days_per_year as f64);
        match self.form {
            PriceForm::Geometric => s * factor_sum.exp(),
            PriceForm::Arithmetic => s * factor_sum,
        }
    }
}

/// Simulated joint trajectories; `paths_g[i][k]` is the gas price of path i
/// at `times[k] = (k+1)Δ`.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub times: Vec<f64>,
    pub paths_g: Vec<Vec<f64>>,
    pub paths_e: Vec<Vec<f64>>,
    pub seed: u64,
    pub scheme: Scheme,
}

/// Exact OU update e^{−λΔ} z + σ √((1 − e^{−2λΔ})/(2λ)) G.
pub fn step_ou_exact(z: f64, lambda: f64, sigma: f64, dt: f64, gauss: f64) -> f64 {
    debug_assert!(lambda > 0.0 && dt > 0.0);
    let e = (-lambda * dt).exp();
    e * z + sigma * ((1.0 - e * e) / (2.0 * lambda)).sqrt() * gauss
}

/// Raw exponential-Euler kernel for dX = −λ(X − μ)dt + σ(X)dW; `sigma` is
/// σ evaluated at the current state. The spike steppers wrap this with the
/// diffusion's own coefficients.
pub fn mr_euler_step(x: f64, rate: f64, mean: f64, sigma: f64, dt: f64, gauss: f64) -> f64 {
    let e = (-rate * dt).exp();
    e * x + mean * (1.0 - e) + sigma * ((1.0 - e * e) / (2.0 * rate)).sqrt() * gauss
}

/// Raw Milstein kernel; `sigma` and `sigma_sigma_prime` are σ and σσ′ at the
/// current state.
pub fn mr_milstein_step(
    x: f64,
    rate: f64,
    mean: f64,
    sigma: f64,
    sigma_sigma_prime: f64,
    dt: f64,
    gauss: f64,
) -> f64 {
    let e = (-rate * dt).exp();
    e * (x + (mean * rate - 0.5 * sigma_sigma_prime) * dt)
        + sigma * ((1.0 - e * e) / (2.0 * rate)).sqrt() * gauss
        + 0.5 * sigma_sigma_prime * dt * gauss * gauss
}

/// Exponential-Euler update of a mean-reverting factor:
/// e^{−λΔ} x + μ(1 − e^{−λΔ}) + σ(x) √((1 − e^{−2λΔ})/(2λ)) G.
pub fn step_spike_euler(x: f64, spec: &DiffusionSpec, dt: f64, gauss: f64) -> f64 {
    debug_assert!(dt > 0.0);
    mr_euler_step(x, spec.rate, spec.mean, spec.sigma(x), dt, gauss)
}

/// Milstein update
/// e^{−λΔ}(x + (μλ − ½σσ'(x))Δ) + σ(x)√((1−e^{−2λΔ})/(2λ)) G + ½σσ'(x)Δ G².
/// The G² correction carries the factor Δ so the term vanishes with the step
/// (and the combined correction is ½σσ'Δ(G² − 1) + O(Δ²), the classical one).
pub fn step_spike_milstein(x: f64, spec: &DiffusionSpec, dt: f64, gauss: f64) -> f64 {
    debug_assert!(dt > 0.0);
    mr_milstein_step(
        x,
        spec.rate,
        spec.mean,
        spec.sigma(x),
        spec.sigma_sigma_prime(x),
        dt,
        gauss,
    )
}

fn step_spike(scheme: Scheme, x: f64, spec: &DiffusionSpec, dt: f64, gauss: f64) -> f64 {
    match scheme {
        Scheme::Euler => step_spike_euler(x, spec, dt, gauss),
        Scheme::Milstein => step_spike_milstein(x, spec, dt, gauss),
    }
}

/// Simulate `n_paths` joint trajectories of `n_steps` recorded points at step
/// `dt`. X factors start at their stationary means, Z at 0, and 252 burn-in
/// steps are discarded; recorded point k sits at t = (k+1)·dt. Path i uses
/// RNG stream i of `seed`, so the output is deterministic for a given
/// (seed, spec, scheme, n_paths, n_steps) regardless of worker threads.
pub fn simulate_paths(
    spec: &ModelSpec,
    n_paths: usize,
    n_steps: usize,
    dt: f64,
    seed: u64,
    scheme: Scheme,
) -> Result<PathSet> {
    spec.validate()?;
    if n_paths == 0 || n_steps == 0 {
        return Err(Error::invalid("need positive path and step counts"));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt must be finite and > 0"));
    }
    let (spec_g, spec_e) = spec.factor_specs()?;
    let (lambda_z, sigma_z) = (spec.corr.lambda_z, spec.corr.sigma_z);
    let shared_z = spec.case != ModelCase::Independent;

    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..n_paths)
        .into_par_iter()
        .map(|path| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(path as u64);
            let mut xg = spec_g.mean;
            let mut xe = spec_e.mean;
            let (mut zg, mut ze) = (0.0, 0.0);
            let mut gas = Vec::with_capacity(n_steps);
            let mut elec = Vec::with_capacity(n_steps);
            for k in 0..BURN_IN_STEPS + n_steps {
                // fixed draw order: X^g, X^e, then Z (one draw when shared)
                let g_xg: f64 = rng.sample(StandardNormal);
                let g_xe: f64 = rng.sample(StandardNormal);
                xg = step_spike(scheme, xg, &spec_g, dt, g_xg);
                xe = step_spike(scheme, xe, &spec_e, dt, g_xe);
                if shared_z {
                    zg = step_ou_exact(zg, lambda_z, sigma_z, dt, rng.sample(StandardNormal));
                    ze = zg;
                } else {
                    zg = step_ou_exact(zg, lambda_z, sigma_z, dt, rng.sample(StandardNormal));
                    ze = step_ou_exact(ze, lambda_z, sigma_z, dt, rng.sample(StandardNormal));
                }
                if k >= BURN_IN_STEPS {
                    let t = (k - BURN_IN_STEPS + 1) as f64 * dt;
                    gas.push(spec.price_at(&spec.seasonal_g, t, xg + zg));
                    elec.push(spec.price_at(&spec.seasonal_e, t, xe + ze));
                }
            }
            (gas, elec)
        })
        .collect();

    let mut paths_g = Vec::with_capacity(n_paths);
    let mut paths_e = Vec::with_capacity(n_paths);
    for (g, e) in paths {
        paths_g.push(g);
        paths_e.push(e);
    }
    Ok(PathSet {
        times: (1..=n_steps).map(|k| k as f64 * dt).collect(),
        paths_g,
        paths_e,
        seed,
        scheme,
    })
}
