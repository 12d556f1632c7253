//! Order-m maximum likelihood for the spike components.
//!
//! The deseasonalized log price is Y = X + Z with X a quasi-saddlepoint
//! diffusion (rate λ_j, invariant density f_qs) and Z an independent Gaussian
//! OU factor whose stationary law is N(0, σ̃_Z²), σ̃_Z = σ_z/√(2λ_z).
//!
//! Order 0 treats observations as draws from the stationary convolution
//!   h(y) = ∫ f_qs(y − z) φ(z; σ̃_Z) dz ≈ (1/√π) Σ_k w_k f_qs(y − √2 σ̃_Z u_k)
//! with (u_k, w_k) a Gauss–Hermite rule. Order 1 conditions on the previous
//! observation: the latent Z is reweighted by f_qs(y_prev − z) and each
//! mixture component propagates through the exact OU kernel for Z and the
//! exponential-Euler Gaussian kernel for X,
//!   p(y' | y) = Σ_k c_k N(y'; m_k, s_k²),
//!   m_k  = e^{−λ_z Δ} z_k + e^{−λ_j Δ}(y − z_k) + μ_j (1 − e^{−λ_j Δ}),
//!   s_k² = σ_j²(y − z_k) (1 − e^{−2λ_j Δ})/(2λ_j) + σ̃_Z²(1 − e^{−2λ_z Δ}),
//!   c_k ∝ w_k f_qs(y − z_k),   z_k = √2 σ̃_Z u_k.
//!
//! Likelihood arithmetic runs in log space throughout; the fit maximizes over
//! θ = (α, β, δ, l) via the unconstrained chart α = |β| + e^a, δ = e^d.

use crate::error::{Error, Result};
use crate::nig::{self, NigParams, QuasiSaddlepoint};
use crate::optim::{nelder_mead, NmOptions};
use crate::quad::GaussHermite;
use rayon::prelude::*;

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;

/// Everything a likelihood evaluation needs besides θ itself.
#[derive(Debug, Clone)]
pub struct LikelihoodConfig {
    /// 0 = stationary marginal, 1 = one-step transition.
    pub order: u8,
    /// Gauss–Hermite node count for the Z integrals.
    pub quad_nodes: usize,
    /// Stationary standard deviation of Z, σ̃_Z = σ_z/√(2λ_z).
    pub sigma_z_tilde: f64,
    pub lambda_z: f64,
    /// Mean-reversion rate λ_j of the spike factor being fitted.
    pub lambda_j: f64,
    /// Observation step Δ in years.
    pub delta_t: f64,
    /// Optimizer starting point.
    pub init_theta: NigParams,
    /// Minimum series length accepted by [`fit_mle`].
    pub min_obs: usize,
}

impl LikelihoodConfig {
    /// Configuration with 32 quadrature nodes, θ_init = (1, 0, 1, 0) and a
    /// 100-observation floor.
    pub fn new(
        order: u8,
        sigma_z_tilde: f64,
        lambda_z: f64,
        lambda_j: f64,
        delta_t: f64,
    ) -> Result<Self> {
        let cfg = LikelihoodConfig {
            order,
            quad_nodes: 32,
            sigma_z_tilde,
            lambda_z,
            lambda_j,
            delta_t,
            init_theta: NigParams::new(1.0, 0.0, 1.0, 0.0)?,
            min_obs: 100,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// As [`LikelihoodConfig::new`] but taking the OU volatility σ_z instead
    /// of the stationary deviation.
    pub fn with_sigma_z(
        order: u8,
        sigma_z: f64,
        lambda_z: f64,
        lambda_j: f64,
        delta_t: f64,
    ) -> Result<Self> {
        if !(sigma_z >= 0.0 && sigma_z.is_finite()) {
            return Err(Error::config("sigma_z", "must be finite and >= 0"));
        }
        if !(lambda_z > 0.0 && lambda_z.is_finite()) {
            return Err(Error::config("lambda_z", "must be finite and > 0"));
        }
        Self::new(order, sigma_z / (2.0 * lambda_z).sqrt(), lambda_z, lambda_j, delta_t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order > 1 {
            return Err(Error::config("order", "must be 0 or 1"));
        }
        if self.quad_nodes < 2 {
            return Err(Error::config("quad_nodes", "need at least 2 quadrature nodes"));
        }
        if !(self.sigma_z_tilde >= 0.0 && self.sigma_z_tilde.is_finite()) {
            return Err(Error::config("sigma_z_tilde", "must be finite and >= 0"));
        }
        if !(self.lambda_z > 0.0 && self.lambda_z.is_finite()) {
            return Err(Error::config("lambda_z", "must be finite and > 0"));
        }
        if !(self.lambda_j > 0.0 && self.lambda_j.is_finite()) {
            return Err(Error::config("lambda_j", "must be finite and > 0"));
        }
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return Err(Error::config("delta_t", "must be finite and > 0"));
        }
        Ok(())
    }
}

/// Gauss–Hermite nodes and weights for ∫ g(u) e^{−u²} du ≈ Σ w_k g(u_k).
pub fn hermite_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rule = GaussHermite::new(n)?;
    Ok((rule.nodes, rule.weights))
}

/// Streaming log-sum-exp accumulator. −∞ terms are ignored; an empty (or all
/// −∞) accumulation evaluates to −∞.
#[derive(Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    fn new() -> Self {
        LogSum { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    fn add(&mut self, a: f64) {
        if a == f64::NEG_INFINITY {
            return;
        }
        if a <= self.max {
            self.sum += (a - self.max).exp();
        } else {
            self.sum = self.sum * (self.max - a).exp() + 1.0;
            self.max = a;
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

fn ln_normal(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -0.5 * ((std::f64::consts::TAU * var).ln() + d * d / var)
}

/// log of (1/√π) Σ_k w_k f(y − √2 σ̃ u_k), the Hermite image of the Gaussian
/// convolution ∫ f(y − z) φ(z; σ̃) dz. σ̃ = 0 short-circuits to ln f(y).
/// `ln_w` are the log quadrature weights of `hermite_rule`. Generic in the
/// log density `ln_f` so substitution oracles can drive it directly.
pub fn ln_hermite_convolution(
    nodes: &[f64],
    ln_w: &[f64],
    sigma_tilde: f64,
    ln_f: &(impl Fn(f64) -> f64 + ?Sized),
    y: f64,
) -> f64 {
    if sigma_tilde == 0.0 {
        return ln_f(y);
    }
    let scale = std::f64::consts::SQRT_2 * sigma_tilde;
    let mut acc = LogSum::new();
    for (&u, &lw) in nodes.iter().zip(ln_w) {
        acc.add(lw + ln_f(y - scale * u));
    }
    acc.value() - LN_SQRT_PI
}

/// Discretization constants shared by every transition term.
#[derive(Debug, Clone, Copy)]
struct StepConstants {
    e_j: f64,
    e_z: f64,
    mu_j: f64,
    /// (1 − e^{−2λ_j Δ})/(2λ_j): multiplies σ_j²(x) to give σ̄_j².
    var_j_factor: f64,
    /// σ̄_Z² = σ̃_Z² (1 − e^{−2λ_z Δ}).
    var_z_bar: f64,
}

impl StepConstants {
    fn new(cfg: &LikelihoodConfig, mu_j: f64) -> Self {
        let lj = cfg.lambda_j * cfg.delta_t;
        let lz = cfg.lambda_z * cfg.delta_t;
        StepConstants {
            e_j: (-lj).exp(),
            e_z: (-lz).exp(),
            mu_j,
            var_j_factor: (1.0 - (-2.0 * lj).exp()) / (2.0 * cfg.lambda_j),
            var_z_bar: cfg.sigma_z_tilde * cfg.sigma_z_tilde * (1.0 - (-2.0 * lz).exp()),
        }
    }
}

/// ln p(y | y_prev) for the order-1 mixture. `ln_f` is the log stationary
/// density of X and `sigma2_x` its squared diffusion coefficient, both
/// evaluated at the mixture abscissae x_k = y_prev − z_k. Errors when the
/// conditioning marginal at y_prev vanishes identically.
fn ln_transition_mixture(
    nodes: &[f64],
    ln_w: &[f64],
    sigma_tilde: f64,
    k: &StepConstants,
    ln_f: &(impl Fn(f64) -> f64 + ?Sized),
    sigma2_x: &(impl Fn(f64) -> f64 + ?Sized),
    y_prev: f64,
    y: f64,
) -> Result<f64> {
    if sigma_tilde == 0.0 {
        // Z ≡ 0: a single Euler Gaussian kernel
        if ln_f(y_prev) == f64::NEG_INFINITY {
            return Err(Error::numerical(
                "transition conditions on a null event: marginal density vanishes at y_prev",
            ));
        }
        let m = k.e_j * y_prev + k.mu_j * (1.0 - k.e_j);
        let s2 = sigma2_x(y_prev) * k.var_j_factor + k.var_z_bar;
        return Ok(ln_normal(y, m, s2));
    }
    let scale = std::f64::consts::SQRT_2 * sigma_tilde;
    let mut den = LogSum::new();
    let mut num = LogSum::new();
    for (&u, &lw) in nodes.iter().zip(ln_w) {
        let z = scale * u;
        let x = y_prev - z;
        let a = lw + ln_f(x);
        den.add(a);
        if a > f64::NEG_INFINITY {
            let m = k.e_z * z + k.e_j * x + k.mu_j * (1.0 - k.e_j);
            let s2 = sigma2_x(x) * k.var_j_factor + k.var_z_bar;
            num.add(a + ln_normal(y, m, s2));
        }
    }
    let ln_h = den.value();
    if !ln_h.is_finite() {
        return Err(Error::numerical(
            "transition conditions on a null event: marginal density vanishes at y_prev",
        ));
    }
    Ok(num.value() - ln_h)
}

/// Per-θ likelihood machinery: the normalized quasi-saddlepoint density plus
/// the node shifts and step constants shared by all observations.
struct Evaluator<'a> {
    cfg: &'a LikelihoodConfig,
    nodes: &'a [f64],
    ln_w: Vec<f64>,
    qs: QuasiSaddlepoint,
    step: StepConstants,
}

impl<'a> Evaluator<'a> {
    fn new(cfg: &'a LikelihoodConfig, gh: &'a GaussHermite, theta: NigParams) -> Result<Self> {
        let qs = QuasiSaddlepoint::new(theta)?;
        Ok(Evaluator {
            cfg,
            nodes: &gh.nodes,
            ln_w: gh.weights.iter().map(|w| w.ln()).collect(),
            step: StepConstants::new(cfg, theta.mean()),
            qs,
        })
    }

    fn ln_marginal(&self, y: f64) -> f64 {
        ln_hermite_convolution(self.nodes, &self.ln_w, self.cfg.sigma_z_tilde, &|x| self.qs.ln_pdf(x), y)
    }

    fn ln_transition(&self, y_prev: f64, y: f64) -> Result<f64> {
        let p = self.qs.params;
        ln_transition_mixture(
            self.nodes,
            &self.ln_w,
            self.cfg.sigma_z_tilde,
            &self.step,
            &|x| self.qs.ln_pdf(x),
            &|x| nig::qs_sigma2(&p, self.cfg.lambda_j, x),
            y_prev,
            y,
        )
    }

    /// ℓ_m(θ). Terms whose density underflows (or conditions on a null event)
    /// contribute −∞; callers treat a non-finite sum as an infinite penalty.
    fn log_likelihood(&self, y: &[f64]) -> f64 {
        let terms: Vec<f64> = if self.cfg.order == 0 {
            y.par_iter().map(|&v| self.ln_marginal(v)).collect()
        } else {
            y.par_windows(2)
                .map(|w| self.ln_transition(w[0], w[1]).unwrap_or(f64::NEG_INFINITY))
                .collect()
        };
        terms.iter().sum()
    }
}

/// Order-0 marginal density h(y) of one observation under θ.
pub fn marginal_density_order0(cfg: &LikelihoodConfig, theta: &NigParams, y: f64) -> Result<f64> {
    cfg.validate()?;
    if !y.is_finite() {
        return Err(Error::invalid("observation must be finite"));
    }
    let gh = GaussHermite::new(cfg.quad_nodes)?;
    let ev = Evaluator::new(cfg, &gh, *theta)?;
    Ok(ev.ln_marginal(y).exp())
}

/// Order-1 transition density p(y | y_prev) under θ.
pub fn transition_density_order1(
    cfg: &LikelihoodConfig,
    theta: &NigParams,
    y_prev: f64,
    y: f64,
) -> Result<f64> {
    cfg.validate()?;
    if cfg.order != 1 {
        return Err(Error::config("order", "transition density requires order 1"));
    }
    if !(y.is_finite() && y_prev.is_finite()) {
        return Err(Error::invalid("observations must be finite"));
    }
    let gh = GaussHermite::new(cfg.quad_nodes)?;
    let ev = Evaluator::new(cfg, &gh, *theta)?;
    Ok(ev.ln_transition(y_prev, y)?.exp())
}

/// ℓ_m(θ) over the residual series: order 0 sums log marginals, order 1 sums
/// log transitions over consecutive pairs. Underflowing terms yield −∞.
pub fn log_likelihood(y: &[f64], cfg: &LikelihoodConfig, theta: &NigParams) -> Result<f64> {
    cfg.validate()?;
    if y.len() < 1 + cfg.order as usize {
        return Err(Error::invalid("series too short for the requested order"));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("residual series contains non-finite values"));
    }
    let gh = GaussHermite::new(cfg.quad_nodes)?;
    let ev = Evaluator::new(cfg, &gh, *theta)?;
    Ok(ev.log_likelihood(y))
}

/// (a, β, d, l) ↔ θ chart with α = |β| + e^a, δ = e^d.
fn encode(theta: &NigParams) -> [f64; 4] {
    [
        (theta.alpha - theta.beta.abs()).ln(),
        theta.beta,
        theta.delta.ln(),
        theta.loc,
    ]
}

fn decode(x: &[f64]) -> Result<NigParams> {
    NigParams::new(x[1].abs() + x[0].exp(), x[1], x[2].exp(), x[3])
}

#[derive(Debug, Clone)]
pub struct MleFit {
    pub theta: NigParams,
    pub log_likelihood: f64,
    /// False when the simplex exhausted its evaluation budget before meeting
    /// the tolerance criteria; the best point found is still returned.
    pub converged: bool,
    pub evaluations: usize,
}

/// Maximize ℓ_m over θ by a Nelder–Mead search (max 2000 evaluations, one
/// restart) in the unconstrained chart. Starts from `cfg.init_theta`.
pub fn fit_mle(y: &[f64], cfg: &LikelihoodConfig) -> Result<MleFit> {
    cfg.validate()?;
    let floor = cfg.min_obs.max(1 + cfg.order as usize);
    if y.len() < floor {
        return Err(Error::invalid(format!(
            "need at least {} observations, got {}",
            floor,
            y.len()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("residual series contains non-finite values"));
    }
    let gh = GaussHermite::new(cfg.quad_nodes)?;
    let objective = |x: &[f64]| -> f64 {
        let Ok(theta) = decode(x) else {
            return f64::INFINITY;
        };
        let Ok(ev) = Evaluator::new(cfg, &gh, theta) else {
            return f64::INFINITY;
        };
        let ll = ev.log_likelihood(y);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    };
    let x0 = encode(&cfg.init_theta);
    if !objective(&x0).is_finite() {
        return Err(Error::numerical(
            "log-likelihood is -inf at the initial parameters",
        ));
    }
    let result = nelder_mead(objective, &x0, &NmOptions::default());
    let theta = decode(&result.x)?;
    Ok(MleFit {
        theta,
        log_likelihood: -result.f,
        converged: result.converged,
        evaluations: result.evals,
    })
}
