//! Normal-inverse-Gaussian machinery: density, cumulant-generating function,
//! saddlepoint function and the quasi-saddlepoint diffusion built from them.
//!
//! For NIG(α, β, δ, l) the saddlepoint function t̂ solving κ'(t) = x is
//! available in closed form,
//!
//! ```text
//! t̂(x) = α(x−l)/√(δ²+(x−l)²) − β,
//! ```
//!
//! and the diffusion with drift b(x) = −λ(x−μ) whose invariant density is the
//! quasi-saddlepoint approximation of the NIG law has
//!
//! ```text
//! σ²(x) = 2λ(x−μ)/t̂(x),
//! ```
//!
//! with the removable singularity at the mean filled by σ²(μ) = 2λ·Var.
//! A happy consequence of the NIG form is that the exponent of the
//! quasi-saddlepoint density collapses to
//! x·t̂(x) − κ(t̂(x)) = α√(δ²+(x−l)²) − β(x−l) − δ√(α²−β²),
//! which is what the implementation evaluates (no CGF domain issues).

use std::collections::HashMap;
use std::sync::RwLock;

use crate::bessel;
use crate::diffusion::DiffusionSpec;
use crate::error::{Error, Result};
use crate::quad;

/// Parameters of the NIG distribution. `alpha` controls tail heaviness,
/// `beta` skewness, `delta` scale and `loc` location.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NigParams {
    pub alpha: f64,
    pub beta: f64,
    pub delta: f64,
    pub loc: f64,
}

impl NigParams {
    pub fn new(alpha: f64, beta: f64, delta: f64, loc: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && delta.is_finite() && loc.is_finite()) {
            return Err(Error::invalid("NIG parameters must be finite"));
        }
        if alpha <= beta.abs() {
            return Err(Error::invalid(format!(
                "NIG requires alpha > |beta| (got alpha={alpha}, beta={beta})"
            )));
        }
        if delta <= 0.0 {
            return Err(Error::invalid(format!("NIG requires delta > 0 (got {delta})")));
        }
        Ok(NigParams {
            alpha,
            beta,
            delta,
            loc,
        })
    }

    /// √(α²−β²).
    pub fn gamma(&self) -> f64 {
        ((self.alpha - self.beta) * (self.alpha + self.beta)).sqrt()
    }

    pub fn mean(&self) -> f64 {
        self.loc + self.delta * self.beta / self.gamma()
    }

    pub fn variance(&self) -> f64 {
        let g = self.gamma();
        self.delta * self.alpha * self.alpha / (g * g * g)
    }

    /// Rescale so that the law of c·X has these parameters when X has `self`:
    /// (α/c, β/c, cδ, cl). The quasi-saddlepoint stationary variance scales
    /// by c² under this map, which variance-matching calibrations exploit.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        NigParams::new(self.alpha / c, self.beta / c, self.delta * c, self.loc * c)
    }
}

/// NIG log-density, safe across the whole real line.
pub fn nig_ln_pdf(p: &NigParams, x: f64) -> f64 {
    let u = x - p.loc;
    let r = (p.delta * p.delta + u * u).sqrt();
    let z = p.alpha * r;
    (p.alpha * p.delta).ln() + bessel::ln_k1(z) - std::f64::consts::PI.ln() - r.ln()
        + p.delta * p.gamma()
        + p.beta * u
}

/// NIG density f(x) = αδ K₁(α√(δ²+(x−l)²)) e^{δγ+β(x−l)} / (π√(δ²+(x−l)²)).
pub fn nig_pdf(p: &NigParams, x: f64) -> f64 {
    nig_ln_pdf(p, x).exp()
}

/// Cumulant-generating function κ(t) = lt + δ(γ − √(α²−(β+t)²)),
/// defined for |β+t| < α.
pub fn nig_cgf(p: &NigParams, t: f64) -> Result<f64> {
    let s = p.beta + t;
    if s.abs() >= p.alpha {
        return Err(Error::invalid(format!(
            "CGF domain requires |beta+t| < alpha (got beta+t={s}, alpha={})",
            p.alpha
        )));
    }
    Ok(p.loc * t + p.delta * (p.gamma() - ((p.alpha - s) * (p.alpha + s)).sqrt()))
}

/// Saddlepoint function t̂(x), the unique solution of κ'(t) = x.
pub fn saddlepoint_t(p: &NigParams, x: f64) -> f64 {
    let u = x - p.loc;
    p.alpha * u / (p.delta * p.delta + u * u).sqrt() - p.beta
}

/// κ'(t) = l + δ(β+t)/√(α²−(β+t)²) (for saddlepoint-identity checks).
pub fn nig_cgf_prime(p: &NigParams, t: f64) -> Result<f64> {
    let s = p.beta + t;
    if s.abs() >= p.alpha {
        return Err(Error::invalid("CGF derivative domain requires |beta+t| < alpha"));
    }
    Ok(p.loc + p.delta * s / ((p.alpha - s) * (p.alpha + s)).sqrt())
}

/// Exponent of the quasi-saddlepoint density,
/// g(x) = x t̂(x) − κ(t̂(x)) = αr − βu − δγ with r = √(δ²+u²), u = x−l.
/// g ≥ 0 with equality exactly at the NIG mean.
pub fn qs_exponent(p: &NigParams, x: f64) -> f64 {
    let u = x - p.loc;
    let r = (p.delta * p.delta + u * u).sqrt();
    p.alpha * r - p.beta * u - p.delta * p.gamma()
}

fn that_prime(p: &NigParams, x: f64) -> f64 {
    let u = x - p.loc;
    let r2 = p.delta * p.delta + u * u;
    p.alpha * p.delta * p.delta / (r2 * r2.sqrt())
}

fn that_second(p: &NigParams, x: f64) -> f64 {
    let u = x - p.loc;
    let r2 = p.delta * p.delta + u * u;
    -3.0 * p.alpha * p.delta * p.delta * u / (r2 * r2 * r2.sqrt())
}

/// σ²(x) of the quasi-saddlepoint diffusion with rate λ.
pub fn qs_sigma2(p: &NigParams, lambda: f64, x: f64) -> f64 {
    let mu = p.mean();
    if (x - mu).abs() < 1e-8 * (1.0 + mu.abs()) {
        2.0 * lambda * p.variance()
    } else {
        2.0 * lambda * (x - mu) / saddlepoint_t(p, x)
    }
}

/// d(σ²)/dx, analytic, with the removable singularity at μ handled by the
/// Taylor limit −λ t̂''(μ)/t̂'(μ)². The window is wider than for σ² itself
/// because the exact expression loses precision quadratically near μ.
pub fn qs_dsigma2(p: &NigParams, lambda: f64, x: f64) -> f64 {
    let mu = p.mean();
    if (x - mu).abs() < 1e-6 * (1.0 + mu.abs()) {
        let tp = that_prime(p, mu);
        -lambda * that_second(p, mu) / (tp * tp)
    } else {
        let t = saddlepoint_t(p, x);
        2.0 * lambda * (t - (x - mu) * that_prime(p, x)) / (t * t)
    }
}

/// Drift/diffusion pair (−λ(x−μ), σ²) for the quasi-saddlepoint diffusion.
pub fn quasi_saddlepoint_spec(p: &NigParams, lambda: f64) -> Result<DiffusionSpec> {
    if lambda <= 0.0 {
        return Err(Error::invalid("rate lambda must be > 0"));
    }
    Ok(DiffusionSpec::quasi_saddlepoint(*p, lambda))
}

/// λ-free core of the quasi-saddlepoint density:
/// core(x) = e^{−g(x)} t̂(x)/(2(x−μ)), with core(μ) = e^0/(2·Var).
/// The normalized density is core/∫core; the rate λ cancels.
pub fn qs_core(p: &NigParams, x: f64) -> f64 {
    let mu = p.mean();
    let e = (-qs_exponent(p, x)).exp();
    if (x - mu).abs() < 1e-8 * (1.0 + mu.abs()) {
        e / (2.0 * p.variance())
    } else {
        e * saddlepoint_t(p, x) / (2.0 * (x - mu))
    }
}

fn cache_key(p: &NigParams) -> [u64; 4] {
    [
        p.alpha.to_bits(),
        p.beta.to_bits(),
        p.delta.to_bits(),
        p.loc.to_bits(),
    ]
}

static NORM_CACHE: RwLock<Option<HashMap<[u64; 4], f64>>> = RwLock::new(None);

/// ∫ core over ℝ, memoized per parameter set (λ cancels, so the key is θ
/// alone). The integrand has exponential tails of rates α+β (left) and α−β
/// (right); expanding geometric windows with a tail bound handle parameter
/// sets whose tail scale 1/(α∓β) vastly exceeds the core width √Var.
pub fn qs_norm_integral(p: &NigParams) -> Result<f64> {
    let key = cache_key(p);
    if let Some(map) = NORM_CACHE.read().unwrap().as_ref() {
        if let Some(&v) = map.get(&key) {
            return Ok(v);
        }
    }
    let width = p.variance().sqrt().max(p.delta);
    let v = quad::integrate_peaked(|x| qs_core(p, x), p.mean(), width, 1e-11)?;
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::numerical(format!(
            "quasi-saddlepoint normalization failed (integral = {v})"
        )));
    }
    let mut guard = NORM_CACHE.write().unwrap();
    guard.get_or_insert_with(HashMap::new).insert(key, v);
    Ok(v)
}

/// Normalized quasi-saddlepoint stationary density. Independent of λ.
#[derive(Debug, Clone)]
pub struct QuasiSaddlepoint {
    pub params: NigParams,
    norm_inv: f64,
}

impl QuasiSaddlepoint {
    pub fn new(params: NigParams) -> Result<Self> {
        let norm = qs_norm_integral(&params)?;
        Ok(QuasiSaddlepoint {
            params,
            norm_inv: 1.0 / norm,
        })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.norm_inv * qs_core(&self.params, x)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let p = &self.params;
        let mu = p.mean();
        let pre = if (x - mu).abs() < 1e-8 * (1.0 + mu.abs()) {
            (2.0 * p.variance()).recip().ln()
        } else {
            (saddlepoint_t(p, x) / (2.0 * (x - mu))).ln()
        };
        self.norm_inv.ln() + pre - qs_exponent(p, x)
    }
}

/// One-off evaluation of the quasi-saddlepoint density (normalizing constant
/// cached across calls). `lambda` is accepted for interface symmetry with the
/// diffusion constructor but cancels out of the normalized density.
pub fn quasi_saddlepoint_pdf(p: &NigParams, _lambda: f64, x: f64) -> Result<f64> {
    Ok(qs_core(p, x) / qs_norm_integral(p)?)
}
