//! Modified Bessel function of the second kind, order one.
//!
//! Two regimes joined at x = 2:
//!  - ascending series (small x):
//!      K₁(x) = 1/x + ln(x/2)·I₁(x) − (x/4)·Σ_k [ψ(k+1)+ψ(k+2)] q^k / (k!(k+1)!),
//!    with q = x²/4 and I₁(x) = (x/2)·Σ_k q^k/(k!(k+1)!);
//!  - exponentially scaled integral (large x), from K₁'s sinh representation
//!    after the substitution u = sinh(t/2)·√(2x):
//!      e^x K₁(x) = 4/√(2x) · ∫₀^∞ e^{-u²} u² √(1 + u²/(2x)) du.
//!
//! The quasi-saddlepoint machinery only needs K₁ outside hot loops, so the
//! large-x branch just reuses the adaptive Gauss–Legendre integrator.

use crate::quad;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_CUTOFF: f64 = 2.0;

/// (K₁ via ascending series, valid small x)
fn k1_series(x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0f64; // q^k / (k! (k+1)!)
    let mut psi = 1.0 - 2.0 * EULER_GAMMA; // ψ(k+1) + ψ(k+2) at k = 0
    let mut i1 = term;
    let mut s = psi * term;
    for k in 0..64u32 {
        let kf = f64::from(k);
        term *= q / ((kf + 1.0) * (kf + 2.0));
        psi += 1.0 / (kf + 1.0) + 1.0 / (kf + 2.0);
        i1 += term;
        let ds = psi * term;
        s += ds;
        if ds.abs() <= 1e-17 * s.abs() {
            break;
        }
    }
    i1 *= 0.5 * x;
    1.0 / x + (0.5 * x).ln() * i1 - 0.25 * x * s
}

/// e^x K₁(x) by the scaled integral; the integrand decays like e^{-u²},
/// so truncation at u = 9 is below 1e-33 relative.
fn k1e_integral(x: f64) -> f64 {
    let g = |u: f64| (-u * u).exp() * u * u * (1.0 + u * u / (2.0 * x)).sqrt();
    let v = quad::integrate(g, 0.0, 9.0, 1e-14).expect("k1 kernel integration");
    4.0 / (2.0 * x).sqrt() * v
}

/// K₁(x) for x > 0. Underflows to 0 for x ≳ 710; use [`k1_scaled`] in
/// log-space computations.
pub fn k1(x: f64) -> f64 {
    assert!(x > 0.0, "K1 requires x > 0");
    if x <= SERIES_CUTOFF {
        k1_series(x)
    } else {
        k1e_integral(x) * (-x).exp()
    }
}

/// e^x·K₁(x), safe against underflow for large x.
pub fn k1_scaled(x: f64) -> f64 {
    assert!(x > 0.0, "K1 requires x > 0");
    if x <= SERIES_CUTOFF {
        k1_series(x) * x.exp()
    } else {
        k1e_integral(x)
    }
}

/// ln K₁(x), evaluated without under/overflow across the whole range.
pub fn ln_k1(x: f64) -> f64 {
    k1_scaled(x).ln() - x
}
