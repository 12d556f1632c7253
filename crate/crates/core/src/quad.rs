//! Numerical quadrature: Gauss–Hermite rules, Gauss–Legendre rules and an
//! adaptive panel integrator for smooth densities on finite or infinite
//! intervals.
//!
//! The Hermite rule integrates against the weight e^{-u²}:
//!   ∫ g(u) e^{-u²} du ≈ Σ_k w_k g(u_k),
//! where u_k are the roots of the (physicists') Hermite polynomial H_n and
//! w_k = 2^{n-1} n! √π / (n² H_{n-1}(u_k)²), evaluated here in the
//! orthonormal basis where it reduces to w_k = 1/(n·h̃_{n-1}(u_k)²).

use crate::error::{Error, Result};

/// A fixed Gauss–Hermite rule. Nodes are sorted ascending; the rule is exact
/// for polynomials of degree ≤ 2n−1 against e^{-u²}.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Orthonormal Hermite functions h̃_0..h̃_n at x (recurrence
/// h̃_{k+1} = x√(2/(k+1)) h̃_k − √(k/(k+1)) h̃_{k-1}), returning
/// (h̃_{n-1}(x), h̃_n(x)).
fn hermite_pair(n: usize, x: f64) -> (f64, f64) {
    let mut prev = 0.0f64;
    let mut cur = std::f64::consts::PI.powf(-0.25);
    for k in 0..n {
        let next = x * (2.0 / (k as f64 + 1.0)).sqrt() * cur
            - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    (prev, cur)
}

impl GaussHermite {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("Hermite rule needs n >= 1"));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        let nf = n as f64;
        let mut prev = 0.0f64;
        for i in 0..m {
            // initial guesses, largest root first (Numerical-Recipes style)
            let mut z = match i {
                0 => {
                    let c = 2.0 * nf + 1.0;
                    c.sqrt() - 1.855_75 * c.powf(-1.0 / 6.0)
                }
                1 => prev - 1.14 * nf.powf(0.426) / prev,
                2 => 1.86 * prev - 0.86 * nodes[n - 1],
                3 => 1.91 * prev - 0.91 * nodes[n - 2],
                _ => 2.0 * prev - nodes[n - i + 1],
            };
            let mut converged = false;
            for _ in 0..100 {
                let (hm1, h) = hermite_pair(n, z);
                let dh = (2.0 * nf).sqrt() * hm1;
                let dz = h / dh;
                z -= dz;
                if dz.abs() <= 1e-15 * (1.0 + z.abs()) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(Error::numerical(format!(
                    "Hermite root {i} of {n} did not converge"
                )));
            }
            prev = z;
            if n % 2 == 1 && i == m - 1 {
                z = 0.0; // middle root of an odd-order rule is exact
            }
            let (hm1, _) = hermite_pair(n, z);
            let w = 1.0 / (nf * hm1 * hm1);
            nodes[n - 1 - i] = z;
            weights[n - 1 - i] = w;
            nodes[i] = -z;
            weights[i] = w;
        }
        Ok(GaussHermite { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// ∫ g(u) e^{-u²} du.
    pub fn integrate(&self, mut g: impl FnMut(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&u, &w)| w * g(u))
            .sum()
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1], ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        loop {
            let mut p0 = 1.0f64;
            let mut p1 = 0.0f64;
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k as f64 + 1.0) * z * p1 - k as f64 * p2) / (k as f64 + 1.0);
            }
            // p0 = P_n(z), p1 = P_{n-1}(z)
            let dp = nf * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() <= 1e-15 {
                let w = 2.0 / ((1.0 - z * z) * dp * dp);
                nodes[i] = -z;
                weights[i] = w;
                nodes[n - 1 - i] = z;
                weights[n - 1 - i] = w;
                break;
            }
        }
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

const PANEL: usize = 15;

thread_local! {
    static GL15: (Vec<f64>, Vec<f64>) = gauss_legendre(PANEL);
}

/// One 15-point Gauss–Legendre panel computing (∫f, ∫g·f) in a single pass
/// over shared nodes. Used by the diffusion builder, whose cumulative
/// integrals need the density and drift·density on the same sub-intervals.
pub(crate) fn gl15_pair(
    f: &impl Fn(f64) -> f64,
    g: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> (f64, f64) {
    GL15.with(|(x, w)| {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut sf = 0.0;
        let mut sgf = 0.0;
        for i in 0..PANEL {
            let xi = c + h * x[i];
            let fv = f(xi);
            sf += w[i] * fv;
            sgf += w[i] * g(xi) * fv;
        }
        (h * sf, h * sgf)
    })
}

fn panel_estimate(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
    GL15.with(|(x, w)| {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for i in 0..PANEL {
            s += w[i] * f(c + h * x[i]);
        }
        s * h
    })
}

fn adaptive(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let mid = 0.5 * (a + b);
    let left = panel_estimate(f, a, mid);
    let right = panel_estimate(f, mid, b);
    let err = (left + right - whole).abs();
    if err <= tol || err <= 1e-15 * whole.abs() {
        return Ok(left + right);
    }
    if depth == 0 || mid <= a || mid >= b {
        return Err(Error::numerical(format!(
            "adaptive quadrature failed to converge on [{a}, {b}] (residual {err:.3e})"
        )));
    }
    let l = adaptive(f, a, mid, left, 0.5 * tol, depth - 1)?;
    let r = adaptive(f, mid, b, right, 0.5 * tol, depth - 1)?;
    Ok(l + r)
}

/// Adaptive Gauss–Legendre integration of `f` over the finite interval
/// [a, b] to relative tolerance `rel_tol` (panels are bisected until the
/// local refinement residual is below the proportional share of the budget).
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("integrate requires finite bounds"));
    }
    if a == b {
        return Ok(0.0);
    }
    let whole = panel_estimate(&mut f, a, b);
    // seed the error budget with a two-panel probe so a misleading single
    // estimate over a peaked integrand cannot cause premature acceptance
    let mid = 0.5 * (a + b);
    let probe = panel_estimate(&mut f, a, mid) + panel_estimate(&mut f, mid, b);
    let scale = probe.abs().max(whole.abs()).max(1e-300);
    let tol = rel_tol * scale;
    adaptive(&mut f, a, b, whole, tol, 48)
}

/// As [`integrate`], but forcing panel boundaries at the given interior
/// breakpoints (kinks, near-singular points, density cores).
pub fn integrate_with_breakpoints(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    rel_tol: f64,
) -> Result<f64> {
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > a && p < b)
        .collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup();
    let mut total = 0.0;
    for w in pts.windows(2) {
        total += integrate(&mut f, w[0], w[1], rel_tol)?;
    }
    Ok(total)
}

/// Integrate a peaked, tail-decaying integrand over the whole line by
/// expanding geometric windows from `center` until both the marginal window
/// contribution and an exponential tail bound drop below `rel_tol` of the
/// accumulated total. `width` sets the initial half-window and should match
/// the scale of the core of the integrand.
pub fn integrate_peaked(
    mut f: impl FnMut(f64) -> f64,
    center: f64,
    width: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::invalid("integrate_peaked requires width > 0"));
    }
    let mut total = integrate(&mut f, center - width, center + width, rel_tol)?;
    for side in [1.0f64, -1.0] {
        let mut inner = width;
        for _ in 0..64 {
            let outer = 2.0 * inner;
            let (lo, hi) = if side > 0.0 {
                (center + inner, center + outer)
            } else {
                (center - outer, center - inner)
            };
            let part = integrate(&mut f, lo, hi, rel_tol)?;
            total += part;
            let edge = if side > 0.0 { hi } else { lo };
            let fe = f(edge).abs();
            let fm = f(edge - side * 0.5 * inner).abs();
            // local decay rate from the outer half-window; bounds the tail
            // remainder by f(edge)/rate when the decay is exponential-or-faster
            let rate = if fe > 0.0 && fm > fe {
                (fm / fe).ln() / (0.5 * inner)
            } else if fe == 0.0 {
                f64::INFINITY
            } else {
                0.0
            };
            let tail_bound = if rate.is_infinite() { 0.0 } else { fe / rate.max(1e-300) };
            let scale = total.abs().max(1e-300);
            if part.abs() < rel_tol * scale && tail_bound < rel_tol * scale {
                break;
            }
            inner = outer;
            if inner > width * 2f64.powi(63) {
                return Err(Error::numerical(
                    "integrate_peaked: tail did not decay within the window budget",
                ));
            }
        }
    }
    Ok(total)
}
