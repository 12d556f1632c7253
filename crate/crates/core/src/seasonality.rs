//! Deterministic seasonality of log spot prices: linear trend plus
//! harmonics of the trading year,
//!
//! ```text
//! log g(t_d) = a + b·t_d + Σ_{k=1..m} c_k cos(2π t_d/l_k) + d_k sin(2π t_d/l_k),
//! ```
//!
//! with t_d the trading-day index and period l_k = ⌊days_per_year/k⌋ days.
//! Fitting is ordinary least squares on the log prices followed by a
//! two-sided t-test prune: coefficients not significant at the requested
//! level are zeroed exactly and the model is refit once on the survivors.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::marketdata::SpotSeries;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub k: usize,
    pub c: f64,
    pub d: f64,
}

/// Fitted seasonal function; `b` is the trend per trading day.
/// Dropped coefficients are stored as exact zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SeasonalFn {
    pub a: f64,
    pub b: f64,
    pub harmonics: Vec<Harmonic>,
    pub days_per_year: u32,
}

impl SeasonalFn {
    /// The flat model g ≡ 1 (all coefficients zero).
    pub fn flat(days_per_year: u32) -> Self {
        SeasonalFn {
            a: 0.0,
            b: 0.0,
            harmonics: Vec::new(),
            days_per_year,
        }
    }

    /// Period of harmonic k in trading days: ⌊days_per_year/k⌋.
    pub fn period(days_per_year: u32, k: usize) -> f64 {
        (days_per_year as usize / k) as f64
    }

    pub fn m(&self) -> usize {
        self.harmonics.len()
    }

    pub fn log_eval(&self, t_d: f64) -> f64 {
        let mut v = self.a + self.b * t_d;
        for h in &self.harmonics {
            let w = 2.0 * std::f64::consts::PI * t_d / Self::period(self.days_per_year, h.k);
            v += h.c * w.cos() + h.d * w.sin();
        }
        v
    }

    pub fn eval(&self, t_d: f64) -> f64 {
        self.log_eval(t_d).exp()
    }
}

/// Per-regressor diagnostics from the initial (unpruned) fit.
#[derive(Debug, Clone)]
pub struct CoefStat {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub retained: bool,
}

#[derive(Debug, Clone)]
pub struct SeasonalFit {
    pub seasonal: SeasonalFn,
    pub coefficients: Vec<CoefStat>,
    pub rss_full: f64,
    pub rss_pruned: f64,
}

fn regressor(j: usize, t_d: f64, days_per_year: u32) -> f64 {
    match j {
        0 => 1.0,
        1 => t_d,
        _ => {
            let k = (j - 2) / 2 + 1;
            let w = 2.0 * std::f64::consts::PI * t_d / SeasonalFn::period(days_per_year, k);
            if (j - 2) % 2 == 0 {
                w.cos()
            } else {
                w.sin()
            }
        }
    }
}

fn coef_name(j: usize) -> String {
    match j {
        0 => "a".into(),
        1 => "b".into(),
        _ => {
            let k = (j - 2) / 2 + 1;
            if (j - 2) % 2 == 0 {
                format!("c{k}")
            } else {
                format!("d{k}")
            }
        }
    }
}

struct Ols {
    beta: Vec<f64>,
    se: Vec<f64>,
    rss: f64,
    dof: f64,
}

/// OLS of y on the regressor columns `js` (indices into the full design).
fn ols(y: &[f64], js: &[usize], days_per_year: u32) -> Result<Ols> {
    let n = y.len();
    let p = js.len();
    if n <= p {
        return Err(Error::invalid(format!(
            "series too short: {n} observations for {p} regressors"
        )));
    }
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for (t, &yt) in y.iter().enumerate() {
        let t_d = t as f64;
        let row: Vec<f64> = js.iter().map(|&j| regressor(j, t_d, days_per_year)).collect();
        for a in 0..p {
            xty[a] += row[a] * yt;
            for b in a..p {
                xtx[a][b] += row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[a][b] = xtx[b][a];
        }
    }
    let beta = stats::solve_spd(&xtx, &xty)
        .map_err(|_| Error::numerical("rank-deficient design matrix"))?;
    let mut rss = 0.0;
    for (t, &yt) in y.iter().enumerate() {
        let t_d = t as f64;
        let fit: f64 = js
            .iter()
            .zip(&beta)
            .map(|(&j, &bj)| bj * regressor(j, t_d, days_per_year))
            .sum();
        rss += (yt - fit) * (yt - fit);
    }
    let dof = (n - p) as f64;
    let s2 = rss / dof;
    let cinv = stats::invert_spd(&xtx)
        .map_err(|_| Error::numerical("rank-deficient design matrix"))?;
    let se = (0..p).map(|a| (s2 * cinv[a][a]).max(0.0).sqrt()).collect();
    Ok(Ols { beta, se, rss, dof })
}

fn p_value(beta: f64, se: f64, dof: f64) -> f64 {
    if se == 0.0 {
        // degenerate exact fit: a coefficient is "significant" iff nonzero
        return if beta == 0.0 { 1.0 } else { 0.0 };
    }
    let t = StudentsT::new(0.0, 1.0, dof).expect("valid dof");
    2.0 * (1.0 - t.cdf((beta / se).abs()))
}

/// OLS fit of log price on trend + m harmonics, with significance pruning.
pub fn fit_seasonality(series: &SpotSeries, m: usize, significance: f64) -> Result<SeasonalFit> {
    if !(0.0..=1.0).contains(&significance) {
        return Err(Error::invalid(format!(
            "significance must be in [0,1], got {significance}"
        )));
    }
    let dpy = series.days_per_year;
    if m >= dpy as usize {
        return Err(Error::invalid(format!(
            "harmonic count {m} too large for a {dpy}-day year"
        )));
    }
    let y = series.log_prices();
    let p_full = 2 + 2 * m;
    let all: Vec<usize> = (0..p_full).collect();
    let full = ols(&y, &all, dpy)?;

    // An interpolating fit leaves only rounding noise in the residuals and
    // makes t-statistics 0/0; there, a coefficient is significant iff it is
    // numerically nonzero.
    let yscale = y.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let exact_fit = full.rss <= y.len() as f64 * (1e-12 * yscale) * (1e-12 * yscale);
    let beta_scale = full.beta.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let mut coefficients = Vec::with_capacity(p_full);
    let mut keep = Vec::new();
    for j in 0..p_full {
        let pv = if exact_fit {
            if full.beta[j].abs() > 1e-8 * beta_scale {
                0.0
            } else {
                1.0
            }
        } else {
            p_value(full.beta[j], full.se[j], full.dof)
        };
        let retained = pv <= significance;
        if retained {
            keep.push(j);
        }
        coefficients.push(CoefStat {
            name: coef_name(j),
            estimate: full.beta[j],
            std_error: full.se[j],
            p_value: pv,
            retained,
        });
    }

    let (final_beta, rss_pruned) = if keep.len() == p_full {
        (full.beta.clone(), full.rss)
    } else if keep.is_empty() {
        (Vec::new(), y.iter().map(|v| v * v).sum())
    } else {
        let pruned = ols(&y, &keep, dpy)?;
        (pruned.beta, pruned.rss)
    };

    let mut coef = vec![0.0; p_full];
    for (slot, &j) in keep.iter().enumerate() {
        coef[j] = final_beta[slot];
    }
    let harmonics = (1..=m)
        .map(|k| Harmonic {
            k,
            c: coef[2 * k],
            d: coef[2 * k + 1],
        })
        .collect();
    Ok(SeasonalFit {
        seasonal: SeasonalFn {
            a: coef[0],
            b: coef[1],
            harmonics,
            days_per_year: dpy,
        },
        coefficients,
        rss_full: full.rss,
        rss_pruned,
    })
}

/// Y(t_d) = log S(t_d) − log g(t_d).
pub fn deseasonalize(series: &SpotSeries, f: &SeasonalFn) -> Result<Vec<f64>> {
    if f.days_per_year != series.days_per_year {
        return Err(Error::invalid(format!(
            "seasonal function fitted at {} days/year, series has {}",
            f.days_per_year, series.days_per_year
        )));
    }
    Ok(series
        .prices
        .iter()
        .enumerate()
        .map(|(t, p)| p.ln() - f.log_eval(t as f64))
        .collect())
}

/// Inverse of `deseasonalize`: prices exp(Y(t_d)) · g(t_d).
pub fn reseasonalize(y: &[f64], f: &SeasonalFn) -> Vec<f64> {
    y.iter()
        .enumerate()
        .map(|(t, v)| (v + f.log_eval(t as f64)).exp())
        .collect()
}
