//! Derivative-free simplex (Nelder–Mead) minimizer with optional restarts.
//!
//! Objectives may return `f64::INFINITY` to encode constraint violations;
//! NaN is treated the same way. Restarts rebuild a smaller simplex around
//! the incumbent best point, which shakes the search loose from premature
//! collapses at negligible cost for the smooth objectives used here.

#[derive(Debug, Clone)]
pub struct NmOptions {
    pub max_evals: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub init_step: f64,
    pub restarts: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_evals: 2000,
            x_tol: 1e-10,
            f_tol: 1e-12,
            init_step: 0.25,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Simplex {
    pts: Vec<Vec<f64>>,
    vals: Vec<f64>,
}

impl Simplex {
    fn around(x0: &[f64], step: f64, eval: &mut dyn FnMut(&[f64]) -> f64) -> Self {
        let n = x0.len();
        let mut pts = Vec::with_capacity(n + 1);
        pts.push(x0.to_vec());
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += step * p[i].abs().max(1.0);
            pts.push(p);
        }
        let vals = pts.iter().map(|p| eval(p)).collect();
        Simplex { pts, vals }
    }

    fn order(&mut self) {
        let mut idx: Vec<usize> = (0..self.vals.len()).collect();
        idx.sort_by(|&a, &b| self.vals[a].partial_cmp(&self.vals[b]).unwrap());
        self.pts = idx.iter().map(|&i| self.pts[i].clone()).collect();
        self.vals = idx.iter().map(|&i| self.vals[i]).collect();
    }

    fn centroid_excluding_worst(&self) -> Vec<f64> {
        let n = self.pts[0].len();
        let mut c = vec![0.0; n];
        for p in &self.pts[..self.pts.len() - 1] {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi;
            }
        }
        for ci in &mut c {
            *ci /= (self.pts.len() - 1) as f64;
        }
        c
    }
}

fn blend(c: &[f64], p: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(p).map(|(&ci, &pi)| ci + t * (pi - ci)).collect()
}

/// Minimize `f` starting from `x0`. Returns the best point found; `converged`
/// reports whether the simplex met the tolerance criteria rather than the
/// evaluation budget.
pub fn nelder_mead(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opt: &NmOptions,
) -> NmResult {
    let n = x0.len();
    assert!(n >= 1, "need at least one parameter");
    let evals = std::cell::Cell::new(0usize);
    let mut eval = |x: &[f64]| -> f64 {
        evals.set(evals.get() + 1);
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut best = x0.to_vec();
    let mut best_f = eval(&best);
    let mut converged = false;

    for round in 0..=opt.restarts {
        let step = opt.init_step / 4f64.powi(round as i32);
        let mut s = Simplex::around(&best, step, &mut eval);
        s.order();
        converged = false;
        while evals.get() < opt.max_evals {
            let worst = n;
            let c = s.centroid_excluding_worst();

            let xr = blend(&c, &s.pts[worst], -1.0);
            let fr = eval(&xr);
            if fr < s.vals[0] {
                let xe = blend(&c, &s.pts[worst], -2.0);
                let fe = eval(&xe);
                if fe < fr {
                    s.pts[worst] = xe;
                    s.vals[worst] = fe;
                } else {
                    s.pts[worst] = xr;
                    s.vals[worst] = fr;
                }
            } else if fr < s.vals[n - 1] {
                s.pts[worst] = xr;
                s.vals[worst] = fr;
            } else {
                // contract toward the better of worst / reflected
                let (xc, fc) = if fr < s.vals[worst] {
                    let x = blend(&c, &s.pts[worst], -0.5);
                    let v = eval(&x);
                    (x, v)
                } else {
                    let x = blend(&c, &s.pts[worst], 0.5);
                    let v = eval(&x);
                    (x, v)
                };
                if fc < s.vals[worst].min(fr) {
                    s.pts[worst] = xc;
                    s.vals[worst] = fc;
                } else {
                    // shrink toward best
                    for i in 1..=n {
                        s.pts[i] = blend(&s.pts[0], &s.pts[i], 0.5);
                        s.vals[i] = eval(&s.pts[i]);
                    }
                }
            }
            s.order();

            let f_spread = s.vals[n] - s.vals[0];
            let x_spread = (0..n)
                .map(|j| {
                    let lo = s.pts.iter().map(|p| p[j]).fold(f64::INFINITY, f64::min);
                    let hi = s.pts.iter().map(|p| p[j]).fold(f64::NEG_INFINITY, f64::max);
                    hi - lo
                })
                .fold(0.0f64, f64::max);
            if f_spread <= opt.f_tol * (s.vals[0].abs() + opt.f_tol) || x_spread <= opt.x_tol {
                converged = true;
                break;
            }
        }
        if s.vals[0] < best_f {
            best = s.pts[0].clone();
            best_f = s.vals[0];
        }
        if evals.get() >= opt.max_evals {
            break;
        }
    }

    NmResult {
        x: best,
        f: best_f,
        evals: evals.get(),
        converged,
    }
}
