//! Threshold, sustainable-threshold and below-threshold scaling fits.
//!
//! Every fit separates its linear parameters, solved exactly, from the one or
//! two nonlinear ones, which a deterministic Nelder-Mead search handles from
//! the best point of a coarse grid. Standard errors come from a seeded
//! residual bootstrap.

use crate::montecarlo::Record;
use crate::product_code::SCHEMA_VERSION;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_MIN_FAILURES: u64 = 25;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("underdetermined fit: {0}")]
    Underdetermined(String),
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub value: f64,
    /// `None` when the bootstrap was skipped or the parameter is
    /// unconstrained by the data.
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub schema_version: u32,
    pub kind: String,
    pub parameters: Vec<Param>,
    pub rss: f64,
    pub converged: bool,
    pub points: usize,
    /// Intermediate quantities, such as per-size slopes of the scaling fit.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub auxiliary: Vec<Param>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value)
    }

    pub fn stderr(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).and_then(|p| p.stderr)
    }
}

/// Result of a Nelder-Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Nelder-Mead with the standard coefficients (1, 2, 1/2, 1/2). Stops when
/// both the spread of simplex values and its diameter fall below `tol`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], steps: &[f64], tol: f64, max_iter: usize) -> Minimum {
    let dim = x0.len();
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
        values = idx.iter().map(|&i| values[i]).collect();
        let spread = (values[dim] - values[0]).abs();
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= tol * (1.0 + values[0].abs()) && diameter <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let centroid: Vec<f64> =
            (0..dim).map(|j| simplex[..dim].iter().map(|v| v[j]).sum::<f64>() / dim as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..dim).map(|j| centroid[j] + t * (simplex[dim][j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(-2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[dim] = xe;
                values[dim] = fe;
            } else {
                simplex[dim] = xr;
                values[dim] = fr;
            }
        } else if fr < values[dim - 1] {
            simplex[dim] = xr;
            values[dim] = fr;
        } else {
            let (xc, fc) = if fr < values[dim] {
                let x = along(-0.5);
                let v = f(&x);
                (x, v)
            } else {
                let x = along(0.5);
                let v = f(&x);
                (x, v)
            };
            if fc < values[dim].min(fr) {
                simplex[dim] = xc;
                values[dim] = fc;
            } else {
                for i in 1..=dim {
                    let shrunk: Vec<f64> = (0..dim).map(|j| simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j])).collect();
                    values[i] = f(&shrunk);
                    simplex[i] = shrunk;
                }
            }
        }
    }
    let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("nonempty simplex");
    Minimum { x: simplex[best].clone(), value: values[best], converged, iterations }
}

/// Weighted least squares on the columns of `design`; `None` if singular.
fn linear_lsq(design: &[Vec<f64>], y: &[f64], w: &[f64]) -> Option<Vec<f64>> {
    let k = design.first()?.len();
    let mut a = vec![vec![0.0; k + 1]; k];
    for ((row, &yi), &wi) in design.iter().zip(y).zip(w) {
        for i in 0..k {
            for j in 0..k {
                a[i][j] += wi * row[i] * row[j];
            }
            a[i][k] += wi * row[i] * yi;
        }
    }
    for col in 0..k {
        let piv = (col..k).max_by(|&r, &s| a[r][col].abs().total_cmp(&a[s][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..k {
            if r != col {
                let factor = a[r][col] / a[col][col];
                for c in col..=k {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
}

fn rss(pred: &[f64], y: &[f64], w: &[f64]) -> f64 {
    pred.iter().zip(y).zip(w).map(|((p, y), w)| w * (p - y) * (p - y)).sum()
}

fn std_dev(xs: &[f64]) -> Option<f64> {
    let xs: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    if xs.len() < 2 {
        return None;
    }
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    Some((xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (xs.len() - 1) as f64).sqrt())
}

/// Refits on `fitted + resampled residuals` and returns per-parameter
/// standard deviations. Resample `b` draws from its own stream, so the
/// result does not depend on scheduling.
fn bootstrap(
    fitted: &[f64],
    residuals: &[f64],
    resamples: usize,
    seed: u64,
    refit: impl Fn(&[f64]) -> Option<Vec<f64>> + Sync,
) -> Vec<Option<f64>> {
    if resamples < 2 {
        return Vec::new();
    }
    let draws: Vec<Option<Vec<f64>>> = (0..resamples)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let y: Vec<f64> =
                fitted.iter().map(|f| f + residuals[rng.random_range(0..residuals.len())]).collect();
            refit(&y)
        })
        .collect();
    let ok: Vec<&Vec<f64>> = draws.iter().flatten().collect();
    let dims = ok.first().map_or(0, |v| v.len());
    (0..dims).map(|j| std_dev(&ok.iter().map(|v| v[j]).collect::<Vec<_>>())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    /// Weight points by `1/ci95²` instead of uniformly.
    pub ci_weighted: bool,
    pub bootstrap: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { ci_weighted: false, bootstrap: DEFAULT_BOOTSTRAP, seed: 0, tol: 1e-13, max_iter: 5000 }
    }
}

/// One `(L, p, p_fail)` observation of a threshold fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint {
    pub l: usize,
    pub p: f64,
    pub p_fail: f64,
    pub ci95: f64,
}

impl From<&Record> for ThresholdPoint {
    fn from(r: &Record) -> Self {
        Self { l: r.l, p: r.p, p_fail: r.p_fail, ci95: r.ci95 }
    }
}

fn weights(ci: &[f64], weighted: bool) -> Vec<f64> {
    if !weighted {
        return vec![1.0; ci.len()];
    }
    // a zero-width interval gets the tightest nonzero width in the set
    let floor = ci.iter().copied().filter(|c| *c > 0.0).fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1.0 };
    ci.iter().map(|&c| 1.0 / c.max(floor).powi(2)).collect()
}

struct ThresholdProblem<'a> {
    pts: &'a [ThresholdPoint],
    w: Vec<f64>,
}

impl ThresholdProblem<'_> {
    fn design(&self, pth: f64, mu: f64) -> Vec<Vec<f64>> {
        self.pts
            .iter()
            .map(|pt| {
                let x = (pt.p - pth) * (pt.l as f64).powf(1.0 / mu);
                vec![1.0, x, x * x]
            })
            .collect()
    }

    /// `(a, rss)` at fixed `(p_th, μ)`.
    fn inner(&self, y: &[f64], pth: f64, mu: f64) -> Option<(Vec<f64>, f64)> {
        if !(mu > 0.05) {
            return None;
        }
        let d = self.design(pth, mu);
        let a = linear_lsq(&d, y, &self.w)?;
        let pred: Vec<f64> = d.iter().map(|r| r[0] * a[0] + r[1] * a[1] + r[2] * a[2]).collect();
        Some((a, rss(&pred, y, &self.w)))
    }

    fn objective(&self, y: &[f64]) -> impl Fn(&[f64]) -> f64 + '_ {
        let y = y.to_vec();
        move |v: &[f64]| self.inner(&y, v[0], v[1]).map_or(f64::INFINITY, |(_, r)| r)
    }

    fn minimise(&self, y: &[f64], start: [f64; 2], steps: [f64; 2], cfg: &FitConfig) -> Minimum {
        let first = nelder_mead(self.objective(y), &start, &steps, cfg.tol, cfg.max_iter);
        // restart once from the optimum to shake off a collapsed simplex
        let mut second = nelder_mead(self.objective(y), &first.x, &[steps[0] / 10.0, steps[1] / 10.0], cfg.tol, cfg.max_iter);
        second.iterations += first.iterations;
        if second.value <= first.value {
            second
        } else {
            first
        }
    }
}

/// Fits `p_fail ≈ a0 + a1 x + a2 x²` with `x = (p − p_th) L^{1/μ}`.
pub fn fit_threshold(points: &[ThresholdPoint], cfg: &FitConfig) -> Result<FitResult, FitError> {
    let mut sizes: Vec<usize> = points.iter().map(|p| p.l).collect();
    sizes.sort_unstable();
    sizes.dedup();
    let mut ps: Vec<u64> = points.iter().map(|p| p.p.to_bits()).collect();
    ps.sort_unstable();
    ps.dedup();
    if sizes.len() < 3 {
        return Err(FitError::Underdetermined(format!("need at least 3 sizes, found {}", sizes.len())));
    }
    if ps.len() < 3 {
        return Err(FitError::Underdetermined(format!("need at least 3 error rates, found {}", ps.len())));
    }
    let ci: Vec<f64> = points.iter().map(|p| p.ci95).collect();
    let prob = ThresholdProblem { pts: points, w: weights(&ci, cfg.ci_weighted) };
    let y: Vec<f64> = points.iter().map(|p| p.p_fail).collect();
    let p_lo = points.iter().map(|p| p.p).fold(f64::INFINITY, f64::min);
    let p_hi = points.iter().map(|p| p.p).fold(f64::NEG_INFINITY, f64::max);
    let span = p_hi - p_lo;

    // coarse grid for the starting point
    let mut start = [0.5 * (p_lo + p_hi), 1.0];
    let mut best = f64::INFINITY;
    let obj = prob.objective(&y);
    for i in 0..=40 {
        let pth = p_lo + span * i as f64 / 40.0;
        for j in 0..=30 {
            let mu = 0.5 + 1.5 * j as f64 / 30.0;
            let v = obj(&[pth, mu]);
            if v < best {
                best = v;
                start = [pth, mu];
            }
        }
    }
    let steps = [span / 20.0, 0.1];
    let min = prob.minimise(&y, start, steps, cfg);
    let (pth, mu) = (min.x[0], min.x[1]);
    let (a, r) = prob.inner(&y, pth, mu).ok_or_else(|| FitError::Underdetermined("singular design".into()))?;

    let d = prob.design(pth, mu);
    let fitted: Vec<f64> = d.iter().map(|row| row[0] * a[0] + row[1] * a[1] + row[2] * a[2]).collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let se = bootstrap(&fitted, &residuals, cfg.bootstrap, cfg.seed, |yb| {
        let m = prob.minimise(yb, [pth, mu], steps, &FitConfig { tol: 1e-10, max_iter: 800, ..*cfg });
        let (ab, _) = prob.inner(yb, m.x[0], m.x[1])?;
        Some(vec![m.x[0], m.x[1], ab[0], ab[1], ab[2]])
    });
    let names = ["p_th", "mu", "a0", "a1", "a2"];
    let values = [pth, mu, a[0], a[1], a[2]];
    let mut diagnostics = Vec::new();
    if !min.converged {
        diagnostics.push(format!("simplex search stopped after {} iterations", min.iterations));
    }
    if pth < p_lo || pth > p_hi {
        diagnostics.push(format!("p_th = {pth} lies outside the sampled range [{p_lo}, {p_hi}]"));
    }
    Ok(FitResult {
        schema_version: SCHEMA_VERSION,
        kind: "threshold".into(),
        parameters: names
            .iter()
            .zip(values)
            .enumerate()
            .map(|(i, (n, v))| Param { name: n.to_string(), value: v, stderr: se.get(i).copied().flatten() })
            .collect(),
        rss: r,
        converged: min.converged,
        points: points.len(),
        auxiliary: Vec::new(),
        diagnostics,
    })
}

/// Threshold fits per cycle count, keyed by `N`.
pub fn fit_threshold_by_cycles(records: &[Record], cfg: &FitConfig) -> BTreeMap<usize, Result<FitResult, FitError>> {
    let mut groups: BTreeMap<usize, Vec<ThresholdPoint>> = BTreeMap::new();
    for r in records {
        groups.entry(r.n).or_default().push(r.into());
    }
    groups.into_iter().map(|(n, pts)| (n, fit_threshold(&pts, cfg))).collect()
}

/// `p_th(N) = p_sus [1 − (1 − p_th(0)/p_sus) e^{−γN}]`.
pub fn sustainable_model(n: f64, p0: f64, p_sus: f64, gamma: f64) -> f64 {
    p_sus * (1.0 - (1.0 - p0 / p_sus) * (-gamma * n).exp())
}

/// Fits `(p_sus, γ)` with `p_th(0)` taken from the data. For fixed `γ` the
/// model is linear in `p_sus`, so only `ln γ` is searched.
pub fn fit_sustainable(pth_by_n: &[(usize, f64)], cfg: &FitConfig) -> Result<FitResult, FitError> {
    let mut ns: Vec<usize> = pth_by_n.iter().map(|(n, _)| *n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 3 {
        return Err(FitError::Insufficient(format!("need at least 3 cycle counts, found {}", ns.len())));
    }
    let zero: Vec<f64> = pth_by_n.iter().filter(|(n, _)| *n == 0).map(|(_, p)| *p).collect();
    if zero.is_empty() {
        return Err(FitError::Insufficient("no N = 0 point".into()));
    }
    let p0 = zero.iter().sum::<f64>() / zero.len() as f64;
    let rest: Vec<(f64, f64)> = pth_by_n.iter().filter(|(n, _)| *n > 0).map(|&(n, p)| (n as f64, p)).collect();
    let w = vec![1.0; rest.len()];

    // returns (p_sus, rss) for given ln γ and targets
    let inner = |y: &[f64], lg: f64| -> Option<(f64, f64)> {
        let g = lg.exp();
        let design: Vec<Vec<f64>> = rest.iter().map(|(n, _)| vec![1.0 - (-g * n).exp()]).collect();
        let shifted: Vec<f64> = rest.iter().zip(y).map(|((n, _), y)| y - p0 * (-g * n).exp()).collect();
        let ps = linear_lsq(&design, &shifted, &w)?[0];
        let pred: Vec<f64> = rest.iter().map(|(n, _)| sustainable_model(*n, p0, ps, g)).collect();
        Some((ps, rss(&pred, y, &w)))
    };
    let y: Vec<f64> = rest.iter().map(|(_, p)| *p).collect();
    let search = |y: &[f64], start: f64, c: &FitConfig| {
        let f = |v: &[f64]| inner(y, v[0]).map_or(f64::INFINITY, |(_, r)| r);
        nelder_mead(f, &[start], &[0.25], c.tol, c.max_iter)
    };
    let mut start = 0.0;
    let mut best = f64::INFINITY;
    for i in 0..=60 {
        let lg = -5.0 + 9.0 * i as f64 / 60.0;
        if let Some((_, r)) = inner(&y, lg) {
            if r < best {
                best = r;
                start = lg;
            }
        }
    }
    let min = search(&y, start, cfg);
    let lg = min.x[0];
    let (p_sus, r) = inner(&y, lg).ok_or_else(|| FitError::Underdetermined("singular design".into()))?;
    let gamma = lg.exp();

    // γ is only identified when p_th actually moves with N
    let spread = y.iter().chain(std::iter::once(&p0)).fold(0.0f64, |m, v| m.max((v - p0).abs()));
    let unconstrained = spread <= 1e-12 * p0.abs().max(1e-300);
    let fitted: Vec<f64> = rest.iter().map(|(n, _)| sustainable_model(*n, p0, p_sus, gamma)).collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
    let se = if unconstrained {
        Vec::new()
    } else {
        bootstrap(&fitted, &residuals, cfg.bootstrap, cfg.seed, |yb| {
            let m = search(yb, lg, &FitConfig { tol: 1e-10, max_iter: 800, ..*cfg });
            let (ps, _) = inner(yb, m.x[0])?;
            Some(vec![ps, m.x[0].exp()])
        })
    };
    let mut diagnostics = Vec::new();
    if unconstrained {
        diagnostics.push("p_th(N) is constant; gamma is unconstrained".into());
    }
    if !min.converged {
        diagnostics.push(format!("simplex search stopped after {} iterations", min.iterations));
    }
    Ok(FitResult {
        schema_version: SCHEMA_VERSION,
        kind: "sustainable".into(),
        parameters: vec![
            Param { name: "p_sus".into(), value: p_sus, stderr: se.first().copied().flatten() },
            Param { name: "gamma".into(), value: gamma, stderr: if unconstrained { None } else { se.get(1).copied().flatten() } },
            Param { name: "p_th0".into(), value: p0, stderr: None },
        ],
        rss: r,
        converged: min.converged && !unconstrained,
        points: pth_by_n.len(),
        auxiliary: Vec::new(),
        diagnostics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    /// Drop even sizes (odd-even effects).
    pub odd_only: bool,
    pub min_failures: u64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self { odd_only: false, min_failures: DEFAULT_MIN_FAILURES }
    }
}

/// Slope, intercept and slope standard error of an unweighted line fit.
fn line_fit(x: &[f64], y: &[f64]) -> (f64, f64, Option<f64>) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let se = (x.len() > 2).then(|| {
        let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        (ss / (n - 2.0) / sxx).sqrt()
    });
    (slope, intercept, se)
}

/// Two-stage fit of `p_fail ∝ (p/p_th)^{α L^β}`: per-size slopes `g(L)` of
/// `log p_fail` against `log(p/p_th)`, then `log g = log α + β log L`.
pub fn fit_scaling(records: &[Record], p_th: f64, cfg: &ScalingConfig) -> Result<FitResult, FitError> {
    let mut by_l: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        if r.p < p_th && r.failures >= cfg.min_failures && r.p_fail > 0.0 && (!cfg.odd_only || r.l % 2 == 1) {
            by_l.entry(r.l).or_default().push(((r.p / p_th).ln(), r.p_fail.ln()));
        }
    }
    let mut sizes = Vec::new();
    let mut aux = Vec::new();
    let mut used = 0;
    for (l, pts) in &by_l {
        let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        if xs.len() < 2 {
            continue;
        }
        let (g, _, se) = line_fit(&pts.iter().map(|p| p.0).collect::<Vec<_>>(), &pts.iter().map(|p| p.1).collect::<Vec<_>>());
        if g <= 0.0 {
            continue;
        }
        used += pts.len();
        sizes.push((*l as f64, g));
        aux.push(Param { name: format!("g(L={l})"), value: g, stderr: se });
    }
    if sizes.len() < 2 {
        return Err(FitError::Insufficient(format!(
            "need at least 2 sizes with 2 usable points below threshold, found {}",
            sizes.len()
        )));
    }
    let lx: Vec<f64> = sizes.iter().map(|(l, _)| l.ln()).collect();
    let ly: Vec<f64> = sizes.iter().map(|(_, g)| g.ln()).collect();
    let (beta, log_alpha, beta_se) = line_fit(&lx, &ly);
    let alpha = log_alpha.exp();
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - log_alpha - beta * x).powi(2)).sum();
    let alpha_se = (sizes.len() > 2).then(|| {
        let n = sizes.len() as f64;
        let mx = lx.iter().sum::<f64>() / n;
        let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
        let s2 = rss / (n - 2.0);
        alpha * (s2 * (1.0 / n + mx * mx / sxx)).sqrt()
    });
    Ok(FitResult {
        schema_version: SCHEMA_VERSION,
        kind: "scaling".into(),
        parameters: vec![
            Param { name: "alpha".into(), value: alpha, stderr: alpha_se },
            Param { name: "beta".into(), value: beta, stderr: beta_se },
        ],
        rss,
        converged: true,
        points: used,
        auxiliary: aux,
        diagnostics: Vec::new(),
    })
}
