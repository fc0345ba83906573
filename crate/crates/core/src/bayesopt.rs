//! Bayesian optimization with a Gaussian-process surrogate, plus random and
//! grid search baselines. Everything maximizes.
//!
//! The optimizer works in the unit cube; [`BoConfig::bounds`] maps it to the
//! raw decision variables handed to the objective.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::rng::{stream, tags};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoError {
    #[error("Matérn smoothness {0} has no closed form here (use 0.5, 1.5 or 2.5)")]
    UnsupportedSmoothness(f64),
    #[error("kernel matrix is not positive definite even with jitter")]
    SingularKernel,
    #[error("points have different dimensions")]
    DimensionMismatch,
    #[error("no observations")]
    NoObservations,
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Matérn kernel parameters. `smoothness` is ς.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct KernelSpec {
    pub smoothness: f64,
    pub lengthscale: f64,
    pub signal_variance: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self { smoothness: 2.5, lengthscale: 0.2, signal_variance: 1.0 }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), BoError> {
        if ![0.5, 1.5, 2.5].contains(&self.smoothness) {
            return Err(BoError::UnsupportedSmoothness(self.smoothness));
        }
        if !(self.lengthscale > 0.0 && self.signal_variance > 0.0) {
            return Err(BoError::InvalidConfig("lengthscale and signal variance must be positive"));
        }
        Ok(())
    }

    /// Kernel as a function of Euclidean distance.
    fn at(&self, r: f64) -> f64 {
        let s = r / self.lengthscale;
        let shape = if self.smoothness == 0.5 {
            libm::exp(-s)
        } else if self.smoothness == 1.5 {
            let a = libm::sqrt(3.0) * s;
            (1.0 + a) * libm::exp(-a)
        } else {
            let a = libm::sqrt(5.0) * s;
            (1.0 + a + a * a / 3.0) * libm::exp(-a)
        };
        self.signal_variance * shape
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    libm::sqrt(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum())
}

pub fn matern_kernel(x1: &[f64], x2: &[f64], spec: &KernelSpec) -> Result<f64, BoError> {
    spec.validate()?;
    if x1.len() != x2.len() {
        return Err(BoError::DimensionMismatch);
    }
    Ok(spec.at(distance(x1, x2)))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Observation {
    /// Normalized to the unit cube.
    pub x: Vec<f64>,
    pub y: f64,
}

/// Lower Cholesky factor of a row-major `n×n` matrix.
fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = libm::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `L z = b`.
fn forward(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = alloc::vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * n + i];
    }
    z
}

/// Solves `Lᵀ z = b`.
fn backward(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut z = alloc::vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * z[k]).sum();
        z[i] = (b[i] - s) / l[i * n + i];
    }
    z
}

const MAX_JITTER: f64 = 1e-4;

/// A fitted posterior. Targets are standardized before fitting and
/// predictions are mapped back.
#[derive(Debug, Clone, PartialEq)]
pub struct GpModel {
    xs: Vec<Vec<f64>>,
    spec: KernelSpec,
    noise: f64,
    /// Extra diagonal that was needed for the factorization.
    pub jitter: f64,
    y_mean: f64,
    y_scale: f64,
    chol: Vec<f64>,
    alpha: Vec<f64>,
    log_likelihood: f64,
}

pub fn gp_fit(observations: &[Observation], spec: &KernelSpec, noise: f64) -> Result<GpModel, BoError> {
    spec.validate()?;
    let n = observations.len();
    if n == 0 {
        return Err(BoError::NoObservations);
    }
    let dim = observations[0].x.len();
    if observations.iter().any(|o| o.x.len() != dim) {
        return Err(BoError::DimensionMismatch);
    }
    if !(noise >= 0.0) || observations.iter().any(|o| !o.y.is_finite()) {
        return Err(BoError::InvalidConfig("noise must be >= 0 and targets finite"));
    }
    let y_mean = observations.iter().map(|o| o.y).sum::<f64>() / n as f64;
    let var = observations.iter().map(|o| (o.y - y_mean) * (o.y - y_mean)).sum::<f64>() / n as f64;
    let y_scale = if var > 0.0 { libm::sqrt(var) } else { 1.0 };
    let ys: Vec<f64> = observations.iter().map(|o| (o.y - y_mean) / y_scale).collect();

    let mut k = alloc::vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = spec.at(distance(&observations[i].x, &observations[j].x));
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
        k[i * n + i] += noise;
    }
    let mut jitter = 0.0;
    let chol = loop {
        let mut kj = k.clone();
        for i in 0..n {
            kj[i * n + i] += jitter;
        }
        if let Some(l) = cholesky(&kj, n) {
            break l;
        }
        jitter = if jitter == 0.0 { 1e-10 * spec.signal_variance } else { jitter * 10.0 };
        if jitter > MAX_JITTER * spec.signal_variance {
            return Err(BoError::SingularKernel);
        }
    };
    let alpha = backward(&chol, n, &forward(&chol, n, &ys));
    let fit: f64 = ys.iter().zip(&alpha).map(|(y, a)| y * a).sum();
    let log_det: f64 = (0..n).map(|i| libm::log(chol[i * n + i])).sum();
    let log_likelihood = -0.5 * fit - log_det - 0.5 * n as f64 * libm::log(2.0 * PI);
    Ok(GpModel {
        xs: observations.iter().map(|o| o.x.clone()).collect(),
        spec: *spec,
        noise,
        jitter,
        y_mean,
        y_scale,
        chol,
        alpha,
        log_likelihood,
    })
}

/// Candidate lengthscales for [`gp_fit_refit`], in unit-cube coordinates.
pub const LENGTHSCALE_GRID: [f64; 9] = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.7, 1.0];

/// Fits at every lengthscale in [`LENGTHSCALE_GRID`] and keeps the model with
/// the largest log marginal likelihood, earliest on ties.
pub fn gp_fit_refit(observations: &[Observation], spec: &KernelSpec, noise: f64) -> Result<GpModel, BoError> {
    let mut best: Option<GpModel> = None;
    let mut last_err = BoError::SingularKernel;
    for &l in &LENGTHSCALE_GRID {
        match gp_fit(observations, &KernelSpec { lengthscale: l, ..*spec }, noise) {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.log_likelihood > b.log_likelihood) {
                    best = Some(m);
                }
            }
            Err(e @ BoError::SingularKernel) => last_err = e,
            Err(e) => return Err(e),
        }
    }
    best.ok_or(last_err)
}

impl GpModel {
    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Log marginal likelihood of the standardized targets.
    pub fn log_likelihood(&self) -> f64 {
        self.log_likelihood
    }

    pub fn lengthscale(&self) -> f64 {
        self.spec.lengthscale
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// Mean and variance in standardized units.
    fn standardized(&self, x: &[f64]) -> (f64, f64) {
        let n = self.xs.len();
        let ks: Vec<f64> = self.xs.iter().map(|xi| self.spec.at(distance(xi, x))).collect();
        let mean = ks.iter().zip(&self.alpha).map(|(a, b)| a * b).sum();
        let v = forward(&self.chol, n, &ks);
        let var = self.spec.signal_variance - v.iter().map(|x| x * x).sum::<f64>();
        (mean, var.max(0.0))
    }
}

/// Posterior mean and standard deviation of the latent function at `x`.
pub fn gp_predict(model: &GpModel, x: &[f64]) -> (f64, f64) {
    let (m, v) = model.standardized(x);
    (model.y_mean + model.y_scale * m, model.y_scale * libm::sqrt(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AcquisitionKind {
    /// Mean plus a fixed multiple of the standard deviation.
    Ucb,
    /// UCB with the multiple growing with the number of evaluations.
    #[default]
    GpUcb,
    Ei,
    Pi,
}

impl AcquisitionKind {
    pub fn name(self) -> &'static str {
        match self {
            AcquisitionKind::Ucb => "ucb",
            AcquisitionKind::GpUcb => "gp-ucb",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Pi => "pi",
        }
    }
}

fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * PI)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

/// Acquisition value; `incumbent` is the best observed value and `kappa`
/// only matters for the UCB kinds.
pub fn acq_value(kind: AcquisitionKind, mean: f64, stddev: f64, incumbent: f64, kappa: f64) -> f64 {
    match kind {
        AcquisitionKind::Ucb | AcquisitionKind::GpUcb => mean + kappa * stddev,
        AcquisitionKind::Ei => {
            if stddev <= 0.0 {
                return (mean - incumbent).max(0.0);
            }
            let z = (mean - incumbent) / stddev;
            (mean - incumbent) * normal_cdf(z) + stddev * normal_pdf(z)
        }
        AcquisitionKind::Pi => {
            if stddev <= 0.0 {
                return if mean > incumbent { 1.0 } else { 0.0 };
            }
            normal_cdf((mean - incumbent) / stddev)
        }
    }
}

/// `sqrt(2 ln(n^{d/2+2} π² / (3δ)))`.
pub fn gp_ucb_kappa(n: usize, d: usize, delta: f64) -> f64 {
    let log_arg = (d as f64 / 2.0 + 2.0) * libm::log(n.max(1) as f64) + libm::log(PI * PI / (3.0 * delta));
    libm::sqrt(2.0 * log_arg)
}

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let (mut f, mut out) = (inv, 0.0);
    while i > 0 {
        out += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    out
}

/// `count` Halton points in the unit cube, shifted modulo 1 by a random
/// offset drawn from `rng` (one per dimension).
pub fn shifted_halton<R: Rng + ?Sized>(count: usize, dim: usize, rng: &mut R) -> Result<Vec<Vec<f64>>, BoError> {
    if dim > PRIMES.len() {
        return Err(BoError::InvalidConfig("at most 16 dimensions"));
    }
    let shift: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
    Ok((1..=count as u64)
        .map(|i| {
            (0..dim)
                .map(|d| {
                    let v = radical_inverse(i, PRIMES[d] as u64) + shift[d];
                    v - libm::floor(v)
                })
                .collect()
        })
        .collect())
}

/// Settings of the acquisition search.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SearchConfig {
    pub candidates: usize,
    /// Candidates refined by pattern search.
    pub refine_top: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Proposals closer than this to an evaluated point are rejected.
    pub min_separation: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { candidates: 2048, refine_top: 5, initial_step: 0.05, min_step: 1e-4, min_separation: 1e-6 }
    }
}

fn far_enough(x: &[f64], evaluated: &[Vec<f64>], sep: f64) -> bool {
    evaluated.iter().all(|e| distance(e, x) >= sep)
}

/// Maximizes `f` over the unit cube: shifted-Halton candidates, then
/// coordinate pattern search from the best few. Ties go to the earliest
/// candidate. Returns `None` when every candidate is too close to an
/// evaluated point.
pub fn maximize<F, R>(
    f: F,
    dim: usize,
    evaluated: &[Vec<f64>],
    search: &SearchConfig,
    rng: &mut R,
) -> Result<Option<Vec<f64>>, BoError>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let cands = shifted_halton(search.candidates, dim, rng)?;
    let mut scored: Vec<(usize, f64)> = cands
        .iter()
        .enumerate()
        .filter(|(_, c)| far_enough(c, evaluated, search.min_separation))
        .map(|(i, c)| (i, f(c)))
        .collect();
    // Stable sort keeps index order among equal values.
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    let Some(&(first, first_val)) = scored.first() else {
        return Ok(None);
    };
    let mut best = (cands[first].clone(), first_val);
    for &(i, v) in scored.iter().take(search.refine_top) {
        let mut x = cands[i].clone();
        let mut fx = v;
        let mut step = search.initial_step;
        while step >= search.min_step {
            let mut improved = false;
            for d in 0..dim {
                for sign in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[d] = (y[d] + sign * step).clamp(0.0, 1.0);
                    if y[d] == x[d] || !far_enough(&y, evaluated, search.min_separation) {
                        continue;
                    }
                    let fy = f(&y);
                    if fy > fx {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if fx > best.1 {
            best = (x, fx);
        }
    }
    Ok(Some(best.0))
}

/// Argmax of the acquisition over the unit cube for a fitted model.
pub fn maximize_acquisition<R: Rng + ?Sized>(
    model: &GpModel,
    kind: AcquisitionKind,
    kappa: f64,
    incumbent: f64,
    evaluated: &[Vec<f64>],
    search: &SearchConfig,
    rng: &mut R,
) -> Result<Option<Vec<f64>>, BoError> {
    let dim = model.xs.first().map_or(0, Vec::len);
    maximize(
        |x| {
            let (m, s) = gp_predict(model, x);
            acq_value(kind, m, s, incumbent, kappa)
        },
        dim,
        evaluated,
        search,
        rng,
    )
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct BoConfig {
    /// (lower, upper) of each raw decision variable.
    pub bounds: Vec<(f64, f64)>,
    /// Total objective evaluations.
    pub budget: usize,
    pub n_init: usize,
    pub acquisition: AcquisitionKind,
    /// Fixed multiple for plain UCB.
    pub kappa: f64,
    /// δ of the GP-UCB schedule.
    pub delta: f64,
    pub kernel: KernelSpec,
    /// Pick the lengthscale by marginal likelihood at every step instead of
    /// using `kernel.lengthscale`.
    pub refit_lengthscale: bool,
    pub noise: f64,
    pub search: SearchConfig,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            bounds: Vec::new(),
            budget: 40,
            n_init: 10,
            acquisition: AcquisitionKind::default(),
            kappa: 2.0,
            delta: 0.1,
            kernel: KernelSpec::default(),
            refit_lengthscale: false,
            noise: 1e-4,
            search: SearchConfig::default(),
            seed: 0,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<(), BoError> {
        self.kernel.validate()?;
        validate_bounds(&self.bounds)?;
        if self.budget == 0 || self.n_init == 0 {
            return Err(BoError::InvalidConfig("budget and n_init must be positive"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(BoError::InvalidConfig("delta must be in (0, 1)"));
        }
        if !(self.noise >= 0.0) {
            return Err(BoError::InvalidConfig("noise must be >= 0"));
        }
        Ok(())
    }
}

fn validate_bounds(bounds: &[(f64, f64)]) -> Result<(), BoError> {
    if bounds.is_empty() || bounds.iter().any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(BoError::InvalidConfig("bounds must be finite with lower <= upper"));
    }
    Ok(())
}

pub fn to_raw(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(u, (lo, hi))| lo + u * (hi - lo)).collect()
}

pub fn to_unit(x: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    x.iter().zip(bounds).map(|(v, (lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Source {
    Initial,
    Acquisition,
    Random,
    Grid,
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Evaluation {
    /// 0-based.
    pub index: usize,
    pub x_raw: Vec<f64>,
    pub x_norm: Vec<f64>,
    /// `None` when the objective failed.
    pub y: Option<f64>,
    pub kappa: Option<f64>,
    pub acquisition: Option<f64>,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult<E> {
    pub history: Vec<Evaluation>,
    /// Objective failures by evaluation index.
    pub failures: Vec<(usize, E)>,
}

impl<E> SearchResult<E> {
    fn new() -> Self {
        Self { history: Vec::new(), failures: Vec::new() }
    }

    /// Highest successful evaluation; the earliest among ties.
    pub fn best(&self) -> Option<&Evaluation> {
        let mut best: Option<&Evaluation> = None;
        for e in &self.history {
            if let Some(y) = e.y {
                if best.and_then(|b| b.y).is_none_or(|by| y > by) {
                    best = Some(e);
                }
            }
        }
        best
    }

    /// Best value after each evaluation; `None` until something succeeds.
    pub fn best_so_far(&self) -> Vec<Option<f64>> {
        let mut cur: Option<f64> = None;
        self.history
            .iter()
            .map(|e| {
                if let Some(y) = e.y {
                    cur = Some(cur.map_or(y, |c| c.max(y)));
                }
                cur
            })
            .collect()
    }

    fn record<F: FnMut(&[f64]) -> Result<f64, E>>(
        &mut self,
        objective: &mut F,
        x_norm: Vec<f64>,
        bounds: &[(f64, f64)],
        source: Source,
        kappa: Option<f64>,
        acquisition: Option<f64>,
    ) {
        let index = self.history.len();
        let x_raw = to_raw(&x_norm, bounds);
        let y = match objective(&x_raw) {
            Ok(y) if y.is_finite() => Some(y),
            Ok(_) => None,
            Err(e) => {
                self.failures.push((index, e));
                None
            }
        };
        self.history.push(Evaluation { index, x_raw, x_norm, y, kappa, acquisition, source });
    }
}

/// Sequential Bayesian optimization of `objective` over `cfg.bounds`.
/// Failed evaluations stay in the history but not in the surrogate.
pub fn bo_loop<E, F>(mut objective: F, cfg: &BoConfig) -> Result<SearchResult<E>, BoError>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    cfg.validate()?;
    let dim = cfg.bounds.len();
    let mut out = SearchResult::new();
    let n_init = cfg.n_init.min(cfg.budget);
    let mut init_rng = stream(cfg.seed, tags::BO_INITIAL);
    for x in shifted_halton(n_init, dim, &mut init_rng)? {
        out.record(&mut objective, x, &cfg.bounds, Source::Initial, None, None);
    }
    let mut cand_rng = stream(cfg.seed, tags::BO_CANDIDATES);
    while out.history.len() < cfg.budget {
        let obs: Vec<Observation> =
            out.history.iter().filter_map(|e| e.y.map(|y| Observation { x: e.x_norm.clone(), y })).collect();
        let evaluated: Vec<Vec<f64>> = out.history.iter().map(|e| e.x_norm.clone()).collect();
        let (x, kappa, acq) = if obs.is_empty() {
            // Nothing to model yet; fall back to a fresh quasi-random point.
            let x = shifted_halton(1, dim, &mut cand_rng)?.remove(0);
            (x, None, None)
        } else {
            let model = if cfg.refit_lengthscale {
                gp_fit_refit(&obs, &cfg.kernel, cfg.noise)?
            } else {
                gp_fit(&obs, &cfg.kernel, cfg.noise)?
            };
            let incumbent = obs.iter().map(|o| o.y).fold(f64::NEG_INFINITY, f64::max);
            let kappa = match cfg.acquisition {
                AcquisitionKind::Ucb => cfg.kappa,
                AcquisitionKind::GpUcb => gp_ucb_kappa(out.history.len(), dim, cfg.delta),
                _ => 0.0,
            };
            let Some(x) = maximize_acquisition(&model, cfg.acquisition, kappa, incumbent, &evaluated, &cfg.search, &mut cand_rng)?
            else {
                break;
            };
            let (m, s) = gp_predict(&model, &x);
            let is_ucb = matches!(cfg.acquisition, AcquisitionKind::Ucb | AcquisitionKind::GpUcb);
            (x.clone(), is_ucb.then_some(kappa), Some(acq_value(cfg.acquisition, m, s, incumbent, kappa)))
        };
        out.record(&mut objective, x, &cfg.bounds, Source::Acquisition, kappa, acq);
    }
    Ok(out)
}

/// Uniform i.i.d. sampling of the box.
pub fn random_search<E, F>(mut objective: F, bounds: &[(f64, f64)], budget: usize, seed: u64) -> Result<SearchResult<E>, BoError>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    validate_bounds(bounds)?;
    let mut rng = stream(seed, tags::RANDOM_SEARCH);
    let mut out = SearchResult::new();
    for _ in 0..budget {
        let x: Vec<f64> = bounds.iter().map(|_| rng.gen::<f64>()).collect();
        out.record(&mut objective, x, bounds, Source::Random, None, None);
    }
    Ok(out)
}

/// Evaluates every combination of the per-dimension values, last dimension
/// varying fastest.
pub fn grid_search<E, F>(mut objective: F, axes: &[Vec<f64>]) -> Result<SearchResult<E>, BoError>
where
    F: FnMut(&[f64]) -> Result<f64, E>,
{
    if axes.is_empty() || axes.iter().any(Vec::is_empty) {
        return Err(BoError::InvalidConfig("every grid axis needs at least one value"));
    }
    let bounds: Vec<(f64, f64)> = axes
        .iter()
        .map(|a| (a.iter().copied().fold(f64::INFINITY, f64::min), a.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
        .collect();
    let mut out = SearchResult::new();
    let mut idx = alloc::vec![0usize; axes.len()];
    loop {
        let raw: Vec<f64> = idx.iter().zip(axes).map(|(&i, a)| a[i]).collect();
        out.record(&mut objective, to_unit(&raw, &bounds), &bounds, Source::Grid, None, None);
        // The round trip through the unit cube can move the last bits.
        out.history.last_mut().expect("just recorded").x_raw = raw;
        let mut d = axes.len();
        loop {
            if d == 0 {
                return Ok(out);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
        }
    }
}
