//! Explicit Euler discretization of the saddle-point gradient flow of
//! `E_{p,k}`, and the μ-only descent for the first `[p,2]` eigenpair.
//!
//! One step from `(μⁿ, νⁿ)`:
//!
//! ```text
//! L_{μⁿ+δ} f = λ diag(νⁿ+δ) f                       (k-th eigenpair)
//! μⁿ⁺¹ = μⁿ + τ ( (μⁿ)^((p-4)/(p-2)) |∇f|² / (λ² ‖f‖²_{νⁿ}) − μⁿ )
//! νⁿ⁺¹ = νⁿ + τ ( (νⁿ)^((p-4)/(p-2)) |f|²  /  ‖∇f‖²_{μⁿ}    − νⁿ )
//! ```
//!
//! The quadratic-form denominators use the unregularized weights; δ only
//! enters the pencil. For `τ <= 1` each update is a convex combination of
//! the old weight and a nonnegative target, so positive weights stay
//! nonnegative.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{self, EigenReport};
use crate::energy::mass;
use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::linear::{generalized_spectrum, tie_tolerance, Spectrum};
use crate::operators::{check_p, dot, gradient_unchecked, norm2, WeightPair};

/// Initial weights for a flow run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Init {
    Ones,
    /// Independent uniform draws from `[0.5, 1.5)`.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub p: f64,
    /// 1-based spectral index.
    pub k: usize,
    pub tau: f64,
    pub delta: f64,
    /// Convergence threshold on `err = max(err_mu, err_nu)`.
    pub tol: f64,
    pub max_iter: usize,
    pub init: Init,
    /// Keep every `record_every`-th step in the trace (the last step is
    /// always kept).
    pub record_every: usize,
}

impl FlowConfig {
    /// Defaults: `τ = 0.1`, `δ = 1e-8`, `tol = 1e-6`, `max_iter = 20000`,
    /// unit initial weights.
    pub fn new(p: f64, k: usize) -> Self {
        FlowConfig {
            p,
            k,
            tau: 0.1,
            delta: 1e-8,
            tol: 1e-6,
            max_iter: 20_000,
            init: Init::Ones,
            record_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_p(self.p, 2.0, "the flow needs p > 2")?;
        if self.k == 0 {
            return Err(Error::param("k", 0.0, "must be >= 1"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::param("tau", self.tau, "must lie in (0, 1]"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::param("delta", self.delta, "must be positive"));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::param("tol", self.tol, "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", 0.0, "must be >= 1"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", 0.0, "must be >= 1"));
        }
        Ok(())
    }

    fn check_k(&self, graph: &Graph) -> Result<()> {
        if self.k > graph.num_interior() {
            return Err(Error::param(
                "k",
                self.k as f64,
                "exceeds the number of interior nodes",
            ));
        }
        Ok(())
    }

    pub fn initial_weights(&self, graph: &Graph) -> WeightPair {
        match self.init {
            Init::Ones => WeightPair::ones(graph),
            Init::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mu = (0..graph.num_edges())
                    .map(|_| rng.random_range(0.5..1.5))
                    .collect();
                let nu = (0..graph.num_interior())
                    .map(|_| rng.random_range(0.5..1.5))
                    .collect();
                WeightPair::new(mu, nu)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowState {
    pub w: WeightPair,
    pub iter: usize,
    /// `k`-th eigenvalue of the pencil at the previous weights.
    pub lambda: f64,
    pub f: Vec<f64>,
    /// Multiplicity of `lambda` at the default tie tolerance.
    pub multiplicity: usize,
}

impl FlowState {
    pub fn new(w: WeightPair) -> Self {
        FlowState {
            w,
            iter: 0,
            lambda: f64::NAN,
            f: Vec::new(),
            multiplicity: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRecord {
    pub iter: usize,
    pub lambda: f64,
    pub err_mu: f64,
    pub err_nu: f64,
    pub err: f64,
    pub residual: f64,
    /// Whether `λ_k` was simple at this step.
    pub simple: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlowTrace {
    pub records: Vec<StepRecord>,
}

impl FlowTrace {
    /// Sign changes of the successive differences of `err` over the last
    /// `window` recorded steps.
    pub fn oscillations(&self, window: usize) -> usize {
        let start = self.records.len().saturating_sub(window);
        let errs: Vec<f64> = self.records[start..].iter().map(|r| r.err).collect();
        let diffs: Vec<f64> = errs.windows(2).map(|w| w[1] - w[0]).collect();
        diffs
            .windows(2)
            .filter(|d| d[0] * d[1] < 0.0)
            .count()
    }

    pub fn non_simple_steps(&self) -> usize {
        self.records.iter().filter(|r| !r.simple).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceError {
    pub err_mu: f64,
    pub err_nu: f64,
    pub err: f64,
}

/// `‖next − prev‖₂ / (τ ‖prev‖₂)` for both weight vectors, and their max.
pub fn convergence_error(prev: &WeightPair, next: &WeightPair, tau: f64) -> Result<ConvergenceError> {
    check_len("mu", prev.mu.len(), next.mu.len())?;
    check_len("nu", prev.nu.len(), next.nu.len())?;
    if !(tau > 0.0) {
        return Err(Error::param("tau", tau, "must be positive"));
    }
    let rel = |a: &[f64], b: &[f64], what: &'static str| -> Result<f64> {
        if a.is_empty() {
            return Ok(0.0);
        }
        let base = norm2(a);
        if base == 0.0 {
            return Err(Error::ZeroNorm(what));
        }
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
        Ok(norm2(&diff) / (tau * base))
    };
    let err_mu = rel(&prev.mu, &next.mu, "mu")?;
    let err_nu = rel(&prev.nu, &next.nu, "nu")?;
    Ok(ConvergenceError {
        err_mu,
        err_nu,
        err: err_mu.max(err_nu),
    })
}

/// `x^e · r`, switching to logarithms for tiny `x` where `x^e` over- or
/// underflows on its own.
fn scaled_power(x: f64, e: f64, r: f64) -> f64 {
    if r == 0.0 {
        0.0
    } else if e == 0.0 {
        r
    } else if x < 1e-280 {
        (e * x.ln() + r.ln()).exp()
    } else {
        x.powf(e) * r
    }
}

fn relax(current: &mut [f64], targets: &[f64], expo: f64, tau: f64, what: &'static str) -> Result<()> {
    for (i, (x, &r)) in current.iter_mut().zip(targets).enumerate() {
        let next = *x + tau * (scaled_power(*x, expo, r) - *x);
        if !next.is_finite() || next < 0.0 {
            return Err(Error::NonFiniteUpdate { what, index: i });
        }
        *x = next;
    }
    Ok(())
}

/// The Euler update of both weight vectors given the eigenpair `(lambda, f)`
/// of the pencil at `w`. Invariant under any rescaling of `f`.
pub fn euler_update(
    graph: &Graph,
    w: &WeightPair,
    lambda: f64,
    f: &[f64],
    p: f64,
    tau: f64,
) -> Result<WeightPair> {
    let mut next = w.clone();
    update_mu(graph, &mut next.mu, &w.nu, lambda, f, p, tau)?;
    let grad_f = gradient_unchecked(graph, f);
    let energy_norm: f64 = grad_f.iter().zip(&w.mu).map(|(g, m)| m * g * g).sum();
    if energy_norm == 0.0 {
        return Err(Error::ZeroNorm("gradient of the eigenvector in the mu-seminorm"));
    }
    let targets: Vec<f64> = f.iter().map(|x| x * x / energy_norm).collect();
    relax(&mut next.nu, &targets, (p - 4.0) / (p - 2.0), tau, "nu")?;
    Ok(next)
}

fn update_mu(
    graph: &Graph,
    mu: &mut [f64],
    nu: &[f64],
    lambda: f64,
    f: &[f64],
    p: f64,
    tau: f64,
) -> Result<()> {
    check_len("eigenvector", graph.num_interior(), f.len())?;
    let grad_f = gradient_unchecked(graph, f);
    let mass_norm: f64 = f.iter().zip(nu).map(|(x, n)| n * x * x).sum();
    let den = lambda * lambda * mass_norm;
    if den == 0.0 {
        return Err(Error::ZeroNorm("eigenvector in the nu-seminorm"));
    }
    let targets: Vec<f64> = grad_f.iter().map(|g| g * g / den).collect();
    relax(mu, &targets, (p - 4.0) / (p - 2.0), tau, "mu")
}

fn kth_pair(spectrum: &Spectrum, k: usize) -> Result<(f64, Vec<f64>, usize)> {
    let (lambda, f) = spectrum.eigenpair(k)?;
    let multiplicity = spectrum.multiplicity(lambda, tie_tolerance(lambda))?;
    Ok((lambda, f, multiplicity))
}

/// One Euler step: solve the regularized pencil at `state.w`, take its
/// `k`-th eigenpair, and update the weights.
pub fn flow_step(graph: &Graph, state: &FlowState, cfg: &FlowConfig) -> Result<FlowState> {
    let spectrum = generalized_spectrum(graph, &state.w, cfg.delta)?;
    let (lambda, f, multiplicity) = kth_pair(&spectrum, cfg.k)?;
    let w = euler_update(graph, &state.w, lambda, &f, cfg.p, cfg.tau)?;
    Ok(FlowState {
        w,
        iter: state.iter + 1,
        lambda,
        f,
        multiplicity,
    })
}

/// Runs the flow from the configured initial weights.
pub fn run_flow(graph: &Graph, cfg: &FlowConfig) -> Result<(EigenReport, FlowTrace)> {
    cfg.validate()?;
    cfg.check_k(graph)?;
    if graph.boundary().is_empty() {
        log::warn!("graph has an empty boundary; flow guarantees assume B is nonempty");
    }
    if !graph.is_connected() {
        log::warn!("interior of the graph is not connected");
    }
    run_flow_from(graph, cfg, cfg.initial_weights(graph))
}

/// Runs the flow from explicit strictly positive initial weights. Hitting
/// `max_iter` is not an error: the report has `converged = false`.
pub fn run_flow_from(
    graph: &Graph,
    cfg: &FlowConfig,
    initial: WeightPair,
) -> Result<(EigenReport, FlowTrace)> {
    run_flow_observed(graph, cfg, initial, |_| {})
}

/// [`run_flow_from`] that hands every new state to `observe`.
pub fn run_flow_observed(
    graph: &Graph,
    cfg: &FlowConfig,
    initial: WeightPair,
    mut observe: impl FnMut(&FlowState),
) -> Result<(EigenReport, FlowTrace)> {
    cfg.validate()?;
    cfg.check_k(graph)?;
    initial.validate(graph)?;
    if !initial.is_strictly_positive() {
        return Err(Error::param("initial weights", 0.0, "must be strictly positive"));
    }

    let mut state = FlowState::new(initial);
    let mut trace = FlowTrace::default();
    let mut converged = false;
    while state.iter < cfg.max_iter {
        let next = flow_step(graph, &state, cfg)?;
        let errs = convergence_error(&state.w, &next.w, cfg.tau)?;
        let residual =
            analysis::residual(graph, &next.f, next.lambda, cfg.p).unwrap_or(f64::INFINITY);
        converged = errs.err < cfg.tol;
        let last = converged || next.iter == cfg.max_iter;
        if state.iter.is_multiple_of(cfg.record_every) || last {
            trace.records.push(StepRecord {
                iter: next.iter,
                lambda: next.lambda,
                err_mu: errs.err_mu,
                err_nu: errs.err_nu,
                err: errs.err,
                residual,
                simple: next.multiplicity == 1,
            });
        }
        observe(&next);
        state = next;
        if converged {
            break;
        }
    }

    let report = EigenReport::from_weights(graph, cfg, state.w, converged, state.iter, &trace)?;
    Ok((report, trace))
}

/// Result of the μ-only descent for the first `[p,2]` eigenpair.
#[derive(Debug, Clone)]
pub struct P2Solution {
    /// `λ_{[p,2,ν],1} = λ₁(μ*,ν)^(p-1)`.
    pub lambda_p2: f64,
    /// First pencil eigenvalue at `μ*`.
    pub lambda_lin: f64,
    pub f: Vec<f64>,
    pub mu: Vec<f64>,
    /// `1/λ₁(μ*,ν) + M_{E,p}(μ*)` at the final weights.
    pub energy: f64,
    pub converged: bool,
    pub iters: usize,
}

/// Minimizes the convex `L_{1,E}(μ) = 1/λ₁(μ,ν) + M_{E,p}(μ)` with the
/// μ-half of the Euler flow at fixed node weights `nu`. Steps without
/// sufficient decrease of `L_{1,E}` are retried at half the step size, and
/// the step grows back towards `cfg.tau` after each accepted one. `cfg.k`
/// is ignored.
pub fn solve_p2_first(graph: &Graph, nu: &[f64], p: f64, cfg: &FlowConfig) -> Result<P2Solution> {
    let mut cfg = cfg.clone();
    cfg.p = p;
    cfg.k = 1;
    cfg.validate()?;
    cfg.check_k(graph)?;
    check_len("nu", graph.num_interior(), nu.len())?;
    if let Some(index) = nu.iter().position(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::BadWeight {
            what: "nu",
            index,
            value: nu[index],
        });
    }
    let mut w = WeightPair::new(cfg.initial_weights(graph).mu, nu.to_vec());
    let (mut lambda, mut f) = generalized_spectrum(graph, &w, cfg.delta)?.eigenpair(1)?;
    let mut value = 1.0 / lambda + mass(&w.mu, p)?;
    let expo = (p - 4.0) / (p - 2.0);
    let min_tau = cfg.tau * 1e-9;
    let mut tau = cfg.tau;
    let mut last_step: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iters = 0;
    while iters < cfg.max_iter {
        let mut mu = w.mu.clone();
        update_mu(graph, &mut mu, &w.nu, lambda, &f, p, tau)?;
        let trial = WeightPair::new(mu, w.nu.clone());
        let (next_lambda, next_f) = generalized_spectrum(graph, &trial, cfg.delta)?.eigenpair(1)?;
        let next_value = 1.0 / next_lambda + mass(&trial.mu, p)?;
        iters += 1;
        // The step is -τ μ^e ∇L, so the first-order decrease is
        // Σ μ^(-e) Δμ² / τ; the slack absorbs round-off in L.
        let predicted: f64 = w
            .mu
            .iter()
            .zip(&trial.mu)
            .map(|(a, b)| (b - a) * (b - a) * a.powf(-expo))
            .sum::<f64>()
            / tau;
        if next_value > value - 1e-4 * predicted + 1e-14 * value.abs() && tau > min_tau {
            tau /= 2.0;
            continue;
        }
        let err = convergence_error(
            &WeightPair::new(w.mu.clone(), Vec::new()),
            &WeightPair::new(trial.mu.clone(), Vec::new()),
            tau,
        )?
        .err;
        let prev_mu = std::mem::replace(&mut w, trial).mu;
        (lambda, f, value) = (next_lambda, next_f, next_value);
        if err < cfg.tol {
            converged = true;
            break;
        }
        // Near the minimum L is flat to round-off and the Armijo test cannot
        // see a stiff mode bouncing. Consecutive steps pointing in opposite
        // directions expose it.
        let step: Vec<f64> = w.mu.iter().zip(&prev_mu).map(|(a, b)| a - b).collect();
        if !last_step.is_empty() {
            let cos = dot(&step, &last_step) / (norm2(&step) * norm2(&last_step));
            if cos < -0.5 && tau > min_tau {
                tau /= 2.0;
            } else if cos > 0.5 {
                tau = (1.2 * tau).min(cfg.tau);
            }
        }
        last_step = step;
    }
    let spectrum = generalized_spectrum(graph, &w, cfg.delta)?;
    let (lambda_lin, f) = spectrum.eigenpair(1)?;
    if lambda_lin <= 0.0 {
        return Err(Error::NonPositiveEigenvalue {
            k: 1,
            lambda: lambda_lin,
        });
    }
    Ok(P2Solution {
        lambda_p2: lambda_lin.powf(p - 1.0),
        lambda_lin,
        f,
        energy: 1.0 / lambda_lin + mass(&w.mu, p)?,
        mu: w.mu,
        converged,
        iters,
    })
}
