//! Verification of computed eigenpairs: nonlinear residual, linear and Morse
//! indices, finite-difference checks of the derivative formulas, and the
//! node-to-edge duality map.

use crate::energy::{grad_inv_lambda, mass};
use crate::error::{check_len, Error, Result};
use crate::flow::{solve_p2_first, FlowConfig, FlowTrace};
use crate::graph::Graph;
use crate::linear::{generalized_spectrum, tie_tolerance};
use crate::operators::{
    check_p, divergence, dot, gradient, gradient_unchecked, norm2, p_laplacian, rayleigh_p,
    rayleigh_weighted, signed_pow, weights_from, WeightPair,
};

/// Residual above which Morse data is not reported for a flow result.
pub const MORSE_RESIDUAL_TOL: f64 = 1e-4;

/// Residual an input must meet to count as an eigenpair in the
/// finite-difference checks.
pub const EIGENPAIR_TOL: f64 = 1e-6;

/// Window (in recorded steps) for the oscillation diagnostic.
pub const OSCILLATION_WINDOW: usize = 100;

/// Outcome of a flow run.
#[derive(Debug, Clone)]
pub struct EigenReport {
    /// `λ_lin^(p/2)`.
    pub lambda_p: f64,
    /// `k`-th eigenvalue of the regularized pencil at the final weights.
    pub lambda_lin: f64,
    pub f: Vec<f64>,
    pub w: WeightPair,
    pub residual: f64,
    pub linear_index: Option<usize>,
    pub multiplicity: Option<usize>,
    pub morse_r: Option<usize>,
    pub morse_neg_r: Option<usize>,
    /// Whether `λ_lin` is simple in the final flow pencil.
    pub simple: bool,
    pub converged: bool,
    pub iters: usize,
    /// Sign changes of `Δerr` over the last recorded steps.
    pub oscillations: usize,
    pub p: f64,
    pub k: usize,
    pub tau: f64,
    pub delta: f64,
}

impl EigenReport {
    pub(crate) fn from_weights(
        graph: &Graph,
        cfg: &FlowConfig,
        w: WeightPair,
        converged: bool,
        iters: usize,
        trace: &FlowTrace,
    ) -> Result<Self> {
        let spectrum = generalized_spectrum(graph, &w, cfg.delta)?;
        let (lambda_lin, f) = spectrum.eigenpair(cfg.k)?;
        let simple = spectrum.is_simple(cfg.k);
        let residual = residual(graph, &f, lambda_lin, cfg.p).unwrap_or(f64::INFINITY);
        let lambda_p = lambda_lin.powf(cfg.p / 2.0);
        let morse = if residual <= MORSE_RESIDUAL_TOL {
            morse_index(graph, &f, lambda_p, cfg.p, MORSE_RESIDUAL_TOL).ok()
        } else {
            None
        };
        Ok(EigenReport {
            lambda_p,
            lambda_lin,
            f,
            w,
            residual,
            linear_index: morse.map(|m| m.linear_index),
            multiplicity: morse.map(|m| m.multiplicity),
            morse_r: morse.map(|m| m.morse_r),
            morse_neg_r: morse.map(|m| m.morse_neg_r),
            simple,
            converged,
            iters,
            oscillations: trace.oscillations(OSCILLATION_WINDOW),
            p: cfg.p,
            k: cfg.k,
            tau: cfg.tau,
            delta: cfg.delta,
        })
    }
}

/// `‖Δ_p f − λ^(p/2) |f|^(p-2) f‖₂ / ‖λ^(p/2) |f|^(p-2) f‖₂` with
/// `λ = lambda_lin`.
pub fn residual(graph: &Graph, f: &[f64], lambda_lin: f64, p: f64) -> Result<f64> {
    if !(lambda_lin >= 0.0) {
        return Err(Error::param("lambda", lambda_lin, "must be nonnegative"));
    }
    let lap = p_laplacian(graph, f, p)?;
    let lambda_p = lambda_lin.powf(p / 2.0);
    let target: Vec<f64> = f.iter().map(|&x| lambda_p * signed_pow(x, p)).collect();
    let den = norm2(&target);
    if den == 0.0 {
        return Err(Error::ZeroNorm("lambda |f|^(p-2) f"));
    }
    let diff: Vec<f64> = lap.iter().zip(&target).map(|(a, b)| a - b).collect();
    Ok(norm2(&diff) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MorseIndex {
    /// Negative directions of `R_p` at `f`: `k − 1`.
    pub morse_r: usize,
    /// Negative directions of `−R_p` at `f`: `N − k − m + 1`.
    pub morse_neg_r: usize,
    pub linear_index: usize,
    /// Repeats of `λ` in the pencil plus `dim(Ker L_μ ∩ Ker diag ν)`.
    pub multiplicity: usize,
    pub kernel_dim: usize,
}

/// Linear and Morse indices of an eigenpair `(lambda_p, f)`, read off the
/// pencil built from the weights `f` induces.
///
/// With `μ = |∇f|^(p-2)` and `ν = |f|^(p-2)` the pencil eigenvalue equals
/// `lambda_p` itself. The pencil is solved with `δ = 0` when `ν > 0` and
/// `δ = 1e-12` otherwise. The eigenvalue nearest to `lambda_p` is located
/// and ties around it are counted at the default tie tolerance.
pub fn morse_index(graph: &Graph, f: &[f64], lambda_p: f64, p: f64, tol: f64) -> Result<MorseIndex> {
    check_p(p, 2.0, "Morse indices need p > 2")?;
    if !(lambda_p > 0.0) {
        return Err(Error::param("lambda", lambda_p, "must be positive"));
    }
    let res = residual(graph, f, lambda_p.powf(2.0 / p), p)?;
    if !(res <= tol) {
        return Err(Error::NotAnEigenpair { residual: res, tol });
    }
    let w = weights_from(graph, f, p)?;
    let delta = if w.nu.iter().all(|&x| x > 0.0) { 0.0 } else { 1e-12 };
    let spectrum = generalized_spectrum(graph, &w, delta)?;

    let nearest = spectrum
        .eigenvalues
        .iter()
        .copied()
        .min_by(|a, b| (a - lambda_p).abs().total_cmp(&(b - lambda_p).abs()))
        .ok_or(Error::NoEigenvalueNear { lambda: lambda_p, tol })?;
    let locate_tol = (1e3 * tol).max(1e-6) * lambda_p;
    if (nearest - lambda_p).abs() > locate_tol {
        return Err(Error::NoEigenvalueNear {
            lambda: lambda_p,
            tol: locate_tol,
        });
    }
    let tie = tie_tolerance(nearest);
    let k = spectrum.linear_index(nearest, tie)?;
    let m = spectrum.multiplicity(nearest, tie)? + spectrum.kernel_dim;
    let n = graph.num_interior();
    Ok(MorseIndex {
        morse_r: k - 1,
        morse_neg_r: (n + 1).saturating_sub(k + m),
        linear_index: k,
        multiplicity: m,
        kernel_dim: spectrum.kernel_dim,
    })
}

/// Projects `xi` onto the tangent space `{ξ : Σ |f|^(p-2) f ξ = 0}` of the
/// p-sphere at `f`. The flag reports whether `xi` had a normal component
/// above round-off.
pub fn tangent_projection(f: &[f64], p: f64, xi: &[f64]) -> (Vec<f64>, bool) {
    let normal: Vec<f64> = f.iter().map(|&x| signed_pow(x, p)).collect();
    let along = dot(&normal, xi);
    let mut xi = xi.to_vec();
    let projected = along.abs() > 1e-12 * norm2(&normal) * norm2(&xi);
    if projected {
        let c = along / dot(&normal, &normal);
        for (x, n) in xi.iter_mut().zip(&normal) {
            *x -= c * n;
        }
    }
    (xi, projected)
}

/// `max |a − n| / max |a|`, or the absolute gap when `a` vanishes.
fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let gap = analytic
        .iter()
        .zip(numeric)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = analytic.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}

#[derive(Debug, Clone)]
pub struct InvLambdaGradientCheck {
    pub lambda: f64,
    pub max_rel_err_mu: f64,
    pub max_rel_err_nu: f64,
}

impl InvLambdaGradientCheck {
    pub fn max_rel_err(&self) -> f64 {
        self.max_rel_err_mu.max(self.max_rel_err_nu)
    }
}

/// Compares [`grad_inv_lambda`] with central differences of `1/λ_k` in
/// every edge and node weight, stepping by `h (1 + w)`. Relative errors are
/// taken blockwise against the largest analytic entry.
pub fn fd_grad_inv_lambda(
    graph: &Graph,
    w: &WeightPair,
    p: f64,
    k: usize,
    delta: f64,
    h: f64,
) -> Result<InvLambdaGradientCheck> {
    if !(h > 0.0 && h < 0.5) {
        return Err(Error::param("h", h, "must lie in (0, 0.5)"));
    }
    let grad = grad_inv_lambda(graph, w, p, k, delta)?;
    let inv = |w: &WeightPair| -> Result<f64> {
        Ok(1.0 / generalized_spectrum(graph, w, delta)?.eigenpair(k)?.0)
    };
    let lambda = 1.0 / inv(w)?;

    let mut numeric_mu = Vec::with_capacity(w.mu.len());
    for e in 0..w.mu.len() {
        let step = h * (1.0 + w.mu[e]);
        let (mut plus, mut minus) = (w.clone(), w.clone());
        plus.mu[e] += step;
        minus.mu[e] -= step;
        numeric_mu.push((inv(&plus)? - inv(&minus)?) / (2.0 * step));
    }
    let mut numeric_nu = Vec::with_capacity(w.nu.len());
    for u in 0..w.nu.len() {
        let step = h * (1.0 + w.nu[u]);
        let (mut plus, mut minus) = (w.clone(), w.clone());
        plus.nu[u] += step;
        minus.nu[u] -= step;
        numeric_nu.push((inv(&plus)? - inv(&minus)?) / (2.0 * step));
    }
    Ok(InvLambdaGradientCheck {
        lambda,
        max_rel_err_mu: max_rel_err(&grad.d_mu, &numeric_mu),
        max_rel_err_nu: max_rel_err(&grad.d_nu, &numeric_nu),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecondDerivativeCheck {
    /// Second difference of `ε ↦ R_p(f + εξ)`.
    pub lhs: f64,
    /// Second difference of `ε ↦ R_{2,μ,ν}(f + εξ)`.
    pub rhs: f64,
    /// `|lhs − p(p−1)/2 · rhs|` over the magnitude of the quadratic forms
    /// making up either side.
    pub rel_err: f64,
    /// Whether `ξ` had to be projected onto the tangent space.
    pub projected: bool,
}

/// Checks that along tangent directions the second derivative of `R_p` at
/// an eigenfunction is `p(p−1)/2` times that of `R_{2,μ,ν}` with the
/// induced weights, using central second differences with step `h`.
///
/// The error is normalized by
/// `p(p−1) (ξᵀL_μξ + λ ξᵀdiag(ν)ξ) / ‖f‖²_ν`, the size of the two terms
/// whose difference both sides measure, so directions where the second
/// derivative vanishes still get a meaningful relative figure.
pub fn fd_second_derivative_identity(
    graph: &Graph,
    f: &[f64],
    p: f64,
    xi: &[f64],
    h: f64,
) -> Result<SecondDerivativeCheck> {
    check_p(p, 2.0, "the identity needs p > 2")?;
    if !(h > 0.0 && h <= 1e-2) {
        return Err(Error::param("h", h, "must lie in (0, 1e-2]"));
    }
    check_len("direction", graph.num_interior(), xi.len())?;
    let lambda = rayleigh_p(graph, f, p)?;
    let res = residual(graph, f, lambda.powf(2.0 / p), p)?;
    if res > EIGENPAIR_TOL {
        return Err(Error::NotAnEigenpair {
            residual: res,
            tol: EIGENPAIR_TOL,
        });
    }

    let (xi, projected) = tangent_projection(f, p, xi);
    if projected {
        log::warn!("direction is not tangent to the p-sphere at f; projecting");
    }
    if norm2(&xi) <= 1e-12 * norm2(f) {
        return Err(Error::ZeroNorm("projected direction"));
    }

    let w = weights_from(graph, f, p)?;
    let shifted = |eps: f64| -> Vec<f64> { f.iter().zip(&xi).map(|(a, b)| a + eps * b).collect() };
    let second = |q: &dyn Fn(&[f64]) -> Result<f64>| -> Result<f64> {
        Ok((q(&shifted(h))? + q(&shifted(-h))? - 2.0 * q(f)?) / (h * h))
    };
    let lhs = second(&|g| rayleigh_p(graph, g, p))?;
    let rhs = second(&|g| rayleigh_weighted(graph, g, &w))?;

    let factor = p * (p - 1.0) / 2.0;
    let grad_xi = gradient_unchecked(graph, &xi);
    let stiffness: f64 = grad_xi.iter().zip(&w.mu).map(|(g, m)| m * g * g).sum();
    let massive: f64 = xi.iter().zip(&w.nu).map(|(x, n)| n * x * x).sum();
    let f_mass: f64 = f.iter().zip(&w.nu).map(|(x, n)| n * x * x).sum();
    let scale = 2.0 * factor * (stiffness + lambda * massive) / f_mass;
    let diff = (lhs - factor * rhs).abs();
    let rel_err = diff / lhs.abs().max((factor * rhs).abs()).max(scale);
    Ok(SecondDerivativeCheck {
        lhs,
        rhs,
        rel_err,
        projected,
    })
}

#[derive(Debug, Clone)]
pub struct P2GradientCheck {
    pub lambda_p2: f64,
    /// `−(p/2) λ |f|² / ‖f‖²_{2,ν}` per node.
    pub analytic: Vec<f64>,
    /// Central differences of `ν ↦ λ_{[p,2,ν],1}` per node.
    pub numeric: Vec<f64>,
    /// `max |analytic − numeric| / max |analytic|`.
    pub max_rel_err: f64,
}

/// Flow settings for the inner `[p,2]` solves of the derivative check.
///
/// The step is `0.8 (p−2)/(2p−2)`: on a single edge the μ-update linearizes
/// to the multiplier `1 − τ (2p−2)/(p−2)`, so this choice contracts by 0.2
/// there and stays stable for all `p > 2`.
pub fn p2_check_config(p: f64) -> FlowConfig {
    FlowConfig {
        tau: 0.8 * (p - 2.0) / (2.0 * p - 2.0),
        delta: 1e-14,
        tol: 1e-11,
        max_iter: 200_000,
        ..FlowConfig::new(p, 1)
    }
}

/// Compares the analytic derivative of the first `[p,2]` eigenvalue with
/// respect to the node weights against central differences with step
/// `h (1 + ν_u)`. Each evaluation runs [`solve_p2_first`].
pub fn fd_grad_lambda1_p2(graph: &Graph, nu: &[f64], p: f64, h: f64) -> Result<P2GradientCheck> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::param("h", h, "must lie in (0, 1)"));
    }
    let cfg = p2_check_config(p);
    let solve = |nu: &[f64]| -> Result<(f64, Vec<f64>)> {
        let sol = solve_p2_first(graph, nu, p, &cfg)?;
        if !sol.converged {
            return Err(Error::NotConverged {
                what: "[p,2] descent",
                iters: sol.iters,
            });
        }
        Ok((sol.lambda_p2, sol.f))
    };

    let (lambda, f) = solve(nu)?;
    let f_mass: f64 = f.iter().zip(nu).map(|(x, n)| n * x * x).sum();
    let analytic: Vec<f64> = f
        .iter()
        .map(|x| -(p / 2.0) * lambda * x * x / f_mass)
        .collect();
    let mut numeric = Vec::with_capacity(nu.len());
    for u in 0..nu.len() {
        let step = h * (1.0 + nu[u]);
        let mut plus = nu.to_vec();
        let mut minus = nu.to_vec();
        plus[u] += step;
        minus[u] -= step;
        numeric.push((solve(&plus)?.0 - solve(&minus)?.0) / (2.0 * step));
    }
    Ok(P2GradientCheck {
        lambda_p2: lambda,
        max_rel_err: max_rel_err(&analytic, &numeric),
        analytic,
        numeric,
    })
}

/// Relative deviation of `λ_{[p,2,cν],1}` from `c^(-p/2) λ_{[p,2,ν],1}`.
pub fn p2_homogeneity_error(graph: &Graph, nu: &[f64], p: f64, c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::param("c", c, "must be positive"));
    }
    let cfg = p2_check_config(p);
    let scaled: Vec<f64> = nu.iter().map(|x| c * x).collect();
    let base = solve_p2_first(graph, nu, p, &cfg)?.lambda_p2;
    let other = solve_p2_first(graph, &scaled, p, &cfg)?.lambda_p2;
    let expected = c.powf(-p / 2.0) * base;
    Ok((other - expected).abs() / expected)
}

/// `L_{1,E}(μ) = 1/λ₁(μ,ν) + M_{E,p}(μ)` at `δ`-regularized weights.
pub fn p2_energy(graph: &Graph, mu: &[f64], nu: &[f64], p: f64, delta: f64) -> Result<f64> {
    let w = WeightPair::new(mu.to_vec(), nu.to_vec());
    let lambda = generalized_spectrum(graph, &w, delta)?.eigenvalues[0];
    if lambda <= 0.0 {
        return Err(Error::NonPositiveEigenvalue { k: 1, lambda });
    }
    Ok(1.0 / lambda + mass(mu, p)?)
}

#[derive(Debug, Clone)]
pub struct DualEdgePair {
    /// `λ^(q/p)` with `q = p/(p−1)`.
    pub eta: f64,
    /// `|∇f|^(p−2) ∇f`.
    pub g: Vec<f64>,
    /// Relative 2-norm residual of `∇(|∇ᵀG|^(q−2) ∇ᵀG) = η |G|^(q−2) G`.
    pub edge_residual: f64,
}

/// Maps a node eigenpair of `Δ_p` to an edge eigenpair of the conjugate
/// exponent and measures how well the edge equation holds.
pub fn dual_edge_pair(graph: &Graph, f: &[f64], lambda_p: f64, p: f64) -> Result<DualEdgePair> {
    check_p(p, 1.0, "duality needs p > 1")?;
    if !(lambda_p > 0.0) {
        return Err(Error::param("lambda", lambda_p, "must be positive"));
    }
    let q = p / (p - 1.0);
    let g: Vec<f64> = gradient(graph, f)?.iter().map(|&x| signed_pow(x, p)).collect();
    let eta = lambda_p.powf(q / p);
    let inner: Vec<f64> = divergence(graph, &g)?
        .iter()
        .map(|&x| signed_pow(x, q))
        .collect();
    let lhs = gradient_unchecked(graph, &inner);
    let rhs: Vec<f64> = g.iter().map(|&x| eta * signed_pow(x, q)).collect();
    let den = norm2(&rhs);
    if den == 0.0 {
        return Err(Error::ZeroNorm("edge eigenfunction"));
    }
    let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    Ok(DualEdgePair {
        eta,
        g,
        edge_residual: norm2(&diff) / den,
    })
}

/// Reverse map: `(η, G) ↦ (η^(p/q), |∇ᵀG|^(q−2) ∇ᵀG)`.
pub fn reverse_dual(graph: &Graph, g: &[f64], eta: f64, p: f64) -> Result<(f64, Vec<f64>)> {
    check_p(p, 1.0, "duality needs p > 1")?;
    let q = p / (p - 1.0);
    let f = divergence(graph, g)?
        .iter()
        .map(|&x| signed_pow(x, q))
        .collect();
    Ok((eta.powf(p / q), f))
}
