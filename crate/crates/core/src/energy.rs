//! Spectral energies `E_{p,k}(μ,ν) = 1/λ_k(μ,ν) + M_{E,p}(μ) - M_{V,p}(ν)`
//! and their analytic derivatives.
//!
//! All eigenvalue derivatives are taken at the δ-regularized pencil, which is
//! the object the discrete flow actually differentiates.

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::linear::{generalized_spectrum, tie_tolerance};
use crate::operators::{check_nonnegative, check_p, gradient_unchecked, WeightPair};

/// `(p-2)/p · Σ w^(p/(p-2))`.
pub fn mass(weights: &[f64], p: f64) -> Result<f64> {
    check_p(p, 2.0, "mass functions need p > 2")?;
    check_nonnegative("weights", weights)?;
    let e = p / (p - 2.0);
    Ok((p - 2.0) / p * weights.iter().map(|w| w.powf(e)).sum::<f64>())
}

/// `d mass / d w_i = w_i^(2/(p-2))`.
pub fn mass_gradient(weights: &[f64], p: f64) -> Result<Vec<f64>> {
    check_p(p, 2.0, "mass functions need p > 2")?;
    check_nonnegative("weights", weights)?;
    let e = 2.0 / (p - 2.0);
    Ok(weights.iter().map(|w| w.powf(e)).collect())
}

fn check_k(graph: &Graph, k: usize) -> Result<()> {
    if k == 0 || k > graph.num_interior() {
        Err(Error::param("k", k as f64, "must lie in 1..=number of interior nodes"))
    } else {
        Ok(())
    }
}

/// `E_{p,k}(μ,ν)` with `λ_k` taken from the pencil regularized by `delta`.
pub fn energy(graph: &Graph, w: &WeightPair, p: f64, k: usize, delta: f64) -> Result<f64> {
    check_p(p, 2.0, "energy functions need p > 2")?;
    check_k(graph, k)?;
    let spectrum = generalized_spectrum(graph, w, delta)?;
    let lambda = spectrum.eigenvalues[k - 1];
    if lambda <= 0.0 {
        return Err(Error::NonPositiveEigenvalue { k, lambda });
    }
    Ok(1.0 / lambda + mass(&w.mu, p)? - mass(&w.nu, p)?)
}

/// Derivatives of `1/λ_k` with respect to the edge and node weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient {
    /// `-|∇f|² / (λ² ‖f‖²_ν)`, nonpositive.
    pub d_mu: Vec<f64>,
    /// `|f|² / ‖∇f‖²_μ`, nonnegative.
    pub d_nu: Vec<f64>,
}

/// Gradient of `1/λ_k`; fails with [`Error::NonSimpleEigenvalue`] when the
/// eigenvalue is repeated, where no derivative exists.
pub fn grad_inv_lambda(
    graph: &Graph,
    w: &WeightPair,
    p: f64,
    k: usize,
    delta: f64,
) -> Result<EnergyGradient> {
    let (grad, multiplicity, lambda) = grad_inv_lambda_flagged(graph, w, p, k, delta)?;
    if multiplicity > 1 {
        return Err(Error::NonSimpleEigenvalue {
            k,
            lambda,
            multiplicity,
        });
    }
    Ok(grad)
}

/// Like [`grad_inv_lambda`] but always returns the value computed from the
/// solver's `k`-th eigenvector, together with the multiplicity of `λ_k` and
/// `λ_k` itself. For multiplicity above one the value is only one element of
/// a non-unique family.
pub fn grad_inv_lambda_flagged(
    graph: &Graph,
    w: &WeightPair,
    p: f64,
    k: usize,
    delta: f64,
) -> Result<(EnergyGradient, usize, f64)> {
    check_p(p, 2.0, "energy functions need p > 2")?;
    check_k(graph, k)?;
    let spectrum = generalized_spectrum(graph, w, delta)?;
    let (lambda, f) = spectrum.eigenpair(k)?;
    if lambda <= 0.0 {
        return Err(Error::NonPositiveEigenvalue { k, lambda });
    }
    let multiplicity = spectrum.multiplicity(lambda, tie_tolerance(lambda))?;
    let grad = inv_lambda_gradient_at(graph, w, delta, lambda, &f)?;
    Ok((grad, multiplicity, lambda))
}

/// Gradient of `1/λ` at a given eigenpair of the regularized pencil. Only
/// ratios of quadratic forms enter, so any scaling of `f` gives the same
/// result.
pub fn inv_lambda_gradient_at(
    graph: &Graph,
    w: &WeightPair,
    delta: f64,
    lambda: f64,
    f: &[f64],
) -> Result<EnergyGradient> {
    check_len("eigenvector", graph.num_interior(), f.len())?;
    let grad_f = gradient_unchecked(graph, f);
    let mass_norm: f64 = f.iter().zip(&w.nu).map(|(x, n)| (n + delta) * x * x).sum();
    if mass_norm == 0.0 || lambda == 0.0 {
        return Err(Error::ZeroNorm("eigenvector"));
    }
    let mu_den = lambda * lambda * mass_norm;
    // ‖∇f‖²_{μ+δ} = λ ‖f‖²_{ν+δ} for an eigenpair of the shifted pencil
    let nu_den = lambda * mass_norm;
    Ok(EnergyGradient {
        d_mu: grad_f.iter().map(|g| -g * g / mu_den).collect(),
        d_nu: f.iter().map(|x| x * x / nu_den).collect(),
    })
}

/// Full gradient of `E_{p,k}`: `(d_mu + μ^(2/(p-2)), d_nu - ν^(2/(p-2)))`.
pub fn energy_gradient(
    graph: &Graph,
    w: &WeightPair,
    p: f64,
    k: usize,
    delta: f64,
) -> Result<EnergyGradient> {
    let mut g = grad_inv_lambda(graph, w, p, k, delta)?;
    for (d, m) in g.d_mu.iter_mut().zip(mass_gradient(&w.mu, p)?) {
        *d += m;
    }
    for (d, m) in g.d_nu.iter_mut().zip(mass_gradient(&w.nu, p)?) {
        *d -= m;
    }
    Ok(g)
}
