//! Discrete gradient and divergence, the p-Laplace operator, and the
//! Rayleigh quotients built on them.
//!
//! Node functions are slices indexed by `Graph::interior()` position; edge
//! functions are slices indexed like `Graph::edges()`.

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;

/// Nonnegative edge (`mu`) and interior-node (`nu`) measures.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightPair {
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl WeightPair {
    pub fn new(mu: Vec<f64>, nu: Vec<f64>) -> Self {
        WeightPair { mu, nu }
    }

    pub fn ones(graph: &Graph) -> Self {
        WeightPair {
            mu: vec![1.0; graph.num_edges()],
            nu: vec![1.0; graph.num_interior()],
        }
    }

    /// Checks sizes against `graph` and that every entry is finite and `>= 0`.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        check_len("mu", graph.num_edges(), self.mu.len())?;
        check_len("nu", graph.num_interior(), self.nu.len())?;
        check_nonnegative("mu", &self.mu)?;
        check_nonnegative("nu", &self.nu)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.mu.iter().chain(&self.nu).all(|&x| x > 0.0)
    }
}

pub(crate) fn check_nonnegative(what: &'static str, values: &[f64]) -> Result<()> {
    match values
        .iter()
        .position(|&x| !(x.is_finite() && x >= 0.0))
    {
        Some(index) => Err(Error::BadWeight {
            what,
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// `|x|^(p-2) x`, extended by 0 at `x = 0`.
#[inline]
pub fn signed_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(p - 2.0) * x
    }
}

/// `|x|^(p-2)`, extended by 0 at `x = 0` (used for `p > 2`).
#[inline]
fn abs_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x.abs().powf(e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn check_p(p: f64, min: f64, reason: &'static str) -> Result<()> {
    if p.is_finite() && p > min {
        Ok(())
    } else {
        Err(Error::param("p", p, reason))
    }
}

/// `∇f(u,v) = ω_uv (f̄(v) - f̄(u))` with `f̄ = 0` on the boundary.
pub fn gradient(graph: &Graph, f: &[f64]) -> Result<Vec<f64>> {
    check_len("node function", graph.num_interior(), f.len())?;
    Ok(gradient_unchecked(graph, f))
}

pub(crate) fn gradient_unchecked(graph: &Graph, f: &[f64]) -> Vec<f64> {
    let at = |i: Option<usize>| i.map_or(0.0, |i| f[i]);
    graph
        .edges()
        .iter()
        .zip(graph.edge_ends())
        .map(|(e, &(a, b))| e.weight * (at(b) - at(a)))
        .collect()
}

/// Adjoint of [`gradient`]: `⟨∇f, G⟩ = ⟨f, ∇ᵀG⟩`.
pub fn divergence(graph: &Graph, g: &[f64]) -> Result<Vec<f64>> {
    check_len("edge function", graph.num_edges(), g.len())?;
    Ok(divergence_unchecked(graph, g))
}

pub(crate) fn divergence_unchecked(graph: &Graph, g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; graph.num_interior()];
    for ((e, &(a, b)), &ge) in graph.edges().iter().zip(graph.edge_ends()).zip(g) {
        let flux = e.weight * ge;
        if let Some(a) = a {
            out[a] -= flux;
        }
        if let Some(b) = b {
            out[b] += flux;
        }
    }
    out
}

/// `Δ_p f = ∇ᵀ(|∇f|^(p-2) ⊙ ∇f)`.
pub fn p_laplacian(graph: &Graph, f: &[f64], p: f64) -> Result<Vec<f64>> {
    check_p(p, 1.0, "p-Laplacian needs p > 1")?;
    let mut grad = gradient(graph, f)?;
    if p != 2.0 {
        for x in &mut grad {
            *x = signed_pow(*x, p);
        }
    }
    Ok(divergence_unchecked(graph, &grad))
}

fn pow_sum(values: &[f64], p: f64) -> f64 {
    values.iter().map(|x| x.abs().powf(p)).sum()
}

fn weighted_sq(values: &[f64], weights: &[f64]) -> f64 {
    values.iter().zip(weights).map(|(x, w)| w * x * x).sum()
}

/// `R_p(f) = ‖∇f‖_p^p / ‖f‖_p^p`.
pub fn rayleigh_p(graph: &Graph, f: &[f64], p: f64) -> Result<f64> {
    check_p(p, 1.0, "Rayleigh quotient needs p > 1")?;
    let grad = gradient(graph, f)?;
    let den = pow_sum(f, p);
    if den == 0.0 {
        return Err(Error::ZeroNorm("f"));
    }
    Ok(pow_sum(&grad, p) / den)
}

/// `R_{2,μ,ν}(f) = ‖∇f‖²_{2,μ} / ‖f‖²_{2,ν}`.
pub fn rayleigh_weighted(graph: &Graph, f: &[f64], w: &WeightPair) -> Result<f64> {
    w.validate(graph)?;
    let grad = gradient(graph, f)?;
    let den = weighted_sq(f, &w.nu);
    if den == 0.0 {
        return Err(Error::ZeroNorm("f in the nu-seminorm"));
    }
    Ok(weighted_sq(&grad, &w.mu) / den)
}

/// `R_{p,2,ν}(f) = ‖∇f‖_p^p / ‖f‖_{2,ν}^p`.
pub fn rayleigh_p2(graph: &Graph, f: &[f64], p: f64, nu: &[f64]) -> Result<f64> {
    check_p(p, 1.0, "Rayleigh quotient needs p > 1")?;
    check_len("nu", graph.num_interior(), nu.len())?;
    check_nonnegative("nu", nu)?;
    let grad = gradient(graph, f)?;
    let den = weighted_sq(f, nu);
    if den == 0.0 {
        return Err(Error::ZeroNorm("f in the nu-seminorm"));
    }
    Ok(pow_sum(&grad, p) / den.powf(p / 2.0))
}

/// The weights an eigenfunction induces: `μ = |∇f|^(p-2)`, `ν = |f|^(p-2)`.
pub fn weights_from(graph: &Graph, f: &[f64], p: f64) -> Result<WeightPair> {
    check_p(p, 2.0, "induced weights need p > 2")?;
    let grad = gradient(graph, f)?;
    Ok(WeightPair {
        mu: grad.iter().map(|&x| abs_pow(x, p - 2.0)).collect(),
        nu: f.iter().map(|&x| abs_pow(x, p - 2.0)).collect(),
    })
}
