//! The μ-weighted Laplacian `L_μ = ∇ᵀ diag(μ) ∇` and the generalized
//! eigenproblem `L_{μ+δ} f = λ diag(ν+δ) f`.
//!
//! The mass matrix is diagonal, so the pencil is reduced exactly to the
//! standard symmetric problem `D^{-1/2} L D^{-1/2} y = λ y` with
//! `D = diag(ν+δ)` and `f = D^{-1/2} y`.

use faer::{Mat, Side};

use crate::error::{check_len, Error, Result};
use crate::graph::Graph;
use crate::operators::{check_nonnegative, WeightPair};

/// Default tie tolerance for index and multiplicity queries at `lambda`.
pub fn tie_tolerance(lambda: f64) -> f64 {
    1e-8 * (1.0 + lambda.abs())
}

/// Dense `L_μ` over the interior nodes.
pub fn weighted_laplacian(graph: &Graph, mu: &[f64]) -> Result<Mat<f64>> {
    check_len("mu", graph.num_edges(), mu.len())?;
    check_nonnegative("mu", mu)?;
    Ok(assemble(graph, mu, 0.0))
}

fn assemble(graph: &Graph, mu: &[f64], shift: f64) -> Mat<f64> {
    let n = graph.num_interior();
    let mut l = Mat::<f64>::zeros(n, n);
    for ((e, &(a, b)), &m) in graph.edges().iter().zip(graph.edge_ends()).zip(mu) {
        let c = e.weight * e.weight * (m + shift);
        if let Some(a) = a {
            l[(a, a)] += c;
        }
        if let Some(b) = b {
            l[(b, b)] += c;
        }
        if let (Some(a), Some(b)) = (a, b) {
            l[(a, b)] -= c;
            l[(b, a)] -= c;
        }
    }
    l
}

/// Full spectrum of a regularized pencil.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Ascending, nonnegative.
    pub eigenvalues: Vec<f64>,
    /// Column `j` pairs with `eigenvalues[j]`; normalized so that
    /// `fᵀ diag(ν+δ) f = 1` and the first entry of largest magnitude is
    /// positive.
    pub eigenvectors: Mat<f64>,
    pub delta: f64,
    /// `dim(Ker L_μ ∩ Ker diag ν)` of the unregularized pencil.
    pub kernel_dim: usize,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Number of well-defined eigenvalues of the unregularized pencil.
    pub fn well_defined(&self) -> usize {
        self.len() - self.kernel_dim
    }

    /// The 1-based `k`-th eigenvalue and its eigenvector.
    pub fn eigenpair(&self, k: usize) -> Result<(f64, Vec<f64>)> {
        if k == 0 || k > self.len() {
            return Err(Error::param("k", k as f64, "index outside the spectrum"));
        }
        let col = self.eigenvectors.col(k - 1);
        Ok((self.eigenvalues[k - 1], col.iter().copied().collect()))
    }

    /// 1-based index of the first eigenvalue within `tol` of `lambda`.
    pub fn linear_index(&self, lambda: f64, tol: f64) -> Result<usize> {
        self.eigenvalues
            .iter()
            .position(|&x| (x - lambda).abs() <= tol)
            .map(|i| i + 1)
            .ok_or(Error::NoEigenvalueNear { lambda, tol })
    }

    /// Number of eigenvalues within `tol` of `lambda`.
    pub fn multiplicity(&self, lambda: f64, tol: f64) -> Result<usize> {
        let m = self
            .eigenvalues
            .iter()
            .filter(|&&x| (x - lambda).abs() <= tol)
            .count();
        if m == 0 {
            Err(Error::NoEigenvalueNear { lambda, tol })
        } else {
            Ok(m)
        }
    }

    /// Whether the `k`-th eigenvalue is simple at the default tie tolerance.
    pub fn is_simple(&self, k: usize) -> bool {
        let lambda = self.eigenvalues[k - 1];
        matches!(self.multiplicity(lambda, tie_tolerance(lambda)), Ok(1))
    }
}

/// Solves `L_{μ+δ} f = λ diag(ν+δ) f`, where `μ+δ` and `ν+δ` shift every
/// edge and node weight by `delta`.
pub fn generalized_spectrum(graph: &Graph, w: &WeightPair, delta: f64) -> Result<Spectrum> {
    w.validate(graph)?;
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(Error::param("delta", delta, "must be finite and >= 0"));
    }
    if delta == 0.0 {
        if let Some(index) = w.nu.iter().position(|&x| x == 0.0) {
            return Err(Error::DegeneratePencil { index });
        }
    }
    let n = graph.num_interior();
    let l = assemble(graph, &w.mu, delta);
    let kernel_dim = kernel_intersection_dim(graph, w)?;

    let scale: Vec<f64> = w.nu.iter().map(|&x| 1.0 / (x + delta).sqrt()).collect();
    let reduced = Mat::<f64>::from_fn(n, n, |i, j| l[(i, j)] * scale[i] * scale[j]);
    let evd = reduced
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::EigenSolve(format!("{e:?}")))?;

    let eigenvalues: Vec<f64> = evd
        .S()
        .column_vector()
        .iter()
        .map(|&x| x.max(0.0))
        .collect();
    if let Some(i) = eigenvalues.iter().position(|x| !x.is_finite()) {
        return Err(Error::EigenSolve(format!("eigenvalue #{} is not finite", i + 1)));
    }
    let u = evd.U();
    let mut vectors = Mat::<f64>::from_fn(n, n, |i, j| u[(i, j)] * scale[i]);
    for j in 0..n {
        let mut col = vectors.col_mut(j);
        let mut pivot = 0.0f64;
        let mut best = -1.0;
        for i in 0..n {
            let a = col[i].abs();
            if a > best {
                best = a;
                pivot = col[i];
            }
        }
        if pivot < 0.0 {
            for i in 0..n {
                col[i] = -col[i];
            }
        }
    }

    Ok(Spectrum {
        eigenvalues,
        eigenvectors: vectors,
        delta,
        kernel_dim,
    })
}

/// `dim(Ker L_μ ∩ Ker diag ν)`. Vectors in `Ker diag ν` are supported on the
/// zero set `Z` of `ν`; since `L_μ` is positive semidefinite, such a vector is
/// in `Ker L_μ` iff it is in the kernel of the principal block `L_ZZ`.
fn kernel_intersection_dim(graph: &Graph, w: &WeightPair) -> Result<usize> {
    let zeros: Vec<usize> = w
        .nu
        .iter()
        .enumerate()
        .filter(|(_, &x)| x == 0.0)
        .map(|(i, _)| i)
        .collect();
    if zeros.is_empty() {
        return Ok(0);
    }
    let l = assemble(graph, &w.mu, 0.0);
    let block = Mat::<f64>::from_fn(zeros.len(), zeros.len(), |i, j| l[(zeros[i], zeros[j])]);
    let values = block
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::EigenSolve(format!("{e:?}")))?;
    let top = values.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let tol = 1e-12 * top.max(1.0);
    Ok(values.iter().filter(|&&x| x.abs() <= tol).count())
}
