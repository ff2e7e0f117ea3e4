//! Graph builders and independent oracles shared by the integration tests.
#![allow(dead_code)]

use plap_core::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// B - 1 - ... - n - B with unit weights.
pub fn path(n: usize) -> Graph {
    let edges: Vec<_> = (0..=n).map(|i| (i, i + 1, 1.0)).collect();
    Graph::new(n + 2, [0, n + 1], edges).unwrap()
}

/// One interior node tied to the boundary by a single edge of weight `omega`.
pub fn one_node(omega: f64) -> Graph {
    Graph::new(2, [0], [(0, 1, omega)]).unwrap()
}

/// Three mutually connected interior nodes, each with its own boundary edge.
pub fn triangle(weights: [f64; 6]) -> Graph {
    let e = [(0, 1), (1, 2), (0, 2), (0, 3), (1, 4), (2, 5)];
    let edges: Vec<_> = e.iter().zip(weights).map(|(&(u, v), w)| (u, v, w)).collect();
    Graph::new(6, [3, 4, 5], edges).unwrap()
}

/// Random connected graph with `interior` interior nodes, 1 to 3 boundary
/// nodes, and edge weights in [0.5, 2).
pub fn random_connected(seed: u64, interior: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let nb = rng.random_range(1..=3usize);
        let n = interior + nb;
        let mut edges: Vec<(usize, usize, f64)> = Vec::new();
        let has = |edges: &Vec<(usize, usize, f64)>, a: usize, b: usize| {
            edges.iter().any(|&(u, v, _)| (u, v) == (a, b) || (u, v) == (b, a))
        };
        for i in 1..n {
            let j = rng.random_range(0..i);
            edges.push((j, i, rng.random_range(0.5..2.0)));
        }
        let extra = rng.random_range(0..=interior);
        for _ in 0..extra {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a != b && !has(&edges, a, b) {
                edges.push((a, b, rng.random_range(0.5..2.0)));
            }
        }
        let mut nodes: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            nodes.swap(i, rng.random_range(0..=i));
        }
        let boundary = nodes[..nb].to_vec();
        if let Ok(g) = Graph::new(n, boundary, edges) {
            if g.is_connected() && g.num_interior() == interior {
                return g;
            }
        }
    }
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Dense `L_{μ+δ}` assembled edge by edge from `ω²(μ+δ)`.
pub fn dense_laplacian(graph: &Graph, mu: &[f64], delta: f64) -> Vec<Vec<f64>> {
    let n = graph.num_interior();
    let mut l = vec![vec![0.0; n]; n];
    for (e, m) in graph.edges().iter().zip(mu) {
        let c = e.weight * e.weight * (m + delta);
        let a = graph.interior_index(e.u);
        let b = graph.interior_index(e.v);
        if let Some(a) = a {
            l[a][a] += c;
        }
        if let Some(b) = b {
            l[b][b] += c;
        }
        if let (Some(a), Some(b)) = (a, b) {
            l[a][b] -= c;
            l[b][a] -= c;
        }
    }
    l
}

/// Roots of `det(L - λ D)` for `n ≤ 3` and diagonal `D > 0`, ascending.
///
/// Works on `A = D^(-1/2) L D^(-1/2)`: its characteristic polynomial
/// `λ³ - c₂λ² + c₁λ - c₀` is solved in closed form (trigonometric form for
/// the cubic, all roots being real) and each root is polished by Newton.
pub fn char_poly_roots(l: &[Vec<f64>], d: &[f64]) -> Vec<f64> {
    let n = d.len();
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| l[i][j] / (d[i] * d[j]).sqrt()).collect())
        .collect();
    let mut roots = match n {
        0 => vec![],
        1 => vec![a[0][0]],
        2 => {
            let t = a[0][0] + a[1][1];
            let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
            let disc = ((t * t / 4.0) - det).max(0.0).sqrt();
            vec![t / 2.0 - disc, t / 2.0 + disc]
        }
        3 => {
            let c2 = a[0][0] + a[1][1] + a[2][2];
            let c1 = a[0][0] * a[1][1] + a[0][0] * a[2][2] + a[1][1] * a[2][2]
                - a[0][1] * a[1][0]
                - a[0][2] * a[2][0]
                - a[1][2] * a[2][1];
            let c0 = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
                - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
            // λ = x + c₂/3 turns the cubic into x³ + px + q.
            let s = c2 / 3.0;
            let p = c1 - c2 * c2 / 3.0;
            let q = -2.0 * c2.powi(3) / 27.0 + c2 * c1 / 3.0 - c0;
            let mut r: Vec<f64> = if p.abs() < 1e-300 {
                vec![s + (-q).cbrt(); 3]
            } else {
                let m = 2.0 * (-p / 3.0).max(0.0).sqrt();
                let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
                let theta = arg.acos() / 3.0;
                (0..3)
                    .map(|j| s + m * (theta - 2.0 * std::f64::consts::PI * j as f64 / 3.0).cos())
                    .collect()
            };
            for x in r.iter_mut() {
                for _ in 0..3 {
                    let f = ((*x - c2) * *x + c1) * *x - c0;
                    let df = (3.0 * *x - 2.0 * c2) * *x + c1;
                    if df.abs() > 1e-14 * (1.0 + c1.abs()) {
                        *x -= f / df;
                    }
                }
            }
            r
        }
        _ => panic!("char_poly_roots handles n <= 3"),
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// `R_p(f) = Σ|∇f|^p / Σ|f|^p`, evaluated without the library operators.
pub fn rayleigh(graph: &Graph, f: &[f64], p: f64) -> f64 {
    let at = |node: usize| graph.interior_index(node).map_or(0.0, |i| f[i]);
    let num: f64 = graph
        .edges()
        .iter()
        .map(|e| (e.weight * (at(e.v) - at(e.u))).abs().powf(p))
        .sum();
    let den: f64 = f.iter().map(|x| x.abs().powf(p)).sum();
    num / den
}

/// Orthonormal basis of the Euclidean complement of `f` (Gram-Schmidt on the
/// unit vectors).
pub fn complement_basis(f: &[f64]) -> Vec<Vec<f64>> {
    let n = f.len();
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![f.iter().map(|x| x / norm).collect()];
    for i in 0..n {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        for b in &basis {
            let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-8 {
            basis.push(v.into_iter().map(|x| x / len).collect());
        }
    }
    basis.remove(0);
    basis
}

/// Counts of negative and near-zero eigenvalues of the finite-difference
/// Hessian of `R_p` at the critical point `f`.
///
/// `R_p` is scale invariant, so its Hessian at a critical point annihilates
/// `f`; compressing it onto the complement of `f` keeps every other
/// eigenvalue. Eigenvalues below `-1e-6·R_p(f)` count as negative, those of
/// smaller magnitude as near zero.
pub fn fd_morse_count(graph: &Graph, f: &[f64], p: f64) -> (usize, usize) {
    let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
    let f: Vec<f64> = f.iter().map(|x| x / norm).collect();
    let q = complement_basis(&f);
    let m = q.len();
    let h = 1e-4;
    let r = |a: f64, b: f64, i: usize, j: usize| {
        let x: Vec<f64> = (0..f.len()).map(|t| f[t] + a * q[i][t] + b * q[j][t]).collect();
        rayleigh(graph, &x, p)
    };
    let r0 = rayleigh(graph, &f, p);
    let mut hess = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i..m {
            hess[i][j] = if i == j {
                (r(h, 0.0, i, i) - 2.0 * r0 + r(-h, 0.0, i, i)) / (h * h)
            } else {
                (r(h, h, i, j) - r(h, -h, i, j) - r(-h, h, i, j) + r(-h, -h, i, j)) / (4.0 * h * h)
            };
            hess[j][i] = hess[i][j];
        }
    }
    let eig = match m {
        0 => vec![],
        1 => vec![hess[0][0]],
        2 => {
            let t = (hess[0][0] + hess[1][1]) / 2.0;
            let d = (((hess[0][0] - hess[1][1]) / 2.0).powi(2) + hess[0][1].powi(2)).sqrt();
            vec![t - d, t + d]
        }
        _ => panic!("fd_morse_count handles at most 3 interior nodes"),
    };
    let scale = 1e-6 * r0;
    let negative = eig.iter().filter(|&&e| e < -scale).count();
    let near_zero = eig.iter().filter(|&&e| e.abs() <= scale).count();
    (negative, near_zero)
}

/// Random positive vector with entries in [lo, hi).
pub fn positive_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
