mod common;

use common::*;
use plap_core::analysis::{dual_edge_pair, residual, reverse_dual};
use plap_core::flow::{flow_step, run_flow, FlowState};
use plap_core::linear::generalized_spectrum;
use plap_core::operators::{divergence, gradient, p_laplacian};
use plap_core::{FlowConfig, Graph, Init, WeightPair};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pair(rng: &mut ChaCha8Rng, g: &Graph) -> WeightPair {
    WeightPair::new(
        positive_vec(rng, g.num_edges(), 0.1, 2.0),
        positive_vec(rng, g.num_interior(), 0.1, 2.0),
    )
}

fn pencil_rayleigh(l: &[Vec<f64>], d: &[f64], x: &[f64]) -> f64 {
    let n = x.len();
    let num: f64 = (0..n).map(|i| (0..n).map(|j| x[i] * l[i][j] * x[j]).sum::<f64>()).sum();
    let den: f64 = x.iter().zip(d).map(|(a, b)| a * a * b).sum();
    num / den
}

#[test]
fn courant_fischer_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let g = triangle([1.0, 0.8, 1.4, 1.2, 0.6, 1.1]);
    let w = random_pair(&mut rng, &g);
    let s = generalized_spectrum(&g, &w, 0.0).unwrap();
    let l = dense_laplacian(&g, &w.mu, 0.0);
    let (_, f1) = s.eigenpair(1).unwrap();
    for _ in 0..200 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = pencil_rayleigh(&l, &w.nu, &x);
        assert!(r >= s.eigenvalues[0] * (1.0 - 1e-12) && r <= s.eigenvalues[2] * (1.0 + 1e-12));
        // Restricted to the ν-orthogonal complement of f₁, the quotient is at least λ₂.
        let c: f64 = x.iter().zip(&f1).zip(&w.nu).map(|((a, b), n)| a * b * n).sum();
        let y: Vec<f64> = x.iter().zip(&f1).map(|(a, b)| a - c * b).collect();
        assert!(pencil_rayleigh(&l, &w.nu, &y) >= s.eigenvalues[1] * (1.0 - 1e-10));
    }
}

#[test]
fn flow_fixed_point_is_an_eigenpair() {
    for seed in 0..4 {
        let g = random_connected(70 + seed, 8);
        for k in 1..=3 {
            let cfg = FlowConfig {
                tol: 1e-10,
                max_iter: 100_000,
                init: Init::Random { seed },
                ..FlowConfig::new(3.0, k)
            };
            let (r, _) = run_flow(&g, &cfg).unwrap();
            if r.converged {
                assert!(r.residual <= 1e-6, "seed {seed} k {k}: residual {}", r.residual);
            }
        }
    }
}

#[test]
fn first_eigenvalue_trace_stabilizes() {
    let g = Graph::grid(7, 7).unwrap();
    let (r, trace) = run_flow(&g, &FlowConfig::new(3.0, 1)).unwrap();
    assert!(r.converged);
    let lambdas: Vec<f64> = trace.records.iter().map(|s| s.lambda).collect();
    let tail = &lambdas[lambdas.len() - 5..];
    let head_jump = (lambdas[1] - lambdas[0]).abs();
    for pair in tail.windows(2) {
        assert!((pair[1] - pair[0]).abs() < 1e-3 * head_jump.max(1e-12));
    }
}

#[test]
fn trace_err_is_rowwise_max() {
    let g = Graph::grid(6, 6).unwrap();
    let (_, trace) = run_flow(&g, &FlowConfig::new(3.5, 2)).unwrap();
    for s in &trace.records {
        assert_eq!(s.err, s.err_mu.max(s.err_nu));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn spectrum_scales_with_weights(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected(seed, rng.random_range(1..=12));
        let w = random_pair(&mut rng, &g);
        let base = generalized_spectrum(&g, &w, 0.0).unwrap();
        let mu_scaled = WeightPair::new(w.mu.iter().map(|x| c * x).collect(), w.nu.clone());
        let nu_scaled = WeightPair::new(w.mu.clone(), w.nu.iter().map(|x| c * x).collect());
        let a = generalized_spectrum(&g, &mu_scaled, 0.0).unwrap();
        let b = generalized_spectrum(&g, &nu_scaled, 0.0).unwrap();
        let top = base.eigenvalues.last().copied().unwrap();
        for i in 0..base.len() {
            prop_assert!((a.eigenvalues[i] - c * base.eigenvalues[i]).abs() <= 1e-10 * c * top);
            prop_assert!((b.eigenvalues[i] - base.eigenvalues[i] / c).abs() <= 1e-10 * top / c);
        }
    }

    #[test]
    fn gradient_and_divergence_are_adjoint(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected(seed, rng.random_range(1..=20));
        let f: Vec<f64> = (0..g.num_interior()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let e: Vec<f64> = (0..g.num_edges()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lhs: f64 = gradient(&g, &f).unwrap().iter().zip(&e).map(|(a, b)| a * b).sum();
        let rhs: f64 = divergence(&g, &e).unwrap().iter().zip(&f).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn p_laplacian_is_homogeneous(seed in 0u64..10_000, p in 2.1f64..6.0, c in -5.0f64..5.0) {
        prop_assume!(c.abs() > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected(seed, rng.random_range(1..=15));
        let f: Vec<f64> = (0..g.num_interior()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cf: Vec<f64> = f.iter().map(|x| c * x).collect();
        let base = p_laplacian(&g, &f, p).unwrap();
        let scaled = p_laplacian(&g, &cf, p).unwrap();
        let factor = c.abs().powf(p - 2.0) * c;
        let norm = base.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in scaled.iter().zip(&base) {
            prop_assert!((a - factor * b).abs() <= 1e-10 * factor.abs() * (norm + 1e-300));
        }
    }

    #[test]
    fn residual_vanishes_exactly_on_the_path_eigenpair(p in 2.05f64..8.0, dl in 1e-3f64..0.5) {
        // f = (1,-1) on B-1-2-B solves Δ_p f = (1 + 2^(p-1)) |f|^(p-2) f.
        let g = path(2);
        let f = [1.0, -1.0];
        let lambda_p = 1.0 + 2f64.powf(p - 1.0);
        prop_assert!(residual(&g, &f, lambda_p.powf(2.0 / p), p).unwrap() < 1e-12);
        let off = residual(&g, &f, (lambda_p * (1.0 + dl)).powf(2.0 / p), p).unwrap();
        prop_assert!(off > 0.5 * dl);
    }

    #[test]
    fn duality_round_trip(p in 2.05f64..8.0, c in 0.2f64..5.0) {
        let g = path(2);
        let f = [c, -c];
        let lambda_p = 1.0 + 2f64.powf(p - 1.0);
        let pair = dual_edge_pair(&g, &f, lambda_p, p).unwrap();
        prop_assert!(pair.edge_residual < 1e-12);
        let (lambda, back) = reverse_dual(&g, &pair.g, pair.eta, p).unwrap();
        prop_assert!(rel_diff(lambda, lambda_p) < 1e-8);
        let dot: f64 = back.iter().zip(&f).map(|(a, b)| a * b).sum();
        let nb = back.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nf = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((dot / (nb * nf)).abs() > 1.0 - 1e-8);
    }

    #[test]
    fn one_step_keeps_weights_positive(seed in 0u64..10_000, tau in 0.01f64..1.0, p in 2.2f64..6.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_connected(seed, rng.random_range(2..=15));
        let k = rng.random_range(1..=g.num_interior());
        let cfg = FlowConfig { tau, ..FlowConfig::new(p, k) };
        let state = FlowState::new(random_pair(&mut rng, &g));
        let next = flow_step(&g, &state, &cfg).unwrap();
        prop_assert!(next.w.is_strictly_positive());
    }

    #[test]
    fn graph_json_round_trip(seed in 0u64..10_000) {
        let g = random_connected(seed, 1 + (seed % 25) as usize);
        prop_assert_eq!(Graph::from_json(&g.to_json()).unwrap(), g);
    }
}
