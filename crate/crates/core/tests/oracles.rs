use cvmaxcut::gates::displacement_fock;
use cvmaxcut::variational::{circuit_distribution, loss_gradient};
use cvmaxcut::{
    build_circuit, embed, init_params, moments_from_fock, propagate_gates, run_circuit, wigner, CircuitConfig,
    GaussianMoments, NgKind, SingleModeDensity, WeightedGraph,
};
use nalgebra::Complex;

fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

#[test]
fn coherent_wigner_matches_closed_form() {
    let alpha = Complex::new(1.0, 0.5);
    let d = displacement_fock::<f64>(alpha, 30).unwrap();
    let amps: Vec<_> = d.column(0).iter().cloned().collect();
    let rho = SingleModeDensity::from_pure(&amps);
    let xs = grid(-2.0, 5.0, 15);
    let ps = grid(-3.0, 4.0, 15);
    let w = wigner(&rho, &xs, &ps).unwrap();
    // x = a + a^dagger, so the peak sits at (2 Re alpha, 2 Im alpha) with unit variance
    for (i, &x) in xs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            let d2 = (x - 2.0 * alpha.re).powi(2) + (p - 2.0 * alpha.im).powi(2);
            let expected = (-d2 / 2.0).exp() / (2.0 * std::f64::consts::PI);
            assert!((w[(i, j)] - expected).abs() < 1e-8, "({x}, {p}): {} vs {expected}", w[(i, j)]);
        }
    }
}

#[test]
fn single_photon_wigner_is_negative_at_origin() {
    let w = wigner(&SingleModeDensity::<f64>::fock(1, 5), &[0.0], &[0.0]).unwrap();
    assert!((w[(0, 0)] + 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-12);
}

#[test]
fn vacuum_wigner_integrates_to_one() {
    let xs = grid(-5.0, 5.0, 201);
    let w = wigner(&SingleModeDensity::<f64>::fock(0, 4), &xs, &xs).unwrap();
    let dx = xs[1] - xs[0];
    assert!((w.sum() * dx * dx - 1.0).abs() < 1e-3);
}

fn weighted_four() -> WeightedGraph {
    WeightedGraph::new(4, vec![(0, 1, 1.0), (1, 2, 0.5), (2, 3, 2.0), (0, 3, 1.5), (0, 2, 0.7)]).unwrap()
}

#[test]
fn embedded_state_matches_gaussian_oracle() {
    // Margin 0.5 keeps squeezing near 0.55, well inside cutoff 17.
    for graph in [WeightedGraph::star(4).unwrap(), weighted_four()] {
        let program = embed::<f64>(&graph, 0.5).unwrap();
        let gates = program.gates();
        let state = run_circuit(4, 17, &gates).unwrap();
        let fock = moments_from_fock(&state).unwrap();
        let gauss = propagate_gates(&GaussianMoments::vacuum(4), &gates).unwrap();
        assert!((fock.covariance() - gauss.covariance()).amax() < 1e-4);
        assert!((fock.mean() - gauss.mean()).amax() < 1e-10);
        let p_vac = state.photon_count_distribution().probability(&[0, 0, 0, 0]);
        assert!((p_vac - gauss.vacuum_probability().unwrap()).abs() < 1e-8);
    }
}

#[test]
fn embedding_toggle_keeps_parameter_layout() {
    let graph = weighted_four();
    let p = init_params::<f64>(4, 1, NgKind::Kerr, 9);
    let on = CircuitConfig::<f64>::seeded(4, NgKind::Kerr, true, 1, 5, 9).unwrap();
    let off = CircuitConfig { use_embedding: false, ..on.clone() };
    let with = build_circuit(&graph, &p, &on).unwrap();
    let without = build_circuit(&graph, &p, &off).unwrap();
    let prep = embed::<f64>(&graph, on.margin).unwrap().gates();
    assert_eq!(with.len(), without.len() + prep.len());
    assert_eq!(&with[prep.len()..], &without[..]);
}

#[test]
fn gradient_agrees_with_richardson_extrapolation() {
    let graph = WeightedGraph::star(3).unwrap();
    let cfg = CircuitConfig::<f64>::seeded(3, NgKind::CubicPhase, true, 1, 6, 4).unwrap();
    let p = init_params::<f64>(3, 1, NgKind::CubicPhase, 4);
    let gs = std::slice::from_ref(&graph);
    let (_, g1) = loss_gradient(gs, &p, &cfg, 1e-3).unwrap();
    let (_, g2) = loss_gradient(gs, &p, &cfg, 5e-4).unwrap();
    // The default step sits 100x below h = 1e-3, where the O(h^2) error is about 2e-6.
    let (_, g_default) = loss_gradient(gs, &p, &cfg, 1e-4).unwrap();
    for ((a, b), g) in g1.iter().zip(&g2).zip(&g_default) {
        let extrapolated = (4.0 * b - a) / 3.0;
        assert!((g - extrapolated).abs() < 1e-7, "{g} vs {extrapolated}");
        // halving h shrinks the error by about 4
        let (e1, e2) = ((a - extrapolated).abs(), (b - extrapolated).abs());
        assert!(e1 < 1e-9 || (e1 / e2 - 4.0).abs() < 0.5, "error ratio {}", e1 / e2);
    }
}

#[test]
fn distributions_are_normalized_up_to_leakage() {
    let graph = weighted_four();
    let cfg = CircuitConfig::<f64>::seeded(4, NgKind::None, true, 2, 6, 1).unwrap();
    let p = init_params::<f64>(4, 2, NgKind::None, 1);
    let d = circuit_distribution(&graph, &p, &cfg).unwrap();
    let total: f64 = d.probabilities().iter().sum();
    assert!((total + d.leakage() - 1.0).abs() < 1e-10);
    assert!(d.leakage() >= -1e-12 && d.leakage() < 0.2);
}
