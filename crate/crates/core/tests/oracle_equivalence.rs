//! Analytic GHZ-diagonal engine against dense circuit simulation.

use approx::assert_abs_diff_eq;
use repeater_core::alt::{run_seg_noed, run_seg_prob};
use repeater_core::ghz::DiagonalState;
use repeater_core::noise::{decoherence_prob, NoiseParams};
use repeater_core::oracle::{
    project_to_diagonal, simulate_bell_chain, simulate_encoded_chain, simulate_encoding,
    simulate_plus_logical, simulate_swap, DensityMatrix, NoisyCnotForm,
};
use repeater_core::seged::{
    apply_swap, build_swap_machinery, encode_link, logical_basis, memory_decoherence_op,
    plus_logical_vector, run_chain, ACCEPT_MULTIPLICITY,
};
use repeater_core::{load_stage, timing_profile, BasisLabel, TimingProfile};

const TOL: f64 = 1e-10;

fn rough_noise() -> NoiseParams {
    NoiseParams {
        f0: 0.93,
        beta: 0.04,
        delta: 0.03,
        t_coh: 0.05,
    }
}

fn profile(fids: [f64; 3], tau: f64) -> TimingProfile {
    TimingProfile {
        g_times: vec![tau / 3.0, tau / 2.0, tau],
        tau_hop: tau,
        pair_fidelities: fids.to_vec(),
    }
}

fn assert_weights_close(a: &DiagonalState, b: &DiagonalState, tol: f64) {
    assert_eq!(a.basis(), b.basis());
    for (s, (x, y)) in a.weights().iter().zip(b.weights()).enumerate() {
        assert!((x - y).abs() <= tol, "weight {s}: {x} vs {y}");
    }
}

#[test]
fn plus_logical_matches_circuit_for_every_cnot_form() {
    for beta in [0.0, 0.001, 0.05, 0.3] {
        let expect = plus_logical_vector(beta).unwrap();
        for form in [
            NoisyCnotForm::Mixture,
            NoisyCnotForm::DepolarizeThenGate,
            NoisyCnotForm::GateThenDepolarize,
        ] {
            let rho = simulate_plus_logical(beta, form).unwrap();
            let (got, off) = project_to_diagonal(&rho, &BasisLabel::ghz(3)).unwrap();
            assert!(off < TOL, "off-diagonal mass {off}");
            assert_weights_close(&got, &expect, TOL);
        }
    }
}

#[test]
fn encoded_link_matches_circuit() {
    let stage2 = load_stage(2).unwrap();
    let cases = [
        (
            timing_profile(&stage2.link(40.0, 3), &stage2.noise).unwrap(),
            stage2.noise,
        ),
        (profile([0.9, 0.85, 0.8], 0.01), rough_noise()),
    ];
    for (timing, noise) in cases {
        let analytic = encode_link(&timing, &noise).unwrap().lambda0;
        let rho =
            simulate_encoding(&timing.pair_fidelities, &noise, NoisyCnotForm::Mixture).unwrap();
        assert!(rho.hermiticity_error() < 1e-13);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-12);
        let (got, off) = project_to_diagonal(&rho, &logical_basis()).unwrap();
        assert!(off < TOL, "off-diagonal mass {off}");
        assert_weights_close(&got, &analytic, TOL);
    }
}

#[test]
fn single_swap_matches_circuit() {
    let noise = rough_noise();
    let timing = profile([0.95, 0.9, 0.88], 0.004);
    let lambda0 = encode_link(&timing, &noise).unwrap().lambda0;
    let gamma = decoherence_prob(timing.tau_hop, noise.t_coh).unwrap();
    let stored = memory_decoherence_op(gamma)
        .unwrap()
        .apply(&lambda0)
        .unwrap();
    let (analytic, p_ref) =
        apply_swap(&build_swap_machinery(&noise).unwrap(), &stored, &lambda0).unwrap();

    let fresh = DensityMatrix::from_diagonal(&lambda0).unwrap();
    let out = simulate_swap(&fresh, &fresh, &noise, gamma, NoisyCnotForm::Mixture).unwrap();
    assert_abs_diff_eq!(out.p_ref, p_ref, epsilon = TOL);
    assert_abs_diff_eq!(
        out.accept_probability(),
        ACCEPT_MULTIPLICITY as f64 * p_ref,
        epsilon = TOL
    );
    let accepted: Vec<f64> = out
        .outcome_probs
        .iter()
        .enumerate()
        .filter(|(o, _)| matches!(o & 7, 0 | 7))
        .map(|(_, &p)| p)
        .collect();
    assert_eq!(accepted.len(), ACCEPT_MULTIPLICITY);
    for p in accepted {
        assert_abs_diff_eq!(p, p_ref, epsilon = TOL);
    }
    let (post, off) = project_to_diagonal(&out.post_reference, &logical_basis()).unwrap();
    assert!(off < TOL, "off-diagonal mass {off}");
    assert_weights_close(&post, &analytic, TOL);
}

#[test]
fn two_swap_chain_matches_circuit() {
    let stage2 = load_stage(2).unwrap();
    let cases = [
        (
            timing_profile(&stage2.link(40.0, 3), &stage2.noise).unwrap(),
            stage2.noise,
        ),
        (profile([0.95, 0.9, 0.88], 0.004), rough_noise()),
    ];
    for (timing, noise) in cases {
        let analytic = run_chain(2, &timing, &noise).unwrap();
        let gamma = decoherence_prob(timing.tau_hop, noise.t_coh).unwrap();
        let oracle = simulate_encoded_chain(2, &timing.pair_fidelities, &noise, gamma).unwrap();
        for (a, b) in analytic.p_ref_per_swap.iter().zip(&oracle.p_ref_per_swap) {
            assert_abs_diff_eq!(a, b, epsilon = TOL);
        }
        for (a, b) in analytic
            .accept_prob_per_swap
            .iter()
            .zip(&oracle.accept_per_swap)
        {
            assert_abs_diff_eq!(a, b, epsilon = TOL);
        }
        assert_abs_diff_eq!(analytic.e_z, oracle.e_z, epsilon = TOL);
        assert_abs_diff_eq!(analytic.e_x, oracle.e_x, epsilon = TOL);
        let (end, off) = project_to_diagonal(&oracle.end, &logical_basis()).unwrap();
        assert!(off < TOL);
        assert_weights_close(&end, &analytic.lambda_end, TOL);
    }
}

#[test]
fn bell_chain_matches_circuit() {
    let noise = rough_noise();
    let timing = TimingProfile {
        g_times: vec![0.004],
        tau_hop: 0.004,
        pair_fidelities: vec![noise.f0],
    };
    let gamma = decoherence_prob(timing.tau_hop, noise.t_coh).unwrap();
    for nr in 1..=5 {
        let analytic = run_seg_noed(nr, &timing, &noise).unwrap();
        let oracle = simulate_bell_chain(nr, noise.f0, &noise, gamma).unwrap();
        assert_abs_diff_eq!(analytic.e_z, oracle.e_z, epsilon = 1e-12);
        assert_abs_diff_eq!(analytic.e_x, oracle.e_x, epsilon = 1e-12);
        let (end, off) = project_to_diagonal(&oracle.end, &BasisLabel::ghz(2)).unwrap();
        assert!(off < 1e-12);
        assert_weights_close(&end, &analytic.lambda_end, 1e-12);
    }
}

#[test]
fn linear_optics_chain_matches_ideal_bell_measurements() {
    let noise = rough_noise();
    let timing = TimingProfile {
        g_times: vec![0.004],
        tau_hop: 0.004,
        pair_fidelities: vec![noise.f0],
    };
    let gamma = decoherence_prob(timing.tau_hop, noise.t_coh).unwrap();
    let ideal_ops = NoiseParams {
        beta: 0.0,
        delta: 0.0,
        ..noise
    };
    for nr in 1..=4 {
        let (analytic, _) = run_seg_prob(nr, &timing, &noise, 0.9).unwrap();
        let oracle = simulate_bell_chain(nr, noise.f0, &ideal_ops, gamma).unwrap();
        let (end, _) = project_to_diagonal(&oracle.end, &BasisLabel::ghz(2)).unwrap();
        assert_weights_close(&end, &analytic.lambda_end, 1e-12);
        assert_abs_diff_eq!(
            analytic.p_end,
            (0.81f64 / 2.0).powi(nr as i32),
            epsilon = 1e-15
        );
    }
}
