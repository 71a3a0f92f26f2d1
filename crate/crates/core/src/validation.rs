//! Self-checks of the analytic engine against the oracles.
//!
//! Every check reports a measured deviation and the tolerance it must stay
//! under; the report prints one `CHECK <name> PASS|FAIL dev=<v> tol=<v>` line each.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::alt::SchemeId;
use crate::error::Result;
use crate::ghz::{ghz_amplitudes, BasisLabel, DiagonalState, TransferOperator};
use crate::metrics::evaluate;
use crate::noise::{decoherence_prob, NoiseParams};
use crate::oracle::circuits::{simulate_encoded_chain, simulate_swap, swap_outcome_distribution};
use crate::oracle::{
    decode_error_rates, project_to_diagonal, run_trajectories, sample_attempt_counts,
    simulate_plus_logical, DensityMatrix, NoisyCnotForm, Pauli, TrajectoryConfig,
};
use crate::seged::{
    apply_swap, build_swap_machinery, encoding_gate_noise, encoding_measurement_noise,
    logical_basis, memory_decoherence_op, plus_logical_vector, swap_gate_noise, swap_indices,
    swap_measurement_noise, EncodedChain,
};
use crate::stage::load_stage;
use crate::timing::{
    attempts_cdf, expected_attempts, expected_attempts_double_sum, timing_profile,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn new(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            deviation,
            tolerance,
        }
    }

    pub fn passed(&self) -> bool {
        self.deviation.is_finite() && self.deviation <= self.tolerance
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "CHECK {} {} dev={:.3e} tol={:.1e}",
            self.name,
            if self.passed() { "PASS" } else { "FAIL" },
            self.deviation,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    Fast,
    Full,
}

fn max_weight_diff(a: &DiagonalState, b: &DiagonalState) -> f64 {
    a.weights()
        .iter()
        .zip(b.weights())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Largest deviation of the four-term AD ⊗ BC decomposition from a
/// brute-force expansion of `|G_u⟩_AB ⊗ |G_v⟩_CD`, over all 4096 inputs.
/// Each term must carry amplitude of modulus 1/2 and the terms must span
/// the whole input.
pub fn decomposition_deviation(indices: impl Fn(usize) -> ([usize; 4], [usize; 4])) -> Result<f64> {
    let ghz6: Vec<Vec<(usize, Complex64)>> = (0..64)
        .map(|s| {
            ghz_amplitudes(s, 6).map(|a| {
                a.into_iter()
                    .enumerate()
                    .filter(|(_, x)| x.norm() > 0.0)
                    .collect()
            })
        })
        .collect::<Result<_>>()?;
    // Six-bit block indices to the 12-qubit index in A B C D order.
    let place_ab_cd = |ab: usize, cd: usize| (ab << 6) | cd;
    let place_ad_bc = |ad: usize, bc: usize| {
        let (a, d, b, c) = (ad >> 3, ad & 7, bc >> 3, bc & 7);
        (a << 9) | (b << 6) | (c << 3) | d
    };
    let mut worst: f64 = 0.0;
    let mut input = vec![Complex64::new(0.0, 0.0); 4096];
    for s in 0..4096 {
        input.iter_mut().for_each(|x| *x = Complex64::new(0.0, 0.0));
        for &(i, a) in &ghz6[s >> 6] {
            for &(j, b) in &ghz6[s & 63] {
                input[place_ab_cd(i, j)] += a * b;
            }
        }
        let (n, m) = indices(s);
        let mut terms: Vec<(usize, usize)> = n.into_iter().zip(m).collect();
        let mut captured = 0.0;
        for &(nk, mk) in &terms {
            let overlap: Complex64 = ghz6[nk]
                .iter()
                .flat_map(|&(i, a)| {
                    ghz6[mk]
                        .iter()
                        .map(move |&(j, b)| (place_ad_bc(i, j), a * b))
                })
                .map(|(idx, amp)| amp.conj() * input[idx])
                .sum();
            worst = worst.max((overlap.norm() - 0.5).abs());
            captured += overlap.norm_sqr();
        }
        terms.sort_unstable();
        terms.dedup();
        if terms.len() != 4 {
            return Ok(f64::INFINITY);
        }
        worst = worst.max((1.0 - captured).abs());
    }
    Ok(worst)
}

pub fn check_decomposition() -> Result<Check> {
    Ok(Check::new(
        "decomposition_identity",
        decomposition_deviation(swap_indices)?,
        1e-12,
    ))
}

fn ideal_logical_pair() -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&ghz_amplitudes(0, 6)?)
}

/// Ideal inputs and noiseless hardware: every accepted outcome has
/// probability 1/16 and every rejected outcome probability 0.
pub fn check_ideal_swap() -> Result<Vec<Check>> {
    let noise = NoiseParams::noiseless();
    let pair = ideal_logical_pair()?;
    let out = simulate_swap(&pair, &pair, &noise, 0.0, NoisyCnotForm::Mixture)?;
    let (mut acc_dev, mut rej_dev) = (0.0f64, 0.0f64);
    for (o, &p) in out.outcome_probs.iter().enumerate() {
        if matches!(o & 7, 0 | 7) {
            acc_dev = acc_dev.max((p - 1.0 / 16.0).abs());
        } else {
            rej_dev = rej_dev.max(p.abs());
        }
    }
    let ideal = DiagonalState::basis_state(logical_basis(), 0)?;
    let (_, p_ref) = apply_swap(&build_swap_machinery(&noise)?, &ideal, &ideal)?;
    Ok(vec![
        Check::new("ideal_swap.accept_outcomes", acc_dev, 1e-12),
        Check::new("ideal_swap.reject_outcomes", rej_dev, 1e-12),
        Check::new(
            "ideal_swap.analytic_p_ref",
            (p_ref - 1.0 / 16.0).abs(),
            1e-15,
        ),
    ])
}

/// A bit flip on one stored qubit with perfect readout is always rejected.
pub fn check_injected_error() -> Result<Check> {
    let noise = NoiseParams::noiseless();
    let mut worst: f64 = 0.0;
    for q in 3..6 {
        let mut stored = ideal_logical_pair()?;
        stored.pauli(Pauli::X, q)?;
        let probs = swap_outcome_distribution(
            &stored,
            &ideal_logical_pair()?,
            &noise,
            0.0,
            NoisyCnotForm::Mixture,
        )?;
        let accepted: f64 = (0..64)
            .filter(|o| matches!(o & 7, 0 | 7))
            .map(|o| probs[o])
            .sum();
        worst = worst.max(accepted);
    }
    Ok(Check::new("injected_bit_flip.rejected", worst, 1e-12))
}

fn random_density(n: usize, rng: &mut ChaCha20Rng) -> Result<DensityMatrix> {
    let dim = 1 << n;
    let mut acc = vec![Complex64::new(0.0, 0.0); dim * dim];
    for _ in 0..3 {
        let v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let w: f64 = rng.random();
        for r in 0..dim {
            for c in 0..dim {
                acc[r * dim + c] += w * v[r] * v[c].conj();
            }
        }
    }
    DensityMatrix::from_matrix(n, acc)?.normalized()
}

/// The three placements of CNOT depolarization agree on random states.
pub fn check_noisy_cnot_forms(seed: u64) -> Result<Check> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let rho = random_density(3, &mut rng)?;
        let beta: f64 = rng.random();
        let run = |form| -> Result<DensityMatrix> {
            let mut r = rho.clone();
            r.noisy_cnot(beta, 2, 0, form)?;
            Ok(r)
        };
        let a = run(NoisyCnotForm::Mixture)?;
        worst = worst
            .max(a.max_abs_diff(&run(NoisyCnotForm::DepolarizeThenGate)?))
            .max(a.max_abs_diff(&run(NoisyCnotForm::GateThenDepolarize)?));
    }
    Ok(Check::new("noisy_cnot.forms_agree", worst, 1e-12))
}

pub fn check_plus_logical() -> Result<Check> {
    let mut worst: f64 = 0.0;
    for beta in [0.0, 1e-4, 1e-3, 5e-3, 0.1] {
        let rho = simulate_plus_logical(beta, NoisyCnotForm::Mixture)?;
        let (got, off) = project_to_diagonal(&rho, &BasisLabel::ghz(3))?;
        worst = worst
            .max(off)
            .max(max_weight_diff(&got, &plus_logical_vector(beta)?));
    }
    Ok(Check::new("plus_logical.weights", worst, 1e-10))
}

fn column_sum_deviation(op: &TransferOperator) -> f64 {
    op.column_sums()
        .into_iter()
        .map(|s| (s - 1.0).abs())
        .fold(0.0, f64::max)
}

pub fn check_stochastic(noise: &NoiseParams, gamma: f64) -> Result<Check> {
    let mut ops = encoding_gate_noise(noise.beta)?;
    ops.extend(encoding_measurement_noise(noise.delta)?);
    ops.push(swap_gate_noise(noise.beta)?);
    ops.push(swap_measurement_noise(noise.delta)?);
    ops.push(memory_decoherence_op(gamma)?);
    let worst = ops.iter().map(column_sum_deviation).fold(0.0, f64::max);
    Ok(Check::new("operators.column_stochastic", worst, 1e-12))
}

/// Exact chain of up to `max_nr` swaps on 12 qubits against the analytic
/// chain for one stage and hop length.
pub fn check_oracle_equivalence(stage: u8, l0_km: f64, max_nr: usize) -> Result<Vec<Check>> {
    let hw = load_stage(stage)?;
    let timing = timing_profile(&hw.link(l0_km, 3), &hw.noise)?;
    let gamma = decoherence_prob(timing.tau_hop, hw.noise.t_coh)?;
    let oracle = simulate_encoded_chain(max_nr, &timing.pair_fidelities, &hw.noise, gamma)?;
    let mut analytic = EncodedChain::new(&timing, &hw.noise, true)?;
    let tag = format!("oracle.stage{stage}.L0={l0_km}");
    let tol = 1e-10;

    let (lambda0, off0) = project_to_diagonal(&oracle.fresh, &logical_basis())?;
    let mut checks = vec![
        Check::new(
            format!("{tag}.lambda0"),
            max_weight_diff(&lambda0, analytic.state()),
            tol,
        ),
        Check::new(format!("{tag}.lambda0.off_diagonal"), off0, tol),
    ];
    for (i, post) in oracle.post_states.iter().enumerate() {
        analytic.step()?;
        let res = analytic.result()?;
        let nr = i + 1;
        let (lam, off) = project_to_diagonal(post, &logical_basis())?;
        let (e_z, e_x) = decode_error_rates(post, hw.noise.delta)?;
        checks.extend([
            Check::new(
                format!("{tag}.nr{nr}.p_ref"),
                (res.p_ref_per_swap[i] - oracle.p_ref_per_swap[i]).abs(),
                tol,
            ),
            Check::new(
                format!("{tag}.nr{nr}.P"),
                (res.accept_prob_per_swap[i] - oracle.accept_per_swap[i]).abs(),
                tol,
            ),
            Check::new(
                format!("{tag}.nr{nr}.lambda"),
                max_weight_diff(&lam, &res.lambda_end),
                tol,
            ),
            Check::new(format!("{tag}.nr{nr}.off_diagonal"), off, tol),
            Check::new(format!("{tag}.nr{nr}.e_Z"), (e_z - res.e_z).abs(), tol),
            Check::new(format!("{tag}.nr{nr}.e_X"), (e_x - res.e_x).abs(), tol),
        ]);
    }
    Ok(checks)
}

/// Sampled mean of the `j`-th arrival against the exact order statistic,
/// as a relative deviation.
pub fn check_attempts_mean(
    nmux: usize,
    j: usize,
    p: f64,
    samples: u64,
    seed: u64,
) -> Result<Check> {
    let draws = sample_attempt_counts(nmux, j, p, samples, seed)?;
    let mean = draws.iter().map(|&a| a as f64).sum::<f64>() / draws.len() as f64;
    let exact = expected_attempts(j, nmux, p)?;
    Ok(Check::new(
        format!("timing.mean.nmux={nmux}.j={j}.p={p}"),
        (mean - exact).abs() / exact,
        0.01,
    ))
}

/// Kolmogorov-Smirnov distance of sampled arrivals from the exact CDF,
/// against the α = 0.01 critical value.
pub fn check_attempts_distribution(
    nmux: usize,
    j: usize,
    p: f64,
    samples: u64,
    seed: u64,
) -> Result<Check> {
    let mut draws = sample_attempt_counts(nmux, j, p, samples, seed)?;
    draws.sort_unstable();
    let n = draws.len() as f64;
    let mut d: f64 = 0.0;
    let mut idx = 0;
    for k in 1..=*draws.last().unwrap_or(&1) {
        while idx < draws.len() && draws[idx] <= k {
            idx += 1;
        }
        d = d.max((idx as f64 / n - attempts_cdf(k, j, nmux, p)?).abs());
    }
    Ok(Check::new(
        format!("timing.ks.nmux={nmux}.j={j}.p={p}"),
        d,
        1.628 / n.sqrt(),
    ))
}

pub fn check_closed_forms() -> Result<Vec<Check>> {
    let mut j1: f64 = 0.0;
    for p in [0.01, 0.1, 0.5] {
        for nmux in [1, 4, 12] {
            j1 = j1.max(
                (expected_attempts(1, nmux, p)? - expected_attempts_double_sum(1, nmux, p)?).abs(),
            );
        }
    }
    Ok(vec![
        Check::new(
            "timing.closed_form.E2_nmux2_half",
            (expected_attempts(2, 2, 0.5)? - 8.0 / 3.0).abs(),
            1e-12,
        ),
        Check::new("timing.first_arrival_forms_agree", j1, 1e-9),
    ])
}

/// Sampled rounds against the analytic report, in standard errors.
pub fn check_trajectories(
    scheme: SchemeId,
    stage: u8,
    l0_km: f64,
    nr: usize,
    n: u64,
    seed: u64,
) -> Result<Vec<Check>> {
    let hw = load_stage(stage)?;
    let analytic = evaluate(scheme, &hw, l0_km, nr)?;
    let config = TrajectoryConfig {
        link: hw.link(l0_km, scheme.ncode()),
        noise: hw.noise,
        nr,
    };
    let est = run_trajectories(scheme, &config, n, seed)?;
    let tag = format!("trajectory.{scheme}.stage{stage}.nr{nr}");
    let sigmas = |e: &crate::oracle::Estimate, v: f64| {
        if e.std_err > 0.0 {
            (e.mean - v).abs() / e.std_err
        } else if (e.mean - v).abs() < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    };
    Ok(vec![
        Check::new(
            format!("{tag}.p_end_sigma"),
            sigmas(&est.p_end, analytic.p_end),
            3.0,
        ),
        Check::new(
            format!("{tag}.e_Z_sigma"),
            sigmas(&est.e_z, analytic.e_z),
            3.0,
        ),
        Check::new(
            format!("{tag}.e_X_sigma"),
            sigmas(&est.e_x, analytic.e_x),
            3.0,
        ),
        Check::new(
            format!("{tag}.R_bit_sigma"),
            sigmas(&est.r_bit, analytic.r_bit),
            3.0,
        ),
    ])
}

pub fn run_validation(level: Level, seed: u64) -> Result<Vec<Check>> {
    let mut checks = vec![check_decomposition()?];
    checks.extend(check_ideal_swap()?);
    checks.push(check_injected_error()?);
    checks.push(check_noisy_cnot_forms(seed)?);
    checks.push(check_plus_logical()?);
    checks.extend(check_closed_forms()?);
    let (hop_lengths, max_nr): (&[f64], usize) = match level {
        Level::Fast => (&[50.0], 1),
        Level::Full => (&[25.0, 50.0, 100.0], 2),
    };
    for stage in 1..=3 {
        let hw = load_stage(stage)?;
        checks.push(Check {
            name: format!("operators.stage{stage}.column_stochastic"),
            ..check_stochastic(&hw.noise, 0.01)?
        });
        for &l0 in hop_lengths {
            checks.extend(check_oracle_equivalence(stage, l0, max_nr)?);
        }
    }
    match level {
        Level::Fast => checks.push(check_attempts_mean(12, 3, 0.1, 100_000, seed)?),
        Level::Full => {
            for (nmux, j) in [(1, 1), (2, 2), (12, 3)] {
                for p in [0.01, 0.1, 0.5] {
                    checks.push(check_attempts_mean(nmux, j, p, 1_000_000, seed)?);
                    checks.push(check_attempts_distribution(
                        nmux,
                        j,
                        p,
                        100_000,
                        seed ^ 0x5eed,
                    )?);
                }
            }
            checks.extend(check_trajectories(
                SchemeId::SegEd,
                2,
                50.0,
                2,
                1_000_000,
                seed,
            )?);
            checks.extend(check_trajectories(
                SchemeId::SegNoEd,
                2,
                50.0,
                10,
                1_000_000,
                seed,
            )?);
        }
    }
    Ok(checks)
}
