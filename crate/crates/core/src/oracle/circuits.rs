//! Physical circuits simulated on dense density matrices.
//!
//! Every channel is applied qubit by qubit to the literal circuit; no
//! GHZ-basis bookkeeping is used until results are projected for comparison.

use super::density::{DensityMatrix, NoisyCnotForm, Pauli};
use crate::error::{Error, Result};
use crate::noise::NoiseParams;

/// Werner pair built as `|Φ+⟩` followed by depolarizing one half.
pub fn werner_pair(f: f64) -> Result<DensityMatrix> {
    if !(0.25..=1.0).contains(&f) {
        return Err(Error::InvalidParameter {
            name: "fidelity",
            value: f,
        });
    }
    let mut rho = DensityMatrix::zero_state(2)?;
    rho.hadamard(0)?;
    rho.cnot(0, 1)?;
    rho.depolarize(4.0 * (1.0 - f) / 3.0, &[1])?;
    Ok(rho)
}

/// `|+_L⟩ = (|000⟩ + |111⟩)/√2` from a Hadamard and two noisy CNOTs.
pub fn simulate_plus_logical(beta: f64, form: NoisyCnotForm) -> Result<DensityMatrix> {
    let mut rho = DensityMatrix::zero_state(3)?;
    rho.hadamard(0)?;
    rho.noisy_cnot(beta, 0, 1, form)?;
    rho.noisy_cnot(beta, 0, 2, form)?;
    Ok(rho)
}

/// Encodes one logical pair from three Werner pairs with fidelities
/// `fidelities` by teleported CNOTs from the near-end block onto `|0_L⟩`.
/// Returns the 6-qubit state on (A0 A1 A2 B0 B1 B2).
pub fn simulate_encoding(
    fidelities: &[f64],
    noise: &NoiseParams,
    form: NoisyCnotForm,
) -> Result<DensityMatrix> {
    if fidelities.len() != 3 {
        return Err(Error::CodeSizeMismatch {
            scheme: "encoding oracle",
            expected: 3,
            found: fidelities.len(),
        });
    }
    // Qubit layout: A 0..3, B 3..6, then (a_j, b_j) at (6+2j, 7+2j).
    let mut rho = simulate_plus_logical(noise.beta, form)?.kron(&DensityMatrix::zero_state(3)?)?;
    for &f in fidelities {
        rho = rho.kron(&werner_pair(f)?)?;
    }
    for j in 0..3 {
        let (a_data, b_data, a_comm, b_comm) = (j, 3 + j, 6 + 2 * j, 7 + 2 * j);
        rho.noisy_cnot(noise.beta, a_data, a_comm, form)?;
        // Z readout of a_j; the X correction on b_j is applied coherently.
        rho.flip(Pauli::X, noise.delta, a_comm)?;
        rho.cnot(a_comm, b_comm)?;
        rho.noisy_cnot(noise.beta, b_comm, b_data, form)?;
        // X readout of b_j; the Z correction on A_j is applied coherently.
        rho.flip(Pauli::Z, noise.delta, b_comm)?;
        rho.hadamard(b_comm)?;
        rho.cz(b_comm, a_data)?;
    }
    rho.partial_trace(&[0, 1, 2, 3, 4, 5])
}

#[derive(Debug, Clone)]
pub struct SwapOutcome {
    /// Probability of each outcome `o = (B0 B1 B2 C0 C1 C2)`, B0 most significant.
    pub outcome_probs: Vec<f64>,
    /// Normalized (A0 A1 A2 D0 D1 D2) state after the all-zero outcome.
    pub post_reference: DensityMatrix,
    pub p_ref: f64,
}

impl SwapOutcome {
    /// Total probability of outcomes whose three C readouts agree.
    pub fn accept_probability(&self) -> f64 {
        self.outcome_probs
            .iter()
            .enumerate()
            .filter(|(o, _)| matches!(o & 7, 0 | 7))
            .map(|(_, p)| p)
            .sum()
    }
}

pub const SWAP_MEASURED: [usize; 6] = [3, 4, 5, 6, 7, 8];

/// Swap circuit on the 12-qubit joint state `AB ⊗ CD`: memory decay of the
/// stored B block, transversal noisy CNOTs B→C, X readout of B and Z
/// readout of C. Readout errors are applied as flips before ideal readout.
pub fn swap_circuit(
    joint: &mut DensityMatrix,
    noise: &NoiseParams,
    gamma: f64,
    form: NoisyCnotForm,
) -> Result<()> {
    if joint.num_qubits() != 12 {
        return Err(Error::InvalidState(format!(
            "swap circuit needs 12 qubits, got {}",
            joint.num_qubits()
        )));
    }
    for q in 3..6 {
        joint.depolarize(gamma, &[q])?;
    }
    for j in 0..3 {
        let (b, c) = (3 + j, 6 + j);
        joint.noisy_cnot(noise.beta, b, c, form)?;
        joint.hadamard(b)?;
        joint.flip(Pauli::X, noise.delta, b)?;
        joint.flip(Pauli::X, noise.delta, c)?;
    }
    Ok(())
}

/// Distribution over all 64 swap outcomes, `(B0 B1 B2 C0 C1 C2)` with B0
/// most significant.
pub fn swap_outcome_distribution(
    stored: &DensityMatrix,
    fresh: &DensityMatrix,
    noise: &NoiseParams,
    gamma: f64,
    form: NoisyCnotForm,
) -> Result<Vec<f64>> {
    let mut joint = stored.kron(fresh)?;
    swap_circuit(&mut joint, noise, gamma, form)?;
    joint.outcome_distribution(&SWAP_MEASURED)
}

pub fn simulate_swap(
    stored: &DensityMatrix,
    fresh: &DensityMatrix,
    noise: &NoiseParams,
    gamma: f64,
    form: NoisyCnotForm,
) -> Result<SwapOutcome> {
    let mut joint = stored.kron(fresh)?;
    swap_circuit(&mut joint, noise, gamma, form)?;
    let outcome_probs = joint.outcome_distribution(&SWAP_MEASURED)?;
    let (post, p_ref) = joint.project(&SWAP_MEASURED, 0)?;
    if !(p_ref > 0.0) {
        return Err(Error::DegenerateSwap);
    }
    Ok(SwapOutcome {
        outcome_probs,
        post_reference: post.normalized()?,
        p_ref,
    })
}

/// Bell-state swap on `AB ⊗ CD` (4 qubits): memory decay of B, noisy
/// CNOT B→C, X readout of B and Z readout of C. Returns the AD state after
/// the 00 outcome and that outcome's probability.
pub fn simulate_bell_swap(
    stored: &DensityMatrix,
    fresh: &DensityMatrix,
    noise: &NoiseParams,
    gamma: f64,
) -> Result<(DensityMatrix, f64)> {
    let mut joint = stored.kron(fresh)?;
    if joint.num_qubits() != 4 {
        return Err(Error::InvalidState("Bell swap needs two pairs".into()));
    }
    joint.depolarize(gamma, &[1])?;
    joint.noisy_cnot(noise.beta, 1, 2, NoisyCnotForm::Mixture)?;
    joint.hadamard(1)?;
    joint.flip(Pauli::X, noise.delta, 1)?;
    joint.flip(Pauli::X, noise.delta, 2)?;
    let (post, p) = joint.project(&[1, 2], 0)?;
    Ok((post.normalized()?, p))
}

/// Independent readout flips with probability `delta` on every bit of a
/// distribution over `bits`-bit outcomes.
fn flip_outcomes(probs: &[f64], bits: usize, delta: f64) -> Vec<f64> {
    let mut out = probs.to_vec();
    for b in 0..bits {
        let mask = 1 << b;
        let prev = out.clone();
        for (o, v) in out.iter_mut().enumerate() {
            *v = (1.0 - delta) * prev[o] + delta * prev[o ^ mask];
        }
    }
    out
}

/// Key error rates of a two-block state: Z-basis readout compared by
/// per-block majority vote, X-basis readout by total parity.
pub fn decode_error_rates(rho: &DensityMatrix, delta: f64) -> Result<(f64, f64)> {
    let n = rho.num_qubits();
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidState("decoder needs two equal blocks".into()));
    }
    let half = n / 2;
    let qubits: Vec<usize> = (0..n).collect();
    let block_vote = |bits: usize| 2 * bits.count_ones() as usize > half;
    let z = flip_outcomes(&rho.outcome_distribution(&qubits)?, n, delta);
    let e_z = z
        .iter()
        .enumerate()
        .filter(|&(o, _)| block_vote(o >> half) != block_vote(o & ((1 << half) - 1)))
        .map(|(_, p)| p)
        .sum();
    let mut rotated = rho.clone();
    for q in 0..n {
        rotated.hadamard(q)?;
    }
    let x = flip_outcomes(&rotated.outcome_distribution(&qubits)?, n, delta);
    let e_x = x
        .iter()
        .enumerate()
        .filter(|&(o, _)| o.count_ones() % 2 == 1)
        .map(|(_, p)| p)
        .sum();
    Ok((e_z, e_x))
}

#[derive(Debug, Clone)]
pub struct OracleChain {
    pub fresh: DensityMatrix,
    /// State after each swap; the last entry is the end state.
    pub post_states: Vec<DensityMatrix>,
    pub end: DensityMatrix,
    pub p_ref_per_swap: Vec<f64>,
    pub accept_per_swap: Vec<f64>,
    pub e_z: f64,
    pub e_x: f64,
}

/// Encoded chain with `nr` swaps, every swap simulated on 12 qubits.
pub fn simulate_encoded_chain(
    nr: usize,
    fidelities: &[f64],
    noise: &NoiseParams,
    gamma: f64,
) -> Result<OracleChain> {
    let fresh = simulate_encoding(fidelities, noise, NoisyCnotForm::Mixture)?;
    let mut current = fresh.clone();
    let mut p_ref = Vec::with_capacity(nr);
    let mut accept = Vec::with_capacity(nr);
    let mut post_states = Vec::with_capacity(nr);
    for _ in 0..nr {
        let out = simulate_swap(&current, &fresh, noise, gamma, NoisyCnotForm::Mixture)?;
        accept.push(out.accept_probability());
        p_ref.push(out.p_ref);
        current = out.post_reference;
        post_states.push(current.clone());
    }
    let (e_z, e_x) = decode_error_rates(&current, noise.delta)?;
    Ok(OracleChain {
        fresh,
        post_states,
        end: current,
        p_ref_per_swap: p_ref,
        accept_per_swap: accept,
        e_z,
        e_x,
    })
}

/// Unencoded chain of Werner pairs joined by gate-based Bell swaps.
pub fn simulate_bell_chain(
    nr: usize,
    f0: f64,
    noise: &NoiseParams,
    gamma: f64,
) -> Result<OracleChain> {
    let fresh = werner_pair(f0)?;
    let mut current = fresh.clone();
    let mut p_ref = Vec::with_capacity(nr);
    let mut post_states = Vec::with_capacity(nr);
    for _ in 0..nr {
        let (next, p) = simulate_bell_swap(&current, &fresh, noise, gamma)?;
        p_ref.push(p);
        current = next;
        post_states.push(current.clone());
    }
    let (e_z, e_x) = decode_error_rates(&current, noise.delta)?;
    Ok(OracleChain {
        fresh,
        post_states,
        end: current,
        accept_per_swap: vec![1.0; nr],
        p_ref_per_swap: p_ref,
        e_z,
        e_x,
    })
}
