//! Encoded sequential repeater chain with error detection.
//!
//! A logical Bell pair is a GHZ(6)-diagonal state over the three data qubits
//! of each end node (qubits 0..3 at the near end, 3..6 at the far end). Every
//! hop encodes a fresh pair through three teleported CNOTs, and each swap
//! fuses the stored pair with the fresh one through three physical Bell
//! measurements, keeping the round only when the Z outcomes agree.

use crate::error::{Error, Result};
use crate::ghz::{BasisLabel, DiagonalState, Factor, TransferOperator, EPS};
use crate::noise::{
    decoherence_prob, flip_channel_op, multi_depol_op, werner_vector, FlipKind, NoiseParams,
};
use crate::timing::TimingProfile;

/// Number of no-error outcomes equivalent to the reference outcome:
/// two agreeing Z patterns times eight X patterns.
pub const ACCEPT_MULTIPLICITY: usize = 16;

const LOGICAL_DIM: usize = 64;
const JOINT_DIM: usize = LOGICAL_DIM * LOGICAL_DIM;

pub fn logical_basis() -> BasisLabel {
    BasisLabel::ghz(6)
}

/// `GHZ(3) ⊗ COMP(3) ⊗ GHZ(2)^3`: near-end data, far-end data, three link pairs.
pub fn encoding_basis() -> BasisLabel {
    BasisLabel::new(vec![
        Factor::Ghz(3),
        Factor::Comp(3),
        Factor::Ghz(2),
        Factor::Ghz(2),
        Factor::Ghz(2),
    ])
    .expect("static basis")
}

/// Weights of `|+_L⟩` prepared by a Hadamard and two noisy CNOTs.
pub fn plus_logical_vector(beta: f64) -> Result<DiagonalState> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::InvalidParameter {
            name: "beta",
            value: beta,
        });
    }
    let hi = beta * (3.0 - 2.0 * beta) / 8.0;
    let lo = beta / 8.0;
    let mut w = vec![hi, lo, hi, lo, lo, hi, lo, hi];
    w[0] += (1.0 - beta).powi(2);
    DiagonalState::new(BasisLabel::ghz(3), w)
}

/// Gate noise of the three remote-CNOT rows, in circuit order.
pub fn encoding_gate_noise(beta: f64) -> Result<Vec<TransferOperator>> {
    let basis = encoding_basis();
    let mut ops = Vec::with_capacity(6);
    for j in 0..3 {
        let (a_data, b_data) = (j, 3 + j);
        let (a_comm, b_comm) = (6 + 2 * j, 7 + 2 * j);
        ops.push(multi_depol_op(beta, &basis, &[a_data, a_comm])?);
        ops.push(multi_depol_op(beta, &basis, &[b_data, b_comm])?);
    }
    Ok(ops)
}

/// Ideal remote-CNOT rows mapping the encoding basis onto the logical pair.
pub fn encoding_gate_map() -> TransferOperator {
    let columns = (0..JOINT_DIM).map(|s| {
        let s_a = s >> 9;
        let c_b = (s >> 6) & 7;
        let mut u = 8 * s_a + (c_b ^ s_a);
        for j in 0..3 {
            let t = (s >> (4 - 2 * j)) & 3;
            if t == 1 || t == 2 {
                u ^= 1 << (2 - j);
            }
            if t == 2 || t == 3 {
                u ^= 63;
            }
        }
        vec![(u, 1.0)]
    });
    TransferOperator::from_columns(encoding_basis(), logical_basis(), columns)
        .expect("deterministic map")
}

/// Measurement errors of the encoding rows acting on the logical pair.
pub fn encoding_measurement_noise(delta: f64) -> Result<Vec<TransferOperator>> {
    let basis = logical_basis();
    let mut ops = Vec::with_capacity(6);
    for j in 0..3 {
        ops.push(flip_channel_op(FlipKind::Phase, delta, &basis, j)?);
        ops.push(flip_channel_op(FlipKind::Bit, delta, &basis, 3 + j)?);
    }
    Ok(ops)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedLinkState {
    pub lambda0: DiagonalState,
}

pub fn encode_link(timing: &TimingProfile, noise: &NoiseParams) -> Result<EncodedLinkState> {
    if timing.ncode() != 3 {
        return Err(Error::CodeSizeMismatch {
            scheme: "encoded link",
            expected: 3,
            found: timing.ncode(),
        });
    }
    let mut state =
        plus_logical_vector(noise.beta)?.kron(&DiagonalState::basis_state(BasisLabel::comp(3), 0)?);
    for &f in &timing.pair_fidelities {
        state = state.kron(&werner_vector(f)?);
    }
    for op in encoding_gate_noise(noise.beta)? {
        state = op.apply(&state)?;
    }
    state = encoding_gate_map().apply(&state)?;
    for op in encoding_measurement_noise(noise.delta)? {
        state = op.apply(&state)?;
    }
    Ok(EncodedLinkState { lambda0: state })
}

/// Output (`n`) and measured (`m`) GHZ(6) indices of the four terms in the
/// decomposition of `|G_{s>>6}⟩_AB ⊗ |G_{s&63}⟩_CD` into AD ⊗ BC products.
pub fn swap_indices(s: usize) -> ([usize; 4], [usize; 4]) {
    assert!(s < JOINT_DIM, "swap index {s} out of range");
    let a = s >> 9;
    let b = (s >> 6) & 7;
    let c = (s >> 3) & 7;
    let d = s & 7;
    let (n1, n2) = if (a >= 4) == (c >= 4) {
        (8 * a + d, 8 * a + 7 - d)
    } else {
        (63 - 8 * a - d, 56 - 8 * a + d)
    };
    let (m1, m2) = if (a >= 4) == (b >= 4) {
        (8 * b + c, 8 * b + 7 - c)
    } else {
        (63 - 8 * b - c, 56 - 8 * b + c)
    };
    ([n1, n2, 63 - n2, 63 - n1], [m1, m2, 63 - m2, 63 - m1])
}

/// Probability of the all-zero outcome when the ideal swap measurement is
/// applied to `|G_m^6⟩` on the six measured qubits (B1..B3, C1..C3).
pub fn reference_outcome_vector() -> Vec<f64> {
    (0..LOGICAL_DIM)
        .map(|m| {
            if m < 32 && (m >> 3) == (m & 7) {
                0.25
            } else {
                0.0
            }
        })
        .collect()
}

/// Gate noise of the three transversal CNOTs on the measured qubits.
pub fn swap_gate_noise(beta: f64) -> Result<TransferOperator> {
    let basis = logical_basis();
    let mut op = TransferOperator::identity(&basis);
    for j in 0..3 {
        op = multi_depol_op(beta, &basis, &[j, 3 + j])?.compose(&op)?;
    }
    Ok(op)
}

/// Measurement errors on the measured qubits: X-basis readout of B_j and
/// Z-basis readout of C_j.
pub fn swap_measurement_noise(delta: f64) -> Result<TransferOperator> {
    let basis = logical_basis();
    let mut op = TransferOperator::identity(&basis);
    for j in 0..3 {
        op = flip_channel_op(FlipKind::Phase, delta, &basis, j)?.compose(&op)?;
        op = flip_channel_op(FlipKind::Bit, delta, &basis, 3 + j)?.compose(&op)?;
    }
    Ok(op)
}

#[derive(Debug, Clone)]
pub struct SwapMachinery {
    /// `q_vectors[k][s] = q_{s|k}`.
    pub q_vectors: [Vec<f64>; 4],
    /// Maps the joint index `s` to the output index `n_k(s)`.
    pub n_maps: [TransferOperator; 4],
    pub accept_multiplicity: usize,
    tensor_out: Vec<u8>,
    tensor_weight: Vec<f64>,
}

pub fn build_swap_machinery(noise: &NoiseParams) -> Result<SwapMachinery> {
    let reference = reference_outcome_vector();
    let channel = swap_measurement_noise(noise.delta)?.compose(&swap_gate_noise(noise.beta)?)?;
    // Each of the four decomposition terms carries amplitude 1/2.
    let measured: Vec<f64> = (0..LOGICAL_DIM)
        .map(|m| {
            channel
                .column(m)
                .map(|(r, v)| reference[r] * v)
                .sum::<f64>()
                / 4.0
        })
        .collect();

    let indices: Vec<_> = (0..JOINT_DIM).map(swap_indices).collect();
    let q_vectors: [Vec<f64>; 4] =
        std::array::from_fn(|k| indices.iter().map(|(_, m)| measured[m[k]]).collect());
    let joint = logical_basis().kron(&logical_basis());
    let n_maps: [TransferOperator; 4] = std::array::from_fn(|k| {
        TransferOperator::from_columns(
            joint.clone(),
            logical_basis(),
            indices.iter().map(|(n, _)| vec![(n[k], 1.0)]),
        )
        .expect("indicator columns")
    });
    let mut tensor_out = Vec::with_capacity(4 * JOINT_DIM);
    let mut tensor_weight = Vec::with_capacity(4 * JOINT_DIM);
    for (n, m) in &indices {
        for k in 0..4 {
            tensor_out.push(n[k] as u8);
            tensor_weight.push(measured[m[k]]);
        }
    }
    Ok(SwapMachinery {
        q_vectors,
        n_maps,
        accept_multiplicity: ACCEPT_MULTIPLICITY,
        tensor_out,
        tensor_weight,
    })
}

fn check_logical(state: &DiagonalState) -> Result<()> {
    if state.basis() != &logical_basis() {
        return Err(Error::BasisMismatch {
            expected: logical_basis().to_string(),
            found: state.basis().to_string(),
        });
    }
    Ok(())
}

fn finish_swap(out: Vec<f64>) -> Result<(DiagonalState, f64)> {
    let p_ref: f64 = out.iter().sum();
    if !(p_ref > 0.0) {
        return Err(Error::DegenerateSwap);
    }
    let weights = out.into_iter().map(|w| w / p_ref).collect();
    Ok((DiagonalState::new(logical_basis(), weights)?, p_ref))
}

/// Swaps the stored pair `lambda_prev` (already decohered) with a fresh pair.
/// Returns the normalized output and the reference-outcome probability.
pub fn apply_swap(
    machinery: &SwapMachinery,
    lambda_prev: &DiagonalState,
    lambda0: &DiagonalState,
) -> Result<(DiagonalState, f64)> {
    check_logical(lambda_prev)?;
    check_logical(lambda0)?;
    let mut out = vec![0.0; LOGICAL_DIM];
    for (u, &pu) in lambda_prev.weights().iter().enumerate() {
        if pu == 0.0 {
            continue;
        }
        for (v, &pv) in lambda0.weights().iter().enumerate() {
            let lam = pu * pv;
            if lam == 0.0 {
                continue;
            }
            let base = 4 * (u * LOGICAL_DIM + v);
            for k in 0..4 {
                out[machinery.tensor_out[base + k] as usize] +=
                    lam * machinery.tensor_weight[base + k];
            }
        }
    }
    finish_swap(out)
}

/// Swap evaluated as `Σ_k N_k diag(Q_k) (λ_prev ⊗ λ0)` on the 4096-dim joint vector.
pub fn apply_swap_direct(
    machinery: &SwapMachinery,
    lambda_prev: &DiagonalState,
    lambda0: &DiagonalState,
) -> Result<(DiagonalState, f64)> {
    check_logical(lambda_prev)?;
    check_logical(lambda0)?;
    let joint = lambda_prev.kron(lambda0);
    let mut out = vec![0.0; LOGICAL_DIM];
    for k in 0..4 {
        let selected: Vec<f64> = joint
            .weights()
            .iter()
            .zip(&machinery.q_vectors[k])
            .map(|(l, q)| l * q)
            .collect();
        for (o, v) in out
            .iter_mut()
            .zip(machinery.n_maps[k].apply_weights(&selected))
        {
            *o += v;
        }
    }
    finish_swap(out)
}

pub fn accept_probability(p_ref: f64) -> f64 {
    ACCEPT_MULTIPLICITY as f64 * p_ref
}

/// Independent depolarization of the three far-end qubits with probability `gamma`.
pub fn memory_decoherence_op(gamma: f64) -> Result<TransferOperator> {
    let basis = logical_basis();
    let mut op = TransferOperator::identity(&basis);
    for q in 3..6 {
        op = multi_depol_op(gamma, &basis, &[q])?.compose(&op)?;
    }
    Ok(op)
}

/// Majority-vote and parity decoders for the two key bases.
#[derive(Debug, Clone)]
pub struct Decoder {
    z_errors: Vec<f64>,
    x_errors: Vec<f64>,
}

fn majority(bits: usize) -> bool {
    bits.count_ones() >= 2
}

impl Decoder {
    pub fn new(delta: f64) -> Result<Self> {
        let basis = logical_basis();
        let comp = BasisLabel::comp(6);

        let z_outcomes = TransferOperator::from_columns(
            basis.clone(),
            comp.clone(),
            (0..LOGICAL_DIM).map(|u| vec![(u, 0.5), (63 - u, 0.5)]),
        )?;
        let x_outcomes = TransferOperator::from_columns(
            basis.clone(),
            comp,
            (0..LOGICAL_DIM).map(|u| {
                let parity = (u >> 5) as u32;
                (0..LOGICAL_DIM)
                    .filter(|o| o.count_ones() % 2 == parity)
                    .map(|o| (o, 1.0 / 32.0))
                    .collect()
            }),
        )?;
        let mut z_flips = TransferOperator::identity(&basis);
        let mut x_flips = TransferOperator::identity(&basis);
        for q in 0..6 {
            z_flips = flip_channel_op(FlipKind::Bit, delta, &basis, q)?.compose(&z_flips)?;
            x_flips = flip_channel_op(FlipKind::Phase, delta, &basis, q)?.compose(&x_flips)?;
        }
        let z_indicator: Vec<f64> = (0..LOGICAL_DIM)
            .map(|o| f64::from(u8::from(majority(o >> 3) != majority(o & 7))))
            .collect();
        let x_indicator: Vec<f64> = (0..LOGICAL_DIM)
            .map(|o| f64::from(u8::from(o.count_ones() % 2 == 1)))
            .collect();
        let fold = |outcomes: &TransferOperator, flips: &TransferOperator, ind: &[f64]| {
            let op = outcomes.compose(flips)?;
            Ok::<_, Error>(
                (0..LOGICAL_DIM)
                    .map(|u| op.column(u).map(|(o, v)| ind[o] * v).sum())
                    .collect::<Vec<f64>>(),
            )
        };
        Ok(Self {
            z_errors: fold(&z_outcomes, &z_flips, &z_indicator)?,
            x_errors: fold(&x_outcomes, &x_flips, &x_indicator)?,
        })
    }

    /// `(e_Z, e_X)` for a GHZ(6)-diagonal end state.
    pub fn rates(&self, lambda_end: &DiagonalState) -> Result<(f64, f64)> {
        check_logical(lambda_end)?;
        let dot = |e: &[f64]| lambda_end.weights().iter().zip(e).map(|(a, b)| a * b).sum();
        Ok((dot(&self.z_errors), dot(&self.x_errors)))
    }
}

pub fn decoder_error_rates(lambda_end: &DiagonalState, delta: f64) -> Result<(f64, f64)> {
    Decoder::new(delta)?.rates(lambda_end)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainResult {
    pub lambda_end: DiagonalState,
    pub p_ref_per_swap: Vec<f64>,
    pub accept_prob_per_swap: Vec<f64>,
    pub p_end: f64,
    pub e_z: f64,
    pub e_x: f64,
}

/// Incremental evaluation of an encoded chain, one swap per [`step`](Self::step).
#[derive(Debug, Clone)]
pub struct EncodedChain {
    machinery: SwapMachinery,
    decoder: Decoder,
    memory: TransferOperator,
    lambda0: DiagonalState,
    current: DiagonalState,
    p_ref: Vec<f64>,
    accept: Vec<f64>,
    p_end: f64,
}

impl EncodedChain {
    /// `stored_decay` selects whether stored qubits decohere for `tau_hop`
    /// before each swap.
    pub fn new(timing: &TimingProfile, noise: &NoiseParams, stored_decay: bool) -> Result<Self> {
        noise.validate()?;
        let lambda0 = encode_link(timing, noise)?.lambda0;
        let gamma = if stored_decay {
            decoherence_prob(timing.tau_hop, noise.t_coh)?
        } else {
            0.0
        };
        Ok(Self {
            machinery: build_swap_machinery(noise)?,
            decoder: Decoder::new(noise.delta)?,
            memory: memory_decoherence_op(gamma)?,
            current: lambda0.clone(),
            lambda0,
            p_ref: Vec::new(),
            accept: Vec::new(),
            p_end: 1.0,
        })
    }

    pub fn step(&mut self) -> Result<()> {
        let stored = self.memory.apply(&self.current)?;
        let (next, p_ref) = apply_swap(&self.machinery, &stored, &self.lambda0)?;
        debug_assert!(next.is_normalized(EPS));
        let accept = accept_probability(p_ref);
        self.current = next;
        self.p_ref.push(p_ref);
        self.accept.push(accept);
        self.p_end *= accept;
        Ok(())
    }

    pub fn swaps(&self) -> usize {
        self.p_ref.len()
    }

    pub fn state(&self) -> &DiagonalState {
        &self.current
    }

    pub fn accept_probs(&self) -> &[f64] {
        &self.accept
    }

    pub fn p_end(&self) -> f64 {
        self.p_end
    }

    pub fn error_rates(&self) -> Result<(f64, f64)> {
        self.decoder.rates(&self.current)
    }

    pub fn result(&self) -> Result<ChainResult> {
        let (e_z, e_x) = self.error_rates()?;
        Ok(ChainResult {
            lambda_end: self.current.clone(),
            p_ref_per_swap: self.p_ref.clone(),
            accept_prob_per_swap: self.accept.clone(),
            p_end: self.p_end,
            e_z,
            e_x,
        })
    }
}

pub(crate) fn run_encoded(
    nr: usize,
    timing: &TimingProfile,
    noise: &NoiseParams,
    stored_decay: bool,
) -> Result<ChainResult> {
    if nr == 0 {
        return Err(Error::Config("at least one swap is required".into()));
    }
    let mut chain = EncodedChain::new(timing, noise, stored_decay)?;
    for _ in 0..nr {
        chain.step()?;
    }
    chain.result()
}

/// SEG-ED chain with `nr` swaps.
pub fn run_chain(nr: usize, timing: &TimingProfile, noise: &NoiseParams) -> Result<ChainResult> {
    run_encoded(nr, timing, noise, true)
}
