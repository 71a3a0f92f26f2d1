//! Comparison schemes and a common stepping interface over all four.
//!
//! * SEG-noED: unencoded pairs, gate-based swaps, no detection.
//! * SEG-prob: unencoded pairs, noiseless linear-optics swaps that succeed
//!   with probability `η_D²/2`.
//! * PEG-ED: encoded pairs generated on all hops at once, so stored qubits
//!   never wait.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ghz::{BasisLabel, DiagonalState, TransferOperator};
use crate::noise::{
    decoherence_prob, flip_channel_op, multi_depol_op, werner_vector, FlipKind, NoiseParams,
};
use crate::seged::{run_encoded, ChainResult, EncodedChain};
use crate::timing::TimingProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeId {
    SegEd,
    SegNoEd,
    SegProb,
    PegEd,
}

impl SchemeId {
    pub const ALL: [SchemeId; 4] = [
        SchemeId::SegEd,
        SchemeId::SegNoEd,
        SchemeId::SegProb,
        SchemeId::PegEd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemeId::SegEd => "SEG-ED",
            SchemeId::SegNoEd => "SEG-noED",
            SchemeId::SegProb => "SEG-prob",
            SchemeId::PegEd => "PEG-ED",
        }
    }

    /// Link pairs consumed per hop.
    pub fn ncode(self) -> usize {
        match self {
            SchemeId::SegEd | SchemeId::PegEd => 3,
            SchemeId::SegNoEd | SchemeId::SegProb => 1,
        }
    }
}

impl fmt::Display for SchemeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "seged" => Ok(SchemeId::SegEd),
            "segnoed" => Ok(SchemeId::SegNoEd),
            "segprob" => Ok(SchemeId::SegProb),
            "peged" => Ok(SchemeId::PegEd),
            _ => Err(Error::Config(format!(
                "unknown scheme '{s}' (expected seg-ed, seg-noed, seg-prob or peg-ed)"
            ))),
        }
    }
}

fn require_ncode(scheme: SchemeId, timing: &TimingProfile) -> Result<()> {
    if timing.ncode() != scheme.ncode() {
        return Err(Error::CodeSizeMismatch {
            scheme: scheme.as_str(),
            expected: scheme.ncode(),
            found: timing.ncode(),
        });
    }
    Ok(())
}

/// Key error rates of a Bell-diagonal end state read out with error `delta`.
pub fn bell_error_rates(state: &DiagonalState, delta: f64) -> (f64, f64) {
    let l = state.weights();
    let keep = (1.0 - delta).powi(2) + delta * delta;
    let flip = 2.0 * delta * (1.0 - delta);
    let e_z = keep * (l[1] + l[2]) + flip * (l[0] + l[3]);
    let e_x = keep * (l[2] + l[3]) + flip * (l[0] + l[1]);
    (e_z, e_x)
}

/// Gate-based Bell measurement on two Bell pairs: ideal fusion, readout
/// errors on the far end, then output depolarization from the CNOT.
pub fn noed_swap_op(noise: &NoiseParams) -> Result<TransferOperator> {
    let bell = BasisLabel::ghz(2);
    let fuse = TransferOperator::from_columns(
        bell.kron(&bell),
        bell.clone(),
        (0..16).map(|s| vec![((s >> 2) ^ (s & 3), 1.0)]),
    )?;
    let readout = flip_channel_op(FlipKind::Bit, noise.delta, &bell, 1)?
        .compose(&flip_channel_op(FlipKind::Phase, noise.delta, &bell, 1)?)?;
    let gate = multi_depol_op(noise.beta, &bell, &[0, 1])?;
    gate.compose(&readout)?.compose(&fuse)
}

#[derive(Debug, Clone)]
pub struct NoEdChain {
    swap: TransferOperator,
    memory: TransferOperator,
    lambda0: DiagonalState,
    current: DiagonalState,
    delta: f64,
    accept: Vec<f64>,
}

impl NoEdChain {
    pub fn new(timing: &TimingProfile, noise: &NoiseParams) -> Result<Self> {
        require_ncode(SchemeId::SegNoEd, timing)?;
        noise.validate()?;
        let gamma = decoherence_prob(timing.tau_hop, noise.t_coh)?;
        let lambda0 = werner_vector(noise.f0)?;
        Ok(Self {
            swap: noed_swap_op(noise)?,
            memory: multi_depol_op(gamma, &BasisLabel::ghz(2), &[1])?,
            current: lambda0.clone(),
            lambda0,
            delta: noise.delta,
            accept: Vec::new(),
        })
    }

    pub fn step(&mut self) -> Result<()> {
        let stored = self.memory.apply(&self.current)?;
        self.current = self.swap.apply(&stored.kron(&self.lambda0))?;
        self.accept.push(1.0);
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ProbChain {
    w0: f64,
    survival: f64,
    success: f64,
    delta: f64,
    accept: Vec<f64>,
}

impl ProbChain {
    pub fn new(timing: &TimingProfile, noise: &NoiseParams, eta_d: f64) -> Result<Self> {
        require_ncode(SchemeId::SegProb, timing)?;
        noise.validate()?;
        Ok(Self {
            w0: (4.0 * noise.f0 - 1.0) / 3.0,
            survival: 1.0 - decoherence_prob(timing.tau_hop, noise.t_coh)?,
            success: eta_d * eta_d / 2.0,
            delta: noise.delta,
            accept: Vec::new(),
        })
    }

    /// Werner parameter after the recorded swaps: `w0^(nr+1) σ^nr`.
    pub fn werner_parameter(&self) -> f64 {
        let nr = self.accept.len() as i32;
        self.w0.powi(nr + 1) * self.survival.powi(nr)
    }

    /// Alternative count of decohered links, `(w0 σ)^nr`.
    pub fn werner_parameter_per_hop(&self) -> f64 {
        (self.w0 * self.survival).powi(self.accept.len() as i32)
    }

    fn state(&self) -> Result<DiagonalState> {
        werner_vector((3.0 * self.werner_parameter() + 1.0) / 4.0)
    }
}

/// One scheme's chain, advanced one swap at a time.
#[allow(clippy::large_enum_variant)]
#[derive(Debug, Clone)]
pub enum SchemeChain {
    Encoded(EncodedChain),
    NoEd(NoEdChain),
    Prob(ProbChain),
}

impl SchemeChain {
    pub fn new(
        scheme: SchemeId,
        timing: &TimingProfile,
        noise: &NoiseParams,
        eta_d: f64,
    ) -> Result<Self> {
        require_ncode(scheme, timing)?;
        Ok(match scheme {
            SchemeId::SegEd => SchemeChain::Encoded(EncodedChain::new(timing, noise, true)?),
            SchemeId::PegEd => SchemeChain::Encoded(EncodedChain::new(timing, noise, false)?),
            SchemeId::SegNoEd => SchemeChain::NoEd(NoEdChain::new(timing, noise)?),
            SchemeId::SegProb => SchemeChain::Prob(ProbChain::new(timing, noise, eta_d)?),
        })
    }

    pub fn step(&mut self) -> Result<()> {
        match self {
            SchemeChain::Encoded(c) => c.step(),
            SchemeChain::NoEd(c) => c.step(),
            SchemeChain::Prob(c) => {
                c.accept.push(c.success);
                Ok(())
            }
        }
    }

    pub fn swaps(&self) -> usize {
        self.accept_probs().len()
    }

    pub fn accept_probs(&self) -> &[f64] {
        match self {
            SchemeChain::Encoded(c) => c.accept_probs(),
            SchemeChain::NoEd(c) => &c.accept,
            SchemeChain::Prob(c) => &c.accept,
        }
    }

    pub fn p_end(&self) -> f64 {
        match self {
            SchemeChain::Encoded(c) => c.p_end(),
            _ => self.accept_probs().iter().product(),
        }
    }

    pub fn error_rates(&self) -> Result<(f64, f64)> {
        match self {
            SchemeChain::Encoded(c) => c.error_rates(),
            SchemeChain::NoEd(c) => Ok(bell_error_rates(&c.current, c.delta)),
            SchemeChain::Prob(c) => Ok(bell_error_rates(&c.state()?, c.delta)),
        }
    }

    pub fn result(&self) -> Result<ChainResult> {
        match self {
            SchemeChain::Encoded(c) => c.result(),
            SchemeChain::NoEd(c) => {
                let (e_z, e_x) = bell_error_rates(&c.current, c.delta);
                Ok(ChainResult {
                    lambda_end: c.current.clone(),
                    p_ref_per_swap: vec![0.25; c.accept.len()],
                    accept_prob_per_swap: c.accept.clone(),
                    p_end: 1.0,
                    e_z,
                    e_x,
                })
            }
            SchemeChain::Prob(c) => {
                let lambda_end = c.state()?;
                let (e_z, e_x) = bell_error_rates(&lambda_end, c.delta);
                Ok(ChainResult {
                    lambda_end,
                    p_ref_per_swap: c.accept.clone(),
                    accept_prob_per_swap: c.accept.clone(),
                    p_end: c.accept.iter().product(),
                    e_z,
                    e_x,
                })
            }
        }
    }
}

fn run_steps(mut chain: SchemeChain, nr: usize) -> Result<SchemeChain> {
    if nr == 0 {
        return Err(Error::Config("at least one swap is required".into()));
    }
    for _ in 0..nr {
        chain.step()?;
    }
    Ok(chain)
}

pub fn run_seg_noed(nr: usize, timing: &TimingProfile, noise: &NoiseParams) -> Result<ChainResult> {
    run_steps(SchemeChain::NoEd(NoEdChain::new(timing, noise)?), nr)?.result()
}

/// SEG-prob chain result and the per-hop alternative Werner parameter
/// `(w0 σ)^nr`.
pub fn run_seg_prob(
    nr: usize,
    timing: &TimingProfile,
    noise: &NoiseParams,
    eta_d: f64,
) -> Result<(ChainResult, f64)> {
    let chain = run_steps(SchemeChain::Prob(ProbChain::new(timing, noise, eta_d)?), nr)?;
    let alt = match &chain {
        SchemeChain::Prob(c) => c.werner_parameter_per_hop(),
        _ => unreachable!(),
    };
    Ok((chain.result()?, alt))
}

pub fn run_peg_ed(nr: usize, timing: &TimingProfile, noise: &NoiseParams) -> Result<ChainResult> {
    require_ncode(SchemeId::PegEd, timing)?;
    run_encoded(nr, timing, noise, false)
}

pub fn run_scheme(
    scheme: SchemeId,
    nr: usize,
    timing: &TimingProfile,
    noise: &NoiseParams,
    eta_d: f64,
) -> Result<ChainResult> {
    run_steps(SchemeChain::new(scheme, timing, noise, eta_d)?, nr)?.result()
}
