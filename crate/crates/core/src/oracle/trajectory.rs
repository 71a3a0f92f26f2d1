//! Monte Carlo sampling of whole repeater rounds by Pauli-frame tracking.
//!
//! Each round samples link-generation attempts, propagates sampled Pauli
//! errors through the Clifford circuits of encoding, swapping and readout,
//! and records acceptance and key-bit errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::alt::SchemeId;
use crate::error::{check_probability, Error, Result};
use crate::noise::{decoherence_prob, NoiseParams};
use crate::timing::{p_gen, timing_profile, LinkParams, TimingProfile};

const BATCH: u64 = 4096;

/// Pauli error on up to 32 qubits; bit `i` refers to qubit `i`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Frame {
    x: u32,
    z: u32,
}

impl Frame {
    fn cnot(&mut self, c: usize, t: usize) {
        self.x ^= ((self.x >> c) & 1) << t;
        self.z ^= ((self.z >> t) & 1) << c;
    }

    fn h(&mut self, q: usize) {
        let (xb, zb) = ((self.x >> q) & 1, (self.z >> q) & 1);
        self.x = (self.x & !(1 << q)) | (zb << q);
        self.z = (self.z & !(1 << q)) | (xb << q);
    }

    fn cz(&mut self, a: usize, b: usize) {
        self.z ^= ((self.x >> b) & 1) << a;
        self.z ^= ((self.x >> a) & 1) << b;
    }

    /// With probability `p`, a uniformly random Pauli on `qubits`.
    fn depolarize<R: Rng>(&mut self, rng: &mut R, p: f64, qubits: &[usize]) {
        if p > 0.0 && rng.random_bool(p) {
            for &q in qubits {
                let k: u32 = rng.random_range(0..4);
                self.x ^= (k & 1) << q;
                self.z ^= (k >> 1) << q;
            }
        }
    }

    fn x_bit(&self, q: usize) -> bool {
        (self.x >> q) & 1 == 1
    }

    fn z_bit(&self, q: usize) -> bool {
        (self.z >> q) & 1 == 1
    }

    /// Keeps qubits `keep`, renumbered in order.
    fn select(&self, keep: &[usize]) -> Frame {
        keep.iter()
            .enumerate()
            .fold(Frame::default(), |f, (i, &q)| Frame {
                x: f.x | (((self.x >> q) & 1) << i),
                z: f.z | (((self.z >> q) & 1) << i),
            })
    }

    fn join(&self, other: &Frame, shift: usize) -> Frame {
        Frame {
            x: self.x | (other.x << shift),
            z: self.z | (other.z << shift),
        }
    }
}

fn flip<R: Rng>(rng: &mut R, p: f64) -> bool {
    p > 0.0 && rng.random_bool(p)
}

fn majority3(bits: [bool; 3]) -> bool {
    bits.iter().filter(|&&b| b).count() >= 2
}

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub link: LinkParams,
    pub noise: NoiseParams,
    pub nr: usize,
}

/// Everything a single round needs, derived once from the configuration.
#[derive(Debug, Clone)]
struct Setup {
    scheme: SchemeId,
    noise: NoiseParams,
    nr: usize,
    p_gen: f64,
    nmux: usize,
    ncode: usize,
    attempt_time: f64,
    pair_fidelities: Vec<f64>,
    gamma: f64,
    bsm_success: f64,
}

impl Setup {
    fn new(scheme: SchemeId, config: &TrajectoryConfig) -> Result<Self> {
        if config.nr == 0 {
            return Err(Error::Config("at least one swap is required".into()));
        }
        config.noise.validate()?;
        let link = LinkParams {
            ncode: scheme.ncode(),
            ..config.link
        };
        let timing: TimingProfile = timing_profile(&link, &config.noise)?;
        let gamma = match scheme {
            SchemeId::PegEd => 0.0,
            _ => decoherence_prob(timing.tau_hop, config.noise.t_coh)?,
        };
        Ok(Self {
            scheme,
            noise: config.noise,
            nr: config.nr,
            p_gen: p_gen(&link),
            nmux: link.nmux,
            ncode: link.ncode,
            attempt_time: link.l0_km / link.c_km_s,
            pair_fidelities: timing.pair_fidelities,
            gamma,
            bsm_success: link.eta_d * link.eta_d / 2.0,
        })
    }
}

/// Attempt counts at which the first `ncode` of `nmux` parallel links
/// succeed, in increasing order.
pub fn sample_hop_attempts<R: Rng>(
    rng: &mut R,
    nmux: usize,
    ncode: usize,
    p: f64,
) -> Result<Vec<u64>> {
    check_probability("p", p)?;
    if ncode == 0 || ncode > nmux {
        return Err(Error::Config(format!(
            "cannot keep {ncode} of {nmux} links"
        )));
    }
    let geo = Geometric::new(p).map_err(|_| Error::InvalidParameter {
        name: "p",
        value: p,
    })?;
    let mut attempts: Vec<u64> = (0..nmux).map(|_| geo.sample(rng) + 1).collect();
    attempts.sort_unstable();
    attempts.truncate(ncode);
    Ok(attempts)
}

/// `n` independent draws of the `j`-th arrival among `nmux` links.
pub fn sample_attempt_counts(nmux: usize, j: usize, p: f64, n: u64, seed: u64) -> Result<Vec<u64>> {
    let batches = n.div_ceil(BATCH);
    let chunks = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b);
            (0..BATCH.min(n - b * BATCH))
                .map(|_| sample_hop_attempts(&mut rng, nmux, j, p).map(|a| a[j - 1]))
                .collect::<Result<Vec<u64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(chunks.concat())
}

/// Outcome of one sampled round.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub accepted: bool,
    pub z_error: bool,
    pub x_error: bool,
    /// Duration of the round's hop, `(2N + 1) L0 / c` for the last kept link.
    pub hop_time: f64,
    pub attempts: Vec<u64>,
}

/// Encoded pair on (A0 A1 A2 B0 B1 B2) after three teleported CNOTs.
fn encode_frame<R: Rng>(rng: &mut R, s: &Setup) -> Frame {
    let (beta, delta) = (s.noise.beta, s.noise.delta);
    let mut f = Frame::default();
    // |+_L⟩ on A: H(0) is ideal, the two CNOTs are noisy.
    f.depolarize(rng, beta, &[0, 1]);
    f.cnot(0, 1);
    f.depolarize(rng, beta, &[0, 2]);
    f.cnot(0, 2);
    for (j, &fid) in s.pair_fidelities.iter().enumerate() {
        f.depolarize(rng, 4.0 * (1.0 - fid) / 3.0, &[7 + 2 * j]);
    }
    for j in 0..3 {
        let (a_data, b_data, a_comm, b_comm) = (j, 3 + j, 6 + 2 * j, 7 + 2 * j);
        f.depolarize(rng, beta, &[a_data, a_comm]);
        f.cnot(a_data, a_comm);
        if flip(rng, delta) {
            f.x ^= 1 << a_comm;
        }
        f.cnot(a_comm, b_comm);
        f.depolarize(rng, beta, &[b_comm, b_data]);
        f.cnot(b_comm, b_data);
        if flip(rng, delta) {
            f.z ^= 1 << b_comm;
        }
        f.h(b_comm);
        f.cz(b_comm, a_data);
    }
    f.select(&[0, 1, 2, 3, 4, 5])
}

/// Swap of two encoded pairs; `None` when the C readouts disagree.
fn encoded_swap<R: Rng>(rng: &mut R, s: &Setup, stored: Frame, fresh: Frame) -> Option<Frame> {
    let (beta, delta) = (s.noise.beta, s.noise.delta);
    let mut f = stored.join(&fresh, 6);
    for q in 3..6 {
        f.depolarize(rng, s.gamma, &[q]);
    }
    let mut b_flips = [false; 3];
    let mut c_flips = [false; 3];
    for j in 0..3 {
        let (b, c) = (3 + j, 6 + j);
        f.depolarize(rng, beta, &[b, c]);
        f.cnot(b, c);
        f.h(b);
        b_flips[j] = f.x_bit(b) ^ flip(rng, delta);
        c_flips[j] = f.x_bit(c) ^ flip(rng, delta);
    }
    let all_flipped = c_flips.iter().all(|&b| b);
    if !(all_flipped || c_flips.iter().all(|&b| !b)) {
        return None;
    }
    if all_flipped {
        f.x ^= 0b111 << 9;
    }
    if b_flips.iter().filter(|&&b| b).count() % 2 == 1 {
        f.z ^= 1;
    }
    Some(f.select(&[0, 1, 2, 9, 10, 11]))
}

fn decode_encoded<R: Rng>(rng: &mut R, delta: f64, f: Frame) -> (bool, bool) {
    let read = |rng: &mut R, q: usize| f.x_bit(q) ^ flip(rng, delta);
    let a = [read(rng, 0), read(rng, 1), read(rng, 2)];
    let d = [read(rng, 3), read(rng, 4), read(rng, 5)];
    let z_error = majority3(a) != majority3(d);
    let x_error = (0..6).fold(false, |acc, q| acc ^ f.z_bit(q) ^ flip(rng, delta));
    (z_error, x_error)
}

/// Bell swap of pairs (A, B) and (C, D); readout noise and gate noise may be zero.
fn bell_swap<R: Rng>(
    rng: &mut R,
    s: &Setup,
    stored: Frame,
    fresh: Frame,
    beta: f64,
    delta: f64,
) -> Frame {
    let mut f = stored.join(&fresh, 2);
    f.depolarize(rng, s.gamma, &[1]);
    f.depolarize(rng, beta, &[1, 2]);
    f.cnot(1, 2);
    f.h(1);
    if f.x_bit(2) ^ flip(rng, delta) {
        f.x ^= 1 << 3;
    }
    if f.x_bit(1) ^ flip(rng, delta) {
        f.z ^= 1 << 3;
    }
    f.select(&[0, 3])
}

fn werner_frame<R: Rng>(rng: &mut R, fid: f64) -> Frame {
    let mut f = Frame::default();
    f.depolarize(rng, 4.0 * (1.0 - fid) / 3.0, &[1]);
    f
}

fn decode_bell<R: Rng>(rng: &mut R, delta: f64, f: Frame) -> (bool, bool) {
    let z_error = f.x_bit(0) ^ f.x_bit(1) ^ flip(rng, delta) ^ flip(rng, delta);
    let x_error = f.z_bit(0) ^ f.z_bit(1) ^ flip(rng, delta) ^ flip(rng, delta);
    (z_error, x_error)
}

fn sample_round<R: Rng>(rng: &mut R, s: &Setup) -> Result<TrajectorySample> {
    let attempts = sample_hop_attempts(rng, s.nmux, s.ncode, s.p_gen)?;
    let hop_time = (2.0 * *attempts.last().expect("ncode >= 1") as f64 + 1.0) * s.attempt_time;
    let rejected = TrajectorySample {
        accepted: false,
        z_error: false,
        x_error: false,
        hop_time,
        attempts: attempts.clone(),
    };
    let delta = s.noise.delta;
    let (z_error, x_error) = match s.scheme {
        SchemeId::SegEd | SchemeId::PegEd => {
            let mut current = encode_frame(rng, s);
            for _ in 0..s.nr {
                let fresh = encode_frame(rng, s);
                match encoded_swap(rng, s, current, fresh) {
                    Some(next) => current = next,
                    None => return Ok(rejected),
                }
            }
            decode_encoded(rng, delta, current)
        }
        SchemeId::SegNoEd => {
            let fid = s.pair_fidelities[0];
            let mut current = werner_frame(rng, fid);
            for _ in 0..s.nr {
                let fresh = werner_frame(rng, fid);
                current = bell_swap(rng, s, current, fresh, s.noise.beta, delta);
            }
            decode_bell(rng, delta, current)
        }
        SchemeId::SegProb => {
            let fid = s.pair_fidelities[0];
            let mut current = werner_frame(rng, fid);
            for _ in 0..s.nr {
                if !rng.random_bool(s.bsm_success) {
                    return Ok(rejected);
                }
                let fresh = werner_frame(rng, fid);
                current = bell_swap(rng, s, current, fresh, 0.0, 0.0);
            }
            decode_bell(rng, delta, current)
        }
    };
    Ok(TrajectorySample {
        accepted: true,
        z_error,
        x_error,
        hop_time,
        attempts,
    })
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    fn proportion(hits: u64, n: u64) -> Self {
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let mean = hits as f64 / n as f64;
        Self {
            mean,
            std_err: (mean * (1.0 - mean) / n as f64).sqrt(),
        }
    }

    /// Whether `value` lies within `k` standard errors, with `floor` as a
    /// minimum half-width for near-zero variances.
    pub fn contains(&self, value: f64, k: f64, floor: f64) -> bool {
        (self.mean - value).abs() <= (k * self.std_err).max(floor)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEstimate {
    pub scheme: SchemeId,
    pub trials: u64,
    pub accepted: u64,
    pub p_end: Estimate,
    pub e_z: Estimate,
    pub e_x: Estimate,
    /// Accepted rounds per second of sampled hop time.
    pub r_bit: Estimate,
    pub mean_hop_time: f64,
    /// Mean attempt count of the j-th kept link.
    pub mean_attempts: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    trials: u64,
    accepted: u64,
    z_errors: u64,
    x_errors: u64,
    time: f64,
    time_sq: f64,
    time_accepted: f64,
    attempts: Vec<f64>,
}

impl Tally {
    fn add(&mut self, s: &TrajectorySample) {
        self.trials += 1;
        self.time += s.hop_time;
        self.time_sq += s.hop_time * s.hop_time;
        if self.attempts.is_empty() {
            self.attempts = vec![0.0; s.attempts.len()];
        }
        for (a, &n) in self.attempts.iter_mut().zip(&s.attempts) {
            *a += n as f64;
        }
        if s.accepted {
            self.accepted += 1;
            self.time_accepted += s.hop_time;
            self.z_errors += u64::from(s.z_error);
            self.x_errors += u64::from(s.x_error);
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.accepted += other.accepted;
        self.z_errors += other.z_errors;
        self.x_errors += other.x_errors;
        self.time += other.time;
        self.time_sq += other.time_sq;
        self.time_accepted += other.time_accepted;
        if self.attempts.is_empty() {
            self.attempts = other.attempts;
        } else {
            for (a, b) in self.attempts.iter_mut().zip(other.attempts) {
                *a += b;
            }
        }
        self
    }
}

/// Samples `n` rounds of `scheme`. Batches draw from separate ChaCha20
/// streams of `seed`, so results do not depend on the thread count.
pub fn run_trajectories(
    scheme: SchemeId,
    config: &TrajectoryConfig,
    n: u64,
    seed: u64,
) -> Result<TrajectoryEstimate> {
    if n == 0 {
        return Err(Error::Config("trajectory count must be positive".into()));
    }
    let setup = Setup::new(scheme, config)?;
    let batches = n.div_ceil(BATCH);
    let tallies = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(n - b * BATCH);
            let mut tally = Tally::default();
            for _ in 0..count {
                tally.add(&sample_round(&mut rng, &setup)?);
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>>>()?;
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);

    let nf = t.trials as f64;
    let mean_time = t.time / nf;
    let rate = t.accepted as f64 / t.time;
    // Ratio estimator: var(a_i - R τ_i) / (n E[τ]^2).
    let var_num = (t.accepted as f64 - 2.0 * rate * t.time_accepted + rate * rate * t.time_sq) / nf;
    Ok(TrajectoryEstimate {
        scheme,
        trials: t.trials,
        accepted: t.accepted,
        p_end: Estimate::proportion(t.accepted, t.trials),
        e_z: Estimate::proportion(t.z_errors, t.accepted),
        e_x: Estimate::proportion(t.x_errors, t.accepted),
        r_bit: Estimate {
            mean: rate,
            std_err: (var_num.max(0.0) / nf).sqrt() / mean_time,
        },
        mean_hop_time: mean_time,
        mean_attempts: t.attempts.iter().map(|a| a / nf).collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkTimingEstimate {
    pub rounds: u64,
    pub mean_g_times: Vec<f64>,
    /// Fidelities averaged over the sampled waiting times.
    pub mean_pair_fidelities: Vec<f64>,
}

/// Samples the multiplexed link-generation process for `rounds` hops.
pub fn simulate_link_timing(
    link: &LinkParams,
    noise: &NoiseParams,
    rounds: u64,
    seed: u64,
) -> Result<LinkTimingEstimate> {
    link.validate()?;
    if rounds == 0 {
        return Err(Error::Config("round count must be positive".into()));
    }
    let p = p_gen(link);
    let step = link.l0_km / link.c_km_s;
    let batches = rounds.div_ceil(BATCH);
    let sums = (0..batches)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BATCH.min(rounds - b * BATCH);
            let mut g = vec![0.0; link.ncode];
            let mut fid = vec![0.0; link.ncode];
            for _ in 0..count {
                let attempts = sample_hop_attempts(&mut rng, link.nmux, link.ncode, p)?;
                let times: Vec<f64> = attempts
                    .iter()
                    .map(|&a| (2.0 * a as f64 + 1.0) * step)
                    .collect();
                let tau = *times.last().expect("ncode >= 1");
                for (j, &t) in times.iter().enumerate() {
                    g[j] += t;
                    let survive = 1.0 - decoherence_prob(tau - t, noise.t_coh)?;
                    let s2 = survive * survive;
                    fid[j] += s2 * noise.f0 + (1.0 - s2) / 4.0;
                }
            }
            Ok((g, fid))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = vec![0.0; link.ncode];
    let mut fid = vec![0.0; link.ncode];
    for (gb, fb) in sums {
        for j in 0..link.ncode {
            g[j] += gb[j];
            fid[j] += fb[j];
        }
    }
    let nf = rounds as f64;
    Ok(LinkTimingEstimate {
        rounds,
        mean_g_times: g.into_iter().map(|x| x / nf).collect(),
        mean_pair_fidelities: fid.into_iter().map(|x| x / nf).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_propagation() {
        let mut f = Frame { x: 1, z: 0 };
        f.cnot(0, 1);
        assert_eq!(f, Frame { x: 0b11, z: 0 });
        let mut f = Frame { x: 0, z: 0b10 };
        f.cnot(0, 1);
        assert_eq!(f, Frame { x: 0, z: 0b11 });
        let mut f = Frame { x: 1, z: 0 };
        f.h(0);
        assert_eq!(f, Frame { x: 0, z: 1 });
        let mut f = Frame { x: 1, z: 0 };
        f.cz(0, 1);
        assert_eq!(f, Frame { x: 1, z: 0b10 });
    }

    #[test]
    fn hop_attempts_sorted_and_truncated() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let a = sample_hop_attempts(&mut rng, 12, 3, 0.05).unwrap();
        assert_eq!(a.len(), 3);
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
        assert!(a[0] >= 1);
        assert!(sample_hop_attempts(&mut rng, 2, 3, 0.05).is_err());
    }

    #[test]
    fn noiseless_rounds_have_no_errors() {
        let config = TrajectoryConfig {
            link: LinkParams {
                p_cou: 1.0,
                eta_d: 1.0,
                alpha_db_km: 0.0,
                l0_km: 10.0,
                c_km_s: 200_000.0,
                nmux: 12,
                ncode: 3,
            },
            noise: NoiseParams::noiseless(),
            nr: 3,
        };
        for scheme in [SchemeId::SegEd, SchemeId::SegNoEd, SchemeId::PegEd] {
            let est = run_trajectories(scheme, &config, 500, 1).unwrap();
            assert_eq!(est.accepted, 500);
            assert_eq!(est.e_z.mean, 0.0);
            assert_eq!(est.e_x.mean, 0.0);
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let config = TrajectoryConfig {
            link: LinkParams {
                p_cou: 0.4,
                eta_d: 0.9,
                alpha_db_km: 0.15,
                l0_km: 40.0,
                c_km_s: 200_000.0,
                nmux: 12,
                ncode: 3,
            },
            noise: NoiseParams {
                f0: 0.99,
                beta: 0.001,
                delta: 0.001,
                t_coh: 1.0,
            },
            nr: 2,
        };
        let a = run_trajectories(SchemeId::SegEd, &config, 5000, 11).unwrap();
        let b = run_trajectories(SchemeId::SegEd, &config, 5000, 11).unwrap();
        assert_eq!(a, b);
    }
}
