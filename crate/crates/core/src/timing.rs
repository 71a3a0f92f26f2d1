//! Link generation statistics and per-hop waiting times.
//!
//! Each hop runs `nmux` parallel heralded attempts per round. The hop is
//! ready once `ncode` of them have succeeded, i.e. after the `ncode`-th order
//! statistic of `nmux` i.i.d. geometric attempt counts.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::{decoherence_prob, NoiseParams};

/// Speed of light in fiber, km/s.
pub const FIBER_LIGHT_SPEED: f64 = 200_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    pub p_cou: f64,
    pub eta_d: f64,
    /// Fiber attenuation in dB/km.
    pub alpha_db_km: f64,
    pub l0_km: f64,
    pub c_km_s: f64,
    pub nmux: usize,
    pub ncode: usize,
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_cou", self.p_cou), ("eta_D", self.eta_d)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter { name, value: v });
            }
        }
        if !(self.alpha_db_km >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "alpha_ch",
                value: self.alpha_db_km,
            });
        }
        if !(self.l0_km > 0.0) {
            return Err(Error::InvalidParameter {
                name: "L0",
                value: self.l0_km,
            });
        }
        if !(self.c_km_s > 0.0) {
            return Err(Error::InvalidParameter {
                name: "c",
                value: self.c_km_s,
            });
        }
        if self.ncode == 0 || self.nmux < self.ncode {
            return Err(Error::Config(format!(
                "need 1 <= ncode <= nmux, got ncode={} nmux={}",
                self.ncode, self.nmux
            )));
        }
        Ok(())
    }

    /// Channel transmissivity over one hop.
    pub fn transmissivity(&self) -> f64 {
        10f64.powf(-self.alpha_db_km * self.l0_km / 10.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingProfile {
    /// Mean time until the j-th pair of a hop is heralded, seconds.
    pub g_times: Vec<f64>,
    pub tau_hop: f64,
    /// Fidelity of the j-th pair after waiting for the last one.
    pub pair_fidelities: Vec<f64>,
}

impl TimingProfile {
    pub fn ncode(&self) -> usize {
        self.g_times.len()
    }
}

/// Success probability of one heralded link attempt.
pub fn p_gen(params: &LinkParams) -> f64 {
    params.p_cou.powi(2) * params.eta_d.powi(2) / 2.0 * params.transmissivity()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_order(j: usize, nmux: usize, p: f64) -> Result<()> {
    if j == 0 || j > nmux {
        return Err(Error::Config(format!("order index {j} not in 1..={nmux}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            value: p,
        });
    }
    Ok(())
}

/// `P(N_j <= k)`: probability that at least `j` of `nmux` geometric trials
/// have succeeded within `k` attempts.
pub fn attempts_cdf(k: u64, j: usize, nmux: usize, p: f64) -> Result<f64> {
    check_order(j, nmux, p)?;
    let done = 1.0 - (1.0 - p).powf(k as f64);
    let pending = 1.0 - done;
    Ok((j..=nmux)
        .map(|l| binomial(nmux, l) * done.powi(l as i32) * pending.powi((nmux - l) as i32))
        .sum())
}

/// `1 - q^m` for `q = 1 - p`, accurate for small `p`.
fn one_minus_q_pow(p: f64, m: usize) -> f64 {
    -(m as f64 * (-p).ln_1p()).exp_m1()
}

/// Exact mean of the `j`-th order statistic of `nmux` geometric attempt counts.
pub fn expected_attempts(j: usize, nmux: usize, p: f64) -> Result<f64> {
    check_order(j, nmux, p)?;
    let mut total = 0.0;
    for l in 0..j {
        let inner: f64 = (0..=l)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * binomial(l, i) / one_minus_q_pow(p, nmux - l + i)
            })
            .sum();
        total += binomial(nmux, l) * inner;
    }
    Ok(total)
}

/// Closed-form double sum `1 + Σ_k Σ_l C(k,l) q^m/(1-q^m)`, `m = nmux+l-k`.
///
/// Agrees with [`expected_attempts`] for `j = 1` only; kept for comparison.
pub fn expected_attempts_double_sum(j: usize, nmux: usize, p: f64) -> Result<f64> {
    check_order(j, nmux, p)?;
    let mut total = 1.0;
    for k in 0..j {
        for l in 0..=k {
            let m = nmux + l - k;
            let denom = one_minus_q_pow(p, m);
            total += binomial(k, l) * (1.0 - denom) / denom;
        }
    }
    Ok(total)
}

/// Mean waiting times and the fidelities of the pairs used for one hop.
pub fn timing_profile(link: &LinkParams, noise: &NoiseParams) -> Result<TimingProfile> {
    link.validate()?;
    let p = p_gen(link);
    let g_times = (1..=link.ncode)
        .map(|j| {
            expected_attempts(j, link.nmux, p).map(|e| (2.0 * e + 1.0) * link.l0_km / link.c_km_s)
        })
        .collect::<Result<Vec<_>>>()?;
    let tau_hop = *g_times.last().expect("ncode >= 1");
    let pair_fidelities = g_times
        .iter()
        .map(|&g| {
            let survive = 1.0 - decoherence_prob((tau_hop - g).max(0.0), noise.t_coh)?;
            let s2 = survive * survive;
            Ok(s2 * noise.f0 + (1.0 - s2) / 4.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimingProfile {
        g_times,
        tau_hop,
        pair_fidelities,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn stage2_link(l0_km: f64, ncode: usize) -> LinkParams {
        LinkParams {
            p_cou: 0.4,
            eta_d: 0.9,
            alpha_db_km: 0.15,
            l0_km,
            c_km_s: FIBER_LIGHT_SPEED,
            nmux: 12,
            ncode,
        }
    }

    #[test]
    fn p_gen_examples() {
        let ideal = LinkParams {
            p_cou: 1.0,
            eta_d: 1.0,
            alpha_db_km: 0.0,
            ..stage2_link(123.0, 1)
        };
        assert_eq!(p_gen(&ideal), 0.5);
        assert_relative_eq!(p_gen(&stage2_link(50.0, 3)), 0.011523, max_relative = 1e-4);
        let ratio = p_gen(&stage2_link(100.0, 3)) / p_gen(&stage2_link(50.0, 3));
        assert_relative_eq!(ratio, 10f64.powf(-0.75), max_relative = 1e-12);
    }

    #[test]
    fn cdf_examples() {
        for k in 0..10u64 {
            let geo = 1.0 - 0.7f64.powi(k as i32);
            assert_abs_diff_eq!(attempts_cdf(k, 1, 1, 0.3).unwrap(), geo, epsilon = 1e-15);
        }
        assert_eq!(attempts_cdf(0, 2, 5, 0.4).unwrap(), 0.0);
        assert_abs_diff_eq!(attempts_cdf(2, 2, 2, 0.5).unwrap(), 0.5625, epsilon = 1e-15);
        assert!(attempts_cdf(3, 0, 2, 0.5).is_err());
        assert!(attempts_cdf(3, 3, 2, 0.5).is_err());
    }

    #[test]
    fn expected_attempts_examples() {
        assert_abs_diff_eq!(expected_attempts(1, 1, 0.5).unwrap(), 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            expected_attempts(2, 2, 0.5).unwrap(),
            8.0 / 3.0,
            epsilon = 1e-14
        );
        assert!(expected_attempts(1, 1, 0.0).is_err());
    }

    #[test]
    fn double_sum_agrees_only_for_first_order_statistic() {
        for &(n, p) in &[(1usize, 0.3), (12, 0.01), (5, 0.5)] {
            assert_relative_eq!(
                expected_attempts_double_sum(1, n, p).unwrap(),
                expected_attempts(1, n, p).unwrap(),
                max_relative = 1e-12
            );
        }
        let exact = expected_attempts(2, 2, 0.1).unwrap();
        let closed = expected_attempts_double_sum(2, 2, 0.1).unwrap();
        assert!((closed - exact).abs() > 1.0);
    }

    #[test]
    fn profile_single_pair_has_no_extra_wait() {
        let noise = NoiseParams {
            f0: 0.99,
            beta: 0.0,
            delta: 0.0,
            t_coh: 1.0,
        };
        let t = timing_profile(&stage2_link(50.0, 1), &noise).unwrap();
        assert_eq!(t.tau_hop, t.g_times[0]);
        assert_eq!(t.pair_fidelities, vec![0.99]);
    }

    #[test]
    fn profile_without_decoherence_keeps_f0() {
        let noise = NoiseParams {
            f0: 0.97,
            beta: 0.0,
            delta: 0.0,
            t_coh: f64::INFINITY,
        };
        let t = timing_profile(&stage2_link(50.0, 3), &noise).unwrap();
        assert_eq!(t.pair_fidelities, vec![0.97; 3]);
    }

    #[test]
    fn profile_ordering() {
        let noise = NoiseParams {
            f0: 0.99,
            beta: 0.001,
            delta: 0.001,
            t_coh: 1.0,
        };
        let t = timing_profile(&stage2_link(50.0, 3), &noise).unwrap();
        assert!(t.g_times.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.pair_fidelities.windows(2).all(|w| w[0] <= w[1]));
        assert!(t.pair_fidelities[0] < 0.99);
        assert_eq!(t.pair_fidelities[2], 0.99);
        let shorter = timing_profile(&stage2_link(40.0, 3), &noise).unwrap();
        assert!(shorter.tau_hop < t.tau_hop);
    }
}
