//! Key-rate, cost and range figures of merit.

use rayon::prelude::*;
use serde::Serialize;

use crate::alt::{SchemeChain, SchemeId};
use crate::error::{check_probability, Error, Result};
use crate::stage::HardwareParams;
use crate::timing::timing_profile;

/// Range scans stop here and report the range as unbounded.
pub const RANGE_CAP_KM: f64 = 50_000.0;

/// Consecutive zero-key points required to end a range scan.
const RANGE_ZERO_RUN: usize = 3;

pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    Ok(-p * p.log2() - (1.0 - p) * (1.0 - p).log2())
}

/// Asymptotic secret fraction `max(0, 1 - h(e_Z) - h(e_X))`.
pub fn secret_fraction(e_z: f64, e_x: f64) -> f64 {
    let h = |e: f64| binary_entropy(e.clamp(0.0, 1.0)).expect("clamped");
    (1.0 - h(e_z) - h(e_x)).max(0.0)
}

pub fn raw_rate(p_end: f64, tau_hop: f64) -> Result<f64> {
    if !(tau_hop > 0.0) {
        return Err(Error::InvalidParameter {
            name: "tau_hop",
            value: tau_hop,
        });
    }
    Ok(p_end / tau_hop)
}

pub fn secret_key_rate(r_bit: f64, r_inf: f64) -> f64 {
    r_bit * r_inf
}

/// Average occupied qubits per secret bit. `accept_probs` lists the
/// probability that each swap passes its check; an aborted round releases
/// the qubits of all later hops.
pub fn normalized_cost(k: f64, nmux: usize, accept_probs: &[f64]) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::UndefinedCost);
    }
    let mut bracket = 2.0;
    let mut survive = 1.0;
    for &p in accept_probs
        .iter()
        .take(accept_probs.len().saturating_sub(1))
    {
        survive *= p;
        bracket += survive;
    }
    Ok(4.0 * nmux as f64 / k * bracket)
}

/// Repeaterless capacity `-log2(1-η)` times the clock rate; infinite at `L = 0`.
pub fn plob_bound(l_km: f64, alpha_db_km: f64, clock_hz: f64) -> f64 {
    let eta = 10f64.powf(-alpha_db_km * l_km / 10.0);
    if eta >= 1.0 {
        return f64::INFINITY;
    }
    clock_hz * -(-eta).ln_1p() / std::f64::consts::LN_2
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerformanceReport {
    pub scheme: SchemeId,
    pub l_km: f64,
    pub l0_km: f64,
    pub nr: usize,
    pub e_z: f64,
    pub e_x: f64,
    pub r_inf: f64,
    pub r_bit: f64,
    pub k: f64,
    /// `None` when no key is produced.
    pub c_k: Option<f64>,
    pub p_end: f64,
    pub tau_hop: f64,
}

fn report(
    scheme: SchemeId,
    chain: &SchemeChain,
    l0_km: f64,
    tau_hop: f64,
    nmux: usize,
) -> Result<PerformanceReport> {
    let nr = chain.swaps();
    let (e_z, e_x) = chain.error_rates()?;
    let p_end = chain.p_end();
    let r_inf = secret_fraction(e_z, e_x);
    let r_bit = raw_rate(p_end, tau_hop)?;
    let k = secret_key_rate(r_bit, r_inf);
    // Parallel generation holds every hop's qubits until the round ends.
    let c_k = if scheme == SchemeId::PegEd {
        normalized_cost(k, nmux, &vec![1.0; nr]).ok()
    } else {
        normalized_cost(k, nmux, chain.accept_probs()).ok()
    };
    Ok(PerformanceReport {
        scheme,
        l_km: (nr + 1) as f64 * l0_km,
        l0_km,
        nr,
        e_z,
        e_x,
        r_inf,
        r_bit,
        k,
        c_k,
        p_end,
        tau_hop,
    })
}

/// Chain for `scheme` on hardware `hw` with hop length `l0_km`, plus `τ_hop`.
pub fn scheme_chain(
    scheme: SchemeId,
    hw: &HardwareParams,
    l0_km: f64,
) -> Result<(SchemeChain, f64)> {
    let timing = timing_profile(&hw.link(l0_km, scheme.ncode()), &hw.noise)?;
    let chain = SchemeChain::new(scheme, &timing, &hw.noise, hw.eta_d)?;
    Ok((chain, timing.tau_hop))
}

pub fn evaluate(
    scheme: SchemeId,
    hw: &HardwareParams,
    l0_km: f64,
    nr: usize,
) -> Result<PerformanceReport> {
    Ok(sweep_nr(scheme, hw, l0_km, &[nr])?.remove(0))
}

/// Reports at every swap count in `nrs`, evaluated in one pass along the chain.
pub fn sweep_nr(
    scheme: SchemeId,
    hw: &HardwareParams,
    l0_km: f64,
    nrs: &[usize],
) -> Result<Vec<PerformanceReport>> {
    if nrs.contains(&0) {
        return Err(Error::Config("swap counts must be at least 1".into()));
    }
    let mut order: Vec<usize> = (0..nrs.len()).collect();
    order.sort_by_key(|&i| nrs[i]);
    let (mut chain, tau) = scheme_chain(scheme, hw, l0_km)?;
    let mut out = vec![None; nrs.len()];
    for i in order {
        while chain.swaps() < nrs[i] {
            chain.step()?;
        }
        out[i] = Some(report(scheme, &chain, l0_km, tau, hw.nmux)?);
    }
    Ok(out.into_iter().map(|r| r.expect("filled")).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeResult {
    pub l_max_km: f64,
    /// Swap count at the reported range; `None` for a single unswapped link.
    pub nr: Option<usize>,
    /// The scan hit [`RANGE_CAP_KM`] with key still positive.
    pub unbounded: bool,
}

/// Largest `(nr+1)·L0` with a positive secret fraction.
pub fn max_range(scheme: SchemeId, hw: &HardwareParams, l0_km: f64) -> Result<RangeResult> {
    let (mut chain, _) = scheme_chain(scheme, hw, l0_km)?;
    let (e_z, e_x) = chain.error_rates()?;
    let single_link = secret_fraction(e_z, e_x) > 0.0;
    let mut best: Option<usize> = None;
    let mut zeros = 0;
    while zeros < RANGE_ZERO_RUN {
        chain.step()?;
        let nr = chain.swaps();
        let l = (nr + 1) as f64 * l0_km;
        let (e_z, e_x) = chain.error_rates()?;
        if secret_fraction(e_z, e_x) > 0.0 {
            best = Some(nr);
            zeros = 0;
            if l >= RANGE_CAP_KM {
                return Ok(RangeResult {
                    l_max_km: l,
                    nr: best,
                    unbounded: true,
                });
            }
        } else {
            zeros += 1;
        }
    }
    Ok(match best {
        Some(nr) => RangeResult {
            l_max_km: (nr + 1) as f64 * l0_km,
            nr: Some(nr),
            unbounded: false,
        },
        None => RangeResult {
            l_max_km: if single_link { l0_km } else { 0.0 },
            nr: None,
            unbounded: false,
        },
    })
}

/// Swap count whose distance `(nr+1)·L0` is closest to `l_km`, at least 1.
pub fn swaps_for_distance(l_km: f64, l0_km: f64) -> usize {
    ((l_km / l0_km).round() as usize).saturating_sub(1).max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HopObjective {
    Range,
    /// Secret key rate at the given total distance in km.
    SkrAt(f64),
}

/// Objective value for one hop length.
pub fn hop_objective(
    scheme: SchemeId,
    hw: &HardwareParams,
    objective: HopObjective,
    l0_km: f64,
) -> Result<f64> {
    match objective {
        HopObjective::Range => Ok(max_range(scheme, hw, l0_km)?.l_max_km),
        HopObjective::SkrAt(l_km) => {
            Ok(evaluate(scheme, hw, l0_km, swaps_for_distance(l_km, l0_km))?.k)
        }
    }
}

/// Grid search over hop lengths; ties go to the smaller `L0`.
pub fn optimize_hop_length(
    scheme: SchemeId,
    hw: &HardwareParams,
    objective: HopObjective,
    grid: &[f64],
) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::Config("empty hop-length grid".into()));
    }
    let values = grid
        .par_iter()
        .map(|&l0| hop_objective(scheme, hw, objective, l0).map(|v| (l0, v)))
        .collect::<Result<Vec<_>>>()?;
    let best = values
        .into_iter()
        .fold(None, |acc: Option<(f64, f64)>, (l0, v)| match acc {
            Some((bl, bv)) if bv > v || (bv == v && bl <= l0) => Some((bl, bv)),
            _ => Some((l0, v)),
        });
    match best {
        Some((l0, v)) if v > 0.0 => Ok((l0, v)),
        _ => Err(Error::NoFeasibleHopLength),
    }
}
