//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::process::ExitCode;

use repeater_core::alt::{SchemeChain, SchemeId};
use repeater_core::metrics::{evaluate, max_range, plob_bound, scheme_chain, swaps_for_distance};
use repeater_core::noise::{decoherence_prob, NoiseParams};
use repeater_core::stage::{load_stage, HardwareParams};
use repeater_core::timing::timing_profile;
use repeater_core::validation::{
    check_attempts_mean, check_closed_forms, check_decomposition, check_ideal_swap,
    check_oracle_equivalence, check_stochastic, Check,
};
use repeater_core::Result;

const SEED: u64 = 20_240_601;

struct Criterion {
    name: &'static str,
    lines: Vec<String>,
    failures: usize,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            lines: Vec::new(),
            failures: 0,
        }
    }

    fn claim(&mut self, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        self.lines
            .push(format!("{} {detail}", if ok { "ok  " } else { "FAIL" }));
    }

    fn check(&mut self, check: &Check) {
        let ok = check.passed();
        self.claim(ok, check.to_string());
    }

    fn error(&mut self, err: repeater_core::Error) {
        self.claim(false, format!("error: {err}"));
    }

    fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn run(name: &'static str, body: impl FnOnce(&mut Criterion) -> Result<()>) -> Criterion {
    let mut c = Criterion::new(name);
    if let Err(e) = body(&mut c) {
        c.error(e);
    }
    c
}

fn stages() -> Result<Vec<(u8, HardwareParams)>> {
    (1..=3).map(|s| load_stage(s).map(|hw| (s, hw))).collect()
}

fn oracle_equivalence(c: &mut Criterion) -> Result<()> {
    for stage in 1..=3 {
        for l0 in [25.0, 50.0, 100.0] {
            for check in check_oracle_equivalence(stage, l0, 2)? {
                c.check(&check);
            }
        }
    }
    Ok(())
}

fn decomposition(c: &mut Criterion) -> Result<()> {
    c.check(&check_decomposition()?);
    Ok(())
}

fn ideal_swap(c: &mut Criterion) -> Result<()> {
    for check in check_ideal_swap()? {
        c.check(&check);
    }
    Ok(())
}

fn timing_statistics(c: &mut Criterion) -> Result<()> {
    let mut seed = SEED;
    for (nmux, j) in [(1, 1), (2, 2), (12, 3)] {
        for p in [0.01, 0.1, 0.5] {
            seed += 1;
            c.check(&check_attempts_mean(nmux, j, p, 1_000_000, seed)?);
        }
    }
    for check in check_closed_forms()? {
        c.check(&check);
    }
    Ok(())
}

const HOP_GRID: std::ops::RangeInclusive<u32> = 1..=30;

/// Best swapped-chain range and its hop length over the 5 km grid.
fn range_peak(scheme: SchemeId, hw: &HardwareParams) -> Result<(f64, f64)> {
    let mut best = (0.0, f64::NAN);
    for i in HOP_GRID {
        let l0 = 5.0 * i as f64;
        let r = max_range(scheme, hw, l0)?;
        if r.nr.is_some() && r.l_max_km > best.0 {
            best = (r.l_max_km, l0);
        }
    }
    Ok(best)
}

fn within(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn range_claims(c: &mut Criterion) -> Result<()> {
    let s1 = load_stage(1)?;
    let mut overall: f64 = 0.0;
    for scheme in SchemeId::ALL {
        let (range, l0) = range_peak(scheme, &s1)?;
        overall = overall.max(range);
        c.claim(
            within(l0, 15.0, 35.0),
            format!("stage 1 {scheme} optimal L0 = {l0} km (range {range} km), want [15, 35]"),
        );
    }
    c.claim(
        within(overall, 150.0, 250.0),
        format!("stage 1 best range over schemes = {overall} km, want [150, 250]"),
    );

    let s2 = load_stage(2)?;
    let seg = max_range(SchemeId::SegEd, &s2, 40.0)?.l_max_km;
    c.claim(
        within(seg, 1700.0, 2100.0),
        format!("stage 2 SEG-ED range at L0 = 40 km = {seg} km, want [1700, 2100]"),
    );
    let peg = max_range(SchemeId::PegEd, &s2, 40.0)?.l_max_km;
    c.claim(
        within(peg, 1890.0, 2310.0),
        format!("stage 2 PEG-ED range at L0 = 40 km = {peg} km, want [1890, 2310]"),
    );
    for scheme in [SchemeId::SegNoEd, SchemeId::SegProb] {
        let (range, l0) = range_peak(scheme, &s2)?;
        c.claim(
            within(range, 550.0, 850.0),
            format!("stage 2 {scheme} best range = {range} km at L0 = {l0} km, want [550, 850]"),
        );
    }
    Ok(())
}

const L0_DISTANCE: f64 = 50.0;

fn key_at(scheme: SchemeId, hw: &HardwareParams, l_km: f64) -> Result<f64> {
    Ok(evaluate(
        scheme,
        hw,
        L0_DISTANCE,
        swaps_for_distance(l_km, L0_DISTANCE),
    )?
    .k)
}

fn key_rate_claims(c: &mut Criterion) -> Result<()> {
    let s2 = load_stage(2)?;
    let k1000 = key_at(SchemeId::SegEd, &s2, 1000.0)?;
    let bound = 10.0 * plob_bound(1000.0, 0.1, 1e9);
    c.claim(
        k1000 > bound,
        format!("stage 2 SEG-ED K(1000 km) = {k1000:.4e} bit/s, want > {bound:.4e}"),
    );
    let k2000 = key_at(SchemeId::SegEd, &s2, 2000.0)?;
    c.claim(
        within(k2000, 0.03, 0.3),
        format!("stage 2 SEG-ED K(2000 km) = {k2000:.4e} bit/s, want [0.03, 0.3]"),
    );

    let s3 = load_stage(3)?;
    let k10000 = key_at(SchemeId::SegEd, &s3, 10_000.0)?;
    c.claim(
        k10000 > 1.0,
        format!("stage 3 SEG-ED K(10000 km) = {k10000:.4e} bit/s, want > 1"),
    );

    let mut violations = Vec::new();
    let mut points = 0;
    for nr in 1..=89 {
        let noed = evaluate(SchemeId::SegNoEd, &s3, L0_DISTANCE, nr)?.k;
        let seg = evaluate(SchemeId::SegEd, &s3, L0_DISTANCE, nr)?.k;
        let peg = evaluate(SchemeId::PegEd, &s3, L0_DISTANCE, nr)?.k;
        points += 1;
        if !(noed > seg && noed > peg) {
            violations.push((nr + 1) as f64 * L0_DISTANCE);
        }
    }
    c.claim(
        violations.is_empty(),
        format!(
            "stage 3 SEG-noED above SEG-ED and PEG-ED at {}/{points} grid points with L <= 4500 km{}",
            points - violations.len(),
            if violations.is_empty() {
                String::new()
            } else {
                format!(" (violations at {violations:?} km)")
            }
        ),
    );
    Ok(())
}

fn cost_claim(c: &mut Criterion) -> Result<()> {
    let s2 = load_stage(2)?;
    let mut best_ratio = f64::INFINITY;
    let mut at = f64::NAN;
    for nr in 9..=19 {
        let seg = evaluate(SchemeId::SegEd, &s2, L0_DISTANCE, nr)?.c_k;
        let peg = evaluate(SchemeId::PegEd, &s2, L0_DISTANCE, nr)?.c_k;
        if let (Some(seg), Some(peg)) = (seg, peg) {
            if seg / peg < best_ratio {
                best_ratio = seg / peg;
                at = (nr + 1) as f64 * L0_DISTANCE;
            }
        }
    }
    c.claim(
        best_ratio < 1.0,
        format!("stage 2 min C_K(SEG-ED)/C_K(PEG-ED) over 500..1000 km = {best_ratio:.4} at {at} km, want < 1"),
    );
    Ok(())
}

fn chain_states(
    scheme: SchemeId,
    hw: &HardwareParams,
    l0: f64,
    nr: usize,
) -> Result<Vec<repeater_core::seged::ChainResult>> {
    let (mut chain, _) = scheme_chain(scheme, hw, l0)?;
    let mut out = Vec::with_capacity(nr);
    for _ in 0..nr {
        chain.step()?;
        out.push(chain.result()?);
    }
    Ok(out)
}

fn end_errors(scheme: SchemeId, hw: &HardwareParams, nr: usize) -> Result<(f64, f64)> {
    let (mut chain, _): (SchemeChain, f64) = scheme_chain(scheme, hw, L0_DISTANCE)?;
    for _ in 0..nr {
        chain.step()?;
    }
    chain.error_rates()
}

fn properties(c: &mut Criterion) -> Result<()> {
    const TOL: f64 = 1e-12;
    const NR: usize = 20;
    for (stage, hw) in stages()? {
        for scheme in SchemeId::ALL {
            for l0 in [25.0, 50.0, 100.0] {
                let results = chain_states(scheme, &hw, l0, NR)?;
                let norm = results
                    .iter()
                    .map(|r| (r.lambda_end.total() - 1.0).abs())
                    .fold(0.0, f64::max);
                c.claim(
                    norm <= TOL,
                    format!("normalization {scheme} stage {stage} L0 = {l0}: max |sum - 1| = {norm:.2e}"),
                );
                let p: Vec<f64> = results.iter().map(|r| r.p_end).collect();
                let monotone = if scheme == SchemeId::SegNoEd {
                    p.iter().all(|&x| x == 1.0)
                } else {
                    p.windows(2).all(|w| w[1] < w[0])
                };
                c.claim(
                    monotone,
                    format!("p_end decreasing in Nr {scheme} stage {stage} L0 = {l0}: p_end({NR}) = {:.4e}", p[NR - 1]),
                );
                if scheme == SchemeId::SegProb {
                    let spread = results
                        .iter()
                        .map(|r| {
                            let w = r.lambda_end.weights();
                            (w[1] - w[2]).abs().max((w[2] - w[3]).abs())
                        })
                        .fold(0.0, f64::max);
                    c.claim(
                        spread <= TOL,
                        format!("Werner shape SEG-prob stage {stage} L0 = {l0}: max spread {spread:.2e}"),
                    );
                }
            }
        }
        let timing = timing_profile(&hw.link(L0_DISTANCE, 3), &hw.noise)?;
        let gamma = decoherence_prob(timing.tau_hop, hw.noise.t_coh)?;
        c.check(&check_stochastic(&hw.noise, gamma)?);
    }

    let base = load_stage(2)?;
    let betas = [0.0, 1e-3, 3e-3];
    let deltas = [0.0, 1e-3, 3e-3];
    let inv_tcoh = [0.0, 0.5, 2.0];
    for scheme in SchemeId::ALL {
        let mut grid = [[[(0.0, 0.0); 3]; 3]; 3];
        for (a, &beta) in betas.iter().enumerate() {
            for (b, &delta) in deltas.iter().enumerate() {
                for (t, &inv) in inv_tcoh.iter().enumerate() {
                    let hw = HardwareParams {
                        noise: NoiseParams {
                            beta,
                            delta,
                            t_coh: 1.0 / inv,
                            ..base.noise
                        },
                        ..base
                    };
                    grid[a][b][t] = end_errors(scheme, &hw, 10)?;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for t in 0..3 {
                    let here = grid[a][b][t];
                    let mut drop = |next: (f64, f64)| {
                        worst = worst.max(here.0 - next.0).max(here.1 - next.1);
                    };
                    if a < 2 {
                        drop(grid[a + 1][b][t]);
                    }
                    if b < 2 {
                        drop(grid[a][b + 1][t]);
                    }
                    if t < 2 {
                        drop(grid[a][b][t + 1]);
                    }
                }
            }
        }
        c.claim(
            worst <= TOL,
            format!("e_Z, e_X nondecreasing in beta, delta, 1/Tcoh for {scheme}: largest decrease {worst:.2e}"),
        );
    }

    for (stage, hw) in stages()? {
        let clean = hw.noiseless();
        for scheme in SchemeId::ALL {
            for nr in [1, 5, 25] {
                let r = evaluate(scheme, &clean, L0_DISTANCE, nr)?;
                let want_p = if scheme == SchemeId::SegProb {
                    (hw.eta_d * hw.eta_d / 2.0).powi(nr as i32)
                } else {
                    1.0
                };
                let dev = r.e_z.abs().max(r.e_x.abs()).max((r.p_end - want_p).abs());
                c.claim(
                    dev <= TOL,
                    format!("noiseless fixed point {scheme} stage {stage} Nr = {nr}: e_Z = {:.1e}, e_X = {:.1e}, p_end = {}", r.e_z, r.e_x, r.p_end),
                );
            }
        }
    }
    Ok(())
}

type Body = fn(&mut Criterion) -> Result<()>;

fn main() -> ExitCode {
    let suite: Vec<(&'static str, Body)> = vec![
        ("oracle equivalence", oracle_equivalence),
        ("decomposition identity", decomposition),
        ("ideal-swap calibration", ideal_swap),
        ("timing statistics", timing_statistics),
        ("range versus hop length", range_claims),
        ("key rate versus distance", key_rate_claims),
        ("normalized cost", cost_claim),
        ("property suite", properties),
    ];
    let verbose = std::env::var_os("ACCEPTANCE_VERBOSE").is_some();
    let mut failed = 0;
    for (name, body) in suite {
        let c = run(name, body);
        for line in c
            .lines
            .iter()
            .filter(|l| verbose || c.lines.len() <= 12 || l.starts_with("FAIL"))
        {
            println!("    {line}");
        }
        println!(
            "{} {} ({} checks, {} failed)",
            if c.passed() { "PASS" } else { "FAIL" },
            c.name,
            c.lines.len(),
            c.failures
        );
        if !c.passed() {
            failed += 1;
        }
    }
    println!("acceptance: {failed} of 8 criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
