//! CSV rows and the figure data sets.

use std::cmp::Ordering;
use std::io::Write;

use rayon::prelude::*;

use crate::alt::SchemeId;
use crate::error::{Error, Result};
use crate::metrics::{
    evaluate, max_range, plob_bound, swaps_for_distance, sweep_nr, PerformanceReport,
};
use crate::stage::{load_stage, HardwareParams};

pub const CSV_HEADER: [&str; 13] = [
    "scheme", "stage", "L0_km", "Nr", "L_km", "e_Z", "e_X", "r_inf", "R_bit_hz", "K_hz", "C_K",
    "p_end", "plob_hz",
];

/// Reference channel for the repeaterless bound column.
pub const PLOB_ALPHA_DB_KM: f64 = 0.1;
pub const PLOB_CLOCK_HZ: f64 = 1e9;

/// `printf("%.12g")`: 12 significant digits, trailing zeros removed.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (DIGITS - 1 - exp) as usize, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One CSV record. Metric fields are empty when undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub scheme: SchemeId,
    pub stage: String,
    pub l0_km: f64,
    pub nr: usize,
    pub l_km: f64,
    pub report: Option<PerformanceReport>,
    pub plob_hz: Option<f64>,
}

impl Row {
    pub fn from_report(report: PerformanceReport, stage: &str, with_plob: bool) -> Self {
        Self {
            scheme: report.scheme,
            stage: stage.to_string(),
            l0_km: report.l0_km,
            nr: report.nr,
            l_km: report.l_km,
            plob_hz: with_plob.then(|| plob_bound(report.l_km, PLOB_ALPHA_DB_KM, PLOB_CLOCK_HZ)),
            report: Some(report),
        }
    }

    pub fn record(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(format_g12).unwrap_or_default();
        let r = self.report.as_ref();
        vec![
            self.scheme.to_string(),
            self.stage.clone(),
            format_g12(self.l0_km),
            self.nr.to_string(),
            format_g12(self.l_km),
            opt(r.map(|r| r.e_z)),
            opt(r.map(|r| r.e_x)),
            opt(r.map(|r| r.r_inf)),
            opt(r.map(|r| r.r_bit)),
            opt(r.map(|r| r.k)),
            opt(r.and_then(|r| r.c_k)),
            opt(r.map(|r| r.p_end)),
            opt(self.plob_hz),
        ]
    }

    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.scheme
            .cmp(&other.scheme)
            .then_with(|| self.stage.cmp(&other.stage))
            .then_with(|| self.l0_km.total_cmp(&other.l0_km))
            .then_with(|| self.nr.cmp(&other.nr))
            .then_with(|| self.l_km.total_cmp(&other.l_km))
    }
}

pub fn sort_rows(rows: &mut [Row]) {
    rows.sort_by(Row::sort_key_cmp);
}

/// Writes the header and the rows in deterministic order.
pub fn write_csv<W: Write>(writer: W, rows: &mut [Row]) -> Result<()> {
    sort_rows(rows);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows.iter() {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FigureId {
    Fig4a,
    Fig4b,
    Fig5,
    Fig6,
}

impl FigureId {
    pub fn file_name(self) -> &'static str {
        match self {
            FigureId::Fig4a => "fig4a.csv",
            FigureId::Fig4b => "fig4b.csv",
            FigureId::Fig5 => "fig5.csv",
            FigureId::Fig6 => "fig6.csv",
        }
    }
}

pub fn hop_length_grid() -> Vec<f64> {
    (1..=30).map(|i| 5.0 * i as f64).collect()
}

pub const DISTANCE_FIGURE_L0_KM: f64 = 50.0;
pub const DISTANCE_FIGURE_MAX_KM: f64 = 12_000.0;
pub const FIG4B_DISTANCES_KM: [f64; 2] = [1000.0, 1500.0];

fn all_stages() -> Result<Vec<(u8, HardwareParams)>> {
    (1..=3).map(|s| load_stage(s).map(|hw| (s, hw))).collect()
}

/// Maximum range against hop length for every scheme and stage.
pub fn fig4a_rows() -> Result<Vec<Row>> {
    let stages = all_stages()?;
    let grid = &hop_length_grid();
    let jobs: Vec<_> = SchemeId::ALL
        .iter()
        .flat_map(|&sc| {
            stages
                .iter()
                .flat_map(move |st| grid.iter().map(move |&l0| (sc, st, l0)))
        })
        .collect();
    jobs.into_par_iter()
        .map(|(scheme, (stage, hw), l0)| {
            let range = max_range(scheme, hw, l0)?;
            let report = match range.nr {
                Some(nr) => Some(evaluate(scheme, hw, l0, nr)?),
                None => None,
            };
            Ok(Row {
                scheme,
                stage: stage.to_string(),
                l0_km: l0,
                nr: range.nr.unwrap_or(0),
                l_km: range.l_max_km,
                report,
                plob_hz: None,
            })
        })
        .collect()
}

/// Key rate against hop length at fixed total distances.
pub fn fig4b_rows() -> Result<Vec<Row>> {
    let stages = all_stages()?;
    let grid = &hop_length_grid();
    let jobs: Vec<_> = SchemeId::ALL
        .iter()
        .flat_map(|&sc| {
            stages.iter().flat_map(move |st| {
                FIG4B_DISTANCES_KM
                    .iter()
                    .flat_map(move |&l| grid.iter().map(move |&l0| (sc, st, l, l0)))
            })
        })
        .collect();
    jobs.into_par_iter()
        .map(|(scheme, (stage, hw), l, l0)| {
            let report = evaluate(scheme, hw, l0, swaps_for_distance(l, l0))?;
            Ok(Row::from_report(report, &stage.to_string(), true))
        })
        .collect()
}

/// Key rate and cost against total distance at a fixed hop length.
pub fn distance_rows(l0_km: f64, max_km: f64) -> Result<Vec<Row>> {
    let max_nr = ((max_km / l0_km).floor() as usize).saturating_sub(1);
    if max_nr == 0 {
        return Err(Error::Config(format!(
            "{max_km} km leaves no swaps at L0 = {l0_km} km"
        )));
    }
    let nrs: Vec<usize> = (1..=max_nr).collect();
    let stages = all_stages()?;
    let jobs: Vec<_> = SchemeId::ALL
        .iter()
        .flat_map(|&sc| stages.iter().map(move |st| (sc, st)))
        .collect();
    let nested = jobs
        .into_par_iter()
        .map(|(scheme, (stage, hw))| {
            Ok(sweep_nr(scheme, hw, l0_km, &nrs)?
                .into_iter()
                .map(|r| Row::from_report(r, &stage.to_string(), true))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(nested.concat())
}

pub fn figure_rows(id: FigureId) -> Result<Vec<Row>> {
    match id {
        FigureId::Fig4a => fig4a_rows(),
        FigureId::Fig4b => fig4b_rows(),
        FigureId::Fig5 | FigureId::Fig6 => {
            distance_rows(DISTANCE_FIGURE_L0_KM, DISTANCE_FIGURE_MAX_KM)
        }
    }
}
