//! Command-line interface: presets, single points, sweeps, figures, validation.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::alt::SchemeId;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, swaps_for_distance, sweep_nr};
use crate::oracle::{run_trajectories, TrajectoryConfig};
use crate::output::{figure_rows, format_g12, write_csv, FigureId, Row, CSV_HEADER};
use crate::stage::{load_stage, HardwareParams};
use crate::validation::{run_validation, Level};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "repeater", version, about = "Repeater chain key-rate engine")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one scheme at one hop length and swap count.
    Single(SingleArgs),
    /// Evaluate schemes over a grid of hop lengths and distances or swap counts.
    Sweep(SweepArgs),
    /// Write the data set behind one figure.
    Figure(FigureArgs),
    /// Check the analytic engine against the oracles.
    Validate(ValidateArgs),
    /// Print the hardware stage presets.
    Stages,
}

#[derive(Debug, Clone, Args)]
pub struct HardwareArgs {
    /// Hardware preset (1, 2 or 3); defaults to the config file's stage, then 2.
    #[arg(long)]
    pub stage: Option<u8>,
    /// Parallel link slots per hop.
    #[arg(long)]
    pub nmux: Option<usize>,
    /// TOML file of key = value overrides on top of the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SingleArgs {
    #[arg(long)]
    pub scheme: SchemeId,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    #[arg(long)]
    pub l0_km: f64,
    #[arg(
        long,
        conflicts_with = "distance_km",
        required_unless_present = "distance_km"
    )]
    pub nr: Option<usize>,
    /// Total distance; the swap count is the nearest that fits whole hops.
    #[arg(long)]
    pub distance_km: Option<f64>,
    /// Also write the row as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cross-check with sampled trajectories.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Comma-separated values and inclusive `start:stop:step` ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse grid '{s}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let mut out = Vec::new();
        for item in s.split(',').filter(|t| !t.trim().is_empty()) {
            let parts: Vec<&str> = item.split(':').collect();
            match parts.as_slice() {
                [v] => out.push(num(v)?),
                [a, b, step] => {
                    let (a, b, step) = (num(a)?, num(b)?, num(step)?);
                    if !(step > 0.0) || b < a {
                        return Err(bad());
                    }
                    let n = ((b - a) / step + 1e-9).floor() as usize;
                    out.extend((0..=n).map(|i| a + i as f64 * step));
                }
                _ => return Err(bad()),
            }
        }
        if out.is_empty() || out.iter().any(|v| !v.is_finite()) {
            return Err(bad());
        }
        Ok(Grid(out))
    }
}

impl Grid {
    fn positive_integers(&self) -> Result<Vec<usize>> {
        self.0
            .iter()
            .map(|&v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Config(format!(
                        "swap count {v} is not a positive integer"
                    )))
                }
            })
            .collect()
    }
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("axis").required(true).args(["distance_km", "nr"]))]
pub struct SweepArgs {
    /// Schemes to evaluate, comma separated; all four by default.
    #[arg(long, value_delimiter = ',')]
    pub scheme: Vec<SchemeId>,
    #[command(flatten)]
    pub hardware: HardwareArgs,
    #[arg(long)]
    pub l0_km: Grid,
    #[arg(long)]
    pub distance_km: Option<Grid>,
    #[arg(long)]
    pub nr: Option<Grid>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, value_enum)]
    pub id: FigureId,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value_t = Level::Fast)]
    pub level: Level,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

/// Flat override file; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub stage: Option<u8>,
    pub p_cou: Option<f64>,
    pub eta_d: Option<f64>,
    pub alpha_db_km: Option<f64>,
    pub f0: Option<f64>,
    pub beta: Option<f64>,
    pub delta: Option<f64>,
    pub t_coh: Option<f64>,
    pub c_km_s: Option<f64>,
    pub nmux: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn overrides_physics(&self) -> bool {
        [
            self.p_cou,
            self.eta_d,
            self.alpha_db_km,
            self.f0,
            self.beta,
            self.delta,
            self.t_coh,
            self.c_km_s,
        ]
        .iter()
        .any(Option::is_some)
    }
}

/// Hardware after preset, file and flag overrides, with its CSV stage label.
pub fn resolve_hardware(args: &HardwareArgs) -> Result<(HardwareParams, String)> {
    let file = match &args.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let stage = args.stage.or(file.stage).unwrap_or(2);
    let mut hw = load_stage(stage)?;
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    set(&mut hw.p_cou, file.p_cou);
    set(&mut hw.eta_d, file.eta_d);
    set(&mut hw.alpha_db_km, file.alpha_db_km);
    set(&mut hw.noise.f0, file.f0);
    set(&mut hw.noise.beta, file.beta);
    set(&mut hw.noise.delta, file.delta);
    set(&mut hw.noise.t_coh, file.t_coh);
    set(&mut hw.c_km_s, file.c_km_s);
    if let Some(n) = args.nmux.or(file.nmux) {
        hw.nmux = n;
    }
    hw.noise.validate()?;
    hw.link(1.0, 1).validate()?;
    let label = if file.overrides_physics() {
        "custom".to_string()
    } else {
        stage.to_string()
    };
    Ok((hw, label))
}

fn cmd_single(args: &SingleArgs, out: &mut dyn Write) -> Result<()> {
    let (hw, label) = resolve_hardware(&args.hardware)?;
    let nr = match (args.nr, args.distance_km) {
        (Some(nr), _) => nr,
        (None, Some(l)) => swaps_for_distance(l, args.l0_km),
        (None, None) => {
            return Err(Error::Config(
                "one of --nr or --distance-km is required".into(),
            ))
        }
    };
    let report = evaluate(args.scheme, &hw, args.l0_km, nr)?;
    let row = Row::from_report(report, &label, true);
    for (key, value) in CSV_HEADER.iter().zip(row.record()) {
        writeln!(out, "{key} = {value}")?;
    }
    if args.oracle {
        let config = TrajectoryConfig {
            link: hw.link(args.l0_km, args.scheme.ncode()),
            noise: hw.noise,
            nr,
        };
        let est = run_trajectories(args.scheme, &config, args.samples, args.seed)?;
        writeln!(out, "trajectory.seed = {}", args.seed)?;
        writeln!(out, "trajectory.samples = {}", est.trials)?;
        for (name, e) in [
            ("p_end", est.p_end),
            ("e_Z", est.e_z),
            ("e_X", est.e_x),
            ("R_bit_hz", est.r_bit),
        ] {
            writeln!(
                out,
                "trajectory.{name} = {} +- {}",
                format_g12(e.mean),
                format_g12(e.std_err)
            )?;
        }
    }
    if let Some(path) = &args.out {
        write_csv(fs::File::create(path)?, &mut [row])?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let (hw, label) = resolve_hardware(&args.hardware)?;
    let schemes: Vec<SchemeId> = if args.scheme.is_empty() {
        SchemeId::ALL.to_vec()
    } else {
        args.scheme.clone()
    };
    let mut rows = Vec::new();
    for &scheme in &schemes {
        for &l0 in &args.l0_km.0 {
            let nrs = match (&args.nr, &args.distance_km) {
                (Some(g), None) => g.positive_integers()?,
                (None, Some(g)) => g.0.iter().map(|&l| swaps_for_distance(l, l0)).collect(),
                _ => {
                    return Err(Error::Config(
                        "give exactly one of --nr or --distance-km".into(),
                    ))
                }
            };
            rows.extend(
                sweep_nr(scheme, &hw, l0, &nrs)?
                    .into_iter()
                    .map(|r| Row::from_report(r, &label, true)),
            );
        }
    }
    match &args.out {
        Some(path) => write_csv(fs::File::create(path)?, &mut rows),
        None => write_csv(out, &mut rows),
    }
}

fn cmd_figure(args: &FigureArgs, out: &mut dyn Write) -> Result<()> {
    let mut rows = figure_rows(args.id)?;
    fs::create_dir_all(&args.out)?;
    let path = args.out.join(args.id.file_name());
    write_csv(fs::File::create(&path)?, &mut rows)?;
    writeln!(out, "wrote {} ({} rows)", path.display(), rows.len())?;
    Ok(())
}

fn cmd_stages(out: &mut dyn Write) -> Result<()> {
    writeln!(
        out,
        "stage p_cou eta_d alpha_db_km F0 beta delta Tcoh_s c_km_s Nmux"
    )?;
    for n in 1..=3 {
        let hw = load_stage(n)?;
        writeln!(
            out,
            "{n} {} {} {} {} {} {} {} {} {}",
            hw.p_cou,
            hw.eta_d,
            hw.alpha_db_km,
            hw.noise.f0,
            hw.noise.beta,
            hw.noise.delta,
            hw.noise.t_coh,
            hw.c_km_s,
            hw.nmux
        )?;
    }
    Ok(())
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

/// Runs a parsed command, writing the report to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> u8 {
    let result = match &cli.command {
        Command::Single(a) => cmd_single(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Figure(a) => cmd_figure(a, out),
        Command::Stages => cmd_stages(out),
        Command::Validate(a) => match run_validation(a.level, a.seed) {
            Ok(checks) => {
                let mut failed = 0;
                let mut write_all = || -> io::Result<()> {
                    for c in &checks {
                        writeln!(out, "{c}")?;
                        failed += usize::from(!c.passed());
                    }
                    writeln!(
                        out,
                        "SUMMARY {} checks, {failed} failed, seed={}",
                        checks.len(),
                        a.seed
                    )
                };
                match write_all() {
                    Ok(()) if failed > 0 => return EXIT_VALIDATION,
                    Ok(()) => Ok(()),
                    Err(e) => Err(e.into()),
                }
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    ExitCode::from(run(&cli, &mut lock))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!("50".parse::<Grid>().unwrap().0, vec![50.0]);
        assert_eq!(
            "25,50,100".parse::<Grid>().unwrap().0,
            vec![25.0, 50.0, 100.0]
        );
        assert_eq!(
            "5:20:5".parse::<Grid>().unwrap().0,
            vec![5.0, 10.0, 15.0, 20.0]
        );
        assert_eq!("0.1:0.3:0.1".parse::<Grid>().unwrap().0.len(), 3);
        assert!("5:1:1".parse::<Grid>().is_err());
        assert!("abc".parse::<Grid>().is_err());
        assert!(Grid(vec![1.5]).positive_integers().is_err());
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
