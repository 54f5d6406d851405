use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use mirror_grape::analysis::{contour_grid, format_table, response_curve, table_one_report, TableRow, CONTOUR_LEVELS};
use mirror_grape::ensemble::{build_ensemble, symmetric_linspace, Ensemble, EnsembleGrid, FidelityKind};
use mirror_grape::grape::{optimize_with_report, OptimizationConfig, OptimizationConfigFile};
use mirror_grape::interferometer::{contrast_sweep, ThermalModel};
use mirror_grape::io::{self, RunMetadata};
use mirror_grape::pulse::{catalog_entry, discretize, PulseWaveform, CATALOG};
use mirror_grape::raman::{gaussian_momentum, peak_population, raman_scan, RamanScanConfig, SublevelSet};
use mirror_grape::units::{parse_fraction, parse_frequency, parse_rabi_multiple, parse_temperatures};
use mirror_grape::Result;

/// Design and evaluate robust mirror pulses for atom interferometry.
#[derive(Parser)]
#[command(name = "mirror-grape", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Composite pulse catalog.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
    /// Optimize a mirror pulse over an ensemble.
    Optimize(OptimizeArgs),
    /// Population and phase against detuning.
    Respond {
        #[arg(long)]
        pulse: PathBuf,
        /// Half range in units of the pulse's nominal Rabi frequency.
        #[arg(long, default_value = "3", value_parser = parse_rabi_multiple)]
        range: f64,
        #[arg(long, default_value_t = 1201)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Population over detuning and coupling scale.
    Contour {
        #[arg(long)]
        pulse: PathBuf,
        /// Detuning half range in units of the nominal Rabi frequency.
        #[arg(long, default_value = "3", value_parser = parse_rabi_multiple)]
        drange: f64,
        /// Coupling half range as a fraction (`0.5` or `50%`).
        #[arg(long, default_value = "0.5", value_parser = parse_fraction)]
        crange: f64,
        #[arg(long, default_value_t = 101)]
        res: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Robustness table for the catalog plus the given pulses.
    Report {
        #[arg(long, num_args = 0..)]
        pulses: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Thermally averaged Mach-Zehnder contrast.
    MzContrast {
        #[arg(long)]
        beamsplitter: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        mirrors: Vec<PathBuf>,
        /// Comma-separated temperatures in µK.
        #[arg(long)]
        temps: String,
        #[arg(long, default_value_t = mirror_grape::interferometer::DEFAULT_QUADRATURE_ORDER)]
        quadrature_order: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Raman inversion against laser detuning over sublevels and momenta.
    RamanScan {
        #[arg(long)]
        pulse: PathBuf,
        /// Sublevel profile JSON; the built-in profile when absent.
        #[arg(long)]
        profile: Option<PathBuf>,
        /// Momentum CSV; a Gaussian of FWHM 1.5 Ω when absent.
        #[arg(long)]
        momentum: Option<PathBuf>,
        /// Effective Rabi frequency the pulse is played at.
        #[arg(long, default_value = "360kHz", value_parser = parse_frequency)]
        rabi: f64,
        /// Laser detuning half range in units of `--rabi`.
        #[arg(long, default_value = "2", value_parser = parse_rabi_multiple)]
        range: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    /// Write a catalog pulse as a pulse file.
    Emit {
        name: String,
        #[arg(long, default_value = "200kHz", value_parser = parse_frequency)]
        rabi: f64,
        /// Slice into steps no longer than this many seconds.
        #[arg(long)]
        timestep: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct OptimizeArgs {
    /// Optimization config JSON; defaults apply when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ensemble JSON; overrides the grid options below.
    #[arg(long)]
    ensemble: Option<PathBuf>,
    #[arg(long, default_value = "real")]
    fidelity: FidelityKind,
    /// Starting pulse; otherwise the config's `initial` section or a flat pulse.
    #[arg(long)]
    initial: Option<PathBuf>,
    #[arg(long, default_value = "200kHz", value_parser = parse_frequency)]
    rabi: f64,
    /// Flat seed duration in seconds.
    #[arg(long, default_value_t = 20e-6)]
    duration: f64,
    #[arg(long, default_value_t = 20)]
    n_detuning: usize,
    /// Detuning half range in units of `--rabi`.
    #[arg(long, default_value_t = 1.5)]
    detuning_range: f64,
    #[arg(long, default_value_t = 5)]
    n_coupling: usize,
    #[arg(long, default_value_t = 0.1)]
    coupling_range: f64,
    #[arg(long, default_value_t = 8)]
    near_resonance: usize,
    #[arg(long)]
    out: PathBuf,
}

fn finish(out: &Path, start: Instant, meta: impl FnOnce(RunMetadata) -> RunMetadata) -> Result<()> {
    let base = RunMetadata::new(std::env::args().collect(), start.elapsed().as_secs_f64());
    io::write_metadata(out, &meta(base))
}

fn f(x: f64) -> String {
    x.to_string()
}

fn hz(rad_per_s: f64) -> String {
    (rad_per_s / std::f64::consts::TAU).to_string()
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn run_optimize(args: OptimizeArgs, start: Instant) -> Result<()> {
    let file: OptimizationConfigFile = match &args.config {
        Some(path) => io::load_optimization_config(path)?,
        None => OptimizationConfigFile::default(),
    };
    let config: OptimizationConfig = file.to_config()?;
    let initial = match (&args.initial, &file.initial) {
        (Some(path), _) => discretize(&io::load_pulse(path)?, config.timestep)?,
        (None, Some(seed)) => seed.build(config.timestep)?,
        (None, None) => PulseWaveform::flat(args.rabi, args.duration, config.timestep, 0.0)?,
    };
    let ensemble: Ensemble = match &args.ensemble {
        Some(path) => io::load_ensemble(path)?,
        None => build_ensemble(
            &EnsembleGrid::new(
                args.n_detuning,
                args.detuning_range,
                args.n_coupling,
                args.coupling_range,
                args.near_resonance,
            ),
            initial.nominal_rabi(),
        )?,
    };
    let (result, report) = optimize_with_report(&initial, &ensemble, args.fidelity, &config)?;
    io::save_pulse(&result.pulse, &args.out)?;
    let mut report_path = args.out.clone().into_os_string();
    report_path.push(".report.json");
    io::write_json(Path::new(&report_path), &report)?;
    println!(
        "fidelity {:.6} after {} iterations ({:?})",
        result.final_fidelity(),
        result.iterations,
        result.termination
    );
    finish(&args.out, start, |m| m.with("final_fidelity", result.final_fidelity()))
}

fn table_rows(rows: &[TableRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.sequence.clone(),
                f(r.report.length_t_pi),
                f(r.report.width_half),
                f(r.report.width_ninety),
                f(r.report.max_phase_variation),
                r.report.interpolated_phase_points.to_string(),
            ]
        })
        .collect()
}

fn run(cli: Cli) -> Result<()> {
    let start = Instant::now();
    match cli.command {
        Command::Catalog { action: CatalogAction::List } => {
            for e in CATALOG {
                let (num, den) = e.length;
                let length = if den == 1 { num.to_string() } else { format!("{num}/{den}") };
                println!("{:<12} {:<40} {:>5} t_pi  {}", e.name, e.notation(), length, e.note);
            }
            Ok(())
        }
        Command::Catalog {
            action: CatalogAction::Emit { name, rabi, timestep, out },
        } => {
            let mut pulse = catalog_entry(&name)?.spec().to_waveform(rabi)?;
            if let Some(dt) = timestep {
                pulse = discretize(&pulse, dt)?;
            }
            io::save_pulse(&pulse, &out)?;
            finish(&out, start, |m| m)
        }
        Command::Optimize(args) => run_optimize(args, start),
        Command::Respond { pulse, range, points, out } => {
            let pulse = io::load_pulse(&pulse)?;
            let omega = pulse.nominal_rabi();
            let curve = response_curve(&pulse, range * omega, points)?;
            io::write_csv(
                &out,
                &["detuning_hz", "detuning_over_rabi", "population", "phase_rad", "phase_interpolated"],
                curve.iter().map(|p| {
                    vec![
                        hz(p.detuning),
                        f(p.detuning / omega),
                        f(p.population),
                        f(p.phase),
                        p.phase_interpolated.to_string(),
                    ]
                }),
            )?;
            finish(&out, start, |m| m)
        }
        Command::Contour { pulse, drange, crange, res, out } => {
            let pulse = io::load_pulse(&pulse)?;
            let grid = contour_grid(&pulse, drange * pulse.nominal_rabi(), crange, res)?;
            let rows = grid.coupling_axis.iter().enumerate().flat_map(|(j, &scale)| {
                let grid = &grid;
                grid.detuning_axis
                    .iter()
                    .enumerate()
                    .map(move |(i, &d)| vec![hz(d), f(scale), f(grid.population(i, j))])
            });
            io::write_csv(&out, &["detuning_hz", "coupling_scale", "population"], rows)?;
            finish(&out, start, |m| m.with("contour_levels", CONTOUR_LEVELS))
        }
        Command::Report { pulses, out } => {
            let extra = pulses
                .iter()
                .map(|p| Ok((stem(p), io::load_pulse(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let rows = table_one_report(&extra)?;
            print!("{}", format_table(&rows));
            io::write_csv(
                &out,
                &[
                    "name",
                    "sequence",
                    "length_t_pi",
                    "width_half",
                    "width_ninety",
                    "max_phase_variation",
                    "interpolated_phase_points",
                ],
                table_rows(&rows),
            )?;
            finish(&out, start, |m| m)
        }
        Command::MzContrast {
            beamsplitter,
            mirrors,
            temps,
            quadrature_order,
            out,
        } => {
            let bs = io::load_pulse(&beamsplitter)?;
            let mirrors = mirrors
                .iter()
                .map(|p| Ok((stem(p), io::load_pulse(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let temps = parse_temperatures(&temps)?;
            let model = ThermalModel {
                quadrature_order,
                ..ThermalModel::rb85(temps[0])
            };
            let rows = contrast_sweep(&bs, &mirrors, &temps, &model)?;
            io::write_csv(
                &out,
                &["mirror", "temperature_uK", "contrast"],
                rows.iter()
                    .map(|r| vec![r.mirror.clone(), f((r.temperature * 1e15).round() / 1e9), f(r.contrast)]),
            )?;
            finish(&out, start, |m| m.with("thermal_model", model))
        }
        Command::RamanScan {
            pulse,
            profile,
            momentum,
            rabi,
            range,
            points,
            out,
        } => {
            let pulse = io::load_pulse(&pulse)?;
            let config = RamanScanConfig {
                laser_detuning_grid: symmetric_linspace(points, range * rabi),
                sublevels: match profile {
                    Some(path) => io::load_sublevels(&path)?,
                    None => SublevelSet::default_profile(rabi),
                },
                momentum: match momentum {
                    Some(path) => io::load_momentum(&path)?,
                    None => gaussian_momentum(1.5 * rabi)?,
                },
                nominal_rabi: rabi,
            };
            let curve = raman_scan(&pulse, &config)?;
            let peak = peak_population(&curve)?;
            println!(
                "peak population {:.4} at laser detuning {:.4} Ω",
                peak.population,
                peak.laser_detuning / rabi
            );
            io::write_csv(
                &out,
                &["laser_detuning_hz", "population"],
                curve.iter().map(|p| vec![hz(p.laser_detuning), f(p.population)]),
            )?;
            finish(&out, start, |m| {
                m.with("peak_population", peak.population)
                    .with("peak_laser_detuning_hz", peak.laser_detuning / std::f64::consts::TAU)
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
