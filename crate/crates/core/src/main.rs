use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eraser_core::harness::config::{RunOverrides, SourceChoice};
use eraser_core::harness::output::{self, read_counts, read_curve, read_manifest, DatasetFormat, OutputPaths};
use eraser_core::harness::{self, compare_report, run_mzi, run_sweep, CurvePoint, Preset, MZI_TOLERANCE};
use eraser_core::optics::OutputPolicy;
use eraser_core::{Error, Result};

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "eraser", version, about = "Event-by-event quantum eraser simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a visibility sweep and compare it with quantum theory.
    Run(RunArgs),
    /// Print the quantum-theory visibility curve only.
    Oracle(RunArgs),
    /// Bare Mach-Zehnder regression: per-phase click frequencies.
    Mzi(RunArgs),
    /// Re-verify the files of a previous run.
    Compare {
        /// Directory holding curve.csv, counts.csv and manifest.json.
        dir: PathBuf,
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Manifest of a previous run to reproduce.
    #[arg(long, conflicts_with = "config")]
    manifest: Option<PathBuf>,
    #[arg(long, conflicts_with = "manifest")]
    preset: Option<String>,
    /// Comma-separated 2θ1 values in degrees.
    #[arg(long, value_delimiter = ',')]
    two_theta1: Option<Vec<f64>>,
    /// Number of equally spaced phase settings on [0°, 360°).
    #[arg(long)]
    phi_points: Option<usize>,
    #[arg(long)]
    events: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    source: Option<SourceChoice>,
    #[arg(long)]
    xi: Option<f64>,
    #[arg(long)]
    p_v: Option<f64>,
    #[arg(long)]
    group_size: Option<u32>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    theta_qwp: Option<f64>,
    #[arg(long)]
    no_qwp: bool,
    /// MZI output port feeding the analysis chain (0 or 1).
    #[arg(long)]
    analyzed_port: Option<u8>,
    #[arg(long, value_parser = parse_policy)]
    policy: Option<OutputPolicy>,
    /// Messengers routed per cell before recording starts.
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, value_enum)]
    dataset: Option<DatasetFormat>,
    /// Output directory.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_policy(s: &str) -> std::result::Result<OutputPolicy, String> {
    match s {
        "random" => Ok(OutputPolicy::Random),
        "round-robin" => Ok(OutputPolicy::RoundRobin),
        _ => Err(format!("expected random or round-robin, got {s:?}")),
    }
}

impl RunArgs {
    fn overrides(&self) -> Result<RunOverrides> {
        Ok(RunOverrides {
            preset: self.preset.as_deref().map(str::parse).transpose()?,
            two_theta1_grid_deg: self.two_theta1.clone(),
            phi_points: self.phi_points,
            events_per_point: self.events,
            gamma: self.gamma,
            seed: self.seed,
            source: self.source,
            xi_deg: self.xi,
            p_v: self.p_v,
            group_size: self.group_size,
            theta_hwp0_deg: self.theta0,
            theta_qwp_deg: self.theta_qwp,
            remove_qwp: self.no_qwp.then_some(true),
            analyzed_port: self.analyzed_port,
            policy: self.policy,
            warmup: self.warmup,
            tolerance: self.tolerance,
            dataset_format: self.dataset,
            ..Default::default()
        })
    }

    fn spec(&self, default_preset: Preset) -> Result<(harness::SweepSpec, DatasetFormat)> {
        let cli = self.overrides()?;
        if let Some(path) = &self.manifest {
            let mut spec = read_manifest(path)?.spec;
            cli.apply_to(&mut spec)?;
            spec.validate()?;
            return Ok((spec, cli.dataset_format.unwrap_or_default()));
        }
        let file = match &self.config {
            Some(p) => RunOverrides::from_toml_file(p)?,
            None => RunOverrides::default(),
        };
        let merged = file.merged(cli);
        let format = merged.dataset_format.unwrap_or_default();
        Ok((merged.resolve(default_preset)?, format))
    }
}

fn print_points(points: &[CurvePoint]) {
    println!("{:>10} {:>12} {:>12} {:>12}", "2θ1[deg]", "v_sim", "v_oracle", "|dev|");
    for p in points {
        println!(
            "{:>10.3} {:>12.6} {:>12.6} {:>12.6}{}",
            p.two_theta1_deg,
            p.v_sim,
            p.v_oracle,
            p.abs_dev,
            if p.degenerate { "  (no D0 counts)" } else { "" }
        );
    }
}

fn cmd_run(args: &RunArgs) -> Result<bool> {
    let (spec, format) = args.spec(Preset::PureV45)?;
    if spec.preset == Preset::BareMzi {
        return cmd_mzi(args);
    }
    let sweep = run_sweep(&spec, format != DatasetFormat::None)?;
    print_points(&sweep.points);
    let report = compare_report(&sweep.points, spec.tolerance)?;
    print!("{report}");
    if let Some(dir) = &args.out {
        let files = output::write_outputs(&spec, &sweep.points, sweep.datasets.as_deref(), dir, format)?;
        println!("wrote {}", files.curve.display());
    }
    Ok(report.pass)
}

fn cmd_oracle(args: &RunArgs) -> Result<bool> {
    let (spec, _) = args.spec(Preset::PureV45)?;
    harness::verify_wiring(&spec)?;
    println!("{:>10} {:>12}", "2θ1[deg]", "v_oracle");
    for &a in &spec.two_theta1_grid_deg {
        println!("{a:>10.3} {:>12.9}", harness::oracle_visibility(&spec, a)?);
    }
    Ok(true)
}

fn cmd_mzi(args: &RunArgs) -> Result<bool> {
    let mut args = args.clone();
    if args.preset.is_none() && args.config.is_none() && args.manifest.is_none() {
        args.preset = Some(Preset::BareMzi.name().to_string());
    }
    let (mut spec, _) = args.spec(Preset::BareMzi)?;
    if args.tolerance.is_none() && spec.preset != Preset::BareMzi {
        spec.tolerance = MZI_TOLERANCE;
    }
    let points = run_mzi(&spec)?;
    println!("{:>10} {:>10} {:>10} {:>10} {:>10}", "phi[deg]", "n0", "n1", "p0_sim", "p0_qt");
    let mut worst: f64 = 0.0;
    for p in &points {
        println!(
            "{:>10.3} {:>10} {:>10} {:>10.6} {:>10.6}",
            p.phi_deg, p.n0, p.n1, p.p0_sim, p.p0_oracle
        );
        worst = worst.max(p.abs_dev);
    }
    let pass = worst <= spec.tolerance;
    println!(
        "{}: max |dev| = {worst:.6}, tolerance = {}",
        if pass { "PASS" } else { "FAIL" },
        spec.tolerance
    );
    Ok(pass)
}

fn cmd_compare(dir: &std::path::Path, tolerance: Option<f64>) -> Result<bool> {
    let paths = OutputPaths::new(dir);
    let spec = read_manifest(&paths.manifest())?.spec;
    let curve = read_curve(&paths.curve())?;
    let counts = read_counts(&paths.counts())?;
    if curve.len() != counts.len() {
        return Err(Error::format(
            paths.counts(),
            format!("{} θ1 groups but {} curve rows", counts.len(), curve.len()),
        ));
    }
    let mut consistent = true;
    let mut points = Vec::with_capacity(curve.len());
    for (row, (angle, cells)) in curve.iter().zip(counts) {
        let v_oracle = harness::oracle_visibility(&spec, angle)?;
        let point = CurvePoint::new(angle, cells, v_oracle)?;
        let total: u64 = point.counts.iter().map(|c| c.total()).sum();
        if row.two_theta1_deg != angle
            || (row.v_sim - point.v_sim).abs() > 1e-12
            || (row.v_oracle - point.v_oracle).abs() > 1e-12
            || total != spec.events_per_point
        {
            println!("inconsistent record at 2θ1 = {angle}");
            consistent = false;
        }
        points.push(point);
    }
    let report = compare_report(&points, tolerance.unwrap_or(spec.tolerance))?;
    print!("{report}");
    Ok(consistent && report.pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Mzi(a) => cmd_mzi(a),
        Command::Compare { dir, tolerance } => cmd_compare(dir, *tolerance),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

