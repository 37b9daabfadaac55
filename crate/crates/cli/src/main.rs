use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dronealloc::model::{BackupMode, ModelError};

mod commands;

/// Exact base-station allocation for defibrillator drones.
#[derive(Parser)]
#[command(name = "dronealloc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic alpine instance.
    Generate(GenerateArgs),
    /// Solve one allocation and print its statistics.
    Solve(SolveArgs),
    /// Minimise travel time for a range of drone budgets.
    SweepS(SweepSArgs),
    /// Find the fewest drones for a range of time limits.
    SweepTmax(SweepTmaxArgs),
    /// Compare the three backup modes at one budget.
    BackupCompare(BackupArgs),
    /// Compare drone and helicopter response times.
    HeliCompare(HeliArgs),
    /// Solve and write the allocation as GeoJSON.
    ExportGeojson(GeojsonArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Instance file to write; a raster terrain goes next to it.
    #[arg(long)]
    out: PathBuf,
    /// Candidate stations.
    #[arg(long, default_value_t = 104)]
    m: usize,
    /// Patients sampled along the trails.
    #[arg(long, default_value_t = 1500)]
    q: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "lifedrone")]
    profile: String,
    /// Keep the analytic landscape inline instead of writing a raster.
    #[arg(long)]
    synthetic: bool,
    /// Raster cell size, metres.
    #[arg(long, default_value_t = 50.0)]
    cellsize: f64,
    #[arg(long, default_value_t = 36.0)]
    width_km: f64,
    #[arg(long, default_value_t = 24.0)]
    height_km: f64,
}

#[derive(Args)]
struct InstanceArgs {
    /// Instance file (TOML).
    #[arg(long)]
    instance: Option<PathBuf>,
    /// Replace the instance's drone profile (lifedrone, wingcopter178).
    #[arg(long)]
    profile: Option<String>,
    /// Resample this many patients from the trail network.
    #[arg(long)]
    q: Option<usize>,
    /// Seed for patient sampling.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Terrain sampling step along flight paths, metres.
    #[arg(long)]
    obstacle_step: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Worker threads; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Per-solve limit in seconds; 0 disables it.
    #[arg(long, default_value_t = 0.0)]
    time_limit: f64,
    /// Leave wall-clock times out of the output.
    #[arg(long)]
    no_timing: bool,
    /// Print search progress on stderr.
    #[arg(long)]
    progress: bool,
}

#[derive(Args)]
struct ModelArgs {
    /// 0 minimises total travel time, 1 the number of drones.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Drone budget; defaults to every station for alpha 1.
    #[arg(long)]
    s: Option<usize>,
    /// Time limit as mm:ss, seconds or `inf`.
    #[arg(long, default_value = "inf", value_parser = parse_duration)]
    t_max: f64,
    /// b0, b1 or b2.
    #[arg(long, default_value = "b0", value_parser = parse_backup)]
    backup: BackupMode,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Also write the allocation as GeoJSON.
    #[arg(long)]
    geojson: Option<PathBuf>,
    /// Also write the per-patient assignment as CSV.
    #[arg(long)]
    assignment: Option<PathBuf>,
}

#[derive(Args)]
struct SweepSArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "inf", value_parser = parse_duration)]
    t_max: f64,
    #[arg(long, default_value = "b0", value_parser = parse_backup)]
    backup: BackupMode,
    #[arg(long, default_value_t = 1)]
    s_from: usize,
    /// Defaults to the number of drone slots.
    #[arg(long)]
    s_to: Option<usize>,
    /// CSV output; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print an aligned table instead of CSV.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct SweepTmaxArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long, default_value = "b0", value_parser = parse_backup)]
    backup: BackupMode,
    /// First limit; defaults to the coverage threshold.
    #[arg(long, value_parser = parse_duration)]
    t_from: Option<f64>,
    /// Last limit.
    #[arg(long, value_parser = parse_duration)]
    t_to: f64,
    #[arg(long, default_value = "15", value_parser = parse_duration)]
    t_step: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct BackupArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value = "inf", value_parser = parse_duration)]
    t_max: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct HeliArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Mission sites: `lat,lon,t_heli_mmss`. Needs an instance to solve.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Known times: `t_drone_mmss,t_heli_mmss`.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GeojsonArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: PathBuf,
    /// Upper bound of the fastest class.
    #[arg(long, default_value = "06:00", value_parser = parse_duration)]
    fast: f64,
    /// Upper bound of the middle class.
    #[arg(long, default_value = "11:00", value_parser = parse_duration)]
    medium: f64,
}

/// `inf`, `mm:ss` or plain seconds.
fn parse_duration(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("none") {
        return Ok(f64::INFINITY);
    }
    if t.contains(':') {
        return dronealloc::report::parse_mmss(t).map(f64::from).map_err(|e| e.to_string());
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 0.0 => Ok(v),
        _ => Err(format!("`{text}` is not mm:ss, seconds or inf")),
    }
}

fn parse_backup(text: &str) -> Result<BackupMode, String> {
    text.parse().map_err(|e: ModelError| e.to_string())
}

/// Process exit codes.
pub(crate) mod exit {
    pub const OPTIMAL: u8 = 0;
    pub const USAGE: u8 = 1;
    pub const INFEASIBLE: u8 = 2;
    pub const TIME_LIMIT: u8 = 3;
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::USAGE } else { exit::OPTIMAL });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Solve(a) => commands::solve(a),
        Command::SweepS(a) => commands::sweep_s(a),
        Command::SweepTmax(a) => commands::sweep_tmax(a),
        Command::BackupCompare(a) => commands::backup_compare(a),
        Command::HeliCompare(a) => commands::heli_compare(a),
        Command::ExportGeojson(a) => commands::export_geojson(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
