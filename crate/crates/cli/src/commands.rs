use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use dronealloc::instance::generate::{generate as generate_instance, GeneratedTerrain, GeneratorParams};
use dronealloc::instance::{load_instance, save_instance, Instance};
use dronealloc::model::{coverage_threshold, BackupMode, ModelForm, Objective};
use dronealloc::report::{self, format_mmss, geojson, heli, table, RowStatus, StatsRow, Thresholds};
use dronealloc::solver::{solve_problem, InfeasibleReason, Solution, SolveConfig, SolveError, SolveStatus};
use dronealloc::terrain::esri;
use dronealloc::{AllocationProblem, DroneProfile, TravelTimeMatrix};

use crate::exit;
use crate::{
    BackupArgs, GenerateArgs, GeojsonArgs, HeliArgs, InstanceArgs, ModelArgs, RunArgs, SolveArgs, SweepSArgs,
    SweepTmaxArgs,
};

pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: exit::USAGE, message: message.into() }
}

fn fail(e: impl std::fmt::Display) -> Failure {
    usage(e.to_string())
}

type Outcome = Result<u8, Failure>;

fn config(run: &RunArgs) -> Result<SolveConfig, Failure> {
    if run.threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    if !(run.time_limit >= 0.0) || !run.time_limit.is_finite() {
        return Err(usage("--time-limit must be a non-negative number of seconds"));
    }
    Ok(SolveConfig {
        time_limit: run.time_limit,
        threads: run.threads,
        progress: run.progress,
        ..SolveConfig::default()
    })
}

fn load(args: &InstanceArgs) -> Result<Instance, Failure> {
    let path = args.instance.as_ref().ok_or_else(|| usage("--instance is required"))?;
    let mut inst = load_instance(path).map_err(fail)?;
    let fixed_times = inst.travel_times.is_some() && args.q.is_none();
    if let Some(name) = &args.profile {
        if fixed_times {
            return Err(usage("--profile has no effect on an instance with precomputed travel_times"));
        }
        inst.profile = DroneProfile::builtin(name).map_err(fail)?;
    }
    if let Some(step) = args.obstacle_step {
        if fixed_times {
            return Err(usage("--obstacle-step has no effect on an instance with precomputed travel_times"));
        }
        inst.obstacle_step = step;
    }
    if let Some(q) = args.q {
        inst.resample_patients(q, args.seed).map_err(fail)?;
    }
    if inst.patients.is_empty() {
        return Err(usage("instance has no patients; pass --q to sample them from the trails"));
    }
    inst.validate().map_err(fail)?;
    Ok(inst)
}

fn matrix(inst: &Instance, run: &RunArgs) -> Result<TravelTimeMatrix, Failure> {
    let started = Instant::now();
    let m = inst.travel_matrix().map_err(fail)?;
    if run.progress {
        eprintln!(
            "travel times: {} x {} in {:.1} s",
            m.stations(),
            m.patients(),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(m)
}

fn problem<'a>(m: &'a TravelTimeMatrix, args: &ModelArgs) -> Result<AllocationProblem<'a>, Failure> {
    let objective = Objective::from_alpha(args.alpha).map_err(fail)?;
    let mut p = AllocationProblem::new(m, objective, 0, args.t_max, args.backup);
    p.budget = match (args.s, objective) {
        (Some(s), _) => s,
        (None, Objective::StationCount) => p.effective_stations(),
        (None, Objective::TravelTime) => return Err(usage("--s is required when --alpha is 0")),
    };
    Ok(p)
}

fn time_label(t: f64) -> String {
    if t.is_infinite() {
        "inf".into()
    } else {
        format!("{} ({t:.3} s)", format_mmss(t))
    }
}

/// Solved, time-limited or infeasible; anything else is an error.
enum Solved {
    Done(ModelForm, Solution),
    Infeasible(InfeasibleReason),
    NoIncumbent,
}

fn run_solve(p: &AllocationProblem, cfg: &SolveConfig) -> Result<Solved, Failure> {
    match solve_problem(p, cfg) {
        Ok((form, sol)) => Ok(Solved::Done(form, sol)),
        Err(SolveError::TimeLimitExceeded(sol)) => {
            let form = dronealloc::model::build_model(p).map_err(fail)?;
            Ok(Solved::Done(form, *sol))
        }
        Err(SolveError::Infeasible(r)) => Ok(Solved::Infeasible(r)),
        Err(SolveError::NoIncumbent) => Ok(Solved::NoIncumbent),
        Err(e) => Err(fail(e)),
    }
}

fn infeasible_text(p: &AllocationProblem, reason: &InfeasibleReason) -> String {
    match reason {
        InfeasibleReason::TimeLimit { threshold } => format!(
            "status: O_t̄ (no allocation meets t_max = {}; smallest feasible t_max is {})",
            time_label(p.t_max),
            time_label(*threshold)
        ),
        InfeasibleReason::Budget { budget } => format!(
            "status: O_t̄ ({budget} drones cannot reach every patient within t_max = {})",
            time_label(p.t_max)
        ),
        InfeasibleReason::Patient { patient } => format!(
            "status: O_t̄ (patient {patient} has too few stations within t_max = {})",
            time_label(p.t_max)
        ),
    }
}

fn summary(inst: &Instance, form: &ModelForm, sol: &Solution, no_timing: bool) -> Result<String, Failure> {
    let mut s = String::new();
    let status = match sol.status {
        SolveStatus::ProvenOptimal => "optimal",
        SolveStatus::Incumbent => RowStatus::TimeLimit.label(),
    };
    let _ = writeln!(s, "status: {status}");
    let objective = match sol.objective_kind {
        Objective::TravelTime => format!("{} s", sol.objective),
        Objective::StationCount => format!("{} drones", sol.objective),
    };
    let _ = writeln!(s, "objective: {objective}");
    if sol.status == SolveStatus::Incumbent {
        let _ = writeln!(s, "lower bound: {}", sol.lower_bound);
    }
    let _ = writeln!(s, "drones: {}", sol.selected.len());
    let counts = sol.drones_per_station(form);
    let ids: Vec<String> = sol
        .stations_used(form)
        .into_iter()
        .map(|g| match counts[g] {
            1 => inst.stations[g].id.clone(),
            n => format!("{}x{n}", inst.stations[g].id),
        })
        .collect();
    let _ = writeln!(s, "stations: {}", ids.join(" "));
    if form.backup == BackupMode::B2 {
        let _ = writeln!(s, "two-drone stations: {}", counts.iter().filter(|&&c| c == 2).count());
    }
    let _ = writeln!(s);
    let first = report::stats(&sol.responder_times(0)).map_err(fail)?;
    let mut series = vec![("drone1", first)];
    if form.coverage == 2 {
        series.push(("drone2", report::stats(&sol.responder_times(1)).map_err(fail)?));
        series.push(("difference", report::stats(&report::backup::differences(sol)).map_err(fail)?));
    }
    let named: Vec<(&str, &report::Stats)> = series.iter().map(|(n, st)| (*n, st)).collect();
    s.push_str(&table::stats_text(&named));
    let _ = writeln!(s);
    let _ = writeln!(s, "nodes: {}", sol.nodes_explored);
    if !no_timing {
        let _ = writeln!(s, "wall time: {:.3} s", sol.wall_time.as_secs_f64());
    }
    Ok(s)
}

fn status_code(sol: &Solution) -> u8 {
    match sol.status {
        SolveStatus::ProvenOptimal => exit::OPTIMAL,
        SolveStatus::Incumbent => exit::TIME_LIMIT,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn write_assignment(inst: &Instance, form: &ModelForm, sol: &Solution, path: &Path) -> Result<(), Failure> {
    let mut out = create(path)?;
    let two = form.coverage == 2;
    let mut text = String::from(if two {
        "patient,station,t_drone,backup_station,t_drone2\n"
    } else {
        "patient,station,t_drone\n"
    });
    for (j, (stations, times)) in sol.assignment.iter().zip(&sol.times).enumerate() {
        let _ = write!(text, "{}", inst.patients[j].id);
        for (&i, t) in stations.iter().zip(times) {
            let _ = write!(text, ",{},{t}", inst.stations[form.group[i]].id);
        }
        text.push('\n');
    }
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(fail)
}

fn write_geojson(inst: &Instance, form: &ModelForm, sol: &Solution, th: &Thresholds, path: &Path) -> Result<(), Failure> {
    let doc = report::export_geojson(inst, form, sol, th);
    fs::write(path, geojson::to_string(&doc)).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

pub fn generate(a: GenerateArgs) -> Outcome {
    let profile = DroneProfile::builtin(&a.profile).map_err(fail)?;
    let terrain = if a.synthetic {
        GeneratedTerrain::Synthetic
    } else {
        let stem = a.out.file_stem().and_then(|s| s.to_str()).unwrap_or("terrain");
        GeneratedTerrain::Raster { cellsize: a.cellsize, file_name: format!("{stem}.asc") }
    };
    let params = GeneratorParams {
        stations: a.m,
        patients: a.q,
        seed: a.seed,
        profile,
        width_m: a.width_km * 1000.0,
        height_m: a.height_km * 1000.0,
        terrain: terrain.clone(),
        ..GeneratorParams::default()
    };
    let g = generate_instance(&params).map_err(fail)?;
    if let (Some(raster), GeneratedTerrain::Raster { file_name, .. }) = (&g.raster, &terrain) {
        let dir = a.out.parent().unwrap_or(Path::new(""));
        let path = dir.join(file_name);
        fs::write(&path, esri::to_string(raster))
            .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    }
    save_instance(&g.instance, &a.out).map_err(fail)?;
    println!(
        "wrote {}: {} stations, {} patients",
        a.out.display(),
        g.instance.stations.len(),
        g.instance.patients.len()
    );
    Ok(exit::OPTIMAL)
}

pub fn solve(a: SolveArgs) -> Outcome {
    let cfg = config(&a.run)?;
    let inst = load(&a.instance)?;
    let m = matrix(&inst, &a.run)?;
    let p = problem(&m, &a.model)?;
    match run_solve(&p, &cfg)? {
        Solved::Infeasible(r) => {
            println!("{}", infeasible_text(&p, &r));
            Ok(exit::INFEASIBLE)
        }
        Solved::NoIncumbent => {
            println!("status: {} (no feasible allocation found)", RowStatus::TimeLimit.label());
            Ok(exit::TIME_LIMIT)
        }
        Solved::Done(form, sol) => {
            print!("{}", summary(&inst, &form, &sol, a.run.no_timing)?);
            if let Some(path) = &a.geojson {
                write_geojson(&inst, &form, &sol, &Thresholds::default(), path)?;
            }
            if let Some(path) = &a.assignment {
                write_assignment(&inst, &form, &sol, path)?;
            }
            Ok(status_code(&sol))
        }
    }
}

fn emit(path: Option<&Path>, text: bool, csv: impl FnOnce(&mut dyn Write) -> Result<(), report::ReportError>, plain: impl FnOnce() -> String) -> Result<(), Failure> {
    let mut buf = Vec::new();
    if text {
        buf.extend_from_slice(plain().as_bytes());
    } else {
        csv(&mut buf).map_err(fail)?;
    }
    match path {
        Some(p) => fs::write(p, buf).map_err(|e| usage(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout().write_all(&buf).map_err(fail),
    }
}

fn sweep_code(rows: &[StatsRow]) -> u8 {
    if rows.iter().any(|r| r.status == RowStatus::TimeLimit) {
        exit::TIME_LIMIT
    } else {
        exit::OPTIMAL
    }
}

fn report_time(run: &RunArgs, started: Instant) {
    if !run.no_timing {
        eprintln!("sweep finished in {:.1} s", started.elapsed().as_secs_f64());
    }
}

pub fn sweep_s(a: SweepSArgs) -> Outcome {
    let cfg = config(&a.run)?;
    let inst = load(&a.instance)?;
    let m = matrix(&inst, &a.run)?;
    let slots = AllocationProblem::new(&m, Objective::TravelTime, 1, a.t_max, a.backup).effective_stations();
    let to = a.s_to.unwrap_or(slots);
    if a.s_from == 0 || a.s_from > to {
        return Err(usage(format!("empty budget range {}..={to}", a.s_from)));
    }
    let s_values: Vec<usize> = (a.s_from..=to).collect();
    let started = Instant::now();
    let rows = report::sweep_s(&m, a.t_max, &s_values, a.backup, &cfg).map_err(fail)?;
    report_time(&a.run, started);
    emit(
        a.out.as_deref(),
        a.text,
        |w| table::write_sweep_csv(&rows, false, w),
        || table::sweep_text(&rows, false),
    )?;
    Ok(sweep_code(&rows))
}

pub fn sweep_tmax(a: SweepTmaxArgs) -> Outcome {
    let cfg = config(&a.run)?;
    let inst = load(&a.instance)?;
    let m = matrix(&inst, &a.run)?;
    if !(a.t_step > 0.0) || a.t_step.is_infinite() {
        return Err(usage("--t-step must be a positive finite duration"));
    }
    if a.t_to.is_infinite() {
        return Err(usage("--t-to must be finite"));
    }
    let threshold = coverage_threshold(&m, a.backup);
    let t_values: Vec<f64> = match a.t_from {
        None => report::tmax_grid(&m, a.backup, a.t_step, a.t_to),
        Some(from) => (0..)
            .map(|k| from + k as f64 * a.t_step)
            .take_while(|&t| t <= a.t_to)
            .collect(),
    };
    if t_values.is_empty() {
        return Err(usage(format!(
            "no time limits in range; the coverage threshold is {}",
            time_label(threshold)
        )));
    }
    let started = Instant::now();
    let rows = report::sweep_tmax(&m, &t_values, a.backup, &cfg).map_err(fail)?;
    report_time(&a.run, started);
    emit(
        a.out.as_deref(),
        a.text,
        |w| table::write_sweep_csv(&rows, true, w),
        || table::sweep_text(&rows, true),
    )?;
    Ok(sweep_code(&rows))
}

pub fn backup_compare(a: BackupArgs) -> Outcome {
    let cfg = config(&a.run)?;
    let inst = load(&a.instance)?;
    let m = matrix(&inst, &a.run)?;
    let rows = report::backup_compare(&m, a.s, a.t_max, &cfg).map_err(fail)?;
    emit(
        a.out.as_deref(),
        a.text,
        |w| table::write_backup_csv(&rows, w),
        || table::backup_text(&rows),
    )?;
    Ok(if rows.iter().any(|r| r.status == RowStatus::TimeLimit) {
        exit::TIME_LIMIT
    } else {
        exit::OPTIMAL
    })
}

fn open(path: &Path) -> Result<File, Failure> {
    File::open(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub fn heli_compare(a: HeliArgs) -> Outcome {
    let mut code = exit::OPTIMAL;
    let rows = match (&a.records, &a.pairs) {
        (Some(_), Some(_)) => return Err(usage("--records and --pairs are mutually exclusive")),
        (None, None) => return Err(usage("one of --records or --pairs is required")),
        (None, Some(path)) => heli::read_pairs(open(path)?).map_err(fail)?,
        (Some(path), None) => {
            let records = heli::read_records(open(path)?).map_err(fail)?;
            if records.is_empty() {
                Vec::new()
            } else {
                let cfg = config(&a.run)?;
                let inst = load(&a.instance)?;
                let m = matrix(&inst, &a.run)?;
                let p = problem(&m, &a.model)?;
                let (form, sol) = match run_solve(&p, &cfg)? {
                    Solved::Done(form, sol) => (form, sol),
                    Solved::Infeasible(r) => {
                        println!("{}", infeasible_text(&p, &r));
                        return Ok(exit::INFEASIBLE);
                    }
                    Solved::NoIncumbent => {
                        println!("status: {} (no feasible allocation found)", RowStatus::TimeLimit.label());
                        return Ok(exit::TIME_LIMIT);
                    }
                };
                code = status_code(&sol);
                report::heli_compare(&inst, &sol.stations_used(&form), &records).map_err(fail)?
            }
        }
    };
    if rows.is_empty() {
        if let Some(p) = &a.out {
            fs::write(p, "").map_err(|e| usage(format!("cannot write {}: {e}", p.display())))?;
        }
        return Ok(code);
    }
    emit(a.out.as_deref(), false, |w| heli::write_comparison(&rows, w), String::new)?;
    Ok(code)
}

pub fn export_geojson(a: GeojsonArgs) -> Outcome {
    if !(a.fast <= a.medium) {
        return Err(usage("--fast must not exceed --medium"));
    }
    let cfg = config(&a.run)?;
    let inst = load(&a.instance)?;
    let m = matrix(&inst, &a.run)?;
    let p = problem(&m, &a.model)?;
    match run_solve(&p, &cfg)? {
        Solved::Infeasible(r) => {
            println!("{}", infeasible_text(&p, &r));
            Ok(exit::INFEASIBLE)
        }
        Solved::NoIncumbent => {
            println!("status: {} (no feasible allocation found)", RowStatus::TimeLimit.label());
            Ok(exit::TIME_LIMIT)
        }
        Solved::Done(form, sol) => {
            let th = Thresholds { fast: a.fast, medium: a.medium };
            write_geojson(&inst, &form, &sol, &th, &a.out)?;
            println!("wrote {}", a.out.display());
            Ok(status_code(&sol))
        }
    }
}
