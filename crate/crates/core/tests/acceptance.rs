//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test --test acceptance -- 1 5`.

use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dronealloc::geo::LocalPoint;
use dronealloc::instance::generate::{generate, GeneratedTerrain, GeneratorParams};
use dronealloc::instance::Instance;
use dronealloc::model::{check_feasibility, coverage_threshold, Feasibility};
use dronealloc::report::{self, geojson, table, RowStatus, Thresholds};
use dronealloc::solver::{brute_force_problem, solve_problem, SolveError};
use dronealloc::travel::{travel_time, DroneProfile};
use dronealloc::{AllocationProblem, BackupMode, Objective, SolveConfig, TravelTimeMatrix};

// pinned tolerances
const OBJ_TOL: f64 = 1e-9;
const TRAVEL_TOL: f64 = 1e-9;
const RATIO_TOL_PP: f64 = 0.01;
const BOUNDARY_EPS: f64 = 1e-6;
const ORACLE_INSTANCES: usize = 200;
const ORACLE_BUDGET: Duration = Duration::from_secs(300);
const FULL_SOLVE_LIMIT: Duration = Duration::from_secs(60);
const FULL_SWEEP_LIMIT: Duration = Duration::from_secs(30 * 60);

const MODES: [BackupMode; 3] = [BackupMode::B0, BackupMode::B1, BackupMode::B2];
const OBJECTIVES: [Objective; 2] = [Objective::TravelTime, Objective::StationCount];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

struct OracleInstance {
    instance: Instance,
    matrix: TravelTimeMatrix,
    t_max: f64,
}

fn oracle_instance(k: usize) -> OracleInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + k as u64);
    let m = rng.random_range(2..=10);
    let q = rng.random_range(4..=40);
    let params = GeneratorParams {
        stations: m,
        patients: q,
        seed: rng.random(),
        width_m: rng.random_range(5000.0..12000.0),
        height_m: rng.random_range(4000.0..9000.0),
        terrain: GeneratedTerrain::Synthetic,
        ..Default::default()
    };
    let instance = generate(&params).expect("generated instance").instance;
    let matrix = instance.travel_matrix().expect("travel matrix");
    // one limit shared by all modes so that they stay comparable
    let t_max = if rng.random_bool(0.2) {
        f64::INFINITY
    } else {
        let hardest = MODES.iter().map(|&b| coverage_threshold(&matrix, b)).fold(0.0, f64::max);
        hardest * rng.random_range(1.0..1.5)
    };
    OracleInstance { instance, matrix, t_max }
}

fn oracle_set() -> &'static [OracleInstance] {
    static SET: OnceLock<Vec<OracleInstance>> = OnceLock::new();
    SET.get_or_init(|| (0..ORACLE_INSTANCES).into_par_iter().map(oracle_instance).collect())
}

/// Outcome of one exact solve, reduced to what the criteria compare.
#[derive(Clone)]
enum Solved {
    Optimal { objective: f64, drone1: Vec<f64>, drone2: Option<Vec<f64>> },
    Infeasible,
    Other(String),
}

struct Case {
    instance: usize,
    objective: Objective,
    backup: BackupMode,
    s: usize,
    solver: Solved,
    brute: Solved,
}

fn reduce(r: Result<dronealloc::Solution, SolveError>) -> Solved {
    match r {
        Ok(sol) => Solved::Optimal {
            objective: sol.objective,
            drone1: sol.responder_times(0),
            drone2: (sol.times[0].len() > 1).then(|| sol.responder_times(1)),
        },
        Err(SolveError::Infeasible(_)) => Solved::Infeasible,
        Err(e) => Solved::Other(e.to_string()),
    }
}

fn oracle_cases() -> &'static (Vec<Case>, Duration) {
    static CASES: OnceLock<(Vec<Case>, Duration)> = OnceLock::new();
    CASES.get_or_init(|| {
        let set = oracle_set();
        let started = Instant::now();
        let cfg = SolveConfig::default();
        let cases = set
            .par_iter()
            .enumerate()
            .flat_map_iter(|(k, inst)| {
                let m = inst.matrix.stations();
                let mut out = Vec::new();
                for objective in OBJECTIVES {
                    for backup in MODES {
                        for s in 1..=m {
                            let p = AllocationProblem::new(&inst.matrix, objective, s, inst.t_max, backup);
                            out.push(Case {
                                instance: k,
                                objective,
                                backup,
                                s,
                                solver: reduce(solve_problem(&p, &cfg).map(|x| x.1)),
                                brute: reduce(brute_force_problem(&p).map(|x| x.1)),
                            });
                        }
                    }
                }
                out
            })
            .collect();
        (cases, started.elapsed())
    })
}

fn c1_oracle_equivalence() -> Verdict {
    let (cases, elapsed) = oracle_cases();
    let mut mismatches = Vec::new();
    let mut optimal = 0;
    for c in cases {
        let ok = match (&c.solver, &c.brute) {
            (Solved::Optimal { objective: a, .. }, Solved::Optimal { objective: b, .. }) => {
                optimal += 1;
                (a - b).abs() <= OBJ_TOL
            }
            (Solved::Infeasible, Solved::Infeasible) => true,
            _ => false,
        };
        if !ok {
            mismatches.push(c);
        }
    }
    let mut detail = format!(
        "{} instances, {} solves ({} optimal), {} mismatches, {:.1} s",
        ORACLE_INSTANCES,
        cases.len(),
        optimal,
        mismatches.len(),
        elapsed.as_secs_f64()
    );
    if let Some(c) = mismatches.first() {
        let show = |s: &Solved| match s {
            Solved::Optimal { objective, .. } => format!("{objective}"),
            Solved::Infeasible => "infeasible".into(),
            Solved::Other(e) => e.clone(),
        };
        detail += &format!(
            "; first: instance {} alpha {} {} s={} solver {} brute {}",
            c.instance,
            c.objective.alpha(),
            c.backup,
            c.s,
            show(&c.solver),
            show(&c.brute)
        );
    }
    verdict(mismatches.is_empty() && *elapsed < ORACLE_BUDGET, detail)
}

fn c2_feasibility_boundary() -> Verdict {
    let cfg = SolveConfig::default();
    let failures: Vec<String> = oracle_set()
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, inst)| {
            let mut bad = Vec::new();
            for backup in MODES {
                let t_bar = coverage_threshold(&inst.matrix, backup);
                let m_eff = AllocationProblem::new(&inst.matrix, Objective::StationCount, 1, t_bar, backup).effective_stations();
                let at = AllocationProblem::new(&inst.matrix, Objective::StationCount, m_eff, t_bar, backup);
                if check_feasibility(&at) != Feasibility::Feasible || solve_problem(&at, &cfg).is_err() {
                    bad.push(format!("instance {k} {backup}: infeasible at t_bar"));
                }
                let rows = report::sweep_s(&inst.matrix, t_bar - BOUNDARY_EPS, &[m_eff], backup, &cfg).expect("sweep");
                if rows[0].status != RowStatus::Infeasible || rows[0].status.label() != "O_t̄" {
                    bad.push(format!("instance {k} {backup}: feasible below t_bar"));
                }
            }
            bad
        })
        .collect();
    verdict(
        failures.is_empty(),
        format!("{} instances x 3 modes, {} failures{}", ORACLE_INSTANCES, failures.len(), first(&failures)),
    )
}

fn first(v: &[String]) -> String {
    v.first().map(|s| format!("; first: {s}")).unwrap_or_default()
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] + OBJ_TOL * w[0].abs().max(1.0))
}

fn c3_monotonicity() -> Verdict {
    let cfg = SolveConfig::default();
    let set = oracle_set();
    let mut failures: Vec<String> = set
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, inst)| {
            let mut bad = Vec::new();
            let m = inst.matrix.stations();
            let s_values: Vec<usize> = (1..=m).collect();
            let rows = report::sweep_s(&inst.matrix, inst.t_max, &s_values, BackupMode::B0, &cfg).expect("sweep");
            let means: Vec<f64> = rows.iter().filter_map(|r| r.stats.map(|s| s.mean)).collect();
            let feasible_suffix = rows.iter().skip_while(|r| r.status != RowStatus::Ok).all(|r| r.status == RowStatus::Ok);
            if !non_increasing(&means) || !feasible_suffix {
                bad.push(format!("instance {k}: budget sweep means {means:?}"));
            }
            let t_bar = coverage_threshold(&inst.matrix, BackupMode::B0);
            let grid: Vec<f64> = (-1..20).map(|n| t_bar + n as f64 * 15.0).collect();
            let rows = report::sweep_tmax(&inst.matrix, &grid, BackupMode::B0, &cfg).expect("sweep");
            let drones: Vec<f64> = rows.iter().filter_map(|r| r.drones.map(|d| d as f64)).collect();
            if rows[0].status != RowStatus::Infeasible || drones.len() != grid.len() - 1 || !non_increasing(&drones) {
                bad.push(format!("instance {k}: limit sweep drones {drones:?}"));
            }
            bad
        })
        .collect();
    let mut pairs = 0usize;
    for c in &oracle_cases().0 {
        if let Solved::Optimal { drone1, drone2: Some(d2), .. } = &c.solver {
            for (a, b) in drone1.iter().zip(d2) {
                pairs += 1;
                if b < a {
                    failures.push(format!("instance {} {} s={}: drone 2 before drone 1", c.instance, c.backup, c.s));
                }
            }
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "budget and limit sweeps on {} instances, {} drone pairs, {} violations{}",
            set.len(),
            pairs,
            failures.len(),
            first(&failures)
        ),
    )
}

fn c4_travel_formula() -> Verdict {
    let life = DroneProfile::lifedrone();
    let wing = DroneProfile::wingcopter178();
    let p = LocalPoint::new;
    let a = travel_time(&life, &p(0.0, 0.0, 1000.0), &p(1790.0, 0.0, 1000.0), 1000.0);
    let b = travel_time(&wing, &p(0.0, 0.0, 1000.0), &p(0.0, 361.0, 1500.0), 0.0);
    let zero = travel_time(&life, &p(0.0, 0.0, 1000.0), &p(0.0, 0.0, 1000.0), 990.0);
    let ok_a = (a - 134.0).abs() <= TRAVEL_TOL;
    let ok_b = (b - (20.0 + 500.0 / 6.0 + 10.0)).abs() <= TRAVEL_TOL;
    let ok_zero = zero == life.c_start;

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut violations = 0;
    for n in 0..1000 {
        let prof = if n % 2 == 0 { &life } else { &wing };
        let s = p(rng.random_range(-5e3..5e3), rng.random_range(-5e3..5e3), rng.random_range(500.0..3000.0));
        let t = p(rng.random_range(-5e3..5e3), rng.random_range(-5e3..5e3), rng.random_range(500.0..3000.0));
        let lo = rng.random_range(0.0..3500.0);
        let hi = lo + rng.random_range(0.0..1000.0);
        if travel_time(prof, &s, &t, lo) > travel_time(prof, &s, &t, hi) {
            violations += 1;
        }
    }
    verdict(
        ok_a && ok_b && ok_zero && violations == 0,
        format!("LifeDrone {a:.9} s, Wingcopter {b:.9} s, zero distance {zero} s, {violations}/1000 monotonicity violations"),
    )
}

fn c5_reference_ratios() -> Verdict {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/heli_reference.csv");
    let text = std::fs::read_to_string(path).expect("fixture");
    let rows = report::heli::read_pairs(text.as_bytes()).expect("pairs");
    let printed: Vec<f64> = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for (n, (r, &want)) in rows.iter().zip(&printed).enumerate() {
        let d = (r.ratio - want).abs();
        worst = worst.max(d);
        if d > RATIO_TOL_PP + 1e-12 {
            bad.push(format!("row {}: {:.2} vs {want:.2}", n + 1, r.ratio));
        }
    }
    verdict(
        rows.len() == 39 && bad.is_empty(),
        format!("{} rows, largest deviation {worst:.4} pp{}", rows.len(), first(&bad)),
    )
}

fn c6_full_scale() -> Verdict {
    let t0 = Instant::now();
    let g = generate(&GeneratorParams::default()).expect("instance");
    let matrix = g.instance.travel_matrix().expect("matrix");
    let build = t0.elapsed();
    let cfg = SolveConfig {
        threads: 1,
        time_limit: FULL_SOLVE_LIMIT.as_secs_f64(),
        ..SolveConfig::default()
    };
    let s_values: Vec<usize> = (1..=matrix.stations()).collect();
    let t1 = Instant::now();
    let rows = report::sweep_s(&matrix, 1200.0, &s_values, BackupMode::B0, &cfg).expect("sweep");
    let sweep = t1.elapsed();
    let unproven: Vec<String> = rows
        .iter()
        .filter(|r| r.status == RowStatus::TimeLimit || r.wall_time > FULL_SOLVE_LIMIT)
        .map(|r| format!("s={}", r.key))
        .collect();
    let slowest = rows.iter().max_by_key(|r| r.wall_time).unwrap();
    let infeasible = rows.iter().filter(|r| r.status == RowStatus::Infeasible).count();
    let means: Vec<f64> = rows.iter().filter_map(|r| r.stats.map(|s| s.mean)).collect();
    let row36 = rows.iter().find(|r| r.key.to_string() == "36").and_then(|r| r.stats);
    let mut detail = format!(
        "m={} q={} t_max=20:00: matrix {:.1} s, sweep {:.1} s, slowest s={} {:.2} s ({} nodes), {} rows O_t̄, {} unproven",
        matrix.stations(),
        matrix.patients(),
        build.as_secs_f64(),
        sweep.as_secs_f64(),
        slowest.key,
        slowest.wall_time.as_secs_f64(),
        slowest.nodes,
        infeasible,
        unproven.len()
    );
    if let Some(s) = row36 {
        detail += &format!("; s=36 mean {} median {}", report::format_mmss(s.mean), report::format_mmss(s.median));
    }
    if !unproven.is_empty() {
        detail += &format!("; unproven: {}", unproven.join(" "));
    }
    verdict(unproven.is_empty() && sweep <= FULL_SWEEP_LIMIT && non_increasing(&means), detail)
}

fn c7_backup_ordering() -> Verdict {
    let cases = &oracle_cases().0;
    let mut compared = 0;
    let mut bad = Vec::new();
    for b0 in cases.iter().filter(|c| c.objective == Objective::TravelTime && c.backup == BackupMode::B0) {
        let b1 = cases.iter().find(|c| {
            c.instance == b0.instance && c.objective == Objective::TravelTime && c.backup == BackupMode::B1 && c.s == b0.s
        });
        if let (Solved::Optimal { drone1: d0, .. }, Some(Case { solver: Solved::Optimal { drone1: d1, .. }, .. })) = (&b0.solver, b1) {
            compared += 1;
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            if mean(d0) > mean(d1) + OBJ_TOL {
                bad.push(format!("instance {} s={}", b0.instance, b0.s));
            }
        }
    }
    verdict(bad.is_empty() && compared > 0, format!("{compared} feasible (instance, s) pairs, {} violations{}", bad.len(), first(&bad)))
}

fn c8_determinism() -> Verdict {
    let g = generate(&GeneratorParams {
        stations: 40,
        patients: 400,
        seed: 8,
        terrain: GeneratedTerrain::Synthetic,
        ..Default::default()
    })
    .expect("instance");
    let inst = &g.instance;
    let matrix = inst.travel_matrix().expect("matrix");
    let t_max = 1.1 * MODES.iter().map(|&b| coverage_threshold(&matrix, b)).fold(0.0, f64::max);
    let run = |threads: usize| {
        let cfg = SolveConfig { threads, ..SolveConfig::default() };
        let mut outputs = Vec::new();
        let mut selections = Vec::new();
        for backup in MODES {
            let rows = report::sweep_s(&matrix, t_max, &[3, 8, 15], backup, &cfg).expect("sweep");
            let mut csv = Vec::new();
            table::write_sweep_csv(&rows, false, &mut csv).unwrap();
            outputs.push(csv);
            let p = AllocationProblem::new(&matrix, Objective::TravelTime, 15, t_max, backup);
            let (form, sol) = solve_problem(&p, &cfg).expect("solve");
            selections.push(sol.selected.clone());
            outputs.push(geojson::to_string(&geojson::export_geojson(inst, &form, &sol, &Thresholds::default())).into_bytes());
        }
        let rows = report::sweep_tmax(&matrix, &[0.8 * t_max, t_max, 1.2 * t_max], BackupMode::B1, &cfg).expect("sweep");
        let mut csv = Vec::new();
        table::write_sweep_csv(&rows, true, &mut csv).unwrap();
        outputs.push(csv);
        (selections, outputs)
    };
    let reference = run(1);
    let mut same = true;
    for threads in [1, 8] {
        let other = run(threads);
        same &= other == reference;
    }
    let bytes: usize = reference.1.iter().map(Vec::len).sum();
    verdict(same, format!("threads 1 and 8, two runs each: {} outputs ({} bytes) identical: {same}", reference.1.len(), bytes))
}

fn c9_mmss_and_geojson() -> Verdict {
    let round_trip = (0..=6000u32).all(|x| report::parse_mmss(&report::format_mmss(x as f64)) == Ok(x));
    let cfg = SolveConfig::default();
    let th = Thresholds::default();
    let mut files = 0;
    let mut patients = 0;
    let mut bad = Vec::new();
    for (k, inst) in oracle_set().iter().enumerate().step_by(4) {
        let m = inst.matrix.stations();
        for backup in MODES {
            let p = AllocationProblem::new(&inst.matrix, Objective::TravelTime, m.div_ceil(2), inst.t_max, backup);
            let Ok((form, sol)) = solve_problem(&p, &cfg) else { continue };
            let text = geojson::to_string(&geojson::export_geojson(&inst.instance, &form, &sol, &th));
            files += 1;
            let doc: serde_json::Value = match serde_json::from_str(&text) {
                Ok(d) => d,
                Err(e) => {
                    bad.push(format!("instance {k}: {e}"));
                    continue;
                }
            };
            for f in doc["features"].as_array().unwrap() {
                let props = &f["properties"];
                if props["feature"] != "patient" {
                    continue;
                }
                patients += 1;
                let t = props["t_drone_seconds"].as_f64().unwrap();
                if props["class"] != report::classify(t, &th) {
                    bad.push(format!("instance {k}: class of {t} s"));
                }
                let c = f["geometry"]["coordinates"].as_array().unwrap();
                if c.len() != 2 || c[0].as_f64().unwrap().abs() > 180.0 {
                    bad.push(format!("instance {k}: coordinates"));
                }
            }
        }
    }
    verdict(
        round_trip && bad.is_empty() && files > 0,
        format!("mm:ss round trip 0..6000: {round_trip}; {files} GeoJSON files, {patients} patients, {} errors{}", bad.len(), first(&bad)),
    )
}

fn main() -> ExitCode {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, fn() -> Verdict); 9] = [
        (1, "oracle equivalence", c1_oracle_equivalence),
        (2, "feasibility boundary", c2_feasibility_boundary),
        (3, "monotonicity", c3_monotonicity),
        (4, "travel-time formula", c4_travel_formula),
        (5, "helicopter ratio fixture", c5_reference_ratios),
        (6, "full-scale performance", c6_full_scale),
        (7, "backup ordering", c7_backup_ordering),
        (8, "determinism", c8_determinism),
        (9, "mm:ss round trip and GeoJSON validity", c9_mmss_and_geojson),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let t = Instant::now();
        let v = run();
        println!(
            "acceptance {id} {}: {name} ({:.1} s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
        if !v.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
