use std::fs::File;
use std::io::Write;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use scissor_core::analysis::{
    closure_experiment, collapse_deviation, perturbation_validation, sensitivity_profile, spearman, SensitivityProfile,
};
use scissor_core::kinematics::{chain_centers, section_angles};
use scissor_core::optimize::{
    collect_grid, grid_cells, solve_morph, solve_write, split_units, write_trajectory, Bounds, Design, Feasibility,
    GridCell, MorphDesign, MorphProblem, MorphWeights, OptimizerConfig, RunResult, WriteProblem, WriteWeights,
    DEFAULT_PSI_SAMPLES,
};
use scissor_core::targets::{arclength_parameterize_with, normalize_bbox, TargetCurve};
use scissor_core::Vec2;
use serde::{Deserialize, Serialize};

use crate::args::{
    AnalyzeKind, ClosureArgs, ConfigFile, Command, MorphArgs, PerturbationArgs, SensitivityArgs, SimulateArgs, SolverArgs,
    WriteArgs,
};
use crate::error::{CliError, CliResult};
use crate::input::{
    load_target, parse_angle, parse_angle_pair, parse_counts, parse_float_list, parse_floats, parse_pair, LoadedTarget,
};
use crate::output::{csv_bytes, num, OutDir};
use crate::svg::{render, Panel, Series, PALETTE};

/// Contents of `design.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignFile {
    pub design: Design,
    /// Absent when the run did not produce a finite loss.
    pub loss: Option<f64>,
    pub seed: u64,
    pub iterations: usize,
    pub feasibility: Feasibility,
    /// Actuation samples of the trajectory (writing designs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

impl DesignFile {
    fn from_run(run: &RunResult, samples: Option<usize>) -> Self {
        DesignFile {
            design: run.design.clone(),
            loss: Some(run.loss).filter(|l| l.is_finite()),
            seed: run.seed,
            iterations: run.iterations,
            feasibility: run.feasibility,
            samples,
        }
    }
}

pub fn dispatch(command: &Command, config: Option<ConfigFile>) -> CliResult<()> {
    let common = command.common();
    let mut out = OutDir::create(&common.out, &command.names().join(" "), command.echo(), common.seed)?;
    if let Some((path, bytes)) = &config {
        out.add_input(path, bytes);
    }
    match command {
        Command::Morph(a) => morph(a, out),
        Command::Write(a) => write(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Analyze(a) => match &a.kind {
            AnalyzeKind::Sensitivity(k) => sensitivity(k, out),
            AnalyzeKind::Closure(k) => closure(k, out),
            AnalyzeKind::Perturbation(k) => perturbation(k, out),
        },
    }
}

fn bounds(s: &SolverArgs) -> CliResult<Bounds> {
    let (alpha_min, alpha_max) = parse_pair(&s.alpha_bounds, "--alpha-bounds")?;
    let length = s.length_bounds.as_deref().map(|b| parse_pair(b, "--length-bounds")).transpose()?;
    let b = Bounds {
        alpha_min,
        alpha_max,
        length,
    };
    b.validate()?;
    Ok(b)
}

fn optimizer(s: &SolverArgs, seed: u64) -> CliResult<OptimizerConfig> {
    let cfg = OptimizerConfig {
        learning_rate: s.learning_rate,
        max_iterations: s.iterations,
        seed,
        ..OptimizerConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn load(spec: &str, closed: bool, out: &mut OutDir) -> CliResult<LoadedTarget> {
    let t = load_target(spec, closed)?;
    if let (Some(path), Some(bytes)) = (&t.source, &t.bytes) {
        out.add_input(path, bytes);
    }
    Ok(t)
}

fn xy_rows(points: &[Vec2]) -> Vec<Vec<String>> {
    points
        .iter()
        .enumerate()
        .map(|(i, p)| vec![i.to_string(), num(p.x), num(p.y)])
        .collect()
}

fn polyline(points: &[Vec2], close: bool) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    if close {
        if let Some(&first) = v.first() {
            v.push(first);
        }
    }
    v
}

/// Unit centers of a morphing design and whether every unit assembles.
pub fn morph_shape(d: &MorphDesign) -> (Vec<Vec2>, bool) {
    let angles = section_angles(&d.alphas, d.psi);
    let assembled = angles.iter().all(|a| a.excess <= 0.0);
    (chain_centers(&d.alphas, &angles, d.l, d.base_position, d.beta0), assembled)
}

fn write_shape(out: &mut OutDir, d: &MorphDesign) -> CliResult<(Vec<Vec2>, bool)> {
    let (shape, assembled) = morph_shape(d);
    out.write_csv("shape.csv", &["unit", "x", "y"], &xy_rows(&shape))?;
    Ok((shape, assembled))
}

fn write_trajectory_csv(out: &mut OutDir, d: &scissor_core::optimize::WriteDesign, samples: usize) -> CliResult<bool> {
    let (traj, assembled) = write_trajectory(d, samples);
    let rows: Vec<Vec<String>> = traj
        .psi_grid
        .iter()
        .zip(&traj.points)
        .map(|(psi, p)| vec![num(*psi), num(p.x), num(p.y)])
        .collect();
    out.write_csv("trajectory.csv", &["psi", "x", "y"], &rows)?;
    Ok(assembled)
}

fn morph(a: &MorphArgs, mut out: OutDir) -> CliResult<()> {
    let target = load(&a.target.target, a.target.closed, &mut out)?;
    let w = parse_floats(&a.weights, 3, "--weights")?;
    let bounds = bounds(&a.solver)?;
    let cfg = optimizer(&a.solver, a.common.seed)?;
    if a.units < 2 {
        return Err(CliError::invalid(format!("--units must be at least 2, got {}", a.units)));
    }
    let curve = &target.curve;
    let m = if curve.closed { a.units } else { a.units - 1 };
    let profile = arclength_parameterize_with(curve, m.max(3), a.target.smoothing)?;
    let weights = MorphWeights {
        kappa: w[0],
        tip: w[1],
        rot: w[2],
    };
    let problem = MorphProblem::new(profile, a.units, weights, bounds)?;
    let run = solve_morph(&problem, &cfg, &problem.initial_params(a.common.seed, true))?;
    let Design::Morph(d) = &run.design else {
        unreachable!("morphing yields a morphing design")
    };
    out.write_json("design.json", &DesignFile::from_run(&run, None))?;
    let (shape, assembled) = write_shape(&mut out, d)?;
    let panel = Panel::shape(
        format!("{} units, loss {:.4e}", a.units, run.loss),
        vec![
            Series::line(polyline(&curve.points, curve.closed), "#888888")
                .dashed()
                .labelled("target"),
            Series::line(polyline(&shape, false), PALETTE[0])
                .with_markers()
                .labelled("deployed"),
        ],
    );
    out.write("overlay.svg", render(&[panel], 1).as_bytes())?;
    let dir = out.finish()?;
    println!(
        "morph: loss {:.6e} after {} iterations, {} units; wrote {}",
        run.loss,
        run.iterations,
        a.units,
        dir.display()
    );
    if run.feasibility.tip_reached == Some(false) {
        eprintln!("warning: the last unit misses the target end point by more than 1% of the target length");
    }
    if !assembled {
        return Err(CliError::Infeasible("the optimized chain does not assemble".into()));
    }
    Ok(())
}

fn write_problem(a: &WriteArgs, curve: &TargetCurve) -> CliResult<WriteProblem> {
    if a.samples < 5 {
        return Err(CliError::invalid(format!("--samples must be at least 5, got {}", a.samples)));
    }
    let w = parse_floats(&a.weights, 3, "--weights")?;
    let target = arclength_parameterize_with(&normalize_bbox(curve)?, a.samples - 1, a.target.smoothing)?;
    let p = WriteProblem {
        target,
        sections: vec![1, 1],
        weights: WriteWeights {
            smooth: w[0],
            length: w[1],
            steric: w[2],
        },
        phi_min: parse_angle(&a.phi_min, "--phi-min")?,
        psi_range: parse_angle_pair(&a.psi_range, "--psi-range")?,
        optimize_psi: a.optimize_psi,
        n_psi_samples: a.samples,
        bounds: bounds(&a.solver)?,
    };
    p.validate()?;
    Ok(p)
}

fn sections_for(n_units: usize, sections: Option<usize>) -> CliResult<Vec<usize>> {
    match sections {
        Some(m) => Ok(split_units(n_units, m)?),
        None => Ok(vec![1; n_units]),
    }
}

/// One grid cell, seeded as `seed + restart`; restart 0 starts near the
/// symmetric chain.
fn run_cell(base: &WriteProblem, cell: GridCell, sections: Option<usize>, cfg: &OptimizerConfig) -> scissor_core::Result<RunResult> {
    let p = WriteProblem {
        sections: sections_for(cell.n_units, sections).map_err(|_| {
            scissor_core::Error::Config(format!("cannot split {} units into sections", cell.n_units))
        })?,
        ..base.clone()
    };
    p.validate()?;
    let seed = cell.seed(cfg.seed);
    let init = p.initial_params(seed, cell.restart == 0);
    solve_write(&p, &OptimizerConfig { seed, ..cfg.clone() }, &init)
}

const GRID_HEADER: [&str; 5] = ["n_units", "seed", "loss", "iterations", "converged"];

fn grid_row(n_units: usize, seed: u64, loss: f64, iterations: usize, converged: bool) -> Vec<String> {
    vec![
        n_units.to_string(),
        seed.to_string(),
        num(loss),
        iterations.to_string(),
        converged.to_string(),
    ]
}

fn write(a: &WriteArgs, mut out: OutDir) -> CliResult<()> {
    let target = load(&a.target.target, a.target.closed, &mut out)?;
    let base = write_problem(a, &target.curve)?;
    let cfg = optimizer(&a.solver, a.common.seed)?;
    let counts = match &a.grid {
        Some(g) => parse_counts(g, "--grid")?,
        None => vec![a.units],
    };
    if a.restarts == 0 {
        return Err(CliError::invalid("--restarts must be at least 1"));
    }
    for &n in &counts {
        if n < 2 {
            return Err(CliError::invalid(format!("unit counts must be at least 2, got {n}")));
        }
        sections_for(n, a.sections)?;
    }
    let deadline = match a.time_limit {
        Some(t) if t.is_finite() && t >= 0.0 => Some(Instant::now() + Duration::from_secs_f64(t)),
        Some(t) => return Err(CliError::invalid(format!("--time-limit must be non-negative, got {t}"))),
        None => None,
    };

    let partial_path = out.path("gridsearch.csv.partial");
    let partial_err = |e| CliError::io(format!("writing {}", partial_path.display()), e);
    let mut file = File::create(&partial_path).map_err(partial_err)?;
    file.write_all(&csv_bytes(&GRID_HEADER, &[])?).map_err(partial_err)?;
    let partial = Mutex::new(file);

    let cells = grid_cells(&counts, a.restarts);
    let results: Vec<(GridCell, Option<scissor_core::Result<RunResult>>)> = cells
        .par_iter()
        .map(|&cell| {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return (cell, None);
            }
            let res = run_cell(&base, cell, a.sections, &cfg);
            let seed = cell.seed(cfg.seed);
            let row = match &res {
                Ok(r) => grid_row(cell.n_units, seed, r.loss, r.iterations, r.feasibility.converged),
                Err(_) => grid_row(cell.n_units, seed, f64::INFINITY, 0, false),
            };
            if let Ok(line) = csv_bytes(&[], &[row]) {
                let mut f = partial.lock().unwrap_or_else(|e| e.into_inner());
                let _ = f.write_all(&line).and_then(|_| f.flush());
            }
            match &res {
                Ok(r) => eprintln!("run n_units={} seed={seed}: loss {:.6e}", cell.n_units, r.loss),
                Err(e) => eprintln!("run n_units={} seed={seed}: failed: {e}", cell.n_units),
            }
            (cell, Some(res))
        })
        .collect();

    let skipped = results.iter().filter(|r| r.1.is_none()).count();
    if skipped > 0 {
        out.finish()?;
        return Err(CliError::Interrupted {
            reason: format!("time limit reached with {skipped} of {} runs not started", results.len()),
            partial: partial_path,
        });
    }
    let results: Vec<(GridCell, scissor_core::Result<RunResult>)> =
        results.into_iter().map(|(c, r)| (c, r.expect("checked above"))).collect();

    let panels: Vec<Panel> = results
        .iter()
        .map(|(cell, res)| {
            let title = format!("N={} seed={}", cell.n_units, cell.seed(cfg.seed));
            match res {
                Ok(RunResult {
                    design: Design::Write(d),
                    loss,
                    ..
                }) => {
                    let (traj, _) = write_trajectory(d, base.n_psi_samples);
                    Panel::shape(
                        format!("{title} loss={loss:.4}"),
                        vec![Series::line(polyline(&traj.points, false), PALETTE[0])],
                    )
                }
                _ => Panel::shape(format!("{title} failed"), Vec::new()),
            }
        })
        .collect();

    let grid = collect_grid(results, &cfg)?;
    let rows: Vec<Vec<String>> = grid
        .table
        .iter()
        .map(|r| grid_row(r.n_units, r.seed, r.loss, r.iterations, r.converged))
        .collect();
    out.write_csv("gridsearch.csv", &GRID_HEADER, &rows)?;
    out.write("collage.svg", render(&panels, 5).as_bytes())?;
    let best = &grid.best;
    out.write_json("design.json", &DesignFile::from_run(best, Some(base.n_psi_samples)))?;
    let Design::Write(d) = &best.design else {
        unreachable!("writing yields a writing design")
    };
    let assembled = write_trajectory_csv(&mut out, d, base.n_psi_samples)?;
    let _ = std::fs::remove_file(&partial_path);
    let dir = out.finish()?;
    println!(
        "write: best loss {:.6e} (N={}, seed={}) over {} runs; wrote {}",
        best.loss,
        d.sections.iter().map(|s| s.0).sum::<usize>(),
        best.seed,
        rows.len(),
        dir.display()
    );
    if !assembled {
        return Err(CliError::Infeasible("the best design does not assemble over the whole sweep".into()));
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, mut out: OutDir) -> CliResult<()> {
    let bytes = std::fs::read(&a.design)
        .map_err(|e| CliError::invalid(format!("cannot read design {}: {e}", a.design.display())))?;
    let file: DesignFile = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::invalid(format!("{} is not a design file: {e}", a.design.display())))?;
    out.add_input(&a.design, &bytes);
    let assembled = match &file.design {
        Design::Morph(d) => write_shape(&mut out, d)?.1,
        Design::Write(d) => {
            let samples = a.samples.or(file.samples).unwrap_or(DEFAULT_PSI_SAMPLES);
            if samples < 2 {
                return Err(CliError::invalid("--samples must be at least 2"));
            }
            write_trajectory_csv(&mut out, d, samples)?
        }
    };
    let dir = out.finish()?;
    println!("simulate: wrote {}", dir.display());
    if !assembled {
        return Err(CliError::Infeasible("the design does not assemble".into()));
    }
    Ok(())
}

fn closure(a: &ClosureArgs, mut out: OutDir) -> CliResult<()> {
    let alphas = parse_float_list(&a.alpha, "--alpha")?;
    let units = parse_counts(&a.units, "--units")?;
    let rows = closure_experiment(&alphas, &units);
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let err = match (r.theory, r.measured) {
                (Some(t), Some(m)) => Some((t - m).abs()),
                _ => None,
            };
            vec![
                num(r.alpha),
                r.n_units.to_string(),
                opt(r.theory),
                opt(r.measured),
                opt(err),
                r.flag.clone().unwrap_or_default(),
            ]
        })
        .collect();
    out.write_csv("closure.csv", &["alpha", "n_units", "theory", "measured", "abs_error", "flag"], &table)?;
    let mut series = Vec::new();
    for (i, &alpha) in alphas.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pick = |f: fn(&scissor_core::analysis::ClosureRow) -> Option<f64>| -> Vec<(f64, f64)> {
            rows.iter()
                .filter(|r| r.alpha == alpha)
                .map(|r| (r.n_units as f64, f(r).unwrap_or(f64::NAN)))
                .collect()
        };
        series.push(Series::line(pick(|r| r.theory), color).labelled(format!("alpha={alpha}")));
        let mut measured = Series::line(pick(|r| r.measured), color).dashed().with_markers();
        measured.points.retain(|p| p.1.is_finite());
        series.push(measured);
    }
    let panel = Panel::graph("closure actuation", "units", "psi (rad)", series);
    out.write("closure.svg", render(&[panel], 1).as_bytes())?;
    let flagged = rows.iter().filter(|r| r.flag.is_some()).count();
    let worst = rows
        .iter()
        .filter_map(|r| Some((r.theory? - r.measured?).abs()))
        .fold(0.0, f64::max);
    let dir = out.finish()?;
    println!(
        "closure: {} rows, {flagged} flagged, max |theory - measured| {worst:.3e}; wrote {}",
        rows.len(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct SensitivitySummary {
    n_units: Vec<usize>,
    spearman: Vec<f64>,
    collapse_deviation: Option<f64>,
}

fn sensitivity(a: &SensitivityArgs, mut out: OutDir) -> CliResult<()> {
    let units = parse_counts(&a.units, "--units")?;
    let psi = parse_angle(&a.psi, "--psi")?;
    let profiles: Vec<SensitivityProfile> = units
        .par_iter()
        .map(|&n| sensitivity_profile(n, a.epsilon, a.samples, psi, a.common.seed))
        .collect::<scissor_core::Result<_>>()?;
    let mut rows = Vec::new();
    for p in &profiles {
        for ((j, x), s) in p.unit.iter().zip(p.relative_position()).zip(&p.sigma) {
            rows.push(vec![p.n_units.to_string(), j.to_string(), num(x), num(*s)]);
        }
    }
    out.write_csv("sensitivity.csv", &["n_units", "unit", "relative_position", "sigma"], &rows)?;
    let rho: Vec<f64> = profiles
        .iter()
        .map(|p| spearman(&p.unit.iter().map(|&j| j as f64).collect::<Vec<_>>(), &p.sigma))
        .collect();
    let collapse = (profiles.len() > 1).then(|| collapse_deviation(&profiles));
    out.write_json(
        "summary.json",
        &SensitivitySummary {
            n_units: units.clone(),
            spearman: rho.clone(),
            collapse_deviation: collapse,
        },
    )?;
    let series = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let top = p.sigma.iter().cloned().fold(f64::MIN, f64::max);
            let pts = p
                .relative_position()
                .into_iter()
                .zip(&p.sigma)
                .map(|(x, s)| (x, (s / top).log10()))
                .collect();
            Series::line(pts, PALETTE[i % PALETTE.len()]).labelled(format!("N={}", p.n_units))
        })
        .collect();
    let panel = Panel::graph("tip sensitivity", "j / N", "log10(sigma / max sigma)", series);
    out.write("sensitivity.svg", render(&[panel], 1).as_bytes())?;
    let dir = out.finish()?;
    let rho_text: Vec<String> = rho.iter().map(|r| format!("{r:.3}")).collect();
    println!(
        "sensitivity: spearman {}, collapse deviation {}; wrote {}",
        rho_text.join(" / "),
        collapse.map(|c| format!("{c:.3}")).unwrap_or_else(|| "n/a".into()),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct PerturbationSummary {
    alpha0: f64,
    n_units: usize,
    psi: f64,
    log_log_slope: Option<f64>,
}

/// Least-squares slope of `log y` against `log x`.
fn log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some(sxy / sxx).filter(|s| s.is_finite())
}

fn perturbation(a: &PerturbationArgs, mut out: OutDir) -> CliResult<()> {
    let eps = parse_float_list(&a.epsilon, "--epsilon")?;
    let psi = parse_angle(&a.psi, "--psi")?;
    let reports = eps
        .iter()
        .map(|&e| perturbation_validation(a.alpha0, e, a.units, psi))
        .collect::<scissor_core::Result<Vec<_>>>()?;
    let errors: Vec<f64> = reports.iter().map(|r| r.max_error).collect();
    let rows: Vec<Vec<String>> = eps.iter().zip(&errors).map(|(e, m)| vec![num(*e), num(*m)]).collect();
    out.write_csv("perturbation.csv", &["epsilon", "max_error"], &rows)?;
    let slope = log_slope(&eps, &errors);
    out.write_json(
        "summary.json",
        &PerturbationSummary {
            alpha0: a.alpha0,
            n_units: a.units,
            psi,
            log_log_slope: slope,
        },
    )?;
    let pts: Vec<(f64, f64)> = eps.iter().zip(&errors).map(|(e, m)| (e.log10(), m.log10())).collect();
    let panel = Panel::graph(
        "perturbative vs exact chain",
        "log10 epsilon",
        "log10 max node error",
        vec![Series::line(pts, PALETTE[0]).with_markers()],
    );
    out.write("perturbation.svg", render(&[panel], 1).as_bytes())?;
    let dir = out.finish()?;
    println!(
        "perturbation: log-log slope {}; wrote {}",
        slope.map(|s| format!("{s:.3}")).unwrap_or_else(|| "n/a".into()),
        dir.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let x = [1e-3, 2e-3, 4e-3];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        assert!((log_slope(&x, &y).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(log_slope(&[1.0], &[1.0]), None);
    }

    #[test]
    fn per_unit_sections_by_default() {
        assert_eq!(sections_for(4, None).unwrap(), vec![1; 4]);
        assert_eq!(sections_for(7, Some(3)).unwrap(), vec![3, 2, 2]);
        assert!(sections_for(2, Some(3)).is_err());
    }
}
