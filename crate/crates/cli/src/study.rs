//! Mesh-refinement studies: run every mesh of a configuration, tabulate
//! errors, ratios and orders, and write the artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use parafd::analysis::{max_norm_error, probe_value, ratio_and_order, relative_error};
use parafd::model::{make_example1_with, make_example2_with, Example1Params, Example2Params};
use parafd::richardson::{solve_space_re, solve_spacetime_re};
use parafd::{integrate, FieldVector, Grid2D, ProblemSpec, SchemeKind, SolverReport, TimeGrid};

use crate::config::{Mesh, Probe, ProblemKind, ReMode, RunConfig};
use crate::dump::{emit_field_dump, fmt17};
use crate::{write_atomic, CliError};

pub const CSV_HEADER: &str = "problem,scheme,re_mode,Mx,My,N,species,error,ratio,order,newton_avg,krylov_avg,wall_ms";

pub fn build_problem(cfg: &RunConfig) -> Result<ProblemSpec, CliError> {
    match cfg.problem {
        ProblemKind::Manufactured => {
            let base = Example1Params::default();
            make_example1_with(Example1Params {
                mu: cfg.mu.value(base.x_len, base.t_final),
                cos_theta: cfg.cos_theta,
                chemistry: cfg.chemistry,
                ..base
            })
        }
        ProblemKind::AirPollution => {
            let base = Example2Params::default();
            make_example2_with(Example2Params {
                mu: cfg.mu.value(base.x_len, base.t_final),
                cos_theta: cfg.cos_theta,
                chemistry: cfg.chemistry,
                boundary: cfg.boundary,
                ..base
            })
        }
    }
    .map_err(|e| CliError::config("problem", e.to_string()))
}

/// Physical coordinates of the probe. Mesh indices refer to the first mesh.
pub fn probe_point(cfg: &RunConfig, problem: &ProblemSpec) -> (f64, f64) {
    match cfg.probe {
        Probe::Center => (problem.x_len / 2.0, problem.y_len / 2.0),
        Probe::Sixth => (problem.x_len / 6.0, problem.y_len / 6.0),
        Probe::Node(i, j) => {
            let m = cfg.meshes[0];
            (i as f64 * problem.x_len / m.mx as f64, j as f64 * problem.y_len / m.my as f64)
        }
    }
}

/// Solution of one mesh of the study on its (coarsest) spatial grid.
#[derive(Debug, Clone)]
pub struct MeshRun {
    pub mesh: Mesh,
    pub grid: Grid2D,
    pub solution: FieldVector,
    pub report: SolverReport,
    pub wall_ms: f64,
}

pub fn solve_mesh(cfg: &RunConfig, problem: &ProblemSpec, mesh: Mesh) -> Result<MeshRun, CliError> {
    let grid = problem.grid(mesh.mx, mesh.my).map_err(|e| CliError::config("mesh", e.to_string()))?;
    let time = TimeGrid::new(problem.t_final, mesh.n).map_err(|e| CliError::config("mesh", e.to_string()))?;
    let solver = cfg.solver_config();
    let parallel = !cfg.deterministic;
    let start = Instant::now();
    let fail = |source| CliError::Solver { mesh, source };
    let (solution, report) = match cfg.re_mode {
        ReMode::None => integrate(problem, &grid, &time, cfg.scheme, &solver).map_err(fail)?,
        ReMode::Space | ReMode::SpaceTime => {
            let re = if cfg.re_mode == ReMode::Space {
                solve_space_re(problem, &grid, &time, cfg.scheme, &solver, parallel)
            } else {
                solve_spacetime_re(problem, &grid, &time, cfg.scheme, &solver, parallel)
            }
            .map_err(fail)?;
            let mut merged = SolverReport::default();
            for r in &re.reports {
                merged.merge(r);
            }
            (re.solution, merged)
        }
    };
    Ok(MeshRun {
        mesh,
        grid,
        solution,
        report,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub mesh: Mesh,
    pub species: usize,
    pub error: Option<f64>,
    pub ratio: Option<f64>,
    pub order: Option<f64>,
    pub newton_avg: f64,
    pub krylov_avg: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub mesh: Mesh,
    pub x: f64,
    pub y: f64,
    pub species: usize,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct StudyOutput {
    pub runs: Vec<MeshRun>,
    pub rows: Vec<CsvRow>,
    pub probes: Vec<ProbeRow>,
}

fn check_probe(cfg: &RunConfig, problem: &ProblemSpec, point: (f64, f64)) -> Result<(), CliError> {
    for m in &cfg.meshes {
        let grid = problem.grid(m.mx, m.my).map_err(|e| CliError::config("mesh", e.to_string()))?;
        let probe = FieldVector::zeros(1, grid.interior_len());
        probe_value(&probe, &grid, 0, point.0, point.1)
            .map_err(|_| CliError::config("probe", format!("({}, {}) is not an interior node of mesh {m}", point.0, point.1)))?;
    }
    Ok(())
}

/// Per-species errors of every run: the max-norm error against the exact
/// solution when one is known, otherwise the relative deviation of the probe
/// value from the one on the last mesh (which gets no error).
fn errors(problem: &ProblemSpec, runs: &[MeshRun], probes: &[ProbeRow]) -> Result<Vec<Vec<Option<f64>>>, CliError> {
    let species = problem.species;
    if let Some(exact) = &problem.exact {
        let f = |l: usize, x: f64, y: f64, t: f64| exact(l, x, y, t);
        return runs
            .iter()
            .map(|r| {
                max_norm_error(&r.solution, &f, &r.grid, problem.t_final)
                    .map(|v| v.into_iter().map(Some).collect())
                    .map_err(|e| CliError::Solver { mesh: r.mesh, source: e })
            })
            .collect();
    }
    let last = runs.len() - 1;
    let value = |k: usize, l: usize| probes[k * species + l].value;
    Ok((0..runs.len())
        .map(|k| {
            (0..species)
                .map(|l| (k != last).then(|| relative_error(value(k, l), value(last, l))))
                .collect()
        })
        .collect())
}

pub fn run_study(cfg: &RunConfig) -> Result<StudyOutput, CliError> {
    cfg.validate()?;
    let problem = build_problem(cfg)?;
    let point = probe_point(cfg, &problem);
    check_probe(cfg, &problem, point)?;

    let runs: Vec<MeshRun> = if cfg.deterministic {
        cfg.meshes.iter().map(|&m| solve_mesh(cfg, &problem, m)).collect::<Result<_, _>>()?
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = cfg
                .meshes
                .iter()
                .map(|&m| {
                    let problem = &problem;
                    s.spawn(move || solve_mesh(cfg, problem, m))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("solver thread panicked"))
                .collect::<Result<_, _>>()
        })?
    };

    let mut probes = Vec::new();
    for r in &runs {
        for l in 0..problem.species {
            let value = probe_value(&r.solution, &r.grid, l, point.0, point.1)
                .map_err(|e| CliError::config("probe", e.to_string()))?;
            probes.push(ProbeRow {
                mesh: r.mesh,
                x: point.0,
                y: point.1,
                species: l,
                value,
            });
        }
    }

    let errs = errors(&problem, &runs, &probes)?;
    let mut rows = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        for l in 0..problem.species {
            let error = errs[k][l];
            let (ratio, order) = match (k.checked_sub(1).and_then(|p| errs[p][l]), error) {
                (Some(prev), Some(e)) => {
                    let (q, o) = ratio_and_order(prev, e, runs[k - 1].mesh.mx, r.mesh.mx);
                    (Some(q), Some(o))
                }
                _ => (None, None),
            };
            rows.push(CsvRow {
                mesh: r.mesh,
                species: l,
                error,
                ratio,
                order,
                newton_avg: r.report.newton_avg(),
                krylov_avg: r.report.krylov_avg(),
                wall_ms: r.wall_ms,
            });
        }
    }
    Ok(StudyOutput { runs, rows, probes })
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

fn scheme_label(s: SchemeKind) -> &'static str {
    match s {
        SchemeKind::Cds => "cds",
        SchemeKind::Cfds => "cfds",
    }
}

pub fn render_csv(cfg: &RunConfig, rows: &[CsvRow]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cfg.problem,
            scheme_label(cfg.scheme),
            cfg.re_mode,
            r.mesh.mx,
            r.mesh.my,
            r.mesh.n,
            r.species + 1,
            opt(r.error),
            opt(r.ratio),
            opt(r.order),
            fmt17(r.newton_avg),
            fmt17(r.krylov_avg),
            fmt17(r.wall_ms),
        ));
    }
    s
}

pub fn render_probes(cfg: &RunConfig, probes: &[ProbeRow]) -> String {
    let mut s = String::from("problem,scheme,re_mode,Mx,My,N,x,y,species,value\n");
    for p in probes {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            cfg.problem,
            scheme_label(cfg.scheme),
            cfg.re_mode,
            p.mesh.mx,
            p.mesh.my,
            p.mesh.n,
            fmt17(p.x),
            fmt17(p.y),
            p.species + 1,
            fmt17(p.value),
        ));
    }
    s
}

pub fn git_revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

pub fn render_metadata(cfg: &RunConfig) -> String {
    format!(
        "{}git_revision={}\nparafd_version={}\n",
        cfg.to_text(),
        git_revision(),
        env!("CARGO_PKG_VERSION")
    )
}

/// Paths of the artifacts written by [`write_artifacts`].
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub csv: PathBuf,
    pub probes: PathBuf,
    pub metadata: PathBuf,
    pub dumps: Vec<PathBuf>,
}

pub fn write_artifacts(cfg: &RunConfig, out: &StudyOutput) -> Result<Artifacts, CliError> {
    let dir = &cfg.out;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv = dir.join("convergence.csv");
    write_atomic(&csv, &render_csv(cfg, &out.rows))?;
    let probes = dir.join("probes.csv");
    write_atomic(&probes, &render_probes(cfg, &out.probes))?;
    let metadata = dir.join("metadata.txt");
    write_atomic(&metadata, &render_metadata(cfg))?;
    let mut dumps = Vec::new();
    if cfg.dump_fields {
        let problem = build_problem(cfg)?;
        let fields: &Path = &dir.join("fields");
        std::fs::create_dir_all(fields).map_err(|e| CliError::io(fields, e))?;
        for r in &out.runs {
            let path = fields.join(format!("{}_{}_{}.txt", scheme_label(cfg.scheme), cfg.re_mode, r.mesh));
            emit_field_dump(&r.solution, &r.grid, &problem, problem.t_final, &path)?;
            dumps.push(path);
        }
    }
    Ok(Artifacts {
        csv,
        probes,
        metadata,
        dumps,
    })
}

/// Human-readable summary of the rows, one line per mesh and species.
pub fn render_table(rows: &[CsvRow]) -> String {
    let mut s = format!(
        "{:>5} {:>5} {:>6} {:>4} {:>12} {:>9} {:>7} {:>7} {:>7} {:>10}\n",
        "Mx", "My", "N", "sp", "error", "ratio", "order", "newton", "inner", "ms"
    );
    let dash = |v: Option<f64>, prec: usize| v.map_or("-".to_string(), |x| format!("{x:.prec$}"));
    for r in rows {
        s.push_str(&format!(
            "{:>5} {:>5} {:>6} {:>4} {:>12} {:>9} {:>7} {:>7.3} {:>7.3} {:>10.1}\n",
            r.mesh.mx,
            r.mesh.my,
            r.mesh.n,
            r.species + 1,
            r.error.map_or("-".to_string(), |e| format!("{e:.4e}")),
            dash(r.ratio, 3),
            dash(r.order, 3),
            r.newton_avg,
            r.krylov_avg,
            r.wall_ms
        ));
    }
    s
}
