//! Richardson extrapolation on nested grids.
//!
//! Two solutions with leading errors `C h^s` and `C (h/2)^s` combine as
//! `g1 u_h + g2 u_{h/2}` with `g1 + g2 = 1` and `g1 + g2 / 2^s = 0`. The
//! space-time variant applies the same weights along both axes to four
//! solves on `{h, h/2} x {tau, tau/2}`.

use crate::error::{Error, Result};
use crate::grid::{restrict, FieldVector, Grid2D, TimeGrid};
use crate::model::ProblemSpec;
use crate::stepper::{integrate, SchemeKind, SolverConfig, SolverReport};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct REWeights {
    pub gamma1: f64,
    pub gamma2: f64,
    pub sigma: u32,
}

pub fn re_weights(sigma: u32) -> Result<REWeights> {
    if sigma == 0 || sigma > 52 {
        return Err(Error::param("sigma", format!("order must lie in 1..=52, got {sigma}")));
    }
    let p = (1u64 << sigma) as f64;
    let gamma2 = p / (p - 1.0);
    Ok(REWeights {
        gamma1: -1.0 / (p - 1.0),
        gamma2,
        sigma,
    })
}

fn require_doubled(coarse: &Grid2D, fine: &Grid2D) -> Result<()> {
    match Grid2D::refinement_factor(coarse, fine)? {
        2 => Ok(()),
        r => Err(Error::NonNestedGrids(format!("expected refinement factor 2, got {r}"))),
    }
}

fn require_halved(coarse: &TimeGrid, fine: &TimeGrid) -> Result<()> {
    let same_end = (coarse.t_final() - fine.t_final()).abs() <= 1e-12 * coarse.t_final().abs();
    if !same_end || fine.steps() != 2 * coarse.steps() {
        return Err(Error::NonNestedGrids(format!(
            "time grids {} and {} steps over [0, {}] and [0, {}] are not nested by 2",
            coarse.steps(),
            fine.steps(),
            coarse.t_final(),
            fine.t_final()
        )));
    }
    Ok(())
}

/// `g1 u_h + g2 restrict(u_{h/2})` on the coarse grid.
pub fn extrapolate_space(
    u_h: &FieldVector,
    u_h2: &FieldVector,
    coarse: &Grid2D,
    fine: &Grid2D,
    sigma: u32,
) -> Result<FieldVector> {
    require_doubled(coarse, fine)?;
    let w = re_weights(sigma)?;
    let fine_on_coarse = restrict(u_h2, fine, coarse)?;
    if u_h.len() != fine_on_coarse.len() {
        return Err(Error::DimensionMismatch {
            expected: fine_on_coarse.len(),
            found: u_h.len(),
        });
    }
    let data = u_h
        .as_slice()
        .iter()
        .zip(fine_on_coarse.as_slice())
        .map(|(a, b)| w.gamma1 * a + w.gamma2 * b)
        .collect();
    FieldVector::from_vec(u_h.species(), u_h.nodes(), data)
}

/// Tensor-product combination of the solutions on
/// `[(h, tau), (h, tau/2), (h/2, tau), (h/2, tau/2)]`.
pub fn extrapolate_spacetime(
    solutions: [&FieldVector; 4],
    grids: (&Grid2D, &Grid2D),
    times: (&TimeGrid, &TimeGrid),
    sigma_space: u32,
    sigma_time: u32,
) -> Result<FieldVector> {
    let (coarse, fine) = grids;
    require_doubled(coarse, fine)?;
    require_halved(times.0, times.1)?;
    let ws = re_weights(sigma_space)?;
    let wt = re_weights(sigma_time)?;
    let spaces = [(ws.gamma1, false), (ws.gamma1, false), (ws.gamma2, true), (ws.gamma2, true)];
    let time_w = [wt.gamma1, wt.gamma2, wt.gamma1, wt.gamma2];
    let mut out: Option<FieldVector> = None;
    for (idx, u) in solutions.iter().enumerate() {
        let (gs, is_fine) = spaces[idx];
        let on_coarse = if is_fine {
            restrict(u, fine, coarse)?
        } else {
            (*u).clone()
        };
        let acc = out.get_or_insert_with(|| FieldVector::zeros(on_coarse.species(), on_coarse.nodes()));
        if acc.len() != on_coarse.len() {
            return Err(Error::DimensionMismatch {
                expected: acc.len(),
                found: on_coarse.len(),
            });
        }
        let weight = gs * time_w[idx];
        for (a, b) in acc.as_mut_slice().iter_mut().zip(on_coarse.as_slice()) {
            *a += weight * b;
        }
    }
    Ok(out.expect("four solutions"))
}

/// Formal spatial order of a scheme.
pub fn spatial_order(scheme: SchemeKind) -> u32 {
    match scheme {
        SchemeKind::Cds => 2,
        SchemeKind::Cfds => 4,
    }
}

/// Extrapolated coarse-grid solution together with the reports of the
/// underlying solves.
#[derive(Debug, Clone)]
pub struct Extrapolated {
    pub solution: FieldVector,
    pub reports: Vec<SolverReport>,
}

fn solve_all(
    problem: &ProblemSpec,
    jobs: &[(Grid2D, TimeGrid)],
    scheme: SchemeKind,
    cfg: &SolverConfig,
    parallel: bool,
) -> Result<Vec<(FieldVector, SolverReport)>> {
    if !parallel {
        return jobs.iter().map(|(g, t)| integrate(problem, g, t, scheme, cfg)).collect();
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(g, t)| s.spawn(move || integrate(problem, g, t, scheme, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    })
}

/// Solves on `grid` and its refinement by 2 with the same time grid and
/// extrapolates in space. With `parallel` the two solves run on separate
/// threads; results do not depend on it.
pub fn solve_space_re(
    problem: &ProblemSpec,
    grid: &Grid2D,
    time: &TimeGrid,
    scheme: SchemeKind,
    cfg: &SolverConfig,
    parallel: bool,
) -> Result<Extrapolated> {
    let fine = Grid2D::new(grid.x_len(), grid.y_len(), 2 * grid.mx(), 2 * grid.my())?;
    let jobs = [(*grid, *time), (fine, *time)];
    let mut out = solve_all(problem, &jobs, scheme, cfg, parallel)?;
    let (u_h2, r2) = out.pop().expect("two solves");
    let (u_h, r1) = out.pop().expect("two solves");
    let solution = extrapolate_space(&u_h, &u_h2, grid, &fine, spatial_order(scheme))?;
    Ok(Extrapolated {
        solution,
        reports: vec![r1, r2],
    })
}

/// Four solves on `{h, h/2} x {tau, tau/2}` combined with spatial order of
/// the scheme and temporal order 2.
pub fn solve_spacetime_re(
    problem: &ProblemSpec,
    grid: &Grid2D,
    time: &TimeGrid,
    scheme: SchemeKind,
    cfg: &SolverConfig,
    parallel: bool,
) -> Result<Extrapolated> {
    let fine = Grid2D::new(grid.x_len(), grid.y_len(), 2 * grid.mx(), 2 * grid.my())?;
    let fine_t = time.refined(2);
    let jobs = [
        (*grid, *time),
        (*grid, fine_t),
        (fine, *time),
        (fine, fine_t),
    ];
    let out = solve_all(problem, &jobs, scheme, cfg, parallel)?;
    let sols = [&out[0].0, &out[1].0, &out[2].0, &out[3].0];
    let solution = extrapolate_spacetime(sols, (grid, &fine), (time, &fine_t), spatial_order(scheme), 2)?;
    Ok(Extrapolated {
        solution,
        reports: out.into_iter().map(|(_, r)| r).collect(),
    })
}
