//! Second-order central-difference discretization of
//! `-a u_xx - b u_yy + c u_x + d u_y` on the five-point stencil.

use crate::error::Result;
use crate::grid::Grid2D;
use crate::model::ProblemSpec;
use crate::stencil::{slot, Assembled, BoundaryNodes, StencilRow};

/// Five-point row at a node with coefficients `(a, b, c, d)`.
pub fn cds_row(a: f64, b: f64, c: f64, d: f64, hx: f64, hy: f64) -> StencilRow {
    let mut row = [0.0; 9];
    row[slot(-1, 0)] = -c / (2.0 * hx) - a / (hx * hx);
    row[slot(1, 0)] = c / (2.0 * hx) - a / (hx * hx);
    row[slot(0, -1)] = -d / (2.0 * hy) - b / (hy * hy);
    row[slot(0, 1)] = d / (2.0 * hy) - b / (hy * hy);
    row[slot(0, 0)] = 2.0 * a / (hx * hx) + 2.0 * b / (hy * hy);
    row
}

pub fn assemble_cds(problem: &ProblemSpec, l: usize, grid: &Grid2D) -> Result<Assembled> {
    assemble_cds_with(problem, l, grid, &BoundaryNodes::new(grid))
}

pub(crate) fn assemble_cds_with(
    problem: &ProblemSpec,
    l: usize,
    grid: &Grid2D,
    boundary: &BoundaryNodes,
) -> Result<Assembled> {
    problem.check_diffusion(l, grid)?;
    let tc = &problem.transport[l];
    let (hx, hy) = (grid.hx(), grid.hy());
    Assembled::from_rows(grid, boundary, |i, j| {
        let (x, y) = (grid.x(i), grid.y(j));
        Ok(cds_row((tc.a)(x, y), (tc.b)(x, y), (tc.c)(x, y), (tc.d)(x, y), hx, hy))
    })
}

/// Boundary load `Phi(t)` for species `l`: the stencil contributions of the
/// Dirichlet values, moved to the right-hand side, so that
/// `P u - Phi` equals the full stencil applied with the true boundary data.
pub fn cds_boundary_vector(problem: &ProblemSpec, l: usize, grid: &Grid2D, t: f64) -> Result<Vec<f64>> {
    let bn = BoundaryNodes::new(grid);
    let op = assemble_cds_with(problem, l, grid, &bn)?;
    let values: Vec<f64> = bn
        .nodes()
        .iter()
        .map(|&(i, j)| (problem.boundary)(l, grid.x(i), grid.y(j), t))
        .collect();
    let mut phi = vec![0.0; grid.interior_len()];
    op.coupling.accumulate(-1.0, &values, &mut phi);
    Ok(phi)
}
