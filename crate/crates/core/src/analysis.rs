//! Error norms, convergence orders and positivity checks.

use crate::error::{Error, Result};
use crate::grid::{FieldVector, Grid2D};
use crate::stepper::SolverReport;

/// Per-species `max |exact - u|` over the interior nodes at time `t`.
pub fn max_norm_error(
    u: &FieldVector,
    exact: &dyn Fn(usize, f64, f64, f64) -> f64,
    grid: &Grid2D,
    t: f64,
) -> Result<Vec<f64>> {
    if u.nodes() != grid.interior_len() {
        return Err(Error::DimensionMismatch {
            expected: grid.interior_len(),
            found: u.nodes(),
        });
    }
    Ok((0..u.species())
        .map(|l| {
            u.block(l).iter().enumerate().fold(0.0f64, |m, (k, v)| {
                let (i, j) = grid.node(k);
                m.max((exact(l, grid.x(i), grid.y(j), t) - v).abs())
            })
        })
        .collect())
}

/// `max_l max_k |a - b|`.
pub fn max_difference(a: &FieldVector, b: &FieldVector) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

pub fn relative_error(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

/// Ratio `prev / current` and the observed order between two meshes with
/// `m_prev` and `m` intervals: `log2(ratio)` when the mesh is doubled and
/// `log(ratio) / log(m / m_prev)` otherwise.
pub fn ratio_and_order(err_prev: f64, err: f64, m_prev: usize, m: usize) -> (f64, f64) {
    let ratio = err_prev / err;
    let order = if m == 2 * m_prev {
        ratio.log2()
    } else {
        ratio.ln() / (m as f64 / m_prev as f64).ln()
    };
    (ratio, order)
}

/// Observed order from values on three meshes refined by the factor `r`:
/// `log(|v1 - v2| / |v2 - v3|) / log(r)`.
pub fn runge_order(v1: f64, v2: f64, v3: f64, r: f64) -> f64 {
    ((v1 - v2).abs() / (v2 - v3).abs()).ln() / r.ln()
}

/// One row of a convergence study. `ratio` and `order` are `None` on the
/// first row.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub mx: usize,
    pub my: usize,
    pub n: usize,
    pub error: f64,
    pub ratio: Option<f64>,
    pub order: Option<f64>,
    pub newton_avg: f64,
    pub krylov_avg: f64,
    pub wall_ms: f64,
}

/// Builds rows from `(mx, my, n, error, report)` in refinement order; ratios
/// and orders are taken along `mx`.
pub fn convergence_rows(runs: &[(usize, usize, usize, f64, SolverReport)]) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(runs.len());
    for (idx, (mx, my, n, error, rep)) in runs.iter().enumerate() {
        let (ratio, order) = if idx == 0 {
            (None, None)
        } else {
            let prev = &rows[idx - 1];
            let (r, o) = ratio_and_order(prev.error, *error, prev.mx, *mx);
            (Some(r), Some(o))
        };
        rows.push(ConvergenceRow {
            mx: *mx,
            my: *my,
            n: *n,
            error: *error,
            ratio,
            order,
            newton_avg: rep.newton_avg(),
            krylov_avg: rep.krylov_avg(),
            wall_ms: rep.wall_ms,
        });
    }
    rows
}

/// Value of species `l` at the mesh node located at `(x, y)`. Fails unless
/// `(x, y)` is an interior node up to `1e-9` of a mesh spacing.
pub fn probe_value(u: &FieldVector, grid: &Grid2D, l: usize, x: f64, y: f64) -> Result<f64> {
    let fi = x / grid.hx();
    let fj = y / grid.hy();
    let (i, j) = (fi.round(), fj.round());
    if (fi - i).abs() > 1e-9 || (fj - j).abs() > 1e-9 || i < 0.0 || j < 0.0 {
        return Err(Error::param(
            "probe",
            format!("({x}, {y}) is not a node of the {}x{} mesh", grid.mx(), grid.my()),
        ));
    }
    let k = grid.lex_index(i as usize, j as usize)?;
    if l >= u.species() {
        return Err(Error::param("species", format!("{l} out of range")));
    }
    Ok(u.get(l, k))
}

/// Minimum of species `l` and the `(i, j)` node where it is attained.
pub fn positivity_scan(u: &FieldVector, grid: &Grid2D, l: usize) -> (f64, (usize, usize)) {
    let (k, v) = u
        .block(l)
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bv), (k, v)| if v < bv { (k, v) } else { (bk, bv) });
    (v, grid.node(k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_values_have_zero_error() {
        let g = Grid2D::new(2.0, 1.0, 5, 4).unwrap();
        let f = |l: usize, x: f64, y: f64, t: f64| (l as f64 + 1.0) * x * y + t;
        let u = FieldVector::from_fn(&g, 3, |l, x, y| f(l, x, y, 0.5));
        assert_eq!(max_norm_error(&u, &f, &g, 0.5).unwrap(), vec![0.0; 3]);
        let errs = max_norm_error(&u, &f, &g, 0.75).unwrap();
        for e in errs {
            assert_relative_eq!(e, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn ratio_and_order_examples() {
        let (r, o) = ratio_and_order(1.6e-3, 1e-4, 8, 16);
        assert_relative_eq!(r, 16.0, max_relative = 1e-14);
        assert_relative_eq!(o, 4.0, max_relative = 1e-14);
        let (r, o) = ratio_and_order(9.0, 4.0, 16, 24);
        assert_relative_eq!(r, 2.25);
        assert_relative_eq!(o, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn runge_on_power_law() {
        let v = |h: f64| 3.0 + 0.7 * h.powi(3);
        assert_relative_eq!(runge_order(v(0.4), v(0.2), v(0.1), 2.0), 3.0, max_relative = 1e-10);
    }

    #[test]
    fn rows_have_sentinel_first() {
        let rep = SolverReport::default();
        let rows = convergence_rows(&[(4, 4, 4, 4e-2, rep.clone()), (8, 8, 8, 1e-2, rep)]);
        assert!(rows[0].ratio.is_none() && rows[0].order.is_none());
        assert_relative_eq!(rows[1].order.unwrap(), 2.0);
    }

    #[test]
    fn probe_and_positivity() {
        let g = Grid2D::new(500.0, 500.0, 12, 12).unwrap();
        let u = FieldVector::from_fn(&g, 2, |l, x, y| (x - 100.0) * (y - 300.0) + l as f64);
        let v = probe_value(&u, &g, 1, 500.0 / 6.0, 500.0 / 6.0).unwrap();
        assert_relative_eq!(v, (500.0 / 6.0 - 100.0) * (500.0 / 6.0 - 300.0) + 1.0, max_relative = 1e-12);
        assert!(probe_value(&u, &g, 0, 50.0, 50.0).is_err());
        assert!(probe_value(&u, &g, 0, 0.0, 250.0).is_err());
        let (min, (i, j)) = positivity_scan(&u, &g, 0);
        assert_eq!((i, j), (11, 1));
        assert!(min < 0.0);
    }
}
