//! Fourth-order compact discretization.
//!
//! Differentiating the equation `-a u_xx - b u_yy + c u_x + d u_y = f` to
//! eliminate the leading truncation error of the central scheme gives
//!
//! ```text
//! l_h u = nu_h f,
//! l_h  = -alpha dxx - beta dyy + alpha~ dx + beta~ dy - gamma dxx dyy
//!        + theta dx dyy + theta~ dxx dy + gamma~ dx dy
//! nu_h = 1 + hx^2/12 (dxx - a~ dx) + hy^2/12 (dyy - b~ dy)
//! ```
//!
//! with `a~ = (c + 2 dx a) / a`, `b~ = (d + 2 dy b) / b` and the coefficient
//! corrections listed in [`NodeCoefficients`]. Both operators are scaled by
//! `6 hx^2` and stored as nine-point stencils `P = 6 hx^2 l_h` and
//! `Q = 6 hx^2 nu_h`.
//!
//! Coefficient differences `dx a`, `dyy b`, ... are taken from the analytic
//! coefficient fields at mesh nodes, boundary nodes included.

use crate::error::{Error, Result};
use crate::grid::Grid2D;
use crate::model::ProblemSpec;
use crate::stencil::{slot, Assembled, BoundaryNodes, StencilRow};

/// Which form of the compact-scheme coefficient formulas to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompactVariant {
    /// Entries consistent with composing `l_h` and `nu_h`: `2 dx d` in
    /// `gamma~`, `2 dx b - a~ b` in the `(+-1, 0)` first-order term and
    /// `b~` in `q(0, +-1)`.
    #[default]
    Corrected,
    /// The formulas exactly as printed: `gamma~` with the undifferentiated
    /// `2 dx` term dropped, `2 dy c - b~ c` in `p(+-1, 0)` and `a~ / sigma`
    /// in `q(0, +-1)`. Kept for comparison; it is not fourth-order accurate.
    AsPrinted,
}

impl std::str::FromStr for CompactVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "corrected" => Ok(Self::Corrected),
            "as-printed" => Ok(Self::AsPrinted),
            other => Err(format!("unknown compact variant `{other}` (expected corrected|as-printed)")),
        }
    }
}

impl std::fmt::Display for CompactVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Corrected => "corrected",
            Self::AsPrinted => "as-printed",
        })
    }
}

/// Central differences of one coefficient field at a node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldDiffs {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dyy: f64,
}

impl FieldDiffs {
    fn sample(f: &dyn Fn(f64, f64) -> f64, grid: &Grid2D, i: usize, j: usize) -> Self {
        let (hx, hy) = (grid.hx(), grid.hy());
        let at = |ii: usize, jj: usize| f(grid.x(ii), grid.y(jj));
        let centre = at(i, j);
        let (w, e, s, n) = (at(i - 1, j), at(i + 1, j), at(i, j - 1), at(i, j + 1));
        Self {
            value: centre,
            dx: (e - w) / (2.0 * hx),
            dy: (n - s) / (2.0 * hy),
            dxx: (e - 2.0 * centre + w) / (hx * hx),
            dyy: (n - 2.0 * centre + s) / (hy * hy),
        }
    }
}

/// Compact-scheme coefficients at one interior node.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NodeCoefficients {
    pub a: FieldDiffs,
    pub b: FieldDiffs,
    pub c: FieldDiffs,
    pub d: FieldDiffs,
    pub a_tilde: f64,
    pub b_tilde: f64,
    pub alpha: f64,
    pub beta: f64,
    pub alpha_tilde: f64,
    pub beta_tilde: f64,
    pub theta: f64,
    pub theta_tilde: f64,
    pub gamma: f64,
    pub gamma_tilde: f64,
}

impl NodeCoefficients {
    pub fn new(a: FieldDiffs, b: FieldDiffs, c: FieldDiffs, d: FieldDiffs, hx: f64, hy: f64, variant: CompactVariant) -> Self {
        let (hx2, hy2) = (hx * hx / 12.0, hy * hy / 12.0);
        let a_tilde = (c.value + 2.0 * a.dx) / a.value;
        let b_tilde = (d.value + 2.0 * b.dy) / b.value;
        let alpha = a.value
            + hx2 * (a.dxx - a_tilde * (a.dx - c.value) - 2.0 * c.dx)
            + hy2 * (a.dyy - b_tilde * a.dy);
        let beta = b.value
            + hx2 * (b.dxx - a_tilde * b.dx)
            + hy2 * (b.dyy - b_tilde * (b.dy - d.value) - 2.0 * d.dy);
        let alpha_tilde = c.value + hx2 * (c.dxx - a_tilde * c.dx) + hy2 * (c.dyy - b_tilde * c.dy);
        let beta_tilde = d.value + hx2 * (d.dxx - a_tilde * d.dx) + hy2 * (d.dyy - b_tilde * d.dy);
        let theta = hy2 * c.value - hx2 * (2.0 * b.dx - a_tilde * b.value);
        let theta_tilde = hx2 * d.value - hy2 * (2.0 * a.dy - b_tilde * a.value);
        let gamma = hx2 * b.value + hy2 * a.value;
        let dx_d = match variant {
            CompactVariant::Corrected => 2.0 * d.dx,
            CompactVariant::AsPrinted => 0.0,
        };
        let gamma_tilde = hx2 * (dx_d - a_tilde * d.value) + hy2 * (2.0 * c.dy - b_tilde * c.value);
        Self {
            a,
            b,
            c,
            d,
            a_tilde,
            b_tilde,
            alpha,
            beta,
            alpha_tilde,
            beta_tilde,
            theta,
            theta_tilde,
            gamma,
            gamma_tilde,
        }
    }

    /// Row of `P = 6 hx^2 l_h`.
    pub fn p_row(&self, hx: f64, hy: f64, variant: CompactVariant) -> StencilRow {
        let s = hx / hy;
        let s2 = s * s;
        let (a, b, c, d) = (self.a.value, self.b.value, self.c.value, self.d.value);
        let (at, bt) = (self.a_tilde, self.b_tilde);

        let a_xx = self.a.dxx - at * (self.a.dx - c) - 2.0 * self.c.dx;
        let a_yy = self.a.dyy - bt * self.a.dy;
        let b_xx = self.b.dxx - at * self.b.dx;
        let b_yy = self.b.dyy - 2.0 * self.d.dy - bt * (self.b.dy - d);
        let tb = 2.0 * self.b.dx - at * b;
        let ta = 2.0 * self.a.dy - bt * a;
        let edge_x = match variant {
            CompactVariant::Corrected => tb,
            CompactVariant::AsPrinted => 2.0 * self.c.dy - bt * c,
        };
        // gamma~ = hx^2/12 g1 + hy^2/12 g2
        let g1 = match variant {
            CompactVariant::Corrected => 2.0 * self.d.dx - at * d,
            CompactVariant::AsPrinted => -at * d,
        };
        let g2 = 2.0 * self.c.dy - bt * c;
        let cross = (s * g1 + g2 / s) * hx * hx / 8.0;

        let mut row = [0.0; 9];
        for sx in [-1.0f64, 1.0] {
            // (+-1, -1) and (+-1, 1)
            let base = -(a + s2 * b) / 2.0;
            row[slot(sx as isize, -1)] =
                base + sx * 0.25 * (c - s2 * tb - sx * s * d + sx * ta / s) * hx - sx * cross;
            row[slot(sx as isize, 1)] =
                base + sx * 0.25 * (c - s2 * tb + sx * s * d - sx * ta / s) * hx + sx * cross;
            row[slot(sx as isize, 0)] = s2 * b - 5.0 * a
                + sx * (3.0 * self.alpha_tilde - 0.5 * c + 0.5 * s2 * edge_x) * hx
                - 0.5 * (a_xx + a_yy / s2) * hx * hx;
            row[slot(0, sx as isize)] = a - 5.0 * s2 * b
                + sx * (3.0 * s * self.beta_tilde - 0.5 * s * d + ta / (2.0 * s)) * hx
                - 0.5 * (s2 * b_xx + b_yy) * hx * hx;
        }
        row[slot(0, 0)] = 10.0 * (a + s2 * b) + (a_xx + a_yy / s2) * hx * hx + (s2 * b_xx + b_yy) * hx * hx;
        row
    }

    /// Row of `Q = 6 hx^2 nu_h`.
    pub fn q_row(&self, hx: f64, hy: f64, variant: CompactVariant) -> StencilRow {
        let hx2 = hx * hx;
        let y_term = match variant {
            CompactVariant::Corrected => self.b_tilde * hy,
            CompactVariant::AsPrinted => self.a_tilde * hy,
        };
        let mut row = [0.0; 9];
        row[slot(0, 0)] = 4.0 * hx2;
        row[slot(-1, 0)] = 0.25 * (2.0 + self.a_tilde * hx) * hx2;
        row[slot(1, 0)] = 0.25 * (2.0 - self.a_tilde * hx) * hx2;
        row[slot(0, -1)] = 0.25 * (2.0 + y_term) * hx2;
        row[slot(0, 1)] = 0.25 * (2.0 - y_term) * hx2;
        row
    }
}

/// Per-node compact coefficients for one species, in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactCoefficients {
    pub variant: CompactVariant,
    pub nodes: Vec<NodeCoefficients>,
}

pub fn compact_coefficients(
    problem: &ProblemSpec,
    l: usize,
    grid: &Grid2D,
    variant: CompactVariant,
) -> Result<CompactCoefficients> {
    problem.check_diffusion(l, grid)?;
    let tc = &problem.transport[l];
    let nodes = (0..grid.interior_len())
        .map(|k| {
            let (i, j) = grid.node(k);
            let a = FieldDiffs::sample(&*tc.a, grid, i, j);
            let b = FieldDiffs::sample(&*tc.b, grid, i, j);
            let c = FieldDiffs::sample(&*tc.c, grid, i, j);
            let d = FieldDiffs::sample(&*tc.d, grid, i, j);
            let nc = NodeCoefficients::new(a, b, c, d, grid.hx(), grid.hy(), variant);
            if !(nc.a_tilde.is_finite() && nc.b_tilde.is_finite()) {
                return Err(Error::NonPositiveDiffusion {
                    species: l,
                    i,
                    j,
                    value: a.value.min(b.value),
                });
            }
            Ok(nc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CompactCoefficients { variant, nodes })
}

/// `P` and `Q` for species `l`.
pub fn assemble_cfds(
    problem: &ProblemSpec,
    l: usize,
    grid: &Grid2D,
    boundary: &BoundaryNodes,
    variant: CompactVariant,
) -> Result<(Assembled, Assembled)> {
    let coeffs = compact_coefficients(problem, l, grid, variant)?;
    let (hx, hy) = (grid.hx(), grid.hy());
    let at = |i: usize, j: usize| &coeffs.nodes[(j - 1) * grid.nx() + (i - 1)];
    let p = Assembled::from_rows(grid, boundary, |i, j| Ok(at(i, j).p_row(hx, hy, variant)))?;
    let q = Assembled::from_rows(grid, boundary, |i, j| Ok(at(i, j).q_row(hx, hy, variant)))?;
    Ok((p, q))
}

pub fn assemble_cfds_p(problem: &ProblemSpec, l: usize, grid: &Grid2D, variant: CompactVariant) -> Result<Assembled> {
    Ok(assemble_cfds(problem, l, grid, &BoundaryNodes::new(grid), variant)?.0)
}

pub fn assemble_cfds_q(problem: &ProblemSpec, l: usize, grid: &Grid2D, variant: CompactVariant) -> Result<Assembled> {
    Ok(assemble_cfds(problem, l, grid, &BoundaryNodes::new(grid), variant)?.1)
}

/// Boundary loads `(Phi_P, Phi_Q)` at time `t`.
///
/// `Phi_P = -P_b g(t)` carries the Dirichlet values `g`; `Phi_Q = Q_b f_b(t)`
/// carries the source `f = R(g) + xi` at the boundary nodes. The time
/// derivative part of `Q (f - u_t)` at boundary nodes is discretized by the
/// time stepper from consecutive boundary levels.
pub fn cfds_boundary_vectors(
    problem: &ProblemSpec,
    l: usize,
    grid: &Grid2D,
    t: f64,
    variant: CompactVariant,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let bn = BoundaryNodes::new(grid);
    let (p, q) = assemble_cfds(problem, l, grid, &bn, variant)?;
    let mut state = vec![0.0; problem.species];
    let mut src = vec![0.0; problem.species];
    let mut g = Vec::with_capacity(bn.len());
    let mut f = Vec::with_capacity(bn.len());
    for &(i, j) in bn.nodes() {
        let (x, y) = (grid.x(i), grid.y(j));
        for (m, s) in state.iter_mut().enumerate() {
            *s = (problem.boundary)(m, x, y, t);
        }
        problem.source(x, y, t, &state, &mut src);
        g.push(state[l]);
        f.push(src[l]);
    }
    let mut phi_p = vec![0.0; grid.interior_len()];
    let mut phi_q = vec![0.0; grid.interior_len()];
    p.coupling.accumulate(-1.0, &g, &mut phi_p);
    q.coupling.accumulate(1.0, &f, &mut phi_q);
    Ok((phi_p, phi_q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_example1, make_example2, standard_mu, TransportCoefficients};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;
    use std::sync::Arc;

    /// Nine-point row of `6 hx^2 l_h`, built by multiplying out the
    /// one-dimensional difference operators.
    fn composed_p_row(nc: &NodeCoefficients, hx: f64, hy: f64) -> StencilRow {
        let ops = |order: usize, h: f64| -> [f64; 3] {
            match order {
                0 => [0.0, 1.0, 0.0],
                1 => [-0.5 / h, 0.0, 0.5 / h],
                _ => [1.0 / (h * h), -2.0 / (h * h), 1.0 / (h * h)],
            }
        };
        let terms = [
            (-nc.alpha, 2, 0),
            (-nc.beta, 0, 2),
            (nc.alpha_tilde, 1, 0),
            (nc.beta_tilde, 0, 1),
            (-nc.gamma, 2, 2),
            (nc.theta, 1, 2),
            (nc.theta_tilde, 2, 1),
            (nc.gamma_tilde, 1, 1),
        ];
        let mut row = [0.0; 9];
        for (coef, ox, oy) in terms {
            let (wx, wy) = (ops(ox, hx), ops(oy, hy));
            for (b, wyb) in wy.iter().enumerate() {
                for (a, wxa) in wx.iter().enumerate() {
                    row[slot(a as isize - 1, b as isize - 1)] += 6.0 * hx * hx * coef * wxa * wyb;
                }
            }
        }
        row
    }

    fn constant_problem(a: f64, b: f64) -> crate::model::ProblemSpec {
        let mut p = make_example1();
        p.transport = vec![TransportCoefficients::constant(a, b, 0.0, 0.0); p.species];
        p
    }

    fn variable_problem() -> crate::model::ProblemSpec {
        let mut p = make_example1();
        p.x_len = 1.0;
        p.y_len = 1.0;
        p.transport = vec![
            TransportCoefficients {
                a: Arc::new(|x, y| 1.0 + x * x / 3.0 + y.sin() / 4.0),
                b: Arc::new(|x, y| 1.5 + (x * y).cos() / 5.0),
                c: Arc::new(|x, y| (x + 2.0 * y).sin() + x),
                d: Arc::new(|x, y| 0.7 * (2.0 * x - y).cos() - y * y),
            };
            p.species
        ];
        p
    }

    #[test]
    fn constant_coefficient_invariants() {
        let k = 1.8;
        let p = constant_problem(k, k);
        let g = Grid2D::new(500.0, 400.0, 8, 5).unwrap();
        let cc = compact_coefficients(&p, 0, &g, CompactVariant::Corrected).unwrap();
        let (hx, hy) = (g.hx(), g.hy());
        for n in &cc.nodes {
            assert_eq!((n.a_tilde, n.b_tilde), (0.0, 0.0));
            assert_eq!((n.alpha, n.beta), (k, k));
            assert_eq!((n.alpha_tilde, n.beta_tilde, n.theta, n.theta_tilde, n.gamma_tilde), (0.0, 0.0, 0.0, 0.0, 0.0));
            assert_relative_eq!(n.gamma, k * (hx * hx + hy * hy) / 12.0, max_relative = 1e-15);
        }
    }

    #[test]
    fn wind_coefficients() {
        let p = make_example1();
        let g = p.grid(8, 8).unwrap();
        let cc = compact_coefficients(&p, 0, &g, CompactVariant::Corrected).unwrap();
        let mu = standard_mu(1440.0);
        for (k, n) in cc.nodes.iter().enumerate() {
            let (_, j) = g.node(k);
            assert_relative_eq!(n.a_tilde, mu * (g.y(j) - 250.0) / 1.8, epsilon = 1e-15);
            assert_relative_eq!(n.gamma, 1.8 * g.hx() * g.hx() / 6.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn mehrstellen_stencils() {
        let p = constant_problem(1.0, 1.0);
        let g = Grid2D::new(1.0, 1.0, 6, 6).unwrap();
        let bn = BoundaryNodes::new(&g);
        let (pm, qm) = assemble_cfds(&p, 0, &g, &bn, CompactVariant::Corrected).unwrap();
        let k = g.lex_index(3, 3).unwrap();
        let h2 = g.hx() * g.hx();
        for (k1, k2) in crate::stencil::OFFSETS {
            let expect = match (k1 as i32).abs() + (k2 as i32).abs() {
                0 => 20.0,
                1 => -4.0,
                _ => -1.0,
            };
            assert_relative_eq!(pm.matrix.get(k, k1, k2), expect, epsilon = 1e-13);
            let q_expect = match (k1 as i32).abs() + (k2 as i32).abs() {
                0 => 2.0 / 3.0,
                1 => 1.0 / 12.0,
                _ => 0.0,
            };
            assert_relative_eq!(qm.matrix.get(k, k1, k2) / (6.0 * h2), q_expect, epsilon = 1e-15);
        }
    }

    #[test]
    fn explicit_entries_match_operator_composition() {
        for p in [make_example1(), variable_problem()] {
            for (mx, my) in [(8, 8), (10, 6)] {
                let g = p.grid(mx, my).unwrap();
                let cc = compact_coefficients(&p, 0, &g, CompactVariant::Corrected).unwrap();
                for n in &cc.nodes {
                    let explicit = n.p_row(g.hx(), g.hy(), CompactVariant::Corrected);
                    let composed = composed_p_row(n, g.hx(), g.hy());
                    let scale = composed.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    for s in 0..9 {
                        assert!(
                            (explicit[s] - composed[s]).abs() <= 1e-13 * scale,
                            "slot {s}: {} vs {}",
                            explicit[s],
                            composed[s]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn row_sums() {
        for variant in [CompactVariant::Corrected, CompactVariant::AsPrinted] {
            let p = variable_problem();
            let g = p.grid(9, 7).unwrap();
            let bn = BoundaryNodes::new(&g);
            let cc = compact_coefficients(&p, 0, &g, variant).unwrap();
            let h2 = g.hx() * g.hx();
            for n in &cc.nodes {
                let q: f64 = n.q_row(g.hx(), g.hy(), variant).iter().sum();
                assert_relative_eq!(q, 6.0 * h2, max_relative = 1e-14);
                let prow = n.p_row(g.hx(), g.hy(), variant);
                let scale = prow.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                assert!(prow.iter().sum::<f64>().abs() <= 1e-13 * scale);
            }
            let (pm, qm) = assemble_cfds(&p, 0, &g, &bn, variant).unwrap();
            for k in 0..g.interior_len() {
                for (k1, k2) in [(-1, -1), (1, -1), (-1, 1), (1, 1)] {
                    assert_eq!(qm.matrix.get(k, k1, k2), 0.0);
                }
                if pm.matrix.has_full_neighbourhood(k) {
                    assert_relative_eq!(qm.matrix.row_sum(k), 6.0 * h2, max_relative = 1e-14);
                }
            }
        }
    }

    /// max |P u - Q_full f| / (6 hx^2) for the smooth u = sin sin, where
    /// f = -a u_xx - b u_yy + c u_x + d u_y is sampled on all mesh nodes.
    fn consistency_error(p: &crate::model::ProblemSpec, m: usize, variant: CompactVariant) -> f64 {
        let (xl, yl) = (p.x_len, p.y_len);
        let tc = p.transport[0].clone();
        let u = |x: f64, y: f64| (PI * x / xl).sin() * (PI * y / yl).sin();
        let f = |x: f64, y: f64| {
            let (sx, cx) = (PI * x / xl).sin_cos();
            let (sy, cy) = (PI * y / yl).sin_cos();
            (tc.a)(x, y) * (PI / xl).powi(2) * sx * sy + (tc.b)(x, y) * (PI / yl).powi(2) * sx * sy
                + (tc.c)(x, y) * PI / xl * cx * sy
                + (tc.d)(x, y) * PI / yl * sx * cy
        };
        let g = p.grid(m, m).unwrap();
        let bn = BoundaryNodes::new(&g);
        let (pm, qm) = assemble_cfds(p, 0, &g, &bn, variant).unwrap();
        let sample = |h: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
            (0..g.interior_len())
                .map(|k| {
                    let (i, j) = g.node(k);
                    h(g.x(i), g.y(j))
                })
                .collect()
        };
        let (uv, fv) = (sample(&u), sample(&f));
        let fb: Vec<f64> = bn.nodes().iter().map(|&(i, j)| f(g.x(i), g.y(j))).collect();
        let mut pu = vec![0.0; uv.len()];
        let mut qf = vec![0.0; uv.len()];
        pm.matrix.apply(&uv, &mut pu);
        qm.matrix.apply(&fv, &mut qf);
        qm.coupling.accumulate(1.0, &fb, &mut qf);
        let scale = 6.0 * g.hx() * g.hx();
        pu.iter().zip(&qf).fold(0.0f64, |e, (a, b)| e.max((a - b).abs() / scale))
    }

    #[test]
    fn corrected_variant_is_fourth_order() {
        for p in [make_example1(), variable_problem()] {
            let errs: Vec<f64> = [16, 32, 64].iter().map(|&m| consistency_error(&p, m, CompactVariant::Corrected)).collect();
            for w in errs.windows(2) {
                let order = (w[0] / w[1]).log2();
                assert!((3.8..=4.3).contains(&order), "{}: order {order} from {errs:?}", p.name);
            }
        }
    }

    #[test]
    fn printed_variant_loses_fourth_order() {
        let p = variable_problem();
        let errs: Vec<f64> = [8, 16, 32].iter().map(|&m| consistency_error(&p, m, CompactVariant::AsPrinted)).collect();
        let order = (errs[1] / errs[2]).log2();
        assert!(order < 3.0, "as-printed order {order}");
    }

    #[test]
    fn boundary_vectors() {
        let p = make_example1();
        let g = p.grid(8, 8).unwrap();
        let mut p0 = p.clone();
        p0.forcing = None;
        let (bp, bq) = cfds_boundary_vectors(&p0, 0, &g, 100.0, CompactVariant::Corrected).unwrap();
        assert!(bp.iter().chain(&bq).all(|v| *v == 0.0));

        let p2 = make_example2(1.0, standard_mu(1440.0)).unwrap();
        let (bp, _) = cfds_boundary_vectors(&p2, 0, &g, 0.0, CompactVariant::Corrected).unwrap();
        for (k, v) in bp.iter().enumerate() {
            let (i, j) = g.node(k);
            let near = i == 1 || j == 1 || i == g.mx() - 1 || j == g.my() - 1;
            assert_eq!(*v != 0.0, near, "node ({i}, {j})");
        }
    }
}
