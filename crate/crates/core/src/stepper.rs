//! Theta-scheme time stepping with an inexact Newton-Krylov solve per step.
//!
//! For every species `l` the discrete system on one step is
//!
//! ```text
//! Y(W) = M (W - W_old) / tau + P W^theta - M F(W)^theta - Phi^theta = 0
//! ```
//!
//! where `Z^theta = theta Z(t_new) + (1 - theta) Z(t_old)`, `F = R + xi` is
//! the reaction plus forcing, `M` is the identity for the central scheme and
//! `Q` for the compact one. `Phi^theta` collects everything the stencils pick
//! up from Dirichlet nodes: `-P_b g`, `M_b F_b` and `-M_b (g_new - g_old) / tau`.

use std::time::Instant;

use crate::cds::assemble_cds_with;
use crate::cfds::{assemble_cfds, CompactVariant};
use crate::error::{Error, Result};
use crate::grid::{FieldVector, Grid2D, TimeGrid};
use crate::krylov::{bicgstab_l, FnOperator, KrylovConfig};
use crate::model::ProblemSpec;
use crate::stencil::{Assembled, BoundaryNodes};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchemeKind {
    #[default]
    Cds,
    Cfds,
}

impl std::str::FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cds" => Ok(Self::Cds),
            "cfds" => Ok(Self::Cfds),
            other => Err(format!("unknown scheme `{other}` (expected cds|cfds)")),
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Cds => "CDS",
            Self::Cfds => "CFDS",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub theta: f64,
    /// Newton stops once `||delta||_inf <= newton_tol (1 + ||W||_inf)`, or
    /// the scaled residual `tau ||Y||_inf / m` meets the same bound, where
    /// `m` is the mass row sum (1 or `6 hx^2`).
    pub newton_tol: f64,
    pub max_newton: usize,
    pub krylov: KrylovConfig,
    pub compact: CompactVariant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            theta: 0.5,
            newton_tol: 1e-11,
            max_newton: 25,
            krylov: KrylovConfig::default(),
            compact: CompactVariant::default(),
        }
    }
}

/// Assembled spatial operators for every species on one grid.
#[derive(Debug, Clone)]
pub struct Discretization {
    scheme: SchemeKind,
    grid: Grid2D,
    boundary: BoundaryNodes,
    stiffness: Vec<Assembled>,
    /// `None` for the identity mass of the central scheme.
    mass: Option<Vec<Assembled>>,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Discretization {
    pub fn new(problem: &ProblemSpec, grid: &Grid2D, scheme: SchemeKind, variant: CompactVariant) -> Result<Self> {
        let boundary = BoundaryNodes::new(grid);
        let (stiffness, mass) = match scheme {
            SchemeKind::Cds => {
                let p = (0..problem.species)
                    .map(|l| assemble_cds_with(problem, l, grid, &boundary))
                    .collect::<Result<Vec<_>>>()?;
                (p, None)
            }
            SchemeKind::Cfds => {
                let (p, q): (Vec<_>, Vec<_>) = (0..problem.species)
                    .map(|l| assemble_cfds(problem, l, grid, &boundary, variant))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .unzip();
                (p, Some(q))
            }
        };
        let (xs, ys) = (0..grid.interior_len())
            .map(|k| {
                let (i, j) = grid.node(k);
                (grid.x(i), grid.y(j))
            })
            .unzip();
        Ok(Self {
            scheme,
            grid: *grid,
            boundary,
            stiffness,
            mass,
            xs,
            ys,
        })
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn stiffness(&self, l: usize) -> &Assembled {
        &self.stiffness[l]
    }

    pub fn mass(&self, l: usize) -> Option<&Assembled> {
        self.mass.as_ref().map(|m| &m[l])
    }

    fn species(&self) -> usize {
        self.stiffness.len()
    }

    fn nodes(&self) -> usize {
        self.xs.len()
    }

    /// Row sum of the mass operator.
    fn mass_scale(&self) -> f64 {
        match self.scheme {
            SchemeKind::Cds => 1.0,
            SchemeKind::Cfds => 6.0 * self.grid.hx() * self.grid.hx(),
        }
    }

    /// `out = M_l x`.
    fn apply_mass(&self, l: usize, x: &[f64], out: &mut [f64]) {
        match &self.mass {
            None => out.copy_from_slice(x),
            Some(m) => m[l].matrix.apply(x, out),
        }
    }

    fn nodal_state(&self, problem: &ProblemSpec, f: impl Fn(usize, f64, f64) -> f64) -> FieldVector {
        let n = self.nodes();
        let mut w = FieldVector::zeros(problem.species, n);
        for l in 0..problem.species {
            let block = w.block_mut(l);
            for k in 0..n {
                block[k] = f(l, self.xs[k], self.ys[k]);
            }
        }
        w
    }

    /// Initial data at the interior nodes.
    pub fn initial_state(&self, problem: &ProblemSpec) -> FieldVector {
        self.nodal_state(problem, |l, x, y| (problem.initial)(l, x, y))
    }

    /// Forcing `xi(t)` at the interior nodes.
    fn forcing(&self, problem: &ProblemSpec, t: f64) -> FieldVector {
        self.nodal_state(problem, |l, x, y| problem.forcing(l, x, y, t))
    }

    /// `F(W, t) = R(W) + xi(t)` with `xi` supplied.
    fn source(&self, problem: &ProblemSpec, w: &FieldVector, xi: &FieldVector, t: f64) -> FieldVector {
        let (ns, n) = (self.species(), self.nodes());
        let mut out = xi.clone();
        let mut u = vec![0.0; ns];
        let mut r = vec![0.0; ns];
        for k in 0..n {
            w.gather(k, &mut u);
            (problem.reaction)(self.xs[k], self.ys[k], t, &u, &mut r);
            for (l, rl) in r.iter().enumerate() {
                out.as_mut_slice()[l * n + k] += rl;
            }
        }
        out
    }

    /// Per-node reaction Jacobians, row-major `L x L` blocks.
    fn reaction_jacobians(&self, problem: &ProblemSpec, w: &FieldVector, t: f64) -> Vec<f64> {
        let (ns, n) = (self.species(), self.nodes());
        let mut jac = vec![0.0; n * ns * ns];
        let mut u = vec![0.0; ns];
        for k in 0..n {
            w.gather(k, &mut u);
            (problem.reaction_jacobian)(self.xs[k], self.ys[k], t, &u, &mut jac[k * ns * ns..(k + 1) * ns * ns]);
        }
        jac
    }

    /// `B(t) = -P_b g(t) + M_b F_b(t)` per species, and `g(t)` on the
    /// boundary nodes.
    fn boundary_level(&self, problem: &ProblemSpec, t: f64) -> (FieldVector, FieldVector) {
        let (ns, n, nb) = (self.species(), self.nodes(), self.boundary.len());
        let mut g = FieldVector::zeros(ns, nb);
        let mut fb = FieldVector::zeros(ns, nb);
        let mut u = vec![0.0; ns];
        let mut s = vec![0.0; ns];
        for (b, &(i, j)) in self.boundary.nodes().iter().enumerate() {
            let (x, y) = (self.grid.x(i), self.grid.y(j));
            for (l, ul) in u.iter_mut().enumerate() {
                *ul = (problem.boundary)(l, x, y, t);
            }
            if self.mass.is_some() {
                problem.source(x, y, t, &u, &mut s);
            }
            for l in 0..ns {
                g.as_mut_slice()[l * nb + b] = u[l];
                fb.as_mut_slice()[l * nb + b] = s[l];
            }
        }
        let mut out = FieldVector::zeros(ns, n);
        for l in 0..ns {
            let block = out.block_mut(l);
            self.stiffness[l].coupling.accumulate(-1.0, g.block(l), block);
            if let Some(m) = &self.mass {
                m[l].coupling.accumulate(1.0, fb.block(l), block);
            }
        }
        (out, g)
    }
}

/// Everything about one step that does not depend on the new iterate.
struct StepSystem<'a> {
    disc: &'a Discretization,
    problem: &'a ProblemSpec,
    tau: f64,
    theta: f64,
    t_new: f64,
    xi_new: FieldVector,
    /// `M W_old / tau - (1 - theta) (P W_old - M F_old) + Phi^theta`.
    constant: FieldVector,
}

impl<'a> StepSystem<'a> {
    fn new(disc: &'a Discretization, problem: &'a ProblemSpec, w_old: &FieldVector, t_old: f64, tau: f64, theta: f64) -> Self {
        let t_new = t_old + tau;
        let n = disc.nodes();
        let xi_old = disc.forcing(problem, t_old);
        let xi_new = disc.forcing(problem, t_new);
        let f_old = disc.source(problem, w_old, &xi_old, t_old);
        let (b_old, g_old) = disc.boundary_level(problem, t_old);
        let (b_new, g_new) = disc.boundary_level(problem, t_new);
        let mut constant = FieldVector::zeros(problem.species, n);
        let mut tmp = vec![0.0; n];
        for l in 0..problem.species {
            let c = constant.block_mut(l);
            disc.apply_mass(l, w_old.block(l), &mut tmp);
            for k in 0..n {
                c[k] = tmp[k] / tau;
            }
            disc.stiffness[l].matrix.apply(w_old.block(l), &mut tmp);
            for k in 0..n {
                c[k] -= (1.0 - theta) * tmp[k];
            }
            disc.apply_mass(l, f_old.block(l), &mut tmp);
            for k in 0..n {
                c[k] += (1.0 - theta) * tmp[k] + theta * b_new.block(l)[k] + (1.0 - theta) * b_old.block(l)[k];
            }
            if let Some(m) = &disc.mass {
                let dg: Vec<f64> = g_new.block(l).iter().zip(g_old.block(l)).map(|(a, b)| a - b).collect();
                m[l].coupling.accumulate(-1.0 / tau, &dg, c);
            }
        }
        Self {
            disc,
            problem,
            tau,
            theta,
            t_new,
            xi_new,
            constant,
        }
    }

    fn residual(&self, w: &FieldVector) -> FieldVector {
        let (ns, n) = (self.problem.species, self.disc.nodes());
        let f = self.disc.source(self.problem, w, &self.xi_new, self.t_new);
        let mut out = FieldVector::zeros(ns, n);
        let mut tmp = vec![0.0; n];
        let mut buf = vec![0.0; n];
        for l in 0..ns {
            for k in 0..n {
                buf[k] = w.block(l)[k] / self.tau - self.theta * f.block(l)[k];
            }
            self.disc.apply_mass(l, &buf, &mut tmp);
            let o = out.block_mut(l);
            o.copy_from_slice(&tmp);
            self.disc.stiffness[l].matrix.apply(w.block(l), &mut tmp);
            let c = self.constant.block(l);
            for k in 0..n {
                o[k] += self.theta * tmp[k] - c[k];
            }
        }
        out
    }

    /// `y = Y'(W) x` given the per-node reaction Jacobians of `W`.
    fn jacobian_apply(&self, jac: &[f64], x: &[f64], y: &mut [f64], scratch: &mut [Vec<f64>; 2]) {
        let (ns, n) = (self.problem.species, self.disc.nodes());
        let [buf, tmp] = scratch;
        for l in 0..ns {
            for k in 0..n {
                let row = &jac[k * ns * ns + l * ns..k * ns * ns + (l + 1) * ns];
                let z: f64 = row.iter().enumerate().map(|(m, a)| a * x[m * n + k]).sum();
                buf[k] = x[l * n + k] / self.tau - self.theta * z;
            }
            let yl = &mut y[l * n..(l + 1) * n];
            self.disc.apply_mass(l, buf, yl);
            self.disc.stiffness[l].matrix.apply(&x[l * n..(l + 1) * n], tmp);
            for k in 0..n {
                yl[k] += self.theta * tmp[k];
            }
        }
    }
}

/// Nonlinear residual `Y(W_new)` of the step from `t_old` to `t_old + tau`.
pub fn residual(
    disc: &Discretization,
    problem: &ProblemSpec,
    w_new: &FieldVector,
    w_old: &FieldVector,
    t_old: f64,
    tau: f64,
    theta: f64,
) -> Result<FieldVector> {
    check_state(disc, problem, w_new)?;
    check_state(disc, problem, w_old)?;
    check_theta(theta)?;
    Ok(StepSystem::new(disc, problem, w_old, t_old, tau, theta).residual(w_new))
}

/// Applies the Newton matrix `Y'(W_lin)` at time level `t_new` to `x`.
pub fn newton_matrix_apply(
    disc: &Discretization,
    problem: &ProblemSpec,
    w_lin: &FieldVector,
    t_new: f64,
    tau: f64,
    theta: f64,
    x: &[f64],
) -> Result<Vec<f64>> {
    check_state(disc, problem, w_lin)?;
    if x.len() != w_lin.len() {
        return Err(Error::DimensionMismatch {
            expected: w_lin.len(),
            found: x.len(),
        });
    }
    // The constant part plays no role in the derivative.
    let sys = StepSystem {
        disc,
        problem,
        tau,
        theta,
        t_new,
        xi_new: FieldVector::zeros(problem.species, disc.nodes()),
        constant: FieldVector::zeros(problem.species, disc.nodes()),
    };
    let jac = disc.reaction_jacobians(problem, w_lin, t_new);
    let mut y = vec![0.0; x.len()];
    let mut scratch = [vec![0.0; disc.nodes()], vec![0.0; disc.nodes()]];
    sys.jacobian_apply(&jac, x, &mut y, &mut scratch);
    Ok(y)
}

fn check_state(disc: &Discretization, problem: &ProblemSpec, w: &FieldVector) -> Result<()> {
    let expected = problem.species * disc.nodes();
    if w.len() != expected || w.species() != problem.species {
        return Err(Error::DimensionMismatch {
            expected,
            found: w.len(),
        });
    }
    Ok(())
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::param("theta", format!("must lie in [0, 1], got {theta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub step: usize,
    pub t: f64,
    pub w: FieldVector,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverReport {
    /// Newton iterations (linear solves) taken on each step.
    pub newton_iters: Vec<usize>,
    /// Krylov cycles of each linear solve, in order.
    pub krylov_cycles: Vec<f64>,
    pub wall_ms: f64,
    /// Scaled residual `tau ||Y||_inf / m` at the accepted iterate of the
    /// last step.
    pub final_residual: f64,
}

impl SolverReport {
    pub fn steps(&self) -> usize {
        self.newton_iters.len()
    }

    /// Average Newton iterations per step.
    pub fn newton_avg(&self) -> f64 {
        if self.newton_iters.is_empty() {
            return 0.0;
        }
        self.newton_iters.iter().sum::<usize>() as f64 / self.newton_iters.len() as f64
    }

    /// Average Krylov cycles per Newton iteration.
    pub fn krylov_avg(&self) -> f64 {
        if self.krylov_cycles.is_empty() {
            return 0.0;
        }
        self.krylov_cycles.iter().sum::<f64>() / self.krylov_cycles.len() as f64
    }

    pub fn merge(&mut self, other: &SolverReport) {
        self.newton_iters.extend_from_slice(&other.newton_iters);
        self.krylov_cycles.extend_from_slice(&other.krylov_cycles);
        self.wall_ms += other.wall_ms;
        self.final_residual = other.final_residual;
    }
}

/// One time step by inexact Newton started from the previous layer.
pub fn advance(
    disc: &Discretization,
    problem: &ProblemSpec,
    state: &StepState,
    tau: f64,
    cfg: &SolverConfig,
    report: &mut SolverReport,
) -> Result<StepState> {
    check_state(disc, problem, &state.w)?;
    check_theta(cfg.theta)?;
    if !(tau > 0.0) {
        return Err(Error::param("tau", format!("must be positive, got {tau}")));
    }
    let sys = StepSystem::new(disc, problem, &state.w, state.t, tau, cfg.theta);
    let scale = tau / disc.mass_scale();
    let dim = state.w.len();
    let mut w = state.w.clone();
    let mut delta = vec![0.0; dim];
    let mut rhs = vec![0.0; dim];
    let mut iters = 0;
    let mut res = sys.residual(&w);
    loop {
        if iters >= cfg.max_newton {
            return Err(Error::NewtonDiverged {
                iterations: iters,
                increment: delta.iter().fold(0.0f64, |m, v: &f64| m.max(v.abs())),
            });
        }
        let jac = disc.reaction_jacobians(problem, &w, sys.t_new);
        for (r, v) in rhs.iter_mut().zip(res.as_slice()) {
            *r = -v;
        }
        let scratch = std::cell::RefCell::new([vec![0.0; disc.nodes()], vec![0.0; disc.nodes()]]);
        let op = FnOperator::new(dim, |x: &[f64], y: &mut [f64]| {
            sys.jacobian_apply(&jac, x, y, &mut scratch.borrow_mut())
        });
        delta.iter_mut().for_each(|v| *v = 0.0);
        let kr = bicgstab_l(&op, &rhs, &mut delta, &cfg.krylov)?;
        report.krylov_cycles.push(kr.iterations);
        iters += 1;
        for (wi, di) in w.as_mut_slice().iter_mut().zip(&delta) {
            *wi += di;
        }
        if !w.is_finite() {
            return Err(Error::NewtonDiverged {
                iterations: iters,
                increment: f64::INFINITY,
            });
        }
        res = sys.residual(&w);
        let bound = cfg.newton_tol * (1.0 + w.max_abs());
        let step = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if step <= bound {
            break;
        }
    }
    report.newton_iters.push(iters);
    report.final_residual = scale * res.max_abs();
    Ok(StepState {
        step: state.step + 1,
        t: sys.t_new,
        w,
    })
}

/// Integrates from the initial data over `time`.
pub fn integrate(
    problem: &ProblemSpec,
    grid: &Grid2D,
    time: &TimeGrid,
    scheme: SchemeKind,
    cfg: &SolverConfig,
) -> Result<(FieldVector, SolverReport)> {
    let start = Instant::now();
    let disc = Discretization::new(problem, grid, scheme, cfg.compact)?;
    let mut report = SolverReport::default();
    let mut state = StepState {
        step: 0,
        t: 0.0,
        w: disc.initial_state(problem),
    };
    for n in 0..time.steps() {
        let tau = time.t(n + 1) - time.t(n);
        state = advance(&disc, problem, &state, tau, cfg, &mut report).map_err(|e| Error::StepFailed {
            step: n + 1,
            source: Box::new(e),
        })?;
        // Land exactly on the grid times.
        state.t = time.t(n + 1);
    }
    report.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((state.w, report))
}
