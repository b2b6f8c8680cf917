//! BiCGStab(l) for nonsymmetric linear systems.
//!
//! The iteration follows Sleijpen and Fokkema: each cycle performs `l` BiCG
//! steps followed by an `l`-dimensional minimal-residual polynomial update.
//! Work is reported in cycles; a solve that converges on the BiCG half of a
//! cycle counts that cycle as one half.

use crate::error::{Error, Result};
use crate::stencil::StencilMatrix;

pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    /// Main diagonal, if cheaply available. Used by the Jacobi option.
    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl LinearOperator for StencilMatrix {
    fn dim(&self) -> usize {
        StencilMatrix::dim(self)
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        StencilMatrix::apply(self, x, y)
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(self.rows().iter().map(|r| r[4]).collect())
    }
}

/// Wraps a closure `(x, y)` as an operator of dimension `n`.
pub struct FnOperator<F> {
    n: usize,
    f: F,
    diag: Option<Vec<f64>>,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f, diag: None }
    }

    pub fn with_diagonal(mut self, diag: Vec<f64>) -> Self {
        self.diag = Some(diag);
        self
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        self.diag.clone()
    }
}

/// Checked matrix-vector product.
pub fn matvec(a: &dyn LinearOperator, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: x.len(),
        });
    }
    let mut y = vec![0.0; a.dim()];
    a.apply(x, &mut y);
    Ok(y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovConfig {
    /// Stop when `||b - A x||_2 <= tol ||b||_2`.
    pub tol: f64,
    pub ell: usize,
    pub max_cycles: usize,
    /// Right Jacobi preconditioning.
    pub jacobi: bool,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            ell: 2,
            max_cycles: 200,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovReport {
    /// Cycles used, in steps of one half.
    pub iterations: f64,
    pub final_relative_residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

struct Scaled<'a> {
    op: &'a dyn LinearOperator,
    inv_diag: Option<Vec<f64>>,
    buf: std::cell::RefCell<Vec<f64>>,
}

impl Scaled<'_> {
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match &self.inv_diag {
            None => self.op.apply(x, y),
            Some(d) => {
                let mut buf = self.buf.borrow_mut();
                for ((b, xi), di) in buf.iter_mut().zip(x).zip(d) {
                    *b = xi * di;
                }
                self.op.apply(&buf, y);
            }
        }
    }

    fn unscale(&self, y: &[f64]) -> Vec<f64> {
        match &self.inv_diag {
            None => y.to_vec(),
            Some(d) => y.iter().zip(d).map(|(a, b)| a * b).collect(),
        }
    }
}

enum CycleEnd {
    Converged(f64),
    Continue,
    Breakdown(&'static str),
}

/// Solves `A x = b` starting from `x`, which is overwritten.
pub fn bicgstab_l(a: &dyn LinearOperator, b: &[f64], x: &mut [f64], cfg: &KrylovConfig) -> Result<KrylovReport> {
    let n = a.dim();
    if b.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: if b.len() != n { b.len() } else { x.len() },
        });
    }
    if cfg.ell == 0 {
        return Err(Error::param("ell", "must be at least 1"));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {}", cfg.tol)));
    }
    let bnorm = norm(b);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(KrylovReport {
            iterations: 0.0,
            final_relative_residual: 0.0,
            converged: true,
        });
    }

    let inv_diag = if cfg.jacobi {
        let d = a
            .diagonal()
            .ok_or_else(|| Error::param("jacobi", "operator has no diagonal"))?;
        if d.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::param("jacobi", "zero or non-finite diagonal entry"));
        }
        Some(d.iter().map(|v| 1.0 / v).collect::<Vec<f64>>())
    } else {
        None
    };
    let op = Scaled {
        op: a,
        inv_diag,
        buf: std::cell::RefCell::new(vec![0.0; n]),
    };
    // Work in the preconditioned variable y with x = D^-1 y.
    let mut y: Vec<f64> = match &op.inv_diag {
        None => x.to_vec(),
        Some(d) => x.iter().zip(d).map(|(xi, di)| xi / di).collect(),
    };

    let true_residual = |y: &[f64]| -> (Vec<f64>, f64) {
        let mut r = vec![0.0; n];
        op.apply(y, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let rn = norm(&r) / bnorm;
        (r, rn)
    };

    let (mut r0, mut rel) = true_residual(&y);
    let mut cycles = 0.0;
    let mut restarts = 0usize;
    if rel <= cfg.tol {
        x.copy_from_slice(&op.unscale(&y));
        return Ok(KrylovReport {
            iterations: 0.0,
            final_relative_residual: rel,
            converged: true,
        });
    }

    let ell = cfg.ell;
    'outer: loop {
        let shadow = r0.clone();
        let mut rr = vec![vec![0.0; n]; ell + 1];
        let mut uu = vec![vec![0.0; n]; ell + 1];
        rr[0].copy_from_slice(&r0);
        let (mut rho0, mut alpha, mut omega) = (1.0f64, 0.0f64, 1.0f64);
        let mut tau = vec![vec![0.0; ell + 1]; ell + 1];
        let mut sigma = vec![0.0; ell + 1];
        let mut gp = vec![0.0; ell + 1];
        let mut g = vec![0.0; ell + 1];
        let mut gpp = vec![0.0; ell + 1];

        while cycles < cfg.max_cycles as f64 {
            let end = (|| {
                rho0 *= -omega;
                for j in 0..ell {
                    let rho1 = dot(&rr[j], &shadow);
                    if rho0 == 0.0 || !rho1.is_finite() {
                        return CycleEnd::Breakdown("rho vanished");
                    }
                    let beta = alpha * rho1 / rho0;
                    rho0 = rho1;
                    for i in 0..=j {
                        let (ui, ri) = (&mut uu[i], &rr[i]);
                        for (u, r) in ui.iter_mut().zip(ri) {
                            *u = r - beta * *u;
                        }
                    }
                    let (lo, hi) = uu.split_at_mut(j + 1);
                    op.apply(&lo[j], &mut hi[0]);
                    let gamma = dot(&uu[j + 1], &shadow);
                    if gamma == 0.0 || !gamma.is_finite() {
                        return CycleEnd::Breakdown("gamma vanished");
                    }
                    alpha = rho0 / gamma;
                    for i in 0..=j {
                        axpy(-alpha, &uu[i + 1], &mut rr[i]);
                    }
                    let (lo, hi) = rr.split_at_mut(j + 1);
                    op.apply(&lo[j], &mut hi[0]);
                    axpy(alpha, &uu[0], &mut y);
                    if norm(&rr[0]) / bnorm <= cfg.tol {
                        return CycleEnd::Converged(0.5);
                    }
                }
                for j in 1..=ell {
                    for i in 1..j {
                        tau[i][j] = dot(&rr[j], &rr[i]) / sigma[i];
                        let (lo, hi) = rr.split_at_mut(j);
                        axpy(-tau[i][j], &lo[i], &mut hi[0]);
                    }
                    sigma[j] = dot(&rr[j], &rr[j]);
                    if sigma[j] == 0.0 || !sigma[j].is_finite() {
                        return CycleEnd::Breakdown("minimal residual step degenerate");
                    }
                    gp[j] = dot(&rr[0], &rr[j]) / sigma[j];
                }
                g[ell] = gp[ell];
                omega = g[ell];
                for j in (1..ell).rev() {
                    g[j] = gp[j] - ((j + 1)..=ell).map(|i| tau[j][i] * g[i]).sum::<f64>();
                }
                for j in 1..ell {
                    gpp[j] = g[j + 1] + ((j + 1)..ell).map(|i| tau[j][i] * g[i + 1]).sum::<f64>();
                }
                axpy(g[1], &rr[0].clone(), &mut y);
                let (r_first, r_rest) = rr.split_at_mut(1);
                axpy(-gp[ell], &r_rest[ell - 1], &mut r_first[0]);
                let (u_first, u_rest) = uu.split_at_mut(1);
                axpy(-g[ell], &u_rest[ell - 1], &mut u_first[0]);
                for j in 1..ell {
                    axpy(-g[j], &u_rest[j - 1], &mut u_first[0]);
                    axpy(gpp[j], &r_rest[j - 1], &mut y);
                    axpy(-gp[j], &r_rest[j - 1], &mut r_first[0]);
                }
                if omega == 0.0 || !omega.is_finite() {
                    return CycleEnd::Breakdown("omega vanished");
                }
                if norm(&rr[0]) / bnorm <= cfg.tol {
                    CycleEnd::Converged(1.0)
                } else {
                    CycleEnd::Continue
                }
            })();

            match end {
                CycleEnd::Continue => cycles += 1.0,
                CycleEnd::Converged(part) => {
                    cycles += part;
                    let (r, rn) = true_residual(&y);
                    rel = rn;
                    if rel <= cfg.tol {
                        break 'outer;
                    }
                    // Recursive residual drifted; restart from the true one.
                    r0 = r;
                    continue 'outer;
                }
                CycleEnd::Breakdown(reason) => {
                    cycles += 1.0;
                    let (r, rn) = true_residual(&y);
                    rel = rn;
                    if rel <= cfg.tol {
                        break 'outer;
                    }
                    if restarts >= 1 {
                        return Err(Error::KrylovBreakdown { cycles, reason });
                    }
                    restarts += 1;
                    r0 = r;
                    continue 'outer;
                }
            }
        }
        rel = true_residual(&y).1;
        break;
    }

    x.copy_from_slice(&op.unscale(&y));
    Ok(KrylovReport {
        iterations: cycles,
        final_relative_residual: rel,
        converged: rel <= cfg.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cds::assemble_cds;
    use crate::model::make_example1;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn diag_op(d: Vec<f64>) -> FnOperator<impl Fn(&[f64], &mut [f64])> {
        let dd = d.clone();
        FnOperator::new(d.len(), move |x: &[f64], y: &mut [f64]| {
            for k in 0..x.len() {
                y[k] = dd[k] * x[k];
            }
        })
        .with_diagonal(d)
    }

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..n {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut x = vec![0.0; n];
        for r in (0..n).rev() {
            x[r] = (b[r] - (r + 1..n).map(|k| a[r][k] * x[k]).sum::<f64>()) / a[r][r];
        }
        x
    }

    #[test]
    fn identity_converges_in_half_a_cycle() {
        let op = diag_op(vec![1.0; 5]);
        let b = vec![1.0, -2.0, 3.0, 0.5, 7.0];
        let mut x = vec![0.0; 5];
        let rep = bicgstab_l(&op, &b, &mut x, &KrylovConfig::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.iterations, 0.5);
        for (a, b) in x.iter().zip(&b) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn diagonal_two_by_two() {
        let op = diag_op(vec![2.0, 4.0]);
        let mut x = vec![0.0; 2];
        let rep = bicgstab_l(&op, &[2.0, 4.0], &mut x, &KrylovConfig::default()).unwrap();
        assert!(rep.converged && rep.iterations <= 1.0);
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-10);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-10);
    }

    #[test]
    fn jacobi_solves_diagonal_at_once() {
        let op = diag_op((1..=20).map(|v| v as f64 * 3.0).collect());
        let b: Vec<f64> = (0..20).map(|v| (v as f64).sin() + 2.0).collect();
        let mut x = vec![0.0; 20];
        let cfg = KrylovConfig {
            jacobi: true,
            ..Default::default()
        };
        let rep = bicgstab_l(&op, &b, &mut x, &cfg).unwrap();
        assert_eq!(rep.iterations, 0.5);
        for k in 0..20 {
            assert_relative_eq!(x[k], b[k] / (3.0 * (k + 1) as f64), max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_rhs_is_immediate() {
        let op = diag_op(vec![3.0; 4]);
        let mut x = vec![1.0; 4];
        let rep = bicgstab_l(&op, &[0.0; 4], &mut x, &KrylovConfig::default()).unwrap();
        assert_eq!(rep.iterations, 0.0);
        assert!(x.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let op = diag_op(vec![1.0; 3]);
        let mut x = vec![0.0; 3];
        assert!(matches!(
            bicgstab_l(&op, &[1.0; 2], &mut x, &KrylovConfig::default()),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(matvec(&op, &[1.0; 4]).is_err());
    }

    #[test]
    fn convection_diffusion_matches_direct_solve() {
        let p = make_example1();
        let g = p.grid(12, 12).unwrap();
        let a = assemble_cds(&p, 0, &g).unwrap().matrix;
        let n = a.dim();
        let b: Vec<f64> = (0..n).map(|k| ((k * 7) % 11) as f64 - 5.0).collect();
        let exact = dense_solve(a.to_dense(), b.clone());
        for ell in [1, 2, 4] {
            for jacobi in [false, true] {
                let mut x = vec![0.0; n];
                let cfg = KrylovConfig {
                    tol: 1e-10,
                    ell,
                    jacobi,
                    ..Default::default()
                };
                let rep = bicgstab_l(&a, &b, &mut x, &cfg).unwrap();
                assert!(rep.converged, "ell {ell}: {rep:?}");
                let r = matvec(&a, &x).unwrap();
                let res: f64 = r.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt() / norm(&b);
                assert!(res <= 1e-10);
                let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (u, v) in x.iter().zip(&exact) {
                    assert!((u - v).abs() <= 1e-7 * scale);
                }
            }
        }
    }

    #[test]
    fn solution_is_linear_in_rhs() {
        let p = make_example1();
        let g = p.grid(8, 8).unwrap();
        let a = assemble_cds(&p, 0, &g).unwrap().matrix;
        let n = a.dim();
        let b1: Vec<f64> = (0..n).map(|k| (k as f64).cos()).collect();
        let b2: Vec<f64> = (0..n).map(|k| (k as f64 * 0.3).sin()).collect();
        let solve = |b: &[f64]| {
            let mut x = vec![0.0; n];
            let cfg = KrylovConfig {
                tol: 1e-13,
                ..Default::default()
            };
            bicgstab_l(&a, b, &mut x, &cfg).unwrap();
            x
        };
        let (x1, x2) = (solve(&b1), solve(&b2));
        let b3: Vec<f64> = b1.iter().zip(&b2).map(|(u, v)| 2.0 * u - 3.0 * v).collect();
        let x3 = solve(&b3);
        for k in 0..n {
            assert!((x3[k] - (2.0 * x1[k] - 3.0 * x2[k])).abs() < 1e-8);
        }
    }

    proptest! {
        #[test]
        fn dominant_tridiagonal_systems_converge(
            n in 2usize..40,
            lower in -1.0f64..1.0,
            upper in -1.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let op = FnOperator::new(n, move |x: &[f64], y: &mut [f64]| {
                for k in 0..n {
                    let mut s = 3.0 * x[k];
                    if k > 0 { s += lower * x[k - 1]; }
                    if k + 1 < n { s += upper * x[k + 1]; }
                    y[k] = s;
                }
            });
            let b: Vec<f64> = (0..n).map(|k| ((k as u64 * 31 + seed) % 17) as f64 - 8.0).collect();
            prop_assume!(norm(&b) > 0.0);
            let mut x = vec![0.0; n];
            let cfg = KrylovConfig { tol: 1e-10, ..Default::default() };
            let rep = bicgstab_l(&op, &b, &mut x, &cfg).unwrap();
            prop_assert!(rep.converged);
            let r = matvec(&op, &x).unwrap();
            let res = r.iter().zip(&b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt() / norm(&b);
            prop_assert!(res <= 1e-10);
            prop_assert!(rep.iterations.fract() == 0.0 || rep.iterations.fract() == 0.5);
        }
    }
}
