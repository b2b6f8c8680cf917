//! Problem definitions for weakly coupled semilinear parabolic systems
//!
//! ```text
//! du_l/dt - a_l u_xx - b_l u_yy + c_l u_x + d_l u_y = R_l(x, y, t, u) + xi_l(x, y, t)
//! ```
//!
//! on `[0, X] x [0, Y]` with Dirichlet data, plus the two shipped examples:
//! a manufactured-solution problem and the ten-species air-pollution model.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::airchem::{self, Chemistry, ChemistryMode, INITIAL_CONCENTRATIONS, SPECIES};
use crate::error::{Error, Result};
use crate::grid::Grid2D;

pub type CoefficientField = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// `(x, y, t, u, out)`; `out` has length `L` for rates, `L * L` (row-major,
/// `out[l * L + m] = dR_l/du_m`) for Jacobians.
pub type ReactionFn = Arc<dyn Fn(f64, f64, f64, &[f64], &mut [f64]) + Send + Sync>;
pub type SpeciesField = Arc<dyn Fn(usize, f64, f64, f64) -> f64 + Send + Sync>;
pub type InitialField = Arc<dyn Fn(usize, f64, f64) -> f64 + Send + Sync>;

/// Coefficients of one species' transport operator.
#[derive(Clone)]
pub struct TransportCoefficients {
    /// Diffusion in x.
    pub a: CoefficientField,
    /// Diffusion in y.
    pub b: CoefficientField,
    /// Advection in x.
    pub c: CoefficientField,
    /// Advection in y.
    pub d: CoefficientField,
}

impl TransportCoefficients {
    pub fn constant(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            a: Arc::new(move |_, _| a),
            b: Arc::new(move |_, _| b),
            c: Arc::new(move |_, _| c),
            d: Arc::new(move |_, _| d),
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub species: usize,
    pub x_len: f64,
    pub y_len: f64,
    pub t_final: f64,
    pub transport: Vec<TransportCoefficients>,
    pub reaction: ReactionFn,
    pub reaction_jacobian: ReactionFn,
    pub forcing: Option<SpeciesField>,
    pub boundary: SpeciesField,
    pub initial: InitialField,
    /// Closed-form solution, when one is known.
    pub exact: Option<SpeciesField>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("species", &self.species)
            .field("domain", &(self.x_len, self.y_len, self.t_final))
            .field("forcing", &self.forcing.is_some())
            .field("exact", &self.exact.is_some())
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn grid(&self, mx: usize, my: usize) -> Result<Grid2D> {
        Grid2D::new(self.x_len, self.y_len, mx, my)
    }

    pub fn forcing(&self, l: usize, x: f64, y: f64, t: f64) -> f64 {
        self.forcing.as_ref().map_or(0.0, |f| f(l, x, y, t))
    }

    /// Reaction terms plus forcing for every species at one point.
    pub fn source(&self, x: f64, y: f64, t: f64, u: &[f64], out: &mut [f64]) {
        (self.reaction)(x, y, t, u, out);
        if let Some(f) = &self.forcing {
            for (l, o) in out.iter_mut().enumerate() {
                *o += f(l, x, y, t);
            }
        }
    }

    /// Fails if any diffusion coefficient is not strictly positive at a node
    /// of `grid` (boundary nodes included).
    pub fn check_diffusion(&self, l: usize, grid: &Grid2D) -> Result<()> {
        let tc = &self.transport[l];
        for j in 0..=grid.my() {
            for i in 0..=grid.mx() {
                let (x, y) = (grid.x(i), grid.y(j));
                for value in [(tc.a)(x, y), (tc.b)(x, y)] {
                    if !(value > 0.0) {
                        return Err(Error::NonPositiveDiffusion {
                            species: l,
                            i,
                            j,
                            value,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Fails if boundary data at `t = 0` disagree with the initial data at
    /// some boundary node of `grid` by more than `1e-12` relative to the
    /// largest initial value of that species on the grid.
    pub fn check_compatibility(&self, grid: &Grid2D) -> Result<()> {
        for l in 0..self.species {
            let mut scale = 0.0f64;
            for j in 0..=grid.my() {
                for i in 0..=grid.mx() {
                    scale = scale.max((self.initial)(l, grid.x(i), grid.y(j)).abs());
                }
            }
            for j in 0..=grid.my() {
                for i in 0..=grid.mx() {
                    if grid.is_interior(i, j) {
                        continue;
                    }
                    let (x, y) = (grid.x(i), grid.y(j));
                    let g = (self.boundary)(l, x, y, 0.0);
                    let u0 = (self.initial)(l, x, y);
                    if (g - u0).abs() > 1e-12 * scale.max(g.abs()).max(1e-300) {
                        return Err(Error::param(
                            "boundary",
                            format!("species {l}: boundary {g} != initial {u0} at ({x}, {y})"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Solid-body rotation about `(xc, yc)` with angular speed `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindParams {
    pub mu: f64,
    pub xc: f64,
    pub yc: f64,
}

impl WindParams {
    /// Rotation about the centre of `[0, x_len] x [0, y_len]`.
    pub fn centred(mu: f64, x_len: f64, y_len: f64) -> Self {
        Self {
            mu,
            xc: x_len / 2.0,
            yc: y_len / 2.0,
        }
    }
}

pub fn rotational_wind(x: f64, y: f64, w: &WindParams) -> (f64, f64) {
    (w.mu * (y - w.yc), w.mu * (w.xc - x))
}

/// Default wind speed `2 pi / (60 T)`.
pub fn standard_mu(t_final: f64) -> f64 {
    2.0 * PI / (60.0 * t_final)
}

/// `exp(-t/T) sin(pi x / X) sin(pi y / Y)`.
pub fn manufactured_solution(x: f64, y: f64, t: f64, x_len: f64, y_len: f64, t_final: f64) -> f64 {
    (-t / t_final).exp() * (PI * x / x_len).sin() * (PI * y / y_len).sin()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1Params {
    pub x_len: f64,
    pub y_len: f64,
    pub t_final: f64,
    pub mu: f64,
    pub diffusion: f64,
    pub cos_theta: f64,
    pub chemistry: ChemistryMode,
}

impl Default for Example1Params {
    fn default() -> Self {
        Self {
            x_len: 500.0,
            y_len: 500.0,
            t_final: 1440.0,
            mu: standard_mu(1440.0),
            diffusion: 1.8,
            cos_theta: 1.0,
            chemistry: ChemistryMode::AsPrinted,
        }
    }
}

impl Example1Params {
    fn wind(&self) -> WindParams {
        WindParams::centred(self.mu, self.x_len, self.y_len)
    }
}

/// Source term that makes [`manufactured_solution`] exact for species `l`.
///
/// With `s = sin(pi x/X) sin(pi y/Y)` and `E = exp(-t/T)`, the solution
/// `u = E s` has
///
/// ```text
/// u_t = -u / T
/// u_xx + u_yy = -pi^2 (1/X^2 + 1/Y^2) u
/// u_x = (pi/X) E cos(pi x/X) sin(pi y/Y)
/// u_y = (pi/Y) E sin(pi x/X) cos(pi y/Y)
/// ```
///
/// so `xi_l = u_t - K (u_xx + u_yy) + c u_x + d u_y - R_l(u, ..., u)`.
pub fn manufactured_forcing(l: usize, x: f64, y: f64, t: f64, params: &Example1Params, chem: &Chemistry) -> f64 {
    let p = params;
    let decay = (-t / p.t_final).exp();
    let (sx, cx) = (PI * x / p.x_len).sin_cos();
    let (sy, cy) = (PI * y / p.y_len).sin_cos();
    let u = decay * sx * sy;
    let u_t = -u / p.t_final;
    let laplacian = -PI * PI * (1.0 / (p.x_len * p.x_len) + 1.0 / (p.y_len * p.y_len)) * u;
    let u_x = PI / p.x_len * decay * cx * sy;
    let u_y = PI / p.y_len * decay * sx * cy;
    let (c, d) = rotational_wind(x, y, &p.wind());
    let r = chem.rates(&[u; SPECIES]);
    u_t - p.diffusion * laplacian + c * u_x + d * u_y - r[l]
}

fn chemistry_reactions(chem: Chemistry) -> (ReactionFn, ReactionFn) {
    let rates: ReactionFn = Arc::new(move |_, _, _, u, out| out.copy_from_slice(&chem.rates(u)));
    let jacobian: ReactionFn = Arc::new(move |_, _, _, u, out| {
        for (row, src) in out.chunks_exact_mut(SPECIES).zip(chem.jacobian(u)) {
            row.copy_from_slice(&src);
        }
    });
    (rates, jacobian)
}

fn wind_transport(diffusion: f64, wind: WindParams) -> TransportCoefficients {
    TransportCoefficients {
        a: Arc::new(move |_, _| diffusion),
        b: Arc::new(move |_, _| diffusion),
        c: Arc::new(move |x, y| rotational_wind(x, y, &wind).0),
        d: Arc::new(move |x, y| rotational_wind(x, y, &wind).1),
    }
}

/// Manufactured-solution problem with default parameters.
pub fn make_example1() -> ProblemSpec {
    make_example1_with(Example1Params::default()).expect("default parameters are valid")
}

pub fn make_example1_with(params: Example1Params) -> Result<ProblemSpec> {
    let chem = Chemistry::new(params.cos_theta, params.chemistry)?;
    let (reaction, reaction_jacobian) = chemistry_reactions(chem);
    let p = params;
    let exact: SpeciesField =
        Arc::new(move |_, x, y, t| manufactured_solution(x, y, t, p.x_len, p.y_len, p.t_final));
    let exact_init = exact.clone();
    Ok(ProblemSpec {
        name: "manufactured".into(),
        species: SPECIES,
        x_len: p.x_len,
        y_len: p.y_len,
        t_final: p.t_final,
        transport: vec![wind_transport(p.diffusion, p.wind()); SPECIES],
        reaction,
        reaction_jacobian,
        forcing: Some(Arc::new(move |l, x, y, t| manufactured_forcing(l, x, y, t, &p, &chem))),
        // The exact solution vanishes on the boundary of the rectangle.
        boundary: Arc::new(|_, _, _, _| 0.0),
        initial: Arc::new(move |l, x, y| exact_init(l, x, y, 0.0)),
        exact: Some(exact),
    })
}

/// Dirichlet data for the air-pollution problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// `const_l (sin(t/C) + 2)` with `const_l = u0_l / 2`.
    #[default]
    Periodic,
    /// Zero for `t > 0`; equal to the initial data at `t = 0`.
    Homogeneous,
}

impl std::str::FromStr for BoundaryMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "periodic" => Ok(Self::Periodic),
            "homogeneous" => Ok(Self::Homogeneous),
            other => Err(format!("unknown boundary mode `{other}` (expected periodic|homogeneous)")),
        }
    }
}

impl std::fmt::Display for BoundaryMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Periodic => "periodic",
            Self::Homogeneous => "homogeneous",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example2Params {
    pub x_len: f64,
    pub y_len: f64,
    pub t_final: f64,
    pub mu: f64,
    pub diffusion: f64,
    pub cos_theta: f64,
    pub chemistry: ChemistryMode,
    /// `C` in the boundary signal `const_l (sin(t/C) + 2)`.
    pub period_scale: f64,
    pub boundary: BoundaryMode,
    pub initial: [f64; SPECIES],
}

impl Default for Example2Params {
    fn default() -> Self {
        Self {
            x_len: 500.0,
            y_len: 500.0,
            t_final: 1440.0,
            mu: standard_mu(1440.0),
            diffusion: 1.8,
            cos_theta: 1.0,
            chemistry: ChemistryMode::AsPrinted,
            period_scale: 4.0,
            boundary: BoundaryMode::Periodic,
            initial: INITIAL_CONCENTRATIONS,
        }
    }
}

/// Air-pollution problem with the given zenith-angle cosine and wind speed.
pub fn make_example2(cos_theta: f64, mu: f64) -> Result<ProblemSpec> {
    make_example2_with(Example2Params {
        cos_theta,
        mu,
        ..Default::default()
    })
}

pub fn make_example2_with(params: Example2Params) -> Result<ProblemSpec> {
    let chem = Chemistry::new(params.cos_theta, params.chemistry)?;
    if !(params.period_scale > 0.0) {
        return Err(Error::param("C", "boundary period scale must be positive"));
    }
    let (reaction, reaction_jacobian) = chemistry_reactions(chem);
    let p = params;
    let wind = WindParams::centred(p.mu, p.x_len, p.y_len);
    // gamma_l(0) = 2 const_l must equal the constant initial value.
    let amplitude: [f64; SPECIES] = std::array::from_fn(|l| p.initial[l] / 2.0);
    Ok(ProblemSpec {
        name: "airpollution".into(),
        species: SPECIES,
        x_len: p.x_len,
        y_len: p.y_len,
        t_final: p.t_final,
        transport: vec![wind_transport(p.diffusion, wind); SPECIES],
        reaction,
        reaction_jacobian,
        forcing: None,
        boundary: match p.boundary {
            BoundaryMode::Periodic => {
                Arc::new(move |l, _, _, t| airchem::boundary_signal(t, amplitude[l], p.period_scale))
            }
            BoundaryMode::Homogeneous => Arc::new(move |l, _, _, t| if t > 0.0 { 0.0 } else { p.initial[l] }),
        },
        initial: Arc::new(move |l, _, _| p.initial[l]),
        exact: None,
    })
}
