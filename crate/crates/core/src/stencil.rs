//! Banded operators with a 3x3 footprint over the interior nodes.
//!
//! Row `k` of a [`StencilMatrix`] holds nine coefficients indexed by the
//! offset `(k1, k2)` in `{-1, 0, 1}^2`. Offsets that land on boundary nodes
//! are stored separately in a [`BoundaryCoupling`], so the matrix itself
//! only ever couples interior unknowns.

use crate::error::{Error, Result};
use crate::grid::Grid2D;

/// Slot of offset `(k1, k2)` in a stencil row.
pub const fn slot(k1: isize, k2: isize) -> usize {
    ((k2 + 1) * 3 + (k1 + 1)) as usize
}

/// Offsets in slot order.
pub const OFFSETS: [(isize, isize); 9] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (0, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub type StencilRow = [f64; 9];

#[derive(Debug, Clone, PartialEq)]
pub struct StencilMatrix {
    nx: usize,
    ny: usize,
    rows: Vec<StencilRow>,
}

impl StencilMatrix {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            nx: grid.nx(),
            ny: grid.ny(),
            rows: vec![[0.0; 9]; grid.interior_len()],
        }
    }

    /// Diagonal matrix with `value` on the centre offset.
    pub fn scaled_identity(grid: &Grid2D, value: f64) -> Self {
        let mut m = Self::zeros(grid);
        for row in &mut m.rows {
            row[slot(0, 0)] = value;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, k: usize) -> &StencilRow {
        &self.rows[k]
    }

    pub fn rows(&self) -> &[StencilRow] {
        &self.rows
    }

    pub fn get(&self, k: usize, k1: isize, k2: isize) -> f64 {
        self.rows[k][slot(k1, k2)]
    }

    pub fn row_sum(&self, k: usize) -> f64 {
        self.rows[k].iter().sum()
    }

    /// `true` when all eight neighbours of row `k` are interior nodes.
    pub fn has_full_neighbourhood(&self, k: usize) -> bool {
        let (i, j) = (k % self.nx, k / self.nx);
        i > 0 && i + 1 < self.nx && j > 0 && j + 1 < self.ny
    }

    /// `y = A x`. Panics if the lengths disagree with the matrix dimension.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim());
        assert_eq!(y.len(), self.dim());
        let nx = self.nx;
        for j in 0..self.ny {
            let lo = j > 0;
            let hi = j + 1 < self.ny;
            for i in 0..nx {
                let k = j * nx + i;
                let c = &self.rows[k];
                let left = i > 0;
                let right = i + 1 < nx;
                let mut s = c[4] * x[k];
                if left {
                    s += c[3] * x[k - 1];
                }
                if right {
                    s += c[5] * x[k + 1];
                }
                if lo {
                    let b = k - nx;
                    s += c[1] * x[b];
                    if left {
                        s += c[0] * x[b - 1];
                    }
                    if right {
                        s += c[2] * x[b + 1];
                    }
                }
                if hi {
                    let t = k + nx;
                    s += c[7] * x[t];
                    if left {
                        s += c[6] * x[t - 1];
                    }
                    if right {
                        s += c[8] * x[t + 1];
                    }
                }
                y[k] = s;
            }
        }
    }

    /// `y += alpha A x`.
    pub fn apply_add(&self, alpha: f64, x: &[f64], y: &mut [f64], scratch: &mut Vec<f64>) {
        scratch.resize(self.dim(), 0.0);
        self.apply(x, scratch);
        for (yi, si) in y.iter_mut().zip(scratch.iter()) {
            *yi += alpha * si;
        }
    }

    /// Row-major dense copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut dense = vec![vec![0.0; n]; n];
        for (k, row) in self.rows.iter().enumerate() {
            let (i, j) = ((k % self.nx) as isize, (k / self.nx) as isize);
            for (s, &(k1, k2)) in OFFSETS.iter().enumerate() {
                let (ii, jj) = (i + k1, j + k2);
                if ii >= 0 && jj >= 0 && (ii as usize) < self.nx && (jj as usize) < self.ny {
                    dense[k][jj as usize * self.nx + ii as usize] = row[s];
                }
            }
        }
        dense
    }
}

/// Boundary nodes of a grid, numbered once so that boundary data can be
/// sampled into flat per-species arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryNodes {
    nodes: Vec<(usize, usize)>,
    lookup: Vec<usize>,
    stride: usize,
}

impl BoundaryNodes {
    pub fn new(grid: &Grid2D) -> Self {
        let stride = grid.mx() + 1;
        let mut lookup = vec![usize::MAX; stride * (grid.my() + 1)];
        let mut nodes = Vec::new();
        for j in 0..=grid.my() {
            for i in 0..=grid.mx() {
                if !grid.is_interior(i, j) {
                    lookup[j * stride + i] = nodes.len();
                    nodes.push((i, j));
                }
            }
        }
        Self {
            nodes,
            lookup,
            stride,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    pub fn index(&self, i: usize, j: usize) -> Option<usize> {
        self.lookup
            .get(j * self.stride + i)
            .copied()
            .filter(|&s| s != usize::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub row: usize,
    /// Index into [`BoundaryNodes`].
    pub node: usize,
    pub coeff: f64,
}

/// Stencil coefficients that reference boundary nodes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoundaryCoupling {
    entries: Vec<Coupling>,
}

impl BoundaryCoupling {
    pub fn entries(&self) -> &[Coupling] {
        &self.entries
    }

    /// `out[row] += alpha * sum(coeff * values[node])`.
    pub fn accumulate(&self, alpha: f64, values: &[f64], out: &mut [f64]) {
        for c in &self.entries {
            out[c.row] += alpha * c.coeff * values[c.node];
        }
    }
}

/// A stencil operator split into its interior matrix and boundary part.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub matrix: StencilMatrix,
    pub coupling: BoundaryCoupling,
}

impl Assembled {
    /// Builds the operator from the full nine-point row of every interior
    /// node `(i, j)`.
    pub fn from_rows(
        grid: &Grid2D,
        boundary: &BoundaryNodes,
        mut row_at: impl FnMut(usize, usize) -> Result<StencilRow>,
    ) -> Result<Self> {
        let mut matrix = StencilMatrix::zeros(grid);
        let mut entries = Vec::new();
        for k in 0..grid.interior_len() {
            let (i, j) = grid.node(k);
            let full = row_at(i, j)?;
            let mut row = [0.0; 9];
            for (s, &(k1, k2)) in OFFSETS.iter().enumerate() {
                let (ii, jj) = ((i as isize + k1) as usize, (j as isize + k2) as usize);
                if grid.is_interior(ii, jj) {
                    row[s] = full[s];
                } else if full[s] != 0.0 {
                    let node = boundary.index(ii, jj).ok_or(Error::IndexOutOfRange {
                        i: ii,
                        j: jj,
                        mx: grid.mx(),
                        my: grid.my(),
                    })?;
                    entries.push(Coupling {
                        row: k,
                        node,
                        coeff: full[s],
                    });
                }
            }
            matrix.rows[k] = row;
        }
        Ok(Self {
            matrix,
            coupling: BoundaryCoupling { entries },
        })
    }

    /// Identity mass operator (no boundary coupling).
    pub fn identity(grid: &Grid2D) -> Self {
        Self {
            matrix: StencilMatrix::scaled_identity(grid, 1.0),
            coupling: BoundaryCoupling::default(),
        }
    }
}
