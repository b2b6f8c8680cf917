//! Uniform space and time meshes, interior field storage and injection
//! between nested grids.
//!
//! Only interior nodes are stored. Node `(i, j)` with `1 <= i <= Mx-1`,
//! `1 <= j <= My-1` lives at position `(j-1)(Mx-1) + (i-1)` of a species
//! block, i.e. x runs fastest.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    x_len: f64,
    y_len: f64,
    mx: usize,
    my: usize,
    hx: f64,
    hy: f64,
}

impl Grid2D {
    pub fn new(x_len: f64, y_len: f64, mx: usize, my: usize) -> Result<Self> {
        if !(x_len > 0.0 && x_len.is_finite()) || !(y_len > 0.0 && y_len.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "domain extents must be positive, got {x_len} x {y_len}"
            )));
        }
        if mx < 2 || my < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 subintervals per direction, got {mx} x {my}"
            )));
        }
        Ok(Self {
            x_len,
            y_len,
            mx,
            my,
            hx: x_len / mx as f64,
            hy: y_len / my as f64,
        })
    }

    pub fn x_len(&self) -> f64 {
        self.x_len
    }

    pub fn y_len(&self) -> f64 {
        self.y_len
    }

    /// Number of subintervals in x.
    pub fn mx(&self) -> usize {
        self.mx
    }

    /// Number of subintervals in y.
    pub fn my(&self) -> usize {
        self.my
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    /// Interior nodes per row.
    pub fn nx(&self) -> usize {
        self.mx - 1
    }

    /// Interior rows.
    pub fn ny(&self) -> usize {
        self.my - 1
    }

    pub fn interior_len(&self) -> usize {
        self.nx() * self.ny()
    }

    pub fn x(&self, i: usize) -> f64 {
        if i == self.mx {
            self.x_len
        } else {
            i as f64 * self.hx
        }
    }

    pub fn y(&self, j: usize) -> f64 {
        if j == self.my {
            self.y_len
        } else {
            j as f64 * self.hy
        }
    }

    pub fn is_interior(&self, i: usize, j: usize) -> bool {
        (1..self.mx).contains(&i) && (1..self.my).contains(&j)
    }

    pub fn lex_index(&self, i: usize, j: usize) -> Result<usize> {
        if !self.is_interior(i, j) {
            return Err(Error::IndexOutOfRange {
                i,
                j,
                mx: self.mx,
                my: self.my,
            });
        }
        Ok((j - 1) * self.nx() + (i - 1))
    }

    /// Inverse of [`Grid2D::lex_index`]. Panics on out-of-range `k`.
    pub fn node(&self, k: usize) -> (usize, usize) {
        assert!(k < self.interior_len(), "interior index {k} out of range");
        (k % self.nx() + 1, k / self.nx() + 1)
    }

    /// Returns the refinement factor `r` such that `fine` subdivides every
    /// cell of `coarse` into `r x r` cells.
    pub fn refinement_factor(coarse: &Grid2D, fine: &Grid2D) -> Result<usize> {
        let same_extent = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        if !same_extent(coarse.x_len, fine.x_len) || !same_extent(coarse.y_len, fine.y_len) {
            return Err(Error::NonNestedGrids(format!(
                "domains differ: {} x {} vs {} x {}",
                coarse.x_len, coarse.y_len, fine.x_len, fine.y_len
            )));
        }
        if !fine.mx.is_multiple_of(coarse.mx) || !fine.my.is_multiple_of(coarse.my) {
            return Err(Error::NonNestedGrids(format!(
                "{}x{} is not an integer refinement of {}x{}",
                fine.mx, fine.my, coarse.mx, coarse.my
            )));
        }
        let r = fine.mx / coarse.mx;
        if fine.my / coarse.my != r {
            return Err(Error::NonNestedGrids(format!(
                "anisotropic refinement {}x{} -> {}x{}",
                coarse.mx, coarse.my, fine.mx, fine.my
            )));
        }
        Ok(r)
    }
}

/// Interior index of node `(i, j)` on a grid with `mx` subintervals in x.
pub fn lex_index(i: usize, j: usize, mx: usize) -> Result<usize> {
    if mx < 2 || i == 0 || i >= mx || j == 0 {
        return Err(Error::IndexOutOfRange { i, j, mx, my: 0 });
    }
    Ok((j - 1) * (mx - 1) + (i - 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    steps: usize,
    tau: f64,
}

impl TimeGrid {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::param("T", format!("must be positive, got {t_final}")));
        }
        if steps == 0 {
            return Err(Error::param("N", "need at least one time step"));
        }
        Ok(Self {
            t_final,
            steps,
            tau: t_final / steps as f64,
        })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn t(&self, n: usize) -> f64 {
        if n == self.steps {
            self.t_final
        } else {
            n as f64 * self.tau
        }
    }

    /// Same interval with the step halved `factor` times over.
    pub fn refined(&self, factor: usize) -> Self {
        Self::new(self.t_final, self.steps * factor).expect("refining a valid time grid")
    }
}

/// Grid function over the interior nodes for each of `species` components.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldVector {
    species: usize,
    nodes: usize,
    data: Vec<f64>,
}

impl FieldVector {
    pub fn zeros(species: usize, nodes: usize) -> Self {
        Self {
            species,
            nodes,
            data: vec![0.0; species * nodes],
        }
    }

    pub fn from_vec(species: usize, nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != species * nodes {
            return Err(Error::DimensionMismatch {
                expected: species * nodes,
                found: data.len(),
            });
        }
        Ok(Self {
            species,
            nodes,
            data,
        })
    }

    /// Samples `f(l, x, y)` at every interior node of `grid`.
    pub fn from_fn(grid: &Grid2D, species: usize, f: impl Fn(usize, f64, f64) -> f64) -> Self {
        let nodes = grid.interior_len();
        let mut data = Vec::with_capacity(species * nodes);
        for l in 0..species {
            for k in 0..nodes {
                let (i, j) = grid.node(k);
                data.push(f(l, grid.x(i), grid.y(j)));
            }
        }
        Self {
            species,
            nodes,
            data,
        }
    }

    pub fn species(&self) -> usize {
        self.species
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, l: usize) -> &[f64] {
        &self.data[l * self.nodes..(l + 1) * self.nodes]
    }

    pub fn block_mut(&mut self, l: usize) -> &mut [f64] {
        &mut self.data[l * self.nodes..(l + 1) * self.nodes]
    }

    pub fn get(&self, l: usize, k: usize) -> f64 {
        self.data[l * self.nodes + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Gathers the `species`-vector stored at node `k` into `out`.
    pub fn gather(&self, k: usize, out: &mut [f64]) {
        for (l, o) in out.iter_mut().enumerate() {
            *o = self.data[l * self.nodes + k];
        }
    }

    fn check_grid(&self, grid: &Grid2D) -> Result<()> {
        if self.nodes != grid.interior_len() {
            return Err(Error::DimensionMismatch {
                expected: grid.interior_len(),
                found: self.nodes,
            });
        }
        Ok(())
    }
}

/// Injection of a fine-grid field onto the coincident nodes of a coarse grid.
pub fn restrict(fine: &FieldVector, fine_grid: &Grid2D, coarse_grid: &Grid2D) -> Result<FieldVector> {
    fine.check_grid(fine_grid)?;
    let r = Grid2D::refinement_factor(coarse_grid, fine_grid)?;
    let mut out = FieldVector::zeros(fine.species, coarse_grid.interior_len());
    for l in 0..fine.species {
        let src = fine.block(l);
        let dst = out.block_mut(l);
        for (k, v) in dst.iter_mut().enumerate() {
            let (i, j) = coarse_grid.node(k);
            *v = src[fine_grid.lex_index(r * i, r * j)?];
        }
    }
    Ok(out)
}

/// Copies coarse values onto the coincident fine nodes; every other fine
/// node is zero.
pub fn embed(coarse: &FieldVector, coarse_grid: &Grid2D, fine_grid: &Grid2D) -> Result<FieldVector> {
    coarse.check_grid(coarse_grid)?;
    let r = Grid2D::refinement_factor(coarse_grid, fine_grid)?;
    let mut out = FieldVector::zeros(coarse.species, fine_grid.interior_len());
    for l in 0..coarse.species {
        for k in 0..coarse.nodes {
            let (i, j) = coarse_grid.node(k);
            let kf = fine_grid.lex_index(r * i, r * j)?;
            out.block_mut(l)[kf] = coarse.get(l, k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn standard_domain_grid_spacing() {
        let g = Grid2D::new(500.0, 500.0, 8, 8).unwrap();
        assert_eq!(g.hx(), 62.5);
        assert_eq!(g.hy(), 62.5);
        let g = Grid2D::new(500.0, 250.0, 10, 5).unwrap();
        assert_relative_eq!(g.hx(), 50.0);
        assert_relative_eq!(g.hy(), 50.0);
    }

    #[test]
    fn smallest_grid_has_one_interior_node() {
        let g = Grid2D::new(1.0, 1.0, 2, 2).unwrap();
        assert_eq!(g.interior_len(), 1);
        assert_eq!(g.node(0), (1, 1));
        assert_eq!((g.x(1), g.y(1)), (0.5, 0.5));
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid2D::new(1.0, 1.0, 1, 4).is_err());
        assert!(Grid2D::new(1.0, 1.0, 4, 1).is_err());
        assert!(Grid2D::new(0.0, 1.0, 4, 4).is_err());
        assert!(Grid2D::new(1.0, -2.0, 4, 4).is_err());
    }

    #[test]
    fn lex_index_examples() {
        assert_eq!(lex_index(1, 1, 9).unwrap(), 0);
        assert_eq!(lex_index(8, 1, 9).unwrap(), 7);
        assert_eq!(lex_index(2, 3, 9).unwrap(), 17);
        assert!(lex_index(0, 1, 9).is_err());
        assert!(lex_index(9, 1, 9).is_err());
        let g = Grid2D::new(1.0, 1.0, 9, 4).unwrap();
        assert!(g.lex_index(1, 4).is_err());
    }

    #[test]
    fn lex_index_is_bijective() {
        for mx in 2..=16 {
            for my in 2..=16 {
                let g = Grid2D::new(1.0, 1.0, mx, my).unwrap();
                let mut seen = vec![false; g.interior_len()];
                for j in 1..my {
                    for i in 1..mx {
                        let k = g.lex_index(i, j).unwrap();
                        assert!(!seen[k]);
                        seen[k] = true;
                        assert_eq!(g.node(k), (i, j));
                    }
                }
                assert!(seen.into_iter().all(|s| s));
            }
        }
    }

    #[test]
    fn restrict_identity_and_injection() {
        let coarse = Grid2D::new(3.0, 3.0, 3, 3).unwrap();
        let fine = Grid2D::new(3.0, 3.0, 6, 6).unwrap();
        let f = FieldVector::from_fn(&fine, 2, |l, x, y| x + y + l as f64);
        assert_eq!(restrict(&f, &fine, &fine).unwrap(), f);

        let r = restrict(&f, &fine, &coarse).unwrap();
        assert_eq!(r.nodes(), 4);
        let exact = FieldVector::from_fn(&coarse, 2, |l, x, y| x + y + l as f64);
        for (a, b) in r.as_slice().iter().zip(exact.as_slice()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14);
        }
        // every other fine node
        assert_eq!(r.get(0, 0), f.get(0, fine.lex_index(2, 2).unwrap()));
        assert_eq!(r.get(0, 3), f.get(0, fine.lex_index(4, 4).unwrap()));
    }

    #[test]
    fn restrict_rejects_non_nested() {
        let a = Grid2D::new(1.0, 1.0, 4, 4).unwrap();
        let b = Grid2D::new(1.0, 1.0, 6, 6).unwrap();
        let f = FieldVector::zeros(1, b.interior_len());
        assert!(matches!(restrict(&f, &b, &a), Err(Error::NonNestedGrids(_))));
        let c = Grid2D::new(2.0, 1.0, 8, 8).unwrap();
        let f = FieldVector::zeros(1, c.interior_len());
        assert!(restrict(&f, &c, &a).is_err());
    }

    proptest! {
        #[test]
        fn restrict_after_embed_is_identity(
            mx in 2usize..7, my in 2usize..7, r in 1usize..4,
            seed in proptest::collection::vec(-1e3f64..1e3, 36 * 2),
        ) {
            let coarse = Grid2D::new(1.0, 2.0, mx, my).unwrap();
            let fine = Grid2D::new(1.0, 2.0, r * mx, r * my).unwrap();
            let n = coarse.interior_len();
            let u = FieldVector::from_vec(2, n, seed[..2 * n].to_vec()).unwrap();
            let back = restrict(&embed(&u, &coarse, &fine).unwrap(), &fine, &coarse).unwrap();
            prop_assert_eq!(back, u);
        }
    }
}
