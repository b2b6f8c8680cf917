//! Text dumps of a solution over all mesh nodes, boundary included.
//!
//! Layout: a `# t=<time>` line, then one table per species with the header
//! `x,y,u<l>` (1-based `l`) followed by `(mx+1)(my+1)` rows `x,y,value`,
//! `x` varying fastest. Tables are separated by a blank line.

use std::path::Path;

use parafd::{FieldVector, Grid2D, ProblemSpec};

use crate::{write_atomic, CliError};

/// Formats a float with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Values of all species at every node of `grid`: interior values from `u`,
/// boundary values from the problem's Dirichlet data at `t`.
pub fn full_field(u: &FieldVector, grid: &Grid2D, problem: &ProblemSpec, t: f64) -> Vec<Vec<f64>> {
    (0..u.species())
        .map(|l| {
            let mut vals = Vec::with_capacity((grid.mx() + 1) * (grid.my() + 1));
            for j in 0..=grid.my() {
                for i in 0..=grid.mx() {
                    let (x, y) = (grid.x(i), grid.y(j));
                    vals.push(if grid.is_interior(i, j) {
                        u.get(l, grid.lex_index(i, j).expect("interior node"))
                    } else {
                        (problem.boundary)(l, x, y, t)
                    });
                }
            }
            vals
        })
        .collect()
}

pub fn render_field_dump(values: &[Vec<f64>], grid: &Grid2D, t: f64) -> String {
    let mut s = format!("# t={}\n", fmt17(t));
    for (l, vals) in values.iter().enumerate() {
        if l > 0 {
            s.push('\n');
        }
        s.push_str(&format!("x,y,u{}\n", l + 1));
        let mut k = 0;
        for j in 0..=grid.my() {
            for i in 0..=grid.mx() {
                s.push_str(&format!("{},{},{}\n", fmt17(grid.x(i)), fmt17(grid.y(j)), fmt17(vals[k])));
                k += 1;
            }
        }
    }
    s
}

pub fn emit_field_dump(
    u: &FieldVector,
    grid: &Grid2D,
    problem: &ProblemSpec,
    t: f64,
    path: &Path,
) -> Result<(), CliError> {
    write_atomic(path, &render_field_dump(&full_field(u, grid, problem, t), grid, t))
}

/// A parsed dump: the time and, per species, the `(x, y, value)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub t: f64,
    pub species: Vec<Vec<(f64, f64, f64)>>,
}

pub fn parse_field_dump(text: &str) -> Result<FieldDump, String> {
    let mut lines = text.lines();
    let t = lines
        .next()
        .and_then(|l| l.strip_prefix("# t="))
        .ok_or("missing `# t=` line")?
        .parse::<f64>()
        .map_err(|e| e.to_string())?;
    let mut species: Vec<Vec<(f64, f64, f64)>> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        if line.starts_with("x,y,u") {
            species.push(Vec::new());
            continue;
        }
        let table = species.last_mut().ok_or("data row before the first header")?;
        let cols: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|e| format!("`{line}`: {e}")))
            .collect::<Result<_, _>>()?;
        match cols.as_slice() {
            [x, y, v] => table.push((*x, *y, *v)),
            _ => return Err(format!("expected three columns in `{line}`")),
        }
    }
    Ok(FieldDump { t, species })
}
