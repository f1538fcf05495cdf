//! Rectilinear 2-D lookup tables with bilinear interpolation.
//!
//! Tables are built from scattered `(x, y, value)` records that must cover a
//! rectangular grid. Cells may be absent; a query that needs an absent corner
//! fails instead of inventing a value. Queries outside the grid never
//! extrapolate.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    name: String,
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<Option<f64>>,
}

impl Grid2 {
    /// Build a grid from records. Axis nodes are the sorted distinct
    /// coordinates seen; duplicate `(x, y)` pairs are rejected.
    pub fn from_records<I>(name: impl Into<String>, records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64, f64)>,
    {
        let name = name.into();
        let records: Vec<_> = records.into_iter().collect();
        if records.is_empty() {
            return Err(Error::Calibration(format!("{name}: no records")));
        }
        for &(x, y, v) in &records {
            if !(x.is_finite() && y.is_finite() && v.is_finite()) {
                return Err(Error::Calibration(format!(
                    "{name}: non-finite record ({x}, {y}, {v})"
                )));
            }
        }
        let xs = distinct_sorted(records.iter().map(|r| r.0));
        let ys = distinct_sorted(records.iter().map(|r| r.1));
        let mut values = vec![None; xs.len() * ys.len()];
        for &(x, y, v) in &records {
            let i = xs.iter().position(|&n| n == x).expect("node present");
            let j = ys.iter().position(|&n| n == y).expect("node present");
            let slot = &mut values[i * ys.len() + j];
            if slot.is_some() {
                return Err(Error::Calibration(format!(
                    "{name}: duplicate entry at ({x}, {y})"
                )));
            }
            *slot = Some(v);
        }
        Ok(Self {
            name,
            xs,
            ys,
            values,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Stored value at an exact node, if both coordinates are nodes.
    pub fn node(&self, x: f64, y: f64) -> Option<f64> {
        let i = self.xs.iter().position(|&n| n == x)?;
        let j = self.ys.iter().position(|&n| n == y)?;
        self.values[i * self.ys.len() + j]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let (x0, x1) = (self.xs[0], self.xs[self.xs.len() - 1]);
        let (y0, y1) = (self.ys[0], self.ys[self.ys.len() - 1]);
        x >= x0 && x <= x1 && y >= y0 && y <= y1
    }

    pub fn values(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.xs.iter().enumerate().flat_map(move |(i, &x)| {
            self.ys.iter().enumerate().filter_map(move |(j, &y)| {
                self.values[i * self.ys.len() + j].map(|v| (x, y, v))
            })
        })
    }

    /// Bilinear interpolation. Exact at nodes.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !self.contains(x, y) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Extrapolation {
                table: self.name.clone(),
                x,
                y,
            });
        }
        let (i, tx) = bracket(&self.xs, x);
        let (j, ty) = bracket(&self.ys, y);
        let ny = self.ys.len();
        let corner = |di: usize, dj: usize, w: f64| -> Result<f64> {
            if w == 0.0 {
                return Ok(0.0);
            }
            let (ii, jj) = (i + di, j + dj);
            self.values[ii * ny + jj]
                .map(|v| v * w)
                .ok_or_else(|| Error::MissingCell {
                    table: self.name.clone(),
                    x: self.xs[ii],
                    y: self.ys[jj],
                })
        };
        Ok(corner(0, 0, (1.0 - tx) * (1.0 - ty))?
            + corner(1, 0, tx * (1.0 - ty))?
            + corner(0, 1, (1.0 - tx) * ty)?
            + corner(1, 1, tx * ty)?)
    }
}

fn distinct_sorted(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = it.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

/// Lower node index and fractional position. Degenerate single-node axes
/// return `(0, 0.0)`; the caller guards with `contains`.
fn bracket(nodes: &[f64], q: f64) -> (usize, f64) {
    if nodes.len() == 1 {
        return (0, 0.0);
    }
    let last = nodes.len() - 2;
    let i = nodes
        .windows(2)
        .position(|w| q <= w[1])
        .unwrap_or(last)
        .min(last);
    let t = (q - nodes[i]) / (nodes[i + 1] - nodes[i]);
    (i, t)
}
