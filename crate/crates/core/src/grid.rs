//! Uniform half-plane grids and scalar fields on them.
//!
//! Cells are squares of side `h`; values live at cell centers. Field dumps
//! are plain text with a one-line header and 17-significant-digit decimals,
//! which round-trip `f64` exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Axis-aligned rectangle, used for working domains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Rect {
    pub fn new(x1_min: f64, x1_max: f64, x2_min: f64, x2_max: f64) -> Result<Self> {
        if !(x1_min < x1_max && x2_min < x2_max) || x2_min < 0.0 {
            return Err(Error::Grid(format!(
                "bad rectangle [{x1_min}, {x1_max}] x [{x2_min}, {x2_max}]"
            )));
        }
        Ok(Rect {
            x1_min,
            x1_max,
            x2_min,
            x2_max,
        })
    }

    pub fn contains(&self, x1: f64, x2: f64) -> bool {
        x1 > self.x1_min && x1 < self.x1_max && x2 > self.x2_min && x2 < self.x2_max
    }
}

/// Uniform square-cell grid over a rectangle in the closed upper half-plane.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    x1_min: f64,
    x2_min: f64,
    h: f64,
    n1: usize,
    n2: usize,
}

impl GridSpec {
    pub fn new(x1_min: f64, x2_min: f64, h: f64, n1: usize, n2: usize) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) || n1 == 0 || n2 == 0 {
            return Err(Error::Grid(format!("bad grid: h={h}, n1={n1}, n2={n2}")));
        }
        if x2_min < 0.0 {
            return Err(Error::Grid(format!(
                "grid must lie in the upper half-plane, got x2_min={x2_min}"
            )));
        }
        Ok(GridSpec {
            x1_min,
            x2_min,
            h,
            n1,
            n2,
        })
    }

    /// Grid of cell size `h` that strictly contains `domain` with `margin`
    /// extra cells on every side, symmetric about x1 = 0 (the rearrangement
    /// axis), clamped to the half-plane below.
    pub fn covering(domain: &Rect, h: f64, margin: usize) -> Result<Self> {
        let m = margin as f64;
        let half_span = domain.x1_max.abs().max(domain.x1_min.abs());
        let half_cells = (half_span / h + m).ceil() as usize;
        let n1 = 2 * half_cells;
        let x1_min = -(half_cells as f64) * h;
        let x2_min = (domain.x2_min - m * h).max(0.0);
        let n2 = ((domain.x2_max + m * h - x2_min) / h).ceil() as usize;
        GridSpec::new(x1_min, x2_min, h, n1, n2)
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn x1_min(&self) -> f64 {
        self.x1_min
    }

    pub fn x2_min(&self) -> f64 {
        self.x2_min
    }

    pub fn x1_max(&self) -> f64 {
        self.x1_min + self.n1 as f64 * self.h
    }

    pub fn x2_max(&self) -> f64 {
        self.x2_min + self.n2 as f64 * self.h
    }

    pub fn cells(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn cell_area(&self) -> f64 {
        self.h * self.h
    }

    /// Center abscissa of column i.
    #[inline]
    pub fn x1(&self, i: usize) -> f64 {
        self.x1_min + (i as f64 + 0.5) * self.h
    }

    /// Center height of row j.
    #[inline]
    pub fn x2(&self, j: usize) -> f64 {
        self.x2_min + (j as f64 + 0.5) * self.h
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.n1 + i
    }

    /// Whether cell centers are mirror pairs about x1 = 0.
    pub fn symmetric_about_axis(&self) -> bool {
        (self.x1_min + self.x1_max()).abs() < 1e-12 * self.h
    }
}

/// Scalar samples at the cell centers of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: GridSpec) -> Self {
        let n = grid.cells();
        ScalarField {
            grid,
            data: vec![0.0; n],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut data = Vec::with_capacity(grid.cells());
        for j in 0..grid.n2 {
            let x2 = grid.x2(j);
            for i in 0..grid.n1 {
                data.push(f(grid.x1(i), x2));
            }
        }
        ScalarField { grid, data }
    }

    pub fn from_data(grid: GridSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.cells() {
            return Err(Error::Grid(format!(
                "data length {} does not match grid {}x{}",
                data.len(),
                grid.n1,
                grid.n2
            )));
        }
        Ok(ScalarField { grid, data })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.grid.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let k = self.grid.idx(i, j);
        self.data[k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Bilinear interpolation between cell centers; zero outside their hull.
    pub fn interp(&self, x1: f64, x2: f64) -> f64 {
        let g = &self.grid;
        let s = (x1 - g.x1_min) / g.h - 0.5;
        let t = (x2 - g.x2_min) / g.h - 0.5;
        if s < 0.0 || t < 0.0 || s > (g.n1 - 1) as f64 || t > (g.n2 - 1) as f64 {
            return 0.0;
        }
        let i0 = (s.floor() as usize).min(g.n1 - 2);
        let j0 = (t.floor() as usize).min(g.n2 - 2);
        let fs = s - i0 as f64;
        let ft = t - j0 as f64;
        let v00 = self.get(i0, j0);
        let v10 = self.get(i0 + 1, j0);
        let v01 = self.get(i0, j0 + 1);
        let v11 = self.get(i0 + 1, j0 + 1);
        v00 * (1.0 - fs) * (1.0 - ft) + v10 * fs * (1.0 - ft) + v01 * (1.0 - fs) * ft + v11 * fs * ft
    }

    /// Largest deviation from evenness in x1, for grids symmetric about the
    /// axis.
    pub fn x1_asymmetry(&self) -> f64 {
        let g = &self.grid;
        let mut worst = 0.0f64;
        for j in 0..g.n2 {
            for i in 0..g.n1 / 2 {
                let d = (self.get(i, j) - self.get(g.n1 - 1 - i, j)).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Text dump: one header line (bounds, counts, cell size), then row-major
    /// values bottom row first, all at 17 significant digits.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "# vorpair field v1: x1_min x1_max x2_min x2_max n1 n2 h")?;
        writeln!(
            w,
            "{:.16e} {:.16e} {:.16e} {:.16e} {} {} {:.16e}",
            g.x1_min,
            g.x1_max(),
            g.x2_min,
            g.x2_max(),
            g.n1,
            g.n2,
            g.h
        )?;
        for j in 0..g.n2 {
            let row = &self.data[g.idx(0, j)..g.idx(0, j) + g.n1];
            let mut line = String::with_capacity(row.len() * 24);
            for (k, v) in row.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl BufRead) -> Result<Self> {
        let mut header = String::new();
        loop {
            header.clear();
            if r.read_line(&mut header)? == 0 {
                return Err(Error::Parse("field dump: missing header".into()));
            }
            if !header.trim_start().starts_with('#') && !header.trim().is_empty() {
                break;
            }
        }
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 7 {
            return Err(Error::Parse(format!(
                "field dump: expected 7 header fields, got {}",
                parts.len()
            )));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("field dump header: {e}")))
        };
        let x1_min = num(parts[0])?;
        let x2_min = num(parts[2])?;
        let n1: usize = parts[4]
            .parse()
            .map_err(|e| Error::Parse(format!("field dump n1: {e}")))?;
        let n2: usize = parts[5]
            .parse()
            .map_err(|e| Error::Parse(format!("field dump n2: {e}")))?;
        let h = num(parts[6])?;
        let grid = GridSpec::new(x1_min, x2_min, h, n1, n2)?;
        let mut data = Vec::with_capacity(grid.cells());
        let mut line = String::new();
        while data.len() < grid.cells() {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Parse("field dump: truncated values".into()));
            }
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("field dump value: {e}")))?,
                );
            }
        }
        ScalarField::from_data(grid, data)
    }
}

/// Nonnegative vorticity density on a grid, with mass and support
/// diagnostics.
#[derive(Debug, Clone)]
pub struct VorticityField {
    field: ScalarField,
}

impl VorticityField {
    pub fn new(field: ScalarField) -> Result<Self> {
        if field.data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Admissibility(
                "vorticity must be finite and nonnegative".into(),
            ));
        }
        Ok(VorticityField { field })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        VorticityField {
            field: ScalarField::zeros(grid),
        }
    }

    /// Take ownership of data known to be nonnegative (solver internals).
    pub(crate) fn from_nonneg(field: ScalarField) -> Self {
        debug_assert!(field.data.iter().all(|v| *v >= 0.0));
        VorticityField { field }
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }

    pub fn grid(&self) -> &GridSpec {
        self.field.grid()
    }

    pub fn data(&self) -> &[f64] {
        self.field.data()
    }

    pub fn mass(&self) -> f64 {
        self.grid().cell_area() * self.field.data.iter().sum::<f64>()
    }

    /// Mass-weighted mean position; the grid origin if the field vanishes.
    pub fn centroid(&self) -> [f64; 2] {
        let g = self.grid().clone();
        let mut m = 0.0;
        let mut c1 = 0.0;
        let mut c2 = 0.0;
        for j in 0..g.n2() {
            let x2 = g.x2(j);
            for i in 0..g.n1() {
                let v = self.field.get(i, j);
                if v > 0.0 {
                    m += v;
                    c1 += v * g.x1(i);
                    c2 += v * x2;
                }
            }
        }
        if m == 0.0 {
            [g.x1_min(), g.x2_min()]
        } else {
            [c1 / m, c2 / m]
        }
    }

    /// Centers of strictly positive cells.
    pub fn support_cells(&self) -> Vec<[f64; 2]> {
        let g = self.grid();
        let mut pts = Vec::new();
        for j in 0..g.n2() {
            for i in 0..g.n1() {
                if self.field.get(i, j) > 0.0 {
                    pts.push([g.x1(i), g.x2(j)]);
                }
            }
        }
        pts
    }

    /// Diameter of the support (max pairwise distance of positive cell
    /// centers, plus one cell to account for cell extent). Zero if empty.
    pub fn support_diameter(&self) -> f64 {
        let pts = self.support_cells();
        if pts.is_empty() {
            return 0.0;
        }
        let mut d2 = 0.0f64;
        for (k, a) in pts.iter().enumerate() {
            for b in &pts[k + 1..] {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                d2 = d2.max(dx * dx + dy * dy);
            }
        }
        d2.sqrt() + self.grid().h()
    }

    /// Rescale values so the total mass is exactly `kappa`.
    pub fn scale_to_mass(&mut self, kappa: f64) -> Result<()> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(Error::Admissibility(
                "cannot normalize a vanishing field".into(),
            ));
        }
        let s = kappa / m;
        for v in self.field.data.iter_mut() {
            *v *= s;
        }
        Ok(())
    }
}
