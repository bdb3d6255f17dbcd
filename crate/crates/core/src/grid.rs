//! Cartesian node grids carrying sampled values, with CSV/JSON serialization.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{Density, DensityKind};
use crate::domain::{DomainSpec, Rect};
use crate::error::{MetricError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    Boundary,
    Outside,
}

/// Nodes `(x_min + i h, y_min + j h)`, `0 <= i < nx`, `0 <= j < ny`, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    x_min: f64,
    y_min: f64,
    spacing: f64,
    nx: usize,
    ny: usize,
    mask: Vec<NodeKind>,
    values: Vec<f64>,
}

/// JSON header accompanying a grid CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub bbox: Rect,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    /// Run-length encoded mask in row-major node order.
    pub mask: Vec<(NodeKind, usize)>,
}

impl Grid {
    /// A grid with every node outside and all values zero.
    pub fn new(x_min: f64, y_min: f64, spacing: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(MetricError::InvalidParameters(format!(
                "grid spacing must be positive, got {spacing}"
            )));
        }
        if nx == 0 || ny == 0 {
            return Err(MetricError::InvalidParameters("grid has no nodes".into()));
        }
        Ok(Grid {
            x_min,
            y_min,
            spacing,
            nx,
            ny,
            mask: vec![NodeKind::Outside; nx * ny],
            values: vec![0.0; nx * ny],
        })
    }

    /// Nodes covering `bbox` with spacing `h`; the lower-left corner is a node.
    pub fn over_rect(bbox: Rect, h: f64) -> Result<Self> {
        let nx = ((bbox.x_max - bbox.x_min) / h).round() as usize + 1;
        let ny = ((bbox.y_max - bbox.y_min) / h).round() as usize + 1;
        Grid::new(bbox.x_min, bbox.y_min, h, nx, ny)
    }

    /// A grid over the domain's bounding box with nodes symmetric about its
    /// center, masked by distance to the boundary: interior beyond one
    /// spacing, boundary within one spacing, outside otherwise. Nodes within
    /// one spacing of a puncture are outside.
    pub fn for_domain(domain: &DomainSpec, h: f64) -> Result<Self> {
        let bbox = domain.bounding_box().ok_or_else(|| {
            MetricError::UnsupportedDomain("grids need a bounded domain".into())
        })?;
        let cx = 0.5 * (bbox.x_min + bbox.x_max);
        let cy = 0.5 * (bbox.y_min + bbox.y_max);
        let kx = ((bbox.x_max - cx) / h).ceil();
        let ky = ((bbox.y_max - cy) / h).ceil();
        let mut grid = Grid::new(
            cx - kx * h,
            cy - ky * h,
            h,
            2 * kx as usize + 1,
            2 * ky as usize + 1,
        )?;
        grid.mask_by_domain(domain);
        Ok(grid)
    }

    /// Recomputes the mask from `domain` as in [`Grid::for_domain`].
    pub fn mask_by_domain(&mut self, domain: &DomainSpec) {
        let h = self.spacing;
        let punctures = domain.punctures();
        for j in 0..self.ny {
            for i in 0..self.nx {
                let z = self.point(i, j);
                let near_puncture = punctures.iter().any(|p| (z - p).norm() <= h);
                let kind = if !domain.contains(z) || near_puncture {
                    NodeKind::Outside
                } else if domain.boundary_distance(z) > h {
                    NodeKind::Interior
                } else {
                    NodeKind::Boundary
                };
                let k = self.index(i, j);
                self.mask[k] = kind;
            }
        }
    }

    /// Samples `d` on all non-outside nodes of a grid masked by `d`'s domain.
    /// Nodes where evaluation fails are masked outside.
    pub fn sample(d: &Density, h: f64) -> Result<Self> {
        let mut grid = Grid::for_domain(d.domain(), h)?;
        for k in 0..grid.mask.len() {
            if grid.mask[k] == NodeKind::Outside {
                continue;
            }
            let (i, j) = (k % grid.nx, k / grid.nx);
            match d.eval(grid.point(i, j)) {
                Ok(v) => grid.values[k] = v,
                Err(_) => grid.mask[k] = NodeKind::Outside,
            }
        }
        Ok(grid)
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn bbox(&self) -> Rect {
        Rect::new(
            self.x_min,
            self.y_min,
            self.x_min + (self.nx - 1) as f64 * self.spacing,
            self.y_min + (self.ny - 1) as f64 * self.spacing,
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn point(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(
            self.x_min + i as f64 * self.spacing,
            self.y_min + j as f64 * self.spacing,
        )
    }

    pub fn point_at(&self, k: usize) -> Complex64 {
        self.point(k % self.nx, k / self.nx)
    }

    pub fn kind(&self, i: usize, j: usize) -> NodeKind {
        self.mask[self.index(i, j)]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, kind: NodeKind, value: f64) {
        let k = self.index(i, j);
        self.mask[k] = kind;
        self.values[k] = value;
    }

    pub fn mask(&self) -> &[NodeKind] {
        &self.mask
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mask_mut(&mut self) -> &mut [NodeKind] {
        &mut self.mask
    }

    /// Whether `other` has the same node positions.
    pub fn same_layout(&self, other: &Grid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.spacing == other.spacing
            && self.x_min == other.x_min
            && self.y_min == other.y_min
    }

    /// Nearest node to `z`, if inside the grid rectangle.
    pub fn nearest_node(&self, z: Complex64) -> Option<(usize, usize)> {
        let fi = ((z.re - self.x_min) / self.spacing).round();
        let fj = ((z.im - self.y_min) / self.spacing).round();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    /// Bilinear interpolation from the four nodes of the cell containing `z`;
    /// all four must be inside or on the boundary.
    pub fn bilinear(&self, z: Complex64) -> Result<f64> {
        let fx = (z.re - self.x_min) / self.spacing;
        let fy = (z.im - self.y_min) / self.spacing;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (self.nx - 1) as f64 && fy <= (self.ny - 1) as f64) {
            return Err(MetricError::PointOutsideDomain(z));
        }
        let i = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let i1 = (i + 1).min(self.nx - 1);
        let j1 = (j + 1).min(self.ny - 1);
        let corners = [
            (i, j, (1.0 - tx) * (1.0 - ty)),
            (i1, j, tx * (1.0 - ty)),
            (i, j1, (1.0 - tx) * ty),
            (i1, j1, tx * ty),
        ];
        let mut acc = 0.0;
        for (ci, cj, w) in corners {
            if w == 0.0 {
                continue;
            }
            if self.kind(ci, cj) == NodeKind::Outside {
                return Err(MetricError::PointOutsideDomain(z));
            }
            acc += w * self.value(ci, cj);
        }
        Ok(acc)
    }

    /// The grid viewed as a density on `domain` (bilinear interpolation).
    pub fn into_density(self, domain: DomainSpec, label: impl Into<String>) -> Density {
        Density::new(domain, DensityKind::GridSampled, label, move |z| self.bilinear(z))
    }

    /// Largest `|self - other|` over nodes that are not outside in either grid.
    pub fn max_abs_diff(&self, other: &Grid) -> Result<f64> {
        if !self.same_layout(other) {
            return Err(MetricError::GridMismatch("layouts differ".into()));
        }
        Ok(self
            .mask
            .iter()
            .zip(&other.mask)
            .zip(self.values.iter().zip(&other.values))
            .filter(|((a, b), _)| **a != NodeKind::Outside && **b != NodeKind::Outside)
            .map(|(_, (x, y))| (x - y).abs())
            .fold(0.0, f64::max))
    }

    pub fn header(&self) -> GridHeader {
        let mut runs: Vec<(NodeKind, usize)> = vec![];
        for kind in &self.mask {
            match runs.last_mut() {
                Some((k, n)) if k == kind => *n += 1,
                _ => runs.push((*kind, 1)),
            }
        }
        GridHeader {
            bbox: self.bbox(),
            spacing: self.spacing,
            nx: self.nx,
            ny: self.ny,
            mask: runs,
        }
    }

    /// Writes `x,y,value` rows for every node that is not outside, in row-major order.
    /// Floats are printed with 17 significant digits, so values round-trip exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let mut buf = String::with_capacity(64 * self.len() + 16);
        buf.push_str("x,y,value\n");
        for (k, kind) in self.mask.iter().enumerate() {
            if *kind == NodeKind::Outside {
                continue;
            }
            let z = self.point_at(k);
            let _ = writeln!(buf, "{:.16e},{:.16e},{:.16e}", z.re, z.im, self.values[k]);
        }
        out.write_all(buf.as_bytes())?;
        Ok(())
    }

    pub fn write_header<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.header())?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// Rebuilds a grid from its JSON header and CSV rows.
    pub fn read<R1: std::io::Read, R2: BufRead>(header: R1, csv: R2) -> Result<Self> {
        let header: GridHeader = serde_json::from_reader(header)?;
        let mut grid = Grid::new(
            header.bbox.x_min,
            header.bbox.y_min,
            header.spacing,
            header.nx,
            header.ny,
        )?;
        let mut k = 0usize;
        for (kind, n) in &header.mask {
            if k + n > grid.mask.len() {
                return Err(MetricError::Parse("mask runs exceed node count".into()));
            }
            grid.mask[k..k + n].fill(*kind);
            k += n;
        }
        if k != grid.mask.len() {
            return Err(MetricError::Parse("mask runs do not cover the grid".into()));
        }
        let mut nodes = (0..grid.mask.len()).filter(|k| grid.mask[*k] != NodeKind::Outside);
        for (line_no, line) in csv.lines().enumerate() {
            let line = line?;
            if line_no == 0 && line.trim() == "x,y,value" {
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(MetricError::Parse(format!("line {}: expected 3 fields", line_no + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| MetricError::Parse(format!("line {}: {e}", line_no + 1)))
            };
            let (x, y, v) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
            let k = nodes
                .next()
                .ok_or_else(|| MetricError::Parse("more rows than active nodes".into()))?;
            let z = grid.point_at(k);
            if (z.re - x).abs() > 1e-9 * grid.spacing || (z.im - y).abs() > 1e-9 * grid.spacing {
                return Err(MetricError::GridMismatch(format!(
                    "row {} at ({x}, {y}) does not match node {z}",
                    line_no + 1
                )));
            }
            grid.values[k] = v;
        }
        if nodes.next().is_some() {
            return Err(MetricError::Parse("fewer rows than active nodes".into()));
        }
        Ok(grid)
    }
}
