//! Hyperbolic metrics of bounded domains with round holes by repeated disk
//! modifications: starting from an SK-metric, the metric on a disk `K` is
//! replaced by the curvature `-1` solution with the same boundary values
//! whenever that is larger.
//!
//! Values are stored as `log λ` on a grid and interpolated relative to a
//! smooth reference with the boundary behavior of `λ_G`, i.e.
//! `log λ = log reference + w` with `w` interpolated bicubically.

use std::sync::Arc;

use log::{debug, info};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::closed_forms::{radial_density_at, RadialMetricFamily};
use crate::density::{Density, DensityKind};
use crate::domain::{DomainSpec, RoundDisk};
use crate::error::{MetricError, Result};
use crate::green::{iterate, GreenOperator, HarmonicExtension, SolveOptions};
use crate::grid::{Grid, NodeKind};

/// `2r / (|z - c|^2 - r^2)`, the hyperbolic metric of the complement of the
/// closed disk `|z - c| <= r` in the Riemann sphere.
fn exterior_metric(hole: &RoundDisk, z: Complex64) -> f64 {
    let r = hole.radius;
    2.0 * r / ((z - hole.center).norm_sqr() - r * r)
}

/// An SK-metric on `G` below `λ_G`: the metric of the outer disk, raised to
/// the metric of the complement of each hole where that is larger.
///
/// Each term is the hyperbolic metric of a domain containing `G`, so the
/// maximum is an SK-metric bounded by `λ_G`; the hole terms make it blow up
/// at the inner boundary circles as `λ_G` does.
pub fn seed_sk_metric(domain: &DomainSpec) -> Result<Density> {
    domain.validate()?;
    let (outer, holes) = match domain {
        DomainSpec::Disk { .. } | DomainSpec::Annulus { .. } | DomainSpec::DiskMinusHoles { .. } => {
            domain.round_holes().expect("round domain")
        }
        _ => {
            return Err(MetricError::UnsupportedDomain(
                "seed metrics need a disk, an annulus or a disk with round holes".into(),
            ))
        }
    };
    let disk = radial_density_at(
        RadialMetricFamily::Disk {
            radius: outer.radius,
        },
        outer.center,
    )?;
    Ok(Density::new(domain.clone(), DensityKind::ClosedForm, "seed", move |z| {
        let base = disk.eval(z)?;
        Ok(holes
            .iter()
            .map(|hole| exterior_metric(hole, z))
            .fold(base, f64::max))
    }))
}

/// One disk of a cover, with the resolution of its unit-disk solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverDisk {
    pub center: Complex64,
    pub radius: f64,
    /// Nodes per unit radius of the disk solve.
    pub resolution: usize,
}

impl CoverDisk {
    pub fn disk(&self) -> RoundDisk {
        RoundDisk::new(self.center, self.radius)
    }

    fn overlaps(&self, other: &CoverDisk) -> bool {
        (self.center - other.center).norm() < self.radius + other.radius
    }
}

/// Fraction of the distance to the boundary used as cover radius.
pub const COVER_FRACTION: f64 = 0.4;

/// Disks compactly contained in `G` whose union covers every interior node
/// of the grid of the given spacing, and whose overlap graph is connected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiskCover {
    pub spacing: f64,
    pub disks: Vec<CoverDisk>,
}

fn resolution_for(radius: f64, spacing: f64) -> usize {
    let cells = radius / spacing;
    if cells >= 24.0 {
        24
    } else if cells >= 16.0 {
        16
    } else {
        8
    }
}

impl DiskCover {
    /// Greedy placement: interior nodes are visited by decreasing distance to
    /// the boundary, and every node not yet covered becomes the center of a
    /// disk of radius `fraction * distance`, but at least `0.75 * spacing`
    /// (capped at `0.9 * distance`).
    pub fn greedy(domain: &DomainSpec, spacing: f64, fraction: f64) -> Result<DiskCover> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(MetricError::InvalidParameters(format!(
                "cover fraction must lie in (0, 1), got {fraction}"
            )));
        }
        let grid = Grid::for_domain(domain, spacing)?;
        let mut order: Vec<(usize, f64)> = (0..grid.len())
            .filter(|&k| grid.mask()[k] == NodeKind::Interior)
            .map(|k| (k, domain.boundary_distance(grid.point_at(k))))
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut covered = vec![false; grid.len()];
        let mut disks = vec![];
        for (k, dist) in order {
            if covered[k] {
                continue;
            }
            let center = grid.point_at(k);
            // near the boundary the disks are widened so that neighbors overlap
            let radius = (fraction * dist).max((0.75 * spacing).min(0.9 * dist));
            let (i0, j0) = (k % grid.nx(), k / grid.nx());
            let reach = (radius / spacing).ceil() as usize;
            for j in j0.saturating_sub(reach)..=(j0 + reach).min(grid.ny() - 1) {
                for i in i0.saturating_sub(reach)..=(i0 + reach).min(grid.nx() - 1) {
                    if (grid.point(i, j) - center).norm() < radius {
                        covered[grid.index(i, j)] = true;
                    }
                }
            }
            covered[k] = true;
            disks.push(CoverDisk {
                center,
                radius,
                resolution: resolution_for(radius, spacing),
            });
        }
        let cover = DiskCover { spacing, disks };
        cover.validate(domain)?;
        Ok(cover)
    }

    /// Checks that every closed disk lies in `G` and that the overlap graph
    /// is connected.
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        if self.disks.is_empty() {
            return Err(MetricError::InvalidParameters("empty cover".into()));
        }
        for d in &self.disks {
            if !(d.radius > 0.0) || domain.boundary_distance(d.center) <= d.radius {
                return Err(MetricError::DiskNotCompactlyContained(format!(
                    "center {}, radius {}",
                    d.center, d.radius
                )));
            }
        }
        if !self.is_connected() {
            return Err(MetricError::InvalidParameters(
                "cover disks do not form a connected chain".into(),
            ));
        }
        Ok(())
    }

    fn is_connected(&self) -> bool {
        // breadth-first search over a bucket grid of disk centers
        let n = self.disks.len();
        let max_r = self.disks.iter().map(|d| d.radius).fold(0.0, f64::max);
        let cell = 2.0 * max_r;
        let key = |z: Complex64| ((z.re / cell).floor() as i64, (z.im / cell).floor() as i64);
        let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> = Default::default();
        for (k, d) in self.disks.iter().enumerate() {
            buckets.entry(key(d.center)).or_default().push(k);
        }
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::from([0]);
        seen[0] = true;
        while let Some(k) = queue.pop_front() {
            let (bx, by) = key(self.disks[k].center);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for &other in buckets.get(&(bx + dx, by + dy)).into_iter().flatten() {
                        if !seen[other] && self.disks[k].overlaps(&self.disks[other]) {
                            seen[other] = true;
                            queue.push_back(other);
                        }
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

type Reference = Arc<dyn Fn(Complex64) -> f64 + Send + Sync>;

/// `log λ` of the hyperbolic metrics of the outer disk and of the complement
/// of each hole: exact curvature `-1` solutions on every cover disk.
fn comparison_metrics(domain: &DomainSpec) -> Vec<Reference> {
    let Some((outer, holes)) = domain.round_holes() else {
        return vec![];
    };
    let mut out: Vec<Reference> = vec![Arc::new(move |z| {
        let r = outer.radius;
        (2.0 * r / (r * r - (z - outer.center).norm_sqr())).ln()
    })];
    for hole in holes {
        out.push(Arc::new(move |z| exterior_metric(&hole, z).ln()));
    }
    out
}

/// `log` of the sum of the outer-disk and hole-complement metrics: smooth in
/// `G` with the same blow-up at `∂G` as `λ_G`, unlike the seed, whose
/// maximum has kinks.
fn interpolation_reference(domain: &DomainSpec, seed: &Density) -> Reference {
    match domain.round_holes() {
        Some((outer, holes)) => Arc::new(move |z| {
            let r = outer.radius;
            let base = 2.0 * r / (r * r - (z - outer.center).norm_sqr());
            holes
                .iter()
                .map(|hole| exterior_metric(hole, z))
                .fold(base, |a, b| a + b)
                .ln()
        }),
        None => {
            let seed = seed.clone();
            Arc::new(move |z| seed.log_eval(z).unwrap_or(f64::NAN))
        }
    }
}

/// `log λ` on a grid over `G`, stored together with the seed it refines.
///
/// Boundary nodes (within one spacing of `∂G`) keep the seed value.
#[derive(Clone)]
pub struct GridMetric {
    seed: Density,
    reference: Reference,
    comparisons: Vec<Reference>,
    log: Grid,
    /// `log λ - reference` at every active node.
    correction: Vec<f64>,
}

impl std::fmt::Debug for GridMetric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridMetric")
            .field("seed", &self.seed)
            .field("log", &self.log)
            .finish()
    }
}

impl GridMetric {
    /// The seed itself sampled at the nodes of `G`'s grid.
    pub fn from_seed(seed: Density, spacing: f64) -> Result<Self> {
        let mut log = Grid::for_domain(seed.domain(), spacing)?;
        let reference = interpolation_reference(seed.domain(), &seed);
        let mut correction = vec![0.0; log.len()];
        for k in 0..log.len() {
            if log.mask()[k] != NodeKind::Outside {
                let z = log.point_at(k);
                let v = seed.log_eval(z)?;
                log.values_mut()[k] = v;
                correction[k] = v - reference(z);
            }
        }
        let comparisons = comparison_metrics(seed.domain());
        Ok(GridMetric {
            seed,
            reference,
            comparisons,
            log,
            correction,
        })
    }

    /// Replaces the node values; they must use the layout of `G`'s grid.
    pub fn with_log_values(mut self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.log.len() {
            return Err(MetricError::GridMismatch("node value count".into()));
        }
        for k in 0..values.len() {
            if self.log.mask()[k] != NodeKind::Outside {
                let shift = values[k] - self.log.values()[k];
                self.log.values_mut()[k] = values[k];
                self.correction[k] += shift;
            }
        }
        Ok(self)
    }

    pub fn domain(&self) -> &DomainSpec {
        self.seed.domain()
    }

    pub fn seed(&self) -> &Density {
        &self.seed
    }

    pub fn log_grid(&self) -> &Grid {
        &self.log
    }

    /// `log λ(z)` with the seed-relative interpolation: bicubic where the
    /// 4x4 stencil is active, otherwise bilinear with outside corners dropped
    /// and the remaining weights renormalized.
    pub fn log_value(&self, z: Complex64) -> Result<f64> {
        if !self.domain().contains(z) {
            return Err(MetricError::PointOutsideDomain(z));
        }
        let base = (self.reference)(z);
        let g = &self.log;
        let h = g.spacing();
        let origin = g.point(0, 0);
        let fx = (z.re - origin.re) / h;
        let fy = (z.im - origin.im) / h;
        if !(fx >= 0.0 && fy >= 0.0 && fx <= (g.nx() - 1) as f64 && fy <= (g.ny() - 1) as f64) {
            return Err(MetricError::PointOutsideDomain(z));
        }
        let i = (fx.floor() as usize).min(g.nx() - 2);
        let j = (fy.floor() as usize).min(g.ny() - 2);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        let active = |a: usize, b: usize| g.kind(a, b) != NodeKind::Outside;
        if i >= 1
            && j >= 1
            && i + 2 < g.nx()
            && j + 2 < g.ny()
            && (i - 1..=i + 2).all(|a| (j - 1..=j + 2).all(|b| active(a, b)))
        {
            let (wx, wy) = (cubic_weights(tx), cubic_weights(ty));
            let mut acc = 0.0;
            for (dj, cy) in wy.iter().enumerate() {
                for (di, cx) in wx.iter().enumerate() {
                    acc += cx * cy * self.correction[g.index(i - 1 + di, j - 1 + dj)];
                }
            }
            return Ok(base + acc);
        }
        let mut acc = 0.0;
        let mut total = 0.0;
        for (ci, cj, w) in [
            (i, j, (1.0 - tx) * (1.0 - ty)),
            (i + 1, j, tx * (1.0 - ty)),
            (i, j + 1, (1.0 - tx) * ty),
            (i + 1, j + 1, tx * ty),
        ] {
            if active(ci, cj) {
                acc += w * self.correction[g.index(ci, cj)];
                total += w;
            }
        }
        if total <= 1e-12 {
            return Err(MetricError::PointOutsideDomain(z));
        }
        Ok(base + acc / total)
    }

    /// `λ = exp(log λ)` as a grid-sampled density.
    pub fn density(&self) -> Density {
        let me = self.clone();
        Density::new(
            self.domain().clone(),
            DensityKind::GridSampled,
            "perron",
            move |z| Ok(me.log_value(z)?.exp()),
        )
    }

    fn raise(&mut self, k: usize, value: f64) -> f64 {
        let old = self.log.values()[k];
        if value > old {
            self.log.values_mut()[k] = value;
            self.correction[k] += value - old;
            value - old
        } else {
            0.0
        }
    }

    /// Curvature `-Δ_h log λ / λ^2` by the five-point Laplacian at interior
    /// nodes at least `margin` spacings from `∂G`; returns `max |κ + 1|`.
    pub fn curvature_deviation(&self, margin: f64) -> f64 {
        let g = &self.log;
        let h = g.spacing();
        let mut worst: f64 = 0.0;
        for j in 1..g.ny() - 1 {
            for i in 1..g.nx() - 1 {
                let z = g.point(i, j);
                if g.kind(i, j) != NodeKind::Interior || self.domain().boundary_distance(z) < margin * h {
                    continue;
                }
                let lap = (g.value(i + 1, j) + g.value(i - 1, j) + g.value(i, j + 1) + g.value(i, j - 1)
                    - 4.0 * g.value(i, j))
                    / (h * h);
                let kappa = -lap / (2.0 * g.value(i, j)).exp();
                worst = worst.max((kappa + 1.0).abs());
            }
        }
        worst
    }
}

/// Settings of the disk solves inside [`modify_on_disk`] and [`perron_solve`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModifyOptions {
    /// Residual tolerance of each disk solve.
    pub solver_tol: f64,
    pub solver_max_iter: usize,
}

impl Default for ModifyOptions {
    fn default() -> Self {
        ModifyOptions {
            solver_tol: 1e-10,
            solver_max_iter: 500,
        }
    }
}

/// The discrete solve on a cover disk with boundary data from an exact
/// solution; its nodewise error estimates the discretization error of solves
/// with nearby data.
struct Comparison {
    ext: HarmonicExtension,
    q: Vec<f64>,
    /// Discrete minus exact solution at the disk nodes.
    error: Vec<f64>,
    /// The exact solution in unit-disk coordinates.
    exact: Box<dyn Fn(Complex64) -> f64 + Send + Sync>,
}

/// A solved disk: `log λ(z) = u(w) - log ρ` with `w = (z - c)/ρ` and
/// `u = H - P`, `H` the harmonic extension of the boundary data and `P` the
/// potential, corrected by the comparison solve.
struct DiskPatch {
    op: Arc<GreenOperator>,
    ext: HarmonicExtension,
    u: Vec<f64>,
    /// `e^{2u}` minus its comparison value.
    q_diff: Vec<f64>,
    comparison: Option<Arc<Comparison>>,
    /// Corrected solution on the `(2n+1)^2` square of unit-disk nodes, zero
    /// outside the disk.
    square: Vec<f64>,
    /// Whether the 4x4 stencil of the cell with lower-left node `(a, b)` lies
    /// inside the disk.
    cubic_ok: Vec<bool>,
    n: usize,
}

impl DiskPatch {
    fn log_value(&self, w: Complex64) -> Result<f64> {
        let n = self.n as f64;
        let side = 2 * self.n + 1;
        let fx = (w.re + 1.0) * n;
        let fy = (w.im + 1.0) * n;
        let i = fx.floor() as i64;
        let j = fy.floor() as i64;
        let stencil_inside = i >= 1
            && j >= 1
            && (i as usize) + 2 < side
            && (j as usize) + 2 < side
            && self.cubic_ok[j as usize * side + i as usize];
        if !stencil_inside {
            let direct = self.ext.eval(w) - self.op.potential_at(w, &self.q_diff)?;
            return Ok(match &self.comparison {
                Some(c) => direct - c.ext.eval(w) + (c.exact)(w),
                None => direct,
            });
        }
        let (wx, wy) = (cubic_weights(fx - i as f64), cubic_weights(fy - j as f64));
        let mut acc = 0.0;
        for (dj, cy) in wy.iter().enumerate() {
            let b = (j - 1) as usize + dj;
            for (di, cx) in wx.iter().enumerate() {
                acc += cx * cy * self.square[b * side + (i - 1) as usize + di];
            }
        }
        Ok(acc)
    }
}

/// Lagrange weights of the nodes `-1, 0, 1, 2` at `t` in `[0, 1]`.
fn cubic_weights(t: f64) -> [f64; 4] {
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

fn boundary_sample_count(radius: f64, spacing: f64) -> usize {
    // about four samples per grid spacing of arc
    let wanted = 8.0 * std::f64::consts::PI * radius / spacing;
    (wanted.ceil() as usize).next_power_of_two().clamp(32, 2048)
}

fn boundary_samples(metric: &GridMetric, disk: &CoverDisk) -> Result<Vec<f64>> {
    let n = boundary_sample_count(disk.radius, metric.log.spacing());
    let log_r = disk.radius.ln();
    (0..n)
        .map(|k| {
            let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            Ok(metric.log_value(disk.center + Complex64::from_polar(disk.radius, t))? + log_r)
        })
        .collect()
}

fn disk_solve_options(spacing: f64, opts: &ModifyOptions, warm: Option<Vec<f64>>) -> SolveOptions {
    let mut solve = SolveOptions::new(spacing, opts.solver_tol, opts.solver_max_iter);
    solve.omega = None;
    solve.track_envelopes = false;
    solve.initial = warm;
    solve
}

/// The harmonic extension at the nodes of the disk solve.
fn interior_values(op: &GreenOperator, ext: &HarmonicExtension) -> Vec<f64> {
    let reach = op.points().iter().map(|w| w.norm()).fold(0.0, f64::max);
    let ext = ext.truncated(reach, 1e-17);
    op.points().iter().map(|w| ext.eval(*w)).collect()
}

/// Solves the cover disk with boundary data from the comparison metric that
/// is largest at its center.
fn comparison_solve(
    metric: &GridMetric,
    disk: &CoverDisk,
    n_samples: usize,
    opts: &ModifyOptions,
) -> Result<Option<Arc<Comparison>>> {
    let Some(piece) = metric
        .comparisons
        .iter()
        .max_by(|a, b| a(disk.center).total_cmp(&b(disk.center)))
        .cloned()
    else {
        return Ok(None);
    };
    let (center, radius) = (disk.center, disk.radius);
    let exact = move |w: Complex64| piece(center + radius * w) + radius.ln();
    let samples: Vec<f64> = (0..n_samples)
        .map(|k| exact(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64)))
        .collect();
    let spacing = 1.0 / disk.resolution as f64;
    let op = GreenOperator::cached(spacing)?;
    let ext = HarmonicExtension::from_samples(&samples);
    let h = interior_values(&op, &ext);
    let (u, _, _) = iterate(&op, &h, &disk_solve_options(spacing, opts, None))?;
    let error = op.points().iter().zip(&u).map(|(w, v)| v - exact(*w)).collect();
    Ok(Some(Arc::new(Comparison {
        ext,
        q: u.iter().map(|v| (2.0 * v).exp()).collect(),
        error,
        exact: Box::new(exact),
    })))
}

fn solve_patch(
    samples: &[f64],
    disk: &CoverDisk,
    warm: Option<Vec<f64>>,
    comparison: Option<Arc<Comparison>>,
    opts: &ModifyOptions,
) -> Result<DiskPatch> {
    let spacing = 1.0 / disk.resolution as f64;
    let op = GreenOperator::cached(spacing)?;
    let ext = HarmonicExtension::from_samples(samples);
    let h = interior_values(&op, &ext);
    let (u, _, report) = iterate(&op, &h, &disk_solve_options(spacing, opts, warm))?;
    if !report.converged {
        debug!(
            "disk solve at {} stopped with residual {:.3e}",
            disk.center, report.final_residual
        );
    }
    let mut q_diff: Vec<f64> = u.iter().map(|v| (2.0 * v).exp()).collect();
    if let Some(c) = &comparison {
        for (a, b) in q_diff.iter_mut().zip(&c.q) {
            *a -= b;
        }
    }
    let n = disk.resolution;
    let side = 2 * n + 1;
    let mut square = vec![0.0; side * side];
    for (k, w) in op.points().iter().enumerate() {
        let a = (w.re * n as f64).round() as i64 + n as i64;
        let b = (w.im * n as f64).round() as i64 + n as i64;
        let corrected = u[k] - comparison.as_ref().map_or(0.0, |c| c.error[k]);
        square[b as usize * side + a as usize] = corrected;
    }
    let inside = |a: usize, b: usize| {
        let (x, y) = (a as f64 / n as f64 - 1.0, b as f64 / n as f64 - 1.0);
        x * x + y * y < 1.0
    };
    let mut cubic_ok = vec![false; side * side];
    for b in 1..side.saturating_sub(2) {
        for a in 1..side - 2 {
            cubic_ok[b * side + a] = (a - 1..=a + 2).all(|x| (b - 1..=b + 2).all(|y| inside(x, y)));
        }
    }
    Ok(DiskPatch {
        op,
        ext,
        u,
        q_diff,
        comparison,
        square,
        cubic_ok,
        n,
    })
}

/// Raises the interior nodes inside the disk to the patch values; returns
/// the largest increase.
fn apply_patch(metric: &mut GridMetric, disk: &CoverDisk, patch: &DiskPatch) -> Result<f64> {
    let h = metric.log.spacing();
    let origin = metric.log.point(0, 0);
    let lo_i = ((disk.center.re - disk.radius - origin.re) / h).floor().max(0.0) as usize;
    let hi_i = (((disk.center.re + disk.radius - origin.re) / h).ceil() as usize).min(metric.log.nx() - 1);
    let lo_j = ((disk.center.im - disk.radius - origin.im) / h).floor().max(0.0) as usize;
    let hi_j = (((disk.center.im + disk.radius - origin.im) / h).ceil() as usize).min(metric.log.ny() - 1);
    let log_r = disk.radius.ln();
    let mut increase: f64 = 0.0;
    for j in lo_j..=hi_j {
        for i in lo_i..=hi_i {
            if metric.log.kind(i, j) != NodeKind::Interior {
                continue;
            }
            let w = (metric.log.point(i, j) - disk.center) / disk.radius;
            if w.norm() >= 1.0 {
                continue;
            }
            let value = patch.log_value(w)? - log_r;
            let k = metric.log.index(i, j);
            increase = increase.max(metric.raise(k, value));
        }
    }
    Ok(increase)
}

/// The modification `M_K λ`: solves the curvature `-1` Dirichlet problem on
/// `K` with boundary values `log λ` and keeps the larger of solution and
/// `λ` at the interior nodes inside `K`.
pub fn modify_on_disk(metric: &GridMetric, disk: &CoverDisk, opts: &ModifyOptions) -> Result<GridMetric> {
    if metric.domain().boundary_distance(disk.center) <= disk.radius || !(disk.radius > 0.0) {
        return Err(MetricError::DiskNotCompactlyContained(format!("center {}, radius {}", disk.center, disk.radius)));
    }
    let samples = boundary_samples(metric, disk)?;
    let comparison = comparison_solve(metric, disk, samples.len(), opts)?;
    let patch = solve_patch(&samples, disk, None, comparison, opts)?;
    let mut out = metric.clone();
    apply_patch(&mut out, disk, &patch)?;
    Ok(out)
}

/// Sweep history of a Perron run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerronState {
    #[serde(skip)]
    pub current: Option<GridMetric>,
    pub sweep_count: usize,
    /// Largest increase of `log λ` over the nodes in each sweep.
    pub max_increase: Vec<f64>,
    /// Smallest node change in each sweep; never negative.
    pub min_change: Vec<f64>,
    /// Disk solves performed in each sweep (unchanged disks are skipped).
    pub solves: Vec<usize>,
    pub converged: bool,
    pub disks: usize,
    #[serde(skip)]
    pub snapshots: Vec<Grid>,
}

impl PerronState {
    /// Whether every node was nondecreasing in every sweep.
    pub fn is_monotone(&self) -> bool {
        self.min_change.iter().all(|m| *m >= 0.0)
    }
}

/// Settings of [`perron_solve_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerronOptions {
    pub tol: f64,
    pub max_sweeps: usize,
    pub modify: ModifyOptions,
    pub keep_snapshots: bool,
}

impl PerronOptions {
    pub fn new(tol: f64, max_sweeps: usize) -> Self {
        PerronOptions {
            tol,
            max_sweeps,
            modify: ModifyOptions::default(),
            keep_snapshots: false,
        }
    }
}

/// Cyclic sweeps of disk modifications over `cover`, starting from
/// [`seed_sk_metric`], until one sweep raises `log λ` by at most `tol`.
///
/// Running out of sweeps is not an error: the best metric is returned with
/// `converged = false`.
pub fn perron_solve(
    domain: &DomainSpec,
    cover: &DiskCover,
    tol: f64,
    max_sweeps: usize,
) -> Result<(Density, PerronState)> {
    perron_solve_with(domain, cover, &PerronOptions::new(tol, max_sweeps))
}

pub fn perron_solve_with(
    domain: &DomainSpec,
    cover: &DiskCover,
    opts: &PerronOptions,
) -> Result<(Density, PerronState)> {
    if !(opts.tol > 0.0) {
        return Err(MetricError::InvalidParameters(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    cover.validate(domain)?;
    let seed = seed_sk_metric(domain)?;
    let mut metric = GridMetric::from_seed(seed, cover.spacing)?;
    // data change below which a disk is not re-solved
    let skip = 1e-2 * opts.tol;
    let mut warm: Vec<Option<Vec<f64>>> = vec![None; cover.disks.len()];
    let mut last_samples: Vec<Option<Vec<f64>>> = vec![None; cover.disks.len()];
    let mut comparisons: Vec<Option<Arc<Comparison>>> = vec![None; cover.disks.len()];
    let mut state = PerronState {
        current: None,
        sweep_count: 0,
        max_increase: vec![],
        min_change: vec![],
        solves: vec![],
        converged: false,
        disks: cover.disks.len(),
        snapshots: vec![],
    };
    while state.sweep_count < opts.max_sweeps {
        let before = metric.log.values().to_vec();
        let mut solves = 0;
        // alternate the sweep direction, as in symmetric Gauss-Seidel
        let forward = state.sweep_count % 2 == 0;
        for step in 0..cover.disks.len() {
            let k = if forward { step } else { cover.disks.len() - 1 - step };
            let disk = &cover.disks[k];
            let samples = boundary_samples(&metric, disk)?;
            if let Some(prev) = &last_samples[k] {
                let change = prev
                    .iter()
                    .zip(&samples)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if change <= skip {
                    continue;
                }
            }
            if comparisons[k].is_none() {
                comparisons[k] = comparison_solve(&metric, disk, samples.len(), &opts.modify)?;
            }
            let patch = solve_patch(&samples, disk, warm[k].take(), comparisons[k].clone(), &opts.modify)?;
            apply_patch(&mut metric, disk, &patch)?;
            warm[k] = Some(patch.u);
            last_samples[k] = Some(samples);
            solves += 1;
        }
        let (mut inc, mut min_change) = (0.0f64, f64::INFINITY);
        for (a, b) in before.iter().zip(metric.log.values()) {
            inc = inc.max(b - a);
            min_change = min_change.min(b - a);
        }
        state.sweep_count += 1;
        state.max_increase.push(inc);
        state.min_change.push(min_change);
        state.solves.push(solves);
        if opts.keep_snapshots {
            state.snapshots.push(metric.log.clone());
        }
        info!(
            "sweep {}: max increase {inc:.3e}, {solves} disk solves",
            state.sweep_count
        );
        if inc <= opts.tol {
            state.converged = true;
            break;
        }
    }
    let density = metric.density();
    state.current = Some(metric);
    Ok((density, state))
}
