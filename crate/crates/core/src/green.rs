//! Dirichlet problem `Δu = e^{2u}` on the unit disk via the Green operator
//!
//! `T[u](z) = h(z) - (1/2π) ∬_D g(z, ζ) e^{2u(ζ)} dm(ζ)`,
//!
//! where `h` is the harmonic extension of the boundary data and `g` the
//! Green's function of the disk. Solutions are the fixed points of `T`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{MetricError, Result};
use crate::grid::{Grid, NodeKind};

/// `g(z, ζ) = log(|1 - conj(ζ) z| / |z - ζ|)` for `z != ζ` in the unit disk.
pub fn green_function(z: Complex64, zeta: Complex64) -> Result<f64> {
    for p in [z, zeta] {
        if !(p.norm() < 1.0) {
            return Err(MetricError::PointOutsideDomain(p));
        }
    }
    if z == zeta {
        return Err(MetricError::CoincidentPoints(z));
    }
    Ok(((1.0 - zeta.conj() * z).norm() / (z - zeta).norm()).ln())
}

/// Default number of boundary samples used for the harmonic extension.
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 2048;

/// Boundary values `ψ(t)` of `u = log λ` on the unit circle, `t ∈ [0, 2π)`.
#[derive(Clone)]
pub enum BoundaryData {
    Rule(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    /// Uniform samples at `t_j = 2πj/N`, interpolated trigonometrically.
    Samples {
        values: Arc<Vec<f64>>,
        interpolant: Arc<HarmonicExtension>,
    },
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryData::Rule(_) => f.write_str("BoundaryData::Rule"),
            BoundaryData::Samples { values, .. } => {
                write!(f, "BoundaryData::Samples({} values)", values.len())
            }
        }
    }
}

impl BoundaryData {
    pub fn from_fn(rule: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        BoundaryData::Rule(Arc::new(rule))
    }

    pub fn constant(value: f64) -> Self {
        BoundaryData::from_fn(move |_| value)
    }

    pub fn from_samples(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::InvalidParameters(
                "boundary samples must be finite and non-empty".into(),
            ));
        }
        let interpolant = Arc::new(HarmonicExtension::from_samples(&values));
        Ok(BoundaryData::Samples {
            values: Arc::new(values),
            interpolant,
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            BoundaryData::Rule(rule) => rule(t),
            BoundaryData::Samples { interpolant, .. } => {
                interpolant.eval(Complex64::from_polar(1.0, t))
            }
        }
    }

    /// Values at `t_j = 2πj/n`.
    pub fn sample(&self, n: usize) -> Result<Vec<f64>> {
        if let BoundaryData::Samples { values, .. } = self {
            if values.len() == n {
                return Ok(values.as_ref().clone());
            }
        }
        let out: Vec<f64> = (0..n).map(|j| self.value(2.0 * PI * j as f64 / n as f64)).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::InvalidParameters("non-finite boundary value".into()));
        }
        Ok(out)
    }
}

/// Harmonic function `Re(c_0 + 2 Σ_{k≥1} c_k z^k)` built from the discrete
/// Fourier coefficients of boundary samples.
///
/// This is the Poisson integral of the trigonometric interpolant of the
/// samples, so it is accurate uniformly up to the circle for smooth data.
#[derive(Debug, Clone)]
pub struct HarmonicExtension {
    coeffs: Vec<Complex64>,
}

impl HarmonicExtension {
    pub fn new(psi: &BoundaryData, n_samples: usize) -> Result<Self> {
        if n_samples == 0 {
            return Err(MetricError::InvalidParameters("need boundary samples".into()));
        }
        Ok(HarmonicExtension::from_samples(&psi.sample(n_samples)?))
    }

    /// From values at the angles `2πk/n`, `k = 0..n`.
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let half = n / 2;
        let mut coeffs: Vec<Complex64> = buf[..=half].iter().map(|c| c / n as f64).collect();
        if n % 2 == 0 && half > 0 {
            // the Nyquist mode is shared between k and -k
            coeffs[half] *= 0.5;
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        while coeffs.len() > 1 && coeffs[coeffs.len() - 1].norm() <= 1e-17 * scale {
            coeffs.pop();
        }
        HarmonicExtension { coeffs }
    }

    /// Mean of the boundary data, which is the value at the origin.
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// The series cut where `|c_k| radius^k` falls below `tol` times the
    /// largest coefficient; accurate to about that level on `|z| <= radius`.
    pub fn truncated(&self, radius: f64, tol: f64) -> HarmonicExtension {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut keep = 1;
        let mut power = 1.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(1) {
            power *= radius;
            if c.norm() * power > tol * scale {
                keep = k + 1;
            }
        }
        HarmonicExtension {
            coeffs: self.coeffs[..keep].to_vec(),
        }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for c in self.coeffs[1..].iter().rev() {
            acc = (acc + c) * z;
        }
        self.coeffs[0].re + 2.0 * acc.re
    }
}

/// Poisson integral of `ψ` at `z` (closed unit disk), from
/// [`DEFAULT_BOUNDARY_SAMPLES`] boundary samples.
pub fn harmonic_extension(psi: &BoundaryData, z: Complex64) -> Result<f64> {
    if !(z.norm() <= 1.0) {
        return Err(MetricError::PointOutsideDomain(z));
    }
    Ok(HarmonicExtension::new(psi, DEFAULT_BOUNDARY_SAMPLES)?.eval(z))
}

/// `∬ log|s| dm(s)` over the rectangle `[x1, x2] x [y1, y2]`.
fn rect_log_integral(x1: f64, x2: f64, y1: f64, y2: f64) -> f64 {
    fn antiderivative(x: f64, y: f64) -> f64 {
        let r2 = x * x + y * y;
        let mut acc = 0.0;
        if r2 > 0.0 {
            acc += x * y * (r2.ln() - 3.0);
        }
        if x != 0.0 {
            acc += x * x * (y / x).atan();
        }
        if y != 0.0 {
            acc += y * y * (x / y).atan();
        }
        0.5 * acc
    }
    antiderivative(x2, y2) - antiderivative(x1, y2) - antiderivative(x2, y1) + antiderivative(x1, y1)
}

/// `∬_cell log|z - ζ| dm(ζ)` for the square cell of side `h` centered at
/// `z - offset`: exact for the 3x3 patch, midpoint rule beyond.
fn cell_log_weight(offset: Complex64, h: f64) -> f64 {
    let (a, b) = (offset.re / h, offset.im / h);
    if a.abs() < 1.5 && b.abs() < 1.5 {
        rect_log_integral(
            offset.re - 0.5 * h,
            offset.re + 0.5 * h,
            offset.im - 0.5 * h,
            offset.im + 0.5 * h,
        )
    } else {
        h * h * offset.norm().ln()
    }
}

/// Fraction of the cell of side `h` centered at `c` lying in the unit disk.
fn cell_area_fraction(c: Complex64, h: f64) -> f64 {
    let far = c.norm() + h / std::f64::consts::SQRT_2;
    if far < 1.0 {
        return 1.0;
    }
    const SUB: usize = 32;
    let mut inside = 0usize;
    for p in 0..SUB {
        for q in 0..SUB {
            let s = c + Complex64::new(
                h * ((p as f64 + 0.5) / SUB as f64 - 0.5),
                h * ((q as f64 + 0.5) / SUB as f64 - 0.5),
            );
            if s.norm_sqr() < 1.0 {
                inside += 1;
            }
        }
    }
    inside as f64 / (SUB * SUB) as f64
}

/// Largest node count for which the operator is stored as a dense matrix.
pub const DENSE_LIMIT: usize = 3000;

/// Discretized area integral `w(z) = (1/2π) ∬ g(z, ζ) q(ζ) dm(ζ)` on the nodes
/// `(ih, jh)` strictly inside the unit disk.
///
/// Every node carries the square cell of side `h` around it, clipped to the
/// disk. The cell value of `q` is integrated against `log|z - ζ|` exactly on
/// the 3x3 patch around `z` and by the midpoint rule elsewhere; the smooth
/// image term `log|1 - conj(ζ) z|` uses the midpoint rule.
pub struct GreenOperator {
    spacing: f64,
    half_width: usize,
    nodes: Vec<(i64, i64)>,
    points: Vec<Complex64>,
    weights: Vec<f64>,
    kind: OperatorKind,
}

enum OperatorKind {
    Dense(Vec<f64>),
    Fast(Box<FastParts>),
}

struct FastParts {
    fft_size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kernel_hat: Vec<Complex64>,
    terms: usize,
    inner_sources: Vec<usize>,
    ring: Vec<usize>,
    eval_inner: Vec<usize>,
}

impl fmt::Debug for GreenOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GreenOperator")
            .field("spacing", &self.spacing)
            .field("nodes", &self.points.len())
            .field("dense", &matches!(self.kind, OperatorKind::Dense(_)))
            .finish()
    }
}

fn smooth_fft_size(min: usize) -> usize {
    let mut n = min.max(1);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

impl GreenOperator {
    /// Dense storage for small grids, FFT plus multipole-type series otherwise.
    pub fn new(spacing: f64) -> Result<Self> {
        let probe = GreenOperator::layout(spacing)?;
        GreenOperator::build(probe, None)
    }

    /// Forces the dense (`true`) or fast (`false`) representation.
    pub fn with_representation(spacing: f64, dense: bool) -> Result<Self> {
        GreenOperator::build(GreenOperator::layout(spacing)?, Some(dense))
    }

    /// Shared operator for `spacing`, built on first use.
    pub fn cached(spacing: f64) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<u64, Arc<GreenOperator>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(op) = cache.lock().expect("operator cache poisoned").get(&spacing.to_bits()) {
            return Ok(op.clone());
        }
        let op = Arc::new(GreenOperator::new(spacing)?);
        cache
            .lock()
            .expect("operator cache poisoned")
            .insert(spacing.to_bits(), op.clone());
        Ok(op)
    }

    fn layout(spacing: f64) -> Result<GreenOperator> {
        if !(spacing > 0.0 && spacing <= 0.5) {
            return Err(MetricError::InvalidParameters(format!(
                "disk grid spacing must lie in (0, 0.5], got {spacing}"
            )));
        }
        let n = (1.0 / spacing).ceil() as usize;
        if n > 4096 {
            return Err(MetricError::InvalidParameters(format!(
                "disk grid spacing {spacing} is too fine"
            )));
        }
        let template = Grid::for_domain(&DomainSpec::unit_disk(), spacing)?;
        let mut nodes = vec![];
        let mut points = vec![];
        for j in 0..template.ny() {
            for i in 0..template.nx() {
                if template.kind(i, j) != NodeKind::Outside {
                    nodes.push((i as i64 - n as i64, j as i64 - n as i64));
                    points.push(template.point(i, j));
                }
            }
        }
        let weights = points.iter().map(|c| cell_area_fraction(*c, spacing)).collect();
        Ok(GreenOperator {
            spacing,
            half_width: n,
            nodes,
            points,
            weights,
            kind: OperatorKind::Dense(vec![]),
        })
    }

    fn build(mut op: GreenOperator, dense: Option<bool>) -> Result<Self> {
        let use_dense = dense.unwrap_or(op.points.len() <= DENSE_LIMIT);
        op.kind = if use_dense {
            OperatorKind::Dense(op.dense_matrix())
        } else {
            OperatorKind::Fast(Box::new(op.fast_parts()))
        };
        Ok(op)
    }

    fn dense_matrix(&self) -> Vec<f64> {
        let h = self.spacing;
        let n = self.points.len();
        let mut matrix = vec![0.0; n * n];
        matrix.par_chunks_mut(n).enumerate().for_each(|(e, row)| {
            let z = self.points[e];
            for (s, entry) in row.iter_mut().enumerate() {
                let c = self.points[s];
                let image = h * h * (1.0 - c.conj() * z).norm().ln();
                *entry = self.weights[s] * (image - cell_log_weight(z - c, h)) / (2.0 * PI);
            }
        });
        matrix
    }

    fn fast_parts(&self) -> FastParts {
        let h = self.spacing;
        let n = self.half_width as i64;
        let m = smooth_fft_size(4 * self.half_width + 1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let mut kernel = vec![Complex64::new(0.0, 0.0); m * m];
        for b in -2 * n..=2 * n {
            for a in -2 * n..=2 * n {
                let offset = Complex64::new(a as f64 * h, b as f64 * h);
                let idx = wrap(b, m) * m + wrap(a, m);
                kernel[idx] = Complex64::new(cell_log_weight(offset, h), 0.0);
            }
        }
        fft2(&mut kernel, m, forward.as_ref());

        let delta = (0.94 * h.powf(2.0 / 3.0)).clamp(3.0 * h, 0.5);
        let rho = 1.0 - delta;
        let terms = ((1e-16f64).ln() / rho.ln()).ceil() as usize;
        let mut inner_sources = vec![];
        let mut ring = vec![];
        for (k, p) in self.points.iter().enumerate() {
            if p.norm() <= rho {
                inner_sources.push(k);
            } else {
                ring.push(k);
            }
        }
        let eval_inner = inner_sources.clone();
        FastParts {
            fft_size: m,
            forward,
            inverse,
            kernel_hat: kernel,
            terms,
            inner_sources,
            ring,
            eval_inner,
        }
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Active nodes in row-major order of the disk grid layout.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn is_dense(&self) -> bool {
        matches!(self.kind, OperatorKind::Dense(_))
    }

    /// `(1/2π) ∬ g(z_e, ζ) q(ζ) dm(ζ)` at every node `z_e`.
    pub fn potential(&self, q: &[f64]) -> Result<Vec<f64>> {
        if q.len() != self.points.len() {
            return Err(MetricError::GridMismatch(format!(
                "expected {} node values, got {}",
                self.points.len(),
                q.len()
            )));
        }
        Ok(match &self.kind {
            OperatorKind::Dense(matrix) => matrix
                .par_chunks(q.len())
                .with_min_len(64)
                .map(|row| dot(row, q))
                .collect(),
            OperatorKind::Fast(parts) => self.fast_potential(parts, q),
        })
    }

    fn fast_potential(&self, parts: &FastParts, q: &[f64]) -> Vec<f64> {
        let h = self.spacing;
        let m = parts.fft_size;
        let weighted: Vec<f64> = q.iter().zip(&self.weights).map(|(v, w)| v * w).collect();

        // free-space part: cyclic convolution with the cell kernel
        let mut grid = vec![Complex64::new(0.0, 0.0); m * m];
        for (k, (i, j)) in self.nodes.iter().enumerate() {
            grid[wrap(*j, m) * m + wrap(*i, m)] = Complex64::new(weighted[k], 0.0);
        }
        fft2(&mut grid, m, parts.forward.as_ref());
        for (g, k) in grid.iter_mut().zip(&parts.kernel_hat) {
            *g *= k;
        }
        fft2(&mut grid, m, parts.inverse.as_ref());
        let norm = 1.0 / (m * m) as f64;
        let free: Vec<f64> = self
            .nodes
            .iter()
            .map(|(i, j)| grid[wrap(*j, m) * m + wrap(*i, m)].re * norm)
            .collect();

        // image part: Σ_c m_c log|1 - conj(c) z| = -Re Σ_n z^n M_n / n
        let moments = |sources: &[usize]| -> Vec<Complex64> {
            let mut acc = vec![Complex64::new(0.0, 0.0); parts.terms + 1];
            for &s in sources {
                let c = self.points[s].conj();
                let mut power = Complex64::new(weighted[s] * h * h, 0.0);
                for slot in acc.iter_mut().skip(1) {
                    power *= c;
                    *slot += power;
                }
            }
            for (n, slot) in acc.iter_mut().enumerate().skip(1) {
                *slot /= n as f64;
            }
            acc
        };
        let inner = moments(&parts.inner_sources);
        let ring_moments = moments(&parts.ring);
        let all: Vec<Complex64> = inner.iter().zip(&ring_moments).map(|(a, b)| a + b).collect();
        let series = |coeffs: &[Complex64], z: Complex64| -> f64 {
            let mut acc = Complex64::new(0.0, 0.0);
            for c in coeffs[1..].iter().rev() {
                acc = (acc + c) * z;
            }
            -acc.re
        };
        let mut image = vec![0.0; self.points.len()];
        let inner_values: Vec<(usize, f64)> = parts
            .eval_inner
            .par_iter()
            .map(|&e| (e, series(&all, self.points[e])))
            .collect();
        for (e, v) in inner_values {
            image[e] = v;
        }
        let ring_values: Vec<(usize, f64)> = parts
            .ring
            .par_iter()
            .map(|&e| {
                let z = self.points[e];
                let mut v = series(&inner, z);
                for &s in &parts.ring {
                    let c = self.points[s];
                    v += weighted[s] * h * h * (1.0 - c.conj() * z).norm().ln();
                }
                (e, v)
            })
            .collect();
        for (e, v) in ring_values {
            image[e] = v;
        }
        image
            .iter()
            .zip(&free)
            .map(|(i, f)| (i - f) / (2.0 * PI))
            .collect()
    }

    /// The same discrete integral at an arbitrary point of the disk, by direct summation.
    pub fn potential_at(&self, z: Complex64, q: &[f64]) -> Result<f64> {
        if !(z.norm() < 1.0) {
            return Err(MetricError::PointOutsideDomain(z));
        }
        if q.len() != self.points.len() {
            return Err(MetricError::GridMismatch("node value count".into()));
        }
        let h = self.spacing;
        let near = 1.5 * h;
        let mut acc = 0.0;
        for (s, c) in self.points.iter().enumerate() {
            let d = z - c;
            let kernel = if d.re.abs() < near && d.im.abs() < near {
                h * h * (1.0 - c.conj() * z).norm().ln() - cell_log_weight(d, h)
            } else {
                0.5 * h * h * ((1.0 - c.conj() * z).norm_sqr() / d.norm_sqr()).ln()
            };
            acc += self.weights[s] * q[s] * kernel;
        }
        Ok(acc / (2.0 * PI))
    }
}

/// Dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// In-place 2D FFT of an `m x m` row-major array; the output is transposed,
/// which is harmless because forward and inverse passes are always paired.
fn fft2(data: &mut [Complex64], m: usize, plan: &dyn Fft<f64>) {
    plan.process(data);
    transpose(data, m);
    plan.process(data);
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in i + 1..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

/// Iteration diagnostics of a fixed-point solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `max |u - T[u]|` over the nodes for the returned iterate.
    pub final_residual: f64,
    /// `max (U - L)` of the monotone envelopes `L <= u* <= U`, if tracked.
    pub bracket_width: Option<f64>,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    /// Geometric mean of successive residual ratios over the last iterations.
    pub contraction_estimate: Option<f64>,
}

/// Parameters of [`solve_liouville_disk_with`].
#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub spacing: f64,
    pub tol: f64,
    pub max_iter: usize,
    /// Damping `u <- (1 - ω) u + ω T[u]`; `None` picks `2 / (2 + a)` with
    /// `a = 2 max e^{2h} / j_{0,1}^2`, a bound for the spectral radius of `T'`.
    pub omega: Option<f64>,
    pub track_envelopes: bool,
    pub boundary_samples: usize,
    /// Starting values on the active nodes; clamped into `[T[h], h]`.
    pub initial: Option<Vec<f64>>,
}

impl SolveOptions {
    pub fn new(spacing: f64, tol: f64, max_iter: usize) -> Self {
        SolveOptions {
            spacing,
            tol,
            max_iter,
            omega: Some(0.5),
            track_envelopes: true,
            boundary_samples: DEFAULT_BOUNDARY_SAMPLES,
            initial: None,
        }
    }
}

/// Output of a disk solve: grids share the unit-disk layout for the spacing.
#[derive(Debug, Clone)]
pub struct DiskSolution {
    pub solution: Grid,
    /// The harmonic extension `h` of the boundary data.
    pub harmonic: Grid,
    /// `T[h]`, the lower barrier.
    pub lower: Grid,
    pub report: SolveReport,
}

fn to_grid(op: &GreenOperator, values: &[f64]) -> Result<Grid> {
    let mut grid = Grid::for_domain(&DomainSpec::unit_disk(), op.spacing)?;
    let n = op.half_width as i64;
    for ((i, j), v) in op.nodes.iter().zip(values) {
        let kind = grid.kind((i + n) as usize, (j + n) as usize);
        grid.set((i + n) as usize, (j + n) as usize, kind, *v);
    }
    Ok(grid)
}

fn from_grid(op: &GreenOperator, grid: &Grid) -> Result<Vec<f64>> {
    let template = Grid::for_domain(&DomainSpec::unit_disk(), op.spacing)?;
    if !grid.same_layout(&template) {
        return Err(MetricError::GridMismatch(
            "grid is not the unit-disk layout for its spacing".into(),
        ));
    }
    let n = op.half_width as i64;
    Ok(op
        .nodes
        .iter()
        .map(|(i, j)| grid.value((i + n) as usize, (j + n) as usize))
        .collect())
}

/// One application of `T[u] = h - (1/2π) ∬ g e^{2u}` on a unit-disk grid.
pub fn apply_t(u: &Grid, h: &Grid) -> Result<Grid> {
    if !u.same_layout(h) {
        return Err(MetricError::GridMismatch("u and h layouts differ".into()));
    }
    let op = GreenOperator::cached(u.spacing())?;
    let uv = from_grid(&op, u)?;
    let hv = from_grid(&op, h)?;
    to_grid(&op, &apply_t_values(&op, &uv, &hv)?)
}

/// `T[u]` on the active nodes of `op`.
pub fn apply_t_values(op: &GreenOperator, u: &[f64], h: &[f64]) -> Result<Vec<f64>> {
    let q: Vec<f64> = u.iter().map(|v| (2.0 * v).exp()).collect();
    let w = op.potential(&q)?;
    Ok(h.iter().zip(&w).map(|(a, b)| a - b).collect())
}

/// Solves `Δu = e^{2u}` in the unit disk with `u = ψ` on the circle.
///
/// Damped iteration with `ω = 0.5` starting from `u_0 = h`; see
/// [`solve_liouville_disk_with`].
pub fn solve_liouville_disk(
    psi: &BoundaryData,
    spacing: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Grid, SolveReport)> {
    let out = solve_liouville_disk_with(psi, &SolveOptions::new(spacing, tol, max_iter))?;
    Ok((out.solution, out.report))
}

/// Damped fixed-point iteration `u <- clamp((1-ω) u + ω T[u], L, U)`.
///
/// `L <= U` start as `T[h] <= h` and, when envelopes are tracked, tighten
/// through `L <- max(L, T[U])`, `U <- min(U, T[L])`, which keeps the fixed
/// point between them because `T` is antitone. Stops once
/// `max |u - T[u]| <= tol`; otherwise returns the last iterate with
/// `converged = false`.
pub fn solve_liouville_disk_with(psi: &BoundaryData, opts: &SolveOptions) -> Result<DiskSolution> {
    if !(opts.tol > 0.0) {
        return Err(MetricError::InvalidParameters(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let op = GreenOperator::cached(opts.spacing)?;
    let ext = HarmonicExtension::new(psi, opts.boundary_samples)?;
    let h: Vec<f64> = op.points.iter().map(|z| ext.eval(*z)).collect();
    let (u, lower, report) = iterate(&op, &h, opts)?;
    Ok(DiskSolution {
        solution: to_grid(&op, &u)?,
        harmonic: to_grid(&op, &h)?,
        lower: to_grid(&op, &lower)?,
        report,
    })
}

/// The fixed-point loop on raw node vectors; returns `(u, T[h], report)`.
pub fn iterate(op: &GreenOperator, h: &[f64], opts: &SolveOptions) -> Result<(Vec<f64>, Vec<f64>, SolveReport)> {
    let t_h = apply_t_values(op, h, h)?;
    let omega = match opts.omega {
        Some(w) if w > 0.0 && w <= 1.0 => w,
        Some(w) => {
            return Err(MetricError::InvalidParameters(format!(
                "damping must lie in (0, 1], got {w}"
            )))
        }
        None => {
            let max_q = h.iter().map(|v| (2.0 * v).exp()).fold(0.0, f64::max);
            let bound = 2.0 * max_q / (2.404_825_557_695_773f64).powi(2);
            2.0 / (2.0 + bound)
        }
    };
    let mut lo = t_h.clone();
    let mut hi = h.to_vec();
    let mut u = match &opts.initial {
        Some(init) if init.len() == h.len() => init
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(v, (l, uu))| v.clamp(*l, *uu))
            .collect(),
        Some(_) => return Err(MetricError::GridMismatch("initial guess length".into())),
        None => h.to_vec(),
    };
    let mut track = opts.track_envelopes;
    let width = |lo: &[f64], hi: &[f64]| lo.iter().zip(hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    let mut bracket = width(&lo, &hi);
    let mut history = vec![];
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let tu = apply_t_values(op, &u, h)?;
        let residual = u.iter().zip(&tu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        history.push(residual);
        if residual <= opts.tol {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        if track {
            let t_hi = apply_t_values(op, &hi, h)?;
            let t_lo = apply_t_values(op, &lo, h)?;
            for k in 0..u.len() {
                lo[k] = lo[k].max(t_hi[k]);
                hi[k] = hi[k].min(t_lo[k]).max(lo[k]);
            }
            let new_bracket = width(&lo, &hi);
            if new_bracket > 0.999 * bracket || new_bracket <= opts.tol {
                track = false;
            }
            bracket = new_bracket;
        }
        for k in 0..u.len() {
            u[k] = ((1.0 - omega) * u[k] + omega * tu[k]).clamp(lo[k], hi[k]);
        }
        iterations += 1;
    }
    let contraction_estimate = if history.len() >= 3 {
        let tail = &history[history.len().saturating_sub(6)..];
        let ratios: Vec<f64> = tail
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] > 0.0)
            .map(|w| (w[1] / w[0]).ln())
            .collect();
        (!ratios.is_empty()).then(|| (ratios.iter().sum::<f64>() / ratios.len() as f64).exp())
    } else {
        None
    };
    let report = SolveReport {
        iterations,
        final_residual: history[history.len() - 1],
        bracket_width: opts.track_envelopes.then_some(bracket),
        converged,
        residual_history: history,
        contraction_estimate,
    };
    Ok((u, t_h, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn green_function_values() {
        assert!((green_function(c(0.0, 0.0), c(0.5, 0.0)).unwrap() - 2f64.ln()).abs() < 1e-15);
        let a = green_function(c(0.3, 0.0), c(0.0, 0.7)).unwrap();
        let b = green_function(c(0.0, 0.7), c(0.3, 0.0)).unwrap();
        assert!((a - b).abs() < 1e-15);
        // near the circle g(z, ζ) ≈ (1 - |z|^2)(1 - |ζ|^2) / (2 |1 - conj(ζ) z|^2)
        let near = green_function(c(0.999, 0.0), c(0.5, 0.0)).unwrap();
        let poisson = (1.0 - 0.999f64.powi(2)) * 0.75 / (2.0 * (1.0 - 0.4995f64).powi(2));
        assert!((near - poisson).abs() < 1e-5);
        assert!(green_function(c(0.0, 0.999_99), c(0.5, 0.0)).unwrap() < 3.1e-5);
        assert_eq!(
            green_function(c(0.1, 0.0), c(0.1, 0.0)),
            Err(MetricError::CoincidentPoints(c(0.1, 0.0)))
        );
    }

    #[test]
    fn rectangle_log_integral_matches_quadrature() {
        let (x1, x2, y1, y2) = (0.3, 0.7, -0.2, 0.5);
        let n = 400;
        let mut brute = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = x1 + (x2 - x1) * (i as f64 + 0.5) / n as f64;
                let y = y1 + (y2 - y1) * (j as f64 + 0.5) / n as f64;
                brute += 0.5 * (x * x + y * y).ln();
            }
        }
        brute *= (x2 - x1) * (y2 - y1) / (n * n) as f64;
        assert!((rect_log_integral(x1, x2, y1, y2) - brute).abs() < 1e-6);
        // cell centered on the singularity: 4 * G(1/2, 1/2)
        let a: f64 = 0.5;
        let expected = 2.0 * a * a * ((2.0 * a * a).ln() - 3.0 + PI / 2.0);
        assert!((rect_log_integral(-a, a, -a, a) - expected).abs() < 1e-15);
    }

    #[test]
    fn harmonic_extension_of_simple_data() {
        let one = BoundaryData::constant(1.0);
        assert!((harmonic_extension(&one, c(0.3, 0.4)).unwrap() - 1.0).abs() < 1e-14);
        let cosine = BoundaryData::from_fn(f64::cos);
        for z in [c(0.2, -0.5), c(0.9, 0.1), c(0.0, 0.0)] {
            assert!((harmonic_extension(&cosine, z).unwrap() - z.re).abs() < 1e-14);
        }
        let r: f64 = 2.0;
        let level = (2.0 * r / (r * r - 1.0)).ln();
        let lifted = BoundaryData::constant(level);
        assert!((harmonic_extension(&lifted, c(-0.6, 0.3)).unwrap() - level).abs() < 1e-14);
    }

    #[test]
    fn sampled_boundary_data_interpolates() {
        let values: Vec<f64> = (0..64).map(|j| (2.0 * PI * j as f64 / 64.0).sin() * 3.0).collect();
        let data = BoundaryData::from_samples(values).unwrap();
        assert!((data.value(0.3) - 3.0 * 0.3f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn fast_and_dense_operators_agree() {
        let h = 1.0 / 40.0;
        let dense = GreenOperator::with_representation(h, true).unwrap();
        let fast = GreenOperator::with_representation(h, false).unwrap();
        let q: Vec<f64> = dense
            .points()
            .iter()
            .map(|z| 1.0 + z.re * z.re + 0.5 * z.im)
            .collect();
        let a = dense.potential(&q).unwrap();
        let b = fast.potential(&q).unwrap();
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
        let k = a.len() / 3;
        let direct = dense.potential_at(dense.points()[k], &q).unwrap();
        assert!((direct - a[k]).abs() < 1e-13);
    }

    #[test]
    fn dense_kernel_is_nonnegative() {
        let op = GreenOperator::with_representation(1.0 / 16.0, true).unwrap();
        if let OperatorKind::Dense(m) = &op.kind {
            assert!(m.iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn zero_source_returns_harmonic_part() {
        let op = GreenOperator::cached(1.0 / 16.0).unwrap();
        let h: Vec<f64> = op.points().iter().map(|z| z.re).collect();
        let u = vec![-1e6; h.len()];
        let t = apply_t_values(&op, &u, &h).unwrap();
        assert_eq!(t, h);
    }

    #[test]
    fn poisson_solution_for_constant_source() {
        // w = (1/2π) ∬ g · 1 solves -Δw = ... with w = (1 - |z|^2)/4
        let op = GreenOperator::cached(1.0 / 32.0).unwrap();
        let q = vec![1.0; op.len()];
        let w = op.potential(&q).unwrap();
        let err = op
            .points()
            .iter()
            .zip(&w)
            .map(|(z, v)| (v - (1.0 - z.norm_sqr()) / 4.0).abs())
            .fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }
}
