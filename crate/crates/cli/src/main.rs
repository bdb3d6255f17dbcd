//! `hypermetric`: command-line access to densities, distances, the disk
//! solver, the Perron iteration, the twice punctured plane and Schwarzians.
//!
//! Exit status: 0 on success, 2 on invalid input, 3 when a solver stops
//! without converging, 1 on I/O failure.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hypermetric::agard::{
    agard_density, agard_metric, developing_map, developing_map_derivative, hempel_bound,
    min_on_unit_circle, puncture_asymptotics_check, HempelConstant,
};
use hypermetric::closed_forms::{radial_density, RadialMetricFamily};
use hypermetric::density::default_curvature_step;
use hypermetric::geodesic::geodesic_path;
use hypermetric::green::{solve_liouville_disk_with, BoundaryData, SolveOptions};
use hypermetric::maps::{HolomorphicMap, Power};
use hypermetric::perron::{perron_solve_with, DiskCover, PerronOptions, COVER_FRACTION};
use hypermetric::schwarzian::{
    check_transformation_law, cpp_schwarzian_closed_form, default_schwarzian_step,
    metric_schwarzian_fd,
};
use hypermetric::{
    curvature_estimate, path_length, Complex64, Density, DomainSpec, Grid, MetricError, NodeKind,
    PathPolyline, Rect, RoundDisk,
};
use log::info;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hypermetric", version, about = "Hyperbolic densities: closed forms, solvers and Schwarzians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a density at a point or sample it on a grid.
    Density(DensityArgs),
    /// Length of a polyline.
    Length(LengthArgs),
    /// Approximate distance between two points.
    Distance(DistanceArgs),
    /// Five-point curvature estimates.
    Curvature(CurvatureArgs),
    /// Solve the Liouville equation on the unit disk.
    SolveDisk(SolveDiskArgs),
    /// Perron iteration on a disk with round holes or an annulus.
    Perron(PerronArgs),
    /// The hyperbolic metric of the twice punctured plane.
    Agard(AgardArgs),
    /// Schwarzian derivative of a density.
    Schwarzian(SchwarzianArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Disk,
    PuncturedDisk,
    PuncturedDiskAlpha,
    Annulus,
    Exterior,
    ExteriorAlpha,
    Agard,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct DensitySelect {
    #[arg(long, value_enum, default_value = "disk")]
    family: Family,
    /// Inner radius (annulus).
    #[arg(long = "r", default_value_t = 0.5)]
    inner: f64,
    /// Outer radius, or the radius of a disk, punctured disk or exterior.
    #[arg(long = "R", default_value_t = 1.0)]
    outer: f64,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
}

impl DensitySelect {
    fn density(&self) -> Result<Density, CliError> {
        let fam = match self.family {
            Family::Agard => return Ok(agard_metric()),
            Family::Disk => RadialMetricFamily::Disk { radius: self.outer },
            Family::PuncturedDisk => RadialMetricFamily::PuncturedDiskLog { radius: self.outer },
            Family::PuncturedDiskAlpha => RadialMetricFamily::PuncturedDiskAlpha {
                radius: self.outer,
                alpha: self.alpha,
            },
            Family::Annulus => RadialMetricFamily::Annulus {
                inner: self.inner,
                outer: self.outer,
            },
            Family::Exterior => RadialMetricFamily::ExteriorLog { radius: self.outer },
            Family::ExteriorAlpha => RadialMetricFamily::ExteriorAlpha {
                radius: self.outer,
                alpha: self.alpha,
            },
        };
        Ok(radial_density(fam)?)
    }
}

#[derive(Args)]
struct GridSelect {
    /// Grid spacing `1/N`.
    #[arg(long, conflicts_with = "spacing")]
    grid: Option<u32>,
    #[arg(long)]
    spacing: Option<f64>,
    /// Sampling box `x_min,y_min,x_max,y_max`, required for unbounded domains.
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    bbox: Option<Rect>,
}

impl GridSelect {
    fn spacing(&self) -> Option<f64> {
        self.spacing.or(self.grid.map(|n| 1.0 / n as f64))
    }
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    select: DensitySelect,
    /// A point `x` or `x,y`.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<Complex64>,
    #[command(flatten)]
    grid: GridSelect,
    /// CSV output (standard output if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON grid header, needed to reload the CSV.
    #[arg(long)]
    header: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct LengthArgs {
    #[command(flatten)]
    select: DensitySelect,
    /// JSON file with the vertex list `[[x, y], ...]`.
    #[arg(long, conflicts_with_all = ["from", "to"])]
    path: Option<PathBuf>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    from: Option<Complex64>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Option<Complex64>,
    /// Subdivisions of the segment `from -> to`.
    #[arg(long, default_value_t = 64)]
    segments: usize,
}

#[derive(Args)]
struct DistanceArgs {
    #[command(flatten)]
    select: DensitySelect,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    from: Complex64,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Complex64,
    #[arg(long, default_value_t = 1.0 / 200.0)]
    resolution: f64,
    /// Writes the path as JSON.
    #[arg(long)]
    path_out: Option<PathBuf>,
}

#[derive(Args)]
struct CurvatureArgs {
    #[command(flatten)]
    select: DensitySelect,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true, conflicts_with = "random")]
    point: Option<Complex64>,
    /// Stencil spacing (default: 1e-3 times the distance to the boundary).
    #[arg(long)]
    step: Option<f64>,
    /// Number of random points in the sampling box.
    #[arg(long)]
    random: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sampling box for random points `x_min,y_min,x_max,y_max`.
    #[arg(long, value_parser = parse_rect, allow_hyphen_values = true)]
    bbox: Option<Rect>,
}

#[derive(Args)]
struct SolveDiskArgs {
    /// Constant boundary value of `u = log λ`.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "boundary_samples")]
    constant_boundary: Option<f64>,
    /// File with one boundary value per line at equally spaced angles.
    #[arg(long)]
    boundary_samples: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    spacing: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Fixed damping in (0, 1]; adaptive if omitted.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    header: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct PerronArgs {
    /// Annulus `0 < r < |z| < R` instead of the unit disk with holes.
    #[arg(long, num_args = 2, value_names = ["r", "R"], conflicts_with = "hole")]
    annulus: Option<Vec<f64>>,
    /// Round hole `x,y,radius` in the unit disk; repeatable.
    #[arg(long, value_parser = parse_hole, allow_hyphen_values = true)]
    hole: Vec<RoundDisk>,
    #[arg(long, default_value_t = 1.0 / 64.0)]
    spacing: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 400)]
    max_sweeps: usize,
    /// Density grid CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    header: Option<PathBuf>,
    /// PerronState JSON.
    #[arg(long)]
    state: Option<PathBuf>,
    /// Directory for per-sweep `log λ` snapshots.
    #[arg(long)]
    snapshots: Option<PathBuf>,
}

#[derive(Args)]
struct AgardArgs {
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Option<Complex64>,
    /// Also report the developing map and its derivative at the point.
    #[arg(long)]
    developing: bool,
    /// Minimum over the unit circle and the Hempel constant.
    #[arg(long)]
    minimum: bool,
    /// Puncture asymptotics at `z = -10^-k`, `k = 2..=K`.
    #[arg(long)]
    asymptotics: Option<u32>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Grid of `log λ` over `--bbox` (default `-2,-2,3,2`).
    #[command(flatten)]
    grid: GridSelect,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    header: Option<PathBuf>,
}

#[derive(Args)]
struct SchwarzianArgs {
    #[command(flatten)]
    select: DensitySelect,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    point: Complex64,
    #[arg(long)]
    step: Option<f64>,
    /// Check the transformation law for the pullback under `z^n`.
    #[arg(long)]
    power: Option<i32>,
}

#[derive(Debug)]
enum CliError {
    Invalid(String),
    NotConverged(String),
    Io(String),
}

impl From<MetricError> for CliError {
    fn from(err: MetricError) -> Self {
        match err {
            MetricError::Io(m) => CliError::Io(m),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

type CliResult = Result<(), CliError>;

fn parse_point(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}"));
    match parts.as_slice() {
        [x] => Ok(Complex64::new(num(x)?, 0.0)),
        [x, y] => Ok(Complex64::new(num(x)?, num(y)?)),
        _ => Err(format!("expected x or x,y, got {s:?}")),
    }
}

fn parse_numbers(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {s:?}"));
    }
    Ok(v)
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    let v = parse_numbers(s, 4)?;
    if !(v[0] < v[2] && v[1] < v[3]) {
        return Err(format!("empty box {s:?}"));
    }
    Ok(Rect::new(v[0], v[1], v[2], v[3]))
}

fn parse_hole(s: &str) -> Result<RoundDisk, String> {
    let v = parse_numbers(s, 3)?;
    Ok(RoundDisk::new(Complex64::new(v[0], v[1]), v[2]))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_grid(grid: &Grid, out: Option<&Path>, header: Option<&Path>) -> CliResult {
    match out {
        Some(p) => {
            let mut w = create(p)?;
            grid.write_csv(&mut w)?;
            w.flush()?;
        }
        None => grid.write_csv(std::io::stdout().lock())?,
    }
    if let Some(p) = header {
        let mut w = create(p)?;
        grid.write_header(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn write_json(value: &Value, path: Option<&Path>) -> CliResult {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => {
            let mut w = create(p)?;
            w.write_all(text.as_bytes())?;
            w.flush()?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn sample_density(d: &Density, h: f64, bbox: Option<Rect>) -> Result<Grid, CliError> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(CliError::Invalid(format!("spacing must be positive, got {h}")));
    }
    let Some(rect) = bbox else {
        if d.domain().bounding_box().is_none() {
            return Err(CliError::Invalid("unbounded domain: pass --bbox".into()));
        }
        return Ok(Grid::sample(d, h)?);
    };
    let mut grid = Grid::over_rect(rect, h)?;
    grid.mask_by_domain(d.domain());
    for k in 0..grid.len() {
        if grid.mask()[k] == NodeKind::Outside {
            continue;
        }
        match d.eval(grid.point_at(k)) {
            Ok(v) => grid.values_mut()[k] = v,
            Err(_) => grid.mask_mut()[k] = NodeKind::Outside,
        }
    }
    Ok(grid)
}

fn run_density(a: &DensityArgs) -> CliResult {
    let d = a.select.density()?;
    if let Some(z) = a.point {
        let v = d.eval(z)?;
        match a.format {
            Format::Csv => println!("{v}"),
            Format::Json => write_json(&json!({ "x": z.re, "y": z.im, "density": v }), None)?,
        }
        return Ok(());
    }
    let h = a
        .grid
        .spacing()
        .ok_or_else(|| CliError::Invalid("need --point, --grid or --spacing".into()))?;
    let grid = sample_density(&d, h, a.grid.bbox)?;
    write_grid(&grid, a.out.as_deref(), a.header.as_deref())
}

fn run_length(a: &LengthArgs) -> CliResult {
    let d = a.select.density()?;
    let path = match (&a.path, a.from, a.to) {
        (Some(p), _, _) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            PathPolyline::from_json(&text)?
        }
        (None, Some(from), Some(to)) => PathPolyline::subdivided_segment(from, to, a.segments)?,
        _ => return Err(CliError::Invalid("need --path or both --from and --to".into())),
    };
    println!("{}", path_length(&d, &path)?);
    Ok(())
}

fn run_distance(a: &DistanceArgs) -> CliResult {
    let d = a.select.density()?;
    let result = geodesic_path(&d, a.from, a.to, a.resolution)?;
    println!("{}", result.distance);
    if let Some(p) = &a.path_out {
        let mut w = create(p)?;
        w.write_all(result.path.to_json()?.as_bytes())?;
        w.flush()?;
    }
    Ok(())
}

fn run_curvature(a: &CurvatureArgs) -> CliResult {
    let d = a.select.density()?;
    let at = |z: Complex64| -> Result<f64, CliError> {
        let h = a.step.unwrap_or_else(|| default_curvature_step(&d, z));
        Ok(curvature_estimate(&d, z, h)?)
    };
    if let Some(z) = a.point {
        println!("{}", at(z)?);
        return Ok(());
    }
    let n = a
        .random
        .ok_or_else(|| CliError::Invalid("need --point or --random".into()))?;
    let rect = a
        .bbox
        .or_else(|| d.domain().bounding_box())
        .ok_or_else(|| CliError::Invalid("unbounded domain: pass --bbox".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut rows = vec![];
    let mut worst: f64 = 0.0;
    let mut attempts = 0usize;
    while rows.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(CliError::Invalid("sampling box barely meets the domain".into()));
        }
        let z = Complex64::new(
            rng.gen_range(rect.x_min..rect.x_max),
            rng.gen_range(rect.y_min..rect.y_max),
        );
        // keep away from punctures and boundary circles
        if !d.domain().contains(z) || d.domain().boundary_distance(z) < 1e-3 {
            continue;
        }
        let k = at(z)?;
        worst = worst.max((k + 1.0).abs());
        rows.push(json!({ "x": z.re, "y": z.im, "curvature": k }));
    }
    write_json(
        &json!({ "seed": a.seed, "points": rows, "max_deviation_from_minus_one": worst }),
        None,
    )
}

fn run_solve_disk(a: &SolveDiskArgs) -> CliResult {
    let psi = match (a.constant_boundary, &a.boundary_samples) {
        (Some(c), _) => BoundaryData::constant(c),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let values = text
                .split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| CliError::Invalid(format!("bad sample {t:?}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            BoundaryData::from_samples(values)?
        }
        (None, None) => {
            return Err(CliError::Invalid(
                "need --constant-boundary or --boundary-samples".into(),
            ))
        }
    };
    let mut opts = SolveOptions::new(a.spacing, a.tol, a.max_iter);
    opts.omega = a.omega;
    let sol = solve_liouville_disk_with(&psi, &opts)?;
    let (i, j) = sol
        .solution
        .nearest_node(Complex64::new(0.0, 0.0))
        .ok_or_else(|| CliError::Invalid("empty grid".into()))?;
    eprintln!("u(0) = {}", sol.solution.value(i, j));
    write_grid(&sol.solution, a.out.as_deref(), a.header.as_deref())?;
    if let Some(p) = &a.report {
        write_json(&serde_json::to_value(&sol.report)?, Some(p))?;
    }
    if !sol.report.converged {
        return Err(CliError::NotConverged(format!(
            "residual {:.3e} after {} iterations",
            sol.report.final_residual, sol.report.iterations
        )));
    }
    Ok(())
}

fn run_perron(a: &PerronArgs) -> CliResult {
    let origin = Complex64::new(0.0, 0.0);
    let domain = match &a.annulus {
        Some(v) => DomainSpec::Annulus {
            center: origin,
            inner: v[0],
            outer: v[1],
        },
        None if a.hole.is_empty() => DomainSpec::unit_disk(),
        None => DomainSpec::DiskMinusHoles {
            outer: RoundDisk::new(origin, 1.0),
            holes: a.hole.clone(),
        },
    };
    domain.validate()?;
    let cover = DiskCover::greedy(&domain, a.spacing, COVER_FRACTION)?;
    info!("cover of {} disks", cover.disks.len());
    let mut opts = PerronOptions::new(a.tol, a.max_sweeps);
    opts.keep_snapshots = a.snapshots.is_some();
    let (_, state) = perron_solve_with(&domain, &cover, &opts)?;
    let metric = state.current.as_ref().expect("final metric");
    let mut grid = metric.log_grid().clone();
    for v in grid.values_mut() {
        *v = v.exp();
    }
    write_grid(&grid, a.out.as_deref(), a.header.as_deref())?;
    if let Some(p) = &a.state {
        write_json(&serde_json::to_value(&state)?, Some(p))?;
    }
    if let Some(dir) = &a.snapshots {
        std::fs::create_dir_all(dir)?;
        for (k, snap) in state.snapshots.iter().enumerate() {
            let mut w = create(&dir.join(format!("sweep_{:04}.csv", k + 1)))?;
            snap.write_csv(&mut w)?;
            w.flush()?;
        }
    }
    if !state.converged {
        return Err(CliError::NotConverged(format!(
            "{} sweeps, last increase {:.3e}",
            state.sweep_count,
            state.max_increase.last().copied().unwrap_or(f64::NAN)
        )));
    }
    Ok(())
}

fn run_agard(a: &AgardArgs) -> CliResult {
    if let Some(h) = a.grid.spacing() {
        let rect = a.grid.bbox.unwrap_or(Rect::new(-2.0, -2.0, 3.0, 2.0));
        let mut grid = sample_density(&agard_metric(), h, Some(rect))?;
        let mask = grid.mask().to_vec();
        for (v, kind) in grid.values_mut().iter_mut().zip(mask) {
            if kind != NodeKind::Outside {
                *v = v.ln();
            }
        }
        return write_grid(&grid, a.out.as_deref(), a.header.as_deref());
    }
    let mut report = serde_json::Map::new();
    if let Some(z) = a.point {
        let v = agard_density(z)?;
        report.insert("density".into(), json!(v));
        report.insert(
            "hempel_bound".into(),
            json!(hempel_bound(z, HempelConstant::exact())?),
        );
        if a.developing {
            let f = developing_map(z)?;
            let df = developing_map_derivative(z, 1e-6)?;
            report.insert("developing_map".into(), json!([f.re, f.im]));
            report.insert("developing_map_derivative".into(), json!([df.re, df.im]));
        }
        if a.format == Format::Csv && !a.developing && !a.minimum && a.asymptotics.is_none() {
            println!("{v}");
            return Ok(());
        }
    }
    if a.minimum {
        let (t, v) = min_on_unit_circle()?;
        report.insert("min_theta".into(), json!(t));
        report.insert("min_value".into(), json!(v));
        report.insert("log_r".into(), json!(HempelConstant::exact().log_r));
    }
    if let Some(k_max) = a.asymptotics {
        let radii: Vec<f64> = (2..=k_max as i32).map(|k| 10f64.powi(-k)).collect();
        report.insert(
            "asymptotics".into(),
            serde_json::to_value(puncture_asymptotics_check(&radii)?)?,
        );
    }
    if report.is_empty() {
        return Err(CliError::Invalid(
            "need --point, --minimum, --asymptotics or --grid".into(),
        ));
    }
    write_json(&Value::Object(report), None)
}

fn run_schwarzian(a: &SchwarzianArgs) -> CliResult {
    let d = a.select.density()?;
    let z = a.point;
    let h = a.step.unwrap_or_else(|| default_schwarzian_step(d.domain(), z));
    let s = metric_schwarzian_fd(&d, z, h)?;
    let mut report = json!({ "x": z.re, "y": z.im, "schwarzian": [s.re, s.im], "step": h });
    if a.select.family == Family::Agard {
        let exact = cpp_schwarzian_closed_form(z)?;
        report["closed_form"] = json!([exact.re, exact.im]);
        report["difference"] = json!((s - exact).norm());
    }
    if let Some(n) = a.power {
        if n == 0 {
            return Err(CliError::Invalid("power must be nonzero".into()));
        }
        let f: Arc<dyn HolomorphicMap> = Arc::new(Power(n));
        let source = preimage_domain(d.domain(), n)?;
        report["transformation_law_residual"] = json!(check_transformation_law(&d, f, source, z)?);
    }
    write_json(&report, None)
}

/// The preimage of the density's domain under `z -> z^n`, for the domains
/// where it is again a listed domain.
fn preimage_domain(domain: &DomainSpec, n: i32) -> Result<DomainSpec, CliError> {
    let roots = |w: Complex64| -> Vec<Complex64> {
        let m = n.unsigned_abs() as f64;
        let (r, t) = w.to_polar();
        let (r, t) = if n > 0 { (r, t) } else { (1.0 / r, -t) };
        (0..n.unsigned_abs())
            .map(|k| Complex64::from_polar(r.powf(1.0 / m), (t + 2.0 * PI * k as f64) / m))
            .collect()
    };
    match domain {
        DomainSpec::TwicePuncturedPlane => {
            let mut points = vec![Complex64::new(0.0, 0.0)];
            points.extend(roots(Complex64::new(1.0, 0.0)));
            Ok(DomainSpec::PuncturedPlaneSet { points })
        }
        DomainSpec::PuncturedPlaneSet { points } => {
            let mut out = vec![Complex64::new(0.0, 0.0)];
            for p in points {
                if p.norm() > 0.0 {
                    out.extend(roots(*p));
                }
            }
            Ok(DomainSpec::PuncturedPlaneSet { points: out })
        }
        _ => Err(CliError::Invalid(
            "--power needs the twice punctured plane or a punctured plane".into(),
        )),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("HYPERMETRIC_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| CliError::Invalid(format!("HYPERMETRIC_THREADS must be a count, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(e.to_string()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Density(a) => run_density(a),
        Command::Length(a) => run_length(a),
        Command::Distance(a) => run_distance(a),
        Command::Curvature(a) => run_curvature(a),
        Command::SolveDisk(a) => run_solve_disk(a),
        Command::Perron(a) => run_perron(a),
        Command::Agard(a) => run_agard(a),
        Command::Schwarzian(a) => run_schwarzian(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::NotConverged(m)) => {
            eprintln!("not converged: {m}");
            ExitCode::from(3)
        }
        Err(CliError::Io(m)) => {
            eprintln!("I/O error: {m}");
            ExitCode::from(1)
        }
    }
}
