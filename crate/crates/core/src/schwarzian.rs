//! Schwarzian derivatives of metrics and maps, and reconstruction of
//! developing maps from a metric's Schwarzian along a path.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{pullback, Density};
use crate::domain::DomainSpec;
use crate::error::{MetricError, Result};
use crate::maps::HolomorphicMap;
use crate::path::PathPolyline;

/// Wirtinger derivatives of `u = log λ` from a 5x5 stencil of spacing `h`.
struct LogDerivatives {
    u_z: Complex64,
    u_zz: Complex64,
}

fn log_derivatives(d: &Density, z: Complex64, h: f64) -> Result<LogDerivatives> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MetricError::InvalidParameters(format!(
            "stencil spacing must be positive, got {h}"
        )));
    }
    let mut u = [[0.0; 5]; 5];
    for (a, row) in u.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate() {
            let p = z + Complex64::new((a as f64 - 2.0) * h, (b as f64 - 2.0) * h);
            if !d.domain().contains(p) {
                return Err(MetricError::StencilOutsideDomain(z));
            }
            *slot = d.log_eval(p)?;
        }
    }
    // fourth-order central differences; u[a][b] is u(x + (a-2)h, y + (b-2)h)
    let d1 = |f: &dyn Fn(usize) -> f64| (f(0) - 8.0 * f(1) + 8.0 * f(3) - f(4)) / (12.0 * h);
    let d2 = |f: &dyn Fn(usize) -> f64| {
        (-f(0) + 16.0 * f(1) - 30.0 * f(2) + 16.0 * f(3) - f(4)) / (12.0 * h * h)
    };
    let u_x = d1(&|a| u[a][2]);
    let u_y = d1(&|b| u[2][b]);
    let u_xx = d2(&|a| u[a][2]);
    let u_yy = d2(&|b| u[2][b]);
    let u_xy = d1(&|a| d1(&|b| u[a][b]));
    Ok(LogDerivatives {
        u_z: Complex64::new(u_x, -u_y) / 2.0,
        u_zz: Complex64::new(u_xx - u_yy, -2.0 * u_xy) / 4.0,
    })
}

/// `S_λ = 2 (u_zz - u_z^2)` for `u = log λ`, by fourth-order differences on a
/// 5x5 stencil of spacing `h`.
pub fn metric_schwarzian_fd(d: &Density, z: Complex64, h: f64) -> Result<Complex64> {
    let w = log_derivatives(d, z, h)?;
    Ok(2.0 * (w.u_zz - w.u_z * w.u_z))
}

/// Stencil spacing used when none is given: `1e-2 * min(1, distance to boundary)`.
pub fn default_schwarzian_step(domain: &DomainSpec, z: Complex64) -> f64 {
    1e-2 * domain.boundary_distance(z).min(1.0)
}

/// `∂λ/∂z` by central differences, used for developing-map initial data.
pub fn density_dz(d: &Density, z: Complex64, h: f64) -> Result<Complex64> {
    let dx = Complex64::new(h, 0.0);
    let dy = Complex64::new(0.0, h);
    let l_x = (d.eval(z + dx)? - d.eval(z - dx)?) / (2.0 * h);
    let l_y = (d.eval(z + dy)? - d.eval(z - dy)?) / (2.0 * h);
    Ok(Complex64::new(l_x, -l_y) / 2.0)
}

/// `S_f = f'''/f' - (3/2) (f''/f')^2`.
///
/// Uses the map's own higher derivatives when it supplies them, otherwise
/// central differences of its values.
pub fn map_schwarzian(f: &dyn HolomorphicMap, z: Complex64) -> Result<Complex64> {
    let d1 = f.derivative(z);
    if d1.norm() == 0.0 || !d1.norm().is_finite() {
        return Err(MetricError::CriticalPoint(z));
    }
    let step = 1e-3 * (1.0 + z.norm());
    let at = |k: f64| f.value(z + Complex64::new(k * step, 0.0));
    let d2 = f.second_derivative(z).unwrap_or_else(|| {
        (-at(2.0) + 16.0 * at(1.0) - 30.0 * at(0.0) + 16.0 * at(-1.0) - at(-2.0))
            / (12.0 * step * step)
    });
    let d3 = f.third_derivative(z).unwrap_or_else(|| {
        (-at(3.0) + 8.0 * at(2.0) - 13.0 * at(1.0) + 13.0 * at(-1.0) - 8.0 * at(-2.0) + at(-3.0))
            / (8.0 * step * step * step)
    });
    let ratio = d2 / d1;
    Ok(d3 / d1 - 1.5 * ratio * ratio)
}

/// `|S_{f*λ}(z) - (S_f(z) + S_λ(f(z)) f'(z)^2)|`, both sides computed independently.
pub fn check_transformation_law(
    d: &Density,
    f: Arc<dyn HolomorphicMap>,
    source: DomainSpec,
    z: Complex64,
) -> Result<f64> {
    let pulled = pullback(d, f.clone(), source.clone());
    let lhs = metric_schwarzian_fd(&pulled, z, default_schwarzian_step(&source, z))?;
    let w = f.value(z);
    let s_lambda = metric_schwarzian_fd(d, w, default_schwarzian_step(d.domain(), w))?;
    let d1 = f.derivative(z);
    let rhs = map_schwarzian(f.as_ref(), z)? + s_lambda * d1 * d1;
    Ok((lhs - rhs).norm())
}

/// `S(z) = (1/2) [1/z^2 + 1/(z-1)^2 + 1/(z(1-z))]`, the Schwarzian of the
/// hyperbolic metric of `C \ {0, 1}`.
pub fn cpp_schwarzian_closed_form(z: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    if z.norm() == 0.0 || (z - one).norm() == 0.0 {
        return Err(MetricError::Pole(z));
    }
    Ok(0.5 * (one / (z * z) + one / ((z - one) * (z - one)) + one / (z * (one - z))))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ClosedForm,
    FiniteDifference,
}

type FieldRule = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

/// A Schwarzian `z -> S(z)` on a domain, holomorphic where defined.
#[derive(Clone)]
pub struct SchwarzianField {
    domain: DomainSpec,
    provenance: Provenance,
    rule: FieldRule,
}

impl fmt::Debug for SchwarzianField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SchwarzianField")
            .field("domain", &self.domain)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl SchwarzianField {
    pub fn closed_form(
        domain: DomainSpec,
        rule: impl Fn(Complex64) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        SchwarzianField {
            domain,
            provenance: Provenance::ClosedForm,
            rule: Arc::new(rule),
        }
    }

    /// The field of the twice punctured plane.
    pub fn twice_punctured_plane() -> Self {
        SchwarzianField::closed_form(DomainSpec::TwicePuncturedPlane, cpp_schwarzian_closed_form)
    }

    /// Finite-difference Schwarzian of `d` with the default stencil spacing.
    pub fn from_density(d: Density) -> Self {
        let domain = d.domain().clone();
        SchwarzianField {
            domain,
            provenance: Provenance::FiniteDifference,
            rule: Arc::new(move |z| {
                metric_schwarzian_fd(&d, z, default_schwarzian_step(d.domain(), z))
            }),
        }
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        if !self.domain.contains(z) {
            return Err(MetricError::PointOutsideDomain(z));
        }
        (self.rule)(z)
    }

    /// `|∂S/∂z̄|` at `z`, estimated as `|∮ S dw| / (2π r^2)` over the circle
    /// of radius `r` with 32 trapezoid nodes; holomorphic fields give zero up
    /// to rounding and the field's own error.
    pub fn dbar_residual(&self, z: Complex64, r: f64) -> Result<f64> {
        const NODES: usize = 32;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..NODES {
            let e = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / NODES as f64);
            // dw = i r e^{it} dt
            sum += self.eval(z + r * e)? * Complex64::i() * r * e;
        }
        let integral = sum * (2.0 * std::f64::consts::PI / NODES as f64);
        Ok(integral.norm() / (2.0 * std::f64::consts::PI * r * r))
    }
}

/// Developing-map value and derivative at a path vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DevelopingSample {
    pub z: Complex64,
    pub f: Complex64,
    pub df: Complex64,
}

impl DevelopingSample {
    /// `2 |f'| / (1 - |f|^2)`.
    pub fn density(&self) -> f64 {
        2.0 * self.df.norm() / (1.0 - self.f.norm_sqr())
    }
}

/// Integration settings for [`reconstruct_developing_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionOptions {
    /// Rotation `e^{iφ}` applied to the normalized developing map.
    pub phase: f64,
    /// Local error per step, relative to the size of the solution.
    pub tol: f64,
    pub min_step: f64,
}

impl Default for ReconstructionOptions {
    fn default() -> Self {
        ReconstructionOptions {
            phase: 0.0,
            tol: 1e-10,
            min_step: 1e-12,
        }
    }
}

type State = [Complex64; 4];

fn rhs(s: Complex64, dz: Complex64, y: &State) -> State {
    // y = (w1, w1', w2, w2') with w'' = -(S/2) w, derivative along z(t) = z_k + t dz
    let half = -0.5 * s;
    [dz * y[1], dz * half * y[0], dz * y[3], dz * half * y[2]]
}

fn rk4_step(field: &SchwarzianField, z: Complex64, dz: Complex64, dt: f64, y: &State) -> Result<State> {
    let add = |a: &State, b: &State, k: f64| -> State {
        [a[0] + b[0] * k, a[1] + b[1] * k, a[2] + b[2] * k, a[3] + b[3] * k]
    };
    let s0 = field.eval(z)?;
    let s_mid = field.eval(z + dz * (0.5 * dt))?;
    let s1 = field.eval(z + dz * dt)?;
    let k1 = rhs(s0, dz, y);
    let k2 = rhs(s_mid, dz, &add(y, &k1, 0.5 * dt));
    let k3 = rhs(s_mid, dz, &add(y, &k2, 0.5 * dt));
    let k4 = rhs(s1, dz, &add(y, &k3, dt));
    let mut out = *y;
    for i in 0..4 {
        out[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (dt / 6.0);
    }
    Ok(out)
}

fn state_norm(y: &State) -> f64 {
    y.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Integrates `w'' + (S/2) w = 0` for two solutions along `path` (which must
/// start at `z0`) with classical Runge–Kutta steps controlled by step
/// doubling, and returns `f = w1/w2` at every vertex.
///
/// The solutions are normalized so that `f(z0) = 0`, `f'(z0) = e^{iφ} λ0/2`
/// and `f''(z0) = e^{iφ} ∂λ/∂z(z0)`; the Wronskian is constant, so
/// `f' = f'(z0) / w2^2`.
pub fn reconstruct_developing_map(
    s: &SchwarzianField,
    z0: Complex64,
    lambda0: f64,
    lambda_dz: Complex64,
    path: &PathPolyline,
    opts: ReconstructionOptions,
) -> Result<Vec<DevelopingSample>> {
    if path.start() != z0 {
        return Err(MetricError::InvalidParameters(format!(
            "path starts at {} instead of {z0}",
            path.start()
        )));
    }
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(MetricError::InvalidParameters(format!(
            "initial density must be positive, got {lambda0}"
        )));
    }
    let rot = Complex64::from_polar(1.0, opts.phase);
    let a = rot * lambda0 / 2.0;
    let c = -(rot * lambda_dz) / (2.0 * a);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut y: State = [zero, a, one, c];
    let sample = |z: Complex64, y: &State| -> Result<DevelopingSample> {
        if y[2].norm() < 1e-12 * state_norm(y) {
            return Err(MetricError::DenominatorVanishes(z));
        }
        Ok(DevelopingSample {
            z,
            f: y[0] / y[2],
            df: a / (y[2] * y[2]),
        })
    };
    let mut out = vec![sample(z0, &y)?];
    for pair in path.vertices().windows(2) {
        let (start, dz) = (pair[0], pair[1] - pair[0]);
        let mut t = 0.0;
        let mut dt = (0.05 / dz.norm()).min(1.0);
        while t < 1.0 {
            dt = dt.min(1.0 - t);
            let z = start + dz * t;
            let full = rk4_step(s, z, dz, dt, &y)?;
            let half = rk4_step(s, z, dz, 0.5 * dt, &y)?;
            let two_halves = rk4_step(s, z + dz * (0.5 * dt), dz, 0.5 * dt, &half)?;
            let err = (0..4)
                .map(|i| (two_halves[i] - full[i]).norm())
                .fold(0.0, f64::max)
                / 15.0;
            let scale = state_norm(&two_halves).max(1.0);
            if err <= opts.tol * scale {
                for i in 0..4 {
                    y[i] = two_halves[i] + (two_halves[i] - full[i]) / 15.0;
                }
                t += dt;
                if y[2].norm() < 1e-12 * state_norm(&y) {
                    return Err(MetricError::DenominatorVanishes(start + dz * t));
                }
                let grow = if err > 0.0 {
                    (0.9 * (opts.tol * scale / err).powf(0.2)).min(4.0)
                } else {
                    4.0
                };
                dt *= grow;
            } else {
                dt *= (0.9 * (opts.tol * scale / err).powf(0.2)).max(0.1);
                if dt * dz.norm() < opts.min_step {
                    return Err(MetricError::StepFailure(z));
                }
            }
        }
        out.push(sample(pair[1], &y)?);
    }
    Ok(out)
}

/// Largest relative deviation of `2|f'|/(1-|f|^2)` from `d` over the samples.
pub fn liouville_residual(samples: &[DevelopingSample], d: &Density) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for s in samples {
        let exact = d.eval(s.z)?;
        worst = worst.max((s.density() - exact).abs() / exact);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed_forms::{hyperbolic_disk, hyperbolic_punctured_disk};
    use crate::maps::{FnMap, Mobius, Power};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn disk_schwarzian_vanishes() {
        let s = metric_schwarzian_fd(&hyperbolic_disk(), c(0.3, -0.2), 1e-3).unwrap();
        assert!(s.norm() < 1e-6);
    }

    #[test]
    fn punctured_disk_schwarzian() {
        let z = c(0.2, 0.3);
        let s = metric_schwarzian_fd(&hyperbolic_punctured_disk(), z, 1e-3).unwrap();
        let expected = 1.0 / (2.0 * z * z);
        assert!((s - expected).norm() < 1e-6 * expected.norm());
    }

    #[test]
    fn closed_form_values() {
        assert!((cpp_schwarzian_closed_form(c(-1.0, 0.0)).unwrap() - c(0.375, 0.0)).norm() < 1e-15);
        let z = c(1e6, 3e5);
        let scaled = z * z * cpp_schwarzian_closed_form(z).unwrap();
        assert!((scaled - c(0.5, 0.0)).norm() < 1e-5);
        assert_eq!(cpp_schwarzian_closed_form(c(1.0, 0.0)), Err(MetricError::Pole(c(1.0, 0.0))));
    }

    #[test]
    fn map_schwarzians() {
        let m = Mobius::new(c(1.0, 1.0), c(2.0, 0.0), c(0.5, 0.0), c(1.0, -1.0));
        assert!(map_schwarzian(&m, c(0.3, 0.1)).unwrap().norm() < 1e-12);
        let z = c(0.7, -0.4);
        let sq = map_schwarzian(&Power(2), z).unwrap();
        assert!((sq + 1.5 / (z * z)).norm() < 1e-12);
        let root = FnMap::new(|w: Complex64| w.sqrt());
        let s = map_schwarzian(&root, z).unwrap();
        assert!((s - 3.0 / (8.0 * z * z)).norm() < 1e-5, "{s}");
        assert_eq!(
            map_schwarzian(&Power(2), c(0.0, 0.0)),
            Err(MetricError::CriticalPoint(c(0.0, 0.0)))
        );
    }

    #[test]
    fn transformation_law_for_automorphism() {
        let t = Arc::new(Mobius::disk_automorphism(c(0.2, 0.1), 0.5));
        let r = check_transformation_law(&hyperbolic_disk(), t, DomainSpec::unit_disk(), c(0.1, -0.3))
            .unwrap();
        assert!(r < 1e-6);
    }

    #[test]
    fn zero_schwarzian_gives_identity() {
        let field = SchwarzianField::closed_form(DomainSpec::unit_disk(), |_| Ok(c(0.0, 0.0)));
        let path = PathPolyline::subdivided_segment(c(0.0, 0.0), c(0.9, 0.0), 9).unwrap();
        let samples = reconstruct_developing_map(
            &field,
            c(0.0, 0.0),
            2.0,
            c(0.0, 0.0),
            &path,
            ReconstructionOptions::default(),
        )
        .unwrap();
        for s in samples {
            assert!((s.f - s.z).norm() < 1e-8);
        }
    }

    #[test]
    fn punctured_disk_reconstruction() {
        let d = hyperbolic_punctured_disk();
        let field = SchwarzianField::closed_form(DomainSpec::punctured_unit_disk(), |z| {
            Ok(Complex64::new(0.5, 0.0) / (z * z))
        });
        let z0 = c(0.3, 0.0);
        let path = PathPolyline::new(vec![z0, c(0.5, 0.2), c(0.6, -0.3), c(0.2, -0.1)]).unwrap();
        let samples = reconstruct_developing_map(
            &field,
            z0,
            d.eval(z0).unwrap(),
            density_dz(&d, z0, 1e-5).unwrap(),
            &path,
            ReconstructionOptions::default(),
        )
        .unwrap();
        assert!(liouville_residual(&samples, &d).unwrap() < 1e-6);
    }

    #[test]
    fn finite_difference_field_is_holomorphic() {
        let field = SchwarzianField::from_density(hyperbolic_punctured_disk());
        assert_eq!(field.provenance(), Provenance::FiniteDifference);
        let r = field.dbar_residual(c(0.3, 0.4), 1e-2).unwrap();
        assert!(r < 1e-4, "{r}");
    }
}
