//! Conformal densities and the metric-agnostic operations on them.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{MetricError, Result};
use crate::maps::HolomorphicMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    ClosedForm,
    GridSampled,
}

type Rule = Arc<dyn Fn(Complex64) -> Result<f64> + Send + Sync>;

/// A conformal density `lambda(z) |dz|` on a domain.
///
/// Cloning is cheap: the evaluation rule is shared.
#[derive(Clone)]
pub struct Density {
    domain: DomainSpec,
    kind: DensityKind,
    label: String,
    rule: Rule,
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("domain", &self.domain)
            .finish()
    }
}

impl Density {
    pub fn new(
        domain: DomainSpec,
        kind: DensityKind,
        label: impl Into<String>,
        rule: impl Fn(Complex64) -> Result<f64> + Send + Sync + 'static,
    ) -> Self {
        Density {
            domain,
            kind,
            label: label.into(),
            rule: Arc::new(rule),
        }
    }

    /// A closed-form density whose formula cannot fail inside the domain.
    pub fn closed_form(
        domain: DomainSpec,
        label: impl Into<String>,
        formula: impl Fn(Complex64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Density::new(domain, DensityKind::ClosedForm, label, move |z| Ok(formula(z)))
    }

    /// `lambda == value` on `domain`.
    pub fn constant(domain: DomainSpec, value: f64) -> Self {
        Density::closed_form(domain, format!("constant {value}"), move |_| value)
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Evaluates `lambda(z)`; points outside the domain are an error.
    pub fn eval(&self, z: Complex64) -> Result<f64> {
        if !self.domain.contains(z) {
            return Err(MetricError::PointOutsideDomain(z));
        }
        let value = (self.rule)(z)?;
        if !value.is_finite() || value < 0.0 {
            return Err(MetricError::PointOutsideDomain(z));
        }
        Ok(value)
    }

    /// `log lambda(z)`; a vanishing density is reported as [`MetricError::ZeroDensity`].
    pub fn log_eval(&self, z: Complex64) -> Result<f64> {
        let value = self.eval(z)?;
        if value <= 0.0 {
            return Err(MetricError::ZeroDensity(z));
        }
        Ok(value.ln())
    }
}

/// Evaluates `d` at `z`.
pub fn eval_density(d: &Density, z: Complex64) -> Result<f64> {
    d.eval(z)
}

/// Pullback `z -> lambda(f(z)) |f'(z)|` of `d` under `f : source -> d.domain`.
pub fn pullback(d: &Density, f: Arc<dyn HolomorphicMap>, source: DomainSpec) -> Density {
    let target = d.clone();
    let label = format!("pullback of {}", d.label());
    Density::new(source, d.kind(), label, move |z| {
        let w = f.value(z);
        if !target.domain().contains(w) {
            return Err(MetricError::ImageEscapesDomain {
                source_point: z,
                image: w,
            });
        }
        Ok(target.eval(w)? * f.derivative(z).norm())
    })
}

/// Default curvature stencil spacing: `1e-3` times the distance to the boundary.
pub fn default_curvature_step(d: &Density, z: Complex64) -> f64 {
    let dist = d.domain().boundary_distance(z);
    if dist.is_finite() {
        1e-3 * dist
    } else {
        1e-3 * (1.0 + z.norm())
    }
}

/// Five-point estimate of the Gauss curvature `-Laplace(log lambda) / lambda^2`.
///
/// The truncation error is `O(h^2)` for densities of class `C^4`.
pub fn curvature_estimate(d: &Density, z: Complex64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(MetricError::InvalidParameters(format!(
            "stencil spacing must be positive, got {h}"
        )));
    }
    let offsets = [
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, h),
        Complex64::new(0.0, -h),
    ];
    for o in offsets {
        if !d.domain().contains(z + o) {
            return Err(MetricError::StencilOutsideDomain(z));
        }
    }
    if !d.domain().contains(z) {
        return Err(MetricError::StencilOutsideDomain(z));
    }
    let center = d.eval(z)?;
    if center <= 0.0 {
        return Err(MetricError::ZeroDensity(z));
    }
    let log_center = center.ln();
    let mut laplacian = -4.0 * log_center;
    for o in offsets {
        laplacian += d.log_eval(z + o)?;
    }
    laplacian /= h * h;
    Ok(-laplacian / (center * center))
}

/// Outcome of the sampled gluing-condition check.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GlueReport {
    pub samples_checked: usize,
    pub violations: usize,
    /// Largest observed `patch - base` on the sampled boundary.
    pub max_excess: f64,
}

/// Number of boundary points per boundary circle used by the gluing check.
pub const GLUE_SAMPLES: usize = 256;

/// Pointwise maximum of `base` with `patch` on the patch's domain `U`,
/// `base` elsewhere.
///
/// The gluing condition `limsup patch <= base` on the part of `dU` inside the
/// base domain is checked on sampled boundary points; violations are reported
/// and logged but do not abort.
pub fn glue_max(base: &Density, patch: &Density) -> (Density, GlueReport) {
    let report = check_gluing(base, patch);
    if report.violations > 0 {
        log::warn!(
            "gluing condition violated at {} of {} sampled boundary points (max excess {:.3e})",
            report.violations,
            report.samples_checked,
            report.max_excess
        );
    }
    let b = base.clone();
    let p = patch.clone();
    let label = format!("max({}, {})", base.label(), patch.label());
    let glued = Density::new(base.domain().clone(), base.kind(), label, move |z| {
        let below = b.eval(z)?;
        if p.domain().contains(z) {
            Ok(below.max(p.eval(z)?))
        } else {
            Ok(below)
        }
    });
    (glued, report)
}

fn check_gluing(base: &Density, patch: &Density) -> GlueReport {
    let mut report = GlueReport::default();
    for xi in patch.domain().boundary_samples(GLUE_SAMPLES) {
        if !base.domain().contains(xi) {
            continue;
        }
        let Ok(base_value) = base.eval(xi) else {
            continue;
        };
        let eta = 1e-7 * (1.0 + xi.norm());
        let mut limsup = f64::NEG_INFINITY;
        for k in 0..8 {
            let probe = xi + Complex64::from_polar(eta, k as f64 * std::f64::consts::FRAC_PI_4);
            if patch.domain().contains(probe) {
                match patch.eval(probe) {
                    Ok(v) => limsup = limsup.max(v),
                    Err(_) => limsup = f64::INFINITY,
                }
            }
        }
        if limsup == f64::NEG_INFINITY {
            continue;
        }
        report.samples_checked += 1;
        let excess = limsup - base_value;
        report.max_excess = if report.samples_checked == 1 {
            excess
        } else {
            report.max_excess.max(excess)
        };
        if excess > 1e-6 * base_value.abs().max(1.0) {
            report.violations += 1;
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{FnMap, Mobius};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hyperbolic_disk() -> Density {
        Density::closed_form(DomainSpec::unit_disk(), "disk", |z| 2.0 / (1.0 - z.norm_sqr()))
    }

    #[test]
    fn disk_density_at_origin_is_two() {
        assert_eq!(eval_density(&hyperbolic_disk(), c(0.0, 0.0)).unwrap(), 2.0);
    }

    #[test]
    fn evaluation_outside_domain_fails() {
        assert_eq!(
            hyperbolic_disk().eval(c(1.5, 0.0)),
            Err(MetricError::PointOutsideDomain(c(1.5, 0.0)))
        );
    }

    #[test]
    fn pullback_under_square_of_euclidean() {
        let flat = Density::constant(DomainSpec::Plane, 1.0);
        let square = Arc::new(FnMap::new(|z| z * z).with_derivative(|z| 2.0 * z));
        let pb = pullback(&flat, square, DomainSpec::Plane);
        let z = c(0.3, -0.8);
        assert!((pb.eval(z).unwrap() - 2.0 * z.norm()).abs() < 1e-15);
    }

    #[test]
    fn pullback_reports_escape() {
        let shift = Arc::new(Mobius::new(c(1.0, 0.0), c(0.9, 0.0), c(0.0, 0.0), c(1.0, 0.0)));
        let pb = pullback(&hyperbolic_disk(), shift, DomainSpec::unit_disk());
        assert!(matches!(
            pb.eval(c(0.5, 0.0)),
            Err(MetricError::ImageEscapesDomain { .. })
        ));
    }

    #[test]
    fn curvature_of_constant_is_zero() {
        let flat = Density::constant(DomainSpec::unit_disk(), 3.0);
        let k = curvature_estimate(&flat, c(0.1, 0.2), 1e-3).unwrap();
        assert!(k.abs() < 1e-9);
    }

    #[test]
    fn curvature_stencil_must_fit() {
        let err = curvature_estimate(&hyperbolic_disk(), c(0.9995, 0.0), 1e-3).unwrap_err();
        assert_eq!(err, MetricError::StencilOutsideDomain(c(0.9995, 0.0)));
    }

    #[test]
    fn glue_with_smaller_patch_keeps_base() {
        let base = Density::constant(DomainSpec::unit_disk(), 2.0);
        let patch = Density::constant(
            DomainSpec::Disk {
                center: c(0.0, 0.0),
                radius: 0.5,
            },
            1.0,
        );
        let (glued, report) = glue_max(&base, &patch);
        assert_eq!(report.violations, 0);
        assert_eq!(glued.eval(c(0.1, 0.0)).unwrap(), 2.0);
    }

    #[test]
    fn glue_two_constants_takes_larger_on_patch() {
        let base = Density::constant(DomainSpec::unit_disk(), 1.0);
        let patch = Density::constant(
            DomainSpec::Disk {
                center: c(0.0, 0.0),
                radius: 0.5,
            },
            2.0,
        );
        let (glued, report) = glue_max(&base, &patch);
        // c1 < c2 violates the boundary condition; it is reported, not fatal
        assert_eq!(report.violations, report.samples_checked);
        assert_eq!(glued.eval(c(0.1, 0.0)).unwrap(), 2.0);
        assert_eq!(glued.eval(c(0.7, 0.0)).unwrap(), 1.0);
    }
}
