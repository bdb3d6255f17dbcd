//! Closed-form densities: the radially symmetric curvature −1 metrics,
//! conical comparison densities and the Minda–Schober / Robinson metrics of
//! curvature at most −1.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::domain::DomainSpec;
use crate::error::{MetricError, Result};

const ORIGIN: Complex64 = Complex64::new(0.0, 0.0);

/// Radially symmetric metrics of constant curvature −1 centered at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RadialMetricFamily {
    /// `2R / (R^2 - |z|^2)` on `|z| < R`.
    Disk { radius: f64 },
    /// `1 / (|z| log(R/|z|))` on `0 < |z| < R`.
    PuncturedDiskLog { radius: f64 },
    /// `2 a R^a |z|^(a-1) / (R^(2a) - |z|^(2a))` on `0 < |z| < R`, `a != 1`.
    PuncturedDiskAlpha { radius: f64, alpha: f64 },
    /// `(pi/L) / (|z| sin(pi log(R/|z|) / L))`, `L = log(R/r)`, on `r < |z| < R`.
    Annulus { inner: f64, outer: f64 },
    /// `1 / (|z| log(|z|/R))` on `|z| > R`.
    ExteriorLog { radius: f64 },
    /// `2 a R^a |z|^(a-1) / (|z|^(2a) - R^(2a))` on `|z| > R`.
    ExteriorAlpha { radius: f64, alpha: f64 },
}

impl RadialMetricFamily {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(MetricError::InvalidParameters(format!(
                    "{what} must be positive and finite, got {v}"
                )))
            }
        };
        match *self {
            RadialMetricFamily::Disk { radius }
            | RadialMetricFamily::PuncturedDiskLog { radius }
            | RadialMetricFamily::ExteriorLog { radius } => positive(radius, "radius"),
            RadialMetricFamily::PuncturedDiskAlpha { radius, alpha } => {
                positive(radius, "radius")?;
                positive(alpha, "alpha")?;
                if alpha == 1.0 {
                    return Err(MetricError::InvalidParameters(
                        "alpha = 1 is excluded from the power family; use the logarithmic family"
                            .into(),
                    ));
                }
                Ok(())
            }
            RadialMetricFamily::ExteriorAlpha { radius, alpha } => {
                positive(radius, "radius")?;
                positive(alpha, "alpha")
            }
            RadialMetricFamily::Annulus { inner, outer } => {
                positive(inner, "inner radius")?;
                positive(outer, "outer radius")?;
                if inner >= outer {
                    return Err(MetricError::InvalidParameters(format!(
                        "annulus needs inner < outer, got {inner} >= {outer}"
                    )));
                }
                Ok(())
            }
        }
    }

    /// The domain of the metric when centered at `center`.
    pub fn domain(&self, center: Complex64) -> DomainSpec {
        match *self {
            RadialMetricFamily::Disk { radius } => DomainSpec::Disk { center, radius },
            RadialMetricFamily::PuncturedDiskLog { radius }
            | RadialMetricFamily::PuncturedDiskAlpha { radius, .. } => {
                DomainSpec::PuncturedDisk { center, radius }
            }
            RadialMetricFamily::Annulus { inner, outer } => DomainSpec::Annulus {
                center,
                inner,
                outer,
            },
            RadialMetricFamily::ExteriorLog { radius }
            | RadialMetricFamily::ExteriorAlpha { radius, .. } => {
                DomainSpec::ExteriorDisk { center, radius }
            }
        }
    }

    /// The density as a function of `r = |z - center|`.
    pub fn profile(&self, r: f64) -> f64 {
        match *self {
            RadialMetricFamily::Disk { radius } => 2.0 * radius / (radius * radius - r * r),
            RadialMetricFamily::PuncturedDiskLog { radius } => 1.0 / (r * (radius / r).ln()),
            RadialMetricFamily::PuncturedDiskAlpha { radius, alpha } => {
                2.0 * alpha * radius.powf(alpha) * r.powf(alpha - 1.0)
                    / (radius.powf(2.0 * alpha) - r.powf(2.0 * alpha))
            }
            RadialMetricFamily::Annulus { inner, outer } => {
                let modulus = (outer / inner).ln();
                (PI / modulus) / (r * (PI * (outer / r).ln() / modulus).sin())
            }
            RadialMetricFamily::ExteriorLog { radius } => 1.0 / (r * (r / radius).ln()),
            RadialMetricFamily::ExteriorAlpha { radius, alpha } => {
                2.0 * alpha * radius.powf(alpha) * r.powf(alpha - 1.0)
                    / (r.powf(2.0 * alpha) - radius.powf(2.0 * alpha))
            }
        }
    }

    fn label(&self) -> String {
        match *self {
            RadialMetricFamily::Disk { radius } => format!("disk R={radius}"),
            RadialMetricFamily::PuncturedDiskLog { radius } => format!("punctured disk R={radius}"),
            RadialMetricFamily::PuncturedDiskAlpha { radius, alpha } => {
                format!("punctured disk R={radius} alpha={alpha}")
            }
            RadialMetricFamily::Annulus { inner, outer } => format!("annulus r={inner} R={outer}"),
            RadialMetricFamily::ExteriorLog { radius } => format!("exterior R={radius}"),
            RadialMetricFamily::ExteriorAlpha { radius, alpha } => {
                format!("exterior R={radius} alpha={alpha}")
            }
        }
    }
}

/// The closed-form metric of `fam`, centered at the origin.
pub fn radial_density(fam: RadialMetricFamily) -> Result<Density> {
    radial_density_at(fam, ORIGIN)
}

/// The closed-form metric of `fam`, centered at `center`.
pub fn radial_density_at(fam: RadialMetricFamily, center: Complex64) -> Result<Density> {
    fam.validate()?;
    Ok(Density::closed_form(fam.domain(center), fam.label(), move |z| {
        fam.profile((z - center).norm())
    }))
}

/// `lambda_D(z) = 2 / (1 - |z|^2)`.
pub fn hyperbolic_disk() -> Density {
    Density::closed_form(DomainSpec::unit_disk(), "unit disk", |z| 2.0 / (1.0 - z.norm_sqr()))
}

/// `1 / (|z| log(1/|z|))` on the punctured unit disk.
pub fn hyperbolic_punctured_disk() -> Density {
    Density::closed_form(DomainSpec::punctured_unit_disk(), "punctured unit disk", |z| {
        let r = z.norm();
        1.0 / (r * (1.0 / r).ln())
    })
}

/// `2(1-a) |z|^(-a) / (1 - |z|^(2(1-a)))` on the punctured unit disk, `a < 1`:
/// the upper bound for SK-metrics with a conical singularity of order `a` at 0.
pub fn conical_bound_density(alpha: f64) -> Result<Density> {
    if !(alpha.is_finite() && alpha < 1.0) {
        return Err(MetricError::InvalidParameters(format!(
            "order must be < 1, got {alpha}"
        )));
    }
    Ok(Density::closed_form(
        DomainSpec::punctured_unit_disk(),
        format!("conical bound alpha={alpha}"),
        move |z| {
            let r = z.norm();
            2.0 * (1.0 - alpha) * r.powf(-alpha) / (1.0 - r.powf(2.0 * (1.0 - alpha)))
        },
    ))
}

/// The Minda–Schober density
/// `eps sqrt(1+|z|^(1/3)) / |z|^(5/6) * sqrt(1+|z-1|^(1/3)) / |z-1|^(5/6)` on the
/// plane punctured at 0 and 1.
pub fn minda_schober_density(eps: f64) -> Result<Density> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(MetricError::InvalidParameters(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    Ok(Density::closed_form(
        DomainSpec::TwicePuncturedPlane,
        format!("minda-schober eps={eps}"),
        move |z| {
            let a = z.norm();
            let b = (z - 1.0).norm();
            eps * (1.0 + a.cbrt()).sqrt() / a.powf(5.0 / 6.0) * (1.0 + b.cbrt()).sqrt()
                / b.powf(5.0 / 6.0)
        },
    ))
}

/// Exact curvature of the Minda–Schober density.
pub fn minda_schober_curvature(eps: f64, z: Complex64) -> f64 {
    let a = z.norm();
    let b = (z - 1.0).norm();
    let pa = 1.0 + a.cbrt();
    let pb = 1.0 + b.cbrt();
    let bracket = b.powf(5.0 / 3.0) / (pa.powi(3) * pb) + a.powf(5.0 / 3.0) / (pa * pb.powi(3));
    -bracket / (18.0 * eps * eps)
}

/// Checks `curvature <= -1` for the Minda–Schober density on `samples`.
pub fn curvature_bound_ok(eps: f64, samples: &[Complex64]) -> bool {
    samples
        .iter()
        .filter(|z| DomainSpec::TwicePuncturedPlane.contains(**z))
        .all(|z| minda_schober_curvature(eps, *z) <= -1.0)
}

/// Parameters of the Robinson density
/// `eps prod_j [1+|z-z_j|^delta]^((s-2)/((n-1) delta)) / |z-z_j|^(a_j)`.
///
/// `orders` has one more entry than `punctures`: the last order belongs to
/// the point at infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobinsonParams {
    pub punctures: Vec<Complex64>,
    pub orders: Vec<f64>,
    pub eps: f64,
    pub delta: f64,
}

impl RobinsonParams {
    pub fn validate(&self) -> Result<()> {
        if self.punctures.is_empty() || self.orders.len() != self.punctures.len() + 1 {
            return Err(MetricError::InvalidParameters(format!(
                "need n-1 >= 1 finite punctures and n orders, got {} and {}",
                self.punctures.len(),
                self.orders.len()
            )));
        }
        if let Some(a) = self.orders.iter().find(|a| !(a.is_finite() && **a < 1.0)) {
            return Err(MetricError::InvalidParameters(format!(
                "orders must be < 1, got {a}"
            )));
        }
        let s = self.total_order();
        if s <= 2.0 {
            return Err(MetricError::InvalidParameters(format!(
                "orders must sum to more than 2, got {s}"
            )));
        }
        if !(self.eps > 0.0 && self.delta > 0.0) {
            return Err(MetricError::InvalidParameters(
                "eps and delta must be positive".into(),
            ));
        }
        DomainSpec::PuncturedPlaneSet {
            points: self.punctures.clone(),
        }
        .validate()
    }

    pub fn total_order(&self) -> f64 {
        self.orders.iter().sum()
    }

    fn value(&self, z: Complex64) -> f64 {
        let n_finite = self.punctures.len() as f64;
        let exponent = (self.total_order() - 2.0) / (n_finite * self.delta);
        self.punctures
            .iter()
            .zip(&self.orders)
            .fold(self.eps, |acc, (p, a)| {
                let r = (z - p).norm();
                acc * (1.0 + r.powf(self.delta)).powf(exponent) / r.powf(*a)
            })
    }

    /// `|z - z_j|^(a_j) tau(z)`, bounded and positive near `z_j`.
    pub fn normalized_near(&self, j: usize, z: Complex64) -> f64 {
        (z - self.punctures[j]).norm().powf(self.orders[j]) * self.value(z)
    }

    /// `|z|^(2 - a_n) tau(z)`, bounded and positive near infinity.
    pub fn normalized_at_infinity(&self, z: Complex64) -> f64 {
        let a_n = self.orders[self.orders.len() - 1];
        z.norm().powf(2.0 - a_n) * self.value(z)
    }
}

/// The Robinson density on the plane punctured at `p.punctures`.
pub fn robinson_density(p: &RobinsonParams) -> Result<Density> {
    p.validate()?;
    let params = p.clone();
    Ok(Density::closed_form(
        DomainSpec::PuncturedPlaneSet {
            points: p.punctures.clone(),
        },
        "robinson",
        move |z| params.value(z),
    ))
}

/// Conical-singularity comparison data: finite punctures `z_1..z_(n-1)`,
/// orders `a_1..a_n` (the last one at infinity), and the radius `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConicalParams {
    pub punctures: Vec<Complex64>,
    pub orders: Vec<f64>,
    pub delta: f64,
}

impl ConicalParams {
    pub fn validate(&self) -> Result<()> {
        if self.orders.len() != self.punctures.len() + 1 {
            return Err(MetricError::InvalidParameters(format!(
                "need {} orders for {} finite punctures, got {}",
                self.punctures.len() + 1,
                self.punctures.len(),
                self.orders.len()
            )));
        }
        if let Some(a) = self.orders.iter().find(|a| !(a.is_finite() && **a <= 1.0)) {
            return Err(MetricError::InvalidParameters(format!(
                "orders must be <= 1, got {a}"
            )));
        }
        let s: f64 = self.orders.iter().sum();
        if s <= 2.0 {
            return Err(MetricError::InvalidParameters(format!(
                "orders must sum to more than 2, got {s}"
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(MetricError::InvalidParameters("delta must be positive".into()));
        }
        for (i, a) in self.punctures.iter().enumerate() {
            if a.norm() >= 1.0 / self.delta {
                return Err(MetricError::InvalidParameters(format!(
                    "puncture {a} does not satisfy |z| < 1/delta"
                )));
            }
            for b in &self.punctures[i + 1..] {
                if (a - b).norm() <= self.delta {
                    return Err(MetricError::InvalidParameters(format!(
                        "punctures {a} and {b} are not more than delta apart"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Density of the local model metric with a conical singularity of order
/// `alpha <= 1` at `center`, on the disk of radius `delta` about it.
pub fn conical_density_at(center: Complex64, alpha: f64, delta: f64) -> Density {
    let domain = if alpha <= 0.0 {
        DomainSpec::Disk {
            center,
            radius: delta,
        }
    } else {
        DomainSpec::PuncturedDisk {
            center,
            radius: delta,
        }
    };
    Density::closed_form(domain, format!("conical {alpha} at {center}"), move |z| {
        let r = (z - center).norm();
        if alpha < 1.0 {
            let e = 1.0 - alpha;
            2.0 * e * delta.powf(e) * r.powf(-alpha) / (delta.powf(2.0 * e) - r.powf(2.0 * e))
        } else {
            1.0 / (r * (delta / r).ln())
        }
    })
}

/// Local model metric with a conical singularity of order `alpha` at infinity,
/// defined on `|z| > 1/delta`.
pub fn conical_density_at_infinity(alpha: f64, delta: f64) -> Density {
    Density::closed_form(
        DomainSpec::ExteriorDisk {
            center: ORIGIN,
            radius: 1.0 / delta,
        },
        format!("conical {alpha} at infinity"),
        move |z| {
            let r = z.norm();
            if alpha < 1.0 {
                let e = 1.0 - alpha;
                2.0 * e * delta.powf(e) * r.powf(-alpha) / (delta.powf(2.0 * e) * r.powf(2.0 * e) - 1.0)
            } else {
                1.0 / (r * (delta * r).ln())
            }
        },
    )
}

/// The comparison densities `lambda_1, ..., lambda_n`; the last one lives near infinity.
pub fn conical_densities(p: &ConicalParams) -> Result<Vec<Density>> {
    p.validate()?;
    let mut out: Vec<Density> = p
        .punctures
        .iter()
        .zip(&p.orders)
        .map(|(z, a)| conical_density_at(*z, *a, p.delta))
        .collect();
    out.push(conical_density_at_infinity(p.orders[p.orders.len() - 1], p.delta));
    Ok(out)
}
