//! Planar domains on which densities live.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{MetricError, Result};

/// Points closer than this to a boundary component or puncture are rejected.
pub const BOUNDARY_EPS: f64 = 1e-12;

/// Axis-aligned rectangle `[x_min, x_max] x [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl Rect {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Self {
        Rect {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn around(center: Complex64, half_width: f64) -> Self {
        Rect::new(
            center.re - half_width,
            center.im - half_width,
            center.re + half_width,
            center.im + half_width,
        )
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x_min && z.re <= self.x_max && z.im >= self.y_min && z.im <= self.y_max
    }

    pub fn union(&self, other: &Rect) -> Rect {
        Rect::new(
            self.x_min.min(other.x_min),
            self.y_min.min(other.y_min),
            self.x_max.max(other.x_max),
            self.y_max.max(other.y_max),
        )
    }
}

/// A closed round disk, used for holes and cover disks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundDisk {
    pub center: Complex64,
    pub radius: f64,
}

impl RoundDisk {
    pub fn new(center: Complex64, radius: f64) -> Self {
        RoundDisk { center, radius }
    }
}

/// Geometric description of a planar domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainSpec {
    /// The whole plane; only used for euclidean test densities.
    Plane,
    Disk {
        center: Complex64,
        radius: f64,
    },
    PuncturedDisk {
        center: Complex64,
        radius: f64,
    },
    Annulus {
        center: Complex64,
        inner: f64,
        outer: f64,
    },
    /// `{ |z - center| > radius }`.
    ExteriorDisk {
        center: Complex64,
        radius: f64,
    },
    /// The plane punctured at 0 and 1.
    TwicePuncturedPlane,
    PuncturedPlaneSet {
        points: Vec<Complex64>,
    },
    /// An open disk with finitely many closed round holes removed.
    DiskMinusHoles {
        outer: RoundDisk,
        holes: Vec<RoundDisk>,
    },
}

impl DomainSpec {
    pub fn unit_disk() -> Self {
        DomainSpec::Disk {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    pub fn punctured_unit_disk() -> Self {
        DomainSpec::PuncturedDisk {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
        }
    }

    /// Checks the parameter invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        let positive = |r: f64, what: &str| -> Result<()> {
            if r.is_finite() && r > 0.0 {
                Ok(())
            } else {
                Err(MetricError::InvalidParameters(format!(
                    "{what} must be positive and finite, got {r}"
                )))
            }
        };
        let finite = |z: Complex64| -> Result<()> {
            if z.re.is_finite() && z.im.is_finite() {
                Ok(())
            } else {
                Err(MetricError::InvalidParameters(format!(
                    "non-finite point {z}"
                )))
            }
        };
        match self {
            DomainSpec::Plane | DomainSpec::TwicePuncturedPlane => Ok(()),
            DomainSpec::Disk { center, radius }
            | DomainSpec::PuncturedDisk { center, radius }
            | DomainSpec::ExteriorDisk { center, radius } => {
                finite(*center)?;
                positive(*radius, "radius")
            }
            DomainSpec::Annulus {
                center,
                inner,
                outer,
            } => {
                finite(*center)?;
                positive(*inner, "inner radius")?;
                positive(*outer, "outer radius")?;
                if inner >= outer {
                    return Err(MetricError::InvalidParameters(format!(
                        "annulus needs inner < outer, got {inner} >= {outer}"
                    )));
                }
                Ok(())
            }
            DomainSpec::PuncturedPlaneSet { points } => {
                for p in points {
                    finite(*p)?;
                }
                for (i, a) in points.iter().enumerate() {
                    for b in &points[i + 1..] {
                        if (a - b).norm() == 0.0 {
                            return Err(MetricError::InvalidParameters(format!(
                                "repeated puncture {a}"
                            )));
                        }
                    }
                }
                Ok(())
            }
            DomainSpec::DiskMinusHoles { outer, holes } => {
                finite(outer.center)?;
                positive(outer.radius, "outer radius")?;
                for (i, hole) in holes.iter().enumerate() {
                    finite(hole.center)?;
                    positive(hole.radius, "hole radius")?;
                    if (hole.center - outer.center).norm() + hole.radius >= outer.radius {
                        return Err(MetricError::InvalidParameters(format!(
                            "hole {i} is not strictly inside the outer disk"
                        )));
                    }
                    for (j, other) in holes.iter().enumerate().skip(i + 1) {
                        if (hole.center - other.center).norm() <= hole.radius + other.radius {
                            return Err(MetricError::InvalidParameters(format!(
                                "holes {i} and {j} intersect"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Whether a puncture set is large enough to carry a hyperbolic metric.
    pub fn is_hyperbolic(&self) -> bool {
        match self {
            DomainSpec::Plane => false,
            DomainSpec::PuncturedPlaneSet { points } => points.len() >= 2,
            _ => true,
        }
    }

    /// Euclidean distance from `z` to the boundary (punctures included).
    /// Negative or zero outside the domain; `+inf` for the plane.
    pub fn boundary_distance(&self, z: Complex64) -> f64 {
        match self {
            DomainSpec::Plane => f64::INFINITY,
            DomainSpec::Disk { center, radius } => radius - (z - center).norm(),
            DomainSpec::PuncturedDisk { center, radius } => {
                let r = (z - center).norm();
                (radius - r).min(r)
            }
            DomainSpec::Annulus {
                center,
                inner,
                outer,
            } => {
                let r = (z - center).norm();
                (outer - r).min(r - inner)
            }
            DomainSpec::ExteriorDisk { center, radius } => (z - center).norm() - radius,
            DomainSpec::TwicePuncturedPlane => z.norm().min((z - 1.0).norm()),
            DomainSpec::PuncturedPlaneSet { points } => points
                .iter()
                .map(|p| (z - p).norm())
                .fold(f64::INFINITY, f64::min),
            DomainSpec::DiskMinusHoles { outer, holes } => holes.iter().fold(
                outer.radius - (z - outer.center).norm(),
                |acc, hole| acc.min((z - hole.center).norm() - hole.radius),
            ),
        }
    }

    /// Strict membership with the [`BOUNDARY_EPS`] exclusion zone.
    pub fn contains(&self, z: Complex64) -> bool {
        z.re.is_finite() && z.im.is_finite() && self.boundary_distance(z) > BOUNDARY_EPS
    }

    pub fn bounding_box(&self) -> Option<Rect> {
        match self {
            DomainSpec::Disk { center, radius } | DomainSpec::PuncturedDisk { center, radius } => {
                Some(Rect::around(*center, *radius))
            }
            DomainSpec::Annulus { center, outer, .. } => Some(Rect::around(*center, *outer)),
            DomainSpec::DiskMinusHoles { outer, .. } => {
                Some(Rect::around(outer.center, outer.radius))
            }
            _ => None,
        }
    }

    /// Round holes of a bounded multiply connected domain, if it has that shape.
    pub fn round_holes(&self) -> Option<(RoundDisk, Vec<RoundDisk>)> {
        match self {
            DomainSpec::Disk { center, radius } => Some((RoundDisk::new(*center, *radius), vec![])),
            DomainSpec::Annulus {
                center,
                inner,
                outer,
            } => Some((
                RoundDisk::new(*center, *outer),
                vec![RoundDisk::new(*center, *inner)],
            )),
            DomainSpec::DiskMinusHoles { outer, holes } => Some((*outer, holes.clone())),
            _ => None,
        }
    }

    /// Isolated boundary points.
    pub fn punctures(&self) -> Vec<Complex64> {
        match self {
            DomainSpec::PuncturedDisk { center, .. } => vec![*center],
            DomainSpec::TwicePuncturedPlane => {
                vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            }
            DomainSpec::PuncturedPlaneSet { points } => points.clone(),
            _ => vec![],
        }
    }

    /// Points on the finite boundary: `n` per boundary circle plus the punctures.
    pub fn boundary_samples(&self, n: usize) -> Vec<Complex64> {
        let circle = |c: Complex64, r: f64| -> Vec<Complex64> {
            (0..n)
                .map(|k| c + Complex64::from_polar(r, 2.0 * PI * (k as f64 + 0.5) / n as f64))
                .collect()
        };
        match self {
            DomainSpec::Plane => vec![],
            DomainSpec::Disk { center, radius } | DomainSpec::ExteriorDisk { center, radius } => {
                circle(*center, *radius)
            }
            DomainSpec::PuncturedDisk { center, radius } => {
                let mut pts = circle(*center, *radius);
                pts.push(*center);
                pts
            }
            DomainSpec::Annulus {
                center,
                inner,
                outer,
            } => {
                let mut pts = circle(*center, *outer);
                pts.extend(circle(*center, *inner));
                pts
            }
            DomainSpec::TwicePuncturedPlane => {
                vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            }
            DomainSpec::PuncturedPlaneSet { points } => points.clone(),
            DomainSpec::DiskMinusHoles { outer, holes } => {
                let mut pts = circle(outer.center, outer.radius);
                for hole in holes {
                    pts.extend(circle(hole.center, hole.radius));
                }
                pts
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn annulus_membership_and_distance() {
        let a = DomainSpec::Annulus {
            center: c(0.0, 0.0),
            inner: 0.2,
            outer: 1.0,
        };
        assert!(a.contains(c(0.5, 0.0)));
        assert!(!a.contains(c(0.1, 0.0)));
        assert!(!a.contains(c(1.0, 0.0)));
        assert!((a.boundary_distance(c(0.0, 0.5)) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn puncture_exclusion_zone() {
        let d = DomainSpec::TwicePuncturedPlane;
        assert!(!d.contains(c(1e-13, 0.0)));
        assert!(d.contains(c(1e-11, 0.0)));
        assert!(!d.contains(c(1.0, 0.0)));
    }

    #[test]
    fn invalid_annulus_rejected() {
        let a = DomainSpec::Annulus {
            center: c(0.0, 0.0),
            inner: 1.0,
            outer: 0.5,
        };
        assert!(matches!(a.validate(), Err(MetricError::InvalidParameters(_))));
    }

    #[test]
    fn overlapping_holes_rejected() {
        let d = DomainSpec::DiskMinusHoles {
            outer: RoundDisk::new(c(0.0, 0.0), 1.0),
            holes: vec![
                RoundDisk::new(c(0.2, 0.0), 0.15),
                RoundDisk::new(c(0.4, 0.0), 0.1),
            ],
        };
        assert!(d.validate().is_err());
        let ok = DomainSpec::DiskMinusHoles {
            outer: RoundDisk::new(c(0.0, 0.0), 1.0),
            holes: vec![
                RoundDisk::new(c(-0.4, 0.0), 0.15),
                RoundDisk::new(c(0.4, 0.0), 0.1),
            ],
        };
        assert!(ok.validate().is_ok());
    }

    #[test]
    fn single_puncture_is_not_hyperbolic() {
        let one = DomainSpec::PuncturedPlaneSet {
            points: vec![c(0.0, 0.0)],
        };
        assert!(!one.is_hyperbolic());
        assert!(DomainSpec::TwicePuncturedPlane.is_hyperbolic());
    }
}
