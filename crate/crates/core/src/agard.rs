//! The hyperbolic metric of the twice punctured plane `C \ {0, 1}`:
//!
//! `λ(z) = 1 / (π |z| |1 - z| Re[K(z) K(1 - conj z)])`,
//!
//! its developing map, the Hempel lower bound and the asymptotics at the punctures.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::domain::DomainSpec;
use crate::error::{MetricError, Result};
use crate::special::{elliptic_k, gamma};

/// Points closer than this to 0 or 1 are rejected.
pub const PUNCTURE_EPS: f64 = 1e-10;

fn check_point(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(MetricError::InvalidParameters(format!("non-finite point {z}")));
    }
    if z.norm() < PUNCTURE_EPS || (z - 1.0).norm() < PUNCTURE_EPS {
        return Err(MetricError::PuncturePoint(z));
    }
    Ok(())
}

/// The formula itself, for `w` in the lens `{|w| <= 1, |w - 1| <= 1}` where
/// neither `K` argument meets the cut.
fn lens_density(w: Complex64) -> Result<f64> {
    let one = Complex64::new(1.0, 0.0);
    let product = elliptic_k(w)? * elliptic_k(one - w.conj())?;
    Ok(1.0 / (PI * w.norm() * (one - w).norm() * product.re))
}

/// Density of the hyperbolic metric of `C \ {0, 1}` at `z`.
///
/// Points outside the lens `{|z| <= 1, |z - 1| <= 1}` are first moved into it
/// with `z -> 1/z` (when `Re z >= 1/2`) or `z -> 1/(1 - z)` (when
/// `Re z <= 1/2`), using the invariance of the metric under these maps.
pub fn agard_density(z: Complex64) -> Result<f64> {
    check_point(z)?;
    let one = Complex64::new(1.0, 0.0);
    let in_lens = z.norm() <= 1.0 && (z - 1.0).norm() <= 1.0;
    if in_lens {
        lens_density(z)
    } else if z.re >= 0.5 {
        Ok(lens_density(one / z)? / z.norm_sqr())
    } else {
        Ok(lens_density(one / (one - z))? / (one - z).norm_sqr())
    }
}

/// [`agard_density`] as a [`Density`] on the twice punctured plane.
pub fn agard_metric() -> Density {
    Density::new(
        DomainSpec::TwicePuncturedPlane,
        crate::density::DensityKind::ClosedForm,
        "twice punctured plane",
        agard_density,
    )
}

/// `λ(-1) = Γ(3/4)^4 / π^2`.
pub fn agard_value_at_minus_one() -> f64 {
    gamma(0.75).powi(4) / (PI * PI)
}

fn check_principal(z: Complex64) -> Result<()> {
    check_point(z)?;
    if z.im == 0.0 && (z.re <= 0.0 || z.re >= 1.0) {
        return Err(MetricError::OutsidePrincipalRegion(z));
    }
    Ok(())
}

/// The developing map `F(z) = (K(1-z) - K(z)) / (K(1-z) + K(z))` on the slit
/// plane `C \ ((-inf, 0] ∪ [1, inf))`, with `F(1/2) = 0` and `|F| < 1`.
pub fn developing_map(z: Complex64) -> Result<Complex64> {
    check_principal(z)?;
    let a = elliptic_k(Complex64::new(1.0, 0.0) - z)?;
    let b = elliptic_k(z)?;
    Ok((a - b) / (a + b))
}

/// `F'(z)` by a central difference of step `step` along the real axis.
pub fn developing_map_derivative(z: Complex64, step: f64) -> Result<Complex64> {
    let dz = Complex64::new(step, 0.0);
    Ok((developing_map(z + dz)? - developing_map(z - dz)?) / (2.0 * step))
}

/// The constant `log R = 1 / min_{|z|=1} λ(z)` of the Hempel bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HempelConstant {
    pub log_r: f64,
}

impl HempelConstant {
    /// `log R = π^2 / Γ(3/4)^4 ≈ 4.37688`.
    pub fn exact() -> Self {
        HempelConstant {
            log_r: 1.0 / agard_value_at_minus_one(),
        }
    }

    /// `log R` from a numerical minimization over the unit circle.
    pub fn from_minimum() -> Result<Self> {
        let (_, value) = min_on_unit_circle()?;
        Ok(HempelConstant { log_r: 1.0 / value })
    }
}

/// `1 / (|z| (log R + |log |z||))`, a lower bound for [`agard_density`].
pub fn hempel_bound(z: Complex64, c: HempelConstant) -> Result<f64> {
    check_point(z)?;
    let r = z.norm();
    Ok(1.0 / (r * (c.log_r + r.ln().abs())))
}

const GOLDEN_TOL: f64 = 1e-10;

/// Golden-section minimization of `θ -> λ(e^{iθ})` over `(0, 2π)`;
/// returns `(θ_min, λ_min)`.
pub fn min_on_unit_circle() -> Result<(f64, f64)> {
    let f = |t: f64| agard_density(Complex64::from_polar(1.0, t));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.1, 2.0 * PI - 0.1);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > GOLDEN_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}

/// One row of the puncture asymptotics table at `z = -r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticRow {
    pub radius: f64,
    /// `r log(1/r) λ(-r)`, tending to 1 as `r -> 0`.
    pub value: f64,
    /// `log(1/r) / log(R/r)`, from the Hempel bound.
    pub lower: f64,
    /// 1, from comparison with the punctured unit disk.
    pub upper: f64,
}

impl AsymptoticRow {
    pub fn within_bounds(&self) -> bool {
        self.lower <= self.value && self.value <= self.upper
    }
}

/// `(r log(1/r)) λ(-r)` for each radius `0 < r < 1`, with its sandwich bounds.
pub fn puncture_asymptotics_check(radii: &[f64]) -> Result<Vec<AsymptoticRow>> {
    let log_r = HempelConstant::exact().log_r;
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0 && r < 1.0) {
                return Err(MetricError::InvalidParameters(format!(
                    "radius must lie in (0, 1), got {r}"
                )));
            }
            let l = (1.0 / r).ln();
            Ok(AsymptoticRow {
                radius: r,
                value: r * l * agard_density(Complex64::new(-r, 0.0))?,
                lower: l / (log_r + l),
                upper: 1.0,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn value_at_minus_one() {
        let v = agard_density(c(-1.0, 0.0)).unwrap();
        assert!((v - 0.228_473_29).abs() < 1e-8);
        assert!((v - agard_value_at_minus_one()).abs() < 1e-13);
    }

    #[test]
    fn quarter_identity() {
        let ratio = agard_density(c(0.5, 0.0)).unwrap() / agard_density(c(-1.0, 0.0)).unwrap();
        assert!((ratio - 4.0).abs() < 1e-12);
    }

    #[test]
    fn punctures_rejected() {
        assert_eq!(agard_density(c(0.0, 0.0)), Err(MetricError::PuncturePoint(c(0.0, 0.0))));
        assert!(agard_density(c(1.0 + 1e-11, 0.0)).is_err());
    }

    #[test]
    fn normalization_regions_agree_with_direct_formula() {
        // on the slit plane the formula can be evaluated without normalization
        for z in [c(2.0, 1.0), c(-0.7, 0.4), c(0.3, -2.5), c(5.0, -0.01)] {
            let one = c(1.0, 0.0);
            let product = elliptic_k(z).unwrap() * elliptic_k(one - z.conj()).unwrap();
            let direct = 1.0 / (PI * z.norm() * (one - z).norm() * product.re);
            let normalized = agard_density(z).unwrap();
            assert!((direct - normalized).abs() < 1e-12 * direct, "{z}");
        }
    }

    #[test]
    fn developing_map_basics() {
        assert!(developing_map(c(0.5, 0.0)).unwrap().norm() < 1e-15);
        let f = developing_map(c(0.3, 0.0)).unwrap();
        assert!(f.im.abs() < 1e-15 && f.re.abs() < 1.0);
        assert_eq!(
            developing_map(c(-0.5, 0.0)),
            Err(MetricError::OutsidePrincipalRegion(c(-0.5, 0.0)))
        );
    }

    #[test]
    fn developing_map_reproduces_density() {
        for z in [c(0.2, 0.3), c(-1.0, 0.5), c(2.0, -1.0), c(0.7, 0.05)] {
            let f = developing_map(z).unwrap();
            let df = developing_map_derivative(z, 1e-6).unwrap();
            let lambda = 2.0 * df.norm() / (1.0 - f.norm_sqr());
            let exact = agard_density(z).unwrap();
            assert!((lambda - exact).abs() < 1e-5 * exact, "{z}");
        }
    }

    #[test]
    fn hempel_constant_and_symmetry() {
        let c0 = HempelConstant::exact();
        assert!((c0.log_r - 4.376_88).abs() < 1e-5);
        assert!((hempel_bound(c(-1.0, 0.0), c0).unwrap() - agard_value_at_minus_one()).abs() < 1e-15);
        let z = c(3.0, 4.0);
        let a = hempel_bound(z, c0).unwrap();
        let b = hempel_bound(c(1.0, 0.0) / z, c0).unwrap();
        // |log|z|| is symmetric; the 1/|z| factor is not
        assert!((a * z.norm() - b / z.norm()).abs() < 1e-15);
    }

    #[test]
    fn minimum_on_circle() {
        let (t, v) = min_on_unit_circle().unwrap();
        assert!((t - PI).abs() < 1e-6);
        assert!((v - 0.228_473_29).abs() < 1e-7);
    }

    #[test]
    fn asymptotic_rows_increase() {
        let rows = puncture_asymptotics_check(&[1e-3, 1e-8]).unwrap();
        assert!(rows.iter().all(|r| r.within_bounds()));
        assert!(rows[0].value > 0.61 && rows[1].value > 0.808);
        assert!(rows[1].value > rows[0].value);
    }

    #[test]
    fn continuous_across_real_rays() {
        for x in [-3.0, -1.0, -0.2, 1.3, 2.0, 7.0] {
            let on = agard_density(c(x, 0.0)).unwrap();
            for eps in [1e-7, -1e-7] {
                let near = agard_density(c(x, eps)).unwrap();
                assert!((near - on).abs() < 1e-6 * on, "{x} {eps}: {near} vs {on}");
            }
        }
    }
}
