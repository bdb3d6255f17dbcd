//! Piecewise linear paths and their lengths with respect to a density.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{MetricError, Result};

/// A polyline `z_0 -> z_1 -> ... -> z_m`, `m >= 1`.
///
/// Serializes as a JSON array of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct PathPolyline {
    vertices: Vec<Complex64>,
}

impl PathPolyline {
    /// Requires at least two vertices, all finite, consecutive ones distinct.
    pub fn new(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(MetricError::InvalidParameters(
                "a path needs at least two vertices".into(),
            ));
        }
        for v in &vertices {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(MetricError::InvalidParameters(format!("non-finite vertex {v}")));
            }
        }
        for pair in vertices.windows(2) {
            if pair[0] == pair[1] {
                return Err(MetricError::CoincidentPoints(pair[0]));
            }
        }
        Ok(PathPolyline { vertices })
    }

    pub fn segment(a: Complex64, b: Complex64) -> Result<Self> {
        PathPolyline::new(vec![a, b])
    }

    /// `n` equal pieces of the segment `[a, b]`.
    pub fn subdivided_segment(a: Complex64, b: Complex64, n: usize) -> Result<Self> {
        let n = n.max(1);
        PathPolyline::new((0..=n).map(|k| a + (b - a) * (k as f64 / n as f64)).collect())
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        self.vertices[self.vertices.len() - 1]
    }

    pub fn euclidean_length(&self) -> f64 {
        self.vertices.windows(2).map(|p| (p[1] - p[0]).norm()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl TryFrom<Vec<[f64; 2]>> for PathPolyline {
    type Error = MetricError;

    fn try_from(pairs: Vec<[f64; 2]>) -> Result<Self> {
        PathPolyline::new(pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl From<PathPolyline> for Vec<[f64; 2]> {
    fn from(path: PathPolyline) -> Self {
        path.vertices.into_iter().map(|z| [z.re, z.im]).collect()
    }
}

/// Relative change between successive refinements at which a segment integral is accepted.
pub const LENGTH_REL_TOL: f64 = 1e-10;
const MAX_DOUBLINGS: u32 = 22;

/// `lambda`-length of the path: composite Simpson quadrature on each segment,
/// doubling the subdivision until successive estimates agree to
/// [`LENGTH_REL_TOL`].
pub fn path_length(d: &Density, p: &PathPolyline) -> Result<f64> {
    p.vertices
        .windows(2)
        .map(|pair| segment_length(d, pair[0], pair[1]))
        .sum()
}

fn eval_on_path(d: &Density, z: Complex64) -> Result<f64> {
    d.eval(z).map_err(|err| match err {
        MetricError::PointOutsideDomain(z) => MetricError::PathExitsDomain(z),
        other => other,
    })
}

fn segment_length(d: &Density, a: Complex64, b: Complex64) -> Result<f64> {
    let delta = b - a;
    let speed = delta.norm();
    let at = |t: f64| eval_on_path(d, a + delta * t);
    let mut n = 8usize;
    let mut values = Vec::with_capacity(n + 1);
    for k in 0..=n {
        values.push(at(k as f64 / n as f64)?);
    }
    let simpson = |vals: &[f64]| {
        let m = vals.len() - 1;
        let mut s = vals[0] + vals[m];
        for (k, v) in vals.iter().enumerate().take(m).skip(1) {
            s += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        s / (3.0 * m as f64)
    };
    let mut previous = simpson(&values);
    for _ in 0..MAX_DOUBLINGS {
        let mut refined = Vec::with_capacity(2 * n + 1);
        for k in 0..n {
            refined.push(values[k]);
            refined.push(at((2 * k + 1) as f64 / (2 * n) as f64)?);
        }
        refined.push(values[n]);
        values = refined;
        n *= 2;
        let current = simpson(&values);
        if (current - previous).abs() <= LENGTH_REL_TOL * current.abs() {
            return Ok((current + (current - previous) / 15.0) * speed);
        }
        previous = current;
    }
    log::warn!("segment {a} -> {b}: length quadrature did not reach tolerance");
    Ok(previous * speed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hyperbolic_disk() -> Density {
        Density::closed_form(DomainSpec::unit_disk(), "disk", |z| 2.0 / (1.0 - z.norm_sqr()))
    }

    #[test]
    fn radial_segment_in_disk() {
        let p = PathPolyline::segment(c(0.0, 0.0), c(0.5, 0.0)).unwrap();
        let l = path_length(&hyperbolic_disk(), &p).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-8);
    }

    #[test]
    fn euclidean_length_for_unit_density() {
        let flat = Density::constant(DomainSpec::Plane, 1.0);
        let p = PathPolyline::new(vec![c(0.0, 0.0), c(3.0, 0.0), c(3.0, 4.0)]).unwrap();
        assert!((path_length(&flat, &p).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn exiting_path_is_reported() {
        let p = PathPolyline::segment(c(0.0, 0.0), c(1.5, 0.0)).unwrap();
        assert!(matches!(
            path_length(&hyperbolic_disk(), &p),
            Err(MetricError::PathExitsDomain(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let p = PathPolyline::new(vec![c(0.1, -0.2), c(0.3, 0.4)]).unwrap();
        let text = p.to_json().unwrap();
        assert_eq!(text, "[[0.1,-0.2],[0.3,0.4]]");
        assert_eq!(PathPolyline::from_json(&text).unwrap(), p);
        assert!(PathPolyline::from_json("[[0,0]]").is_err());
    }

    #[test]
    fn repeated_vertex_rejected() {
        assert!(PathPolyline::new(vec![c(0.0, 0.0), c(0.0, 0.0)]).is_err());
    }
}
