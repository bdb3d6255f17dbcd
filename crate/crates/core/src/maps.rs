//! Holomorphic maps used for pullbacks and Schwarzian derivatives.

use std::sync::Arc;

use num_complex::Complex64;

/// A holomorphic map given by its values and (where available) its derivatives.
///
/// Missing derivatives fall back to fourth-order central differences along the
/// real direction, which is legitimate for holomorphic functions.
pub trait HolomorphicMap: Send + Sync {
    fn value(&self, z: Complex64) -> Complex64;

    fn derivative(&self, z: Complex64) -> Complex64 {
        central_difference(|w| self.value(w), z, fd_step(z))
    }

    fn second_derivative(&self, _z: Complex64) -> Option<Complex64> {
        None
    }

    fn third_derivative(&self, _z: Complex64) -> Option<Complex64> {
        None
    }
}

fn fd_step(z: Complex64) -> f64 {
    1e-3 * (1.0 + z.norm())
}

/// Fourth-order central difference of a holomorphic function along the real axis.
pub fn central_difference<F: Fn(Complex64) -> Complex64>(f: F, z: Complex64, h: f64) -> Complex64 {
    let hc = Complex64::new(h, 0.0);
    (f(z - 2.0 * hc) - 8.0 * f(z - hc) + 8.0 * f(z + hc) - f(z + 2.0 * hc)) / (12.0 * h)
}

/// `(a z + b) / (c z + d)` with `ad - bc != 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Mobius {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mobius { a, b, c, d }
    }

    /// The disk automorphism `e^{i phi} (z - a) / (1 - conj(a) z)`, `|a| < 1`.
    pub fn disk_automorphism(a: Complex64, phi: f64) -> Self {
        let rot = Complex64::from_polar(1.0, phi);
        Mobius::new(rot, -rot * a, -a.conj(), Complex64::new(1.0, 0.0))
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn compose(&self, inner: &Mobius) -> Mobius {
        Mobius::new(
            self.a * inner.a + self.b * inner.c,
            self.a * inner.b + self.b * inner.d,
            self.c * inner.a + self.d * inner.c,
            self.c * inner.b + self.d * inner.d,
        )
    }
}

impl HolomorphicMap for Mobius {
    fn value(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        let den = self.c * z + self.d;
        self.determinant() / (den * den)
    }

    fn second_derivative(&self, z: Complex64) -> Option<Complex64> {
        let den = self.c * z + self.d;
        Some(-2.0 * self.determinant() * self.c / (den * den * den))
    }

    fn third_derivative(&self, z: Complex64) -> Option<Complex64> {
        let den = self.c * z + self.d;
        Some(6.0 * self.determinant() * self.c * self.c / (den * den * den * den))
    }
}

/// `z^n` for a nonzero integer `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power(pub i32);

impl HolomorphicMap for Power {
    fn value(&self, z: Complex64) -> Complex64 {
        z.powi(self.0)
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        let n = self.0 as f64;
        n * z.powi(self.0 - 1)
    }

    fn second_derivative(&self, z: Complex64) -> Option<Complex64> {
        let n = self.0 as f64;
        Some(n * (n - 1.0) * z.powi(self.0 - 2))
    }

    fn third_derivative(&self, z: Complex64) -> Option<Complex64> {
        let n = self.0 as f64;
        Some(n * (n - 1.0) * (n - 2.0) * z.powi(self.0 - 3))
    }
}

/// Finite Blaschke product `e^{i phi} prod (z - a_k) / (1 - conj(a_k) z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blaschke {
    pub zeros: Vec<Complex64>,
    pub phase: f64,
}

impl HolomorphicMap for Blaschke {
    fn value(&self, z: Complex64) -> Complex64 {
        self.zeros
            .iter()
            .fold(Complex64::from_polar(1.0, self.phase), |acc, a| {
                acc * (z - a) / (1.0 - a.conj() * z)
            })
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        // logarithmic derivative: sum of (1 - |a|^2) / ((z - a)(1 - conj(a) z))
        let mut value = Complex64::from_polar(1.0, self.phase);
        let mut log_derivative = Complex64::new(0.0, 0.0);
        let mut product_without = vec![];
        for a in &self.zeros {
            let factor = (z - a) / (1.0 - a.conj() * z);
            let factor_prime = (1.0 - a.norm_sqr()) / ((1.0 - a.conj() * z).powi(2));
            product_without.push((factor, factor_prime));
            value *= factor;
        }
        if value.norm() > 0.0 {
            for (factor, factor_prime) in &product_without {
                log_derivative += factor_prime / factor;
            }
            return value * log_derivative;
        }
        // z is one of the zeros: product rule without division
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..product_without.len() {
            let mut term = Complex64::from_polar(1.0, self.phase) * product_without[i].1;
            for (j, (factor, _)) in product_without.iter().enumerate() {
                if i != j {
                    term *= factor;
                }
            }
            total += term;
        }
        total
    }
}

/// Composition `outer . inner`.
#[derive(Clone)]
pub struct Compose {
    pub outer: Arc<dyn HolomorphicMap>,
    pub inner: Arc<dyn HolomorphicMap>,
}

impl HolomorphicMap for Compose {
    fn value(&self, z: Complex64) -> Complex64 {
        self.outer.value(self.inner.value(z))
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        self.outer.derivative(self.inner.value(z)) * self.inner.derivative(z)
    }
}

type MapFn = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

/// A map assembled from closures; derivatives beyond the first are optional.
#[derive(Clone)]
pub struct FnMap {
    value: MapFn,
    derivative: Option<MapFn>,
    second: Option<MapFn>,
    third: Option<MapFn>,
}

impl FnMap {
    pub fn new(value: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static) -> Self {
        FnMap {
            value: Arc::new(value),
            derivative: None,
            second: None,
            third: None,
        }
    }

    pub fn with_derivative(
        mut self,
        d: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.derivative = Some(Arc::new(d));
        self
    }

    pub fn with_higher_derivatives(
        mut self,
        d2: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
        d3: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        self.second = Some(Arc::new(d2));
        self.third = Some(Arc::new(d3));
        self
    }
}

impl HolomorphicMap for FnMap {
    fn value(&self, z: Complex64) -> Complex64 {
        (self.value)(z)
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        match &self.derivative {
            Some(d) => d(z),
            None => central_difference(|w| (self.value)(w), z, fd_step(z)),
        }
    }

    fn second_derivative(&self, z: Complex64) -> Option<Complex64> {
        self.second.as_ref().map(|d| d(z))
    }

    fn third_derivative(&self, z: Complex64) -> Option<Complex64> {
        self.third.as_ref().map(|d| d(z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn mobius_derivatives_match_differences() {
        let m = Mobius::new(c(1.0, 2.0), c(0.5, 0.0), c(0.3, -0.1), c(2.0, 0.5));
        let z = c(0.2, 0.7);
        let fd = central_difference(|w| m.value(w), z, 1e-3);
        assert!((fd - m.derivative(z)).norm() < 1e-9);
        let fd2 = central_difference(|w| m.derivative(w), z, 1e-3);
        assert!((fd2 - m.second_derivative(z).unwrap()).norm() < 1e-9);
    }

    #[test]
    fn automorphism_preserves_unit_circle() {
        let t = Mobius::disk_automorphism(c(0.3, -0.4), 0.7);
        for k in 0..16 {
            let w = t.value(Complex64::from_polar(1.0, k as f64 * 0.4));
            assert!((w.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn blaschke_derivative_at_zero_of_product() {
        let b = Blaschke {
            zeros: vec![c(0.2, 0.1), c(-0.5, 0.3)],
            phase: 0.3,
        };
        for z in [c(0.2, 0.1), c(0.1, 0.1), c(-0.3, -0.6)] {
            let fd = central_difference(|w| b.value(w), z, 1e-4);
            assert!((fd - b.derivative(z)).norm() < 1e-9, "at {z}");
        }
    }
}
