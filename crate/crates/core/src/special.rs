//! Special functions: the gamma function, adaptive Gauss–Kronrod quadrature
//! and the normalized complete elliptic integral of the first kind.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{MetricError, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function for real arguments (Lanczos approximation, g = 7).
///
/// Relative accuracy is about `1e-15` for moderate arguments; negative
/// non-integers use the reflection formula.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// One 15-point Kronrod rule on `[a, b]`; returns (estimate, |K15 - G7|).
fn kronrod15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * WGK[j];
        if j % 2 == 1 {
            gauss += pair * WG[j / 2];
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).norm())
}

/// Adaptive Gauss–Kronrod (G7/K15) integration of a complex-valued function.
///
/// Intervals are bisected until the local error estimate is below
/// `rel_tol * |I|` distributed proportionally to interval length.
pub fn integrate_adaptive<F: Fn(f64) -> Complex64>(f: F, a: f64, b: f64, rel_tol: f64) -> Complex64 {
    let (whole, _) = kronrod15(&f, a, b);
    let scale = whole.norm().max(f64::MIN_POSITIVE);
    let mut total = Complex64::new(0.0, 0.0);
    let mut stack = vec![(a, b, 0u32)];
    let width = b - a;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = kronrod15(&f, lo, hi);
        // the error estimate cannot drop below the rounding level of the panel
        let allowed = (rel_tol * scale * (hi - lo) / width).max(64.0 * f64::EPSILON * value.norm());
        if err <= allowed || depth >= 40 {
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, depth + 1));
            stack.push((lo, mid, depth + 1));
        }
    }
    total
}

/// Relative tolerance used for the elliptic integral quadrature.
pub const ELLIPTIC_K_TOL: f64 = 1e-13;

fn check_cut(z: Complex64) -> Result<()> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(MetricError::InvalidParameters(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re >= 1.0 {
        return Err(MetricError::ArgumentOnCut(z));
    }
    Ok(())
}

/// Normalized complete elliptic integral
/// `K(z) = (2/pi) * integral_0^{pi/2} dθ / sqrt(1 - z sin^2 θ)`
/// with the principal square root, for `z` off the cut `[1, inf)`.
///
/// Evaluated by adaptive quadrature of the θ-form; `K(0) = 1`.
pub fn elliptic_k(z: Complex64) -> Result<Complex64> {
    check_cut(z)?;
    let one = Complex64::new(1.0, 0.0);
    let zc = one - z;
    let integral = integrate_adaptive(
        |theta| {
            // 1 - z sin^2 written without cancellation near z = 1
            let (s, c) = theta.sin_cos();
            one / (c * c + zc * (s * s)).sqrt()
        },
        0.0,
        FRAC_PI_2,
        ELLIPTIC_K_TOL,
    );
    Ok(integral * (2.0 / PI))
}

/// `K(z) = 1 / AGM(1, sqrt(1 - z))`, with the AGM branch chosen so that
/// `|a_n - b_n| <= |a_n + b_n|` at every step.
///
/// Much faster than [`elliptic_k`] and accurate up to the cut; validated
/// against the quadrature in the tests.
pub fn elliptic_k_agm(z: Complex64) -> Result<Complex64> {
    check_cut(z)?;
    let mut a = Complex64::new(1.0, 0.0);
    let mut b = (Complex64::new(1.0, 0.0) - z).sqrt();
    for _ in 0..64 {
        if (a - b).norm() <= 1e-16 * a.norm() {
            break;
        }
        let next_a = 0.5 * (a + b);
        let mut next_b = (a * b).sqrt();
        if (next_a - next_b).norm() > (next_a + next_b).norm() {
            next_b = -next_b;
        }
        a = next_a;
        b = next_b;
    }
    Ok(Complex64::new(1.0, 0.0) / a)
}

/// Power series of `2F1(1/2, 1/2; 1; z)` for `|z| < 1`; this equals `K(z)`.
///
/// Intended as an independent check for `|z| <= 1/2`.
pub fn hypergeometric_k_series(z: Complex64) -> Result<Complex64> {
    if z.norm() >= 1.0 {
        return Err(MetricError::InvalidParameters(format!(
            "series needs |z| < 1, got {z}"
        )));
    }
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for n in 0..10_000 {
        let ratio = (n as f64 + 0.5) / (n as f64 + 1.0);
        term *= z * (ratio * ratio);
        sum += term;
        if term.norm() < 1e-17 * sum.norm() {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn gamma_reference_values() {
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
        assert!((gamma(5.0) - 24.0).abs() < 1e-12);
        assert!((gamma(0.75) - 1.225_416_702_465_177_6).abs() < 1e-14);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn kronrod_integrates_polynomials_exactly() {
        let v = integrate_adaptive(|x| c(x.powi(6), -x), 0.0, 2.0, 1e-14);
        assert!((v - c(128.0 / 7.0, -2.0)).norm() < 1e-12);
    }

    #[test]
    fn k_at_zero_is_one() {
        assert!((elliptic_k(c(0.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn k_at_half_matches_gamma_expression() {
        let expected = PI.sqrt() / gamma(0.75).powi(2);
        assert!((expected - 1.180_340_599_016_096_2).abs() < 1e-14);
        let k = elliptic_k(c(0.5, 0.0)).unwrap();
        assert!((k.re - expected).abs() < 1e-12 && k.im.abs() < 1e-15);
    }

    #[test]
    fn k_at_minus_one_is_gauss_constant() {
        // 1 / AGM(1, sqrt 2)
        let k = elliptic_k(c(-1.0, 0.0)).unwrap();
        assert!((k.re - 0.834_626_841_674_073_186_3).abs() < 1e-13);
    }

    #[test]
    fn cut_is_rejected() {
        assert_eq!(elliptic_k(c(1.0, 0.0)), Err(MetricError::ArgumentOnCut(c(1.0, 0.0))));
        assert!(elliptic_k(c(3.0, 0.0)).is_err());
        assert!(elliptic_k(c(3.0, 1e-9)).is_ok());
    }

    #[test]
    fn agm_and_series_agree_with_quadrature() {
        for z in [c(0.3, 0.2), c(-0.4, 0.1), c(0.0, -0.5), c(-3.0, 2.0), c(0.9, -0.4), c(2.0, 0.5)] {
            let q = elliptic_k(z).unwrap();
            let a = elliptic_k_agm(z).unwrap();
            assert!((q - a).norm() < 1e-12 * q.norm(), "agm at {z}: {q} vs {a}");
            if z.norm() <= 0.5 {
                let s = hypergeometric_k_series(z).unwrap();
                assert!((q - s).norm() < 1e-13 * q.norm(), "series at {z}");
            }
        }
    }

    #[test]
    fn k_conjugation_symmetry() {
        let z = c(0.7, 1.3);
        let k = elliptic_k(z).unwrap();
        let kc = elliptic_k(z.conj()).unwrap();
        assert!((k.conj() - kc).norm() < 1e-14);
    }

    #[test]
    fn k_is_increasing_on_unit_interval() {
        let mut prev = 0.0;
        for i in 0..50 {
            let k = elliptic_k(c(i as f64 / 50.0, 0.0)).unwrap().re;
            assert!(k > prev);
            prev = k;
        }
    }
}
