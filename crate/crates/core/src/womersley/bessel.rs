//! Bessel functions of the first kind, orders 0 and 1, for complex argument.
//!
//! Plain power series
//!
//! ```text
//! J_ν(z) = (z/2)^ν Σ_k (−z²/4)^k / (k! (k+ν)!)
//! ```
//!
//! summed with the multiplicative term recursion. Adequate for the low
//! Womersley numbers of interest (`|z| < 1` in practice); beyond `|z| = 15`
//! the alternating terms cancel badly and the call is refused.

use num_complex::Complex64;

use crate::{Error, Result};

/// Largest `|z|` accepted by [`complex_bessel_j01`].
pub const BESSEL_ARGUMENT_CAP: f64 = 15.0;

const RELATIVE_STOP: f64 = 1e-16;
const MAX_TERMS: usize = 200;

fn series(z: Complex64, order: u32) -> Complex64 {
    let w = -z * z / 4.0;
    let mut term = match order {
        0 => Complex64::new(1.0, 0.0),
        _ => z / 2.0,
    };
    let mut sum = term;
    for k in 1..MAX_TERMS {
        term *= w / (k as f64 * (k as f64 + order as f64));
        sum += term;
        if term.norm() <= RELATIVE_STOP * sum.norm() {
            break;
        }
    }
    sum
}

/// Returns `(J0(z), J1(z))`.
pub fn complex_bessel_j01(z: Complex64) -> Result<(Complex64, Complex64)> {
    let modulus = z.norm();
    if !modulus.is_finite() || modulus > BESSEL_ARGUMENT_CAP {
        return Err(Error::BesselOutOfRange(modulus));
    }
    if modulus == 0.0 {
        return Ok((Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)));
    }
    Ok((series(z, 0), series(z, 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn origin() {
        let (j0, j1) = complex_bessel_j01(Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(j0, Complex64::new(1.0, 0.0));
        assert_eq!(j1, Complex64::new(0.0, 0.0));
    }

    // Reference values from a 40-digit evaluation.
    #[test]
    fn real_argument() {
        let (j0, j1) = complex_bessel_j01(Complex64::new(0.1, 0.0)).unwrap();
        assert!(rel(j0, Complex64::new(0.99750156206604003, 0.0)) < 1e-15);
        assert!(rel(j1, Complex64::new(0.049937526036242, 0.0)) < 1e-14);
    }

    #[test]
    fn womersley_argument() {
        let z = Complex64::from_polar(0.0527, 0.75 * std::f64::consts::PI);
        let (j0, j1) = complex_bessel_j01(z).unwrap();
        assert!(
            rel(
                j0,
                Complex64::new(0.99999987947906690, 0.00069432249070217825)
            ) < 1e-14
        );
        assert!(
            rel(
                j1,
                Complex64::new(-0.018638731335647241, 0.018625794535831942)
            ) < 1e-14
        );
    }

    #[test]
    fn moderate_complex_argument() {
        let (j0, j1) = complex_bessel_j01(Complex64::new(2.5, -1.75)).unwrap();
        assert!(rel(j0, Complex64::new(-0.52641632530374447, 1.1900633589790879)) < 1e-13);
        assert!(rel(j1, Complex64::new(1.0889852714556793, 0.67061237410511370)) < 1e-13);
    }

    #[test]
    fn refuses_large_argument() {
        assert!(matches!(
            complex_bessel_j01(Complex64::new(16.0, 0.0)),
            Err(Error::BesselOutOfRange(_))
        ));
        assert!(complex_bessel_j01(Complex64::new(f64::NAN, 0.0)).is_err());
    }
}
