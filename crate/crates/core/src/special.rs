//! Power-series special functions: Kummer's 1F1 and the Fresnel cosine integral.

use std::f64::consts::PI;

use crate::{Error, Result, C64};

/// Largest series argument accepted.
pub const SERIES_RADIUS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialValue {
    pub value: C64,
    pub terms: usize,
    /// Bound on truncation plus accumulated rounding error.
    pub truncation_bound: f64,
}

/// Neumaier-compensated complex sum.
#[derive(Default)]
struct Compensated {
    sum: C64,
    comp: C64,
}

impl Compensated {
    fn add(&mut self, x: C64) {
        let (s_re, c_re) = two_sum(self.sum.re, x.re);
        let (s_im, c_im) = two_sum(self.sum.im, x.im);
        self.sum = C64::new(s_re, s_im);
        self.comp += C64::new(c_re, c_im);
    }

    fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let c = if a.abs() >= b.abs() { (a - s) + b } else { (b - s) + a };
    (s, c)
}

/// `1F1(a; b; z) = Σ (a)_n z^n / ((b)_n n!)`.
pub fn kummer_1f1(a: C64, b: C64, z: C64, tol: f64) -> Result<SpecialValue> {
    if b.im == 0.0 && b.re <= 0.0 && b.re == b.re.round() {
        return Err(Error::InvalidParameter(format!("b = {} is a nonpositive integer", b.re)));
    }
    if z.norm() > SERIES_RADIUS {
        return Err(Error::SeriesDivergence(format!("|z| = {} exceeds {}", z.norm(), SERIES_RADIUS)));
    }
    let mut acc = Compensated::default();
    let mut term = C64::from(1.0);
    let mut largest: f64 = 1.0;
    acc.add(term);
    let (abs_a, abs_b, abs_z) = (a.norm(), b.norm(), z.norm());
    for n in 0..10_000usize {
        let nf = n as f64;
        term *= (a + nf) * z / ((b + nf) * (nf + 1.0));
        if term == C64::new(0.0, 0.0) {
            return Ok(SpecialValue { value: acc.value(), terms: n + 1, truncation_bound: 0.0 });
        }
        acc.add(term);
        largest = largest.max(term.norm());
        // Ratio bound for all later terms once m + 1 > |b|.
        let m = nf + 1.0;
        if m > abs_b {
            let ratio = (abs_a + m) / (m - abs_b) * abs_z / (m + 1.0);
            if ratio < 1.0 {
                let tail = term.norm() * ratio / (1.0 - ratio);
                let rounding = 4.0 * f64::EPSILON * largest;
                if tail < 0.1 * tol {
                    let bound = tail + rounding;
                    if bound > tol {
                        return Err(Error::SeriesDivergence(format!(
                            "cancellation leaves error {bound:.2e} above tolerance {tol:.1e}"
                        )));
                    }
                    return Ok(SpecialValue { value: acc.value(), terms: n + 2, truncation_bound: bound });
                }
            }
        }
    }
    Err(Error::SeriesDivergence("1F1 series exhausted its term budget".into()))
}

/// `C(x) = ∫_0^x cos(π τ²/2) dτ` from its alternating power series.
pub fn fresnel_c(x: f64, tol: f64) -> Result<SpecialValue> {
    let y = (PI / 2.0).sqrt() * x;
    if y * y > SERIES_RADIUS {
        return Err(Error::SeriesDivergence(format!("|x| = {} outside series policy", x.abs())));
    }
    if x == 0.0 {
        return Ok(SpecialValue { value: C64::new(0.0, 0.0), terms: 1, truncation_bound: 0.0 });
    }
    let y4 = y.powi(4);
    let prefactor = (2.0 / PI).sqrt();
    let mut acc = Compensated::default();
    // power = y^{4n+1} / (2n)!
    let mut power = y;
    let mut largest: f64 = 0.0;
    for n in 0..500usize {
        let nf = n as f64;
        if n > 0 {
            power *= -y4 / ((2.0 * nf - 1.0) * (2.0 * nf));
        }
        let term = prefactor * power / (4.0 * nf + 1.0);
        acc.add(C64::from(term));
        largest = largest.max(term.abs());
        let next = prefactor * power.abs() * y4 / ((2.0 * nf + 1.0) * (2.0 * nf + 2.0)) / (4.0 * nf + 5.0);
        // Alternating with decreasing magnitude from here on: the tail is below the next term.
        let decreasing = y4 < (2.0 * nf + 3.0) * (2.0 * nf + 4.0);
        if decreasing && next < 0.1 * tol {
            let bound = next + 4.0 * f64::EPSILON * largest;
            if bound > tol {
                return Err(Error::SeriesDivergence(format!(
                    "cancellation leaves error {bound:.2e} above tolerance {tol:.1e}"
                )));
            }
            return Ok(SpecialValue { value: acc.value(), terms: n + 1, truncation_bound: bound });
        }
    }
    Err(Error::SeriesDivergence("Fresnel series exhausted its term budget".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kummer_trivial_cases() {
        let a = C64::new(0.3, -1.2);
        let b = C64::new(1.5, 0.4);
        assert_eq!(kummer_1f1(a, b, C64::new(0.0, 0.0), 1e-14).unwrap().value, C64::from(1.0));
        assert_eq!(kummer_1f1(C64::new(0.0, 0.0), b, C64::new(2.0, 1.0), 1e-14).unwrap().value, C64::from(1.0));
        assert!(kummer_1f1(a, C64::from(-2.0), C64::from(1.0), 1e-12).is_err());
        assert!(kummer_1f1(a, b, C64::from(31.0), 1e-12).is_err());
    }

    #[test]
    fn kummer_exponential() {
        let z = C64::new(0.0, 1.0);
        let v = kummer_1f1(C64::from(1.0), C64::from(1.0), z, 1e-14).unwrap();
        assert!((v.value - z.exp()).norm() < 1e-13);
        assert!(v.truncation_bound < 1e-14);
    }

    #[test]
    fn fresnel_known_value_and_parity() {
        let c = fresnel_c(1.0, 1e-14).unwrap().value.re;
        assert!((c - 0.779_893_400_376_822_8).abs() < 1e-13);
        let m = fresnel_c(-1.0, 1e-14).unwrap().value.re;
        assert_eq!(m, -c);
        assert_eq!(fresnel_c(0.0, 1e-14).unwrap().value.re, 0.0);
    }
}
