//! Adaptive Gauss–Kronrod (7/15) quadrature of complex integrands.

use crate::{Error, Result, C64};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let x = r * XGK[j];
        let s = f(c - x) + f(c + x);
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    (kronrod * r, ((kronrod - gauss) * r).norm())
}

/// Integral of `f` over `[a, b]` to absolute tolerance `tol`.
pub(crate) fn integrate<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<C64> {
    if a == b {
        return Ok(C64::new(0.0, 0.0));
    }
    let mut total = C64::new(0.0, 0.0);
    let mut stack = vec![(a, b, tol, 0u32)];
    while let Some((lo, hi, local_tol, depth)) = stack.pop() {
        let (value, err) = gk15(&mut f, lo, hi);
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::QuadratureFailure { a: lo, b: hi });
        }
        if err <= local_tol.max(1e-15 * value.norm()) {
            total += value;
        } else if depth >= 48 {
            return Err(Error::QuadratureFailure { a: lo, b: hi });
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, 0.5 * local_tol, depth + 1));
            stack.push((lo, mid, 0.5 * local_tol, depth + 1));
        }
    }
    Ok(total)
}

pub(crate) fn integrate_real<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    integrate(|x| C64::new(f(x), 0.0), a, b, tol).map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate_real(|x| 3.0 * x * x - x + 2.0, -1.0, 2.0, 1e-12).unwrap();
        assert!((v - (8.0 + 1.0 - 1.5 + 6.0)).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_complex() {
        let v = integrate(|x| C64::new(0.0, 7.0 * x).exp(), 0.0, 3.0, 1e-12).unwrap();
        let exact = (C64::new(0.0, 21.0).exp() - 1.0) / C64::new(0.0, 7.0);
        assert!((v - exact).norm() < 1e-11);
    }
}
