//! Dense complex matrix exponential by scaling and squaring with a Taylor kernel.

use nalgebra::DMatrix;

use crate::C64;

pub(crate) fn norm1(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let norm = norm1(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a / C64::from(2f64.powi(squarings));
    let mut sum = DMatrix::<C64>::identity(n, n);
    let mut term = DMatrix::<C64>::identity(n, n);
    for k in 1..=60 {
        term = &term * &b / C64::from(k as f64);
        sum += &term;
        if norm1(&term) <= 1e-18 * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matches_scalar_exponentials() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.3, 1.0),
            C64::new(-2.0, 0.5),
            C64::new(4.0, -3.0),
        ]));
        let e = expm(&d);
        for k in 0..3 {
            assert!((e[(k, k)] - d[(k, k)].exp()).norm() < 1e-12 * d[(k, k)].exp().norm());
        }
    }

    #[test]
    fn rotation_generator() {
        let t = 2.7;
        let a = DMatrix::from_row_slice(2, 2, &[
            C64::new(0.0, 0.0), C64::new(t, 0.0),
            C64::new(-t, 0.0), C64::new(0.0, 0.0),
        ]);
        let e = expm(&a);
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-13);
        assert!((e[(0, 1)].re - t.sin()).abs() < 1e-13);
        assert!((e[(1, 0)].re + t.sin()).abs() < 1e-13);
    }
}
