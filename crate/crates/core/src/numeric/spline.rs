//! Natural cubic spline on a uniform grid.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Spline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Spline {
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::InsufficientSamples { needed: 2 });
        }
        if !(h > 0.0) {
            return Err(Error::InvalidParameter("spline spacing must be positive".into()));
        }
        // Second derivatives from the tridiagonal system with m_0 = m_{n-1} = 0.
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let mut diag = vec![4.0; k];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h))
                .collect();
            for i in 1..k {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            let mut sol = vec![0.0; k];
            sol[k - 1] = rhs[k - 1] / diag[k - 1];
            for i in (0..k - 1).rev() {
                sol[i] = (rhs[i] - sol[i + 1]) / diag[i];
            }
            m[1..n - 1].copy_from_slice(&sol);
        }
        let mut cumulative = vec![0.0; n];
        for i in 1..n {
            cumulative[i] = cumulative[i - 1] + 0.5 * h * (y[i - 1] + y[i]) - h.powi(3) * (m[i - 1] + m[i]) / 24.0;
        }
        Ok(Spline { x0, h, y, m, cumulative })
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.h * (self.y.len() - 1) as f64
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let i = (s.floor() as usize).min(n - 2);
        (i, x - (self.x0 + self.h * i as f64))
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (i, d) = self.locate(x);
        let h = self.h;
        let (a, b) = ((h - d) / h, d / h);
        a * self.y[i] + b * self.y[i + 1]
            + ((a.powi(3) - a) * self.m[i] + (b.powi(3) - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let (i, d) = self.locate(x);
        let h = self.h;
        let (a, b) = ((h - d) / h, d / h);
        (self.y[i + 1] - self.y[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }

    /// Integral from the first node to `x`.
    pub fn integral(&self, x: f64) -> f64 {
        let (i, d) = self.locate(x);
        let h = self.h;
        let (yi, yj, mi, mj) = (self.y[i], self.y[i + 1], self.m[i], self.m[i + 1]);
        // Antiderivative of the cubic piece on [0, d].
        let lin = yi * (d - d * d / (2.0 * h)) + yj * d * d / (2.0 * h);
        let a_term = |u: f64| -> f64 {
            // ∫ (a³ - a) dx with a = (h - x)/h, evaluated from 0 to u
            let a0: f64 = 1.0;
            let a1 = (h - u) / h;
            -h * ((a1.powi(4) / 4.0 - a1 * a1 / 2.0) - (a0.powi(4) / 4.0 - a0 * a0 / 2.0))
        };
        let b_term = |u: f64| -> f64 {
            let b1 = u / h;
            h * (b1.powi(4) / 4.0 - b1 * b1 / 2.0)
        };
        self.cumulative[i] + lin + (mi * a_term(d) + mj * b_term(d)) * h * h / 6.0
    }
}
