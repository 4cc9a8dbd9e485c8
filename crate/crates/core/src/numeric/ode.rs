//! Dormand–Prince 5(4) integrator for complex state vectors.
//!
//! Steps are clipped so that every requested output time is hit exactly.

use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy)]
pub(crate) struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub(crate) fn with_tol(tol: f64) -> Self {
        OdeOptions { rtol: tol, atol: tol, max_steps: 2_000_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Flow {
    Continue,
    Stop,
}

#[derive(Debug, Clone)]
pub(crate) struct OdeRun {
    /// One state per reached output time.
    pub values: Vec<Vec<C64>>,
    /// Time at which the monitor asked to stop, if it did.
    pub stopped_at: Option<f64>,
    pub steps: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

/// Integrates `y' = f(t, y)` from `t0` through the sorted `times`.
///
/// `monitor` sees every accepted step and may stop the run early; the
/// values reached so far are returned together with the stopping time.
pub(crate) fn dopri5<F, M>(
    mut f: F,
    t0: f64,
    y0: &[C64],
    times: &[f64],
    opts: &OdeOptions,
    mut monitor: M,
) -> Result<OdeRun>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    M: FnMut(f64, &[C64]) -> Flow,
{
    let n = y0.len();
    let mut run = OdeRun { values: Vec::with_capacity(times.len()), stopped_at: None, steps: 0 };
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = vec![C64::new(0.0, 0.0); n];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut k5 = k1.clone();
    let mut k6 = k1.clone();
    let mut k7 = k1.clone();
    let mut tmp = k1.clone();
    let mut y_new = k1.clone();
    f(t, &y, &mut k1);

    let t_last = times.last().copied().unwrap_or(t0);
    let scale = |y: &[C64], i: usize, z: &[C64]| opts.atol + opts.rtol * y[i].norm().max(z[i].norm());
    let mut h = {
        let d0 = (0..n).map(|i| (y[i].norm() / scale(&y, i, &y)).powi(2)).sum::<f64>().sqrt();
        let d1 = (0..n).map(|i| (k1[i].norm() / scale(&y, i, &y)).powi(2)).sum::<f64>().sqrt();
        let guess = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        guess.min((t_last - t0).abs().max(1e-12))
    };

    for &target in times {
        if target < t - 1e-12 * t.abs().max(1.0) {
            return Err(Error::InvalidParameter("output times must be sorted".into()));
        }
        while target - t > 1e-14 * target.abs().max(1.0) {
            if run.steps >= opts.max_steps {
                return Err(Error::StepUnderflow { t });
            }
            let landing = t + h >= target - 1e-14 * target.abs().max(1.0);
            let h_try = if landing { target - t } else { h };
            if h_try < 1e-14 * t.abs().max(1.0) && !landing {
                return Err(Error::StepUnderflow { t });
            }

            combine(&mut tmp, &y, h_try, &[(A21, &k1)]);
            f(t + C2 * h_try, &tmp, &mut k2);
            combine(&mut tmp, &y, h_try, &[(A31, &k1), (A32, &k2)]);
            f(t + C3 * h_try, &tmp, &mut k3);
            combine(&mut tmp, &y, h_try, &[(A41, &k1), (A42, &k2), (A43, &k3)]);
            f(t + C4 * h_try, &tmp, &mut k4);
            combine(&mut tmp, &y, h_try, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]);
            f(t + C5 * h_try, &tmp, &mut k5);
            combine(&mut tmp, &y, h_try, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
            f(t + h_try, &tmp, &mut k6);
            combine(&mut y_new, &y, h_try, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
            f(t + h_try, &y_new, &mut k7);
            run.steps += 1;

            let mut err = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h_try;
                err += (e.norm() / scale(&y, i, &y_new)).powi(2);
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                h = 0.25 * h_try;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if landing { target } else { t + h_try };
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                if !landing || factor < 1.0 {
                    h = h_try * factor;
                } else {
                    h = h.max(h_try * factor);
                }
                if monitor(t, &y) == Flow::Stop {
                    run.stopped_at = Some(t);
                    return Ok(run);
                }
            } else {
                h = h_try * factor.min(1.0);
            }
        }
        run.values.push(y.clone());
    }
    Ok(run)
}
