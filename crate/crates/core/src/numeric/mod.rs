pub(crate) mod expm;
pub(crate) mod ode;
pub(crate) mod quad;
pub(crate) mod spline;

use std::f64::consts::PI;

/// Maps an angle into (-π, π].
pub(crate) fn wrap_pi(x: f64) -> f64 {
    let y = x - 2.0 * PI * (x / (2.0 * PI)).round();
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

/// Removes 2π jumps between consecutive entries.
pub(crate) fn unwrap(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (k, &p) in phases.iter().enumerate() {
        if k > 0 {
            let prev = phases[k - 1];
            offset -= 2.0 * PI * ((p - prev) / (2.0 * PI)).round();
        }
        out.push(p + offset);
    }
    out
}

/// `n` equally spaced points on `[0, t_end]`, endpoints included.
pub fn uniform_grid(t_end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect(),
    }
}
