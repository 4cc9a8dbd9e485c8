//! The 2×2 propagator `i dS/ds = W(s) S`, `W = [[w11, w12], [w21, w22]]`.
//!
//! This is `U0` in the two-dimensional `j = 1/2` carrier `|+⟩ = |1,0⟩`,
//! `|-⟩ = |0,1⟩`, where `N` acts as `1/2`.

use std::ops::Mul;

use nalgebra::Matrix2;

use crate::numeric::ode::{dopri5, Flow, OdeOptions};
use crate::riccati::{DisentangledFactors, FactorSample, Ordering};
use crate::scenario::{Case, CoefficientScenario};
use crate::{Error, Result, C64, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix2 {
    pub t: f64,
    pub entries: Matrix2<C64>,
    /// Set when the numeric solution was projected back onto U(2).
    pub reprojected: bool,
}

impl SMatrix2 {
    pub fn new(t: f64, s11: C64, s12: C64, s21: C64, s22: C64) -> Self {
        SMatrix2 { t, entries: Matrix2::new(s11, s12, s21, s22), reprojected: false }
    }

    pub fn identity(t: f64) -> Self {
        SMatrix2 { t, entries: Matrix2::identity(), reprojected: false }
    }

    pub fn s11(&self) -> C64 {
        self.entries[(0, 0)]
    }
    pub fn s12(&self) -> C64 {
        self.entries[(0, 1)]
    }
    pub fn s21(&self) -> C64 {
        self.entries[(1, 0)]
    }
    pub fn s22(&self) -> C64 {
        self.entries[(1, 1)]
    }

    pub fn adjoint(&self) -> Self {
        SMatrix2 { entries: self.entries.adjoint(), ..*self }
    }

    pub fn determinant(&self) -> C64 {
        self.entries[(0, 0)] * self.entries[(1, 1)] - self.entries[(0, 1)] * self.entries[(1, 0)]
    }

    /// `max |(S†S - I)_ij|`
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.entries.adjoint() * self.entries - Matrix2::identity();
        d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_deviation(&self, other: &SMatrix2) -> f64 {
        (self.entries - other.entries).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: (C64, C64)) -> (C64, C64) {
        let e = &self.entries;
        (e[(0, 0)] * v.0 + e[(0, 1)] * v.1, e[(1, 0)] * v.0 + e[(1, 1)] * v.1)
    }

    /// Nearest unitary matrix (polar factor).
    pub fn project_unitary(&self) -> Self {
        let svd = self.entries.svd(true, true);
        let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        SMatrix2 { entries: u * v_t, reprojected: true, ..*self }
    }
}

impl Mul for SMatrix2 {
    type Output = SMatrix2;
    fn mul(self, rhs: SMatrix2) -> SMatrix2 {
        SMatrix2 { t: self.t, entries: self.entries * rhs.entries, reprojected: self.reprojected || rhs.reprojected }
    }
}

/// `exp(A)` for a 2×2 matrix via Cayley–Hamilton.
pub fn exp2(a: &Matrix2<C64>) -> Matrix2<C64> {
    let mu = (a[(0, 0)] + a[(1, 1)]) * 0.5;
    let b = a - Matrix2::identity() * mu;
    let q = (-(b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)])).sqrt();
    let (cosh, sinhc) = if q.norm() < 1e-4 {
        let q2 = q * q;
        (1.0 + q2 / 2.0 + q2 * q2 / 24.0 + q2 * q2 * q2 / 720.0, 1.0 + q2 / 6.0 + q2 * q2 / 120.0 + q2 * q2 * q2 / 5040.0)
    } else {
        (q.cosh(), q.sinh() / q)
    };
    (Matrix2::identity() * cosh + b * sinhc) * mu.exp()
}

/// The generator `W(t)` in the `|+⟩, |-⟩` basis.
pub fn generator(scenario: &CoefficientScenario, t: f64) -> Result<Matrix2<C64>> {
    let c = scenario.eval_coeffs(t)?;
    Ok(Matrix2::new(C64::from(c.w11), c.w12, c.w21(), C64::from(c.w22)))
}

fn integrate_grid(scenario: &CoefficientScenario, t_start: f64, grid: &[f64], tol: f64) -> Result<Vec<SMatrix2>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if let Some(&last) = grid.last() {
        scenario.check_time(last)?;
    }
    scenario.check_time(t_start)?;
    let rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
        let w = generator(scenario, s).unwrap_or_else(|_| Matrix2::from_element(C64::new(f64::NAN, f64::NAN)));
        // Column-major 2×2: y = [S11, S21, S12, S22].
        for col in 0..2 {
            let (a, b) = (y[2 * col], y[2 * col + 1]);
            dy[2 * col] = -I * (w[(0, 0)] * a + w[(0, 1)] * b);
            dy[2 * col + 1] = -I * (w[(1, 0)] * a + w[(1, 1)] * b);
        }
    };
    let one = C64::from(1.0);
    let zero = C64::from(0.0);
    let run = dopri5(rhs, t_start, &[one, zero, zero, one], grid, &OdeOptions::with_tol(tol), |_, _| Flow::Continue)?;
    Ok(run
        .values
        .iter()
        .zip(grid)
        .map(|(y, &t)| {
            let s = SMatrix2 { t, entries: Matrix2::new(y[0], y[2], y[1], y[3]), reprojected: false };
            if s.unitarity_defect() > 10.0 * tol {
                s.project_unitary()
            } else {
                s
            }
        })
        .collect())
}

/// Numerically integrated `S(t, 0)`.
pub fn smatrix_numeric(scenario: &CoefficientScenario, t: f64, tol: f64) -> Result<SMatrix2> {
    Ok(integrate_grid(scenario, 0.0, &[t], tol)?[0])
}

/// `S(t_k, 0)` along an increasing grid in a single integration.
pub fn smatrix_numeric_grid(scenario: &CoefficientScenario, grid: &[f64], tol: f64) -> Result<Vec<SMatrix2>> {
    integrate_grid(scenario, 0.0, grid, tol)
}

/// `S(t, s)` for `s ≤ t`.
pub fn smatrix_numeric_between(scenario: &CoefficientScenario, s: f64, t: f64, tol: f64) -> Result<SMatrix2> {
    if t < s {
        return Err(Error::InvalidParameter("propagation must run forward".into()));
    }
    Ok(integrate_grid(scenario, s, &[t], tol)?[0])
}

/// Which closed element block a scenario falls under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedBlock {
    ConstantPhase,
    LinearPhase,
    GeneralPhase,
    AllConstant,
    Isotropic,
    MixingAngle,
}

pub fn closed_block(scenario: &CoefficientScenario) -> Option<ClosedBlock> {
    Some(match scenario.case() {
        Case::ConstantPhase { .. } => ClosedBlock::ConstantPhase,
        Case::LinearPhase { .. } => ClosedBlock::LinearPhase,
        Case::GeneralPhase { .. } => ClosedBlock::GeneralPhase,
        Case::AllConstant { .. } => ClosedBlock::AllConstant,
        Case::IsotropicConstant { .. } => ClosedBlock::Isotropic,
        Case::RhoConstant { .. } | Case::LogRho { .. } => ClosedBlock::MixingAngle,
        _ => return None,
    })
}

/// `S11 = p0 (cos x - i k sin x)`, `S12 = p1 m sin x`, `S21 = -p2 m sin x`, `S22 = p3 (cos x + i k sin x)`.
fn block(t: f64, phases: [C64; 4], x: f64, k: f64, m: f64) -> SMatrix2 {
    let (s, c) = x.sin_cos();
    SMatrix2::new(
        t,
        phases[0] * C64::new(c, -k * s),
        phases[1] * (m * s),
        phases[2] * (-m * s),
        phases[3] * C64::new(c, k * s),
    )
}

/// Closed-form `S(t, 0)` from the element block matching the scenario's case.
pub fn smatrix_closed(scenario: &CoefficientScenario, t: f64) -> Result<SMatrix2> {
    scenario.check_time(t)?;
    let e = |x: f64| C64::from_polar(1.0, x);
    let (i11, i22) = scenario.diagonal_integrals(t);
    match scenario.case() {
        Case::ConstantPhase { eta_norm, phi0 } => {
            let x = eta_norm.integral(t);
            Ok(block(t, [e(-i11), e(-i11 + phi0), e(-i22 - phi0), e(-i22)], x, 0.0, 1.0))
        }
        Case::LinearPhase { eta0, w0, phi0 } => {
            let delta = (4.0 * eta0 * eta0 + w0 * w0).sqrt();
            let half = 0.5 * w0 * t;
            let phases = [e(-i11 + half), e(-i11 + phi0 + half), e(-i22 - phi0 - half), e(-i22 - half)];
            Ok(block(t, phases, 0.5 * delta * t, w0 / delta, 2.0 * eta0 / delta))
        }
        Case::GeneralPhase { eta0, w0, phase, eps } => {
            let delta = (4.0 * eta0 * eta0 + w0 * w0).sqrt();
            let (pt, p0) = (phase.value(t), phase.value(0.0));
            let tilde = pt - p0;
            let mean = 0.5 * (pt + p0);
            let phases = [e(-i11 + 0.5 * tilde), e(-i11 + mean), e(-i22 - mean), e(-i22 - 0.5 * tilde)];
            Ok(block(t, phases, delta * tilde / (2.0 * w0), w0 / delta, 2.0 * eps * eta0 / delta))
        }
        Case::AllConstant { w11, w22, w12 } => Ok(all_constant_block(t, *w11, *w22, *w12)),
        Case::IsotropicConstant { alpha, beta } => {
            // w11 + w22 = 1 and b = 1 for a normalised (α, β).
            let d = alpha.norm_sqr() - beta.norm_sqr();
            let (s, c) = (0.5 * t).sin_cos();
            let ph = e(-0.5 * t);
            Ok(SMatrix2::new(
                t,
                ph * C64::new(c, -d * s),
                -2.0 * I * alpha.conj() * beta * ph * s,
                -2.0 * I * alpha * beta.conj() * ph * s,
                ph * C64::new(c, d * s),
            ))
        }
        Case::RhoConstant { .. } | Case::LogRho { .. } => {
            let fam = scenario.mixing_family().expect("mixing case");
            let (si, _) = scenario.mixing_integrals(t).expect("mixing case");
            let delta = (4.0 * fam.eta0 * fam.eta0 + fam.w0 * fam.w0).sqrt();
            let big_phi = delta / (4.0 * fam.eta0) * si;
            let theta = scenario.theta_tilde(t).expect("mixing case");
            let phi0 = scenario.reference_phase(0.0).expect("mixing case");
            let base = -0.5 * t;
            let phases = [
                e(base + 0.5 * theta),
                e(base + phi0 + 0.5 * theta),
                e(base - phi0 - 0.5 * theta),
                e(base - 0.5 * theta),
            ];
            Ok(block(t, phases, big_phi, fam.w0 / delta, 2.0 * fam.eta0 / delta))
        }
        _ => Err(Error::NoClosedForm(format!("{:?}", scenario.tag()))),
    }
}

fn all_constant_block(t: f64, w11: f64, w22: f64, w12: C64) -> SMatrix2 {
    let b = (4.0 * w12.norm_sqr() + (w11 - w22).powi(2)).sqrt();
    let ph = C64::from_polar(1.0, -0.5 * (w11 + w22) * t);
    let (s, c) = (0.5 * b * t).sin_cos();
    // sin(bt/2)/b stays finite as b → 0.
    let sinc = if b == 0.0 { 0.5 * t } else { s / b };
    let k = (w11 - w22) * sinc;
    SMatrix2::new(t, ph * C64::new(c, -k), -2.0 * I * w12 * ph * sinc, -2.0 * I * w12.conj() * ph * sinc, ph * C64::new(c, k))
}

/// `S` rebuilt from one factor sample.
pub fn smatrix_from_sample(ordering: Ordering, s: &FactorSample) -> Result<SMatrix2> {
    if !s.chart_valid {
        return Err(Error::ChartSingularity { t: s.t });
    }
    let up = (0.5 * s.omega).exp();
    let down = (-0.5 * s.omega).exp();
    let core = Matrix2::new(up + s.lambda * s.gamma * down, s.lambda * down, s.gamma * down, down);
    let global = C64::from_polar(1.0, -0.5 * s.alpha);
    let entries = match ordering {
        Ordering::Standard => {
            Matrix2::from_diagonal(&nalgebra::Vector2::new(C64::from_polar(1.0, -0.5 * s.rho), C64::from_polar(1.0, 0.5 * s.rho)))
                * core
                * global
        }
        Ordering::Alternative => core * global,
    };
    Ok(SMatrix2 { t: s.t, entries, reprojected: false })
}

/// `S(t)` rebuilt from disentangled factors sampled at `t`.
pub fn smatrix_from_factors(factors: &DisentangledFactors, t: f64) -> Result<SMatrix2> {
    let sample = factors
        .sample_at(t)
        .ok_or_else(|| Error::InvalidParameter(format!("no factor sample at t = {t}")))?;
    smatrix_from_sample(factors.ordering, sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::riccati::{closed_factors, solve_riccati_numeric, Chart};
    use crate::scenario::{PhaseFn, Profile};
    use crate::uniform_grid;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn exp2_matches_rotation() {
        let a = Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0)) * C64::from(0.7);
        let e = exp2(&a);
        assert!((e[(0, 0)] - 0.7f64.cos()).norm() < 1e-15);
        assert!((e[(0, 1)] - 0.7f64.sin()).norm() < 1e-15);
        let tiny = Matrix2::new(c(1e-9, 0.0), c(2e-9, 1e-9), c(0.0, 3e-9), c(-1e-9, 0.0));
        let e = exp2(&tiny);
        assert!((e[(0, 1)] - c(2e-9, 1e-9)).norm() < 1e-17);
    }

    #[test]
    fn all_constant_examples() {
        let s = CoefficientScenario::all_constant(0.5, 0.5, c(0.5, 0.0)).unwrap();
        let target = SMatrix2::new(PI, c(0.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0));
        assert!(smatrix_closed(&s, PI).unwrap().max_deviation(&target) < 1e-14);
        assert!(smatrix_numeric(&s, PI, 1e-10).unwrap().max_deviation(&target) < 1e-8);
        let half = smatrix_numeric(&s, FRAC_PI_2, 1e-11).unwrap();
        assert!((half.s11() - c(0.5, -0.5)).norm() < 1e-9);
        assert!((half.s12() - c(-0.5, -0.5)).norm() < 1e-9);
    }

    #[test]
    fn constant_phase_rotation() {
        let s = CoefficientScenario::constant_phase(Profile::Constant(1.0), 0.0).unwrap();
        for t in [0.0, 0.4, 1.3] {
            let m = smatrix_closed(&s, t).unwrap();
            let target = SMatrix2::new(t, c(t.cos(), 0.0), c(t.sin(), 0.0), c(-t.sin(), 0.0), c(t.cos(), 0.0));
            assert!(m.max_deviation(&target) < 1e-15);
        }
        let (l, o, g) = closed_factors(&s, FRAC_PI_4, Chart::Principal).unwrap();
        let sample = FactorSample { t: FRAC_PI_4, alpha: 0.0, rho: 0.0, lambda: l, omega: o, gamma: g, chart_valid: true };
        let m = smatrix_from_sample(Ordering::Standard, &sample).unwrap();
        let r = FRAC_1_SQRT_2;
        assert!(m.max_deviation(&SMatrix2::new(0.0, c(r, 0.0), c(r, 0.0), c(-r, 0.0), c(r, 0.0))) < 1e-15);
    }

    #[test]
    fn isotropic_half_period() {
        let r = FRAC_1_SQRT_2;
        let s = CoefficientScenario::isotropic_constant(c(r, 0.0), c(r, 0.0)).unwrap();
        let m = smatrix_closed(&s, PI).unwrap();
        assert!((m.s12() - c(-1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn closed_blocks_match_numeric() {
        let w = Profile::Sinusoid { offset: 0.4, amplitude: 0.2, frequency: 1.3, phase: 0.1 };
        let cases = vec![
            CoefficientScenario::constant_phase(Profile::Sinusoid { offset: 1.0, amplitude: 0.3, frequency: 2.0, phase: 0.0 }, 0.4)
                .unwrap()
                .with_diagonal(w.clone(), Profile::Constant(-0.2))
                .unwrap(),
            CoefficientScenario::linear_phase(0.9, 0.6, 0.3).unwrap().with_diagonal(Profile::Constant(0.3), w.clone()).unwrap(),
            CoefficientScenario::general_phase(1.0, 1.0, PhaseFn::Polynomial(vec![0.2, 1.0, 0.2]), 3.0).unwrap(),
            CoefficientScenario::general_phase(0.7, 1.5, PhaseFn::Polynomial(vec![0.0, -1.0, -0.1]), 3.0).unwrap(),
            CoefficientScenario::all_constant(0.7, 0.3, c(0.25, 0.1)).unwrap(),
            CoefficientScenario::isotropic_constant(c(0.6, 0.0), c(0.0, 0.8)).unwrap(),
            CoefficientScenario::rho_constant(PI / 6.0, 3f64.sqrt() / 2.0, 1.0, 0.2, -0.4).unwrap(),
            CoefficientScenario::log_rho(1.0, 0.8, 1.2, 0.0, 0.5).unwrap(),
        ];
        for s in &cases {
            for t in uniform_grid(s.t_max().min(3.0), 13) {
                let closed = smatrix_closed(s, t).unwrap();
                let numeric = smatrix_numeric(s, t, 1e-11).unwrap();
                assert!(closed.max_deviation(&numeric) < 1e-8, "{:?} at t = {t}", s.tag());
                let (alpha, _) = s.alpha_rho(t).unwrap();
                assert!((closed.determinant() - C64::from_polar(1.0, -alpha)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn factors_rebuild_numeric() {
        let s = CoefficientScenario::linear_phase(1.0, 1.0, 0.3)
            .unwrap()
            .with_diagonal(Profile::Constant(0.2), Profile::Sinusoid { offset: 0.0, amplitude: 0.5, frequency: 1.0, phase: 0.0 })
            .unwrap();
        let grid = uniform_grid(1.2, 13);
        let f = solve_riccati_numeric(&s, &grid, 1e-11).unwrap();
        let alt = f.to_alternative();
        for &t in &grid {
            let numeric = smatrix_numeric(&s, t, 1e-11).unwrap();
            assert!(smatrix_from_factors(&f, t).unwrap().max_deviation(&numeric) < 1e-8);
            assert!(smatrix_from_factors(&alt, t).unwrap().max_deviation(&numeric) < 1e-8);
        }
    }

    #[test]
    fn composition_law() {
        let s = CoefficientScenario::general_phase(1.0, 1.0, PhaseFn::Polynomial(vec![0.0, 1.0, 0.2]), 3.0).unwrap();
        let full = smatrix_numeric(&s, 2.0, 1e-11).unwrap();
        let first = smatrix_numeric(&s, 0.7, 1e-11).unwrap();
        let second = smatrix_numeric_between(&s, 0.7, 2.0, 1e-11).unwrap();
        assert!((second * first).max_deviation(&full) < 1e-9);
    }
}
