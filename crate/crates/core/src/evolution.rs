//! Driven evolution: displacement amplitudes, the scalar phase and the full
//! propagator `U(t) = D(c(t)) e^{iχ(t)} U0(t)`, plus coherent-state dynamics
//! for the `A_αβ` families.

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};

use crate::fock::{
    annihilator, apply, creator, diagonal_exp, displacement_operator, su2_generator, FockSpace, FockState, Mode, Su2,
    TwoModeOperator,
};
use crate::numeric::ode::{dopri5, Flow, OdeOptions};
use crate::numeric::quad::integrate_real;
use crate::riccati::{closed_factors, solve_riccati_numeric, Chart, FactorSample};
use crate::scenario::{Case, CoefficientScenario};
use crate::smatrix::{smatrix_numeric, SMatrix2};
use crate::{Error, Result, C64, I};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentAmplitudes {
    pub c1: C64,
    pub c2: C64,
    /// `e^{iχ(t)}`
    pub global_phase: C64,
    pub t: f64,
}

impl CoherentAmplitudes {
    pub fn norm_sqr(&self) -> f64 {
        self.c1.norm_sqr() + self.c2.norm_sqr()
    }
}

/// `|Z0⟩` as eigenstate of `A = α0 a1 + β0 a2` with eigenvalue `Z0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentStateSpec {
    pub z0: C64,
    pub alpha0: C64,
    pub beta0: C64,
}

impl CoherentStateSpec {
    pub fn new(z0: C64, alpha0: C64, beta0: C64) -> Result<Self> {
        let n = alpha0.norm_sqr() + beta0.norm_sqr();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("|α0|² + |β0|² = {n}, expected 1")));
        }
        Ok(CoherentStateSpec { z0, alpha0, beta0 })
    }

    /// `α0 = cos ρ0 e^{iθα}`, `β0 = sin ρ0 e^{iθβ}`.
    pub fn from_angles(z0: C64, rho0: f64, theta_alpha0: f64, theta_beta0: f64) -> Self {
        CoherentStateSpec {
            z0,
            alpha0: C64::from_polar(rho0.cos(), theta_alpha0),
            beta0: C64::from_polar(rho0.sin(), theta_beta0),
        }
    }

    /// Uses the ladder operator the scenario defines at `t = 0`.
    pub fn for_scenario(scenario: &CoefficientScenario, z0: C64) -> Result<Self> {
        let (alpha0, beta0) = scenario
            .ladder_coefficients(0.0)
            .ok_or_else(|| Error::InvalidParameter(format!("{:?} defines no ladder operator", scenario.tag())))?;
        CoherentStateSpec::new(z0, alpha0, beta0)
    }

    /// `(Z0 α0*, Z0 β0*)`
    pub fn initial_amplitudes(&self) -> (C64, C64) {
        (self.z0 * self.alpha0.conj(), self.z0 * self.beta0.conj())
    }
}

/// `c(t) = S(t) [c̃(0) - i ∫_0^t S†(s) F(s) ds]` and `χ(t)` on a grid.
///
/// `S`, the drive integral and the phase are integrated together so that they
/// share one step sequence.
pub fn c_coefficients_grid(
    scenario: &CoefficientScenario,
    c_tilde0: (C64, C64),
    grid: &[f64],
    tol: f64,
) -> Result<Vec<CoherentAmplitudes>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if let Some(&last) = grid.last() {
        scenario.check_time(last)?;
    }
    let nan = C64::new(f64::NAN, f64::NAN);
    let current = |y: &[C64]| {
        let (b1, b2) = (c_tilde0.0 - I * y[4], c_tilde0.1 - I * y[5]);
        (y[0] * b1 + y[2] * b2, y[1] * b1 + y[3] * b2)
    };
    let rhs = |s: f64, y: &[C64], dy: &mut [C64]| {
        let Ok(k) = scenario.eval_coeffs(s) else {
            dy.iter_mut().for_each(|d| *d = nan);
            return;
        };
        let w = Matrix2::new(C64::from(k.w11), k.w12, k.w21(), C64::from(k.w22));
        for col in 0..2 {
            let (a, b) = (y[2 * col], y[2 * col + 1]);
            dy[2 * col] = -I * (w[(0, 0)] * a + w[(0, 1)] * b);
            dy[2 * col + 1] = -I * (w[(1, 0)] * a + w[(1, 1)] * b);
        }
        // S† F, with S stored column-major as [S11, S21, S12, S22].
        dy[4] = y[0].conj() * k.f1 + y[1].conj() * k.f2;
        dy[5] = y[2].conj() * k.f1 + y[3].conj() * k.f2;
        let (c1, c2) = current(y);
        dy[6] = C64::from(k.b + (k.f1.conj() * c1 + k.f2.conj() * c2).re);
    };
    let one = C64::from(1.0);
    let zero = C64::from(0.0);
    let y0 = [one, zero, zero, one, zero, zero, zero];
    let run = dopri5(rhs, 0.0, &y0, grid, &OdeOptions::with_tol(tol), |_, _| Flow::Continue)?;
    Ok(run
        .values
        .iter()
        .zip(grid)
        .map(|(y, &t)| {
            let (c1, c2) = current(y);
            CoherentAmplitudes { c1, c2, global_phase: C64::from_polar(1.0, -y[6].re), t }
        })
        .collect())
}

pub fn c_coefficients(scenario: &CoefficientScenario, c_tilde0: (C64, C64), t: f64, tol: f64) -> Result<CoherentAmplitudes> {
    Ok(c_coefficients_grid(scenario, c_tilde0, &[t], tol)?[0])
}

/// How `U0` is realised on the Fock space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum U0Method {
    /// Factor exponentials when the chart is valid and well conditioned, otherwise `Regular`.
    Auto,
    /// `e^{-iαN} e^{-iρJ3} e^{ΛJ+} e^{ΩJ3} e^{ΓJ-}`
    Factors,
    /// `exp(Σ (ln S)_σλ a†_σ a_λ)`, defined for every `t`.
    Regular,
}

/// Rounding amplification of the factor product at cutoff `n_max`.
fn factor_conditioning(s: &FactorSample, n_max: usize) -> f64 {
    let n = n_max as f64;
    (1.0 + s.lambda.norm()).powf(n) * (1.0 + s.gamma.norm()).powf(n) * (0.5 * s.omega.re.abs() * n).exp() * 1e-16
}

/// `U0` from standard-ordering factors.
pub fn u0_from_factors(space: FockSpace, s: &FactorSample) -> Result<TwoModeOperator> {
    if !s.chart_valid {
        return Err(Error::ChartSingularity { t: s.t });
    }
    let phase = &diagonal_exp(space, Su2::N, -I * s.alpha) * &diagonal_exp(space, Su2::J3, -I * s.rho);
    let jp = su2_generator(space, Su2::JPlus).scale(s.lambda).exp();
    let jm = su2_generator(space, Su2::JMinus).scale(s.gamma).exp();
    Ok(&(&(&phase * &jp) * &diagonal_exp(space, Su2::J3, s.omega)) * &jm)
}

fn log2(m: &Matrix2<C64>) -> Matrix2<C64> {
    let schur = m.schur();
    let (q, t) = schur.unpack();
    let d = Matrix2::from_diagonal(&nalgebra::Vector2::new(t[(0, 0)].ln(), t[(1, 1)].ln()));
    q * d * q.adjoint()
}

/// `U0 = exp(Σ X_σλ a†_σ a_λ)` with `e^X = S`.
pub fn u0_regular(space: FockSpace, s: &SMatrix2) -> TwoModeOperator {
    let x = log2(&s.entries);
    let a = [annihilator(space, Mode::One), annihilator(space, Mode::Two)];
    let ad = [creator(space, Mode::One), creator(space, Mode::Two)];
    let mut gen = TwoModeOperator::zeros(space);
    for i in 0..2 {
        for j in 0..2 {
            gen = &gen + &(&ad[i] * &a[j]).scale(x[(i, j)]);
        }
    }
    gen.exp()
}

fn factor_sample(scenario: &CoefficientScenario, t: f64, tol: f64) -> Result<FactorSample> {
    let (alpha, rho) = scenario.alpha_rho(t)?;
    let closed = match closed_factors(scenario, t, Chart::Extended) {
        Ok(v) => Some(v),
        Err(Error::NoClosedForm(_)) => None,
        Err(Error::ChartSingularity { .. }) => {
            return Ok(FactorSample { t, alpha, rho, lambda: C64::from(0.0), omega: C64::from(0.0), gamma: C64::from(0.0), chart_valid: false })
        }
        Err(e) => return Err(e),
    };
    if let Some((lambda, omega, gamma)) = closed {
        return Ok(FactorSample { t, alpha, rho, lambda, omega, gamma, chart_valid: true });
    }
    let f = solve_riccati_numeric(scenario, &[t], tol)?;
    Ok(f.samples[0])
}

/// `U(t, 0)` on the truncated space.
pub fn assemble_u(space: FockSpace, scenario: &CoefficientScenario, t: f64, tol: f64) -> Result<TwoModeOperator> {
    assemble_u_with(space, scenario, t, tol, U0Method::Auto)
}

pub fn assemble_u_with(
    space: FockSpace,
    scenario: &CoefficientScenario,
    t: f64,
    tol: f64,
    method: U0Method,
) -> Result<TwoModeOperator> {
    scenario.check_time(t)?;
    if t == 0.0 {
        return Ok(TwoModeOperator::identity(space));
    }
    let u0 = match method {
        U0Method::Regular => u0_regular(space, &smatrix_numeric(scenario, t, tol)?),
        U0Method::Factors => u0_from_factors(space, &factor_sample(scenario, t, tol)?)?,
        U0Method::Auto => {
            let s = factor_sample(scenario, t, tol)?;
            if s.chart_valid && factor_conditioning(&s, space.n_max()) < 1e-10 {
                u0_from_factors(space, &s)?
            } else {
                u0_regular(space, &smatrix_numeric(scenario, t, tol)?)
            }
        }
    };
    if !scenario.has_drive() {
        return Ok(u0);
    }
    let amp = c_coefficients(scenario, (C64::from(0.0), C64::from(0.0)), t, tol)?;
    let d = displacement_operator(space, amp.c1, amp.c2)?;
    Ok((&d * &u0).scale(amp.global_phase))
}

/// Closed coherent-state laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosedCoherent {
    /// Constant `A_αβ`, `H = A†A`: `c_σ(t) = Z0 (α*, β*)_σ e^{-it}`.
    Isotropic,
    /// Any mixing angle `ρ(s)`, integrals by quadrature.
    TimeDependent,
    /// `ρ(s) = ρ0`.
    RhoConstant,
    /// `ρ(s) = arctan(t0 + s)`.
    LogRho,
}

/// The mixing-angle law written with `Φ̃ = (δ/4η0) ∫sin 2ρ` and `Θ̃`.
fn mixing_law(spec: &CoherentStateSpec, eta0: f64, w0: f64, rho0: f64, sin_int: f64, cos_int: f64, t: f64) -> (C64, C64) {
    let delta = (4.0 * eta0 * eta0 + w0 * w0).sqrt();
    let big_phi = delta / (4.0 * eta0) * sin_int;
    let theta = w0 / (2.0 * eta0) * sin_int - cos_int;
    let (s, c) = big_phi.sin_cos();
    let (c10, c20) = spec.initial_amplitudes();
    let base = C64::from_polar(1.0, -0.5 * t);
    // w0/δ (1 ± (2η0/w0) tan/cot ρ0), written without dividing by w0.
    let k1 = (w0 + 2.0 * eta0 * rho0.tan()) / delta;
    let k2 = (w0 - 2.0 * eta0 / rho0.tan()) / delta;
    let c1 = base * C64::from_polar(1.0, 0.5 * theta) * c10 * C64::new(c, -k1 * s);
    let c2 = base * C64::from_polar(1.0, -0.5 * theta) * c20 * C64::new(c, k2 * s);
    (c1, c2)
}

pub fn coherent_evolution_closed(
    kind: ClosedCoherent,
    scenario: &CoefficientScenario,
    spec: &CoherentStateSpec,
    t: f64,
) -> Result<CoherentAmplitudes> {
    scenario.check_time(t)?;
    let (lc_alpha, lc_beta) = scenario
        .ladder_coefficients(0.0)
        .ok_or_else(|| Error::ConditionViolated(format!("{:?} defines no ladder operator", scenario.tag())))?;
    if (lc_alpha - spec.alpha0).norm() > 1e-9 || (lc_beta - spec.beta0).norm() > 1e-9 {
        return Err(Error::ConditionViolated("coherent state does not match the scenario's A_αβ(0)".into()));
    }
    let wrong_case = || Error::ConditionViolated(format!("{kind:?} law does not apply to {:?}", scenario.tag()));
    let (c1, c2) = match kind {
        ClosedCoherent::Isotropic => {
            if !matches!(scenario.case(), Case::IsotropicConstant { .. }) || scenario.has_drive() {
                return Err(wrong_case());
            }
            let (c10, c20) = spec.initial_amplitudes();
            let ph = C64::from_polar(1.0, -t);
            (c10 * ph, c20 * ph)
        }
        ClosedCoherent::TimeDependent | ClosedCoherent::RhoConstant | ClosedCoherent::LogRho => {
            let fam = scenario.mixing_family().ok_or_else(wrong_case)?;
            match (kind, scenario.case()) {
                (ClosedCoherent::RhoConstant, Case::RhoConstant { .. })
                | (ClosedCoherent::LogRho, Case::LogRho { .. })
                | (ClosedCoherent::TimeDependent, _) => {}
                _ => return Err(wrong_case()),
            }
            if scenario.has_drive() {
                return Err(wrong_case());
            }
            let rho = |s: f64| scenario.mixing_angle(s).expect("mixing family");
            let rho0 = rho(0.0);
            let (si, ci) = if kind == ClosedCoherent::TimeDependent {
                (
                    integrate_real(|s| (2.0 * rho(s)).sin(), 0.0, t, 1e-13)?,
                    integrate_real(|s| (2.0 * rho(s)).cos(), 0.0, t, 1e-13)?,
                )
            } else {
                scenario.mixing_integrals(t).expect("mixing family")
            };
            mixing_law(spec, fam.eta0, fam.w0, rho0, si, ci, t)
        }
    };
    Ok(CoherentAmplitudes { c1, c2, global_phase: C64::from(1.0), t })
}

/// Which lowering operator the eigenvalue check uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderKind {
    /// `(c1*/Z0*) a1 + (c2*/Z0*) a2`, eigenvalue `Z0`.
    Generalized,
    /// `u1 a1 + u2 a2` with fixed coefficients, e.g. `A_αβ(0)` or `A_αβ(t)`.
    Fixed(C64, C64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderReport {
    pub eigenvalue: C64,
    /// `‖A ψ - z ψ‖ / ‖ψ‖` on states at least two quanta below the cutoff.
    pub residual: f64,
    /// The same over the whole truncated space.
    pub residual_full: f64,
}

/// Applies a lowering operator to the coherent state with amplitudes `amp`.
pub fn ladder_eigenvalue_check(
    space: FockSpace,
    spec: &CoherentStateSpec,
    amp: &CoherentAmplitudes,
    kind: LadderKind,
) -> Result<LadderReport> {
    let (u1, u2) = match kind {
        LadderKind::Generalized => {
            if spec.z0 == C64::from(0.0) {
                return Ok(LadderReport { eigenvalue: C64::from(0.0), residual: 0.0, residual_full: 0.0 });
            }
            (amp.c1.conj() / spec.z0.conj(), amp.c2.conj() / spec.z0.conj())
        }
        LadderKind::Fixed(u1, u2) => (u1, u2),
    };
    // The displacement guard doubles as the truncation check.
    displacement_operator_guard(space, amp.c1, amp.c2)?;
    let psi = FockState::coherent(space, amp.c1, amp.c2);
    let op = &annihilator(space, Mode::One).scale(u1) + &annihilator(space, Mode::Two).scale(u2);
    let a_psi = apply(&op, &psi)?;
    let margin = 2;
    let (pm, am) = (psi.masked(margin), a_psi.masked(margin));
    let eigenvalue = pm.inner(&am) / pm.inner(&pm);
    let residual = am.sub(&pm.scale(eigenvalue)).norm() / psi.norm();
    let residual_full = a_psi.sub(&psi.scale(eigenvalue)).norm() / psi.norm();
    Ok(LadderReport { eigenvalue, residual, residual_full })
}

fn displacement_operator_guard(space: FockSpace, c1: C64, c2: C64) -> Result<()> {
    let threshold = crate::fock::DEFAULT_TAIL_THRESHOLD;
    let tail = crate::fock::tail_mass(c1, space.n_max()) + crate::fock::tail_mass(c2, space.n_max());
    if tail > threshold {
        return Err(Error::Truncation { tail, n_max: space.n_max(), threshold });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Distinct eigenvalues in increasing order with their multiplicities.
    pub levels: Vec<(f64, usize)>,
    /// `max |E_n - n|` over the compared levels.
    pub max_deviation: f64,
}

/// Diagonalises `A†A`, `A = α a1 + β a2`, on the sectors `n1 + n2 ≤ n_max`
/// (where truncation is exact) and compares the lowest `levels` distinct
/// eigenvalues with `0, 1, 2, ...`.
pub fn habeta_spectrum_check(space: FockSpace, alpha: C64, beta: C64, levels: usize) -> Result<SpectrumReport> {
    let a = &annihilator(space, Mode::One).scale(alpha) + &annihilator(space, Mode::Two).scale(beta);
    let h = &a.adjoint() * &a;
    let keep: Vec<usize> = (0..space.dim())
        .filter(|&k| {
            let (n1, n2) = space.occupations(k);
            n1 + n2 <= space.n_max()
        })
        .collect();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| h.entries()[(keep[i], keep[j])]);
    let mut eig: Vec<f64> = SymmetricEigen::new(sub).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let mut found: Vec<(f64, usize)> = Vec::new();
    for e in eig {
        match found.last_mut() {
            Some((v, m)) if (e - *v).abs() < 1e-6 => {
                *v += (e - *v) / (*m as f64 + 1.0);
                *m += 1;
            }
            _ => found.push((e, 1)),
        }
    }
    if found.len() < levels {
        return Err(Error::InvalidParameter(format!("only {} distinct levels at n_max = {}", found.len(), space.n_max())));
    }
    let max_deviation = found.iter().take(levels).enumerate().map(|(n, (e, _))| (e - n as f64).abs()).fold(0.0, f64::max);
    Ok(SpectrumReport { levels: found, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ComplexDrive, Drive, Profile};
    use crate::uniform_grid;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn undriven_amplitudes_follow_s() {
        let s = CoefficientScenario::all_constant(0.5, 0.5, c(0.5, 0.0)).unwrap();
        let a = c_coefficients(&s, (c(1.0, 0.0), c(0.0, 0.0)), PI, 1e-11).unwrap();
        assert!((a.c1 - c(0.0, 0.0)).norm() < 1e-9 && (a.c2 - c(-1.0, 0.0)).norm() < 1e-9);
        assert_eq!(a.global_phase, c(1.0, 0.0));
        let z = c_coefficients(&s, (c(0.3, 0.1), c(0.2, 0.0)), 0.0, 1e-11).unwrap();
        assert_eq!((z.c1, z.c2), (c(0.3, 0.1), c(0.2, 0.0)));
    }

    #[test]
    fn isotropic_law() {
        let r = FRAC_1_SQRT_2;
        let s = CoefficientScenario::isotropic_constant(c(r, 0.0), c(r, 0.0)).unwrap();
        let spec = CoherentStateSpec::for_scenario(&s, c(1.0, 0.0)).unwrap();
        let a = coherent_evolution_closed(ClosedCoherent::Isotropic, &s, &spec, PI).unwrap();
        assert!((a.c1 - c(-r, 0.0)).norm() < 1e-15 && (a.c2 - c(-r, 0.0)).norm() < 1e-15);
        let n = c_coefficients(&s, spec.initial_amplitudes(), 2.3, 1e-12).unwrap();
        assert!((n.c1 - c(r, 0.0) * C64::from_polar(1.0, -2.3)).norm() < 1e-9);
    }

    #[test]
    fn mixing_laws_match_pipeline() {
        let rc = CoefficientScenario::rho_constant(PI / 6.0, 3f64.sqrt() / 2.0, 1.0, 0.3, -0.2).unwrap();
        let lr = CoefficientScenario::log_rho(1.0, 0.7, 1.1, 0.0, 0.4).unwrap();
        for (s, kind) in [(&rc, ClosedCoherent::RhoConstant), (&lr, ClosedCoherent::LogRho)] {
            let spec = CoherentStateSpec::for_scenario(s, c(0.5, 0.2)).unwrap();
            for t in uniform_grid(2.5, 11) {
                let closed = coherent_evolution_closed(kind, s, &spec, t).unwrap();
                let quad = coherent_evolution_closed(ClosedCoherent::TimeDependent, s, &spec, t).unwrap();
                let num = c_coefficients(s, spec.initial_amplitudes(), t, 1e-12).unwrap();
                assert!((closed.c1 - num.c1).norm() < 1e-9 && (closed.c2 - num.c2).norm() < 1e-9, "{kind:?} t = {t}");
                assert!((closed.c1 - quad.c1).norm() < 1e-11);
                assert!((closed.norm_sqr() - spec.z0.norm_sqr()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stationary_ladder_when_tuned() {
        // 2η0/w0 = tan 2ρ0 freezes A_αβ and the eigenvalue rotates as e^{-it}.
        let rho0 = PI / 6.0;
        let s = CoefficientScenario::rho_constant(rho0, 3f64.sqrt() / 2.0, 1.0, 0.0, 0.0).unwrap();
        let z0 = c(0.5, 0.0);
        let spec = CoherentStateSpec::for_scenario(&s, z0).unwrap();
        let space = FockSpace::new(10).unwrap();
        for t in [0.5, 1.7] {
            let amp = coherent_evolution_closed(ClosedCoherent::RhoConstant, &s, &spec, t).unwrap();
            let (a, b) = s.ladder_coefficients(t).unwrap();
            assert!((a - spec.alpha0).norm() < 1e-12 && (b - spec.beta0).norm() < 1e-12);
            let r = ladder_eigenvalue_check(space, &spec, &amp, LadderKind::Fixed(a, b)).unwrap();
            assert!((r.eigenvalue - z0 * C64::from_polar(1.0, -t)).norm() < 1e-12);
            let g = ladder_eigenvalue_check(space, &spec, &amp, LadderKind::Generalized).unwrap();
            assert!((g.eigenvalue - z0).norm() < 1e-12 && g.residual < 1e-12);
        }
    }

    #[test]
    fn vacuum_ladder_is_trivial() {
        let spec = CoherentStateSpec::from_angles(c(0.0, 0.0), 0.3, 0.0, 0.0);
        let amp = CoherentAmplitudes { c1: c(0.0, 0.0), c2: c(0.0, 0.0), global_phase: c(1.0, 0.0), t: 1.0 };
        let r = ladder_eigenvalue_check(FockSpace::new(4).unwrap(), &spec, &amp, LadderKind::Generalized).unwrap();
        assert_eq!((r.eigenvalue, r.residual), (c(0.0, 0.0), 0.0));
    }

    #[test]
    fn spectrum_is_oscillator_like() {
        let space = FockSpace::new(8).unwrap();
        let r = FRAC_1_SQRT_2;
        let rep = habeta_spectrum_check(space, c(r, 0.0), c(r, 0.0), 6).unwrap();
        assert!(rep.max_deviation < 1e-8);
        for (n, (_, m)) in rep.levels.iter().enumerate() {
            assert_eq!(*m, 8 - n + 1);
        }
        let plain = habeta_spectrum_check(space, c(1.0, 0.0), c(0.0, 0.0), 9).unwrap();
        assert!(plain.max_deviation < 1e-12);
    }

    #[test]
    fn assembled_u_leaves_vacuum_alone() {
        let space = FockSpace::new(6).unwrap();
        let s = CoefficientScenario::linear_phase(1.0, 0.5, 0.2).unwrap();
        let u = assemble_u(space, &s, 1.3, 1e-11).unwrap();
        let out = apply(&u, &FockState::vacuum(space)).unwrap();
        assert!(out.fidelity(&FockState::vacuum(space)) > 1.0 - 1e-12);
        assert_eq!(assemble_u(space, &s, 0.0, 1e-11).unwrap(), TwoModeOperator::identity(space));
    }

    #[test]
    fn factor_and_regular_forms_agree() {
        let space = FockSpace::new(6).unwrap();
        let s = CoefficientScenario::all_constant(0.7, 0.3, c(0.25, 0.1)).unwrap();
        let f = assemble_u_with(space, &s, 1.1, 1e-12, U0Method::Factors).unwrap();
        let r = assemble_u_with(space, &s, 1.1, 1e-12, U0Method::Regular).unwrap();
        assert!(f.interior_deviation(&r, 0) < 1e-9);
    }

    #[test]
    fn driven_coherent_state_tracks_amplitudes() {
        let space = FockSpace::new(12).unwrap();
        let drive = Drive { f1: Some(ComplexDrive::rotating(c(0.1, 0.0), 1.0)), f2: None, b: Profile::Constant(0.3) };
        let s = CoefficientScenario::all_constant(0.7, 0.3, c(0.25, 0.1)).unwrap().with_drive(drive).unwrap();
        let c0 = (c(0.3, 0.1), c(-0.2, 0.2));
        let t = 1.5;
        let u = assemble_u(space, &s, t, 1e-12).unwrap();
        let amp = c_coefficients(&s, c0, t, 1e-12).unwrap();
        let out = apply(&u, &FockState::coherent(space, c0.0, c0.1)).unwrap();
        let expected = FockState::coherent(space, amp.c1, amp.c2);
        assert!(out.fidelity(&expected) > 1.0 - 1e-8);
    }
}
