//! Riccati factors `Λ, Ω, Γ` of `U0 = e^{-iαN} e^{-iρJ3} e^{ΛJ+} e^{ΩJ3} e^{ΓJ-}`.
//!
//! `Λ' = η + η*Λ²`, `Ω' = 2η*Λ`, `Γ' = -η* e^Ω`, all vanishing at 0.
//! The alternative ordering `e^{-iαN} e^{Λ̃J+} e^{Ω̃J3} e^{Γ̃J-}` absorbs the
//! `J3` rotation: `Λ̃ = e^{-iρ}Λ`, `Ω̃ = Ω - iρ`, `Γ̃ = Γ`.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::numeric::ode::{dopri5, Flow, OdeOptions};
use crate::numeric::quad::integrate;
use crate::numeric::{unwrap, wrap_pi};
use crate::scenario::{coupling_norm_integral, Case, CoefficientScenario};
use crate::special::{fresnel_c, kummer_1f1};
use crate::{Error, Result, C64, I};

/// `|Λ|` beyond which the Gauss chart is declared singular.
pub const CHART_LIMIT: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ordering {
    /// `e^{-iαN} e^{-iρJ3} e^{ΛJ+} e^{ΩJ3} e^{ΓJ-}`
    Standard,
    /// `e^{-iαN} e^{Λ̃J+} e^{Ω̃J3} e^{Γ̃J-}`
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorSample {
    pub t: f64,
    pub alpha: f64,
    pub rho: f64,
    pub lambda: C64,
    pub omega: C64,
    pub gamma: C64,
    pub chart_valid: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DisentangledFactors {
    pub ordering: Ordering,
    pub samples: Vec<FactorSample>,
    pub first_singular_time: Option<f64>,
}

impl DisentangledFactors {
    pub fn sample_at(&self, t: f64) -> Option<&FactorSample> {
        self.samples.iter().find(|s| (s.t - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    pub fn valid_samples(&self) -> impl Iterator<Item = &FactorSample> {
        self.samples.iter().filter(|s| s.chart_valid)
    }

    /// Builds a factor set by evaluating `f` on `grid`; the first chart
    /// singularity invalidates every later sample.
    pub fn tabulate<F>(scenario: &CoefficientScenario, ordering: Ordering, grid: &[f64], mut f: F) -> Result<Self>
    where
        F: FnMut(f64) -> Result<(C64, C64, C64)>,
    {
        let mut out = DisentangledFactors { ordering, samples: Vec::with_capacity(grid.len()), first_singular_time: None };
        for &t in grid {
            let (alpha, rho) = scenario.alpha_rho(t)?;
            let value = if out.first_singular_time.is_some() {
                None
            } else {
                match f(t) {
                    Ok(v) => Some(v),
                    Err(Error::ChartSingularity { t: ts }) => {
                        out.first_singular_time = Some(ts);
                        None
                    }
                    Err(e) => return Err(e),
                }
            };
            let nan = C64::new(f64::NAN, f64::NAN);
            let (lambda, omega, gamma) = value.unwrap_or((nan, nan, nan));
            out.samples.push(FactorSample { t, alpha, rho, lambda, omega, gamma, chart_valid: value.is_some() });
        }
        Ok(out)
    }

    /// Standard factors rewritten in the alternative ordering.
    pub fn to_alternative(&self) -> DisentangledFactors {
        match self.ordering {
            Ordering::Alternative => self.clone(),
            Ordering::Standard => DisentangledFactors {
                ordering: Ordering::Alternative,
                samples: self
                    .samples
                    .iter()
                    .map(|s| FactorSample {
                        lambda: s.lambda * C64::from_polar(1.0, -s.rho),
                        omega: s.omega - I * s.rho,
                        ..*s
                    })
                    .collect(),
                first_singular_time: self.first_singular_time,
            },
        }
    }
}

/// Integrates the Riccati system with Ω and Γ carried as extra components.
pub fn solve_riccati_numeric(scenario: &CoefficientScenario, grid: &[f64], tol: f64) -> Result<DisentangledFactors> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    if let Some(&last) = grid.last() {
        scenario.check_time(last)?;
    }
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let eta = scenario.eta(t).unwrap_or(C64::new(f64::NAN, f64::NAN));
        let ec = eta.conj();
        dy[0] = eta + ec * y[0] * y[0];
        dy[1] = 2.0 * ec * y[0];
        dy[2] = -ec * y[1].exp();
    };
    let mut last_norm = 0.0;
    let mut last_t = 0.0;
    let zero = C64::new(0.0, 0.0);
    let result = dopri5(rhs, 0.0, &[zero, zero, zero], grid, &OdeOptions::with_tol(tol), |t, y| {
        last_norm = y[0].norm();
        last_t = t;
        if last_norm > CHART_LIMIT || !last_norm.is_finite() {
            Flow::Stop
        } else {
            Flow::Continue
        }
    });
    let (values, singular) = match result {
        Ok(run) => (run.values, run.stopped_at),
        // Step collapse next to a pole is the same chart breakdown seen from the integrator.
        Err(Error::StepUnderflow { t }) if last_norm > 1e4 => (Vec::new(), Some(t)),
        Err(e) => return Err(e),
    };
    let mut reached = values.into_iter();
    DisentangledFactors::tabulate(scenario, Ordering::Standard, grid, |t| match reached.next() {
        Some(y) => Ok((y[0], y[1], y[2])),
        None => Err(Error::ChartSingularity { t: singular.unwrap_or(t) }),
    })
    .map(|mut f| {
        if f.first_singular_time.is_none() {
            f.first_singular_time = singular;
        }
        f
    })
}

/// Which branch of a closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Chart {
    /// Up to the first zero of the cosine factor.
    Principal,
    /// Continued past it wherever the formulas stay finite.
    Extended,
}

/// Parameters of the linear/general phase closed form.
struct PhaseForm {
    /// `ε η0`
    amp: f64,
    /// `w0`, possibly signed or zero
    w0: f64,
    delta: f64,
    /// Cosine/sine argument.
    x: f64,
    phi_t: f64,
    phi_0: f64,
    phi_tilde: f64,
}

/// `arctan((w0/δ) tan x)` continued through the poles of tan.
fn unwrapped_arctan(k: f64, x: f64) -> f64 {
    let m = (x / PI).round();
    let reduced = x - m * PI;
    (k * reduced.tan()).atan() + k.signum() * m * PI
}

fn phase_form_factors(p: &PhaseForm, t: f64, chart: Chart) -> Result<(C64, C64, C64)> {
    if chart == Chart::Principal && p.x.abs() >= FRAC_PI_2 {
        return Err(Error::ChartSingularity { t });
    }
    let (s, c) = p.x.sin_cos();
    if p.w0 == 0.0 {
        let scale = 2.0 * p.amp / p.delta;
        let tan = s / c;
        if (scale * tan).abs() > CHART_LIMIT || !tan.is_finite() {
            return Err(Error::ChartSingularity { t });
        }
        let lambda = C64::from_polar(scale * tan, p.phi_t);
        let omega = C64::new(-2.0 * c.abs().ln(), 2.0 * PI * (p.x / PI).round());
        let gamma = -C64::from_polar(scale * tan, -p.phi_0);
        return Ok((lambda, omega, gamma));
    }
    let k = p.w0 / p.delta;
    let f = unwrapped_arctan(k, p.x);
    let denom = (p.delta * p.delta * c * c + p.w0 * p.w0 * s * s).sqrt();
    let mag = 2.0 * p.amp * s / denom;
    let lambda = C64::from_polar(mag, p.phi_t - f);
    let omega = C64::new((p.delta * p.delta / (denom * denom)).ln(), p.phi_tilde - 2.0 * f);
    let gamma = -C64::from_polar(mag, -p.phi_0 - f);
    Ok((lambda, omega, gamma))
}

/// Closed-form `(Λ, Ω, Γ)` for the constant, linear and general phase families.
///
/// `AllConstant`, `IsotropicConstant`, `RhoConstant` and `LogRho` are members of
/// the general phase family and are dispatched accordingly.
pub fn closed_factors(scenario: &CoefficientScenario, t: f64, chart: Chart) -> Result<(C64, C64, C64)> {
    scenario.check_time(t)?;
    let zero = C64::new(0.0, 0.0);
    if t == 0.0 {
        return Ok((zero, zero, zero));
    }
    let form = match scenario.case() {
        Case::ConstantPhase { eta_norm, phi0 } => {
            let theta = eta_norm.integral(t);
            if chart == Chart::Principal && theta.abs() >= FRAC_PI_2 {
                return Err(Error::ChartSingularity { t });
            }
            let tan = theta.tan();
            if tan.abs() > CHART_LIMIT {
                return Err(Error::ChartSingularity { t });
            }
            let omega = C64::new(-2.0 * theta.cos().abs().ln(), 2.0 * PI * (theta / PI).round());
            return Ok((C64::from_polar(tan, *phi0), omega, -C64::from_polar(tan, -phi0)));
        }
        Case::LinearPhase { eta0, w0, phi0 } => {
            let delta = (4.0 * eta0 * eta0 + w0 * w0).sqrt();
            PhaseForm { amp: *eta0, w0: *w0, delta, x: 0.5 * delta * t, phi_t: phi0 + w0 * t, phi_0: *phi0, phi_tilde: w0 * t }
        }
        Case::GeneralPhase { eta0, w0, phase, eps } => {
            let delta = (4.0 * eta0 * eta0 + w0 * w0).sqrt();
            let (phi_t, phi_0) = (phase.value(t), phase.value(0.0));
            let phi_tilde = phi_t - phi_0;
            PhaseForm { amp: eps * eta0, w0: *w0, delta, x: delta * phi_tilde / (2.0 * w0), phi_t, phi_0, phi_tilde }
        }
        Case::AllConstant { .. } | Case::IsotropicConstant { .. } => {
            let c = scenario.eval_coeffs(0.0)?;
            let (eta0, w0) = (c.w12.norm(), c.w11 - c.w22);
            let delta = (4.0 * eta0 * eta0 + w0 * w0).sqrt();
            let phi0 = c.w12.arg() - FRAC_PI_2;
            PhaseForm { amp: eta0, w0, delta, x: 0.5 * delta * t, phi_t: phi0 + w0 * t, phi_0: phi0, phi_tilde: w0 * t }
        }
        Case::RhoConstant { eta0, w0, .. } | Case::LogRho { eta0, w0, .. } => {
            let delta = (4.0 * eta0 * eta0 + w0 * w0).sqrt();
            let phi_t = scenario.reference_phase(t).expect("mixing families define φ");
            let phi_0 = scenario.reference_phase(0.0).expect("mixing families define φ");
            let phi_tilde = phi_t - phi_0;
            PhaseForm { amp: *eta0, w0: *w0, delta, x: delta * phi_tilde / (2.0 * w0), phi_t, phi_0, phi_tilde }
        }
        _ => return Err(Error::NoClosedForm(format!("{:?}", scenario.tag()))),
    };
    phase_form_factors(&form, t, chart)
}

/// First time at which the principal chart of the closed form ends.
pub fn principal_chart_end(scenario: &CoefficientScenario) -> Option<f64> {
    match scenario.case() {
        Case::ConstantPhase { eta_norm, .. } => {
            // Scan then bisect for |∫r| = π/2.
            let h = 1e-3;
            let g = |t: f64| eta_norm.integral(t).abs() - FRAC_PI_2;
            let mut a = 0.0;
            for k in 1..=2_000_000 {
                let b = k as f64 * h;
                if b > scenario.t_max() {
                    return None;
                }
                if g(b) >= 0.0 {
                    let mut lo = a;
                    let mut hi = b;
                    for _ in 0..100 {
                        let mid = 0.5 * (lo + hi);
                        if g(mid) >= 0.0 { hi = mid } else { lo = mid }
                    }
                    return Some(hi);
                }
                a = b;
            }
            None
        }
        Case::LinearPhase { eta0, w0, .. } => Some(PI / (4.0 * eta0 * eta0 + w0 * w0).sqrt()),
        Case::AllConstant { .. } | Case::IsotropicConstant { .. } => {
            let c = scenario.eval_coeffs(0.0).ok()?;
            let b = (4.0 * c.w12.norm_sqr() + (c.w11 - c.w22).powi(2)).sqrt();
            Some(PI / b)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugacyReport {
    /// `max |Γ + Λ*|`
    pub gamma_residual: f64,
    /// `max |Im Ω|`
    pub omega_imag: f64,
}

pub fn gamma_conjugacy_check(factors: &DisentangledFactors) -> ConjugacyReport {
    let mut r = ConjugacyReport { gamma_residual: 0.0, omega_imag: 0.0 };
    for s in factors.valid_samples() {
        r.gamma_residual = r.gamma_residual.max((s.gamma + s.lambda.conj()).norm());
        r.omega_imag = r.omega_imag.max(s.omega.im.abs());
    }
    r
}

fn validation_grid(t: f64) -> impl Iterator<Item = f64> {
    (0..=64).map(move |k| t * k as f64 / 64.0)
}

/// Alternative-ordering factors when `θ_u ≡ 0`, i.e. `θ_v0 = π/2 + θ12(s) + ρ(s)` throughout.
pub fn alt_factors_theta_u_zero(scenario: &CoefficientScenario, t: f64) -> Result<(C64, C64, C64)> {
    scenario.check_time(t)?;
    let zero = C64::new(0.0, 0.0);
    if t == 0.0 {
        return Ok((zero, zero, zero));
    }
    let mut theta_v0 = None;
    for s in validation_grid(t) {
        let w12 = scenario.eval_coeffs(s)?.w12;
        if w12.norm() < 1e-12 {
            continue;
        }
        let (_, rho) = scenario.alpha_rho(s)?;
        let here = FRAC_PI_2 + w12.arg() + rho;
        let reference = *theta_v0.get_or_insert(here);
        if wrap_pi(here - reference).abs() > 1e-9 {
            return Err(Error::ConditionViolated(format!("θ_v0 = π/2 + θ12 + ρ fails at s = {s}")));
        }
    }
    let theta_v0 = theta_v0.ok_or_else(|| Error::ConditionViolated("w12 vanishes on the whole interval".into()))?;
    let varrho = coupling_norm_integral(scenario, t, 1e-12)?;
    if varrho >= FRAC_PI_2 {
        return Err(Error::ChartSingularity { t });
    }
    let (_, rho) = scenario.alpha_rho(t)?;
    let tan = varrho.tan().abs();
    Ok((
        -C64::from_polar(tan, theta_v0 - rho),
        C64::new(-2.0 * varrho.cos().ln(), -rho),
        C64::from_polar(tan, -theta_v0),
    ))
}

/// `u(s) = 1F1(iη0²/4θ0; 1/2; iθ0 s²)` and `u'(s) = -η0² s 1F1(1 + iη0²/4θ0; 3/2; iθ0 s²)`.
pub fn quadratic_u(eta0: f64, theta0: f64, s: f64) -> Result<(C64, C64)> {
    if theta0 == 0.0 {
        return Err(Error::InvalidParameter("theta0 must be nonzero".into()));
    }
    let a = C64::new(0.0, eta0 * eta0 / (4.0 * theta0));
    let z = C64::new(0.0, theta0 * s * s);
    let u = kummer_1f1(a, C64::from(0.5), z, 1e-15)?.value;
    let m1 = kummer_1f1(a + 1.0, C64::from(1.5), z, 1e-15)?.value;
    Ok((u, -eta0 * eta0 * s * m1))
}

/// Alternative-ordering factors for `η(s) = η0 e^{-iθ0 s²}`.
pub fn alt_factors_quadratic_phase(
    eta0: f64,
    theta0: f64,
    scenario: &CoefficientScenario,
    t: f64,
) -> Result<(C64, C64, C64)> {
    if theta0 == 0.0 {
        return Err(Error::InvalidParameter("theta0 must be nonzero".into()));
    }
    scenario.check_time(t)?;
    for s in validation_grid(t) {
        let expected = C64::from_polar(eta0, -theta0 * s * s);
        if (scenario.eta(s)? - expected).norm() > 1e-9 {
            return Err(Error::ConditionViolated(format!("η(s) ≠ η0 e^(-iθ0 s²) at s = {s}")));
        }
    }
    let zero = C64::new(0.0, 0.0);
    if t == 0.0 {
        return Ok((zero, zero, zero));
    }
    // Continuous branch of ln u along [0, t].
    let n = 64 * (1 + (theta0.abs() * t * t + eta0 * t).ceil() as usize);
    let mut args = Vec::with_capacity(n + 1);
    let mut u_t = C64::from(1.0);
    let mut udot_t = zero;
    for k in 0..=n {
        let s = t * k as f64 / n as f64;
        let (u, udot) = quadratic_u(eta0, theta0, s)?;
        if u.norm() < 1e-8 {
            return Err(Error::ChartSingularity { t: s });
        }
        args.push(u.arg());
        u_t = u;
        udot_t = udot;
    }
    let arg = *unwrap(&args).last().expect("nonempty");
    let log_u = C64::new(u_t.norm().ln(), arg);
    let (_, rho) = scenario.alpha_rho(t)?;
    let lambda = -udot_t / (u_t * C64::from_polar(eta0, theta0 * t * t));
    let mut failure = None;
    let gamma = -integrate(
        |s| match quadratic_u(eta0, theta0, s) {
            Ok((u, _)) => C64::from_polar(eta0, theta0 * s * s) / (u * u),
            Err(e) => {
                failure = Some(e);
                C64::new(f64::NAN, f64::NAN)
            }
        },
        0.0,
        t,
        1e-12,
    )
    .map_err(|e| failure.clone().unwrap_or(e))?;
    Ok((lambda * C64::from_polar(1.0, -rho), -2.0 * log_u - I * rho, gamma))
}

/// `ϱ(t)` for `|w12(s)| = w12_0 |cos ν s²|`, valid on every lobe of the cosine.
pub fn fresnel_varrho(w12_0: f64, nu: f64, t: f64) -> Result<f64> {
    let probe = CoefficientScenario::fresnel_norm(w12_0, nu, 0.0, 0.0)?;
    probe.fresnel_varrho(t)
}

/// The same angle from the single-lobe expression
/// `2 arctan tanh[w12_0 √π √(1 + cos 2νt²) C(√(2ν/π) t) sec(νt²) / (4√ν)]`,
/// which only holds while `ν t² < π/2`.
pub fn fresnel_varrho_first_lobe(w12_0: f64, nu: f64, t: f64) -> Result<f64> {
    if nu * t * t >= FRAC_PI_2 {
        return Err(Error::InvalidParameter("outside the first lobe of cos(ν t²)".into()));
    }
    let fc = fresnel_c((2.0 * nu / PI).sqrt() * t, 1e-14)?.value.re;
    let arg = w12_0 * PI.sqrt() * (1.0 + (2.0 * nu * t * t).cos()).sqrt() * fc / ((nu * t * t).cos() * 4.0 * nu.sqrt());
    Ok(2.0 * arg.tanh().atan())
}

/// Alternative-ordering factors for the Fresnel-norm family (`θ_v = ϱ + θ_v0`).
pub fn alt_factors_fresnel(
    w12_0: f64,
    nu: f64,
    theta_offsets: (f64, f64),
    scenario: &CoefficientScenario,
    t: f64,
) -> Result<(C64, C64, C64)> {
    let (theta_v0, theta_u0) = theta_offsets;
    if theta_u0 != 0.0 {
        return Err(Error::ConditionViolated("theta_u0 must be 0 so that u(0) = 1".into()));
    }
    scenario.check_time(t)?;
    for s in validation_grid(t) {
        let c = scenario.eval_coeffs(s)?;
        let expected_norm = w12_0 * (nu * s * s).cos().abs();
        if (c.w12.norm() - expected_norm).abs() > 1e-9 {
            return Err(Error::ConditionViolated(format!("|w12| ≠ w12_0 |cos ν s²| at s = {s}")));
        }
        if expected_norm < 1e-12 {
            continue;
        }
        let vr = fresnel_varrho(w12_0, nu, s)?;
        let (_, rho) = scenario.alpha_rho(s)?;
        let lhs = 3.0 * vr - vr.tan() + theta_v0 - theta_u0;
        if wrap_pi(lhs - (FRAC_PI_2 + c.w12.arg() + rho)).abs() > 1e-9 {
            return Err(Error::ConditionViolated(format!("phase constraint fails at s = {s}")));
        }
    }
    let zero = C64::new(0.0, 0.0);
    if t == 0.0 {
        return Ok((zero, zero, zero));
    }
    let vr = fresnel_varrho(w12_0, nu, t)?;
    let tan = vr.tan().abs();
    if vr >= FRAC_PI_2 || tan > CHART_LIMIT {
        return Err(Error::ChartSingularity { t });
    }
    let theta_v = vr + theta_v0;
    let theta_u = vr.tan() - vr + theta_u0;
    let (_, rho) = scenario.alpha_rho(t)?;
    Ok((
        -C64::from_polar(tan, theta_v - theta_u - rho),
        C64::new(-2.0 * vr.cos().ln(), -2.0 * theta_u - rho),
        C64::from_polar(tan, -(theta_v + theta_u)),
    ))
}
