//! Coefficient families for `H = Σ w_σλ a†_σ a_λ + Σ (F_σ a†_σ + F*_σ a_σ) + B`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use crate::numeric::quad::integrate_real;
use crate::numeric::spline::Spline;
use crate::numeric::{unwrap, wrap_pi};
use crate::special::fresnel_c;
use crate::{Error, Result, C64, I};

mod file;

pub use file::{load_scenario, parse_scenario, parse_table};

/// Coefficients of the Hamiltonian at one instant. `w21 = conj(w12)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffSample {
    pub t: f64,
    pub w11: f64,
    pub w22: f64,
    pub w12: C64,
    pub f1: C64,
    pub f2: C64,
    pub b: f64,
}

impl CoeffSample {
    pub fn w21(&self) -> C64 {
        self.w12.conj()
    }
}

/// Real scalar function of time with a closed-form integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    /// `offset + amplitude · sin(frequency · t + phase)`
    Sinusoid { offset: f64, amplitude: f64, frequency: f64, phase: f64 },
}

impl Default for Profile {
    fn default() -> Self {
        Profile::Constant(0.0)
    }
}

impl Profile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Sinusoid { offset, amplitude, frequency, phase } => offset + amplitude * (frequency * t + phase).sin(),
        }
    }

    /// `∫_0^t value`.
    pub fn integral(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c * t,
            Profile::Sinusoid { offset, amplitude, frequency, phase } => {
                if frequency == 0.0 {
                    (offset + amplitude * phase.sin()) * t
                } else {
                    offset * t + amplitude * (phase.cos() - (frequency * t + phase).cos()) / frequency
                }
            }
        }
    }
}

/// Complex drive `amplitude · e^{i frequency t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexDrive {
    pub amplitude: C64,
    pub frequency: f64,
}

impl ComplexDrive {
    pub const ZERO: ComplexDrive = ComplexDrive { amplitude: C64::new(0.0, 0.0), frequency: 0.0 };

    pub fn constant(value: C64) -> Self {
        ComplexDrive { amplitude: value, frequency: 0.0 }
    }

    pub fn rotating(amplitude: C64, frequency: f64) -> Self {
        ComplexDrive { amplitude, frequency }
    }

    pub fn value(&self, t: f64) -> C64 {
        self.amplitude * C64::from_polar(1.0, self.frequency * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Drive {
    pub f1: Option<ComplexDrive>,
    pub f2: Option<ComplexDrive>,
    pub b: Profile,
}

impl Drive {
    pub fn is_zero(&self) -> bool {
        let zero = |d: &Option<ComplexDrive>| d.map_or(true, |d| d.amplitude == C64::new(0.0, 0.0));
        zero(&self.f1) && zero(&self.f2) && self.b == Profile::Constant(0.0)
    }
}

/// Phase `φ(s)` with derivative.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseFn {
    /// `Σ c_k s^k`
    Polynomial(Vec<f64>),
    /// Cubic spline through uniformly sampled values.
    Tabulated(Spline),
}

impl PhaseFn {
    pub fn value(&self, s: f64) -> f64 {
        match self {
            PhaseFn::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * s + ck),
            PhaseFn::Tabulated(sp) => sp.eval(s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            PhaseFn::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * s + k as f64 * ck),
            PhaseFn::Tabulated(sp) => sp.derivative(s),
        }
    }
}

/// Uniformly sampled coefficients, interpolated by cubic splines.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub(crate) w11: Spline,
    pub(crate) w22: Spline,
    pub(crate) re_w12: Spline,
    pub(crate) im_w12: Spline,
    pub(crate) re_f1: Spline,
    pub(crate) im_f1: Spline,
    pub(crate) re_f2: Spline,
    pub(crate) im_f2: Spline,
    pub(crate) b: Spline,
}

impl Table {
    pub fn t_max(&self) -> f64 {
        self.w11.x_max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseTag {
    ConstantPhase,
    LinearPhase,
    GeneralPhase,
    AllConstant,
    IsotropicConstant,
    RhoConstant,
    LogRho,
    QuadraticPhase,
    FresnelNorm,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Case {
    /// `η(s) = r(s) e^{iφ0}`.
    ConstantPhase { eta_norm: Profile, phi0: f64 },
    /// `η(s) = η0 e^{i(φ0 + w0 s)}`.
    LinearPhase { eta0: f64, w0: f64, phi0: f64 },
    /// `η(s) = ε (η0/w0) φ'(s) e^{iφ(s)}`, `ε = sign φ'`.
    GeneralPhase { eta0: f64, w0: f64, phase: PhaseFn, eps: f64 },
    AllConstant { w11: f64, w22: f64, w12: C64 },
    /// `H = A†A`, `A = α a1 + β a2`.
    IsotropicConstant { alpha: C64, beta: C64 },
    /// Mixing angle fixed at `rho0`.
    RhoConstant { rho0: f64, eta0: f64, w0: f64, theta_alpha0: f64, theta_beta0: f64 },
    /// Mixing angle `arctan(t0 + s)`.
    LogRho { t0: f64, eta0: f64, w0: f64, theta_alpha0: f64, theta_beta0: f64 },
    /// `η(s) = η0 e^{-iθ0 s²}`.
    QuadraticPhase { eta0: f64, theta0: f64 },
    /// `|w12(s)| = w12_0 |cos(ν s²)|` with the phase fixed by the θ_v = ϱ + θ_v0 construction.
    FresnelNorm { w12_0: f64, nu: f64, theta_v0: f64, theta_u0: f64 },
    Tabulated(Table),
}

impl Case {
    pub fn tag(&self) -> CaseTag {
        match self {
            Case::ConstantPhase { .. } => CaseTag::ConstantPhase,
            Case::LinearPhase { .. } => CaseTag::LinearPhase,
            Case::GeneralPhase { .. } => CaseTag::GeneralPhase,
            Case::AllConstant { .. } => CaseTag::AllConstant,
            Case::IsotropicConstant { .. } => CaseTag::IsotropicConstant,
            Case::RhoConstant { .. } => CaseTag::RhoConstant,
            Case::LogRho { .. } => CaseTag::LogRho,
            Case::QuadraticPhase { .. } => CaseTag::QuadraticPhase,
            Case::FresnelNorm { .. } => CaseTag::FresnelNorm,
            Case::Tabulated(_) => CaseTag::Tabulated,
        }
    }
}

/// Parameters of the time-dependent `A_αβ(t)` families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingFamily {
    pub eta0: f64,
    pub w0: f64,
    pub theta_alpha0: f64,
    pub theta_beta0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientScenario {
    case: Case,
    w11: Profile,
    w22: Profile,
    drive: Drive,
    t_max: f64,
    z0: Option<C64>,
}

fn positive(name: &str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {x}")))
    }
}

fn finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite")))
    }
}

impl CoefficientScenario {
    fn from_case(case: Case) -> Self {
        CoefficientScenario {
            case,
            w11: Profile::default(),
            w22: Profile::default(),
            drive: Drive::default(),
            t_max: f64::INFINITY,
            z0: None,
        }
    }

    pub fn constant_phase(eta_norm: Profile, phi0: f64) -> Result<Self> {
        Ok(Self::from_case(Case::ConstantPhase { eta_norm, phi0: finite("phi0", phi0)? }))
    }

    pub fn linear_phase(eta0: f64, w0: f64, phi0: f64) -> Result<Self> {
        Ok(Self::from_case(Case::LinearPhase {
            eta0: positive("eta0", eta0)?,
            w0: finite("w0", w0)?,
            phi0: finite("phi0", phi0)?,
        }))
    }

    /// The sign ε is inferred from `φ'` on `[0, t_max]`; a sign change is rejected.
    pub fn general_phase(eta0: f64, w0: f64, phase: PhaseFn, t_max: f64) -> Result<Self> {
        positive("eta0", eta0)?;
        positive("w0", w0)?;
        positive("t_max", t_max)?;
        let eps = infer_epsilon(&phase, t_max)?;
        let mut s = Self::from_case(Case::GeneralPhase { eta0, w0, phase, eps });
        s.t_max = t_max;
        Ok(s)
    }

    pub fn all_constant(w11: f64, w22: f64, w12: C64) -> Result<Self> {
        finite("w11", w11)?;
        finite("w22", w22)?;
        Ok(Self::from_case(Case::AllConstant { w11, w22, w12 }))
    }

    pub fn isotropic_constant(alpha: C64, beta: C64) -> Result<Self> {
        let norm = alpha.norm_sqr() + beta.norm_sqr();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("|alpha|² + |beta|² = {norm}, expected 1")));
        }
        Ok(Self::from_case(Case::IsotropicConstant { alpha, beta }))
    }

    pub fn rho_constant(rho0: f64, eta0: f64, w0: f64, theta_alpha0: f64, theta_beta0: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0 < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("rho0 = {rho0} outside (0, π/2)")));
        }
        Ok(Self::from_case(Case::RhoConstant {
            rho0,
            eta0: positive("eta0", eta0)?,
            w0: positive("w0", w0)?,
            theta_alpha0: finite("theta_alpha0", theta_alpha0)?,
            theta_beta0: finite("theta_beta0", theta_beta0)?,
        }))
    }

    pub fn log_rho(t0: f64, eta0: f64, w0: f64, theta_alpha0: f64, theta_beta0: f64) -> Result<Self> {
        Ok(Self::from_case(Case::LogRho {
            t0: positive("t0", t0)?,
            eta0: positive("eta0", eta0)?,
            w0: positive("w0", w0)?,
            theta_alpha0: finite("theta_alpha0", theta_alpha0)?,
            theta_beta0: finite("theta_beta0", theta_beta0)?,
        }))
    }

    pub fn quadratic_phase(eta0: f64, theta0: f64) -> Result<Self> {
        if theta0 == 0.0 || !theta0.is_finite() {
            return Err(Error::InvalidParameter("theta0 must be nonzero".into()));
        }
        Ok(Self::from_case(Case::QuadraticPhase { eta0: positive("eta0", eta0)?, theta0 }))
    }

    /// `θ_u0` must vanish: the auxiliary function u starts at 1.
    pub fn fresnel_norm(w12_0: f64, nu: f64, theta_v0: f64, theta_u0: f64) -> Result<Self> {
        if theta_u0 != 0.0 {
            return Err(Error::ConditionViolated("theta_u0 must be 0 so that u(0) = 1".into()));
        }
        let w12_0 = positive("w12_0", w12_0)?;
        let nu = positive("nu", nu)?;
        let mut s = Self::from_case(Case::FresnelNorm { w12_0, nu, theta_v0: finite("theta_v0", theta_v0)?, theta_u0 });
        // Series policy bound on the Fresnel argument.
        s.t_max = (crate::special::SERIES_RADIUS * 2.0 / PI).sqrt() * (PI / (2.0 * nu)).sqrt();
        Ok(s)
    }

    pub fn tabulated(table: Table) -> Self {
        let t_max = table.t_max();
        let mut s = Self::from_case(Case::Tabulated(table));
        s.t_max = t_max;
        s
    }

    /// Sets `w11`, `w22` for the cases that leave the diagonal free.
    pub fn with_diagonal(mut self, w11: Profile, w22: Profile) -> Result<Self> {
        match self.case.tag() {
            CaseTag::ConstantPhase | CaseTag::LinearPhase | CaseTag::GeneralPhase | CaseTag::QuadraticPhase
            | CaseTag::FresnelNorm => {
                self.w11 = w11;
                self.w22 = w22;
                Ok(self)
            }
            tag => Err(Error::InvalidParameter(format!("{tag:?} fixes its own diagonal"))),
        }
    }

    pub fn with_drive(mut self, drive: Drive) -> Result<Self> {
        if let Case::Tabulated(_) = self.case {
            return Err(Error::InvalidParameter("tabulated scenarios carry their drive in the table".into()));
        }
        self.drive = drive;
        Ok(self)
    }

    pub fn with_domain(mut self, t_max: f64) -> Result<Self> {
        positive("t_max", t_max)?;
        if t_max > self.t_max {
            return Err(Error::InvalidParameter(format!("domain cannot grow beyond {}", self.t_max)));
        }
        self.t_max = t_max;
        Ok(self)
    }

    pub fn with_z0(mut self, z0: C64) -> Self {
        self.z0 = Some(z0);
        self
    }

    pub fn case(&self) -> &Case {
        &self.case
    }

    pub fn tag(&self) -> CaseTag {
        self.case.tag()
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn z0(&self) -> Option<C64> {
        self.z0
    }

    pub fn drive(&self) -> &Drive {
        &self.drive
    }

    pub fn has_drive(&self) -> bool {
        match &self.case {
            Case::Tabulated(tab) => {
                let nonzero = |s: &Spline| (0..=64).any(|k| s.eval(tab.t_max() * k as f64 / 64.0) != 0.0);
                nonzero(&tab.re_f1) || nonzero(&tab.im_f1) || nonzero(&tab.re_f2) || nonzero(&tab.im_f2) || nonzero(&tab.b)
            }
            _ => !self.drive.is_zero(),
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if t < -1e-12 || t > self.t_max * (1.0 + 1e-12) + 1e-12 || t.is_nan() {
            return Err(Error::Domain { t, t_max: self.t_max });
        }
        Ok(())
    }

    /// Mixing angle of the `A_αβ(t)` families.
    pub fn mixing_angle(&self, t: f64) -> Option<f64> {
        match self.case {
            Case::RhoConstant { rho0, .. } => Some(rho0),
            Case::LogRho { t0, .. } => Some((t0 + t).atan()),
            _ => None,
        }
    }

    pub fn mixing_family(&self) -> Option<MixingFamily> {
        match self.case {
            Case::RhoConstant { eta0, w0, theta_alpha0, theta_beta0, .. }
            | Case::LogRho { eta0, w0, theta_alpha0, theta_beta0, .. } => {
                Some(MixingFamily { eta0, w0, theta_alpha0, theta_beta0 })
            }
            _ => None,
        }
    }

    /// `(∫_0^t sin 2ρ, ∫_0^t cos 2ρ)` for the mixing angle ρ, in closed form.
    pub fn mixing_integrals(&self, t: f64) -> Option<(f64, f64)> {
        match self.case {
            Case::RhoConstant { rho0, .. } => Some(((2.0 * rho0).sin() * t, (2.0 * rho0).cos() * t)),
            Case::LogRho { t0, .. } => {
                let x = t0 + t;
                let sin_int = ((1.0 + x * x) / (1.0 + t0 * t0)).ln();
                let cos_int = 2.0 * (x.atan() - t0.atan()) - t;
                Some((sin_int, cos_int))
            }
            _ => None,
        }
    }

    /// `Θ̃(t) = ∫_0^t [(w0/2η0) sin 2ρ - cos 2ρ]`, the drift of `θ_β - θ_α`.
    pub fn theta_tilde(&self, t: f64) -> Option<f64> {
        let fam = self.mixing_family()?;
        let (si, ci) = self.mixing_integrals(t)?;
        Some(fam.w0 / (2.0 * fam.eta0) * si - ci)
    }

    /// `(α(t), β(t))` of `A_αβ(t)`, splitting `Θ̃` symmetrically between the two phases.
    pub fn ladder_coefficients(&self, t: f64) -> Option<(C64, C64)> {
        match self.case {
            Case::IsotropicConstant { alpha, beta } => Some((alpha, beta)),
            _ => {
                let fam = self.mixing_family()?;
                let rho = self.mixing_angle(t)?;
                let half = 0.5 * self.theta_tilde(t)?;
                Some((
                    C64::from_polar(rho.cos(), fam.theta_alpha0 - half),
                    C64::from_polar(rho.sin(), fam.theta_beta0 + half),
                ))
            }
        }
    }

    /// Fresnel-case angle `ϱ(t) = gd(w12_0 ∫_0^t |cos ν s²| ds)`.
    pub fn fresnel_varrho(&self, t: f64) -> Result<f64> {
        match self.case {
            Case::FresnelNorm { w12_0, nu, .. } => {
                let scale = (PI / (2.0 * nu)).sqrt();
                let x = t / scale;
                let integral = scale * abs_cos_integral(x)?;
                Ok(2.0 * (0.5 * w12_0 * integral).tanh().atan())
            }
            _ => Err(Error::InvalidParameter("not a Fresnel scenario".into())),
        }
    }

    /// Coefficients at time `t`.
    pub fn eval_coeffs(&self, t: f64) -> Result<CoeffSample> {
        self.check_time(t)?;
        let (w11, w22) = self.diagonal(t);
        let w12 = self.w12(t)?;
        let (f1, f2, b) = match &self.case {
            Case::Tabulated(tab) => (
                C64::new(tab.re_f1.eval(t), tab.im_f1.eval(t)),
                C64::new(tab.re_f2.eval(t), tab.im_f2.eval(t)),
                tab.b.eval(t),
            ),
            _ => (
                self.drive.f1.map_or(C64::new(0.0, 0.0), |d| d.value(t)),
                self.drive.f2.map_or(C64::new(0.0, 0.0), |d| d.value(t)),
                self.drive.b.value(t),
            ),
        };
        Ok(CoeffSample { t, w11, w22, w12, f1, f2, b })
    }

    fn diagonal(&self, t: f64) -> (f64, f64) {
        match &self.case {
            Case::AllConstant { w11, w22, .. } => (*w11, *w22),
            Case::IsotropicConstant { alpha, beta } => (alpha.norm_sqr(), beta.norm_sqr()),
            Case::RhoConstant { rho0, .. } => (rho0.cos().powi(2), rho0.sin().powi(2)),
            Case::LogRho { t0, .. } => {
                let x2 = (t0 + t).powi(2);
                (1.0 / (1.0 + x2), x2 / (1.0 + x2))
            }
            Case::Tabulated(tab) => (tab.w11.eval(t), tab.w22.eval(t)),
            _ => (self.w11.value(t), self.w22.value(t)),
        }
    }

    /// `(∫_0^t w11, ∫_0^t w22)`.
    pub fn diagonal_integrals(&self, t: f64) -> (f64, f64) {
        match &self.case {
            Case::AllConstant { w11, w22, .. } => (w11 * t, w22 * t),
            Case::IsotropicConstant { alpha, beta } => (alpha.norm_sqr() * t, beta.norm_sqr() * t),
            Case::RhoConstant { rho0, .. } => (rho0.cos().powi(2) * t, rho0.sin().powi(2) * t),
            Case::LogRho { t0, .. } => {
                let a = (t0 + t).atan() - t0.atan();
                (a, t - a)
            }
            Case::Tabulated(tab) => (tab.w11.integral(t), tab.w22.integral(t)),
            _ => (self.w11.integral(t), self.w22.integral(t)),
        }
    }

    fn w12(&self, t: f64) -> Result<C64> {
        let rho = self.alpha_rho_unchecked(t).1;
        let counter_rotate = C64::from_polar(1.0, -rho);
        Ok(match &self.case {
            Case::ConstantPhase { eta_norm, phi0 } => I * C64::from_polar(eta_norm.value(t), *phi0) * counter_rotate,
            Case::LinearPhase { eta0, w0, phi0 } => I * C64::from_polar(*eta0, phi0 + w0 * t) * counter_rotate,
            Case::GeneralPhase { eta0, w0, phase, eps } => {
                let r = eps * eta0 / w0 * phase.derivative(t);
                I * C64::from_polar(r, phase.value(t)) * counter_rotate
            }
            Case::AllConstant { w12, .. } => *w12,
            Case::IsotropicConstant { alpha, beta } => alpha.conj() * beta,
            Case::RhoConstant { rho0, theta_alpha0, theta_beta0, .. } => {
                let drift = self.theta_tilde(t).unwrap_or(0.0);
                C64::from_polar(rho0.cos() * rho0.sin(), theta_beta0 - theta_alpha0 + drift)
            }
            Case::LogRho { t0, theta_alpha0, theta_beta0, .. } => {
                let x = t0 + t;
                let drift = self.theta_tilde(t).unwrap_or(0.0);
                C64::from_polar(x / (1.0 + x * x), theta_beta0 - theta_alpha0 + drift)
            }
            Case::QuadraticPhase { eta0, theta0 } => I * C64::from_polar(*eta0, -theta0 * t * t) * counter_rotate,
            Case::FresnelNorm { w12_0, nu, theta_v0, theta_u0 } => {
                let vr = self.fresnel_varrho(t)?;
                let theta12 = 3.0 * vr - vr.tan() + theta_v0 - theta_u0 - FRAC_PI_2 - rho;
                C64::from_polar(w12_0 * (nu * t * t).cos().abs(), theta12)
            }
            Case::Tabulated(tab) => C64::new(tab.re_w12.eval(t), tab.im_w12.eval(t)),
        })
    }

    fn alpha_rho_unchecked(&self, t: f64) -> (f64, f64) {
        let (i11, i22) = self.diagonal_integrals(t);
        (i11 + i22, i11 - i22)
    }

    /// `α(t) = ∫_0^t (w11 + w22)`, `ρ(t) = ∫_0^t (w11 - w22)`.
    pub fn alpha_rho(&self, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        Ok(self.alpha_rho_unchecked(t))
    }

    /// `η(t) = -i w12(t) e^{iρ(t)}`.
    pub fn eta(&self, t: f64) -> Result<C64> {
        self.check_time(t)?;
        let rho = self.alpha_rho_unchecked(t).1;
        Ok(-I * self.w12(t)? * C64::from_polar(1.0, rho))
    }

    /// The case's own reference phase φ(t), where the case defines one.
    pub fn reference_phase(&self, t: f64) -> Option<f64> {
        Some(match &self.case {
            Case::ConstantPhase { phi0, .. } => *phi0,
            Case::LinearPhase { w0, phi0, .. } => phi0 + w0 * t,
            Case::GeneralPhase { phase, .. } => phase.value(t),
            Case::AllConstant { w11, w22, w12 } => w12.arg() - FRAC_PI_2 + (w11 - w22) * t,
            Case::IsotropicConstant { alpha, beta } => {
                (alpha.conj() * beta).arg() - FRAC_PI_2 + (alpha.norm_sqr() - beta.norm_sqr()) * t
            }
            Case::RhoConstant { .. } | Case::LogRho { .. } => {
                let fam = self.mixing_family()?;
                let (si, _) = self.mixing_integrals(t)?;
                fam.theta_beta0 - fam.theta_alpha0 - FRAC_PI_2 + fam.w0 / (2.0 * fam.eta0) * si
            }
            Case::QuadraticPhase { theta0, .. } => -theta0 * t * t,
            Case::FresnelNorm { theta_v0, theta_u0, .. } => {
                let vr = self.fresnel_varrho(t).ok()?;
                3.0 * vr - vr.tan() + theta_v0 - theta_u0 - PI
            }
            Case::Tabulated(_) => return None,
        })
    }
}

/// `∫_0^x |cos(π u²/2)| du`, summing Fresnel-integral differences lobe by lobe.
fn abs_cos_integral(x: f64) -> Result<f64> {
    let sign = x.signum();
    let x = x.abs();
    let c = |u: f64| -> Result<f64> { Ok(fresnel_c(u, 1e-10)?.value.re) };
    let mut total = 0.0;
    let mut lower = 0.0;
    let mut k = 0usize;
    loop {
        let upper = ((2 * k + 1) as f64).sqrt();
        let end = upper.min(x);
        let piece = c(end)? - c(lower)?;
        total += if k % 2 == 0 { piece } else { -piece };
        if upper >= x {
            break;
        }
        lower = upper;
        k += 1;
    }
    Ok(sign * total)
}

fn infer_epsilon(phase: &PhaseFn, t_max: f64) -> Result<f64> {
    let n = 2000;
    let (mut pos, mut neg) = (false, false);
    for k in 0..=n {
        let d = phase.derivative(t_max * k as f64 / n as f64);
        if d.abs() < 1e-12 {
            continue;
        }
        if d > 0.0 {
            pos = true;
        } else {
            neg = true;
        }
    }
    match (pos, neg) {
        (true, false) => Ok(1.0),
        (false, true) => Ok(-1.0),
        (true, true) => Err(Error::ConditionViolated("dφ/ds changes sign on the domain".into())),
        (false, false) => Err(Error::ConditionViolated("dφ/ds vanishes on the whole domain".into())),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseConditionReport {
    pub satisfied: bool,
    pub max_violation: f64,
    pub violating_times: Vec<f64>,
}

/// Phase the condition is checked against.
#[derive(Debug, Clone, PartialEq)]
pub enum PhaseTarget {
    /// The scenario's own φ(t).
    Own,
    /// φ constant, read off at t = 0.
    ConstantFromStart,
    Function(PhaseFn),
}

pub const PHASE_TOLERANCE: f64 = 1e-9;

/// Checks `θ12(t) = φ(t) + π/2 - ρ(t)` (mod 2π) against the scenario's own phase.
pub fn check_phase_condition(scenario: &CoefficientScenario, grid: &[f64]) -> Result<PhaseConditionReport> {
    check_phase_condition_against(scenario, grid, &PhaseTarget::Own)
}

pub fn check_phase_condition_against(
    scenario: &CoefficientScenario,
    grid: &[f64],
    target: &PhaseTarget,
) -> Result<PhaseConditionReport> {
    let mut times = Vec::new();
    let mut residuals = Vec::new();
    let mut start_phase = None;
    for &t in grid {
        let c = scenario.eval_coeffs(t)?;
        if c.w12.norm() < 1e-12 {
            continue;
        }
        let (_, rho) = scenario.alpha_rho(t)?;
        let phi = match target {
            PhaseTarget::Own => scenario
                .reference_phase(t)
                .ok_or_else(|| Error::ConditionViolated(format!("{:?} has no reference phase", scenario.tag())))?,
            PhaseTarget::ConstantFromStart => *start_phase.get_or_insert_with(|| {
                let c0 = scenario.eval_coeffs(0.0).expect("t = 0 is in every domain");
                c0.w12.arg() - FRAC_PI_2
            }),
            PhaseTarget::Function(f) => f.value(t),
        };
        times.push(t);
        residuals.push(c.w12.arg() - (phi + FRAC_PI_2 - rho));
    }
    let mut unwrapped = unwrap(&residuals);
    if let Some(&first) = unwrapped.first() {
        let shift = first - wrap_pi(first);
        unwrapped.iter_mut().for_each(|r| *r -= shift);
    }
    let mut report = PhaseConditionReport { satisfied: true, max_violation: 0.0, violating_times: Vec::new() };
    for (t, r) in times.iter().zip(&unwrapped) {
        report.max_violation = report.max_violation.max(r.abs());
        if r.abs() > PHASE_TOLERANCE {
            report.violating_times.push(*t);
        }
    }
    report.satisfied = report.max_violation <= PHASE_TOLERANCE;
    Ok(report)
}

/// `∫_0^t |w12(s)| ds` by adaptive quadrature.
pub fn coupling_norm_integral(scenario: &CoefficientScenario, t: f64, tol: f64) -> Result<f64> {
    scenario.check_time(t)?;
    integrate_real(|s| scenario.w12(s).map(|w| w.norm()).unwrap_or(f64::NAN), 0.0, t, tol)
}

pub fn load(path: impl AsRef<Path>) -> Result<CoefficientScenario> {
    load_scenario(path)
}
