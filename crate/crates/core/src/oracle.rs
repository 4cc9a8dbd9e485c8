//! Reference propagators built as plain time-ordered products, plus
//! comparison helpers used by the tests and the `verify` command.

use nalgebra::DMatrix;

use crate::fock::{annihilator, apply, FockSpace, FockState, Mode, TwoModeOperator};
use crate::scenario::CoefficientScenario;
use crate::smatrix::{exp2, generator, SMatrix2};
use crate::{Error, Result, C64, I};

/// Interior margin for full-Fock comparisons.
pub const INTERIOR_MARGIN: usize = 2;

struct Sparse {
    dim: usize,
    entries: Vec<(usize, usize, C64)>,
    norm1: f64,
}

impl Sparse {
    fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        let mut col_sums = vec![0.0; m.ncols()];
        for c in 0..m.ncols() {
            for r in 0..m.nrows() {
                let v = m[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    entries.push((r, c, v));
                    col_sums[c] += v.norm();
                }
            }
        }
        Sparse { dim: m.nrows(), entries, norm1: col_sums.into_iter().fold(0.0, f64::max) }
    }

    /// `out = self · x` for a dense column-major `x`.
    fn mul_into(&self, x: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        out.fill(C64::new(0.0, 0.0));
        let n = self.dim;
        let xs = x.as_slice();
        let os = out.as_mut_slice();
        for j in 0..x.ncols() {
            let (xc, oc) = (&xs[j * n..(j + 1) * n], &mut os[j * n..(j + 1) * n]);
            for &(r, c, v) in &self.entries {
                oc[r] += v * xc[c];
            }
        }
    }
}

/// `u ← exp(-i h dt) u` by a Taylor series, substepped to keep `‖h dt‖ ≤ 1/2`.
fn step(h: &Sparse, dt: f64, u: &mut DMatrix<C64>, scratch: &mut (DMatrix<C64>, DMatrix<C64>)) {
    let pieces = ((h.norm1 * dt.abs()) / 0.5).ceil().max(1.0) as usize;
    let tau = dt / pieces as f64;
    for _ in 0..pieces {
        let (term, next) = scratch;
        term.copy_from(u);
        for k in 1..=40 {
            h.mul_into(term, next);
            *next *= -I * (tau / k as f64);
            std::mem::swap(term, next);
            *u += &*term;
            if term.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-18 {
                break;
            }
        }
    }
}

/// Fixed operator pieces of `H`; only their coefficients change with time.
struct HamiltonianBasis {
    space: FockSpace,
    /// `a†_σ a_λ` in the order 11, 12, 21, 22, then `a†_1, a†_2`.
    terms: Vec<DMatrix<C64>>,
}

impl HamiltonianBasis {
    fn new(space: FockSpace) -> Self {
        let a = [annihilator(space, Mode::One), annihilator(space, Mode::Two)];
        let ad = [a[0].adjoint(), a[1].adjoint()];
        let mut terms = Vec::with_capacity(6);
        for s in 0..2 {
            for l in 0..2 {
                terms.push((&ad[s] * &a[l]).into_entries());
            }
        }
        terms.push(ad[0].entries().clone());
        terms.push(ad[1].entries().clone());
        HamiltonianBasis { space, terms }
    }

    fn at(&self, scenario: &CoefficientScenario, t: f64) -> Result<DMatrix<C64>> {
        let k = scenario.eval_coeffs(t)?;
        let dim = self.space.dim();
        let mut h = DMatrix::identity(dim, dim) * C64::from(k.b);
        let w = [C64::from(k.w11), k.w12, k.w21(), C64::from(k.w22)];
        for (m, z) in self.terms[..4].iter().zip(w) {
            if z != C64::new(0.0, 0.0) {
                h += m * z;
            }
        }
        for (m, f) in self.terms[4..].iter().zip([k.f1, k.f2]) {
            if f != C64::new(0.0, 0.0) {
                h += m * f + m.adjoint() * f.conj();
            }
        }
        Ok(h)
    }
}

/// `H(t)` on the truncated space, drive and scalar terms included.
pub fn hamiltonian(space: FockSpace, scenario: &CoefficientScenario, t: f64) -> Result<TwoModeOperator> {
    TwoModeOperator::new(space, HamiltonianBasis::new(space).at(scenario, t)?)
}

/// `∏_k exp(-i H(t_k^mid) Δt)`, later times on the left.
pub fn brute_force_propagator(
    space: FockSpace,
    scenario: &CoefficientScenario,
    t: f64,
    n_steps: usize,
) -> Result<TwoModeOperator> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
    }
    scenario.check_time(t)?;
    let dim = space.dim();
    let mut u = DMatrix::identity(dim, dim);
    if t == 0.0 {
        return TwoModeOperator::new(space, u);
    }
    let basis = HamiltonianBasis::new(space);
    let dt = t / n_steps as f64;
    let mut scratch = (DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim));
    for k in 0..n_steps {
        let h = basis.at(scenario, (k as f64 + 0.5) * dt)?;
        step(&Sparse::from_dense(&h), dt, &mut u, &mut scratch);
    }
    TwoModeOperator::new(space, u)
}

/// The same product on the 2×2 generator `W`.
pub fn brute_force_smatrix(scenario: &CoefficientScenario, t: f64, n_steps: usize) -> Result<SMatrix2> {
    if n_steps == 0 {
        return Err(Error::InvalidParameter("n_steps must be at least 1".into()));
    }
    scenario.check_time(t)?;
    let dt = t / n_steps as f64;
    let mut s = SMatrix2::identity(t);
    if t == 0.0 {
        return Ok(s);
    }
    for k in 0..n_steps {
        let w = generator(scenario, (k as f64 + 0.5) * dt)?;
        s.entries = exp2(&(w * (-I * dt))) * s.entries;
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    /// Interior deviation between the `n` and `2n` step products.
    pub coarse_deviation: f64,
    /// Interior deviation between the `2n` and `4n` step products.
    pub fine_deviation: f64,
    /// `coarse / fine`, ≈ 4 for a second-order product.
    pub ratio: f64,
}

/// Step-doubling ratio of successive differences.
pub fn convergence_ratio(
    coarse: &TwoModeOperator,
    mid: &TwoModeOperator,
    fine: &TwoModeOperator,
    margin: usize,
) -> ConvergenceReport {
    let coarse_deviation = coarse.interior_deviation(mid, margin);
    let fine_deviation = mid.interior_deviation(fine, margin);
    ConvergenceReport { coarse_deviation, fine_deviation, ratio: coarse_deviation / fine_deviation }
}

/// Runs the brute-force product at `n`, `2n` and `4n` steps.
pub fn self_convergence(
    space: FockSpace,
    scenario: &CoefficientScenario,
    t: f64,
    n_steps: usize,
) -> Result<ConvergenceReport> {
    let a = brute_force_propagator(space, scenario, t, n_steps)?;
    let b = brute_force_propagator(space, scenario, t, 2 * n_steps)?;
    let c = brute_force_propagator(space, scenario, t, 4 * n_steps)?;
    Ok(convergence_ratio(&a, &b, &c, INTERIOR_MARGIN))
}

/// `max_k |(v_{k+1} - v_{k-1}) / 2h - rhs(k, t_k, v_k)|` over interior nodes.
///
/// `rhs` receives the node index so that it can read companion samples.
pub fn ode_residual<F>(times: &[f64], values: &[C64], rhs: F) -> Result<f64>
where
    F: Fn(usize, f64, C64) -> C64,
{
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    if times.len() < 3 {
        return Err(Error::InsufficientSamples { needed: 3 });
    }
    let h = times[1] - times[0];
    if !(h > 0.0) || times.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h) {
        return Err(Error::InvalidParameter("samples must be uniformly spaced and increasing".into()));
    }
    let mut worst: f64 = 0.0;
    for k in 1..times.len() - 1 {
        let fd = (values[k + 1] - values[k - 1]) / (2.0 * h);
        worst = worst.max((fd - rhs(k, times[k], values[k])).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// Largest entry deviation on the interior subspace.
    pub max_entry_deviation: f64,
    /// `|⟨Aψ|Bψ⟩|²` on normalised states, one per test state.
    pub fidelities: Vec<f64>,
    /// `det A / det B`
    pub determinant_ratio: C64,
    /// `|det A / det B - 1|`
    pub determinant_deviation: f64,
    pub notes: Vec<String>,
}

impl ComparisonReport {
    pub fn min_fidelity(&self) -> f64 {
        self.fidelities.iter().copied().fold(1.0, f64::min)
    }
}

pub fn compare_operators(a: &TwoModeOperator, b: &TwoModeOperator, test_states: &[FockState]) -> Result<ComparisonReport> {
    if a.space() != b.space() {
        return Err(Error::DimensionMismatch { expected: a.space().dim(), found: b.space().dim() });
    }
    let mut fidelities = Vec::with_capacity(test_states.len());
    for psi in test_states {
        fidelities.push(apply(a, psi)?.fidelity(&apply(b, psi)?));
    }
    let determinant_ratio = a.determinant() / b.determinant();
    let mut notes = vec![format!("entry deviation over n1 + n2 <= n_max - {INTERIOR_MARGIN}")];
    if !determinant_ratio.is_finite() {
        notes.push("determinant ratio undefined".into());
    }
    Ok(ComparisonReport {
        max_entry_deviation: a.interior_deviation(b, INTERIOR_MARGIN),
        fidelities,
        determinant_ratio,
        determinant_deviation: (determinant_ratio - 1.0).norm(),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ComplexDrive, Drive, Profile};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn constant_hamiltonian_single_step() {
        let space = FockSpace::new(4).unwrap();
        let drive = Drive { f1: Some(ComplexDrive::constant(c(0.05, 0.02))), f2: None, b: Profile::Constant(0.1) };
        let s = CoefficientScenario::all_constant(0.7, 0.3, c(0.25, 0.1)).unwrap().with_drive(drive).unwrap();
        let one = brute_force_propagator(space, &s, 0.8, 1).unwrap();
        let exact = hamiltonian(space, &s, 0.0).unwrap().scale(-I * 0.8).exp();
        assert!(one.interior_deviation(&exact, 0) < 1e-12);
        assert!(one.unitarity_defect(0) < 1e-12);
        assert_eq!(brute_force_propagator(space, &s, 0.0, 3).unwrap(), TwoModeOperator::identity(space));
    }

    #[test]
    fn smatrix_product_reference_values() {
        let s = CoefficientScenario::all_constant(0.5, 0.5, c(0.5, 0.0)).unwrap();
        let m = brute_force_smatrix(&s, PI, 2048).unwrap();
        let target = SMatrix2::new(PI, c(0.0, 0.0), c(-1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0));
        assert!(m.max_deviation(&target) < 1e-6);
        assert!(m.unitarity_defect() < 1e-9);
    }

    #[test]
    fn residual_edge_cases() {
        let t = [0.0, 0.1, 0.2, 0.3];
        let v = [c(1.0, 0.0); 4];
        assert_eq!(ode_residual(&t, &v, |_, _, _| c(0.0, 0.0)).unwrap(), 0.0);
        let lin: Vec<C64> = t.iter().map(|&x| c(2.0 * x, -x)).collect();
        assert!(ode_residual(&t, &lin, |_, _, _| c(2.0, -1.0)).unwrap() < 1e-14);
        assert!(matches!(ode_residual(&t[..2], &v[..2], |_, _, _| c(0.0, 0.0)), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn global_phase_is_invisible_to_fidelity() {
        let space = FockSpace::new(3).unwrap();
        let s = CoefficientScenario::all_constant(0.2, 0.1, c(0.3, 0.0)).unwrap();
        let b = brute_force_propagator(space, &s, 0.5, 4).unwrap();
        let theta = 0.3;
        let a = b.scale(C64::from_polar(1.0, theta));
        let states = [FockState::coherent(space, c(0.2, 0.1), c(0.0, 0.3))];
        let r = compare_operators(&a, &b, &states).unwrap();
        assert!(r.max_entry_deviation > 0.1);
        assert!((r.fidelities[0] - 1.0).abs() < 1e-12);
        let expected = C64::from_polar(1.0, theta * space.dim() as f64);
        assert!((r.determinant_ratio - expected).norm() < 1e-10);
        let same = compare_operators(&b, &b, &states).unwrap();
        assert_eq!(same.max_entry_deviation, 0.0);
    }
}
