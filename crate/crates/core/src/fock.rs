//! Truncated two-mode Fock space and the boson / su(2) operators acting on it.
//!
//! Basis states `|n1, n2⟩` with `0 ≤ n1, n2 ≤ n_max` are stored at flat index
//! `n1 * (n_max + 1) + n2`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};

use crate::numeric::expm::expm;
use crate::{Error, Result, C64};

/// Largest tail mass `e^{-|c|²}|c|^{2 n_max}/n_max!` accepted by [`displacement_operator`].
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    n_max: usize,
}

pub fn make_space(n_max: usize) -> Result<FockSpace> {
    FockSpace::new(n_max)
}

impl FockSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(FockSpace { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 1)
    }

    pub fn index(&self, n1: usize, n2: usize) -> usize {
        assert!(n1 <= self.n_max && n2 <= self.n_max, "occupation beyond cutoff");
        n1 * (self.n_max + 1) + n2
    }

    pub fn occupations(&self, index: usize) -> (usize, usize) {
        (index / (self.n_max + 1), index % (self.n_max + 1))
    }

    /// True when `n1 + n2 ≤ n_max - margin`.
    pub fn is_interior(&self, index: usize, margin: usize) -> bool {
        let (n1, n2) = self.occupations(index);
        n1 + n2 + margin <= self.n_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Su2 {
    JPlus,
    JMinus,
    J3,
    N,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeOperator {
    space: FockSpace,
    entries: DMatrix<C64>,
}

impl TwoModeOperator {
    pub fn new(space: FockSpace, entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != space.dim() || entries.ncols() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: entries.nrows() });
        }
        Ok(TwoModeOperator { space, entries })
    }

    pub fn identity(space: FockSpace) -> Self {
        TwoModeOperator { space, entries: DMatrix::identity(space.dim(), space.dim()) }
    }

    pub fn zeros(space: FockSpace) -> Self {
        TwoModeOperator { space, entries: DMatrix::zeros(space.dim(), space.dim()) }
    }

    fn from_diagonal(space: FockSpace, f: impl Fn(usize, usize) -> C64) -> Self {
        let diag = DVector::from_fn(space.dim(), |k, _| {
            let (n1, n2) = space.occupations(k);
            f(n1, n2)
        });
        TwoModeOperator { space, entries: DMatrix::from_diagonal(&diag) }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, bra: (usize, usize), ket: (usize, usize)) -> C64 {
        self.entries[(self.space.index(bra.0, bra.1), self.space.index(ket.0, ket.1))]
    }

    pub fn adjoint(&self) -> Self {
        TwoModeOperator { space: self.space, entries: self.entries.adjoint() }
    }

    pub fn scale(&self, z: C64) -> Self {
        TwoModeOperator { space: self.space, entries: &self.entries * z }
    }

    pub fn exp(&self) -> Self {
        TwoModeOperator { space: self.space, entries: expm(&self.entries) }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Largest entry modulus of `self - other` over rows and columns in the interior
    /// `n1 + n2 ≤ n_max - margin`.
    pub fn interior_deviation(&self, other: &Self, margin: usize) -> f64 {
        let s = self.space;
        let mut worst: f64 = 0.0;
        for i in (0..s.dim()).filter(|&i| s.is_interior(i, margin)) {
            for j in (0..s.dim()).filter(|&j| s.is_interior(j, margin)) {
                worst = worst.max((self.entries[(i, j)] - other.entries[(i, j)]).norm());
            }
        }
        worst
    }

    /// `max |(U†U - I)_ij|` over the interior block.
    pub fn unitarity_defect(&self, margin: usize) -> f64 {
        let prod = &self.adjoint() * self;
        prod.interior_deviation(&TwoModeOperator::identity(self.space), margin)
    }

    pub fn determinant(&self) -> C64 {
        self.entries.clone().determinant()
    }
}

impl Mul for &TwoModeOperator {
    type Output = TwoModeOperator;
    fn mul(self, rhs: &TwoModeOperator) -> TwoModeOperator {
        assert_eq!(self.space, rhs.space, "operators on different spaces");
        TwoModeOperator { space: self.space, entries: &self.entries * &rhs.entries }
    }
}

impl Add for &TwoModeOperator {
    type Output = TwoModeOperator;
    fn add(self, rhs: &TwoModeOperator) -> TwoModeOperator {
        assert_eq!(self.space, rhs.space, "operators on different spaces");
        TwoModeOperator { space: self.space, entries: &self.entries + &rhs.entries }
    }
}

impl Sub for &TwoModeOperator {
    type Output = TwoModeOperator;
    fn sub(self, rhs: &TwoModeOperator) -> TwoModeOperator {
        assert_eq!(self.space, rhs.space, "operators on different spaces");
        TwoModeOperator { space: self.space, entries: &self.entries - &rhs.entries }
    }
}

pub fn annihilator(space: FockSpace, mode: Mode) -> TwoModeOperator {
    let mut op = TwoModeOperator::zeros(space);
    for n1 in 0..=space.n_max {
        for n2 in 0..=space.n_max {
            let (target, n) = match mode {
                Mode::One if n1 > 0 => ((n1 - 1, n2), n1),
                Mode::Two if n2 > 0 => ((n1, n2 - 1), n2),
                _ => continue,
            };
            op.entries[(space.index(target.0, target.1), space.index(n1, n2))] = C64::from((n as f64).sqrt());
        }
    }
    op
}

pub fn creator(space: FockSpace, mode: Mode) -> TwoModeOperator {
    annihilator(space, mode).adjoint()
}

pub fn number(space: FockSpace, mode: Mode) -> TwoModeOperator {
    TwoModeOperator::from_diagonal(space, |n1, n2| match mode {
        Mode::One => C64::from(n1 as f64),
        Mode::Two => C64::from(n2 as f64),
    })
}

/// `J+ = a1† a2`, `J- = a1 a2†`, `J3 = (n1 - n2)/2`, `N = (n1 + n2)/2`.
pub fn su2_generator(space: FockSpace, which: Su2) -> TwoModeOperator {
    match which {
        Su2::JPlus => &creator(space, Mode::One) * &annihilator(space, Mode::Two),
        Su2::JMinus => &annihilator(space, Mode::One) * &creator(space, Mode::Two),
        Su2::J3 => TwoModeOperator::from_diagonal(space, |n1, n2| C64::from(0.5 * (n1 as f64 - n2 as f64))),
        Su2::N => TwoModeOperator::from_diagonal(space, |n1, n2| C64::from(0.5 * (n1 + n2) as f64)),
    }
}

/// `exp(z · J3)` and `exp(z · N)` without a general matrix exponential.
pub fn diagonal_exp(space: FockSpace, which: Su2, z: C64) -> TwoModeOperator {
    match which {
        Su2::J3 => TwoModeOperator::from_diagonal(space, |n1, n2| (z * 0.5 * (n1 as f64 - n2 as f64)).exp()),
        Su2::N => TwoModeOperator::from_diagonal(space, |n1, n2| (z * 0.5 * (n1 + n2) as f64).exp()),
        _ => panic!("diagonal_exp only handles J3 and N"),
    }
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Estimated probability of a coherent amplitude `c` sitting at `n_max` quanta.
pub fn tail_mass(c: C64, n_max: usize) -> f64 {
    let r2 = c.norm_sqr();
    if r2 == 0.0 {
        return 0.0;
    }
    (-r2 + n_max as f64 * r2.ln() - ln_factorial(n_max)).exp()
}

pub fn displacement_operator(space: FockSpace, c1: C64, c2: C64) -> Result<TwoModeOperator> {
    displacement_operator_with_threshold(space, c1, c2, DEFAULT_TAIL_THRESHOLD)
}

/// `exp(Σ_σ c_σ a†_σ - c*_σ a_σ)` on the truncated space.
pub fn displacement_operator_with_threshold(
    space: FockSpace,
    c1: C64,
    c2: C64,
    threshold: f64,
) -> Result<TwoModeOperator> {
    let tail = tail_mass(c1, space.n_max) + tail_mass(c2, space.n_max);
    if tail > threshold {
        return Err(Error::Truncation { tail, n_max: space.n_max, threshold });
    }
    if c1 == C64::new(0.0, 0.0) && c2 == C64::new(0.0, 0.0) {
        return Ok(TwoModeOperator::identity(space));
    }
    let mut gen = TwoModeOperator::zeros(space);
    for (c, mode) in [(c1, Mode::One), (c2, Mode::Two)] {
        let a = annihilator(space, mode);
        gen.entries += a.entries.adjoint() * c - a.entries * c.conj();
    }
    Ok(gen.exp())
}

/// The su(2) rotation `T_ε` that maps `A†A` with `A = α a1 + β a2` onto `a1† a1`.
///
/// `gamma3 = |α|² - |β|²`, `theta_diff = θ_α - θ_β`, `eps = ±1`.
pub fn mixing_operator(space: FockSpace, gamma3: f64, theta_diff: f64, eps: i8) -> Result<TwoModeOperator> {
    if eps != 1 && eps != -1 {
        return Err(Error::InvalidParameter("eps must be +1 or -1".into()));
    }
    if !(gamma3.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!("|gamma3| = {} exceeds 1", gamma3.abs())));
    }
    let e = f64::from(eps);
    // atan2 keeps the εγ3 = -1 limit (pure swap) finite.
    let angle = -(e * (1.0 - e * gamma3).max(0.0).sqrt()).atan2((1.0 + e * gamma3).max(0.0).sqrt());
    if angle == 0.0 {
        return Ok(TwoModeOperator::identity(space));
    }
    let phase = C64::from_polar(1.0, -theta_diff);
    let jp = su2_generator(space, Su2::JPlus);
    let jm = su2_generator(space, Su2::JMinus);
    let gen = &jp.scale(phase * angle) - &jm.scale(phase.conj() * angle);
    Ok(gen.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    space: FockSpace,
    amplitudes: DVector<C64>,
}

impl FockState {
    pub fn new(space: FockSpace, amplitudes: DVector<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch { expected: space.dim(), found: amplitudes.len() });
        }
        Ok(FockState { space, amplitudes })
    }

    pub fn basis(space: FockSpace, n1: usize, n2: usize) -> Self {
        let mut amplitudes = DVector::zeros(space.dim());
        amplitudes[space.index(n1, n2)] = C64::from(1.0);
        FockState { space, amplitudes }
    }

    pub fn vacuum(space: FockSpace) -> Self {
        Self::basis(space, 0, 0)
    }

    /// Exact coherent amplitudes `e^{-(|c1|²+|c2|²)/2} c1^n1 c2^n2 / √(n1! n2!)`, cut at `n_max`.
    pub fn coherent(space: FockSpace, c1: C64, c2: C64) -> Self {
        let single = |c: C64| -> Vec<C64> {
            let mut v = Vec::with_capacity(space.n_max + 1);
            let mut term = C64::from((-0.5 * c.norm_sqr()).exp());
            for n in 0..=space.n_max {
                if n > 0 {
                    term *= c / (n as f64).sqrt();
                }
                v.push(term);
            }
            v
        };
        let (v1, v2) = (single(c1), single(c2));
        let amplitudes = DVector::from_fn(space.dim(), |k, _| {
            let (n1, n2) = space.occupations(k);
            v1[n1] * v2[n2]
        });
        FockState { space, amplitudes }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, n1: usize, n2: usize) -> C64 {
        self.amplitudes[self.space.index(n1, n2)]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        FockState { space: self.space, amplitudes: &self.amplitudes / C64::from(n) }
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨a|b⟩|² / (‖a‖² ‖b‖²)`.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr() / (self.amplitudes.norm_squared() * other.amplitudes.norm_squared())
    }

    /// Copy with every component outside `n1 + n2 ≤ n_max - margin` set to zero.
    pub fn masked(&self, margin: usize) -> Self {
        let mut amplitudes = self.amplitudes.clone();
        for k in 0..self.space.dim() {
            if !self.space.is_interior(k, margin) {
                amplitudes[k] = C64::new(0.0, 0.0);
            }
        }
        FockState { space: self.space, amplitudes }
    }

    pub fn sub(&self, other: &Self) -> Self {
        FockState { space: self.space, amplitudes: &self.amplitudes - &other.amplitudes }
    }

    pub fn scale(&self, z: C64) -> Self {
        FockState { space: self.space, amplitudes: &self.amplitudes * z }
    }
}

pub fn apply(op: &TwoModeOperator, state: &FockState) -> Result<FockState> {
    if op.space != state.space {
        return Err(Error::DimensionMismatch { expected: op.space.dim(), found: state.space.dim() });
    }
    Ok(FockState { space: state.space, amplitudes: &op.entries * &state.amplitudes })
}

pub fn expectation(op: &TwoModeOperator, state: &FockState) -> Result<C64> {
    let image = apply(op, state)?;
    Ok(state.inner(&image))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn space(n: usize) -> FockSpace {
        make_space(n).unwrap()
    }

    #[test]
    fn dimensions() {
        assert_eq!(space(1).dim(), 4);
        assert_eq!(space(5).dim(), 36);
        assert_eq!(space(8).dim(), 81);
        assert!(make_space(0).is_err());
    }

    #[test]
    fn index_map_is_bijective() {
        let s = space(6);
        for k in 0..s.dim() {
            let (n1, n2) = s.occupations(k);
            assert_eq!(s.index(n1, n2), k);
        }
    }

    #[test]
    fn ladder_entries() {
        let s = space(3);
        assert_eq!(annihilator(s, Mode::One).get((0, 0), (1, 0)), C64::from(1.0));
        assert!((annihilator(s, Mode::Two).get((0, 1), (0, 2)).re - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(su2_generator(s, Su2::JPlus).get((1, 0), (0, 1)), C64::from(1.0));
        assert_eq!(su2_generator(s, Su2::J3).get((1, 0), (1, 0)), C64::from(0.5));
    }

    #[test]
    fn canonical_commutator_below_cutoff() {
        let s = space(5);
        let a1 = annihilator(s, Mode::One);
        let comm = a1.commutator(&a1.adjoint());
        for k in 0..s.dim() {
            let (n1, _) = s.occupations(k);
            for j in 0..s.dim() {
                let expected = if j == k && n1 < 5 { 1.0 } else if j == k { -5.0 } else { 0.0 };
                assert!((comm.entries()[(j, k)] - C64::from(expected)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn number_expectations() {
        let s = space(3);
        let n = su2_generator(s, Su2::N);
        assert_eq!(expectation(&n, &FockState::vacuum(s)).unwrap(), C64::from(0.0));
        assert_eq!(expectation(&n, &FockState::basis(s, 1, 1)).unwrap(), C64::from(1.0));
        let psi = FockState::basis(s, 2, 1);
        assert_eq!(apply(&TwoModeOperator::identity(s), &psi).unwrap(), psi);
    }

    #[test]
    fn displacement_of_vacuum() {
        let s = space(10);
        assert_eq!(displacement_operator(s, C64::from(0.0), C64::from(0.0)).unwrap(), TwoModeOperator::identity(s));
        let d = displacement_operator(s, C64::from(1.0), C64::from(0.0)).unwrap();
        assert!((d.get((0, 0), (0, 0)).re - (-0.5f64).exp()).abs() < 1e-8);
        assert!(displacement_operator(space(3), C64::from(3.0), C64::from(0.0)).is_err());
    }

    #[test]
    fn mixing_limits() {
        let s = space(4);
        assert_eq!(mixing_operator(s, 1.0, 0.3, 1).unwrap(), TwoModeOperator::identity(s));
        let swap = mixing_operator(s, -1.0, 0.0, 1).unwrap();
        // |1,0⟩ ↦ ±|0,1⟩ under the pure swap
        let image = apply(&swap, &FockState::basis(s, 1, 0)).unwrap();
        assert!((image.amplitude(0, 1).norm() - 1.0).abs() < 1e-12);
        assert!(mixing_operator(s, 0.0, 0.0, 2).is_err());
        let _ = FRAC_1_SQRT_2;
    }
}
