//! Three-spin operator algebra.
//!
//! The Hilbert space is spin 1 ⊗ spin 2 ⊗ spin 3 with spin 1 the most
//! significant factor, so basis index `4·δ¹ + 2·δ² + δ³` labels the ket
//! `|δ¹δ²δ³⟩`. `δ = 0` is the +½ eigenstate of `I_z`, which makes
//! `E_+ = ½(1 + 2I_z)` the projector onto `|0⟩`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, SMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Matrix8 = SMatrix<Complex64, 8, 8>;
pub type Matrix2 = SMatrix<Complex64, 2, 2>;

/// Dimension of the three-spin Hilbert space.
pub const DIM: usize = 8;
/// Tolerance for exact algebraic identities.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for composed pipelines (encode, decohere, decode, correct).
pub const PIPELINE_TOL: f64 = 1e-9;
/// Most negative eigenvalue still accepted in a density matrix.
pub const NEGATIVE_EIGENVALUE_TOL: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    One,
    Two,
    Three,
}

impl Spin {
    pub const ALL: [Spin; 3] = [Spin::One, Spin::Two, Spin::Three];
    pub const ANCILLAE: [Spin; 2] = [Spin::Two, Spin::Three];

    /// Zero-based position in the tensor product.
    pub fn index(self) -> usize {
        match self {
            Spin::One => 0,
            Spin::Two => 1,
            Spin::Three => 2,
        }
    }

    /// One-based spin label as used in the product-operator notation.
    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(n: usize) -> Result<Spin> {
        match n {
            1 => Ok(Spin::One),
            2 => Ok(Spin::Two),
            3 => Ok(Spin::Three),
            _ => Err(Error::Parameter(format!("spin index {n} is not in 1..=3"))),
        }
    }

    /// Bit of the basis index that holds this spin's `δ`.
    pub(crate) fn bit(self, basis_index: usize) -> usize {
        (basis_index >> (2 - self.index())) & 1
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Single-spin angular momentum matrix `σ_axis / 2`.
    pub fn spin_half_matrix(self) -> Matrix2 {
        let h = 0.5;
        match self {
            Axis::X => Matrix2::new(ZERO, ONE * h, ONE * h, ZERO),
            Axis::Y => Matrix2::new(ZERO, -I * h, I * h, ZERO),
            Axis::Z => Matrix2::new(ONE * h, ZERO, ZERO, -ONE * h),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl Neg for Sign {
    type Output = Sign;

    fn neg(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

/// An operator on the three-spin space, stored as a dense 8×8 matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpinOperator(Matrix8);

impl SpinOperator {
    pub fn from_matrix(m: Matrix8) -> Self {
        Self(m)
    }

    pub fn identity() -> Self {
        Self(Matrix8::identity())
    }

    pub fn zero() -> Self {
        Self(Matrix8::zeros())
    }

    /// Embeds a single-spin 2×2 operator at `spin`, identity elsewhere.
    pub fn embed(single: &Matrix2, spin: Spin) -> Self {
        let mut m = Matrix8::zeros();
        for r in 0..DIM {
            for c in 0..DIM {
                let others_match = Spin::ALL
                    .iter()
                    .filter(|&&s| s != spin)
                    .all(|s| s.bit(r) == s.bit(c));
                if others_match {
                    m[(r, c)] = single[(spin.bit(r), spin.bit(c))];
                }
            }
        }
        Self(m)
    }

    /// Tensor product `a¹ ⊗ a² ⊗ a³` of three single-spin operators.
    pub fn kron3(factors: &[Matrix2; 3]) -> Self {
        Self(Matrix8::from_fn(|r, c| {
            Spin::ALL
                .iter()
                .map(|s| factors[s.index()][(s.bit(r), s.bit(c))])
                .product()
        }))
    }

    pub fn matrix(&self) -> &Matrix8 {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix8 {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0 * Complex64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self(self.0 * s)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(self.0 * other.0 - other.0 * self.0)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// Largest absolute elementwise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// `U X U†`.
    pub fn conjugate(&self, x: &Self) -> Self {
        Self(self.0 * x.0 * self.0.adjoint())
    }

    /// `|tr(A†B)| / 8`, equal to 1 exactly when two unitaries agree up to a
    /// global phase.
    pub fn phase_overlap(&self, other: &Self) -> f64 {
        (self.0.adjoint() * other.0).trace().norm() / DIM as f64
    }

    pub fn equal_up_to_phase(&self, other: &Self, tol: f64) -> bool {
        (1.0 - self.phase_overlap(other)).abs() <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.adjoint(), tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        Self(self.0 * self.0.adjoint()).approx_eq(&Self::identity(), tol)
    }
}

impl Add for SpinOperator {
    type Output = SpinOperator;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl AddAssign for SpinOperator {
    fn add_assign(&mut self, rhs: Self) {
        self.0 += rhs.0;
    }
}

impl Sub for SpinOperator {
    type Output = SpinOperator;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl Mul for SpinOperator {
    type Output = SpinOperator;
    fn mul(self, rhs: Self) -> Self {
        Self(self.0 * rhs.0)
    }
}

impl Mul<SpinOperator> for f64 {
    type Output = SpinOperator;
    fn mul(self, rhs: SpinOperator) -> SpinOperator {
        rhs.scale(self)
    }
}

impl Neg for SpinOperator {
    type Output = SpinOperator;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

/// `I_axis^spin` embedded in the three-spin space.
pub fn generator(spin: Spin, axis: Axis) -> SpinOperator {
    SpinOperator::embed(&axis.spin_half_matrix(), spin)
}

/// A projector `E_±^k = ½(1 ± 2I_z^k)` onto one spin's z-eigenstate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Idempotent {
    pub operator: SpinOperator,
    pub spin: Spin,
    pub sign: Sign,
}

impl Idempotent {
    pub fn new(spin: Spin, sign: Sign) -> Self {
        let two_iz = generator(spin, Axis::Z).scale(2.0 * sign.value());
        let operator = (SpinOperator::identity() + two_iz).scale(0.5);
        Self {
            operator,
            spin,
            sign,
        }
    }
}

/// Shorthand for the operator of `E_sign^spin`.
pub fn idempotent(spin: Spin, sign: Sign) -> SpinOperator {
    Idempotent::new(spin, sign).operator
}

/// Label of a product operator: one optional axis per spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ProductLabel(pub [Option<Axis>; 3]);

impl ProductLabel {
    /// `2^m I_a I_b ...` for the `m` non-identity factors, which squares to 1.
    pub fn operator(&self) -> SpinOperator {
        Spin::ALL
            .iter()
            .zip(self.0.iter())
            .filter_map(|(&spin, axis)| axis.map(|a| generator(spin, a).scale(2.0)))
            .fold(SpinOperator::identity(), |acc, op| acc * op)
    }

    pub fn order(&self) -> usize {
        self.0.iter().filter(|a| a.is_some()).count()
    }
}

impl fmt::Display for ProductLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let order = self.order();
        if order == 0 {
            return f.write_str("1");
        }
        write!(f, "{}", 1 << order)?;
        for (spin, axis) in Spin::ALL.iter().zip(self.0.iter()) {
            if let Some(a) = axis {
                write!(f, "I{a}{spin}")?;
            }
        }
        Ok(())
    }
}

/// All 64 product operators `{1, 2I_a^k, 4I_a^j I_b^k, 8I_a^1 I_b^2 I_c^3}`.
pub fn product_operator_basis() -> Vec<(ProductLabel, SpinOperator)> {
    let choices = [None, Some(Axis::X), Some(Axis::Y), Some(Axis::Z)];
    let mut basis = Vec::with_capacity(64);
    for a in choices {
        for b in choices {
            for c in choices {
                let label = ProductLabel([a, b, c]);
                basis.push((label, label.operator()));
            }
        }
    }
    basis
}

/// The four ancilla projectors `E_{ε²}² E_{ε³}³`, ordered (++, +−, −+, −−).
pub fn ancilla_projectors() -> [SpinOperator; 4] {
    let pair = |s2, s3| idempotent(Spin::Two, s2) * idempotent(Spin::Three, s3);
    [
        pair(Sign::Plus, Sign::Plus),
        pair(Sign::Plus, Sign::Minus),
        pair(Sign::Minus, Sign::Plus),
        pair(Sign::Minus, Sign::Minus),
    ]
}

/// Pinching onto the ancilla z-basis: `Σ P X P` over the four ancilla
/// projectors. Leaves the partial trace over the ancillae unchanged.
pub fn projector_e(x: &SpinOperator) -> SpinOperator {
    ancilla_projectors()
        .iter()
        .fold(SpinOperator::zero(), |acc, p| acc + *p * *x * *p)
}

/// Partial trace of an arbitrary operator over spins 2 and 3.
pub fn partial_trace_operator(x: &SpinOperator) -> Matrix2 {
    let m = x.matrix();
    Matrix2::from_fn(|a, b| (0..4).map(|j| m[(4 * a + j, 4 * b + j)]).sum())
}

/// A density matrix of dimension `D`: Hermitian, unit trace, positive
/// semidefinite to within [`NEGATIVE_EIGENVALUE_TOL`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix<const D: usize>(SMatrix<Complex64, D, D>);

/// State of all three spins.
pub type ThreeSpinState = DensityMatrix<8>;
/// Reduced state of the data spin.
pub type DataSpinState = DensityMatrix<2>;

impl<const D: usize> DensityMatrix<D> {
    pub fn new(m: SMatrix<Complex64, D, D>) -> Result<Self> {
        let rho = Self(m);
        rho.validate()?;
        Ok(rho)
    }

    pub(crate) fn new_unchecked(m: SMatrix<Complex64, D, D>) -> Self {
        Self(m)
    }

    pub fn maximally_mixed() -> Self {
        Self(SMatrix::<Complex64, D, D>::identity() * Complex64::new(1.0 / D as f64, 0.0))
    }

    pub fn matrix(&self) -> &SMatrix<Complex64, D, D> {
        &self.0
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.0)
    }

    pub fn validate(&self) -> Result<()> {
        let herm = self
            .0
            .iter()
            .zip(self.0.adjoint().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        if herm > PIPELINE_TOL {
            return Err(Error::DensityMatrix(format!(
                "not Hermitian (max deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > PIPELINE_TOL {
            return Err(Error::DensityMatrix(format!("trace is {tr}, expected 1")));
        }
        let min = self.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_EIGENVALUE_TOL {
            return Err(Error::DensityMatrix(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// `½ Σ |λ_i(ρ − σ)|`.
    pub fn trace_distance(&self, other: &Self) -> f64 {
        0.5 * hermitian_eigenvalues(&(self.0 - other.0))
            .iter()
            .map(|l| l.abs())
            .sum::<f64>()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Convex combination `w·self + (1 − w)·other`.
    pub fn mix(&self, other: &Self, w: f64) -> Self {
        Self(self.0 * Complex64::new(w, 0.0) + other.0 * Complex64::new(1.0 - w, 0.0))
    }
}

fn hermitian_eigenvalues<const D: usize>(m: &SMatrix<Complex64, D, D>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let dm = DMatrix::from_iterator(D, D, sym.iter().copied());
    SymmetricEigen::new(dm)
        .eigenvalues
        .iter()
        .copied()
        .collect()
}

impl ThreeSpinState {
    pub fn as_operator(&self) -> SpinOperator {
        SpinOperator(self.0)
    }

    /// Wraps an operator known to be a valid state.
    pub(crate) fn from_operator_unchecked(op: SpinOperator) -> Self {
        Self(op.0)
    }

    pub fn from_operator(op: SpinOperator) -> Result<Self> {
        Self::new(op.0)
    }

    /// `ρ¹ ⊗ E_{s2}² E_{s3}³`.
    pub fn with_ancillae(data: &DataSpinState, s2: Sign, s3: Sign) -> Self {
        let col = match (s2, s3) {
            (Sign::Plus, Sign::Plus) => 0,
            (Sign::Plus, Sign::Minus) => 1,
            (Sign::Minus, Sign::Plus) => 2,
            (Sign::Minus, Sign::Minus) => 3,
        };
        let mut m = Matrix8::zeros();
        for a in 0..2 {
            for b in 0..2 {
                m[(4 * a + col, 4 * b + col)] = data.0[(a, b)];
            }
        }
        Self(m)
    }

    /// `ρ¹ ⊗ E_+² E_+³`.
    pub fn with_ground_ancillae(data: &DataSpinState) -> Self {
        Self::with_ancillae(data, Sign::Plus, Sign::Plus)
    }
}

impl Add for DensityMatrix<8> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

/// Bloch vector of the data spin: `(⟨2I_x⟩, ⟨2I_y⟩, ⟨2I_z⟩)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let b = Self { x, y, z };
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::Parameter(
                "Bloch vector has non-finite entries".into(),
            ));
        }
        if b.norm() > 1.0 + PIPELINE_TOL {
            return Err(Error::Parameter(format!(
                "Bloch vector length {} exceeds 1",
                b.norm()
            )));
        }
        Ok(b)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// `½(1 + x·2I_x + y·2I_y + z·2I_z)`.
    pub fn to_state(self) -> DataSpinState {
        let sx = Axis::X.spin_half_matrix() * Complex64::new(2.0 * self.x, 0.0);
        let sy = Axis::Y.spin_half_matrix() * Complex64::new(2.0 * self.y, 0.0);
        let sz = Axis::Z.spin_half_matrix() * Complex64::new(2.0 * self.z, 0.0);
        DensityMatrix((Matrix2::identity() + sx + sy + sz) * Complex64::new(0.5, 0.0))
    }
}

/// Reads the Bloch vector off a data-spin state.
pub fn bloch_of(rho: &DataSpinState) -> BlochVector {
    let expect = |axis: Axis| (rho.0 * axis.spin_half_matrix()).trace().re * 2.0;
    BlochVector {
        x: expect(Axis::X),
        y: expect(Axis::Y),
        z: expect(Axis::Z),
    }
}

/// Data-spin density matrix `ρ_A¹ = ½ + Re(ᾱβ)2I_x + Im(ᾱβ)2I_y + (|α|²−|β|²)I_z`
/// for the pure state `α|0⟩ + β|1⟩`.
pub fn pure_data_spin_state(alpha: Complex64, beta: Complex64) -> Result<DataSpinState> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > PIPELINE_TOL {
        return Err(Error::Normalization { norm });
    }
    let ab = alpha.conj() * beta;
    let bloch = BlochVector {
        x: 2.0 * ab.re,
        y: 2.0 * ab.im,
        z: alpha.norm_sqr() - beta.norm_sqr(),
    };
    Ok(bloch.to_state())
}

/// `ρ_A = ρ_A¹ ⊗ E_+² E_+³` for the data spin in `α|0⟩ + β|1⟩`.
pub fn pure_data_state(alpha: Complex64, beta: Complex64) -> Result<ThreeSpinState> {
    pure_data_spin_state(alpha, beta).map(|d| ThreeSpinState::with_ground_ancillae(&d))
}

/// Amplitudes `α = cos(θ/2)e^{−iφ/2}`, `β = −i sin(θ/2)e^{iφ/2}` reached by
/// rotating `E_+` first about x by `θ`, then about z by `φ`.
pub fn amplitudes_from_polar(theta: f64, phi: f64) -> (Complex64, Complex64) {
    let alpha = Complex64::from_polar((theta / 2.0).cos(), -phi / 2.0);
    let beta = -I * Complex64::from_polar((theta / 2.0).sin(), phi / 2.0);
    (alpha, beta)
}

/// Reduces a three-spin state to the data spin.
pub fn partial_trace_ancillae(rho: &ThreeSpinState) -> DataSpinState {
    DensityMatrix(partial_trace_operator(&rho.as_operator()))
}
