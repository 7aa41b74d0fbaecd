//! Correlated random-field dephasing.
//!
//! Under a delta-correlated field the accumulated phases `χ = (χ¹, χ², χ³)`
//! are jointly Gaussian with covariance `C·t`. A density-matrix element
//! connecting eigenstates of the dephasing axis whose per-spin eigenvalues
//! differ by `ε ∈ {−1, 0, 1}³` picks up the phase `e^{−iχ·ε}`, whose average
//! is `exp(−(t/2) εᵀCε)`. The z-axis channel applies these factors directly;
//! the x-axis channel is obtained by rotating into the z picture.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::ensemble::{ensemble_average, Estimate};
use crate::error::{Error, Result};
use crate::gates::{global_rotation, Gate};
use crate::operator::{Axis, Matrix2, Matrix8, Spin, SpinOperator, ThreeSpinState, DIM};

/// Rate matrix `C` of the accumulated phases, `Cov(χ) = C·t` (rad²/s).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceMatrix(Matrix3<f64>);

impl CovarianceMatrix {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Covariance("entries must be finite".into()));
        }
        let tol = 1e-12 * m.amax().max(1.0);
        for j in 0..3 {
            for k in (j + 1)..3 {
                if (m[(j, k)] - m[(k, j)]).abs() > tol {
                    return Err(Error::Covariance(format!(
                        "not symmetric: c{}{} = {} but c{}{} = {}",
                        j + 1,
                        k + 1,
                        m[(j, k)],
                        k + 1,
                        j + 1,
                        m[(k, j)]
                    )));
                }
            }
        }
        for j in 0..3 {
            if m[(j, j)] < 0.0 {
                return Err(Error::Covariance(format!(
                    "diagonal entry c{0}{0} = {1} is negative",
                    j + 1,
                    m[(j, j)]
                )));
            }
        }
        for j in 0..3 {
            for k in (j + 1)..3 {
                let bound = (m[(j, j)] * m[(k, k)]).sqrt();
                if m[(j, k)].abs() > bound + tol {
                    return Err(Error::Covariance(format!(
                        "|c{}{}| = {} exceeds sqrt(c{}{}·c{}{}) = {}",
                        j + 1,
                        k + 1,
                        m[(j, k)].abs(),
                        j + 1,
                        j + 1,
                        k + 1,
                        k + 1,
                        bound
                    )));
                }
            }
        }
        let sym = (m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym).eigenvalues;
        if let Some(bad) = eig.iter().copied().find(|&l| l < -tol) {
            return Err(Error::Covariance(format!(
                "not positive semidefinite: eigenvalue {bad:e} is negative"
            )));
        }
        Ok(Self(sym))
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    /// `c^{jj} = 2/τ`, no cross-correlation.
    pub fn uncorrelated(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self(Matrix3::identity() * (2.0 / tau)))
    }

    /// `c^{jk} = 2/τ` for every pair: identical phases on all spins.
    pub fn totally_correlated(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self(Matrix3::repeat(2.0 / tau)))
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn entry(&self, j: Spin, k: Spin) -> f64 {
        self.0[(j.index(), k.index())]
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        [0, 1, 2].map(|r| [0, 1, 2].map(|c| self.0[(r, c)]))
    }

    /// `εᵀ C ε`.
    pub fn quadratic_form(&self, eps: [f64; 3]) -> f64 {
        let v = nalgebra::Vector3::from(eps);
        v.dot(&(self.0 * v))
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let e = SymmetricEigen::new(self.0).eigenvalues;
        [e[0], e[1], e[2]]
    }
}

impl fmt::Display for CovarianceMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..3 {
            writeln!(
                f,
                "{} {} {}",
                self.0[(r, 0)],
                self.0[(r, 1)],
                self.0[(r, 2)]
            )?;
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("tau must be positive, got {tau}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovarianceModel {
    TotallyCorrelated { tau: f64 },
    Uncorrelated { tau: f64 },
    Custom(Matrix3<f64>),
}

impl CovarianceModel {
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        effective_covariance(self)
    }
}

pub fn effective_covariance(model: &CovarianceModel) -> Result<CovarianceMatrix> {
    match *model {
        CovarianceModel::TotallyCorrelated { tau } => CovarianceMatrix::totally_correlated(tau),
        CovarianceModel::Uncorrelated { tau } => CovarianceMatrix::uncorrelated(tau),
        CovarianceModel::Custom(m) => CovarianceMatrix::new(m),
    }
}

/// Accumulated phases `χ^k` of one noise realisation (rad).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseSample {
    pub chi: [f64; 3],
}

impl PhaseSample {
    pub const ZERO: PhaseSample = PhaseSample { chi: [0.0; 3] };
}

/// Draws `χ ~ N(0, C·t)` through the symmetric square root of `C`.
///
/// Rank-deficient `C` (e.g. totally correlated noise) is handled by the
/// eigendecomposition; eigenvalues below zero from rounding are clamped.
#[derive(Clone, Copy, Debug)]
pub struct PhaseSampler {
    root: Matrix3<f64>,
}

impl PhaseSampler {
    pub fn new(cov: &CovarianceMatrix) -> Self {
        let eig = SymmetricEigen::new(*cov.matrix());
        let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let root =
            eig.eigenvectors * Matrix3::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
        Self { root }
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> PhaseSample {
        let z = nalgebra::Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let chi = self.root * z * t.sqrt();
        PhaseSample {
            chi: [chi[0], chi[1], chi[2]],
        }
    }
}

pub fn sample_phases<R: Rng + ?Sized>(
    cov: &CovarianceMatrix,
    t: f64,
    rng: &mut R,
) -> Result<PhaseSample> {
    check_time(t)?;
    Ok(PhaseSampler::new(cov).sample(t, rng))
}

pub(crate) fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "time must be nonnegative, got {t}"
        )))
    }
}

/// Axis of the random field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DephasingAxis {
    X,
    Z,
}

impl DephasingAxis {
    pub fn axis(self) -> Axis {
        match self {
            DephasingAxis::X => Axis::X,
            DephasingAxis::Z => Axis::Z,
        }
    }
}

/// `exp(−i Σ_k χ^k I_axis^k)`, exact.
pub fn random_propagator(sample: &PhaseSample, axis: DephasingAxis) -> Gate {
    let half = axis.axis().spin_half_matrix();
    let factors = sample.chi.map(|chi| {
        // exp(−iχI) = cos(χ/2) − i sin(χ/2)·2I
        Matrix2::identity() * Complex64::new((chi / 2.0).cos(), 0.0)
            + half * Complex64::new(0.0, -2.0 * (chi / 2.0).sin())
    });
    Gate::new(format!("V{}", axis.axis()), SpinOperator::kron3(&factors))
}

/// Rotation `R = exp(−i(π/2)ΣI_y)` with `R I_z R† = I_x`.
pub(crate) fn z_to_x_frame() -> Gate {
    global_rotation(Axis::Y, PI / 2.0, &Spin::ALL)
}

/// Gaussian-averaged dephasing applied to an arbitrary operator.
pub fn dephase_operator(
    x: &SpinOperator,
    cov: &CovarianceMatrix,
    t: f64,
    axis: DephasingAxis,
) -> SpinOperator {
    match axis {
        DephasingAxis::Z => SpinOperator::from_matrix(dephase_z(x.matrix(), cov, t)),
        DephasingAxis::X => {
            let r = z_to_x_frame();
            let in_z = r.inverse().conjugate(x);
            r.conjugate(&SpinOperator::from_matrix(dephase_z(in_z.matrix(), cov, t)))
        }
    }
}

/// `exp(−(t/2) εᵀCε)` for every element of the z-basis matrix.
pub fn z_coherence_factors(cov: &CovarianceMatrix, t: f64) -> [[f64; DIM]; DIM] {
    let half_z = |i: usize, s: Spin| if s.bit(i) == 0 { 0.5 } else { -0.5 };
    let mut out = [[0.0; DIM]; DIM];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            let eps = Spin::ALL.map(|s| half_z(r, s) - half_z(c, s));
            *v = (-0.5 * t * cov.quadratic_form(eps)).exp();
        }
    }
    out
}

fn dephase_z(m: &Matrix8, cov: &CovarianceMatrix, t: f64) -> Matrix8 {
    let f = z_coherence_factors(cov, t);
    Matrix8::from_fn(|r, c| m[(r, c)] * f[r][c])
}

/// Exact Gaussian-averaged channel.
pub fn apply_channel_analytic(
    rho: &ThreeSpinState,
    cov: &CovarianceMatrix,
    t: f64,
    axis: DephasingAxis,
) -> Result<ThreeSpinState> {
    check_time(t)?;
    Ok(ThreeSpinState::from_operator_unchecked(dephase_operator(
        &rho.as_operator(),
        cov,
        t,
        axis,
    )))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Analytic,
    MonteCarlo { samples: u64, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseChannel {
    pub kind: ChannelKind,
    pub axis: DephasingAxis,
    pub covariance: CovarianceMatrix,
}

impl NoiseChannel {
    pub fn analytic(covariance: CovarianceMatrix, axis: DephasingAxis) -> Self {
        Self {
            kind: ChannelKind::Analytic,
            axis,
            covariance,
        }
    }

    pub fn monte_carlo(
        covariance: CovarianceMatrix,
        axis: DephasingAxis,
        samples: u64,
        seed: u64,
    ) -> Result<Self> {
        let channel = Self {
            kind: ChannelKind::MonteCarlo { samples, seed },
            axis,
            covariance,
        };
        channel.validate()?;
        Ok(channel)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ChannelKind::MonteCarlo { samples: 0, .. } => Err(Error::Parameter(
                "Monte Carlo channel needs at least one sample".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Applies the channel, returning the Monte Carlo mean for sampled
    /// channels.
    pub fn apply(&self, rho: &ThreeSpinState, t: f64) -> Result<ThreeSpinState> {
        match self.kind {
            ChannelKind::Analytic => apply_channel_analytic(rho, &self.covariance, t, self.axis),
            ChannelKind::MonteCarlo { .. } => apply_channel_mc(rho, self, t).map(|e| e.state),
        }
    }
}

/// Monte Carlo estimate of a channel output.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelEstimate {
    pub state: ThreeSpinState,
    /// Standard error of each element; real and imaginary parts separately.
    pub std_error: Matrix8,
    pub samples: u64,
}

/// Average of `U(χ) ρ U(χ)†` over sampled phases.
pub fn apply_channel_mc(
    rho: &ThreeSpinState,
    channel: &NoiseChannel,
    t: f64,
) -> Result<ChannelEstimate> {
    check_time(t)?;
    channel.validate()?;
    let ChannelKind::MonteCarlo { samples, seed } = channel.kind else {
        return Err(Error::Parameter(
            "apply_channel_mc needs a Monte Carlo channel".into(),
        ));
    };
    let sampler = PhaseSampler::new(&channel.covariance);
    let op = rho.as_operator();
    let est = ensemble_average(samples, seed, 2 * DIM * DIM, |rng, out| {
        let chi = sampler.sample(t, rng);
        let evolved = random_propagator(&chi, channel.axis).conjugate(&op);
        for (i, z) in evolved.matrix().iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
    });
    Ok(ChannelEstimate {
        state: ThreeSpinState::from_operator_unchecked(SpinOperator::from_matrix(to_matrix(
            &est.mean,
        ))),
        std_error: to_matrix(&est.std_error),
        samples: est.samples,
    })
}

/// Rebuilds a column-major complex matrix from interleaved re/im values.
fn to_matrix(v: &[f64]) -> Matrix8 {
    Matrix8::from_iterator(v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])))
}

/// Standard errors of a Monte Carlo mean, re-exported for callers that use
/// [`ensemble_average`] directly.
pub type McEstimate = Estimate;
