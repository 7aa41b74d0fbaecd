//! The error-correction pipeline: prepare, encode, decohere, decode, correct,
//! and trace out the ancillae.
//!
//! Besides running the pipeline on explicit states this module evaluates the
//! first-order behaviour of mixed ancilla preparations, both for ancillae
//! uncorrelated with the data spin and for classically correlated mixtures.

use nalgebra::{Matrix3, SymmetricEigen};
use num_complex::Complex64;

use crate::analytics::DecayFactors;
use crate::ensemble::ensemble_average;
use crate::error::{Error, Result};
use crate::gates::{encoder, toffoli, Gate};
use crate::noise::{
    check_time, dephase_operator, random_propagator, z_to_x_frame, ChannelKind, CovarianceMatrix,
    NoiseChannel, PhaseSampler,
};
use crate::operator::{
    bloch_of, partial_trace_ancillae, pure_data_spin_state, BlochVector, DataSpinState,
    DensityMatrix, Matrix2, Sign, SpinOperator, ThreeSpinState,
};

/// Tolerance on probability weights summing to one.
pub const WEIGHT_TOL: f64 = 1e-12;

/// Ancilla sectors `(ε², ε³)` in the order `++, +−, −+, −−`.
pub const SECTORS: [(Sign, Sign); 4] = [
    (Sign::Plus, Sign::Plus),
    (Sign::Plus, Sign::Minus),
    (Sign::Minus, Sign::Plus),
    (Sign::Minus, Sign::Minus),
];

/// Initial state of the data spin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DataState {
    /// Pure state `α|0⟩ + β|1⟩`.
    Amplitudes { alpha: Complex64, beta: Complex64 },
    /// Possibly mixed state with the given Bloch vector.
    Bloch(BlochVector),
}

impl DataState {
    pub fn density(&self) -> Result<DataSpinState> {
        match *self {
            DataState::Amplitudes { alpha, beta } => pure_data_spin_state(alpha, beta),
            DataState::Bloch(b) => Ok(b.to_state()),
        }
    }
}

/// Diagonal ancilla state `Σ μ_{ε²ε³} E_{ε²}² E_{ε³}³`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AncillaMixture {
    weights: [f64; 4],
}

impl AncillaMixture {
    pub fn new(mu_pp: f64, mu_pm: f64, mu_mp: f64, mu_mm: f64) -> Result<Self> {
        Self::from_weights([mu_pp, mu_pm, mu_mp, mu_mm])
    }

    /// Weights in [`SECTORS`] order.
    pub fn from_weights(weights: [f64; 4]) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Config(format!(
                "ancilla weights must be nonnegative, got {w}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_TOL {
            return Err(Error::Config(format!(
                "ancilla weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self { weights })
    }

    pub fn ground() -> Self {
        Self {
            weights: [1.0, 0.0, 0.0, 0.0],
        }
    }

    /// All weight in the sector at `index` of [`SECTORS`].
    pub fn vertex(index: usize) -> Self {
        let mut weights = [0.0; 4];
        weights[index] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn mu_pp(&self) -> f64 {
        self.weights[0]
    }
    pub fn mu_pm(&self) -> f64 {
        self.weights[1]
    }
    pub fn mu_mp(&self) -> f64 {
        self.weights[2]
    }
    pub fn mu_mm(&self) -> f64 {
        self.weights[3]
    }

    pub fn is_ground(&self) -> bool {
        self.weights == [1.0, 0.0, 0.0, 0.0]
    }
}

/// One term `μ_m ρ_m¹ E_{ε²}² E_{ε³}³` of a correlated preparation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrelatedComponent {
    pub weight: f64,
    pub data: BlochVector,
    pub eps2: Sign,
    pub eps3: Sign,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AncillaPreparation {
    PureGround,
    Mixture(AncillaMixture),
    /// Data state and ancillae correlated term by term; the configured data
    /// state is ignored.
    Correlated(Vec<CorrelatedComponent>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum BasisRotation {
    #[default]
    None,
    /// A `y` rotation of all spins after encoding and its inverse before
    /// decoding, turning z-axis noise into x-axis noise on the code.
    YHalfPi,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub data: DataState,
    pub ancillae: AncillaPreparation,
    pub channel: NoiseChannel,
    pub correction: bool,
    pub rotation: BasisRotation,
}

impl PipelineConfig {
    /// Corrected pipeline with pure ground ancillae and no basis rotation.
    pub fn new(data: DataState, channel: NoiseChannel) -> Self {
        Self {
            data,
            ancillae: AncillaPreparation::PureGround,
            channel,
            correction: true,
            rotation: BasisRotation::None,
        }
    }

    pub fn with_ancillae(mut self, ancillae: AncillaPreparation) -> Self {
        self.ancillae = ancillae;
        self
    }

    pub fn with_correction(mut self, correction: bool) -> Self {
        self.correction = correction;
        self
    }

    pub fn with_rotation(mut self, rotation: BasisRotation) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.channel.validate()?;
        if let AncillaPreparation::Correlated(components) = &self.ancillae {
            validate_components(components)?;
        }
        Ok(())
    }

    /// Three-spin state before encoding.
    pub fn initial_state(&self) -> Result<ThreeSpinState> {
        self.validate()?;
        match &self.ancillae {
            AncillaPreparation::PureGround => {
                Ok(ThreeSpinState::with_ground_ancillae(&self.data.density()?))
            }
            AncillaPreparation::Mixture(mix) => {
                let data = self.data.density()?;
                Ok(weighted_sum(SECTORS.iter().zip(mix.weights()).map(
                    |(&(s2, s3), w)| (w, ThreeSpinState::with_ancillae(&data, s2, s3)),
                )))
            }
            AncillaPreparation::Correlated(components) => {
                Ok(weighted_sum(components.iter().map(|c| {
                    (
                        c.weight,
                        ThreeSpinState::with_ancillae(&c.data.to_state(), c.eps2, c.eps3),
                    )
                })))
            }
        }
    }

    /// Gates applied before and after the noise: `(pre, post)`.
    fn stages(&self) -> (Gate, Gate) {
        if !self.correction {
            let id = Gate::new("1", SpinOperator::identity());
            return (id.clone(), id);
        }
        let enc = encoder();
        let (pre, post) = match self.rotation {
            BasisRotation::None => (enc.clone(), enc),
            BasisRotation::YHalfPi => {
                let r = z_to_x_frame();
                (enc.then(&r.inverse()), r.then(&enc))
            }
        };
        (pre, post.then(&toffoli()))
    }
}

fn validate_components(components: &[CorrelatedComponent]) -> Result<()> {
    if components.is_empty() {
        return Err(Error::Config(
            "correlated preparation has no components".into(),
        ));
    }
    for c in components {
        if !(c.weight.is_finite() && c.weight >= 0.0) {
            return Err(Error::Config(format!(
                "component weights must be nonnegative, got {}",
                c.weight
            )));
        }
        BlochVector::new(c.data.x, c.data.y, c.data.z).map_err(|e| Error::Config(e.to_string()))?;
    }
    let sum: f64 = components.iter().map(|c| c.weight).sum();
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Config(format!(
            "component weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

fn weighted_sum(terms: impl Iterator<Item = (f64, ThreeSpinState)>) -> ThreeSpinState {
    let op = terms.fold(SpinOperator::zero(), |acc, (w, rho)| {
        acc + rho.as_operator().scale(w)
    });
    ThreeSpinState::from_operator_unchecked(op)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PipelineResult {
    pub reduced: DataSpinState,
    pub bloch_in: BlochVector,
    pub bloch_out: BlochVector,
    /// Least-squares scale of the `(y, z)` components; absent when the input
    /// has none.
    pub theta_measured: Option<f64>,
}

/// `(y_out·y_in + z_out·z_in)/(y_in² + z_in²)`.
pub fn measured_theta(bloch_in: &BlochVector, bloch_out: &BlochVector) -> Option<f64> {
    let denom = bloch_in.y * bloch_in.y + bloch_in.z * bloch_in.z;
    (denom > 1e-24).then(|| (bloch_out.y * bloch_in.y + bloch_out.z * bloch_in.z) / denom)
}

/// Runs the pipeline with the configured channel. Monte Carlo channels are
/// averaged with their own sample count and seed.
pub fn run_pipeline(config: &PipelineConfig, t: f64) -> Result<PipelineResult> {
    if let ChannelKind::MonteCarlo { samples, seed } = config.channel.kind {
        return run_pipeline_mc(config, t, samples, seed).map(|r| r.result);
    }
    check_time(t)?;
    let rho_a = config.initial_state()?;
    let (pre, post) = config.stages();
    let ch = &config.channel;
    let decohered = dephase_operator(
        &pre.conjugate(&rho_a.as_operator()),
        &ch.covariance,
        t,
        ch.axis,
    );
    let out = ThreeSpinState::from_operator_unchecked(post.conjugate(&decohered));
    Ok(finish(&rho_a, partial_trace_ancillae(&out)))
}

fn finish(rho_a: &ThreeSpinState, reduced: DataSpinState) -> PipelineResult {
    let bloch_in = bloch_of(&partial_trace_ancillae(rho_a));
    let bloch_out = bloch_of(&reduced);
    PipelineResult {
        reduced,
        bloch_in,
        bloch_out,
        theta_measured: measured_theta(&bloch_in, &bloch_out),
    }
}

/// Monte Carlo pipeline result with standard errors of the estimates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McPipelineResult {
    pub result: PipelineResult,
    pub bloch_std_error: [f64; 3],
    pub theta_std_error: Option<f64>,
    pub samples: u64,
}

/// Averages full unitary trajectories over sampled phases.
///
/// The channel's kind is ignored; its axis and covariance are used with the
/// given sample count and seed.
pub fn run_pipeline_mc(
    config: &PipelineConfig,
    t: f64,
    samples: u64,
    seed: u64,
) -> Result<McPipelineResult> {
    check_time(t)?;
    if samples == 0 {
        return Err(Error::Parameter(
            "Monte Carlo pipeline needs at least one sample".into(),
        ));
    }
    let rho_a = config.initial_state()?;
    let bloch_in = bloch_of(&partial_trace_ancillae(&rho_a));
    let (pre, post) = config.stages();
    let (pre, post) = (*pre.unitary().matrix(), *post.unitary().matrix());
    let rho = *rho_a.matrix();
    let sampler = PhaseSampler::new(&config.channel.covariance);
    let axis = config.channel.axis;
    let has_theta = measured_theta(&bloch_in, &bloch_in).is_some();

    let est = ensemble_average(samples, seed, 12, |rng, out| {
        let v = random_propagator(&sampler.sample(t, rng), axis);
        let u = post * v.unitary().matrix() * pre;
        let evolved = SpinOperator::from_matrix(u * rho * u.adjoint());
        let reduced =
            DensityMatrix::new_unchecked(crate::operator::partial_trace_operator(&evolved));
        for (i, z) in reduced.matrix().iter().enumerate() {
            out[2 * i] = z.re;
            out[2 * i + 1] = z.im;
        }
        let b = bloch_of(&reduced);
        out[8..11].copy_from_slice(&b.to_array());
        out[11] = measured_theta(&bloch_in, &b).unwrap_or(0.0);
    });

    let reduced = DensityMatrix::new_unchecked(Matrix2::from_iterator(
        est.mean[..8]
            .chunks_exact(2)
            .map(|p| Complex64::new(p[0], p[1])),
    ));
    let mut result = finish(&rho_a, reduced);
    result.bloch_in = bloch_in;
    Ok(McPipelineResult {
        result,
        bloch_std_error: [est.std_error[8], est.std_error[9], est.std_error[10]],
        theta_std_error: has_theta.then_some(est.std_error[11]),
        samples: est.samples,
    })
}

/// Corrected survival factor `Θ′(t)` for ancillae in a diagonal mixture.
pub fn mixed_ancilla_theta(mix: &AncillaMixture, cov: &CovarianceMatrix, t: f64) -> f64 {
    let [pp, pm, mp, mm] = mix.weights();
    let d = DecayFactors::new(cov, t);
    let [f1, f2, f3] = d.f;
    0.5 * ((pp + pm + mp + mm) * f1 + (pp + pm - mp - mm) * f2 + (pp - pm + mp - mm) * f3
        - (pp - pm - mp + mm) * d.triple)
}

/// `dΘ′/dt` at `t = 0`.
pub fn mixed_ancilla_rate_at_zero(mix: &AncillaMixture, cov: &CovarianceMatrix) -> f64 {
    let [pp, pm, mp, mm] = mix.weights();
    let c = cov.matrix();
    let (c11, c22, c33) = (c[(0, 0)], c[(1, 1)], c[(2, 2)]);
    0.25 * ((pp - 1.0) * c11 - pm * (c11 + 2.0 * c22) - mp * (c11 + 2.0 * c33)
        + mm * (c11 + 2.0 * c22 + 2.0 * c33))
}

/// Outcome of a grid search for mixtures with vanishing `dΘ′(0)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NogoCertificate {
    pub step: f64,
    pub points: usize,
    /// Grid mixtures where every covariance gives `|dΘ′(0)| ≤ tolerance`.
    pub zeros: Vec<AncillaMixture>,
    /// `dΘ′(0)` at the four vertices, per covariance.
    pub vertex_rates: Vec<[f64; 4]>,
    /// Smallest margin over grid points other than the ground vertex.
    pub min_margin_off_ground: f64,
    /// Largest margin over grid points other than the ground vertex.
    pub max_margin_off_ground: f64,
    pub tolerance: f64,
}

impl NogoCertificate {
    /// The ground vertex is the only zero found.
    pub fn ground_is_unique_zero(&self) -> bool {
        self.zeros.len() == 1 && self.zeros[0].is_ground()
    }
}

/// Largest number of grid divisions per unit accepted by the simplex search.
pub const MAX_SIMPLEX_DIVISIONS: u32 = 500;

/// Searches the probability simplex on a grid of spacing `step` for
/// mixtures with `dΘ′(0) = 0`.
pub fn mixed_ancilla_nogo_search(cov: &CovarianceMatrix, step: f64) -> Result<NogoCertificate> {
    mixed_ancilla_nogo_joint(std::slice::from_ref(cov), step)
}

/// As [`mixed_ancilla_nogo_search`], but a mixture counts as a zero only if
/// `dΘ′(0)` vanishes under every covariance in `covs`. The margin at a
/// point is the largest `|dΘ′(0)|` over the covariances.
pub fn mixed_ancilla_nogo_joint(covs: &[CovarianceMatrix], step: f64) -> Result<NogoCertificate> {
    if covs.is_empty() {
        return Err(Error::Parameter("no covariance matrices given".into()));
    }
    for cov in covs {
        if cov.matrix()[(0, 0)] <= 0.0 {
            return Err(Error::Precondition(
                "the no-go search requires c11 > 0 (data-spin dephasing rate)".into(),
            ));
        }
    }
    let n = simplex_divisions(step)?;
    let scale = covs.iter().map(|c| c.matrix().amax()).fold(0.0, f64::max);
    let tolerance = 1e-12 * scale.max(1.0);

    let mut zeros = Vec::new();
    let mut points = 0;
    let (mut min_margin, mut max_margin) = (f64::INFINITY, 0.0f64);
    for i in 0..=n {
        for j in 0..=(n - i) {
            for k in 0..=(n - i - j) {
                let l = n - i - j - k;
                let w = [i, j, k, l].map(|x| x as f64 / n as f64);
                let mix = AncillaMixture { weights: w };
                let margin = covs
                    .iter()
                    .map(|c| mixed_ancilla_rate_at_zero(&mix, c).abs())
                    .fold(0.0, f64::max);
                points += 1;
                if margin <= tolerance {
                    zeros.push(mix);
                }
                if i != n {
                    min_margin = min_margin.min(margin);
                    max_margin = max_margin.max(margin);
                }
            }
        }
    }
    let vertex_rates = covs
        .iter()
        .map(|c| [0, 1, 2, 3].map(|v| mixed_ancilla_rate_at_zero(&AncillaMixture::vertex(v), c)))
        .collect();
    Ok(NogoCertificate {
        step: 1.0 / n as f64,
        points,
        zeros,
        vertex_rates,
        min_margin_off_ground: min_margin,
        max_margin_off_ground: max_margin,
        tolerance,
    })
}

fn simplex_divisions(step: f64) -> Result<u32> {
    if !(step.is_finite() && step > 0.0 && step <= 1.0) {
        return Err(Error::Parameter(format!(
            "grid step must lie in (0, 1], got {step}"
        )));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!(
            "grid step {step} does not divide 1 evenly"
        )));
    }
    if n > MAX_SIMPLEX_DIVISIONS as f64 {
        return Err(Error::Parameter(format!(
            "grid step {step} is finer than 1/{MAX_SIMPLEX_DIVISIONS}"
        )));
    }
    Ok(n as u32)
}

/// `Θ̇_{ε²ε³}(0)`: the slope of `Θ` at zero with the signs of `F²`, `F³`
/// set by the ancilla sector.
pub fn sector_rate_at_zero(eps2: Sign, eps3: Sign, cov: &CovarianceMatrix) -> f64 {
    let c = cov.matrix();
    let (c11, c22, c33) = (c[(0, 0)], c[(1, 1)], c[(2, 2)]);
    let (s2, s3) = (eps2.value(), eps3.value());
    0.25 * (-c11 - s2 * c22 - s3 * c33 + s2 * s3 * (c11 + c22 + c33))
}

/// Coefficients of `(c¹¹, c²², c³³)` in the two first-order conditions
/// `Σ Θ̇_s υ_s = 0` (row 0) and `Σ Θ̇_s ζ_s = 0` (row 1).
pub fn protection_conditions(components: &[CorrelatedComponent]) -> Result<[[f64; 3]; 2]> {
    validate_components(components)?;
    let mut rows = [[0.0; 3]; 2];
    for comp in components {
        let (s2, s3) = (comp.eps2.value(), comp.eps3.value());
        // Θ̇_s(0) = ¼(−c¹¹ − s₂c²² − s₃c³³ + s₂s₃(c¹¹ + c²² + c³³))
        let coeff = [-1.0 + s2 * s3, -s2 + s2 * s3, -s3 + s2 * s3].map(|x| 0.25 * x);
        for (row, component) in rows.iter_mut().zip([comp.data.y, comp.data.z]) {
            for (r, c) in row.iter_mut().zip(coeff) {
                *r += comp.weight * component * c;
            }
        }
    }
    Ok(rows)
}

/// Residuals of the two first-order conditions for the given covariance.
pub fn correlated_mixture_derivative(
    components: &[CorrelatedComponent],
    cov: &CovarianceMatrix,
) -> Result<(f64, f64)> {
    let rows = protection_conditions(components)?;
    let c = cov.matrix();
    let diag = [c[(0, 0)], c[(1, 1)], c[(2, 2)]];
    let dot = |r: &[f64; 3]| r.iter().zip(diag).map(|(a, b)| a * b).sum::<f64>();
    Ok((dot(&rows[0]), dot(&rows[1])))
}

/// Orthonormal basis of diagonal rates `(c¹¹, c²², c³³)` satisfying both
/// first-order conditions.
pub fn protecting_rates(components: &[CorrelatedComponent]) -> Result<Vec<[f64; 3]>> {
    let rows = protection_conditions(components)?;
    let m = Matrix3::from_fn(|r, c| if r < 2 { rows[r][c] } else { 0.0 });
    let gram = m.transpose() * m;
    let eig = SymmetricEigen::new(gram);
    let tol = 1e-12 * eig.eigenvalues.amax().max(1e-300).max(1.0);
    Ok((0..3)
        .filter(|&i| eig.eigenvalues[i].abs() <= tol)
        .map(|i| {
            let v = eig.eigenvectors.column(i);
            [v[0], v[1], v[2]]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::theta_general;
    use crate::noise::DephasingAxis;
    use crate::operator::{amplitudes_from_polar, generator, projector_e, Axis, Spin};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cov(rng: &mut ChaCha8Rng) -> CovarianceMatrix {
        let a = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        CovarianceMatrix::new(a * a.transpose()).unwrap()
    }

    fn polar_state(theta: f64, phi: f64) -> DataState {
        let (alpha, beta) = amplitudes_from_polar(theta, phi);
        DataState::Amplitudes { alpha, beta }
    }

    fn config(data: DataState, cov: CovarianceMatrix) -> PipelineConfig {
        PipelineConfig::new(data, NoiseChannel::analytic(cov, DephasingAxis::X))
    }

    #[test]
    fn pipeline_matches_theta() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let cov = random_cov(&mut rng);
            let data = polar_state(rng.random_range(0.0..3.0), rng.random_range(0.0..6.0));
            let cfg = config(data, cov);
            for t in [0.0, 0.1, 0.7, 2.0] {
                let r = run_pipeline(&cfg, t).unwrap();
                let theta = theta_general(&cov, t);
                assert!((r.bloch_out.x - r.bloch_in.x).abs() < 1e-10);
                assert!((r.bloch_out.y - theta * r.bloch_in.y).abs() < 1e-9);
                assert!((r.bloch_out.z - theta * r.bloch_in.z).abs() < 1e-9);
                assert!((r.theta_measured.unwrap() - theta).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn totally_correlated_worked_value() {
        let tau = 0.389;
        let cov = CovarianceMatrix::totally_correlated(tau).unwrap();
        let data = DataState::Bloch(BlochVector::new(0.0, 0.0, 1.0).unwrap());
        let r = run_pipeline(&config(data, cov), tau).unwrap();
        let expected = (9.0 * (-1.0f64).exp() - (-9.0f64).exp()) / 8.0;
        assert!((r.bloch_out.z - expected).abs() < 1e-12);
    }

    #[test]
    fn x_state_is_untouched() {
        let cov = CovarianceMatrix::uncorrelated(0.3).unwrap();
        let data = DataState::Bloch(BlochVector::new(1.0, 0.0, 0.0).unwrap());
        let r = run_pipeline(&config(data, cov), 1.1).unwrap();
        assert!((r.bloch_out.x - 1.0).abs() < 1e-12);
        assert!(r.theta_measured.is_none());
    }

    #[test]
    fn uncorrected_decay_is_single_spin() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let cov = random_cov(&mut rng);
        let data = polar_state(1.0, 0.4);
        let cfg = config(data, cov).with_correction(false);
        let t = 0.6;
        let r = run_pipeline(&cfg, t).unwrap();
        let f = (-t * cov.matrix()[(0, 0)] / 2.0).exp();
        assert!((r.bloch_out.x - r.bloch_in.x).abs() < 1e-12);
        assert!((r.bloch_out.y - f * r.bloch_in.y).abs() < 1e-12);
        assert!((r.bloch_out.z - f * r.bloch_in.z).abs() < 1e-12);
    }

    #[test]
    fn identity_at_zero_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let cov = random_cov(&mut rng);
        let data = polar_state(2.0, 1.0);
        let ground_sector = vec![
            component(0.7, 0.2, -0.4, Sign::Plus, Sign::Plus),
            component(0.3, 0.6, 0.1, Sign::Plus, Sign::Plus),
        ];
        for prep in [
            AncillaPreparation::PureGround,
            AncillaPreparation::Mixture(AncillaMixture::ground()),
            AncillaPreparation::Correlated(ground_sector),
        ] {
            let cfg = config(data, cov).with_ancillae(prep);
            let r = run_pipeline(&cfg, 0.0).unwrap();
            let rho_in = partial_trace_ancillae(&cfg.initial_state().unwrap());
            assert!(r.reduced.trace_distance(&rho_in) < 1e-10);
        }
    }

    #[test]
    fn excited_ancillae_are_not_identity_at_zero_time() {
        let cov = CovarianceMatrix::uncorrelated(1.0).unwrap();
        let data = DataState::Bloch(BlochVector::new(0.0, 0.0, 1.0).unwrap());
        let mix = AncillaMixture::vertex(3);
        let cfg = config(data, cov).with_ancillae(AncillaPreparation::Mixture(mix));
        let r = run_pipeline(&cfg, 0.0).unwrap();
        assert!((r.bloch_out.z + 1.0).abs() < 1e-12);
        assert!((mixed_ancilla_theta(&mix, &cov, 0.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rotation_protects_against_z_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let cov = random_cov(&mut rng);
        let data = polar_state(0.8, 2.1);
        let t = 0.45;
        let x_run = run_pipeline(&config(data, cov), t).unwrap();
        let z_cfg = PipelineConfig::new(data, NoiseChannel::analytic(cov, DephasingAxis::Z))
            .with_rotation(BasisRotation::YHalfPi);
        let z_run = run_pipeline(&z_cfg, t).unwrap();
        assert!(z_run.reduced.max_abs_diff(&x_run.reduced) < 1e-12);

        let unprotected = PipelineConfig::new(data, NoiseChannel::analytic(cov, DephasingAxis::Z));
        let r = run_pipeline(&unprotected, t).unwrap();
        assert!(r.reduced.max_abs_diff(&x_run.reduced) > 1e-3);
    }

    #[test]
    fn pipeline_is_linear_in_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let cov = random_cov(&mut rng);
        let b1 = BlochVector::new(0.3, -0.5, 0.6).unwrap();
        let b2 = BlochVector::new(-0.7, 0.1, -0.2).unwrap();
        let a = 0.35;
        let mixed = BlochVector::new(
            a * b1.x + (1.0 - a) * b2.x,
            a * b1.y + (1.0 - a) * b2.y,
            a * b1.z + (1.0 - a) * b2.z,
        )
        .unwrap();
        let run = |b| {
            run_pipeline(&config(DataState::Bloch(b), cov), 0.8)
                .unwrap()
                .reduced
        };
        let combined = run(b1).mix(&run(b2), a);
        assert!(run(mixed).max_abs_diff(&combined) < 1e-12);
    }

    #[test]
    fn mixed_ancilla_pipeline_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let cov = random_cov(&mut rng);
        let data = DataState::Bloch(BlochVector::new(0.2, 0.5, -0.6).unwrap());
        let mixes = (0..4)
            .map(AncillaMixture::vertex)
            .chain([AncillaMixture::new(0.1, 0.2, 0.3, 0.4).unwrap()]);
        for mix in mixes {
            let cfg = config(data, cov).with_ancillae(AncillaPreparation::Mixture(mix));
            for t in [0.2, 0.9] {
                let r = run_pipeline(&cfg, t).unwrap();
                let theta = mixed_ancilla_theta(&mix, &cov, t);
                assert!((r.theta_measured.unwrap() - theta).abs() < 1e-10);
                assert!((r.bloch_out.x - r.bloch_in.x).abs() < 1e-10);
            }
        }
        assert!(
            (mixed_ancilla_theta(&AncillaMixture::ground(), &cov, 0.5) - theta_general(&cov, 0.5))
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn mixed_rate_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let cov = random_cov(&mut rng);
        let h = 1e-5;
        for mix in (0..4)
            .map(AncillaMixture::vertex)
            .chain([AncillaMixture::new(0.25, 0.25, 0.25, 0.25).unwrap()])
        {
            let fd = (mixed_ancilla_theta(&mix, &cov, h) - mixed_ancilla_theta(&mix, &cov, -h))
                / (2.0 * h);
            assert!((fd - mixed_ancilla_rate_at_zero(&mix, &cov)).abs() < 1e-8);
        }
        assert_eq!(
            mixed_ancilla_rate_at_zero(&AncillaMixture::ground(), &cov),
            0.0
        );
    }

    #[test]
    fn vertex_grid_has_single_zero() {
        let cov = CovarianceMatrix::uncorrelated(1.0).unwrap();
        let cert = mixed_ancilla_nogo_search(&cov, 1.0).unwrap();
        assert_eq!(cert.points, 4);
        assert!(cert.ground_is_unique_zero());
        assert_eq!(cert.vertex_rates[0][0], 0.0);
    }

    #[test]
    fn fine_grid_finds_interior_zeros_for_a_single_covariance() {
        let cov = CovarianceMatrix::uncorrelated(1.0).unwrap();
        let cert = mixed_ancilla_nogo_search(&cov, 0.25).unwrap();
        let interior = AncillaMixture::new(0.5, 0.25, 0.0, 0.25).unwrap();
        assert!(cert.zeros.contains(&interior));
        assert!(!cert.ground_is_unique_zero());
    }

    #[test]
    fn joint_search_isolates_ground_state() {
        let covs = [
            CovarianceMatrix::from_rows([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]])
                .unwrap(),
            CovarianceMatrix::from_rows([[3.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]])
                .unwrap(),
            CovarianceMatrix::from_rows([[2.0, 0.0, 0.0], [0.0, 3.0, 0.0], [0.0, 0.0, 1.0]])
                .unwrap(),
        ];
        let cert = mixed_ancilla_nogo_joint(&covs, 0.05).unwrap();
        assert!(cert.ground_is_unique_zero());
        assert!(cert.min_margin_off_ground > 0.0);
    }

    #[test]
    fn nogo_preconditions() {
        let cov = CovarianceMatrix::from_rows([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            .unwrap();
        assert!(matches!(
            mixed_ancilla_nogo_search(&cov, 0.1),
            Err(Error::Precondition(_))
        ));
        let ok = CovarianceMatrix::uncorrelated(1.0).unwrap();
        assert!(mixed_ancilla_nogo_search(&ok, 0.3).is_err());
        assert!(mixed_ancilla_nogo_search(&ok, 0.0).is_err());
    }

    #[test]
    fn mixture_validation() {
        assert!(AncillaMixture::new(0.5, 0.5, 0.1, -0.1).is_err());
        assert!(AncillaMixture::new(0.5, 0.5, 0.1, 0.0).is_err());
        assert!(AncillaMixture::new(0.25, 0.25, 0.25, 0.25).is_ok());
    }

    fn component(weight: f64, y: f64, z: f64, eps2: Sign, eps3: Sign) -> CorrelatedComponent {
        CorrelatedComponent {
            weight,
            data: BlochVector::new(0.0, y, z).unwrap(),
            eps2,
            eps3,
        }
    }

    #[test]
    fn sector_rates() {
        let cov = CovarianceMatrix::from_rows([[1.0, 0.2, 0.1], [0.2, 2.0, 0.3], [0.1, 0.3, 3.0]])
            .unwrap();
        use Sign::{Minus as M, Plus as P};
        assert_eq!(sector_rate_at_zero(P, P, &cov), 0.0);
        assert!((sector_rate_at_zero(P, M, &cov) + 1.5).abs() < 1e-15);
        assert!((sector_rate_at_zero(M, P, &cov) + 2.0).abs() < 1e-15);
        assert!((sector_rate_at_zero(M, M, &cov) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn ground_sector_mixture_is_protected() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let cov = random_cov(&mut rng);
        let comps = [
            component(0.6, 0.4, 0.5, Sign::Plus, Sign::Plus),
            component(0.4, -0.3, 0.9, Sign::Plus, Sign::Plus),
        ];
        let (ry, rz) = correlated_mixture_derivative(&comps, &cov).unwrap();
        assert_eq!((ry, rz), (0.0, 0.0));
    }

    #[test]
    fn cancelling_mixture_is_protected() {
        // With diag(1, 2, 3): Θ̇₊₋ = −3/2 and Θ̇₋₋ = 5/2, so υ₋₋ = 0.6 υ₊₋.
        let cov = CovarianceMatrix::from_rows([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]])
            .unwrap();
        let comps = [
            component(0.5, 0.5, 0.0, Sign::Plus, Sign::Minus),
            component(0.5, 0.3, 0.0, Sign::Minus, Sign::Minus),
        ];
        let (ry, rz) = correlated_mixture_derivative(&comps, &cov).unwrap();
        assert!(ry.abs() < 1e-15 && rz.abs() < 1e-15);
        let basis = protecting_rates(&comps).unwrap();
        assert!(!basis.is_empty());
        let rows = protection_conditions(&comps).unwrap();
        for v in basis {
            for row in rows {
                assert!(row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn residuals_match_pipeline_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let cov = random_cov(&mut rng);
        let comps = vec![
            component(0.3, 0.4, -0.5, Sign::Plus, Sign::Plus),
            component(0.2, -0.6, 0.2, Sign::Plus, Sign::Minus),
            component(0.4, 0.1, 0.7, Sign::Minus, Sign::Plus),
            component(0.1, 0.5, 0.5, Sign::Minus, Sign::Minus),
        ];
        let cfg = config(
            DataState::Bloch(BlochVector::new(0.0, 0.0, 0.0).unwrap()),
            cov,
        )
        .with_ancillae(AncillaPreparation::Correlated(comps.clone()));
        let h = 1e-5;
        let plus = run_pipeline(&cfg, h).unwrap().bloch_out;
        let zero = run_pipeline(&cfg, 0.0).unwrap().bloch_out;
        // One-sided difference: the pipeline is only defined for t ≥ 0.
        let (ry, rz) = correlated_mixture_derivative(&comps, &cov).unwrap();
        assert!(((plus.y - zero.y) / h - ry).abs() < 1e-4);
        assert!(((plus.z - zero.z) / h - rz).abs() < 1e-4);
        assert!(ry.abs() > 1e-3 || rz.abs() > 1e-3);
    }

    #[test]
    fn correlated_components_are_validated() {
        let comps = vec![component(0.5, 0.1, 0.1, Sign::Plus, Sign::Plus)];
        let cfg = config(
            DataState::Bloch(BlochVector::new(0.0, 0.0, 1.0).unwrap()),
            CovarianceMatrix::uncorrelated(1.0).unwrap(),
        )
        .with_ancillae(AncillaPreparation::Correlated(comps));
        assert!(matches!(run_pipeline(&cfg, 0.1), Err(Error::Config(_))));
    }

    #[test]
    fn mc_pipeline_agrees_with_analytic() {
        let cov = CovarianceMatrix::uncorrelated(0.4).unwrap();
        let data = DataState::Bloch(BlochVector::new(0.0, 0.0, 1.0).unwrap());
        let cfg = config(data, cov);
        let mc = run_pipeline_mc(&cfg, 0.2, 20_000, 5).unwrap();
        let theta = theta_general(&cov, 0.2);
        let se = mc.theta_std_error.unwrap();
        assert!((mc.result.theta_measured.unwrap() - theta).abs() < 4.0 * se);
        assert!(mc.result.reduced.validate().is_ok());
    }

    #[test]
    fn mc_pipeline_reproducible() {
        let cov = CovarianceMatrix::totally_correlated(0.4).unwrap();
        let cfg = config(polar_state(1.0, 2.0), cov);
        let a = run_pipeline_mc(&cfg, 0.3, 3000, 9).unwrap();
        let b = run_pipeline_mc(&cfg, 0.3, 3000, 9).unwrap();
        assert_eq!(a, b);
        assert!(run_pipeline_mc(&cfg, 0.3, 0, 9).is_err());
    }

    fn real_exp_involution(a: f64, q: &SpinOperator) -> SpinOperator {
        // exp(−aQ) for Q² = 1
        SpinOperator::identity().scale(a.cosh()) - q.scale(a.sinh())
    }

    #[test]
    fn decode_table() {
        let c = CovarianceMatrix::from_rows([[1.3, 0.4, -0.2], [0.4, 0.9, 0.3], [-0.2, 0.3, 1.1]])
            .unwrap();
        let t = 0.8;
        let m = c.matrix();
        let (a12, a13, a23) = (t * m[(0, 1)], t * m[(0, 2)], t * m[(1, 2)]);
        let z = |s| generator(s, Axis::Z);
        let x = |s| generator(s, Axis::X);
        let (z1, z2, z3) = (z(Spin::One), z(Spin::Two), z(Spin::Three));
        let one = SpinOperator::identity();
        let fd12 = real_exp_involution(a12, &(x(Spin::One) * x(Spin::Three)).scale(4.0));
        let fd13 = real_exp_involution(a13, &(x(Spin::One) * x(Spin::Two)).scale(4.0));
        let fd23 = real_exp_involution(a23, &(x(Spin::Two) * x(Spin::Three)).scale(4.0));
        let f123 = a12.cosh() * a13.cosh() * a23.cosh() - a12.sinh() * a13.sinh() * a23.sinh();
        let z12 = (z1 * z2).scale(4.0);
        let z13 = (z1 * z3).scale(4.0);
        let z23 = (z2 * z3).scale(4.0);
        let z123 = (z1 * z2 * z3).scale(8.0);
        let half = |p: SpinOperator| p.scale(0.5);

        let table: Vec<(SpinOperator, SpinOperator)> = vec![
            (one, one),
            (z1.scale(2.0), z1 + half(z12) + half(z13) - half(z123)),
            (fd12 * z2.scale(2.0), z2.scale(2.0 * a12.cosh())),
            (fd13 * z3.scale(2.0), z3.scale(2.0 * a13.cosh())),
            (z12, z1 + half(z12) - half(z13) + half(z123)),
            (z13, z1 - half(z12) + half(z13) + half(z123)),
            (fd23 * z23, z23.scale(a23.cosh())),
            (
                fd12 * fd13 * fd23 * z123,
                (-z1 + half(z12) + half(z13) + half(z123)).scale(f123),
            ),
        ];
        let tof = toffoli();
        for (i, (decoded, expected)) in table.iter().enumerate() {
            let got = tof.conjugate(&projector_e(decoded));
            assert!(got.max_abs_diff(expected) < 1e-12, "line {i}");
        }
    }
}
