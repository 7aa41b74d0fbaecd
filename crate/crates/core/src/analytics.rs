//! Closed-form decay laws, their derivatives and landmarks, and the
//! log-linear fitting workflow for decay curves.

use std::fmt;

use crate::error::{Error, Result};
use crate::noise::CovarianceMatrix;

/// Scalar factors of the corrected decay at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayFactors {
    /// `F^j = e^{−t c^{jj}/2}`.
    pub f: [f64; 3],
    /// `F^{jk} = cosh(t c^{jk})` for (12, 13, 23).
    pub f_pair: [f64; 3],
    /// `F^{123} = Π cosh(t c^{jk}) − Π sinh(t c^{jk})`.
    pub f123: f64,
    /// `F¹F²F³F¹²³`, evaluated without cancellation as
    /// `¼ Σ_v e^{−t vᵀCv/2}` over `v ∈ {(1,1,1), (1,1,−1), (1,−1,1), (−1,1,1)}`.
    pub triple: f64,
}

impl DecayFactors {
    pub fn new(cov: &CovarianceMatrix, t: f64) -> Self {
        let c = cov.matrix();
        let f = [0, 1, 2].map(|j| (-t * c[(j, j)] / 2.0).exp());
        let off = [c[(0, 1)], c[(0, 2)], c[(1, 2)]].map(|x| x * t);
        let f_pair = off.map(f64::cosh);
        let f123 = f_pair.iter().product::<f64>() - off.iter().map(|x| x.sinh()).product::<f64>();
        let triple = [
            [1.0, 1.0, 1.0],
            [1.0, 1.0, -1.0],
            [1.0, -1.0, 1.0],
            [-1.0, 1.0, 1.0],
        ]
        .iter()
        .map(|&v| (-t * cov.quadratic_form(v) / 2.0).exp())
        .sum::<f64>()
            / 4.0;
        Self {
            f,
            f_pair,
            f123,
            triple,
        }
    }

    /// `½(F¹ + s₂F² + s₃F³ − s₂s₃F¹F²F³F¹²³)` for ancilla signs `s₂, s₃`.
    pub fn signed_theta(&self, s2: f64, s3: f64) -> f64 {
        let [f1, f2, f3] = self.f;
        0.5 * (f1 + s2 * f2 + s3 * f3 - s2 * s3 * self.triple)
    }
}

/// Corrected survival factor `Θ(t)` of the protected Bloch components.
///
/// Defined for every real `t`; negative times are an analytic continuation
/// useful for central differences.
pub fn theta_general(cov: &CovarianceMatrix, t: f64) -> f64 {
    DecayFactors::new(cov, t).signed_theta(1.0, 1.0)
}

/// Uncorrected single-spin decay `e^{−t c¹¹/2}`.
pub fn uncorrected_decay(cov: &CovarianceMatrix, t: f64) -> f64 {
    (-t * cov.matrix()[(0, 0)] / 2.0).exp()
}

/// A finite sum `Σ aᵢ e^{−rᵢ t}`, differentiable to any order in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayLaw {
    terms: Vec<(f64, f64)>,
}

impl DecayLaw {
    /// Terms are `(amplitude, rate)` pairs.
    pub fn new(terms: Vec<(f64, f64)>) -> Self {
        Self { terms }
    }

    pub fn terms(&self) -> &[(f64, f64)] {
        &self.terms
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(0, t)
    }

    pub fn derivative(&self, order: u32, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(a, r)| a * (-r).powi(order as i32) * (-r * t).exp())
            .sum()
    }
}

/// `Θ(t)` as seven exponentials: three single-spin terms and four
/// three-spin terms whose rates mix the covariances with sign patterns.
pub fn theta_law(cov: &CovarianceMatrix) -> DecayLaw {
    let c = cov.matrix();
    let diag = [c[(0, 0)], c[(1, 1)], c[(2, 2)]];
    let half_trace = diag.iter().sum::<f64>() / 2.0;
    let (c12, c13, c23) = (c[(0, 1)], c[(0, 2)], c[(1, 2)]);
    let mut terms: Vec<(f64, f64)> = diag.iter().map(|d| (0.5, d / 2.0)).collect();
    for shift in [
        c12 + c13 + c23,
        -c12 - c13 + c23,
        -c12 + c13 - c23,
        c12 - c13 - c23,
    ] {
        terms.push((-0.125, half_trace + shift));
    }
    DecayLaw::new(terms)
}

/// The two named noise models, parameterised by the single-spin rate `1/τ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecayModel {
    Uncorrelated,
    TotallyCorrelated,
}

impl DecayModel {
    /// Corrected decay `½(3e^{−x} − e^{−3x})` or `⅛(9e^{−x} − e^{−9x})`, `x = t/τ`.
    pub fn law(self, rate: f64) -> DecayLaw {
        match self {
            DecayModel::Uncorrelated => DecayLaw::new(vec![(1.5, rate), (-0.5, 3.0 * rate)]),
            DecayModel::TotallyCorrelated => {
                DecayLaw::new(vec![(1.125, rate), (-0.125, 9.0 * rate)])
            }
        }
    }

    pub fn covariance(self, tau: f64) -> Result<CovarianceMatrix> {
        match self {
            DecayModel::Uncorrelated => CovarianceMatrix::uncorrelated(tau),
            DecayModel::TotallyCorrelated => CovarianceMatrix::totally_correlated(tau),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DecayModel::Uncorrelated => "uncorrelated",
            DecayModel::TotallyCorrelated => "correlated",
        }
    }
}

impl fmt::Display for DecayModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn theta_uncorrelated(tau: f64, t: f64) -> f64 {
    DecayModel::Uncorrelated.law(1.0 / tau).eval(t)
}

pub fn theta_totally_correlated(tau: f64, t: f64) -> f64 {
    DecayModel::TotallyCorrelated.law(1.0 / tau).eval(t)
}

/// Derivatives of `Θ` at `t = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaDerivatives {
    pub first: f64,
    pub second: f64,
    pub third: f64,
    /// Third-derivative polynomial with `3(c³³)²(c²²+c³³)` in place of the
    /// symmetric `3(c³³)²(c¹¹+c²²)`; kept for comparison only.
    pub third_alternative: f64,
}

pub fn theta_derivatives_at_zero(cov: &CovarianceMatrix) -> ThetaDerivatives {
    let c = cov.matrix();
    let (c11, c22, c33) = (c[(0, 0)], c[(1, 1)], c[(2, 2)]);
    let (c12, c13, c23) = (c[(0, 1)], c[(0, 2)], c[(1, 2)]);
    let off_sq = c12 * c12 + c13 * c13 + c23 * c23;
    let second = -0.25 * (2.0 * off_sq + c11 * c22 + c11 * c33 + c22 * c33);
    let common = 3.0 * c11 * c11 * (c22 + c33)
        + 3.0 * c22 * c22 * (c11 + c33)
        + 6.0 * c11 * c22 * c33
        + 12.0 * off_sq * (c11 + c22 + c33)
        + 48.0 * c12 * c13 * c23;
    ThetaDerivatives {
        first: 0.0,
        second,
        third: (common + 3.0 * c33 * c33 * (c11 + c22)) / 16.0,
        third_alternative: (common + 3.0 * c33 * c33 * (c22 + c33)) / 16.0,
    }
}

/// Inflection time of the corrected decay: `ln(3)τ/2` or `ln(3)τ/4`.
pub fn inflection_point(model: DecayModel, tau: f64) -> Result<f64> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::Parameter(format!("tau must be positive, got {tau}")));
    }
    let ln3 = 3f64.ln();
    Ok(match model {
        DecayModel::Uncorrelated => ln3 * tau / 2.0,
        DecayModel::TotallyCorrelated => ln3 * tau / 4.0,
    })
}

/// Bisection root of `f` on `[lo, hi]`, which must bracket a sign change.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Domain(format!(
            "no sign change on [{lo}, {hi}]: f = {flo}, {fhi}"
        )));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Zero of the second derivative of `law` inside `[lo, hi]`.
pub fn find_inflection(law: &DecayLaw, lo: f64, hi: f64) -> Result<f64> {
    bisect_root(|t| law.derivative(2, t), lo, hi, 1e-14)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    Analytic,
    MonteCarlo,
    Fitted,
    Measured,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Analytic => "analytic",
            Provenance::MonteCarlo => "monte-carlo",
            Provenance::Fitted => "fitted",
            Provenance::Measured => "measured",
        }
    }
}

/// Sampled `(t, value)` series on a strictly increasing time grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    provenance: Provenance,
}

impl DecayCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Alignment(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Domain("curve contains non-finite entries".into()));
        }
        if let Some(w) = times.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::Domain(format!(
                "times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self {
            times,
            values,
            provenance,
        })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(times: &[f64], provenance: Provenance, f: F) -> Result<Self> {
        Self::new(
            times.to_vec(),
            times.iter().map(|&t| f(t)).collect(),
            provenance,
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn rms(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }
}

/// `n` equally spaced points on `[start, end]`.
pub fn linear_grid(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (end - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitResult {
    /// Fitted decay rate `1/τ`.
    pub rate: f64,
    /// Intercept of `ln(value)` at `t = 0`.
    pub intercept: f64,
    /// Pearson correlation of `(t, ln value)`; zero when the log-values are constant.
    pub correlation_coefficient: f64,
}

impl FitResult {
    pub fn tau(&self) -> f64 {
        1.0 / self.rate
    }
}

/// Ordinary least squares of `ln(value)` against `t`.
pub fn fit_exponential_rate(curve: &DecayCurve) -> Result<FitResult> {
    if curve.len() < 2 {
        return Err(Error::Domain("need at least two points to fit".into()));
    }
    if let Some((t, v)) = curve
        .times()
        .iter()
        .zip(curve.values())
        .find(|(_, &v)| v <= 0.0)
    {
        return Err(Error::Domain(format!(
            "nonpositive amplitude {v} at t = {t}; truncate the curve before fitting"
        )));
    }
    let x = curve.times();
    let y: Vec<f64> = curve.values().iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (xi, yi) in x.iter().zip(&y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let corr = if syy == 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    };
    Ok(FitResult {
        rate: -slope,
        intercept: my - slope * mx,
        correlation_coefficient: corr,
    })
}

/// Corrected-decay prediction for a fitted rate.
pub fn predict_corrected_curve(rate: f64, model: DecayModel, times: &[f64]) -> Result<DecayCurve> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Parameter(format!(
            "rate must be positive, got {rate}"
        )));
    }
    let law = model.law(rate);
    DecayCurve::from_fn(times, Provenance::Fitted, |t| law.eval(t))
}

fn check_aligned(a: &DecayCurve, b: &DecayCurve) -> Result<()> {
    if a.times() != b.times() {
        return Err(Error::Alignment(format!(
            "time grids differ ({} vs {} points)",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Rescales `measured` so its RMS equals that of `reference`.
pub fn scale_to_rms(measured: &DecayCurve, reference: &DecayCurve) -> Result<DecayCurve> {
    check_aligned(measured, reference)?;
    let target = reference.rms();
    if target == 0.0 {
        return Err(Error::Parameter(
            "reference curve is identically zero".into(),
        ));
    }
    let rms = measured.rms();
    let scale = if rms == 0.0 { 0.0 } else { target / rms };
    DecayCurve::new(
        measured.times().to_vec(),
        measured.values().iter().map(|v| v * scale).collect(),
        measured.provenance(),
    )
}

pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::Alignment(format!(
            "need two equal-length series of at least two points ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Domain(
            "correlation undefined for a constant series".into(),
        ));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between two curves on the same grid.
pub fn curve_correlation(a: &DecayCurve, b: &DecayCurve) -> Result<f64> {
    check_aligned(a, b)?;
    pearson_correlation(a.values(), b.values())
}
