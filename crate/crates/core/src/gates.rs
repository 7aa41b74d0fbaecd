//! Unitary gates of the three-bit code, built from idempotents.
//!
//! Propagators act on states by conjugation, `ρ ↦ U ρ U†`. With that
//! convention `exp(−iθI_a)` is a right-handed rotation by `θ`, so the
//! `π/2` rotation about y takes `I_x` to `−I_z` and `I_z` to `I_x`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{generator, idempotent, Axis, Sign, Spin, SpinOperator, ThreeSpinState};

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    name: String,
    unitary: SpinOperator,
}

impl Gate {
    pub fn new(name: impl Into<String>, unitary: SpinOperator) -> Self {
        Self {
            name: name.into(),
            unitary,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unitary(&self) -> &SpinOperator {
        &self.unitary
    }

    pub fn inverse(&self) -> Gate {
        Gate::new(format!("{}^-1", self.name), self.unitary.adjoint())
    }

    /// Gate that applies `self` first, then `next`.
    pub fn then(&self, next: &Gate) -> Gate {
        Gate::new(
            format!("{}·{}", next.name, self.name),
            next.unitary * self.unitary,
        )
    }

    pub fn conjugate(&self, x: &SpinOperator) -> SpinOperator {
        self.unitary.conjugate(x)
    }

    pub fn apply(&self, rho: &ThreeSpinState) -> ThreeSpinState {
        ThreeSpinState::from_operator_unchecked(self.conjugate(&rho.as_operator()))
    }
}

/// `exp(iφQ) = cos φ + i sin φ Q` for a Hermitian involution `Q`.
pub fn exp_i_involution(angle: f64, q: &SpinOperator) -> SpinOperator {
    SpinOperator::identity().scale(angle.cos()) + q.scale_complex(Complex64::new(0.0, angle.sin()))
}

/// `S^{target|control} = 2I_x^target E_−^control + E_+^control`: flips the
/// target when the control is in its `E_−` sector.
pub fn cnot(target: Spin, control: Spin) -> Result<Gate> {
    if target == control {
        return Err(Error::InvalidGate(format!(
            "c-NOT target and control are both spin {target}"
        )));
    }
    let u = generator(target, Axis::X).scale(2.0) * idempotent(control, Sign::Minus)
        + idempotent(control, Sign::Plus);
    Ok(Gate::new(format!("S{target}|{control}"), u))
}

/// `S^{23|1} = 4I_x²I_x³E_−¹ + E_+¹`, the encoder and decoder.
pub fn encoder() -> Gate {
    let u = generator(Spin::Two, Axis::X).scale(2.0)
        * generator(Spin::Three, Axis::X).scale(2.0)
        * idempotent(Spin::One, Sign::Minus)
        + idempotent(Spin::One, Sign::Plus);
    Gate::new("S23|1", u)
}

/// `T^{1|23} = 2I_x¹E_−²E_−³ + (1 − E_−²E_−³)`.
pub fn toffoli() -> Gate {
    let both = idempotent(Spin::Two, Sign::Minus) * idempotent(Spin::Three, Sign::Minus);
    let u = generator(Spin::One, Axis::X).scale(2.0) * both + (SpinOperator::identity() - both);
    Gate::new("T1|23", u)
}

/// `exp(−i·angle·Σ_{k∈spins} I_axis^k)`; repeated spins count once.
pub fn global_rotation(axis: Axis, angle: f64, spins: &[Spin]) -> Gate {
    let mut seen = [false; 3];
    let mut u = SpinOperator::identity();
    for &spin in spins {
        if std::mem::replace(&mut seen[spin.index()], true) {
            continue;
        }
        let two_i = generator(spin, axis).scale(2.0);
        u = u * exp_i_involution(-angle / 2.0, &two_i);
    }
    let label: String = Spin::ALL
        .iter()
        .filter(|s| seen[s.index()])
        .map(|s| s.to_string())
        .collect();
    Gate::new(format!("R{axis}({angle})[{label}]"), u)
}

/// One factor of the exponential expansion of the Toffoli gate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionFactor {
    pub gate: Gate,
    /// Spins the generator acts on; empty for the global phase.
    pub support: Vec<Spin>,
}

impl ExpansionFactor {
    pub fn touches_data(&self) -> bool {
        self.support.contains(&Spin::One)
    }
}

/// The Toffoli written as eight commuting exponentials,
/// `e^{iπ/8} e^{−iπ/4 I_x¹} e^{−iπ/4 I_z²} e^{−iπ/4 I_z³} e^{iπ/2 I_x¹I_z²}
/// e^{iπ/2 I_x¹I_z³} e^{iπ/2 I_z²I_z³} e^{−iπ I_x¹I_z²I_z³}`.
pub fn toffoli_product_expansion() -> Vec<ExpansionFactor> {
    let two = |spin, axis| generator(spin, axis).scale(2.0);
    let x1 = two(Spin::One, Axis::X);
    let z2 = two(Spin::Two, Axis::Z);
    let z3 = two(Spin::Three, Axis::Z);
    // (angle φ, involution Q, support) with factor exp(iφQ); a product
    // I_a I_b .. of m spins equals Q / 2^m.
    let terms: Vec<(&str, f64, SpinOperator, Vec<Spin>)> = vec![
        ("phase", PI / 8.0, SpinOperator::identity(), vec![]),
        ("Ix1", -PI / 8.0, x1, vec![Spin::One]),
        ("Iz2", -PI / 8.0, z2, vec![Spin::Two]),
        ("Iz3", -PI / 8.0, z3, vec![Spin::Three]),
        ("Ix1Iz2", PI / 8.0, x1 * z2, vec![Spin::One, Spin::Two]),
        ("Ix1Iz3", PI / 8.0, x1 * z3, vec![Spin::One, Spin::Three]),
        ("Iz2Iz3", PI / 8.0, z2 * z3, vec![Spin::Two, Spin::Three]),
        (
            "Ix1Iz2Iz3",
            -PI / 8.0,
            x1 * z2 * z3,
            vec![Spin::One, Spin::Two, Spin::Three],
        ),
    ];
    terms
        .into_iter()
        .map(|(name, angle, q, support)| ExpansionFactor {
            gate: Gate::new(format!("exp[{name}]"), exp_i_involution(angle, &q)),
            support,
        })
        .collect()
}

/// Ordered product `U_0 U_1 ... U_n` of the factors' unitaries.
pub fn product_of(factors: &[ExpansionFactor]) -> SpinOperator {
    factors
        .iter()
        .fold(SpinOperator::identity(), |acc, f| acc * *f.gate.unitary())
}

/// The factors that survive when the Toffoli is followed by the partial
/// trace over the ancillae: ancilla-only propagators and the global phase
/// are dropped.
pub fn toffoli_data_factors() -> Vec<ExpansionFactor> {
    toffoli_product_expansion()
        .into_iter()
        .filter(ExpansionFactor::touches_data)
        .collect()
}
