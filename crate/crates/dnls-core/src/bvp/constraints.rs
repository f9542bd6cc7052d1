//! Boundary and integral constraints closing the periodic BVP.
//!
//! Beyond the `2n` periodicity conditions, a solve carries a set of scalar
//! constraints and a list of free parameters. The bookkeeping rule: a square
//! Newton solve needs as many free parameters as active scalar constraints;
//! a pseudo-arclength corrector needs one more free parameter, closed by the
//! arclength equation. The unfolding parameters `p₁, p₂` are always free.

use serde::{Deserialize, Serialize};

use super::orbit::RotatingOrbit;
use crate::{Error, Result};

/// A constraint target: prescribed (`Fixed`) or solved along with the orbit
/// so the constraint merely tracks the quantity (`Tracked`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Target {
    Fixed(f64),
    Tracked,
}

/// Phase condition fixing time translation.
#[derive(Debug, Clone)]
pub enum PhaseCondition {
    /// `y_n(0) = 0`.
    PointwiseYn0,
    /// `∫₀¹ x_n x̃'_n + y_n ỹ'_n dt = 0` against a reference orbit
    /// (typically the previous continuation point, on the same mesh).
    Integral { reference: Box<RotatingOrbit> },
}

/// Where scalar expressions like the energy constraint are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyConvention {
    /// Sum over sites evaluated at `t = 0`.
    AtZero,
    /// Time average `∫₀¹ Σ_k (…) dt`.
    TimeAveraged,
}

/// Continuation parameters that Newton may solve for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreeParam {
    /// Orbit period `T`.
    Period,
    /// Equilibrium amplitude `a` (moves `ω` along the dispersion relation).
    Amplitude,
    /// Pinning target `x_n⁰`.
    Xn0,
    /// Energy-expression target `E`.
    Energy,
    /// Amplitude-norm target `A`.
    Norm,
    /// Ratio target `r = T/T₀`.
    Ratio,
    P1,
    P2,
}

pub const CANONICAL_PARAMS: [FreeParam; 8] = [
    FreeParam::Period,
    FreeParam::Amplitude,
    FreeParam::Xn0,
    FreeParam::Energy,
    FreeParam::Norm,
    FreeParam::Ratio,
    FreeParam::P1,
    FreeParam::P2,
];

/// The active scalar constraints and free parameters of one solve stage.
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub phase: PhaseCondition,
    /// `∫₀¹ y_n dt = 0`, removing the gauge rotation.
    pub rotation_lock: bool,
    /// `x_n(0) − x_n⁰ = 0`.
    pub pin_xn0: Option<Target>,
    /// `Σ_k |u_k − u_{k+1}|² − |u_k|⁴ − ω|u_k|² − E = 0`.
    pub fix_energy: Option<Target>,
    pub energy_convention: EnergyConvention,
    /// `Σ_k |u_k|² − A = 0` at `t = 0`.
    pub fix_norm: Option<Target>,
    /// `T/T₀ − r = 0`, i.e. `T ω(a)/2π − r = 0`.
    pub fix_ratio: Option<Target>,
    pub free: Vec<FreeParam>,
}

impl ConstraintSet {
    /// Phase + rotation lock only, with the given free parameters.
    pub fn basic(free: &[FreeParam]) -> Self {
        ConstraintSet {
            phase: PhaseCondition::PointwiseYn0,
            rotation_lock: true,
            pin_xn0: None,
            fix_energy: None,
            energy_convention: EnergyConvention::AtZero,
            fix_norm: None,
            fix_ratio: None,
            free: canonical_order(free),
        }
    }

    pub fn with_pin(mut self, target: Target) -> Self {
        self.pin_xn0 = Some(target);
        self
    }

    pub fn with_ratio(mut self, target: Target) -> Self {
        self.fix_ratio = Some(target);
        self
    }

    pub fn n_scalar_constraints(&self) -> usize {
        1 + usize::from(self.rotation_lock)
            + usize::from(self.pin_xn0.is_some())
            + usize::from(self.fix_energy.is_some())
            + usize::from(self.fix_norm.is_some())
            + usize::from(self.fix_ratio.is_some())
    }

    pub fn has_free(&self, p: FreeParam) -> bool {
        self.free.contains(&p)
    }

    /// Check the constraint/parameter balance for a solve.
    ///
    /// `with_arclength = false`: square Newton solve, one free parameter per
    /// scalar constraint. `true`: pseudo-arclength corrector, one extra free
    /// parameter closed by the arclength equation.
    pub fn validate(&self, with_arclength: bool, stage: &str) -> Result<()> {
        if !self.has_free(FreeParam::P1) || !self.has_free(FreeParam::P2) {
            return Err(Error::UnbalancedConstraints {
                stage: stage.into(),
                detail: "unfolding parameters p1, p2 must be free".into(),
            });
        }
        let mut seen = Vec::new();
        for p in &self.free {
            if seen.contains(p) {
                return Err(Error::UnbalancedConstraints {
                    stage: stage.into(),
                    detail: format!("duplicate free parameter {p:?}"),
                });
            }
            seen.push(*p);
        }
        let pairings: [(FreeParam, bool); 4] = [
            (FreeParam::Xn0, matches!(self.pin_xn0, Some(Target::Tracked))),
            (FreeParam::Energy, matches!(self.fix_energy, Some(Target::Tracked))),
            (FreeParam::Norm, matches!(self.fix_norm, Some(Target::Tracked))),
            (FreeParam::Ratio, matches!(self.fix_ratio, Some(Target::Tracked))),
        ];
        for (p, tracked) in pairings {
            if self.has_free(p) != tracked {
                return Err(Error::UnbalancedConstraints {
                    stage: stage.into(),
                    detail: format!(
                        "free parameter {p:?} requires its constraint active with a tracked target (and vice versa)"
                    ),
                });
            }
        }
        let n_c = self.n_scalar_constraints();
        let n_free = self.free.len();
        let need = if with_arclength { n_c + 1 } else { n_c };
        if n_free != need {
            return Err(Error::UnbalancedConstraints {
                stage: stage.into(),
                detail: format!(
                    "{n_c} scalar constraints with {n_free} free parameters \
                     (need {need}{})",
                    if with_arclength { " including the arclength closure" } else { "" }
                ),
            });
        }
        Ok(())
    }
}

pub fn canonical_order(free: &[FreeParam]) -> Vec<FreeParam> {
    let mut out = Vec::new();
    for p in CANONICAL_PARAMS {
        if free.contains(&p) {
            out.push(p);
        }
    }
    out
}

/// Read a free parameter's current value from the orbit (targets for tracked
/// constraints are initialized from the orbit's monitors).
pub fn param_value(orbit: &RotatingOrbit, p: FreeParam) -> f64 {
    let mon = orbit.monitors();
    match p {
        FreeParam::Period => orbit.t_period,
        FreeParam::Amplitude => orbit.params.a,
        FreeParam::Xn0 => orbit.xn0,
        FreeParam::Energy => super::system::energy_expression_at_zero(orbit),
        FreeParam::Norm => mon.amplitude_norm,
        FreeParam::Ratio => mon.ratio,
        FreeParam::P1 => orbit.p1,
        FreeParam::P2 => orbit.p2,
    }
}
