//! Hardy nonlocality: two-qubit instances with three certain predictions and one
//! "sometimes", local-hidden-variable enumeration and the counterfactual engine.
//!
//! Conventions: L1/R1 are the settings of the fourth ("sometimes") prediction,
//! L2/R2 the settings of the certainty chain. The four predictions are
//!
//! 1. (L1, R2): L1- ⇒ R2+, i.e. Pr(L1-, R2-) = 0
//! 2. (L2, R2): R2+ ⇒ L2+, i.e. Pr(L2-, R2+) = 0
//! 3. (L2, R1): L2+ ⇒ R1-, i.e. Pr(L2+, R1+) = 0
//! 4. (L1, R1): Pr(L1-, R1+) > 0
//!
//! # The instance family
//!
//! Take R2 and L2 in the computational basis (R2+ = L2+ = |0⟩). Prediction 2
//! forbids the |10⟩ component, so ψ = a|00⟩ + b|01⟩ + c|11⟩. Prediction 3 then
//! fixes R1+ ∝ (b̄, -ā), and prediction 1 fixes L1- ∝ (c̄, -b̄). Contracting gives
//!
//! ```text
//! Pr(L1-, R1+) = |abc|² / ((|a|² + |b|²)(|b|² + |c|²))
//! ```
//!
//! which is positive iff a, b, c are all non-zero. The symmetric slice a = c =
//! sin θ/√2, b = cos θ is the one-parameter family searched by the optimizer;
//! with x = sin²θ/2 the value is x²(1 - 2x)/(1 - x)², maximal at
//! x = (3 - √5)/2 where it equals (5√5 - 11)/2 ≈ 0.0901699.

mod lhv;
mod logic;
mod optimize;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{c, tensor, CMatrix, CVector, Projector, PureState, C64};

pub use lhv::{hardy_constraints, lhv_enumerate, lhv_enumerate_with, AssignmentVerdict, Constraint, LhvAssignment, LhvReport};
pub use logic::{assess_assertion, check_assertion, AssertionVerdict, Witness};
pub use optimize::{optimize_hardy, optimize_hardy_from, HardyOptimum};

/// Default zero-probability tolerance for the certainty predictions.
pub const HARDY_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SettingId {
    L1,
    L2,
    R1,
    R2,
}

impl SettingId {
    pub const ALL: [SettingId; 4] = [SettingId::L1, SettingId::L2, SettingId::R1, SettingId::R2];

    pub fn side(self) -> Side {
        match self {
            SettingId::L1 | SettingId::L2 => Side::L,
            SettingId::R1 | SettingId::R2 => Side::R,
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SettingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Left {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Right {
    R1,
    R2,
}

impl From<Left> for SettingId {
    fn from(l: Left) -> Self {
        match l {
            Left::L1 => SettingId::L1,
            Left::L2 => SettingId::L2,
        }
    }
}

impl From<Right> for SettingId {
    fn from(r: Right) -> Self {
        match r {
            Right::R1 => SettingId::R1,
            Right::R2 => SettingId::R2,
        }
    }
}

impl std::str::FromStr for Right {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "R1" | "r1" => Ok(Right::R1),
            "R2" | "r2" => Ok(Right::R2),
            other => Err(Error::field("which", format!("expected R1 or R2, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// A setting together with one of its outcomes, e.g. `L1-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Literal {
    pub setting: SettingId,
    pub sign: Sign,
}

impl Literal {
    pub fn new(setting: impl Into<SettingId>, sign: Sign) -> Self {
        Self {
            setting: setting.into(),
            sign,
        }
    }

    pub fn negate(self) -> Self {
        Self {
            setting: self.setting,
            sign: self.sign.flip(),
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.setting, self.sign)
    }
}

/// One binary measurement on a single qubit; `minus` is the complement of `plus`.
#[derive(Debug, Clone, PartialEq)]
pub struct Setting {
    pub id: SettingId,
    plus: Projector,
}

impl Setting {
    pub fn new(id: SettingId, plus_vector: &PureState) -> Result<Self> {
        if plus_vector.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: plus_vector.dim(),
            });
        }
        Ok(Self {
            id,
            plus: Projector::from_state(plus_vector, format!("{id}+")),
        })
    }

    pub fn projector(&self, sign: Sign) -> Projector {
        match sign {
            Sign::Plus => self.plus.clone(),
            Sign::Minus => self.plus.complement().with_label(format!("{}-", self.id)),
        }
    }

    fn conjugate_by(&self, u: &CMatrix) -> Setting {
        Setting {
            id: self.id,
            plus: self.plus.conjugate_by(u),
        }
    }
}

/// Which region is earlier than the reference time T. Labels only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timing {
    pub earlier: Side,
    pub later: Side,
}

impl Default for Timing {
    fn default() -> Self {
        Self {
            earlier: Side::R,
            later: Side::L,
        }
    }
}

/// Two-qubit state (L ⊗ R) with the four settings L1, L2, R1, R2.
#[derive(Debug, Clone, PartialEq)]
pub struct HardyInstance {
    state: PureState,
    settings: [Setting; 4],
    pub epsilon: f64,
    pub timing: Timing,
}

impl HardyInstance {
    /// Builds an instance from a state and the four "+" vectors in the order L1, L2, R1, R2.
    pub fn new(state: PureState, plus_vectors: [&PureState; 4], epsilon: f64) -> Result<Self> {
        if state.dim() != 4 {
            return Err(Error::Dimension {
                expected: 4,
                found: state.dim(),
            });
        }
        let settings = [
            Setting::new(SettingId::L1, plus_vectors[0])?,
            Setting::new(SettingId::L2, plus_vectors[1])?,
            Setting::new(SettingId::R1, plus_vectors[2])?,
            Setting::new(SettingId::R2, plus_vectors[3])?,
        ];
        Ok(Self {
            state,
            settings,
            epsilon,
            timing: Timing::default(),
        })
    }

    /// ψ ∝ a|00⟩ + b|01⟩ + c|11⟩ with settings solving predictions 1-3 exactly.
    pub fn from_amplitudes(a: C64, b: C64, cc: C64) -> Result<Self> {
        let zero = c(0.0, 0.0);
        let state = PureState::normalized(CVector::from_vec(vec![a, b, zero, cc]))?;
        let [a, b, _, cc] = [state.amplitudes()[0], state.amplitudes()[1], zero, state.amplitudes()[3]];
        let ket0 = PureState::basis(2, 0);
        let r1_plus = PureState::normalized(CVector::from_vec(vec![b.conj(), -a.conj()]))?;
        let l1_minus = PureState::normalized(CVector::from_vec(vec![cc.conj(), -b.conj()]))?;
        let l1_plus = orthogonal(&l1_minus);
        Self::new(state, [&l1_plus, &ket0, &r1_plus, &ket0], HARDY_EPSILON)
    }

    /// Symmetric family a = c = sin θ/√2, b = cos θ.
    pub fn family(theta: f64) -> Result<Self> {
        let s = theta.sin() * std::f64::consts::FRAC_1_SQRT_2;
        Self::from_amplitudes(c(s, 0.0), c(theta.cos(), 0.0), c(s, 0.0))
    }

    /// The family member with the largest fourth-prediction probability.
    pub fn canonical() -> Self {
        Self::family(canonical_theta()).expect("canonical angle lies inside the family")
    }

    /// |0⟩⊗|0⟩ with every setting in the computational basis: no paradox.
    pub fn product_z() -> Self {
        let k0 = PureState::basis(2, 0);
        Self::new(k0.tensor(&k0), [&k0, &k0, &k0, &k0], HARDY_EPSILON).expect("valid product instance")
    }

    /// Random member of the general (non-symmetric) family, dressed with random
    /// local unitaries on each side.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut amp = || {
            let r = 0.1 + 0.9 * rng.random::<f64>();
            C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>())
        };
        let (a, b, cc) = (amp(), amp(), amp());
        let base = Self::from_amplitudes(a, b, cc).expect("non-zero amplitudes");
        let ul = random_unitary(rng);
        let ur = random_unitary(rng);
        base.with_local_unitaries(&ul, &ur).expect("2x2 unitaries")
    }

    /// Applies U_L ⊗ U_R to the state and conjugates every setting accordingly;
    /// all joint probabilities are unchanged.
    pub fn with_local_unitaries(&self, ul: &CMatrix, ur: &CMatrix) -> Result<Self> {
        let state = self.state.apply(&tensor(ul, ur))?;
        let settings = self.settings.clone().map(|s| match s.id.side() {
            Side::L => s.conjugate_by(ul),
            Side::R => s.conjugate_by(ur),
        });
        Ok(Self {
            state,
            settings,
            epsilon: self.epsilon,
            timing: self.timing,
        })
    }

    /// Rotates one setting's "+" direction by `angle` radians (real rotation).
    pub fn with_rotated_setting(&self, id: SettingId, angle: f64) -> Self {
        let (s, co) = angle.sin_cos();
        let rot = CMatrix::from_row_slice(2, 2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)]);
        let mut out = self.clone();
        out.settings[id.index()] = self.settings[id.index()].conjugate_by(&rot);
        out
    }

    pub fn state(&self) -> &PureState {
        &self.state
    }

    pub fn setting(&self, id: SettingId) -> &Setting {
        &self.settings[id.index()]
    }

    /// Pr(l-outcome ∧ r-outcome) = ⟨ψ|Π_L ⊗ Π_R|ψ⟩.
    pub fn joint_probability(&self, l: Left, l_sign: Sign, r: Right, r_sign: Sign) -> f64 {
        let pl = self.setting(l.into()).projector(l_sign);
        let pr = self.setting(r.into()).projector(r_sign);
        self.state
            .expectation(&tensor(pl.entries(), pr.entries()))
            .re
            .clamp(0.0, 1.0)
    }

    pub fn literal_probability(&self, x: Literal, y: Literal) -> Result<f64> {
        let (l, r) = match (x.setting.side(), y.setting.side()) {
            (Side::L, Side::R) => (x, y),
            (Side::R, Side::L) => (y, x),
            _ => return Err(Error::Precondition(format!("{x} and {y} are on the same side"))),
        };
        let left = if l.setting == SettingId::L1 { Left::L1 } else { Left::L2 };
        let right = if r.setting == SettingId::R1 { Right::R1 } else { Right::R2 };
        Ok(self.joint_probability(left, l.sign, right, r.sign))
    }

    pub fn verify_predictions(&self) -> PredictionReport {
        verify_predictions(self)
    }

    pub fn is_hardy_valid(&self) -> bool {
        verify_predictions(self).is_hardy_valid(self.epsilon)
    }
}

/// sin²θ = 3 - √5, the maximizer of the symmetric family.
pub fn canonical_theta() -> f64 {
    (3.0 - 5f64.sqrt()).sqrt().asin()
}

fn orthogonal(v: &PureState) -> PureState {
    let a = v.amplitudes();
    PureState::normalized(CVector::from_vec(vec![-a[1].conj(), a[0].conj()])).expect("unit input")
}

fn random_unitary<R: Rng + ?Sized>(rng: &mut R) -> CMatrix {
    let tau = std::f64::consts::TAU;
    let (alpha, beta, phi) = (tau * rng.random::<f64>(), tau * rng.random::<f64>(), tau * rng.random::<f64>());
    let (s, co) = phi.sin_cos();
    CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::from_polar(co, alpha),
            C64::from_polar(s, beta),
            -C64::from_polar(s, -beta),
            C64::from_polar(co, -alpha),
        ],
    )
}

/// Violation probabilities of predictions 1-3 and the value of prediction 4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    /// Pr(L1- ∧ R2-)
    pub p1_violation: f64,
    /// Pr(R2+ ∧ L2-)
    pub p2_violation: f64,
    /// Pr(L2+ ∧ R1+)
    pub p3_violation: f64,
    /// Pr(L1- ∧ R1+)
    pub p4_value: f64,
}

impl PredictionReport {
    pub fn violations(&self) -> [f64; 3] {
        [self.p1_violation, self.p2_violation, self.p3_violation]
    }

    pub fn certainties_hold(&self, epsilon: f64) -> bool {
        self.violations().iter().all(|&v| v <= epsilon)
    }

    pub fn is_hardy_valid(&self, epsilon: f64) -> bool {
        self.certainties_hold(epsilon) && self.p4_value > epsilon
    }
}

pub fn joint_probability(inst: &HardyInstance, l: Left, l_sign: Sign, r: Right, r_sign: Sign) -> f64 {
    inst.joint_probability(l, l_sign, r, r_sign)
}

pub fn verify_predictions(inst: &HardyInstance) -> PredictionReport {
    use Sign::*;
    PredictionReport {
        p1_violation: inst.joint_probability(Left::L1, Minus, Right::R2, Minus),
        p2_violation: inst.joint_probability(Left::L2, Minus, Right::R2, Plus),
        p3_violation: inst.joint_probability(Left::L2, Plus, Right::R1, Plus),
        p4_value: inst.joint_probability(Left::L1, Minus, Right::R1, Plus),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Sign::*;

    #[test]
    fn outcome_probabilities_sum_to_one() {
        let inst = HardyInstance::canonical();
        for l in [Left::L1, Left::L2] {
            for r in [Right::R1, Right::R2] {
                let total: f64 = [(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)]
                    .iter()
                    .map(|&(a, b)| inst.joint_probability(l, a, r, b))
                    .sum();
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn product_state_z_basis() {
        let inst = HardyInstance::product_z();
        assert!((inst.joint_probability(Left::L1, Plus, Right::R1, Plus) - 1.0).abs() < 1e-15);
        let report = inst.verify_predictions();
        assert_eq!(report.p4_value, 0.0);
        assert!(!inst.is_hardy_valid());
    }

    #[test]
    fn canonical_is_hardy_valid() {
        let report = HardyInstance::canonical().verify_predictions();
        assert!(report.certainties_hold(1e-12), "{report:?}");
        assert!((report.p4_value - 0.090_169_943_749_474_5).abs() < 1e-12);
    }

    #[test]
    fn perturbed_setting_breaks_a_certainty() {
        let report = HardyInstance::canonical()
            .with_rotated_setting(SettingId::R1, 0.1)
            .verify_predictions();
        assert!(report.violations().iter().any(|&v| v > 1e-6), "{report:?}");
    }

    #[test]
    fn degenerate_amplitudes_lose_the_paradox() {
        let inst = HardyInstance::from_amplitudes(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let report = inst.verify_predictions();
        assert!(report.certainties_hold(1e-12));
        assert!(report.p4_value < 1e-20);
        assert!(HardyInstance::from_amplitudes(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn literal_probability_rejects_same_side() {
        let inst = HardyInstance::canonical();
        let a = Literal::new(SettingId::L1, Plus);
        assert!(inst.literal_probability(a, Literal::new(SettingId::L2, Plus)).is_err());
        let r = Literal::new(SettingId::R1, Plus);
        assert_eq!(
            inst.literal_probability(a, r).unwrap(),
            inst.literal_probability(r, a).unwrap()
        );
    }
}
