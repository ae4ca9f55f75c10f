//! Counterfactual engine for the assertions A(R1) and A(R2).
//!
//! A(Rk): "if (Rk, L1) is performed and L1- appears in L, then had L2 been
//! chosen instead of L1, L2+ would have appeared". The engine reasons only from
//! a [`PredictionReport`]: each vanishing joint probability Pr(x ∧ y) ≤ ε becomes
//! the certainty rule x ⇒ ¬y (both directions), and a positive Pr(L1- ∧ R1+)
//! marks that pair as actually occurring sometimes. Outcomes in R are fixed
//! before T, so they survive a counterfactual change of the later choice in L.

use serde::Serialize;

use super::{HardyInstance, Literal, PredictionReport, Right, SettingId, Sign};
use crate::error::{Error, Result};

/// R1+ sometimes appears with L1-, yet A(R1) together with prediction 3 would force R1-.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    /// Outcome in R fixed before T, e.g. `R1+`.
    pub fixed: String,
    /// Pr(L1- ∧ fixed), strictly positive.
    pub support: f64,
    /// What the assertion claims for the counterfactual choice, `L2+`.
    pub asserted: String,
    /// What the certainty rule then demands in R, e.g. `R1-`.
    pub forced: String,
    /// Number of the prediction supplying the rule.
    pub prediction: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AssertionVerdict {
    Holds { chain: Vec<String> },
    Contradiction { chain: Vec<String>, witness: Witness },
    Undetermined { chain: Vec<String> },
}

impl AssertionVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            AssertionVerdict::Holds { .. } => "HOLDS",
            AssertionVerdict::Contradiction { .. } => "CONTRADICTION",
            AssertionVerdict::Undetermined { .. } => "UNDETERMINED",
        }
    }

    pub fn chain(&self) -> &[String] {
        match self {
            AssertionVerdict::Holds { chain }
            | AssertionVerdict::Contradiction { chain, .. }
            | AssertionVerdict::Undetermined { chain } => chain,
        }
    }
}

struct Knowledge {
    /// (x, y, prediction number, probability) with Pr(x ∧ y) ≤ ε.
    exclusions: Vec<(Literal, Literal, usize, f64)>,
    /// (x, y, probability) with Pr(x ∧ y) > ε.
    occurrences: Vec<(Literal, Literal, f64)>,
}

impl Knowledge {
    fn from_report(report: &PredictionReport, epsilon: f64) -> Self {
        use SettingId::*;
        use Sign::*;
        let pairs = [
            (Literal::new(L1, Minus), Literal::new(R2, Minus), report.p1_violation),
            (Literal::new(L2, Minus), Literal::new(R2, Plus), report.p2_violation),
            (Literal::new(L2, Plus), Literal::new(R1, Plus), report.p3_violation),
        ];
        let exclusions = pairs
            .iter()
            .enumerate()
            .filter(|(_, (_, _, p))| *p <= epsilon)
            .map(|(k, &(x, y, p))| (x, y, k + 1, p))
            .collect();
        let occurrences = if report.p4_value > epsilon {
            vec![(Literal::new(L1, Minus), Literal::new(R1, Plus), report.p4_value)]
        } else {
            Vec::new()
        };
        Self { exclusions, occurrences }
    }

    /// The prediction ruling out x ∧ y, if any.
    fn excludes(&self, x: Literal, y: Literal) -> Option<(usize, f64)> {
        self.exclusions
            .iter()
            .find(|(a, b, _, _)| (*a == x && *b == y) || (*a == y && *b == x))
            .map(|&(_, _, k, p)| (k, p))
    }

    fn occurs(&self, x: Literal, y: Literal) -> Option<f64> {
        self.occurrences
            .iter()
            .find(|(a, b, _)| (*a == x && *b == y) || (*a == y && *b == x))
            .map(|&(_, _, p)| p)
    }
}

/// Decides A(`which`) from the prediction report alone.
pub fn assess_assertion(report: &PredictionReport, epsilon: f64, which: Right) -> AssertionVerdict {
    let knowledge = Knowledge::from_report(report, epsilon);
    let r_setting = SettingId::from(which);
    let observed = Literal::new(SettingId::L1, Sign::Minus);
    let asserted = Literal::new(SettingId::L2, Sign::Plus);
    let mut chain = vec![format!(
        "actual: ({r_setting}, L1) performed, {observed} appears in L after T"
    )];

    let mut candidates = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        let r = Literal::new(r_setting, sign);
        match knowledge.excludes(observed, r) {
            Some((k, p)) => chain.push(format!("prediction {k}: Pr({observed}, {r}) = {p:.3e}, so {r} did not appear in R")),
            None => candidates.push(r),
        }
    }
    if candidates.is_empty() {
        chain.push(format!("no outcome of {r_setting} is compatible with {observed}"));
        return AssertionVerdict::Undetermined { chain };
    }

    let mut all_force_assertion = true;
    for &r in &candidates {
        chain.push(format!(
            "no backward-in-time influence: {r} (if it appeared) was fixed and settled in R before T, whichever way the later free choice in L goes"
        ));
        chain.push(format!("counterfactual: L2 chosen instead of L1 while {r} stays fixed"));

        if let Some((k, _)) = knowledge.excludes(asserted, r) {
            if let Some(support) = knowledge.occurs(observed, r) {
                chain.push(format!("prediction 4: Pr({observed}, {r}) = {support:.6}, so {r} sometimes appears with {observed}"));
                chain.push(format!(
                    "A({r_setting}) demands {asserted}; prediction {k} then forces {} in R, contradicting the fixed {r}",
                    r.negate()
                ));
                return AssertionVerdict::Contradiction {
                    chain,
                    witness: Witness {
                        fixed: r.to_string(),
                        support,
                        asserted: asserted.to_string(),
                        forced: r.negate().to_string(),
                        prediction: k,
                    },
                };
            }
            all_force_assertion = false;
            continue;
        }
        match knowledge.excludes(asserted.negate(), r) {
            Some((k, _)) => chain.push(format!("prediction {k}: with {r} fixed, L2 must yield {asserted}")),
            None => {
                chain.push(format!("nothing certain about L2 given {r}"));
                all_force_assertion = false;
            }
        }
    }

    if all_force_assertion {
        chain.push(format!("A({r_setting}) holds"));
        AssertionVerdict::Holds { chain }
    } else {
        AssertionVerdict::Undetermined { chain }
    }
}

/// Runs the engine on a Hardy-valid instance.
pub fn check_assertion(inst: &HardyInstance, which: Right) -> Result<AssertionVerdict> {
    let report = inst.verify_predictions();
    if !report.is_hardy_valid(inst.epsilon) {
        return Err(Error::Precondition(format!(
            "instance is not Hardy-valid (violations {:?}, p4 {:e})",
            report.violations(),
            report.p4_value
        )));
    }
    Ok(assess_assertion(&report, inst.epsilon, which))
}
