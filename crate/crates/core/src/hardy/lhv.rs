//! Exhaustive enumeration of deterministic local-hidden-variable assignments.

use serde::Serialize;

use super::{HardyInstance, Literal, SettingId, Sign};

/// Pre-existing outcomes for all four settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct LhvAssignment {
    values: [Sign; 4],
}

impl LhvAssignment {
    /// Values in the order L1, L2, R1, R2.
    pub fn new(values: [Sign; 4]) -> Self {
        Self { values }
    }

    /// All 16 assignments, L1 varying slowest.
    pub fn all() -> impl Iterator<Item = LhvAssignment> {
        (0..16u8).map(|bits| {
            let sign = |k: u8| if bits >> (3 - k) & 1 == 0 { Sign::Plus } else { Sign::Minus };
            LhvAssignment::new([sign(0), sign(1), sign(2), sign(3)])
        })
    }

    pub fn value(&self, id: SettingId) -> Sign {
        self.values[id.index()]
    }

    pub fn satisfies(&self, lit: Literal) -> bool {
        self.value(lit.setting) == lit.sign
    }
}

/// `premise ⇒ conclusion` on a deterministic assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Constraint {
    pub name: &'static str,
    pub premise: Literal,
    pub conclusion: Literal,
}

impl Constraint {
    pub fn holds_for(&self, a: &LhvAssignment) -> bool {
        !a.satisfies(self.premise) || a.satisfies(self.conclusion)
    }
}

/// C1: L1- ⇒ R2+, C2: R2+ ⇒ L2+, C3: L2+ ⇒ R1-.
pub fn hardy_constraints() -> [Constraint; 3] {
    use SettingId::*;
    use Sign::*;
    [
        Constraint {
            name: "C1",
            premise: Literal::new(L1, Minus),
            conclusion: Literal::new(R2, Plus),
        },
        Constraint {
            name: "C2",
            premise: Literal::new(R2, Plus),
            conclusion: Literal::new(L2, Plus),
        },
        Constraint {
            name: "C3",
            premise: Literal::new(L2, Plus),
            conclusion: Literal::new(R1, Minus),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentVerdict {
    pub assignment: LhvAssignment,
    /// One flag per constraint, in constraint order.
    pub satisfied: Vec<bool>,
    pub consistent: bool,
    /// v(L1) = - ∧ v(R1) = +
    pub supports_p4: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LhvReport {
    pub constraints: Vec<&'static str>,
    pub total: usize,
    pub consistent: usize,
    pub consistent_with_p4: usize,
    pub assignments: Vec<AssignmentVerdict>,
}

/// Enumerates under the constraints that the instance's certainty predictions
/// actually license: C_k is imposed only when prediction k holds within epsilon.
pub fn lhv_enumerate(inst: &HardyInstance) -> LhvReport {
    let report = inst.verify_predictions();
    let constraints: Vec<Constraint> = hardy_constraints()
        .into_iter()
        .zip(report.violations())
        .filter(|(_, v)| *v <= inst.epsilon)
        .map(|(c, _)| c)
        .collect();
    lhv_enumerate_with(&constraints)
}

pub fn lhv_enumerate_with(constraints: &[Constraint]) -> LhvReport {
    let p4 = [Literal::new(SettingId::L1, Sign::Minus), Literal::new(SettingId::R1, Sign::Plus)];
    let assignments: Vec<AssignmentVerdict> = LhvAssignment::all()
        .map(|assignment| {
            let satisfied: Vec<bool> = constraints.iter().map(|c| c.holds_for(&assignment)).collect();
            let consistent = satisfied.iter().all(|&s| s);
            AssignmentVerdict {
                assignment,
                satisfied,
                consistent,
                supports_p4: p4.iter().all(|&lit| assignment.satisfies(lit)),
            }
        })
        .collect();
    LhvReport {
        constraints: constraints.iter().map(|c| c.name).collect(),
        total: assignments.len(),
        consistent: assignments.iter().filter(|a| a.consistent).count(),
        consistent_with_p4: assignments.iter().filter(|a| a.consistent && a.supports_p4).count(),
        assignments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardy::HardyInstance;

    #[test]
    fn sixteen_distinct_assignments() {
        let all: std::collections::HashSet<_> = LhvAssignment::all().collect();
        assert_eq!(all.len(), 16);
    }

    #[test]
    fn canonical_has_no_supporting_assignment() {
        let report = lhv_enumerate(&HardyInstance::canonical());
        assert_eq!(report.constraints, vec!["C1", "C2", "C3"]);
        assert_eq!(report.total, 16);
        assert_eq!(report.consistent_with_p4, 0);
    }

    #[test]
    fn dropping_c3_admits_support() {
        let [c1, c2, _] = hardy_constraints();
        assert!(lhv_enumerate_with(&[c1, c2]).consistent_with_p4 >= 1);
    }

    #[test]
    fn all_plus_is_vacuously_consistent() {
        let report = lhv_enumerate_with(&hardy_constraints());
        let all_plus = report
            .assignments
            .iter()
            .find(|v| v.assignment == LhvAssignment::new([Sign::Plus; 4]))
            .unwrap();
        assert_eq!(all_plus.satisfied, vec![true, true, false]);
        assert!(!all_plus.supports_p4);
    }
}
