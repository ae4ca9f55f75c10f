//! Derivative-free search over the symmetric Hardy family: a uniform grid
//! followed by Brent refinement (parabolic interpolation with golden-section
//! fallback) around the best grid point.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use super::{canonical_theta, HardyInstance};
use crate::error::{Error, Result};

/// Certainty predictions must hold to this tolerance for a candidate to count.
const CERTAINTY_TOL: f64 = 1e-10;
const MAX_GRID: usize = 64;
const GOLDEN: f64 = 0.381_966_011_250_105_1; // (3 - √5)/2

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyOptimum {
    #[serde(skip)]
    pub instance: HardyInstance,
    pub theta: f64,
    pub p4_value: f64,
    pub evaluations: usize,
}

/// Fourth-prediction value of family member θ, or -1 where the member is
/// degenerate or a certainty fails.
fn objective(theta: f64) -> f64 {
    match HardyInstance::family(theta) {
        Ok(inst) => {
            let report = inst.verify_predictions();
            if report.certainties_hold(CERTAINTY_TOL) {
                report.p4_value
            } else {
                -1.0
            }
        }
        Err(_) => -1.0,
    }
}

struct Counter {
    used: usize,
    budget: usize,
}

impl Counter {
    fn eval(&mut self, theta: f64) -> Option<f64> {
        if self.used >= self.budget {
            return None;
        }
        self.used += 1;
        Some(objective(theta))
    }
}

/// Searches from the canonical angle.
pub fn optimize_hardy(budget: usize) -> Result<HardyOptimum> {
    optimize_hardy_from(canonical_theta(), budget)
}

/// Searches the family θ ∈ (0, π/2) with at most `budget` objective evaluations,
/// starting from `start`.
pub fn optimize_hardy_from(start: f64, budget: usize) -> Result<HardyOptimum> {
    if budget == 0 {
        return Err(Error::Parameter {
            name: "search budget",
            expected: "> 0",
            value: 0.0,
        });
    }
    let mut counter = Counter { used: 0, budget };
    let mut best = (start, counter.eval(start).unwrap_or(-1.0));

    let remaining = budget - counter.used;
    let grid = (remaining / 2).min(MAX_GRID);
    let spacing = FRAC_PI_2 / grid.max(1) as f64;
    for i in 0..grid {
        let theta = (i as f64 + 0.5) * spacing;
        if let Some(v) = counter.eval(theta) {
            if v > best.1 {
                best = (theta, v);
            }
        }
    }

    if counter.used < budget {
        let lo = (best.0 - spacing).max(0.0);
        let hi = (best.0 + spacing).min(FRAC_PI_2);
        if let Some((theta, v)) = brent_maximize(&mut counter, lo, hi, 1e-12) {
            if v > best.1 {
                best = (theta, v);
            }
        }
    }

    let (theta, p4_value) = best;
    if !(p4_value > super::HARDY_EPSILON) {
        return Err(Error::SearchFailure(format!(
            "no Hardy-valid family member found in {} evaluations",
            counter.used
        )));
    }
    Ok(HardyOptimum {
        instance: HardyInstance::family(theta)?,
        theta,
        p4_value,
        evaluations: counter.used,
    })
}

/// Brent's method on -f over [a, b]; stops on tolerance or exhausted budget.
fn brent_maximize(counter: &mut Counter, mut a: f64, mut b: f64, tol: f64) -> Option<(f64, f64)> {
    let mut x = a + GOLDEN * (b - a);
    let mut fx = -counter.eval(x)?;
    let (mut w, mut v) = (x, x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    loop {
        let m = 0.5 * (a + b);
        let tol1 = tol * x.abs() + 1e-15;
        let tol2 = 2.0 * tol1;
        if (x - m).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if x < m { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLDEN * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let Some(fu) = counter.eval(u).map(|f| -f) else { break };

        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            (v, fv) = (w, fw);
            (w, fw) = (x, fx);
            (x, fx) = (u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv) = (w, fw);
                (w, fw) = (u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Some((x, -fx))
}
