//! Repeated questioning: watched-pot survival curves and Zeno dragging.

use serde::Serialize;

use crate::dynamics::{apply_unitary, Hamiltonian};
use crate::error::{Error, Result};
use crate::qcore::{c, CVector, DensityMatrix, Projector, PureState};
use crate::reduction::{pose_question, reduce_yes, yes_probability, NatureRng, ZERO_PROBABILITY};

/// Which question is posed at each step.
#[derive(Debug, Clone, PartialEq)]
pub enum QuestionPath {
    /// The same question every step.
    Constant(Projector),
    /// One question per step, `steps[k]` posed at step k + 1.
    Steps(Vec<Projector>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZenoSchedule {
    total_time: f64,
    n_measurements: usize,
    path: QuestionPath,
}

impl ZenoSchedule {
    pub fn constant(total_time: f64, n_measurements: usize, question: Projector) -> Result<Self> {
        Self::new(total_time, n_measurements, QuestionPath::Constant(question))
    }

    pub fn stepped(total_time: f64, steps: Vec<Projector>) -> Result<Self> {
        Self::new(total_time, steps.len(), QuestionPath::Steps(steps))
    }

    pub fn new(total_time: f64, n_measurements: usize, path: QuestionPath) -> Result<Self> {
        if n_measurements == 0 {
            return Err(Error::Parameter {
                name: "n_measurements",
                expected: ">= 1",
                value: 0.0,
            });
        }
        if !total_time.is_finite() || total_time < 0.0 {
            return Err(Error::Parameter {
                name: "total_time",
                expected: "finite and >= 0",
                value: total_time,
            });
        }
        if let QuestionPath::Steps(steps) = &path {
            if steps.len() != n_measurements {
                return Err(Error::Dimension {
                    expected: n_measurements,
                    found: steps.len(),
                });
            }
            let dim = steps[0].dim();
            if let Some(bad) = steps.iter().find(|p| p.dim() != dim) {
                return Err(Error::Dimension {
                    expected: dim,
                    found: bad.dim(),
                });
            }
        }
        Ok(Self {
            total_time,
            n_measurements,
            path,
        })
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn n_measurements(&self) -> usize {
        self.n_measurements
    }

    pub fn step_time(&self) -> f64 {
        self.total_time / self.n_measurements as f64
    }

    /// Question for step `k` in 1..=n.
    pub fn question(&self, k: usize) -> &Projector {
        match &self.path {
            QuestionPath::Constant(p) => p,
            QuestionPath::Steps(steps) => &steps[k - 1],
        }
    }

    fn dim(&self) -> usize {
        self.question(1).dim()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZenoResult {
    /// Probability that all n answers are Yes.
    pub survival_probability: f64,
    /// State conditioned on all Yes answers; `None` after extinction.
    #[serde(skip)]
    pub final_state: Option<DensityMatrix>,
    /// Conditional Yes-probability of each step.
    pub trace: Vec<f64>,
    /// Step (1-based) at which the Yes branch became impossible.
    pub extinct_at: Option<usize>,
}

/// Alternates evolution over T/n with conditional Yes-reduction, exactly.
pub fn run_zeno(s0: &DensityMatrix, h: &Hamiltonian, sched: &ZenoSchedule) -> Result<ZenoResult> {
    s0.check_dim(h.dim())?;
    s0.check_dim(sched.dim())?;
    if let QuestionPath::Constant(p) = &sched.path {
        let initial_yes = yes_probability(s0, p)?;
        if initial_yes < 1.0 - 1e-12 {
            log::warn!("initial state is not inside the question's range (Tr(P S0) = {initial_yes})");
        }
    }

    let u = h.spectrum().propagator(sched.step_time())?;
    let mut state = s0.clone();
    let mut survival = 1.0;
    let mut trace = Vec::with_capacity(sched.n_measurements);
    for k in 1..=sched.n_measurements {
        state = apply_unitary(&state, &u)?;
        let p = sched.question(k);
        let p_yes = yes_probability(&state, p)?;
        trace.push(p_yes);
        if p_yes < ZERO_PROBABILITY {
            return Ok(ZenoResult {
                survival_probability: 0.0,
                final_state: None,
                trace,
                extinct_at: Some(k),
            });
        }
        survival *= p_yes;
        state = reduce_yes(&state, p)?;
    }
    Ok(ZenoResult {
        survival_probability: survival,
        final_state: Some(state),
        trace,
        extinct_at: None,
    })
}

/// Rank-1 projectors along the great circle from `from` to `to`, one per step,
/// each advancing by θ/n; the last one is the target.
pub fn great_circle_path(from: &PureState, to: &PureState, n: usize) -> Result<Vec<Projector>> {
    if from.dim() != to.dim() {
        return Err(Error::Dimension {
            expected: from.dim(),
            found: to.dim(),
        });
    }
    let a = from.amplitudes();
    let overlap = a.dotc(to.amplitudes());
    // Align the global phase of the target so ⟨a|t⟩ is real and non-negative.
    let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { c(1.0, 0.0) };
    let t: CVector = to.amplitudes() * phase;
    let cos_theta = overlap.norm().min(1.0);
    let theta = cos_theta.acos();
    let perp = &t - a * c(cos_theta, 0.0);
    let perp_norm = perp.norm();

    (1..=n)
        .map(|k| {
            let angle = theta * k as f64 / n as f64;
            let v = if perp_norm < 1e-15 {
                a.clone()
            } else {
                a * c(angle.cos(), 0.0) + perp.unscale(perp_norm) * c(angle.sin(), 0.0)
            };
            Ok(Projector::from_state(&PureState::normalized(v)?, format!("path[{k}]")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DragResult {
    /// Tr(P_target · final_state), 0 after extinction.
    pub fidelity: f64,
    pub result: ZenoResult,
}

/// Drags `s0` from `from` towards `to` with n slowly rotating questions over `total_time`.
pub fn run_zeno_drag(
    s0: &DensityMatrix,
    h: &Hamiltonian,
    from: &PureState,
    to: &PureState,
    n: usize,
    total_time: f64,
) -> Result<DragResult> {
    let path = great_circle_path(from, to, n)?;
    let target = Projector::from_state(to, "target");
    let sched = ZenoSchedule::stepped(total_time, path)?;
    let result = run_zeno(s0, h, &sched)?;
    let fidelity = match &result.final_state {
        Some(s) => yes_probability(s, &target)?,
        None => 0.0,
    };
    Ok(DragResult { fidelity, result })
}

/// Survival for each n in `n_list`, sorted by n.
pub fn survival_curve(
    s0: &DensityMatrix,
    h: &Hamiltonian,
    total_time: f64,
    n_list: &[usize],
    p: &Projector,
) -> Result<Vec<(usize, f64)>> {
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.iter()
        .map(|&n| {
            let sched = ZenoSchedule::constant(total_time, n, p.clone())?;
            Ok((n, run_zeno(s0, h, &sched)?.survival_probability))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampledSurvival {
    pub trials: usize,
    pub survived: usize,
}

impl SampledSurvival {
    pub fn frequency(&self) -> f64 {
        self.survived as f64 / self.trials as f64
    }
}

/// Monte-Carlo cross-check of [`run_zeno`]: each trial samples every answer.
pub fn sample_survival(
    s0: &DensityMatrix,
    h: &Hamiltonian,
    sched: &ZenoSchedule,
    trials: usize,
    rng: &mut NatureRng,
) -> Result<SampledSurvival> {
    s0.check_dim(h.dim())?;
    let u = h.spectrum().propagator(sched.step_time())?;
    let mut survived = 0;
    for _ in 0..trials {
        let mut state = s0.clone();
        let mut alive = true;
        for k in 1..=sched.n_measurements {
            state = apply_unitary(&state, &u)?;
            let (event, next) = pose_question(&state, sched.question(k), rng, k as f64 * sched.step_time())?;
            if !event.outcome.is_yes() {
                alive = false;
                break;
            }
            state = next;
        }
        survived += usize::from(alive);
    }
    Ok(SampledSurvival { trials, survived })
}
