//! Attention as question selection: a repertoire of plans on a brain factor,
//! argmax selection of the best question, local-maximum triggering, and
//! effort-controlled re-posing through one serial event channel.

mod dual;
mod stream;

use serde::{Deserialize, Serialize};

use crate::dynamics::{apply_unitary, dephase, Hamiltonian, PointerBasis, Spectrum};
use crate::error::{Error, Result};
use crate::qcore::{DensityMatrix, Projector, PureState, SubsystemLayout};
use crate::reduction::{yes_probability, EventRecord};

pub use dual::{dual_task, force_proxy};
pub use stream::run_stream;

/// One plan of action: a projector on the brain factor and its lift to the full space.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub label: String,
    pub local: Projector,
    pub lifted: Projector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Repertoire {
    layout: SubsystemLayout,
    factor: usize,
    plans: Vec<Plan>,
}

impl Repertoire {
    /// Plans act on factor `factor` of `layout`; labels come from the projectors.
    pub fn new(layout: &SubsystemLayout, factor: usize, local: Vec<Projector>) -> Result<Self> {
        if local.is_empty() {
            return Err(Error::EmptyRepertoire);
        }
        let plans = local
            .into_iter()
            .map(|p| {
                let lifted = p.lift(layout, factor)?;
                Ok(Plan {
                    label: p.label().to_string(),
                    local: p,
                    lifted,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            layout: layout.clone(),
            factor,
            plans,
        })
    }

    /// Rank-1 plans |v⟩⟨v| from brain-factor vectors.
    pub fn from_vectors(layout: &SubsystemLayout, factor: usize, vectors: &[PureState], labels: &[String]) -> Result<Self> {
        if labels.len() != vectors.len() {
            return Err(Error::Dimension {
                expected: vectors.len(),
                found: labels.len(),
            });
        }
        let local = vectors
            .iter()
            .zip(labels)
            .map(|(v, l)| Projector::from_state(v, l.clone()))
            .collect();
        Self::new(layout, factor, local)
    }

    /// Computational-basis plans `plan0`, `plan1`, ... on the brain factor.
    pub fn computational(layout: &SubsystemLayout, factor: usize) -> Result<Self> {
        let d = *layout.dims().get(factor).ok_or(Error::Dimension {
            expected: layout.len(),
            found: factor,
        })?;
        let local = (0..d)
            .map(|k| Projector::from_state(&PureState::basis(d, k), format!("plan{k}")))
            .collect();
        Self::new(layout, factor, local)
    }

    pub fn plans(&self) -> &[Plan] {
        &self.plans
    }

    pub fn plan(&self, index: usize) -> &Plan {
        &self.plans[index]
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    pub fn factor(&self) -> usize {
        self.factor
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }
}

/// Effort and timing parameters. Times are in seconds of simulated time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttentionPolicy {
    /// Re-posing rate (events per unit time) while consenting.
    pub effort_rate: f64,
    /// How long a Yes-answered plan keeps being re-posed.
    pub consent_window: f64,
    /// Samples used to detect a local maximum; odd and at least 3.
    pub trigger_window: usize,
    /// Polling interval for Tr(P·S(t)).
    pub sample_dt: f64,
    /// Pose the best question once at t = 0 before polling starts.
    pub consent_at_start: bool,
}

impl Default for AttentionPolicy {
    fn default() -> Self {
        Self {
            effort_rate: 50.0,
            consent_window: 0.2,
            trigger_window: 3,
            sample_dt: 0.005,
            consent_at_start: true,
        }
    }
}

impl AttentionPolicy {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("effort_rate", self.effort_rate),
            ("consent_window", self.consent_window),
            ("sample_dt", self.sample_dt),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Parameter {
                    name,
                    expected: "finite and > 0",
                    value,
                });
            }
        }
        if self.trigger_window < 3 || self.trigger_window.is_multiple_of(2) {
            return Err(Error::Parameter {
                name: "trigger_window",
                expected: "odd and >= 3",
                value: self.trigger_window as f64,
            });
        }
        Ok(())
    }

    /// Re-posings that fit in one consent window at `effort_rate`.
    pub fn reposes_per_window(&self) -> usize {
        (self.effort_rate * self.consent_window + 1e-9).floor() as usize
    }
}

/// Pointer basis of the environment plus the dephasing applied at every poll.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub basis: PointerBasis,
    pub strength: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub value: f64,
}

/// The plan maximizing Tr(P·S); ties go to the lowest index.
pub fn select_question(s: &DensityMatrix, rep: &Repertoire) -> Result<Selection> {
    if rep.is_empty() {
        return Err(Error::EmptyRepertoire);
    }
    let mut best: Option<Selection> = None;
    for (index, plan) in rep.plans.iter().enumerate() {
        let value = yes_probability(s, &plan.lifted)?;
        if best.is_none_or(|b| value > b.value) {
            best = Some(Selection { index, value });
        }
    }
    Ok(best.expect("non-empty repertoire"))
}

/// True iff the centre sample is a strict local maximum: no smaller than any
/// sample in the window and strictly above both endpoints. Plateaus never trigger.
pub fn detect_local_max(samples: &[f64]) -> bool {
    let n = samples.len();
    if n < 3 || n.is_multiple_of(2) {
        return false;
    }
    let centre = samples[n / 2];
    samples.iter().all(|&x| centre >= x) && centre > samples[0] && centre > samples[n - 1]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OccupancySample {
    pub t: f64,
    pub task: usize,
    pub plan: usize,
    pub value: f64,
}

/// One consent phase: a Yes-answered plan re-posed at the effort rate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsentEpisode {
    pub task: usize,
    pub plan: usize,
    pub label: String,
    pub start: f64,
    pub reposes: usize,
    /// Re-posings actually answered Yes before the first No.
    pub answered_yes: usize,
    /// Exact probability that every re-posing in the window is answered Yes.
    pub all_yes_probability: f64,
    pub completed: bool,
}

/// Queue accounting for one task on the serial channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskStats {
    pub name: String,
    pub events: usize,
    /// Events per unit time over the run.
    pub achieved_rate: f64,
    pub mean_wait: f64,
    pub max_wait: f64,
    pub mean_occupancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamTrace {
    pub events: Vec<EventRecord>,
    /// Task index of each event.
    pub event_tasks: Vec<usize>,
    pub occupancy: Vec<OccupancySample>,
    pub episodes: Vec<ConsentEpisode>,
    pub tasks: Vec<TaskStats>,
    pub final_state: DensityMatrix,
    /// First poll time at which every plan had vanishing probability.
    pub stalled_at: Option<f64>,
    pub duration: f64,
}

impl StreamTrace {
    /// Mean occupancy of `task` over samples with t in (t0, t1].
    pub fn mean_occupancy(&self, task: usize, t0: f64, t1: f64) -> Option<f64> {
        let values: Vec<f64> = self
            .occupancy
            .iter()
            .filter(|s| s.task == task && s.t > t0 + 1e-12 && s.t <= t1 + 1e-12)
            .map(|s| s.value)
            .collect();
        (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
    }

    pub fn task(&self, name: &str) -> Option<&TaskStats> {
        self.tasks.iter().find(|t| t.name == name)
    }

    /// Occupancy series as CSV columns t, task, plan, value.
    pub fn write_occupancy_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "task", "plan", "value"])?;
        for s in &self.occupancy {
            w.write_record([s.t.to_string(), s.task.to_string(), s.plan.to_string(), s.value.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Piecewise-constant evolution plus per-poll dephasing.
pub(crate) struct Propagation<'a> {
    spectrum: Spectrum,
    env: Option<&'a Environment>,
}

impl<'a> Propagation<'a> {
    pub(crate) fn new(h: &Hamiltonian, env: Option<&'a Environment>) -> Self {
        Self {
            spectrum: h.spectrum(),
            env,
        }
    }

    pub(crate) fn evolve(&self, s: &DensityMatrix, dt: f64) -> Result<DensityMatrix> {
        if dt <= 0.0 {
            return Ok(s.clone());
        }
        apply_unitary(s, &self.spectrum.propagator(dt)?)
    }

    pub(crate) fn decohere(&self, s: &DensityMatrix) -> Result<DensityMatrix> {
        match self.env {
            Some(env) if env.strength > 0.0 => dephase(s, &env.basis, env.strength),
            _ => Ok(s.clone()),
        }
    }
}

pub(crate) fn check_setup(s0: &DensityMatrix, h: &Hamiltonian, rep: &Repertoire, env: Option<&Environment>) -> Result<()> {
    s0.check_dim(h.dim())?;
    s0.check_dim(rep.dim())?;
    if let Some(env) = env {
        s0.check_dim(env.basis.dim())?;
        if !(0.0..=1.0).contains(&env.strength) {
            return Err(Error::Parameter {
                name: "dephasing strength",
                expected: "in [0, 1]",
                value: env.strength,
            });
        }
    }
    Ok(())
}

pub(crate) const TIME_EPS: f64 = 1e-12;
