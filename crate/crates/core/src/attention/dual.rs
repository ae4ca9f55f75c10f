use super::{
    check_setup, select_question, AttentionPolicy, Environment, OccupancySample, Propagation, Repertoire,
    StreamTrace, TaskStats, TIME_EPS,
};
use crate::dynamics::Hamiltonian;
use crate::error::{Error, Result};
use crate::qcore::DensityMatrix;
use crate::reduction::{pose_question, yes_probability, EventRecord, NatureRng};

struct Task<'a> {
    name: &'static str,
    rep: Option<&'a Repertoire>,
    consented: Option<usize>,
    consent_until: f64,
    focus: usize,
    next_due: f64,
    waits: Vec<f64>,
    events: usize,
    occupancy_sum: f64,
    occupancy_n: usize,
}

/// Two tasks sharing one serial event channel of capacity `shared_rate`.
///
/// Channel slots fall at k/shared_rate for k = 0, 1, ... below `total_time`;
/// each slot serves at most one task, round-robin among tasks whose next
/// re-posing is due (each task asks at `effort_rate`). A served task re-poses
/// its consented plan while its consent window lasts, otherwise it selects
/// and poses its best plan afresh. `task_b = None` is an idle task that never
/// asks for the channel. Task names are `A` and `B`.
#[allow(clippy::too_many_arguments)]
pub fn dual_task(
    s0: &DensityMatrix,
    h: &Hamiltonian,
    task_a: &Repertoire,
    task_b: Option<&Repertoire>,
    pol: &AttentionPolicy,
    env: Option<&Environment>,
    shared_rate: f64,
    total_time: f64,
    rng: &mut NatureRng,
) -> Result<StreamTrace> {
    pol.validate()?;
    check_setup(s0, h, task_a, env)?;
    if !(shared_rate.is_finite() && shared_rate > 0.0) {
        return Err(Error::Parameter {
            name: "shared_rate",
            expected: "finite and > 0",
            value: shared_rate,
        });
    }
    if let Some(b) = task_b {
        s0.check_dim(b.dim())?;
        if b.layout() != task_a.layout() || b.factor() == task_a.factor() {
            return Err(Error::Precondition(
                "dual-task repertoires must act on disjoint factors of one layout".into(),
            ));
        }
    }

    let prop = Propagation::new(h, env);
    let mut tasks: Vec<Task> = [("A", Some(task_a)), ("B", task_b)]
        .into_iter()
        .map(|(name, rep)| -> Result<Task> {
            let focus = match rep {
                Some(r) => select_question(s0, r)?.index,
                None => 0,
            };
            Ok(Task {
                name,
                rep,
                consented: None,
                consent_until: f64::NEG_INFINITY,
                focus,
                next_due: 0.0,
                waits: Vec::new(),
                events: 0,
                occupancy_sum: 0.0,
                occupancy_n: 0,
            })
        })
        .collect::<Result<_>>()?;

    let mut state = s0.clone();
    let mut t = 0.0;
    let mut events: Vec<EventRecord> = Vec::new();
    let mut event_tasks = Vec::new();
    let mut occupancy = Vec::new();
    let mut next_rr = 0;

    let n_slots = (total_time * shared_rate - 1e-9).ceil().max(0.0) as usize;
    let n_polls = (total_time / pol.sample_dt + 1e-9).floor() as usize;
    let (mut slot_k, mut poll_k) = (0, 1);

    while slot_k < n_slots || poll_k <= n_polls {
        let slot_t = (slot_k < n_slots).then(|| slot_k as f64 / shared_rate);
        let poll_t = (poll_k <= n_polls).then_some(poll_k as f64 * pol.sample_dt);
        let t_next = match (slot_t, poll_t) {
            (Some(a), Some(b)) => a.min(b),
            (Some(a), None) | (None, Some(a)) => a,
            (None, None) => break,
        };
        state = prop.evolve(&state, t_next - t)?;
        t = t_next;

        if slot_t.is_some_and(|s| (s - t).abs() <= TIME_EPS) {
            slot_k += 1;
            let n = tasks.len();
            let pick = (0..n)
                .map(|k| (next_rr + k) % n)
                .find(|&i| tasks[i].rep.is_some() && tasks[i].next_due <= t + TIME_EPS);
            if let Some(i) = pick {
                next_rr = (i + 1) % n;
                let task = &mut tasks[i];
                let rep = task.rep.expect("only active tasks are picked");
                let plan = match task.consented {
                    Some(p) if t < task.consent_until - TIME_EPS => p,
                    _ => {
                        task.consented = None;
                        select_question(&state, rep)?.index
                    }
                };
                let (event, next) = pose_question(&state, &rep.plan(plan).lifted, rng, t)?;
                state = next;
                if event.outcome.is_yes() {
                    if task.consented.is_none() {
                        task.consent_until = t + pol.consent_window;
                    }
                    task.consented = Some(plan);
                } else {
                    task.consented = None;
                }
                task.focus = plan;
                task.waits.push(t - task.next_due);
                task.next_due = t + 1.0 / pol.effort_rate;
                task.events += 1;
                events.push(event);
                event_tasks.push(i);
            }
        }

        if poll_t.is_some_and(|p| (p - t).abs() <= TIME_EPS) {
            poll_k += 1;
            state = prop.decohere(&state)?;
            for (i, task) in tasks.iter_mut().enumerate() {
                if let Some(rep) = task.rep {
                    let value = yes_probability(&state, &rep.plan(task.focus).lifted)?;
                    task.occupancy_sum += value;
                    task.occupancy_n += 1;
                    occupancy.push(OccupancySample {
                        t,
                        task: i,
                        plan: task.focus,
                        value,
                    });
                }
            }
        }
    }
    if t < total_time {
        state = prop.evolve(&state, total_time - t)?;
    }

    let stats = tasks
        .iter()
        .map(|task| {
            let n_waits = task.waits.len().max(1) as f64;
            TaskStats {
                name: task.name.to_string(),
                events: task.events,
                achieved_rate: if total_time > 0.0 { task.events as f64 / total_time } else { 0.0 },
                mean_wait: task.waits.iter().sum::<f64>() / n_waits,
                max_wait: task.waits.iter().copied().fold(0.0, f64::max),
                mean_occupancy: if task.occupancy_n > 0 {
                    task.occupancy_sum / task.occupancy_n as f64
                } else {
                    0.0
                },
            }
        })
        .collect();

    Ok(StreamTrace {
        events,
        event_tasks,
        occupancy,
        episodes: Vec::new(),
        tasks: stats,
        final_state: state,
        stalled_at: None,
        duration: total_time,
    })
}

/// Applied-force proxy of a task: its achieved event rate on the channel.
pub fn force_proxy(trace: &StreamTrace, task: &str) -> Result<f64> {
    trace
        .task(task)
        .map(|t| t.achieved_rate)
        .ok_or_else(|| Error::UnknownTask(task.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{PureState, SubsystemLayout};
    use crate::reduction::RngSeed;

    fn setup() -> (DensityMatrix, Hamiltonian, Repertoire, Repertoire) {
        let layout = SubsystemLayout::new(vec![2, 2]).unwrap();
        let s0 = DensityMatrix::from_pure(&PureState::basis(4, 0));
        let h = Hamiltonian::zero(4);
        (
            s0,
            h,
            Repertoire::computational(&layout, 0).unwrap(),
            Repertoire::computational(&layout, 1).unwrap(),
        )
    }

    #[test]
    fn idle_partner_leaves_full_channel() {
        let (s0, h, a, _) = setup();
        let pol = AttentionPolicy {
            effort_rate: 1000.0,
            ..Default::default()
        };
        let trace = dual_task(&s0, &h, &a, None, &pol, None, 20.0, 1.0, &mut NatureRng::new(RngSeed(1))).unwrap();
        assert_eq!(force_proxy(&trace, "A").unwrap(), 20.0);
        assert_eq!(force_proxy(&trace, "B").unwrap(), 0.0);
        assert!(matches!(force_proxy(&trace, "C"), Err(Error::UnknownTask(_))));
    }

    #[test]
    fn same_factor_rejected() {
        let (s0, h, a, _) = setup();
        let pol = AttentionPolicy::default();
        let err = dual_task(&s0, &h, &a, Some(&a), &pol, None, 20.0, 1.0, &mut NatureRng::new(RngSeed(1)));
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn demand_below_capacity_is_not_throttled() {
        let (s0, h, a, b) = setup();
        let pol = AttentionPolicy {
            effort_rate: 5.0,
            ..Default::default()
        };
        let trace = dual_task(&s0, &h, &a, Some(&b), &pol, None, 100.0, 1.0, &mut NatureRng::new(RngSeed(1))).unwrap();
        assert_eq!(trace.task("A").unwrap().events, 5);
        assert_eq!(trace.task("B").unwrap().events, 5);
    }
}
