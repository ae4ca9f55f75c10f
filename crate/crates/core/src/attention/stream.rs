use std::collections::VecDeque;

use super::{
    check_setup, detect_local_max, select_question, AttentionPolicy, ConsentEpisode, Environment, OccupancySample,
    Propagation, Repertoire, StreamTrace, TaskStats, TIME_EPS,
};
use crate::dynamics::Hamiltonian;
use crate::error::Result;
use crate::qcore::DensityMatrix;
use crate::reduction::{pose_question, reduce_yes, yes_probability, EventRecord, NatureRng, ZERO_PROBABILITY};

/// An open consent window. While `realized`, the stream state itself is the
/// all-Yes branch; after a No the branch is followed as `shadow` so that the
/// window's all-Yes probability is still exact.
struct Window {
    plan: usize,
    start: f64,
    next: usize,
    total: usize,
    interval: f64,
    realized: bool,
    shadow: Option<DensityMatrix>,
    product: f64,
    answered_yes: usize,
}

impl Window {
    fn next_time(&self) -> f64 {
        self.start + self.next as f64 * self.interval
    }

    fn finished(&self) -> bool {
        self.next > self.total
    }
}

struct Stream<'a> {
    rep: &'a Repertoire,
    pol: &'a AttentionPolicy,
    prop: Propagation<'a>,
    state: DensityMatrix,
    t: f64,
    events: Vec<EventRecord>,
    occupancy: Vec<OccupancySample>,
    episodes: Vec<ConsentEpisode>,
    windows: Vec<Window>,
    history: VecDeque<(f64, usize)>,
    focus: usize,
    refused: Option<(usize, f64)>,
    stalled_at: Option<f64>,
}

impl Stream<'_> {
    fn advance(&mut self, t_next: f64) -> Result<()> {
        let dt = t_next - self.t;
        self.state = self.prop.evolve(&self.state, dt)?;
        for w in &mut self.windows {
            if let Some(shadow) = &w.shadow {
                w.shadow = Some(self.prop.evolve(shadow, dt)?);
            }
        }
        self.t = t_next;
        Ok(())
    }

    fn decohere(&mut self) -> Result<()> {
        self.state = self.prop.decohere(&self.state)?;
        for w in &mut self.windows {
            if let Some(shadow) = &w.shadow {
                w.shadow = Some(self.prop.decohere(shadow)?);
            }
        }
        Ok(())
    }

    fn realized_window(&self) -> bool {
        self.windows.iter().any(|w| w.realized)
    }

    /// Poses `plan` now; opens a consent window on Yes.
    fn pose(&mut self, plan: usize, rng: &mut NatureRng) -> Result<()> {
        let (event, next) = pose_question(&self.state, &self.rep.plan(plan).lifted, rng, self.t)?;
        self.state = next;
        self.focus = plan;
        self.history.clear();
        let yes = event.outcome.is_yes();
        self.events.push(event);
        let total = self.pol.reposes_per_window();
        if yes && total > 0 {
            self.windows.push(Window {
                plan,
                start: self.t,
                next: 1,
                total,
                interval: 1.0 / self.pol.effort_rate,
                realized: true,
                shadow: None,
                product: 1.0,
                answered_yes: 0,
            });
        } else if !yes {
            self.refused = Some((plan, self.t));
        }
        Ok(())
    }

    fn repose(&mut self, index: usize, rng: &mut NatureRng) -> Result<()> {
        let lifted = &self.rep.plan(self.windows[index].plan).lifted;
        let w = &mut self.windows[index];
        if w.realized {
            let pre = self.state.clone();
            let (event, next) = pose_question(&pre, lifted, rng, self.t)?;
            let p_yes = if event.outcome.is_yes() { event.probability } else { 1.0 - event.probability };
            w.product *= p_yes;
            if event.outcome.is_yes() {
                w.answered_yes += 1;
            } else {
                w.realized = false;
                w.shadow = (p_yes > ZERO_PROBABILITY).then(|| reduce_yes(&pre, lifted)).transpose()?;
                if w.shadow.is_none() {
                    w.product = 0.0;
                    w.next = w.total;
                }
                self.refused = Some((w.plan, self.t));
                self.history.clear();
            }
            self.state = next;
            self.events.push(event);
        } else if let Some(shadow) = &w.shadow {
            let p_yes = yes_probability(shadow, lifted)?;
            w.product *= p_yes;
            w.shadow = (p_yes > ZERO_PROBABILITY).then(|| reduce_yes(shadow, lifted)).transpose()?;
            if w.shadow.is_none() {
                w.product = 0.0;
                w.next = w.total;
            }
        }
        w.next += 1;
        if w.finished() {
            let w = self.windows.remove(index);
            if w.realized {
                self.history.clear();
            }
            self.episodes.push(ConsentEpisode {
                task: 0,
                plan: w.plan,
                label: self.rep.plan(w.plan).label.clone(),
                start: w.start,
                reposes: w.total,
                answered_yes: w.answered_yes,
                all_yes_probability: w.product,
                completed: w.realized,
            });
        }
        Ok(())
    }

    fn poll(&mut self, rng: &mut NatureRng) -> Result<()> {
        self.decohere()?;
        self.record_occupancy()?;
        if self.realized_window() {
            return Ok(());
        }
        let sel = select_question(&self.state, self.rep)?;
        if sel.value < ZERO_PROBABILITY {
            self.stalled_at.get_or_insert(self.t);
            return Ok(());
        }
        self.history.push_back((sel.value, sel.index));
        while self.history.len() > self.pol.trigger_window {
            self.history.pop_front();
        }
        if self.history.len() < self.pol.trigger_window {
            return Ok(());
        }
        let values: Vec<f64> = self.history.iter().map(|(v, _)| *v).collect();
        if !detect_local_max(&values) {
            return Ok(());
        }
        let plan = self.history[self.pol.trigger_window / 2].1;
        let just_refused = self
            .refused
            .is_some_and(|(p, at)| p == plan && self.t < at + self.pol.sample_dt - TIME_EPS);
        let last_event = self.events.last().map_or(f64::NEG_INFINITY, |e| e.time);
        if just_refused || last_event >= self.t - TIME_EPS {
            return Ok(());
        }
        self.pose(plan, rng)
    }

    fn record_occupancy(&mut self) -> Result<()> {
        let value = yes_probability(&self.state, &self.rep.plan(self.focus).lifted)?;
        self.occupancy.push(OccupancySample {
            t: self.t,
            task: 0,
            plan: self.focus,
            value,
        });
        Ok(())
    }
}

/// Simulates one stream of consciousness over `[0, total_time]`.
///
/// The state evolves under `h` between event and poll times. Every
/// `sample_dt` the environment dephases the state and Tr(P·S) of the best plan
/// is sampled; when that series has a strict local maximum the plan is posed.
/// A Yes opens a consent window during which the same plan is re-posed at
/// exact multiples of `1/effort_rate`. After a No, polling resumes with the
/// reduced state.
pub fn run_stream(
    s0: &DensityMatrix,
    h: &Hamiltonian,
    rep: &Repertoire,
    pol: &AttentionPolicy,
    env: Option<&Environment>,
    total_time: f64,
    rng: &mut NatureRng,
) -> Result<StreamTrace> {
    pol.validate()?;
    check_setup(s0, h, rep, env)?;
    let first = select_question(s0, rep)?;
    let mut sim = Stream {
        rep,
        pol,
        prop: Propagation::new(h, env),
        state: s0.clone(),
        t: 0.0,
        events: Vec::new(),
        occupancy: Vec::new(),
        episodes: Vec::new(),
        windows: Vec::new(),
        history: VecDeque::new(),
        focus: first.index,
        refused: None,
        stalled_at: None,
    };
    if pol.consent_at_start {
        sim.pose(first.index, rng)?;
    }
    sim.record_occupancy()?;

    let n_polls = (total_time / pol.sample_dt + 1e-9).floor() as usize;
    let mut poll_k = 1;
    loop {
        let next_poll = (poll_k <= n_polls).then_some(poll_k as f64 * pol.sample_dt);
        let next_repose = sim
            .windows
            .iter()
            .enumerate()
            .map(|(i, w)| (w.next_time(), i))
            .filter(|(t, _)| *t <= total_time + TIME_EPS)
            .min_by(|a, b| a.0.total_cmp(&b.0));
        let t_next = match (next_poll, next_repose) {
            (None, None) => break,
            (Some(p), None) => p,
            (None, Some((r, _))) => r,
            (Some(p), Some((r, _))) => p.min(r),
        };
        sim.advance(t_next)?;
        if let Some((r, i)) = next_repose {
            if (r - t_next).abs() <= TIME_EPS {
                sim.repose(i, rng)?;
            }
        }
        if let Some(p) = next_poll {
            if (p - t_next).abs() <= TIME_EPS {
                sim.poll(rng)?;
                poll_k += 1;
            }
        }
    }
    if sim.t < total_time {
        sim.advance(total_time)?;
    }

    let mean_occupancy = if sim.occupancy.is_empty() {
        0.0
    } else {
        sim.occupancy.iter().map(|s| s.value).sum::<f64>() / sim.occupancy.len() as f64
    };
    let n_events = sim.events.len();
    Ok(StreamTrace {
        event_tasks: vec![0; n_events],
        events: sim.events,
        occupancy: sim.occupancy,
        episodes: sim.episodes,
        tasks: vec![TaskStats {
            name: "main".into(),
            events: n_events,
            achieved_rate: if total_time > 0.0 { n_events as f64 / total_time } else { 0.0 },
            mean_wait: 0.0,
            max_wait: 0.0,
            mean_occupancy,
        }],
        final_state: sim.state,
        stalled_at: sim.stalled_at,
        duration: total_time,
    })
}
