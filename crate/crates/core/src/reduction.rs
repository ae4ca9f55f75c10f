//! Reduction events: pose a Yes/No question, let Nature answer by the Born rule,
//! reduce the state and log the event.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qcore::{CMatrix, DensityMatrix, Projector};
use crate::error::Error;

/// Outcome probabilities below this are impossible rather than round-off.
pub const ZERO_PROBABILITY: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// Seeded source of Nature's answers.
///
/// Stream `k` of master seed `s` is ChaCha8 keyed with `ChaCha8Rng::seed_from_u64(s)`
/// and stream id `k`. Streams of one master seed never overlap, so independent
/// runs derive their generators as `NatureRng::stream(seed, k)` with k = 0, 1, 2, ...
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NatureRng {
    inner: ChaCha8Rng,
}

impl NatureRng {
    pub fn new(seed: RngSeed) -> Self {
        Self::stream(seed, 0)
    }

    pub fn stream(seed: RngSeed, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed.0);
        inner.set_stream(stream);
        Self { inner }
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    #[serde(rename = "Y")]
    Yes,
    #[serde(rename = "N")]
    No,
}

impl Outcome {
    pub fn is_yes(self) -> bool {
        self == Outcome::Yes
    }
}

/// Trace and diagonal of a post-event state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateDigest {
    pub trace: f64,
    pub diagonal: Vec<f64>,
}

impl StateDigest {
    pub fn of(s: &DensityMatrix) -> Self {
        Self {
            trace: s.trace(),
            diagonal: s.diagonal(),
        }
    }
}

/// One reduction event. Serializes as `{"t", "q", "outcome", "p"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(rename = "q")]
    pub question: String,
    pub outcome: Outcome,
    /// Probability of the realized outcome.
    #[serde(rename = "p")]
    pub probability: f64,
    #[serde(skip)]
    pub state_digest: StateDigest,
}

/// Tr(P·S), clamped to [0, 1].
pub fn yes_probability(s: &DensityMatrix, p: &Projector) -> Result<f64> {
    s.check_dim(p.dim())?;
    Ok(trace_product(p.entries(), s.entries()).clamp(0.0, 1.0))
}

/// Re Tr(A·B) without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

fn project(s: &DensityMatrix, p: &CMatrix) -> Result<DensityMatrix> {
    let block = p * s.entries() * p;
    let probability = block.trace().re;
    if !(probability > ZERO_PROBABILITY) {
        return Err(Error::ImpossibleOutcome { probability });
    }
    Ok(DensityMatrix::from_matrix_unchecked(block.unscale(probability)))
}

/// P·S·P / Tr(P·S)
pub fn reduce_yes(s: &DensityMatrix, p: &Projector) -> Result<DensityMatrix> {
    s.check_dim(p.dim())?;
    project(s, p.entries())
}

/// (I-P)·S·(I-P) / Tr((I-P)·S)
pub fn reduce_no(s: &DensityMatrix, p: &Projector) -> Result<DensityMatrix> {
    s.check_dim(p.dim())?;
    project(s, p.complement().entries())
}

/// Asks `p` of state `s` at time `t`; Nature answers by drawing from `rng`.
///
/// Outcomes within [`ZERO_PROBABILITY`] of certain are decided without a draw.
pub fn pose_question(s: &DensityMatrix, p: &Projector, rng: &mut NatureRng, t: f64) -> Result<(EventRecord, DensityMatrix)> {
    let p_yes = yes_probability(s, p)?;
    let outcome = if p_yes < ZERO_PROBABILITY {
        Outcome::No
    } else if 1.0 - p_yes < ZERO_PROBABILITY {
        Outcome::Yes
    } else if rng.uniform() < p_yes {
        Outcome::Yes
    } else {
        Outcome::No
    };
    let (state, probability) = match outcome {
        Outcome::Yes => (reduce_yes(s, p)?, p_yes),
        Outcome::No => (reduce_no(s, p)?, 1.0 - p_yes),
    };
    let record = EventRecord {
        time: t,
        question: p.label().to_string(),
        outcome,
        probability,
        state_digest: StateDigest::of(&state),
    };
    Ok((record, state))
}

/// Outcome-averaged post-measurement state p·S_yes + (1-p)·S_no.
pub fn measure_nonselective(s: &DensityMatrix, p: &Projector) -> Result<DensityMatrix> {
    s.check_dim(p.dim())?;
    let q = p.complement();
    let sum = p.entries() * s.entries() * p.entries() + q.entries() * s.entries() * q.entries();
    Ok(DensityMatrix::from_matrix_unchecked(sum))
}

pub fn write_events_jsonl<W: Write>(events: &[EventRecord], mut out: W) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_events_csv<W: Write>(events: &[EventRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "q", "outcome", "p"])?;
    for e in events {
        let outcome = if e.outcome.is_yes() { "Y" } else { "N" };
        w.write_record([e.time.to_string(), e.question.clone(), outcome.to_string(), e.probability.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
