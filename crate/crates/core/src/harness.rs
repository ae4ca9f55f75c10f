//! Run configurations, experiment recipes and artifact emission behind the
//! `vnsim` binary.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::attention::{dual_task, run_stream, AttentionPolicy, Environment, Repertoire, StreamTrace};
use crate::dynamics::{evolve, Hamiltonian, PointerBasis};
use crate::error::{Error, Result};
use crate::hardy::{
    assess_assertion, check_assertion, lhv_enumerate, optimize_hardy, HardyInstance, Right,
};
use crate::qcore::{c, CVector, DensityMatrix, MatrixJson, Projector, PureState, SubsystemLayout};
use crate::reduction::{EventRecord, NatureRng, RngSeed};
use crate::zeno::{run_zeno, run_zeno_drag, ZenoSchedule};

pub const SEED_ENV: &str = "VN_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Zeno,
    Drag,
    Attention,
    DualTask,
    HardyVerify,
    HardyLhv,
    HardyAssert,
    Evolve,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::Zeno,
        Experiment::Drag,
        Experiment::Attention,
        Experiment::DualTask,
        Experiment::HardyVerify,
        Experiment::HardyLhv,
        Experiment::HardyAssert,
        Experiment::Evolve,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Zeno => "zeno",
            Experiment::Drag => "drag",
            Experiment::Attention => "attention",
            Experiment::DualTask => "dual_task",
            Experiment::HardyVerify => "hardy_verify",
            Experiment::HardyLhv => "hardy_lhv",
            Experiment::HardyAssert => "hardy_assert",
            Experiment::Evolve => "evolve",
        }
    }

    /// Parameters that must be present in the config.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            Experiment::Zeno => &["hamiltonian", "T", "n"],
            Experiment::Drag => &["n"],
            Experiment::Attention => &["T"],
            Experiment::DualTask => &["T", "shared_rate"],
            Experiment::HardyAssert => &["which"],
            Experiment::Evolve => &["hamiltonian", "t"],
            Experiment::HardyVerify | Experiment::HardyLhv => &[],
        }
    }

    /// Optional parameters and their defaults, for `--help`.
    pub fn optional(self) -> &'static [&'static str] {
        match self {
            Experiment::Zeno => &["initial=[1,0]", "projector=initial"],
            Experiment::Drag => &["T=1", "hamiltonian=zero", "from=[1,0]", "to=[0,1]", "initial=from"],
            Experiment::Attention => &[
                "layout=[2,2]",
                "factor=0",
                "hamiltonian=rabi(7.853981633974483)",
                "repertoire=computational",
                "labels",
                "policy={}",
                "effort_rate",
                "consent_window",
                "trigger_window",
                "sample_dt",
                "consent_at_start",
                "dephasing=0",
                "env_factor",
                "initial=|0...0>",
            ],
            Experiment::DualTask => &[
                "layout=[2,2]",
                "factor_a=0",
                "factor_b=1",
                "repertoire_a",
                "repertoire_b",
                "idle_b=false",
                "hamiltonian=rabi(7.853981633974483)",
                "policy={}",
                "effort_rate",
                "dephasing=0",
                "env_factor",
                "initial=|0...0>",
            ],
            Experiment::HardyVerify | Experiment::HardyLhv | Experiment::HardyAssert => {
                &["instance=canonical", "theta", "budget=200"]
            }
            Experiment::Evolve => &["initial=[1,0,...]"],
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == key)
            .ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Jsonl,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(OutputFormat::Json),
            "jsonl" => Ok(OutputFormat::Jsonl),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::field("output.format", format!("`{other}` is not json, jsonl or csv"))),
        }
    }
}

impl OutputFormat {
    /// Format implied by a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

/// Where the primary artifact goes. Without a path it is printed to stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

impl OutputSpec {
    pub fn resolved_format(&self) -> OutputFormat {
        self.format
            .or_else(|| self.path.as_deref().and_then(OutputFormat::from_path))
            .unwrap_or(OutputFormat::Json)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub parameters: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<RngSeed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            parameters: Map::new(),
            seed: None,
            output: None,
        }
    }

    /// Parses and validates a JSON config, naming the offending field on failure.
    pub fn from_json(text: &str) -> Result<Self> {
        let config = Self::parse(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Parses without checking required parameters, which flags may still supply.
    pub fn parse(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::field("config", "expected a JSON object"))?;
        let name = obj
            .get("experiment")
            .ok_or_else(|| Error::MissingField("experiment".into()))?
            .as_str()
            .ok_or_else(|| Error::field("experiment", "expected a string"))?;
        let experiment: Experiment = name.parse()?;
        let parameters = match obj.get("parameters") {
            None | Some(Value::Null) => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(Error::field("parameters", "expected an object")),
        };
        let seed = match obj.get("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(RngSeed(
                v.as_u64().ok_or_else(|| Error::field("seed", "expected a non-negative integer"))?,
            )),
        };
        let output = match obj.get("output") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                serde_json::from_value::<OutputSpec>(v.clone()).map_err(|e| Error::field("output", e))?,
            ),
        };
        Ok(Self {
            experiment,
            parameters,
            seed,
            output,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        for key in self.experiment.required() {
            if !self.parameters.contains_key(*key) {
                return Err(Error::MissingField(format!("parameters.{key}")));
            }
        }
        Ok(())
    }

    /// Config seed, overridden by `VN_SEED` when set.
    pub fn effective_seed(&self) -> Result<RngSeed> {
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .map(RngSeed)
                .map_err(|_| Error::field(SEED_ENV, format!("`{v}` is not a non-negative integer"))),
            Err(_) => Ok(self.seed.unwrap_or(RngSeed(0))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    /// One-line human summary of the key metric.
    pub summary: String,
    /// Primary artifact when no output path was configured.
    pub stdout: Option<String>,
    /// Files written.
    pub written: Vec<PathBuf>,
}

/// Runs `config` with the seed resolved by [`RunConfig::effective_seed`].
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    run_with_seed(config, config.effective_seed()?)
}

pub fn run_with_seed(config: &RunConfig, seed: RngSeed) -> Result<RunOutcome> {
    config.validate()?;
    let p = Params(&config.parameters);
    let artifacts = match config.experiment {
        Experiment::Zeno => zeno(&p)?,
        Experiment::Drag => drag(&p)?,
        Experiment::Evolve => evolve_experiment(&p)?,
        Experiment::Attention => attention(&p, seed)?,
        Experiment::DualTask => dual(&p, seed)?,
        Experiment::HardyVerify => hardy_verify(&p, seed)?,
        Experiment::HardyLhv => hardy_lhv(&p, seed)?,
        Experiment::HardyAssert => hardy_assert(&p, seed)?,
    };
    log::info!("{}: {}", config.experiment, artifacts.summary);

    let mut outcome = RunOutcome {
        summary: artifacts.summary.clone(),
        stdout: None,
        written: Vec::new(),
    };
    let Some(spec) = &config.output else {
        return Ok(outcome);
    };
    let format = spec.resolved_format();
    let body = artifacts.render(format)?;
    match &spec.path {
        None => outcome.stdout = Some(body),
        Some(path) => {
            std::fs::write(path, body)?;
            outcome.written.push(path.clone());
            if let (Some(occ), true) = (&artifacts.occupancy, format != OutputFormat::Csv) {
                let side = path.with_extension("occupancy.csv");
                std::fs::write(&side, occ)?;
                outcome.written.push(side);
            }
        }
    }
    Ok(outcome)
}

/// Error JSON printed by the CLI: `{"error": kind, "message": text}` plus
/// `field` when one is to blame.
pub fn error_json(err: &Error) -> Value {
    let mut obj = json!({ "error": err.kind(), "message": err.to_string() });
    let field = match err {
        Error::MissingField(f) => Some(f.clone()),
        Error::InvalidField { field, .. } => Some(field.clone()),
        _ => None,
    };
    if let Some(f) = field {
        obj["field"] = Value::String(f);
    }
    obj
}

/// Rounds to 9 significant digits and prints the shortest form, e.g. `0.25`.
pub fn fmt_summary(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    rounded.to_string()
}

/// Writes named series as CSV columns in the given order with one header row.
pub fn write_plot_data<W: Write>(series: &[(&str, &[f64])], out: W) -> Result<()> {
    let len = series.first().map_or(0, |(_, v)| v.len());
    if let Some((name, v)) = series.iter().find(|(_, v)| v.len() != len) {
        return Err(Error::SeriesLength {
            name: name.to_string(),
            expected: len,
            found: v.len(),
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(series.iter().map(|(name, _)| *name))?;
    for i in 0..len {
        w.write_record(series.iter().map(|(_, v)| v[i].to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_plot_data(series: &[(&str, &[f64])], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_plot_data(series, &mut buf)?;
    let mut file = BufWriter::new(File::create(path)?);
    file.write_all(&buf)?;
    file.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------

struct Artifacts {
    summary: String,
    document: Value,
    records: Vec<Value>,
    table: Vec<u8>,
    occupancy: Option<String>,
}

impl Artifacts {
    fn render(&self, format: OutputFormat) -> Result<String> {
        Ok(match format {
            OutputFormat::Json => {
                let mut s = serde_json::to_string_pretty(&self.document)?;
                s.push('\n');
                s
            }
            OutputFormat::Jsonl => {
                let mut s = String::new();
                for r in &self.records {
                    s.push_str(&serde_json::to_string(r)?);
                    s.push('\n');
                }
                s
            }
            OutputFormat::Csv => String::from_utf8(self.table.clone()).expect("csv writer emits utf-8"),
        })
    }
}

fn table(series: &[(&str, &[f64])]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_plot_data(series, &mut buf)?;
    Ok(buf)
}

fn csv_rows(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

struct Params<'a>(&'a Map<String, Value>);

impl Params<'_> {
    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key).filter(|v| !v.is_null())
    }

    fn require(&self, key: &str) -> Result<&Value> {
        self.get(key).ok_or_else(|| Error::MissingField(format!("parameters.{key}")))
    }

    fn f64_of(key: &str, v: &Value) -> Result<f64> {
        match v {
            Value::Number(n) => n.as_f64(),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
        .filter(|x: &f64| x.is_finite())
        .ok_or_else(|| Error::field(key, "expected a finite number"))
    }

    fn f64(&self, key: &str) -> Result<f64> {
        Self::f64_of(key, self.require(key)?)
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| Self::f64_of(key, v))
    }

    fn usize_of(key: &str, v: &Value) -> Result<usize> {
        match v {
            Value::Number(n) => n.as_u64().map(|x| x as usize),
            Value::String(s) => s.trim().parse().ok(),
            _ => None,
        }
        .ok_or_else(|| Error::field(key, "expected a non-negative integer"))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key).map_or(Ok(default), |v| Self::usize_of(key, v))
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(Value::String(s)) => s.parse().map_err(|_| Error::field(key, "expected true or false")),
            Some(_) => Err(Error::field(key, "expected true or false")),
        }
    }

    fn str(&self, key: &str) -> Result<&str> {
        self.require(key)?
            .as_str()
            .ok_or_else(|| Error::field(key, "expected a string"))
    }

    fn str_or<'s>(&'s self, key: &str, default: &'s str) -> Result<&'s str> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.as_str().ok_or_else(|| Error::field(key, "expected a string")),
        }
    }

    /// An integer, an array of integers, or a comma-separated string.
    fn usize_list(&self, key: &str) -> Result<Vec<usize>> {
        let v = self.require(key)?;
        let list = match v {
            Value::Array(items) => items.iter().map(|x| Self::usize_of(key, x)).collect::<Result<_>>()?,
            Value::String(s) if s.contains(',') => s
                .split(',')
                .map(|x| x.trim().parse().map_err(|_| Error::field(key, "expected integers")))
                .collect::<Result<_>>()?,
            other => vec![Self::usize_of(key, other)?],
        };
        if list.is_empty() {
            return Err(Error::field(key, "expected at least one value"));
        }
        Ok(list)
    }

    fn layout(&self, key: &str, default: &[usize]) -> Result<SubsystemLayout> {
        let dims = match self.get(key) {
            None => default.to_vec(),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::field(key, e))?,
        };
        SubsystemLayout::new(dims).map_err(|e| Error::field(key, e))
    }

    fn hamiltonian(&self, key: &str) -> Result<Option<Hamiltonian>> {
        self.get(key).map(|v| parse_hamiltonian(key, v)).transpose()
    }

    fn state(&self, key: &str) -> Result<Option<PureState>> {
        self.get(key).map(|v| parse_state(key, v)).transpose()
    }

    fn states(&self, key: &str) -> Result<Option<Vec<PureState>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .enumerate()
                .map(|(i, v)| parse_state(&format!("{key}[{i}]"), v))
                .collect::<Result<_>>()
                .map(Some),
            Some(_) => Err(Error::field(key, "expected an array of vectors")),
        }
    }

    /// `policy` object, with top-level policy keys taking precedence.
    fn policy(&self) -> Result<AttentionPolicy> {
        let mut obj = match self.get("policy") {
            None => Map::new(),
            Some(Value::Object(m)) => m.clone(),
            Some(_) => return Err(Error::field("policy", "expected an object")),
        };
        for key in ["effort_rate", "consent_window", "trigger_window", "sample_dt", "consent_at_start"] {
            if let Some(v) = self.get(key) {
                obj.insert(key.into(), v.clone());
            }
        }
        serde_json::from_value(Value::Object(obj)).map_err(|e| Error::field("policy", e))
    }
}

fn parse_hamiltonian(key: &str, v: &Value) -> Result<Hamiltonian> {
    match v {
        Value::String(name) => Hamiltonian::from_preset(name).map_err(|e| Error::field(key, e)),
        Value::Object(_) => {
            let m: MatrixJson = serde_json::from_value(v.clone()).map_err(|e| Error::field(key, e))?;
            Hamiltonian::new(m.to_matrix()?).map_err(|e| Error::field(key, e))
        }
        _ => Err(Error::field(key, "expected a preset name or a matrix literal")),
    }
}

/// `[x, y, ...]` real amplitudes, `[[re, im], ...]` pairs, or `{"re": [...], "im": [...]}`.
fn parse_state(key: &str, v: &Value) -> Result<PureState> {
    let bad = || Error::field(key, "expected a vector of amplitudes");
    let amps: Vec<_> = match v {
        Value::Array(items) => items
            .iter()
            .map(|x| match x {
                Value::Number(n) => n.as_f64().map(|re| c(re, 0.0)),
                Value::Array(pair) if pair.len() == 2 => Some(c(pair[0].as_f64()?, pair[1].as_f64()?)),
                _ => None,
            })
            .collect::<Option<_>>()
            .ok_or_else(bad)?,
        Value::Object(m) => {
            let part = |name: &str| -> Result<Vec<f64>> {
                m.get(name)
                    .map_or(Ok(Vec::new()), |x| serde_json::from_value(x.clone()).map_err(|e| Error::field(key, e)))
            };
            let (re, im) = (part("re")?, part("im")?);
            if !im.is_empty() && im.len() != re.len() {
                return Err(bad());
            }
            re.iter()
                .enumerate()
                .map(|(i, &r)| c(r, im.get(i).copied().unwrap_or(0.0)))
                .collect()
        }
        _ => return Err(bad()),
    };
    PureState::normalized(CVector::from_vec(amps)).map_err(|e| Error::field(key, e))
}

fn record<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

// ---------------------------------------------------------------------------
// Experiments

fn zeno(p: &Params) -> Result<Artifacts> {
    let h = p.hamiltonian("hamiltonian")?.expect("required");
    let total_time = p.f64("T")?;
    let ns = p.usize_list("n")?;
    let initial = p.state("initial")?.unwrap_or_else(|| PureState::basis(h.dim(), 0));
    let question = match p.state("projector")? {
        Some(v) => Projector::from_state(&v, "P"),
        None => Projector::from_state(&initial, "P"),
    };
    let s0 = DensityMatrix::from_pure(&initial);
    let mut survival = Vec::with_capacity(ns.len());
    for &n in &ns {
        let sched = ZenoSchedule::constant(total_time, n, question.clone())?;
        survival.push(run_zeno(&s0, &h, &sched)?.survival_probability);
    }
    let n_col: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let rows: Vec<Value> = ns
        .iter()
        .zip(&survival)
        .map(|(n, s)| json!({ "n": n, "survival": s }))
        .collect();
    let summary = if survival.len() == 1 {
        format!("survival: {}", fmt_summary(survival[0]))
    } else {
        let parts: Vec<String> = ns
            .iter()
            .zip(&survival)
            .map(|(n, s)| format!("n={n} {}", fmt_summary(*s)))
            .collect();
        format!("survival: {}", parts.join(", "))
    };
    Ok(Artifacts {
        summary,
        document: json!({ "experiment": "zeno", "T": total_time, "results": rows }),
        records: rows,
        table: table(&[("n", &n_col), ("survival", &survival)])?,
        occupancy: None,
    })
}

fn drag(p: &Params) -> Result<Artifacts> {
    let ns = p.usize_list("n")?;
    let total_time = p.f64_or("T", 1.0)?;
    let from = p.state("from")?.unwrap_or_else(|| PureState::basis(2, 0));
    let to = p.state("to")?.unwrap_or_else(|| PureState::basis(2, 1));
    let h = p.hamiltonian("hamiltonian")?.unwrap_or_else(|| Hamiltonian::zero(from.dim()));
    let s0 = DensityMatrix::from_pure(&p.state("initial")?.unwrap_or_else(|| from.clone()));
    let (mut survival, mut fidelity) = (Vec::new(), Vec::new());
    for &n in &ns {
        let r = run_zeno_drag(&s0, &h, &from, &to, n, total_time)?;
        survival.push(r.result.survival_probability);
        fidelity.push(r.fidelity);
    }
    let rows: Vec<Value> = (0..ns.len())
        .map(|i| json!({ "n": ns[i], "survival": survival[i], "fidelity": fidelity[i] }))
        .collect();
    let last = ns.len() - 1;
    let n_col: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    Ok(Artifacts {
        summary: format!(
            "n={} survival: {} fidelity: {}",
            ns[last],
            fmt_summary(survival[last]),
            fmt_summary(fidelity[last])
        ),
        document: json!({ "experiment": "drag", "T": total_time, "results": rows }),
        records: rows,
        table: table(&[("n", &n_col), ("survival", &survival), ("fidelity", &fidelity)])?,
        occupancy: None,
    })
}

fn evolve_experiment(p: &Params) -> Result<Artifacts> {
    let h = p.hamiltonian("hamiltonian")?.expect("required");
    let t = p.f64("t")?;
    let s0 = match p.get("initial_density") {
        Some(v) => {
            let m: MatrixJson = serde_json::from_value(v.clone()).map_err(|e| Error::field("initial_density", e))?;
            DensityMatrix::try_from(m).map_err(|e| Error::field("initial_density", e))?
        }
        None => DensityMatrix::from_pure(&p.state("initial")?.unwrap_or_else(|| PureState::basis(h.dim(), 0))),
    };
    let s = evolve(&s0, &h, t)?;
    let populations = s.diagonal();
    let purity = s.purity();
    let index: Vec<f64> = (0..populations.len()).map(|i| i as f64).collect();
    let doc = json!({
        "experiment": "evolve",
        "t": t,
        "state": MatrixJson::from(s.entries()),
        "populations": populations,
        "purity": purity,
    });
    let summary = format!(
        "populations: {}",
        populations.iter().map(|&x| fmt_summary(x)).collect::<Vec<_>>().join(" ")
    );
    Ok(Artifacts {
        summary,
        records: vec![doc.clone()],
        document: doc,
        table: table(&[("index", &index), ("population", &populations)])?,
        occupancy: None,
    })
}

/// Local Hamiltonians (dimension of one factor) are lifted onto each of `factors`.
fn stream_hamiltonian(p: &Params, layout: &SubsystemLayout, factors: &[usize]) -> Result<Hamiltonian> {
    let h = match p.hamiltonian("hamiltonian")? {
        Some(h) => h,
        None => Hamiltonian::rabi(std::f64::consts::FRAC_PI_2 / 0.2),
    };
    if h.dim() == layout.total_dim() {
        return Ok(h);
    }
    let mut total = Hamiltonian::zero(layout.total_dim());
    for &f in factors {
        if layout.dims().get(f) != Some(&h.dim()) {
            return Err(Error::field(
                "hamiltonian",
                format!("dimension {} fits neither factor {f} nor the full space", h.dim()),
            ));
        }
        total = total.sum(&h.lift(layout, f)?)?;
    }
    Ok(total)
}

fn repertoire(p: &Params, key: &str, layout: &SubsystemLayout, factor: usize) -> Result<Repertoire> {
    if factor >= layout.len() {
        return Err(Error::field(key, format!("factor {factor} outside layout of {} factors", layout.len())));
    }
    match p.states(key)? {
        None => Repertoire::computational(layout, factor),
        Some(vectors) => {
            let labels: Vec<String> = match p.get(&format!("{key}_labels")).or_else(|| p.get("labels")) {
                Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::field("labels", e))?,
                None => (0..vectors.len()).map(|k| format!("plan{k}")).collect(),
            };
            Repertoire::from_vectors(layout, factor, &vectors, &labels).map_err(|e| Error::field(key, e))
        }
    }
}

fn environment(p: &Params, layout: &SubsystemLayout, default_factor: Option<usize>) -> Result<Option<Environment>> {
    let strength = p.f64_or("dephasing", 0.0)?;
    let factor = match p.get("env_factor") {
        Some(v) => Some(Params::usize_of("env_factor", v)?),
        None => default_factor,
    };
    match factor {
        Some(f) if f < layout.len() => Ok(Some(Environment {
            basis: PointerBasis::on_factor(layout, f)?,
            strength,
        })),
        Some(f) => Err(Error::field("env_factor", format!("factor {f} outside layout"))),
        None if strength > 0.0 => Err(Error::field("env_factor", "dephasing needs an environment factor")),
        None => Ok(None),
    }
}

fn initial_state(p: &Params, dim: usize) -> Result<DensityMatrix> {
    let s = p.state("initial")?.unwrap_or_else(|| PureState::basis(dim, 0));
    if s.dim() != dim {
        return Err(Error::field("initial", format!("expected {dim} amplitudes, got {}", s.dim())));
    }
    Ok(DensityMatrix::from_pure(&s))
}

fn trace_artifacts(trace: &StreamTrace, summary: String, names: &[&str], experiment: &str) -> Result<Artifacts> {
    let with_task = names.len() > 1;
    let records: Vec<Value> = trace
        .events
        .iter()
        .zip(&trace.event_tasks)
        .map(|(e, &task)| -> Result<Value> {
            let mut v = record::<EventRecord>(e)?;
            if with_task {
                v["task"] = Value::String(names[task].to_string());
            }
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let mut occ = Vec::new();
    trace.write_occupancy_csv(&mut occ)?;
    let occupancy = String::from_utf8(occ).expect("csv writer emits utf-8");
    let document = json!({
        "experiment": experiment,
        "duration": trace.duration,
        "events": records,
        "episodes": record(&trace.episodes)?,
        "tasks": record(&trace.tasks)?,
        "stalled_at": trace.stalled_at,
    });
    Ok(Artifacts {
        summary,
        document,
        records,
        table: occupancy.clone().into_bytes(),
        occupancy: Some(occupancy),
    })
}

fn attention(p: &Params, seed: RngSeed) -> Result<Artifacts> {
    let total_time = p.f64("T")?;
    let layout = p.layout("layout", &[2, 2])?;
    let factor = p.usize_or("factor", 0)?;
    let rep = repertoire(p, "repertoire", &layout, factor)?;
    let h = stream_hamiltonian(p, &layout, &[factor])?;
    let env_default = (0..layout.len()).rev().find(|&f| f != factor);
    let env = environment(p, &layout, env_default)?;
    let pol = p.policy()?;
    let s0 = initial_state(p, layout.total_dim())?;
    let trace = run_stream(&s0, &h, &rep, &pol, env.as_ref(), total_time, &mut NatureRng::new(seed))?;
    let stats = &trace.tasks[0];
    let summary = format!(
        "mean_occupancy: {} events: {}",
        fmt_summary(stats.mean_occupancy),
        stats.events
    );
    trace_artifacts(&trace, summary, &["main"], "attention")
}

fn dual(p: &Params, seed: RngSeed) -> Result<Artifacts> {
    let total_time = p.f64("T")?;
    let shared_rate = p.f64("shared_rate")?;
    let layout = p.layout("layout", &[2, 2])?;
    let fa = p.usize_or("factor_a", 0)?;
    let fb = p.usize_or("factor_b", 1)?;
    let rep_a = repertoire(p, "repertoire_a", &layout, fa)?;
    let rep_b = repertoire(p, "repertoire_b", &layout, fb)?;
    let idle_b = p.bool_or("idle_b", false)?;
    let h = stream_hamiltonian(p, &layout, &[fa, fb])?;
    let env = environment(p, &layout, None)?;
    let pol = p.policy()?;
    let s0 = initial_state(p, layout.total_dim())?;
    let trace = dual_task(
        &s0,
        &h,
        &rep_a,
        (!idle_b).then_some(&rep_b),
        &pol,
        env.as_ref(),
        shared_rate,
        total_time,
        &mut NatureRng::new(seed),
    )?;
    let summary = trace
        .tasks
        .iter()
        .map(|t| format!("force_{}: {}", t.name, fmt_summary(t.achieved_rate)))
        .collect::<Vec<_>>()
        .join(" ");
    trace_artifacts(&trace, summary, &["A", "B"], "dual_task")
}

fn hardy_instance(p: &Params, seed: RngSeed) -> Result<HardyInstance> {
    let name = p.str_or("instance", "canonical")?;
    match name {
        "canonical" => Ok(HardyInstance::canonical()),
        "product" | "product_z" => Ok(HardyInstance::product_z()),
        "family" => HardyInstance::family(p.f64("theta")?),
        "optimized" => Ok(optimize_hardy(p.usize_or("budget", 200)?)?.instance),
        "random" => Ok(HardyInstance::random(&mut ChaCha8Rng::seed_from_u64(seed.0))),
        other => Err(Error::field(
            "instance",
            format!("`{other}` is not canonical, optimized, family, product or random"),
        )),
    }
}

fn hardy_verify(p: &Params, seed: RngSeed) -> Result<Artifacts> {
    let inst = hardy_instance(p, seed)?;
    let report = inst.verify_predictions();
    let valid = report.is_hardy_valid(inst.epsilon);
    let verdict = |which| {
        if valid {
            assess_assertion(&report, inst.epsilon, which).label()
        } else {
            "UNDETERMINED"
        }
    };
    let mut doc = record(&report)?;
    doc["R1"] = json!(verdict(Right::R1));
    doc["R2"] = json!(verdict(Right::R2));
    let values = [report.p1_violation, report.p2_violation, report.p3_violation, report.p4_value];
    let row = values
        .iter()
        .map(f64::to_string)
        .chain([verdict(Right::R1).to_string(), verdict(Right::R2).to_string()])
        .collect();
    Ok(Artifacts {
        summary: format!("p4_value: {} hardy_valid: {valid}", fmt_summary(report.p4_value)),
        records: vec![doc.clone()],
        document: doc,
        table: csv_rows(
            &["p1_violation", "p2_violation", "p3_violation", "p4_value", "R1", "R2"],
            &[row],
        )?,
        occupancy: None,
    })
}

fn hardy_lhv(p: &Params, seed: RngSeed) -> Result<Artifacts> {
    let inst = hardy_instance(p, seed)?;
    let report = lhv_enumerate(&inst);
    let rows: Vec<Vec<String>> = report
        .assignments
        .iter()
        .map(|a| {
            let v = &a.assignment;
            crate::hardy::SettingId::ALL
                .iter()
                .map(|&id| v.value(id).to_string())
                .chain([a.consistent.to_string(), a.supports_p4.to_string()])
                .collect()
        })
        .collect();
    let records = report.assignments.iter().map(record).collect::<Result<_>>()?;
    Ok(Artifacts {
        summary: format!("consistent_with_p4: {}", report.consistent_with_p4),
        document: record(&report)?,
        records,
        table: csv_rows(&["L1", "L2", "R1", "R2", "consistent", "supports_p4"], &rows)?,
        occupancy: None,
    })
}

fn hardy_assert(p: &Params, seed: RngSeed) -> Result<Artifacts> {
    let which: Right = p.str("which")?.parse().map_err(|e| Error::field("which", e))?;
    let inst = hardy_instance(p, seed)?;
    let verdict = check_assertion(&inst, which)?;
    let mut doc = record(&verdict)?;
    doc["which"] = record(&which)?;
    let chain = verdict.chain().join("; ");
    Ok(Artifacts {
        summary: format!("A({which:?}): {}", verdict.label()),
        records: vec![doc.clone()],
        document: doc,
        table: csv_rows(&["which", "verdict", "chain"], &[vec![format!("{which:?}"), verdict.label().into(), chain]])?,
        occupancy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_digits() {
        assert_eq!(fmt_summary(0.25), "0.25");
        assert_eq!(fmt_summary(0.9756269141438981), "0.975626914");
        assert_eq!(fmt_summary(0.0), "0");
    }

    #[test]
    fn missing_experiment_and_parameter() {
        let err = RunConfig::from_json("{}").unwrap_err();
        assert!(matches!(&err, Error::MissingField(f) if f == "experiment"));
        let err = RunConfig::from_json(r#"{"experiment": "zeno", "parameters": {"T": 1}}"#).unwrap_err();
        assert!(matches!(&err, Error::MissingField(f) if f == "parameters.hamiltonian"));
        let err = RunConfig::from_json(r#"{"experiment": "teleport"}"#).unwrap_err();
        assert!(matches!(err, Error::UnknownExperiment(_)));
        assert!(err.is_config_error());
    }

    #[test]
    fn plot_data_rejects_ragged_series() {
        let err = write_plot_data(&[("a", &[1.0, 2.0]), ("b", &[1.0])], Vec::new()).unwrap_err();
        assert!(matches!(err, Error::SeriesLength { expected: 2, found: 1, .. }));
        let mut buf = Vec::new();
        write_plot_data(&[("x", &[1.0, 2.0]), ("y", &[0.5, 0.25])], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y\n1,0.5\n2,0.25\n");
    }

    #[test]
    fn state_literals() {
        let s = parse_state("v", &json!([1, 1])).unwrap();
        assert!((s.amplitudes()[0].re - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let s = parse_state("v", &json!([[0, 1], [0, 0]])).unwrap();
        assert_eq!(s.amplitudes()[0], c(0.0, 1.0));
        let s = parse_state("v", &json!({"re": [0, 0], "im": [0, 2]})).unwrap();
        assert_eq!(s.amplitudes()[1], c(0.0, 1.0));
        assert!(parse_state("v", &json!([0, 0])).is_err());
    }
}
