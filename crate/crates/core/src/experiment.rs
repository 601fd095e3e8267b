//! Batch experiments: configured protocol runs, parameter sweeps and the
//! adversary statistics, rendered as JSON and CSV. No file I/O here.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::costly::DatasetJson;
use crate::distribution::ProductDistribution;
use crate::error::{Error, Result};
use crate::polynomial::OrthogonalBasis;
use crate::protocol::{
    combined_c, run_protocol, Agnostic, Family, GainKind, MonomialLearner, OracleMode, PolyLearner, ProtocolConfig, RunReport, TreeLearner, TreeVariant,
};
use crate::streams::{game_failure_rate, gen_adversary_stream, gen_monomial_stream, gen_poly_stream, gen_tree_stream, GameData, GameLearner, Regime, StreamSpec};
use crate::tree_learn::{bootstrap_count, TreeParams};

/// Bumped whenever a CSV column is added, removed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LifelongConfig {
    pub agnostic: Agnostic,
    /// For the combined protocol, derive `c` from `r`, `K`, `N` and `m`.
    pub auto_c: bool,
    pub bootstrap: usize,
    /// When set, the bootstrap length is computed from `p_min` and `delta`.
    pub p_min: Option<f64>,
    pub delta: f64,
    pub freeze_after_bootstrap: bool,
    pub gain: GainKind,
    /// Tree baseline whose representation is the set of features seen so far.
    pub naive_seen: bool,
    pub oracle: OracleMode,
}

impl Default for LifelongConfig {
    fn default() -> Self {
        LifelongConfig {
            agnostic: Agnostic::None,
            auto_c: false,
            bootstrap: 0,
            p_min: None,
            delta: 0.1,
            freeze_after_bootstrap: false,
            gain: GainKind::Teacher,
            naive_seen: false,
            oracle: OracleMode::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "m")]
    M,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "K")]
    K,
    #[serde(rename = "r")]
    R,
    #[serde(rename = "c")]
    C,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::M => "m",
            Axis::N => "N",
            Axis::K => "K",
            Axis::R => "r",
            Axis::C => "c",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Axis,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversaryConfig {
    pub pool: usize,
    pub samples: usize,
    /// Defaults to `{0, N'/4, N'/2, N'}`.
    pub budgets: Option<Vec<usize>>,
    pub trials: usize,
    pub regimes: Vec<Regime>,
}

impl Default for AdversaryConfig {
    fn default() -> Self {
        AdversaryConfig { pool: 100, samples: 1, budgets: None, trials: 2000, regimes: vec![Regime::Realizable] }
    }
}

impl AdversaryConfig {
    pub fn budgets(&self) -> Vec<usize> {
        self.budgets.clone().unwrap_or_else(|| vec![0, self.pool / 4, self.pool / 2, self.pool])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub stream: StreamSpec,
    pub protocol: LifelongConfig,
    pub trials: usize,
    /// Fail the run when any bound check or the probe envelope is violated.
    pub strict: bool,
    /// Multiplier on the envelope formula in strict mode.
    pub envelope_constant: f64,
    pub out_dir: Option<String>,
    pub sweep: Option<SweepConfig>,
    pub adversary: Option<AdversaryConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            stream: StreamSpec::default(),
            protocol: LifelongConfig::default(),
            trials: 1,
            strict: false,
            envelope_constant: 4.0,
            out_dir: None,
            sweep: None,
            adversary: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates. Syntax errors carry serde's line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        self.stream.validate()?;
        if !(self.envelope_constant.is_finite() && self.envelope_constant > 0.0) {
            return bad(format!("envelope_constant must be positive, got {}", self.envelope_constant));
        }
        if let Agnostic::Combined { c: 0 } = self.protocol.agnostic {
            if !self.protocol.auto_c {
                return bad("combined protocol needs c >= 1".into());
            }
        }
        if let Some(p) = self.protocol.p_min {
            if !(p > 0.0 && p <= 1.0) || !(self.protocol.delta > 0.0 && self.protocol.delta < 1.0) {
                return bad("need 0 < p_min <= 1 and 0 < delta < 1".into());
            }
        }
        if self.protocol.naive_seen && self.stream.family != Family::Trees {
            return bad("the seen-features baseline only runs on trees".into());
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return bad("sweep needs at least one value".into());
            }
            if sw.axis == Axis::C && !matches!(self.protocol.agnostic, Agnostic::Combined { .. }) {
                return bad("sweeping c needs the combined protocol".into());
            }
            for &v in &sw.values {
                self.with_axis(sw.axis, v).validate()?;
            }
        }
        if let Some(a) = &self.adversary {
            if a.pool == 0 || a.samples == 0 || a.trials == 0 {
                return bad("adversary needs pool, samples and trials >= 1".into());
            }
            if let Some(b) = a.budgets().iter().find(|&&b| b > a.pool * a.samples) {
                return bad(format!("budget {b} exceeds S*N'"));
            }
        }
        Ok(())
    }

    /// Copy with one swept parameter replaced; `strict`, output and sweep are kept.
    pub fn with_axis(&self, axis: Axis, v: usize) -> ExperimentConfig {
        let mut c = self.clone();
        c.sweep = None;
        match axis {
            Axis::M => c.stream.m = v,
            Axis::N => c.stream.n = v,
            Axis::K => c.stream.k = v,
            Axis::R => c.stream.r = v,
            Axis::C => {
                c.protocol.agnostic = Agnostic::Combined { c: v };
                c.protocol.auto_c = false;
            }
        }
        c
    }

    pub fn bootstrap(&self) -> usize {
        match self.protocol.p_min {
            Some(p) => bootstrap_count(p, self.protocol.delta, self.groups()),
            None => self.protocol.bootstrap,
        }
    }

    /// Metafeature groups the learner has to find.
    fn groups(&self) -> usize {
        match self.stream.family {
            Family::OvercompleteTrees => self.stream.k * self.stream.k1,
            _ => self.stream.k,
        }
    }

    pub fn agnostic(&self) -> Agnostic {
        let s = &self.stream;
        match self.protocol.agnostic {
            Agnostic::Combined { .. } if self.protocol.auto_c => Agnostic::Combined { c: combined_c(s.r, s.k, s.n, s.m) },
            a => a,
        }
    }

    fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig {
            k: self.stream.k,
            agnostic: self.agnostic(),
            bootstrap: self.bootstrap(),
            freeze_after_bootstrap: self.protocol.freeze_after_bootstrap,
            r: Some(self.stream.r),
        }
    }

    /// Probe envelope for one stream: scratch learns at `S*N` each plus one
    /// cheap attempt per task at the largest representation width.
    pub fn envelope(&self) -> f64 {
        let s = &self.stream;
        let k = self.groups();
        let r = s.r;
        let (width, scratch) = match self.agnostic() {
            Agnostic::None => (k, k + r + self.bootstrap()),
            Agnostic::Restart => (k + 1, (r + 1) * (k + 1)),
            Agnostic::Combined { c } => (k + c, (r / (c + 1) + 1) * (k + c + 1)),
            Agnostic::Expansion { cap } => (k + cap, k + cap + r),
        };
        let per_task = match s.family {
            Family::Monomials => width + s.d,
            Family::Polynomials => width + s.t * s.d,
            _ => width * s.d,
        };
        (s.samples * (scratch * s.n + (s.m + r) * per_task)) as f64
    }
}

/// Runs `f` on a pool of `jobs` threads, or rayon's default pool.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::Spec("--jobs must be at least 1".into())),
        Some(j) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(j).build().map_err(|e| Error::Spec(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// One seeded trial of the configured family and protocol.
pub fn run_trial(cfg: &ExperimentConfig, trial: u64) -> Result<RunReport> {
    let spec = &cfg.stream;
    let pc = cfg.protocol_config();
    match spec.family {
        Family::Monomials => {
            let mut st = gen_monomial_stream(spec, trial)?;
            let learner = MonomialLearner { dist: ProductDistribution::grid(spec.n, spec.grid_m)?, d: spec.d as u32, exact: cfg.protocol.oracle == OracleMode::Exact };
            run_protocol(&learner, &mut st.tasks, &pc)
        }
        Family::Polynomials => {
            let mut st = gen_poly_stream(spec, trial)?;
            let basis = Arc::new(OrthogonalBasis::build(&ProductDistribution::grid(1, spec.grid_m)?, spec.d as u32)?);
            let learner = PolyLearner { basis, d: spec.d as u32, t: spec.t, mode: cfg.protocol.oracle };
            run_protocol(&learner, &mut st.tasks, &pc)
        }
        family => {
            let mut st = gen_tree_stream(spec, trial)?;
            let variant = match family {
                Family::Lists => TreeVariant::Lists,
                Family::AnchorTrees => TreeVariant::Anchor,
                Family::OvercompleteTrees => TreeVariant::Overcomplete,
                _ if cfg.protocol.naive_seen => TreeVariant::NaiveSeen,
                _ => TreeVariant::Trees,
            };
            let mut learner = TreeLearner::new(TreeParams::new(spec.n, spec.d, spec.s)?, variant);
            learner.gain = cfg.protocol.gain;
            learner.k1 = spec.k1;
            run_protocol(&learner, &mut st.tasks, &pc)
        }
    }
}

fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<RunReport>> {
    // Collecting an indexed parallel iterator keeps trial order.
    (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(cfg, t)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskDump {
    pub good: bool,
    pub target: serde_json::Value,
    pub dataset: DatasetJson,
}

/// The generated tasks of every trial, targets included, for replay.
pub fn dump_streams(cfg: &ExperimentConfig) -> Result<Vec<Vec<TaskDump>>> {
    cfg.validate()?;
    let json = |v: serde_json::Result<serde_json::Value>| v.map_err(|e| Error::Parse(e.to_string()));
    (0..cfg.trials as u64)
        .map(|trial| match cfg.stream.family {
            Family::Monomials => gen_monomial_stream(&cfg.stream, trial)?
                .tasks
                .iter()
                .map(|t| Ok(TaskDump { good: t.good, target: json(serde_json::to_value(t.target.to_sparse()))?, dataset: t.dataset.to_json() }))
                .collect(),
            Family::Polynomials => gen_poly_stream(&cfg.stream, trial)?
                .tasks
                .iter()
                .map(|t| Ok(TaskDump { good: t.good, target: json(serde_json::to_value(t.target.to_json()))?, dataset: t.dataset.to_json() }))
                .collect(),
            _ => gen_tree_stream(&cfg.stream, trial)?
                .tasks
                .iter()
                .map(|t| Ok(TaskDump { good: t.good, target: json(serde_json::to_value(t.target.to_json()))?, dataset: t.dataset.to_json() }))
                .collect(),
        })
        .collect()
}

/// Strict-mode complaints for one trial.
fn violations(cfg: &ExperimentConfig, label: &str, rep: &RunReport) -> Vec<String> {
    let mut out: Vec<String> = rep.failed_checks().iter().map(|c| format!("{label}: check {c} failed")).collect();
    let cap = cfg.envelope_constant * cfg.envelope();
    if rep.totals.total_probes as f64 > cap {
        out.push(format!("{label}: {} probes exceed {} x envelope = {cap:.0}", rep.totals.total_probes, cfg.envelope_constant));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub schema_version: u32,
    pub family: String,
    pub trial: u64,
    pub task_index: usize,
    pub outcome: String,
    pub probes: usize,
    pub per_example_max: usize,
    pub rep_size: usize,
    pub restarts: usize,
    pub good: bool,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub envelope: f64,
    pub trials: Vec<RunReport>,
    pub violations: Vec<String>,
}

impl RunOutput {
    pub fn rows(&self) -> Vec<RunRow> {
        let mut rows = Vec::new();
        for (trial, rep) in self.trials.iter().enumerate() {
            for t in &rep.tasks {
                rows.push(RunRow {
                    schema_version: SCHEMA_VERSION,
                    family: rep.family.name().into(),
                    trial: trial as u64,
                    task_index: t.task_index,
                    outcome: t.outcome.name().into(),
                    probes: t.probes,
                    per_example_max: t.per_example_max,
                    rep_size: t.rep_size,
                    restarts: t.restart_epoch,
                    good: t.good,
                    envelope: self.envelope,
                });
            }
        }
        rows
    }
}

pub fn cmd_run(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let trials = run_trials(cfg)?;
    let violations = trials.iter().enumerate().flat_map(|(i, r)| violations(cfg, &format!("trial {i}"), r)).collect();
    Ok(RunOutput { schema_version: SCHEMA_VERSION, config: cfg.clone(), envelope: cfg.envelope(), trials, violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub family: String,
    pub axis: String,
    pub value: usize,
    pub trial: u64,
    pub total_probes: usize,
    pub good_probes: usize,
    pub scratch: usize,
    pub restarts: usize,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub violations: Vec<String>,
}

pub fn cmd_sweep(cfg: &ExperimentConfig) -> Result<SweepOutput> {
    cfg.validate()?;
    let sw = cfg.sweep.as_ref().ok_or_else(|| Error::Spec("config has no sweep section".into()))?;
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for &v in &sw.values {
        let point = cfg.with_axis(sw.axis, v);
        let env = point.envelope();
        for (trial, rep) in run_trials(&point)?.into_iter().enumerate() {
            bad.extend(violations(&point, &format!("{}={v} trial {trial}", sw.axis.name()), &rep));
            rows.push(SweepRow {
                schema_version: SCHEMA_VERSION,
                family: rep.family.name().into(),
                axis: sw.axis.name().into(),
                value: v,
                trial: trial as u64,
                total_probes: rep.totals.total_probes,
                good_probes: rep.totals.probes_on_good_targets,
                scratch: rep.totals.scratch_count,
                restarts: rep.restarts,
                envelope: env,
            });
        }
    }
    Ok(SweepOutput { schema_version: SCHEMA_VERSION, config: cfg.clone(), rows, violations: bad })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRow {
    pub schema_version: u32,
    pub learner: GameLearner,
    pub data: GameData,
    pub budget: usize,
    pub trials: usize,
    pub failure_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// `(N' - B - 1) / N'`, floored at zero.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeRow {
    pub schema_version: u32,
    pub regime: Regime,
    pub trial: u64,
    pub tasks: usize,
    pub total_probes: usize,
    pub good_probes: usize,
    pub scratch: usize,
    pub restarts: usize,
    /// `S (K N + m K)`.
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversaryOutput {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub game: Vec<GameRow>,
    pub regimes: Vec<RegimeRow>,
    pub violations: Vec<String>,
}

/// 95% Wilson interval for `k` successes out of `n`.
pub fn wilson(k: usize, n: usize) -> (f64, f64) {
    let z = 1.96f64;
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let denom = 1.0 + z * z / n;
    let mid = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    ((mid - half).max(0.0), (mid + half).min(1.0))
}

pub fn cmd_adversary(cfg: &ExperimentConfig) -> Result<AdversaryOutput> {
    cfg.validate()?;
    let adv = cfg.adversary.clone().unwrap_or_default();
    let s = &cfg.stream;
    let mut cases = Vec::new();
    for learner in [GameLearner::Blind, GameLearner::Scan, GameLearner::Consistent] {
        for data in [GameData::RandomBits, GameData::OneHot] {
            for b in adv.budgets() {
                cases.push((learner, data, b));
            }
        }
    }
    let game = cases
        .par_iter()
        .map(|&(learner, data, budget)| {
            let rate = game_failure_rate(learner, data, budget, adv.pool, adv.samples, adv.trials, s.seed)?;
            let lost = (rate * adv.trials as f64).round() as usize;
            let (ci_low, ci_high) = wilson(lost, adv.trials);
            let bound = (adv.pool as f64 - budget as f64 - 1.0).max(0.0) / adv.pool as f64;
            Ok(GameRow { schema_version: SCHEMA_VERSION, learner, data, budget, trials: adv.trials, failure_rate: rate, ci_low, ci_high, bound })
        })
        .collect::<Result<Vec<_>>>()?;

    let pc = ProtocolConfig { bootstrap: 0, freeze_after_bootstrap: false, ..cfg.protocol_config() };
    let learner = TreeLearner::new(TreeParams::new(s.n, 1, 1)?, TreeVariant::Trees);
    let mut regimes = Vec::new();
    let mut bad = Vec::new();
    for &regime in &adv.regimes {
        let reps = (0..cfg.trials as u64)
            .into_par_iter()
            .map(|trial| {
                let mut tasks = gen_adversary_stream(regime, s.n, s.k, s.m, s.r, s.samples, s.seed, trial)?;
                let n_tasks = tasks.len();
                run_protocol(&learner, &mut tasks, &pc).map(|rep| (n_tasks, rep))
            })
            .collect::<Result<Vec<_>>>()?;
        for (trial, (n_tasks, rep)) in reps.into_iter().enumerate() {
            bad.extend(rep.failed_checks().iter().map(|c| format!("{regime:?} trial {trial}: check {c} failed")));
            regimes.push(RegimeRow {
                schema_version: SCHEMA_VERSION,
                regime,
                trial: trial as u64,
                tasks: n_tasks,
                total_probes: rep.totals.total_probes,
                good_probes: rep.totals.probes_on_good_targets,
                scratch: rep.totals.scratch_count,
                restarts: rep.restarts,
                envelope: (s.samples * (s.k * s.n + s.m * s.k)) as f64,
            });
        }
    }
    Ok(AdversaryOutput { schema_version: SCHEMA_VERSION, config: cfg.clone(), game, regimes, violations: bad })
}

/// Serializes rows with a header taken from the row type's field names.
pub fn to_csv<R: Serialize>(rows: &[R], header: &[&str]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Parse(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub const RUN_HEADER: [&str; 11] = ["schema_version", "family", "trial", "task_index", "outcome", "probes", "per_example_max", "rep_size", "restarts", "good", "envelope"];
pub const SWEEP_HEADER: [&str; 10] = ["schema_version", "family", "axis", "value", "trial", "total_probes", "good_probes", "scratch", "restarts", "envelope"];
pub const GAME_HEADER: [&str; 9] = ["schema_version", "learner", "data", "budget", "trials", "failure_rate", "ci_low", "ci_high", "bound"];
pub const REGIME_HEADER: [&str; 9] = ["schema_version", "regime", "trial", "tasks", "total_probes", "good_probes", "scratch", "restarts", "envelope"];
