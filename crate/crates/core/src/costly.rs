//! Metered training data. Every feature read goes through [`CostlyDataset::probe`];
//! labels are free.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{usage, Error, Result};
use crate::rational::{format_q, parse_q, Q};

/// Boolean label of a tree/list task. `Pos` is `+`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn symbol(self) -> &'static str {
        match self {
            Label::Pos => "+",
            Label::Neg => "-",
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }
}

impl From<bool> for Label {
    fn from(b: bool) -> Self {
        if b {
            Label::Pos
        } else {
            Label::Neg
        }
    }
}

/// A grid rational `n / m`, with `m` the grid resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridValue {
    pub n: u64,
    pub m: u64,
}

impl GridValue {
    pub fn to_q(self) -> Q {
        Q::new(self.n.into(), self.m.into())
    }

    pub fn to_f64(self) -> f64 {
        self.n as f64 / self.m as f64
    }

    pub fn ln(self) -> f64 {
        (self.n as f64).ln() - (self.m as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeLedger {
    n_features: usize,
    probed: Vec<bool>,
    total: usize,
    per_example: Vec<usize>,
}

impl ProbeLedger {
    pub fn new(n_examples: usize, n_features: usize) -> Self {
        ProbeLedger {
            n_features,
            probed: vec![false; n_examples * n_features],
            total: 0,
            per_example: vec![0; n_examples],
        }
    }

    fn record(&mut self, e: usize, i: usize) {
        let cell = e * self.n_features + i;
        if !self.probed[cell] {
            self.probed[cell] = true;
            self.total += 1;
            self.per_example[e] += 1;
        }
    }

    pub fn total_probes(&self) -> usize {
        self.total
    }

    pub fn per_example_probes(&self) -> &[usize] {
        &self.per_example
    }

    pub fn max_per_example(&self) -> usize {
        self.per_example.iter().copied().max().unwrap_or(0)
    }

    pub fn is_probed(&self, e: usize, i: usize) -> bool {
        self.probed[e * self.n_features + i]
    }

    /// Probed cells in row-major order.
    pub fn probed_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n_features;
        self.probed.iter().enumerate().filter(|(_, &p)| p).map(move |(c, _)| (c / n, c % n))
    }
}

#[derive(Debug, Clone)]
pub struct CostlyDataset<V, L> {
    n_features: usize,
    values: Vec<V>,
    labels: Vec<L>,
    ledger: ProbeLedger,
}

pub type BoolDataset = CostlyDataset<bool, Label>;
pub type GridDataset = CostlyDataset<GridValue, Q>;

impl<V: Copy, L> CostlyDataset<V, L> {
    pub fn new(n_features: usize, rows: Vec<Vec<V>>, labels: Vec<L>) -> Result<Self> {
        if n_features == 0 {
            return usage("dataset needs at least one feature");
        }
        if rows.is_empty() {
            return usage("dataset needs at least one example");
        }
        if rows.len() != labels.len() {
            return usage(format!("{} examples but {} labels", rows.len(), labels.len()));
        }
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for (e, row) in rows.into_iter().enumerate() {
            if row.len() != n_features {
                return usage(format!("example {e} has {} features, expected {n_features}", row.len()));
            }
            values.extend(row);
        }
        let ledger = ProbeLedger::new(labels.len(), n_features);
        Ok(CostlyDataset { n_features, values, labels, ledger })
    }

    pub fn n_examples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[L] {
        &self.labels
    }

    pub fn label(&self, e: usize) -> &L {
        &self.labels[e]
    }

    pub fn probe(&mut self, e: usize, i: usize) -> Result<V> {
        if e >= self.n_examples() || i >= self.n_features {
            return usage(format!(
                "probe ({e},{i}) outside {}x{} dataset",
                self.n_examples(),
                self.n_features
            ));
        }
        self.ledger.record(e, i);
        Ok(self.values[e * self.n_features + i])
    }

    /// Probes every cell and returns the row-major matrix.
    pub fn probe_all(&mut self) -> &[V] {
        for e in 0..self.n_examples() {
            for i in 0..self.n_features {
                self.ledger.record(e, i);
            }
        }
        &self.values
    }

    pub fn ledger(&self) -> &ProbeLedger {
        &self.ledger
    }

    pub fn reset_ledger(&mut self) {
        self.ledger = ProbeLedger::new(self.n_examples(), self.n_features);
    }

    /// Unmetered row access for harness audits (label reproduction, soundness
    /// checks). Learners never call this.
    pub fn audit_row(&self, e: usize) -> &[V] {
        &self.values[e * self.n_features..(e + 1) * self.n_features]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEntry {
    pub task_index: usize,
    pub probes: usize,
    pub learned_from_scratch: bool,
    pub per_example_max_probes: usize,
    pub good: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub total_probes: usize,
    pub probes_on_good_targets: usize,
    pub scratch_count: usize,
    pub restart_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub per_task: Vec<TaskEntry>,
    pub totals: Totals,
}

pub fn report(ledgers: &[ProbeLedger], scratch: &[bool], good: &[bool]) -> Result<EvaluationReport> {
    if ledgers.len() != scratch.len() || ledgers.len() != good.len() {
        return usage(format!(
            "report lists differ in length: {} ledgers, {} scratch flags, {} good flags",
            ledgers.len(),
            scratch.len(),
            good.len()
        ));
    }
    let mut out = EvaluationReport::default();
    for (j, l) in ledgers.iter().enumerate() {
        out.per_task.push(TaskEntry {
            task_index: j,
            probes: l.total_probes(),
            learned_from_scratch: scratch[j],
            per_example_max_probes: l.max_per_example(),
            good: good[j],
        });
        out.totals.total_probes += l.total_probes();
        if good[j] {
            out.totals.probes_on_good_targets += l.total_probes();
        }
        out.totals.scratch_count += scratch[j] as usize;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    Bool,
    Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetJson {
    pub n_features: usize,
    pub examples: Vec<Vec<Value>>,
    pub labels: Vec<Value>,
    pub value_kind: ValueKind,
}

impl BoolDataset {
    pub fn to_json(&self) -> DatasetJson {
        DatasetJson {
            n_features: self.n_features,
            examples: (0..self.n_examples())
                .map(|e| self.audit_row(e).iter().map(|&b| Value::Bool(b)).collect())
                .collect(),
            labels: self.labels.iter().map(|&l| Value::Bool(l == Label::Pos)).collect(),
            value_kind: ValueKind::Bool,
        }
    }

    pub fn from_json(j: &DatasetJson) -> Result<Self> {
        if j.value_kind != ValueKind::Bool {
            return usage("expected value_kind \"bool\"");
        }
        let as_bool = |v: &Value| v.as_bool().ok_or_else(|| Error::Parse(format!("expected boolean, got {v}")));
        let rows = j
            .examples
            .iter()
            .map(|r| r.iter().map(as_bool).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let labels = j.labels.iter().map(|v| as_bool(v).map(Label::from)).collect::<Result<Vec<_>>>()?;
        Self::new(j.n_features, rows, labels)
    }
}

impl GridDataset {
    pub fn to_json(&self) -> DatasetJson {
        DatasetJson {
            n_features: self.n_features,
            examples: (0..self.n_examples())
                .map(|e| self.audit_row(e).iter().map(|v| Value::String(format_q(&v.to_q()))).collect())
                .collect(),
            labels: self.labels.iter().map(|l| Value::String(format_q(l))).collect(),
            value_kind: ValueKind::Rational,
        }
    }

    /// Loads rational features onto the grid `1/m` where `m` is the lcm of
    /// all feature denominators.
    pub fn from_json(j: &DatasetJson) -> Result<Self> {
        use num_integer::Integer;
        use num_traits::ToPrimitive;
        if j.value_kind != ValueKind::Rational {
            return usage("expected value_kind \"rational\"");
        }
        let as_q = |v: &Value| match v {
            Value::String(s) => parse_q(s),
            _ => Err(Error::Parse(format!("expected \"p/q\" string, got {v}"))),
        };
        let qs = j
            .examples
            .iter()
            .map(|r| r.iter().map(as_q).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut m = num_bigint::BigInt::from(1);
        for x in qs.iter().flatten() {
            m = m.lcm(x.denom());
        }
        let m64 = m.to_u64().ok_or_else(|| Error::Parse("grid denominator exceeds u64".into()))?;
        let rows = qs
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| {
                        let n = (x * Q::from_integer(m.clone())).to_integer();
                        let n = n.to_u64().ok_or_else(|| Error::Parse("negative or huge feature value".into()))?;
                        Ok(GridValue { n, m: m64 })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let labels = j.labels.iter().map(as_q).collect::<Result<Vec<_>>>()?;
        Self::new(j.n_features, rows, labels)
    }
}
