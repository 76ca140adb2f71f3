//! Certificate reports: verdicts, margins, and reproducible witnesses.
//!
//! Reports serialize to JSON with sorted keys (serde_json maps) and a stable
//! encoding of non-finite floats, so identical runs produce byte-identical
//! payloads regardless of thread count.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "CERTIFIED_ON_SAMPLES")]
    Certified,
    #[serde(rename = "REFUTED")]
    Refuted,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Certified => "CERTIFIED_ON_SAMPLES",
            Verdict::Refuted => "REFUTED",
        }
    }
}

/// One tested inequality instance: the inputs that produced it and both sides.
#[derive(Debug, Clone)]
pub struct Witness {
    pub inputs: Map<String, Value>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Witness {
    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("inputs".into(), Value::Object(self.inputs.clone()));
        m.insert("lhs".into(), json_num(self.lhs));
        m.insert("rhs".into(), json_num(self.rhs));
        m.insert("slack".into(), json_num(self.slack));
        Value::Object(m)
    }
}

/// Outcome of one certifier run over a sample set.
#[derive(Debug, Clone)]
pub struct CertificateReport {
    /// Which check produced this report (snake_case identifier).
    pub check: String,
    pub verdict: Verdict,
    /// True when the sample set was empty: the verdict is then CERTIFIED by
    /// vacuity and must be read with that flag.
    pub vacuous: bool,
    /// Minimum slack across all tested inequalities; None when vacuous.
    pub margin: Option<f64>,
    /// Worst cases, most negative slack first.
    pub witnesses: Vec<Witness>,
    /// Echo of the run parameters (window, plan, sigma, lambda, tolerances).
    pub params: Map<String, Value>,
    pub notes: Vec<String>,
}

impl CertificateReport {
    pub fn is_certified(&self) -> bool {
        self.verdict == Verdict::Certified
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        m.insert("check".into(), Value::String(self.check.clone()));
        m.insert("verdict".into(), Value::String(self.verdict.as_str().into()));
        m.insert("vacuous".into(), Value::Bool(self.vacuous));
        m.insert(
            "margin".into(),
            self.margin.map(json_num).unwrap_or(Value::Null),
        );
        m.insert(
            "witnesses".into(),
            Value::Array(self.witnesses.iter().map(Witness::to_json).collect()),
        );
        m.insert("params".into(), Value::Object(self.params.clone()));
        m.insert(
            "notes".into(),
            Value::Array(self.notes.iter().cloned().map(Value::String).collect()),
        );
        Value::Object(m)
    }
}

/// How many worst cases a report retains.
const WITNESS_CAP: usize = 5;

/// Streaming min-slack collector. Feed every tested inequality; it keeps the
/// global margin and the worst few witnesses, then renders the report.
/// Merging accumulators in a fixed order keeps parallel scans deterministic.
#[derive(Debug)]
pub struct SlackAccumulator {
    check: String,
    tol: f64,
    count: usize,
    margin: f64,
    worst: Vec<(f64, Witness)>,
    notes: Vec<String>,
    params: Map<String, Value>,
}

impl SlackAccumulator {
    pub fn new(check: impl Into<String>, tol: f64) -> Self {
        SlackAccumulator {
            check: check.into(),
            tol,
            count: 0,
            margin: f64::INFINITY,
            worst: Vec::new(),
            notes: Vec::new(),
            params: Map::new(),
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Record one inequality with slack = lhs - rhs (certified when >= -tol).
    /// The witness closure runs only if this slack is among the worst seen.
    pub fn push(&mut self, slack: f64, witness: impl FnOnce() -> Witness) {
        self.count += 1;
        if slack < self.margin {
            self.margin = slack;
        }
        let needs_witness =
            self.worst.len() < WITNESS_CAP || slack < self.worst.last().map(|(s, _)| *s).unwrap();
        if needs_witness {
            let w = witness();
            let pos = self
                .worst
                .iter()
                .position(|(s, _)| slack < *s)
                .unwrap_or(self.worst.len());
            self.worst.insert(pos, (slack, w));
            self.worst.truncate(WITNESS_CAP);
        }
    }

    /// Fold another accumulator into this one (parallel shard merge); call in
    /// a fixed shard order for deterministic witness tie-breaking.
    pub fn merge(&mut self, other: SlackAccumulator) {
        self.count += other.count;
        if other.margin < self.margin {
            self.margin = other.margin;
        }
        for (slack, w) in other.worst {
            let at_cap = self.worst.len() >= WITNESS_CAP;
            let keep = !at_cap || slack < self.worst.last().map(|(s, _)| *s).unwrap();
            if keep {
                let pos = self
                    .worst
                    .iter()
                    .position(|(s, _)| slack < *s)
                    .unwrap_or(self.worst.len());
                self.worst.insert(pos, (slack, w));
                self.worst.truncate(WITNESS_CAP);
            }
        }
        self.notes.extend(other.notes);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        self.notes.push(msg.into());
    }

    pub fn param(&mut self, key: &str, value: Value) {
        self.params.insert(key.into(), value);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn current_margin(&self) -> Option<f64> {
        if self.count == 0 {
            None
        } else {
            Some(self.margin)
        }
    }

    pub fn finish(mut self) -> CertificateReport {
        let vacuous = self.count == 0;
        let margin = self.current_margin();
        let verdict = match margin {
            Some(m) if m < -self.tol => Verdict::Refuted,
            _ => Verdict::Certified,
        };
        if vacuous {
            self.notes.push("no samples satisfied the localization filters; verdict is vacuous".into());
        }
        self.params.insert("tol".into(), json_num(self.tol));
        CertificateReport {
            check: self.check,
            verdict,
            vacuous,
            margin,
            witnesses: self.worst.into_iter().map(|(_, w)| w).collect(),
            params: self.params,
            notes: self.notes,
        }
    }

    /// Strict variant: certified only when margin > tol (definiteness checks
    /// where a zero margin is a refutation, not a tie).
    pub fn finish_strict_positive(mut self) -> CertificateReport {
        let vacuous = self.count == 0;
        let margin = self.current_margin();
        let verdict = match margin {
            Some(m) if m > self.tol => Verdict::Certified,
            Some(_) => Verdict::Refuted,
            None => Verdict::Certified,
        };
        if vacuous {
            self.notes.push("no samples satisfied the localization filters; verdict is vacuous".into());
        }
        self.notes.push("strict rule: certified only when margin > tol".into());
        self.params.insert("tol".into(), json_num(self.tol));
        CertificateReport {
            check: self.check,
            verdict,
            vacuous,
            margin,
            witnesses: self.worst.into_iter().map(|(_, w)| w).collect(),
            params: self.params,
            notes: self.notes,
        }
    }
}

/// f64 -> JSON number; non-finite values become the strings "inf", "-inf",
/// "nan" (serde_json would silently emit null).
pub fn json_num(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None => Value::String(
            if x.is_nan() {
                "nan"
            } else if x > 0.0 {
                "inf"
            } else {
                "-inf"
            }
            .into(),
        ),
    }
}

/// Vector -> JSON array with the same non-finite encoding.
pub fn json_vec(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| json_num(*x)).collect())
}

/// Convenience builder for witness input maps.
pub fn witness_inputs(entries: &[(&str, Value)]) -> Map<String, Value> {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert((*k).into(), v.clone());
    }
    m
}
