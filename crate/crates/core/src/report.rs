//! Suite reports and their deterministic serialisation.

use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Counterexample payloads kept per suite; the counts are always complete.
pub const MAX_COUNTEREXAMPLES: usize = 8;

/// Rounds to 6 decimals so artifacts are stable across platforms.
pub fn r6(x: f64) -> f64 {
    if x.is_finite() {
        let r = (x * 1e6).round() / 1e6;
        if r == 0.0 {
            0.0
        } else {
            r
        }
    } else {
        x
    }
}

/// JSON number rounded to 6 decimals; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::json!(r6(x))
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String(format!("{x}"))
    }
}

/// Rounds every float inside a JSON value.
pub fn round_floats(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap()),
        Value::Array(a) => Value::Array(a.into_iter().map(round_floats).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_floats(v))).collect()),
        other => other,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub group: String,
    pub status: Status,
    pub instances: u64,
    pub pass: u64,
    pub fail: u64,
    pub inconclusive: u64,
    /// Inputs of failing (or inconclusive) instances, enough to rerun one alone.
    pub counterexamples: Vec<Value>,
    /// Suite-specific measurements, floats rounded.
    pub details: Value,
}

/// Accumulates verdicts for one suite.
#[derive(Debug, Default)]
pub struct Tally {
    pub pass: u64,
    pub fail: u64,
    pub inconclusive: u64,
    pub counterexamples: Vec<Value>,
    pub details: serde_json::Map<String, Value>,
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records one instance; `payload` is only built on failure.
    pub fn check(&mut self, ok: bool, payload: impl FnOnce() -> Value) -> bool {
        if ok {
            self.pass += 1;
        } else {
            self.fail += 1;
            self.keep(payload());
        }
        ok
    }

    pub fn undecided(&mut self, payload: impl FnOnce() -> Value) {
        self.inconclusive += 1;
        self.keep(payload());
    }

    fn keep(&mut self, payload: Value) {
        if self.counterexamples.len() < MAX_COUNTEREXAMPLES {
            self.counterexamples.push(round_floats(payload));
        }
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("serialisable detail");
        self.details.insert(key.to_string(), round_floats(v));
    }

    pub fn finish(self, suite: &str, group: &str) -> SuiteReport {
        let status = if self.fail > 0 {
            Status::Fail
        } else if self.inconclusive > 0 || self.pass == 0 {
            Status::Inconclusive
        } else {
            Status::Pass
        };
        SuiteReport {
            suite: suite.to_string(),
            group: group.to_string(),
            status,
            instances: self.pass + self.fail + self.inconclusive,
            pass: self.pass,
            fail: self.fail,
            inconclusive: self.inconclusive,
            counterexamples: self.counterexamples,
            details: Value::Object(self.details),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub suites: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
}

/// Everything `verify` writes, minus wall-clock times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub budget: String,
    pub selection: String,
    pub summary: Summary,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn new(seed: u64, budget: &str, selection: &str, mut suites: Vec<SuiteReport>) -> Self {
        suites.sort_by(|a, b| (&a.group, &a.suite).cmp(&(&b.group, &b.suite)));
        let count = |s: Status| suites.iter().filter(|r| r.status == s).count();
        VerifyReport {
            seed,
            budget: budget.to_string(),
            selection: selection.to_string(),
            summary: Summary {
                suites: suites.len(),
                pass: count(Status::Pass),
                fail: count(Status::Fail),
                inconclusive: count(Status::Inconclusive),
            },
            suites,
        }
    }

    /// 0 all pass, 1 any failure, 2 inconclusive but no failure.
    pub fn exit_code(&self) -> i32 {
        if self.summary.fail > 0 {
            1
        } else if self.summary.inconclusive > 0 {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding() {
        assert_eq!(r6(0.1234567), 0.123457);
        assert_eq!(r6(-1e-9), 0.0);
        assert_eq!(num(f64::INFINITY), json!("inf"));
        assert_eq!(round_floats(json!({"a": [1.0000004, 2]})), json!({"a": [1.0, 2]}));
    }

    #[test]
    fn tally_status() {
        let mut t = Tally::new();
        t.check(true, || json!(null));
        assert_eq!(t.finish("s", "g").status, Status::Pass);
        let mut t = Tally::new();
        t.check(true, || json!(null));
        t.undecided(|| json!("why"));
        let r = t.finish("s", "g");
        assert_eq!((r.status, r.instances, r.counterexamples.len()), (Status::Inconclusive, 2, 1));
        let mut t = Tally::new();
        for _ in 0..20 {
            t.check(false, || json!(1));
        }
        let r = t.finish("s", "g");
        assert_eq!((r.status, r.fail, r.counterexamples.len()), (Status::Fail, 20, MAX_COUNTEREXAMPLES));
        assert_eq!(Tally::new().finish("s", "g").status, Status::Inconclusive);
    }

    #[test]
    fn exit_codes() {
        let mk = |s| SuiteReport {
            suite: "x".into(),
            group: "g".into(),
            status: s,
            instances: 1,
            pass: 0,
            fail: 0,
            inconclusive: 0,
            counterexamples: vec![],
            details: json!({}),
        };
        assert_eq!(VerifyReport::new(1, "tiny", "all", vec![mk(Status::Pass)]).exit_code(), 0);
        assert_eq!(VerifyReport::new(1, "tiny", "all", vec![mk(Status::Pass), mk(Status::Inconclusive)]).exit_code(), 2);
        assert_eq!(VerifyReport::new(1, "tiny", "all", vec![mk(Status::Fail), mk(Status::Inconclusive)]).exit_code(), 1);
    }
}
