//! `MetricsReport` and its two serialisations: `key: value` text and a JSON
//! object with the same flat field names.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::{Map, Value};

use super::metrics::ChannelPeak;
use super::MetricsError;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub scenario: String,
    /// Scenario family; only reports of one family are comparable.
    pub family: String,
    pub observer: String,
    pub itae: f64,
    /// `∫ u² dt` over the saturated plant input.
    pub isu: f64,
    /// Same integral over the command before the limiter.
    pub isu_command: f64,
    pub peaks: BTreeMap<String, ChannelPeak>,
    /// Per channel: (first entry into the 2% band, time after which it stays inside).
    pub settling: BTreeMap<String, (Option<f64>, Option<f64>)>,
    /// First time `|x1 − x̂1| < 1e-3`.
    pub e1_small_time: Option<f64>,
    /// Settling-time upper bound from `V₀ = e₁(0)²/2`.
    pub e1_bound: Option<f64>,
    pub diverged: bool,
    pub rows: usize,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReportValue {
    Text(String),
    Number(f64),
    Integer(u64),
    Bool(bool),
    Missing,
}

impl ReportValue {
    fn render(&self) -> String {
        match self {
            ReportValue::Text(s) => s.clone(),
            ReportValue::Number(x) => format!("{x:?}"),
            ReportValue::Integer(n) => n.to_string(),
            ReportValue::Bool(b) => b.to_string(),
            ReportValue::Missing => "none".into(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            ReportValue::Text(s) => Value::String(s.clone()),
            ReportValue::Number(x) => match serde_json::Number::from_f64(*x) {
                Some(n) => Value::Number(n),
                None => Value::String(format!("{x:?}")),
            },
            ReportValue::Integer(n) => Value::from(*n),
            ReportValue::Bool(b) => Value::Bool(*b),
            ReportValue::Missing => Value::Null,
        }
    }
}

const TEXT_FIELDS: [&str; 3] = ["scenario", "family", "observer"];

fn opt(x: Option<f64>) -> ReportValue {
    x.map_or(ReportValue::Missing, ReportValue::Number)
}

impl MetricsReport {
    /// Flat `(name, value)` list shared by both output formats.
    pub fn fields(&self) -> Vec<(String, ReportValue)> {
        let mut f = vec![
            ("scenario".to_string(), ReportValue::Text(self.scenario.clone())),
            ("family".into(), ReportValue::Text(self.family.clone())),
            ("observer".into(), ReportValue::Text(self.observer.clone())),
            ("itae".into(), ReportValue::Number(self.itae)),
            ("isu".into(), ReportValue::Number(self.isu)),
            ("isu_command".into(), ReportValue::Number(self.isu_command)),
            ("diverged".into(), ReportValue::Bool(self.diverged)),
            ("rows".into(), ReportValue::Integer(self.rows as u64)),
            ("t_end".into(), ReportValue::Number(self.t_end)),
            ("e1_small_time".into(), opt(self.e1_small_time)),
            ("e1_bound".into(), opt(self.e1_bound)),
        ];
        for (name, p) in &self.peaks {
            f.push((format!("peak.{name}.min"), ReportValue::Number(p.min)));
            f.push((format!("peak.{name}.t_min"), ReportValue::Number(p.t_min)));
            f.push((format!("peak.{name}.max"), ReportValue::Number(p.max)));
            f.push((format!("peak.{name}.t_max"), ReportValue::Number(p.t_max)));
        }
        for (name, (entry, fin)) in &self.settling {
            f.push((format!("settling.{name}.entry"), opt(*entry)));
            f.push((format!("settling.{name}.final"), opt(*fin)));
        }
        f
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}: {}", v.render());
        }
        out
    }

    pub fn to_json(&self) -> String {
        let map: Map<String, Value> = self.fields().into_iter().map(|(k, v)| (k, v.to_json())).collect();
        serde_json::to_string_pretty(&Value::Object(map)).expect("report serialises") + "\n"
    }

    /// Parses either format; JSON is recognised by a leading `{`.
    pub fn parse(text: &str) -> Result<Self, MetricsError> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::from_text(text)
        }
    }

    pub fn from_text(text: &str) -> Result<Self, MetricsError> {
        let mut fields = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line.split_once(": ").ok_or_else(|| MetricsError::Report {
                field: line.to_string(),
                reason: "expected 'name: value'".into(),
            })?;
            let k = k.trim();
            let value = if TEXT_FIELDS.contains(&k) {
                ReportValue::Text(v.to_string())
            } else {
                match v.trim() {
                    "none" => ReportValue::Missing,
                    "true" => ReportValue::Bool(true),
                    "false" => ReportValue::Bool(false),
                    s if k == "rows" => ReportValue::Integer(s.parse().map_err(|_| MetricsError::Report {
                        field: k.to_string(),
                        reason: format!("not a row count: '{s}'"),
                    })?),
                    s => ReportValue::Number(s.parse().map_err(|_| MetricsError::Report {
                        field: k.to_string(),
                        reason: format!("not a number: '{s}'"),
                    })?),
                }
            };
            fields.push((k.to_string(), value));
        }
        Self::from_fields(fields)
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| MetricsError::Report { field: "<document>".into(), reason: e.to_string() })?;
        let Value::Object(map) = value else {
            return Err(MetricsError::Report { field: "<document>".into(), reason: "expected an object".into() });
        };
        let mut fields = Vec::new();
        for (k, v) in map {
            let value = match v {
                Value::Null => ReportValue::Missing,
                Value::Bool(b) => ReportValue::Bool(b),
                Value::Number(n) if k == "rows" => match n.as_u64() {
                    Some(n) => ReportValue::Integer(n),
                    None => return Err(MetricsError::Report { field: k, reason: "expected a row count".into() }),
                },
                Value::Number(n) => ReportValue::Number(n.as_f64().unwrap_or(f64::NAN)),
                Value::String(s) if TEXT_FIELDS.contains(&k.as_str()) => ReportValue::Text(s),
                Value::String(s) => {
                    ReportValue::Number(s.parse().map_err(|_| MetricsError::Report {
                        field: k.clone(),
                        reason: format!("not a number: '{s}'"),
                    })?)
                }
                other => return Err(MetricsError::Report { field: k, reason: format!("unexpected value {other}") }),
            };
            fields.push((k, value));
        }
        Self::from_fields(fields)
    }

    pub fn from_fields(fields: Vec<(String, ReportValue)>) -> Result<Self, MetricsError> {
        let bad = |field: &str, reason: &str| MetricsError::Report { field: field.to_string(), reason: reason.into() };
        let mut r = MetricsReport {
            scenario: String::new(),
            family: String::new(),
            observer: String::new(),
            itae: f64::NAN,
            isu: f64::NAN,
            isu_command: f64::NAN,
            peaks: BTreeMap::new(),
            settling: BTreeMap::new(),
            e1_small_time: None,
            e1_bound: None,
            diverged: false,
            rows: 0,
            t_end: 0.0,
        };
        let mut seen = std::collections::BTreeSet::new();
        let mut peaks: BTreeMap<String, [Option<f64>; 4]> = BTreeMap::new();
        for (k, v) in fields {
            let num = || match v {
                ReportValue::Number(x) => Ok(x),
                _ => Err(bad(&k, "expected a number")),
            };
            let opt_num = || match v {
                ReportValue::Number(x) => Ok(Some(x)),
                ReportValue::Missing => Ok(None),
                _ => Err(bad(&k, "expected a number or none")),
            };
            let text = || match &v {
                ReportValue::Text(s) => Ok(s.clone()),
                _ => Err(bad(&k, "expected text")),
            };
            match k.as_str() {
                "scenario" => r.scenario = text()?,
                "family" => r.family = text()?,
                "observer" => r.observer = text()?,
                "itae" => r.itae = num()?,
                "isu" => r.isu = num()?,
                "isu_command" => r.isu_command = num()?,
                "rows" => match v {
                    ReportValue::Integer(n) => r.rows = n as usize,
                    ReportValue::Number(x) if x >= 0.0 && x.fract() == 0.0 => r.rows = x as usize,
                    _ => return Err(bad(&k, "expected a row count")),
                },
                "t_end" => r.t_end = num()?,
                "e1_small_time" => r.e1_small_time = opt_num()?,
                "e1_bound" => r.e1_bound = opt_num()?,
                "diverged" => match v {
                    ReportValue::Bool(b) => r.diverged = b,
                    _ => return Err(bad(&k, "expected true or false")),
                },
                _ => {
                    let parts: Vec<&str> = k.split('.').collect();
                    match parts.as_slice() {
                        ["peak", ch, which] => {
                            let slot = match *which {
                                "min" => 0,
                                "t_min" => 1,
                                "max" => 2,
                                "t_max" => 3,
                                _ => return Err(bad(&k, "unknown field")),
                            };
                            peaks.entry(ch.to_string()).or_default()[slot] = Some(num()?);
                        }
                        ["settling", ch, which] => {
                            let entry = r.settling.entry(ch.to_string()).or_default();
                            match *which {
                                "entry" => entry.0 = opt_num()?,
                                "final" => entry.1 = opt_num()?,
                                _ => return Err(bad(&k, "unknown field")),
                            }
                        }
                        _ => return Err(bad(&k, "unknown field")),
                    }
                }
            }
            seen.insert(k);
        }
        for required in ["scenario", "family", "itae", "isu", "isu_command", "diverged"] {
            if !seen.contains(required) {
                return Err(bad(required, "missing"));
            }
        }
        for (ch, slots) in peaks {
            match slots {
                [Some(min), Some(t_min), Some(max), Some(t_max)] => {
                    r.peaks.insert(ch, ChannelPeak { min, t_min, max, t_max });
                }
                _ => return Err(bad(&format!("peak.{ch}"), "incomplete")),
            }
        }
        if !(r.itae >= 0.0) || !(r.isu >= 0.0) || !(r.isu_command >= 0.0) {
            return Err(bad("itae", "itae and isu must be non-negative"));
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricsReport {
        let mut peaks = BTreeMap::new();
        peaks.insert("xhat1".to_string(), ChannelPeak { min: -0.0263, t_min: 0.0123, max: 1.01, t_max: 1.7 });
        let mut settling = BTreeMap::new();
        settling.insert("y".to_string(), (Some(0.9), None));
        MetricsReport {
            scenario: "peaking-nleso".into(),
            family: "peaking".into(),
            observer: "nleso".into(),
            itae: 0.1 + 0.2,
            isu: 161.600_68,
            isu_command: 172.5,
            peaks,
            settling,
            e1_small_time: Some(0.25),
            e1_bound: None,
            diverged: false,
            rows: 100_001,
            t_end: 10.0,
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let r = sample();
        let text = r.to_text();
        assert!(text.contains("itae: 0.30000000000000004\n"));
        assert!(text.contains("settling.y.final: none\n"));
        assert_eq!(MetricsReport::parse(&text).unwrap(), r);
    }

    #[test]
    fn json_round_trip_uses_same_names() {
        let r = sample();
        let json = r.to_json();
        let v: Value = serde_json::from_str(&json).unwrap();
        for (k, _) in r.fields() {
            assert!(v.get(&k).is_some(), "{k}");
        }
        assert_eq!(MetricsReport::parse(&json).unwrap(), r);
    }

    #[test]
    fn rejects_malformed_reports() {
        assert!(MetricsReport::parse("itae: 1.0").is_err());
        assert!(MetricsReport::parse("garbage").is_err());
        let text = sample().to_text().replace("isu: 161.60068", "isu: -1.0");
        assert!(MetricsReport::parse(&text).is_err());
        let text = sample().to_text() + "extra.field: 1\n";
        assert!(MetricsReport::parse(&text).is_err());
    }
}
