use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{two_proportion_test, Proportion, TwoProportionTest};

/// Metrics for one replicate of one design cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub replicate: usize,
    pub group: String,
    pub metrics: BTreeMap<String, f64>,
}

impl Record {
    pub fn new(replicate: usize, group: impl Into<String>) -> Self {
        Record { replicate, group: group.into(), metrics: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn flag(self, key: &str, value: bool) -> Self {
        self.with(key, if value { 1.0 } else { 0.0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub means: BTreeMap<String, f64>,
}

/// Two-proportion test of a 0/1 metric between two groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub metric: String,
    pub group_a: String,
    pub group_b: String,
    pub a: Proportion,
    pub b: Proportion,
    pub test: TwoProportionTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: String,
    pub config_hash: String,
    pub records: Vec<Record>,
    pub aggregates: BTreeMap<String, GroupSummary>,
    pub comparisons: Vec<Comparison>,
    pub files: Vec<String>,
}

impl RunReport {
    pub fn new(experiment: &str, config_hash: String, records: Vec<Record>) -> Self {
        let aggregates = summarize(&records);
        RunReport { experiment: experiment.into(), config_hash, records, aggregates, comparisons: vec![], files: vec![] }
    }

    /// Successes of a 0/1 metric within a group.
    pub fn proportion(&self, group: &str, metric: &str) -> Proportion {
        proportion(&self.records, group, metric)
    }

    pub fn mean(&self, group: &str, metric: &str) -> Option<f64> {
        self.aggregates.get(group)?.means.get(metric).copied()
    }

    pub fn compare(&mut self, name: &str, metric: &str, group_a: &str, group_b: &str) {
        let a = self.proportion(group_a, metric);
        let b = self.proportion(group_b, metric);
        self.comparisons.push(Comparison {
            name: name.into(),
            metric: metric.into(),
            group_a: group_a.into(),
            group_b: group_b.into(),
            a,
            b,
            test: two_proportion_test(a, b),
        });
    }

    pub fn comparison(&self, name: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.name == name)
    }

    /// Recompute aggregates and tests from the records and compare.
    pub fn check_consistency(&self) -> Result<()> {
        if summarize(&self.records) != self.aggregates {
            return Err(Error::Precondition("report aggregates disagree with its records".into()));
        }
        for c in &self.comparisons {
            let a = self.proportion(&c.group_a, &c.metric);
            let b = self.proportion(&c.group_b, &c.metric);
            if a != c.a || b != c.b || two_proportion_test(a, b) != c.test {
                return Err(Error::Precondition(format!("comparison {} disagrees with records", c.name)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: RunReport = serde_json::from_str(&text)?;
        report.check_consistency()?;
        Ok(report)
    }

    /// Flat `key=value` summary.
    pub fn metrics_text(&self) -> String {
        let mut out = format!("experiment={}\nconfig_hash={}\n", self.experiment, self.config_hash);
        for (group, s) in &self.aggregates {
            out += &format!("{group}.n={}\n", s.n);
            for (k, v) in &s.means {
                out += &format!("{group}.{k}.mean={v}\n");
            }
        }
        for c in &self.comparisons {
            out += &format!(
                "{name}.a={}/{}\n{name}.b={}/{}\n{name}.z={}\n{name}.p_two_sided={}\n{name}.p_greater={}\n",
                c.a.successes,
                c.a.trials,
                c.b.successes,
                c.b.trials,
                c.test.z,
                c.test.p_two_sided,
                c.test.p_greater,
                name = c.name
            );
        }
        out
    }

    /// Records as CSV: `replicate,group,<metric columns...>`.
    pub fn records_csv(&self) -> Result<Vec<u8>> {
        let mut keys: Vec<&String> = self.records.iter().flat_map(|r| r.metrics.keys()).collect();
        keys.sort();
        keys.dedup();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["replicate".to_string(), "group".to_string()];
        header.extend(keys.iter().map(|k| k.to_string()));
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.replicate.to_string(), r.group.clone()];
            row.extend(keys.iter().map(|k| r.metrics.get(*k).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&row)?;
        }
        w.into_inner().map_err(|e| Error::Parse(e.to_string()))
    }
}

fn proportion(records: &[Record], group: &str, metric: &str) -> Proportion {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.group == group)
        .filter_map(|r| r.metrics.get(metric).copied())
        .collect();
    Proportion::new(values.iter().filter(|&&v| v != 0.0).count(), values.len())
}

/// Per group: record count, and per metric the running sum and count.
type Sums = BTreeMap<String, (usize, BTreeMap<String, (f64, usize)>)>;

fn summarize(records: &[Record]) -> BTreeMap<String, GroupSummary> {
    let mut sums = Sums::new();
    for r in records {
        let entry = sums.entry(r.group.clone()).or_default();
        entry.0 += 1;
        for (k, v) in &r.metrics {
            let s = entry.1.entry(k.clone()).or_default();
            s.0 += v;
            s.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(g, (n, m))| {
            let means = m.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect();
            (g, GroupSummary { n, means })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> RunReport {
        let mut records = vec![];
        for i in 0..10 {
            records.push(Record::new(i, "a").flag("ok", i < 8).with("pings", i as f64));
            records.push(Record::new(i, "b").flag("ok", i < 2).with("pings", 2.0 * i as f64));
        }
        let mut r = RunReport::new("demo", "abc".into(), records);
        r.compare("ok_a_vs_b", "ok", "a", "b");
        r
    }

    #[test]
    fn aggregates_and_tests() {
        let r = report();
        assert_eq!(r.mean("a", "pings"), Some(4.5));
        assert_eq!(r.mean("b", "ok"), Some(0.2));
        assert_eq!(r.proportion("a", "ok"), Proportion::new(8, 10));
        let c = r.comparison("ok_a_vs_b").unwrap();
        assert!(c.test.z > 2.0);
        assert!(r.metrics_text().contains("a.pings.mean=4.5\n"));
        r.check_consistency().unwrap();
    }

    #[test]
    fn tampered_aggregates_are_detected() {
        let mut r = report();
        r.aggregates.get_mut("a").unwrap().means.insert("pings".into(), 5.0);
        assert!(r.check_consistency().is_err());
        let mut r = report();
        r.records[0].metrics.insert("ok".into(), 0.0);
        assert!(r.check_consistency().is_err());
    }

    #[test]
    fn json_round_trip() {
        let r = report();
        let back: RunReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let csv = String::from_utf8(r.records_csv().unwrap()).unwrap();
        assert!(csv.starts_with("replicate,group,ok,pings\n0,a,1,0\n"));
    }
}
