//! Multi-seed comparison tables and merged convergence curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::TraceRecord;

/// Sample mean and (n − 1) standard deviation; `None` for the deviation below two values.
pub fn mean_std(v: &[f64]) -> (f64, Option<f64>) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = (v.len() >= 2).then(|| (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    (mean, std)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    /// Test accuracy per seed, in seed order.
    pub accuracies: Vec<f64>,
    pub seeds: Vec<u64>,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub best_c: Option<f64>,
    /// Validation accuracy per grid value of `C`.
    pub c_search: Vec<(f64, f64)>,
    pub error: Option<String>,
}

impl ReportRow {
    pub fn new(model: String) -> Self {
        Self { model, accuracies: Vec::new(), seeds: Vec::new(), mean: None, std: None, best_c: None, c_search: Vec::new(), error: None }
    }

    /// Fill `mean` / `std` from the per-seed accuracies.
    pub fn finish(&mut self) {
        if self.accuracies.is_empty() {
            return;
        }
        let (m, s) = mean_std(&self.accuracies);
        self.mean = Some(m);
        self.std = s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub dataset: String,
    pub rows: Vec<ReportRow>,
}

impl ComparisonReport {
    /// Index of the row with the best mean accuracy (first on ties).
    pub fn best(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, r) in self.rows.iter().enumerate() {
            if let Some(m) = r.mean {
                if best.map_or(true, |(_, b)| m > b) {
                    best = Some((i, m));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Table with one row per model; accuracies in percent, `*` marks the best mean.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let best = self.best();
        writeln!(s, "dataset: {}", self.dataset).unwrap();
        writeln!(s, "  {:<20} {:>18} {:>6} {:>8}", "model", "test accuracy (%)", "seeds", "best C").unwrap();
        for (i, r) in self.rows.iter().enumerate() {
            let mark = if Some(i) == best { '*' } else { ' ' };
            let acc = match (r.mean, r.std, &r.error) {
                (_, _, Some(e)) => format!("FAILED: {e}"),
                (Some(m), Some(sd), _) => format!("{:.2} ± {:.2}", 100.0 * m, 100.0 * sd),
                (Some(m), None, _) => format!("{:.2}", 100.0 * m),
                (None, _, _) => "-".into(),
            };
            let c = r.best_c.map_or("-".into(), |c| format!("{c:e}"));
            writeln!(s, "{mark} {:<20} {:>18} {:>6} {:>8}", r.model, acc, r.accuracies.len(), c).unwrap();
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// One labelled trace for [`merge_curves`].
#[derive(Debug, Clone)]
pub struct LabelledTrace {
    pub label: String,
    /// `(iteration, loss)` pairs.
    pub points: Vec<(usize, f64)>,
}

/// Parse a trace CSV (with or without the timing column).
pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRecord>> {
    #[derive(Deserialize)]
    struct Row {
        iteration: usize,
        train_loss: f64,
        data_loss: f64,
        val_accuracy: f64,
        #[serde(default)]
        elapsed_seconds: f64,
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Format {
        what: path.display().to_string(),
        offset: 0,
        reason: e.to_string(),
    })?;
    rdr.deserialize::<Row>()
        .map(|r| {
            let r = r.map_err(|e| Error::Format {
                what: path.display().to_string(),
                offset: e.position().map_or(0, |p| p.byte()),
                reason: e.to_string(),
            })?;
            Ok(TraceRecord {
                iteration: r.iteration,
                train_loss: r.train_loss,
                data_loss: r.data_loss,
                val_accuracy: r.val_accuracy,
                elapsed_seconds: r.elapsed_seconds,
            })
        })
        .collect()
}

/// Evaluation interval of a trace: all iterations except possibly the last
/// must be consecutive multiples of the first.
fn interval(t: &LabelledTrace) -> Result<usize> {
    let first = t.points.first().ok_or_else(|| Error::Parameter(format!("trace '{}' is empty", t.label)))?.0;
    if first == 0 {
        return Err(Error::Dimension(format!("trace '{}' starts at iteration 0", t.label)));
    }
    let n = t.points.len();
    for (k, &(it, _)) in t.points.iter().enumerate() {
        let expected = (k + 1) * first;
        let last_partial = k + 1 == n && it > (k * first) && it < expected;
        if it != expected && !last_partial {
            return Err(Error::Dimension(format!(
                "misaligned trace '{}': iteration {it} where {expected} was expected",
                t.label
            )));
        }
    }
    Ok(first)
}

/// Merge traces on iteration: per label, the mean and std of the loss
/// across its traces (seeds) at every iteration any of them reached.
///
/// CSV columns: `iteration`, then `<label>_mean`, `<label>_std`, `<label>_n`
/// per label in first-seen order; cells are empty where no trace has a value.
pub fn merge_curves(traces: &[LabelledTrace]) -> Result<String> {
    if traces.is_empty() {
        return Err(Error::Parameter("no traces to merge".into()));
    }
    let step = interval(&traces[0])?;
    for t in &traces[1..] {
        let s = interval(t)?;
        if s != step {
            return Err(Error::Dimension(format!(
                "misaligned traces: '{}' evaluates every {s} iterations, '{}' every {step}",
                t.label, traces[0].label
            )));
        }
    }
    let mut labels: Vec<&str> = Vec::new();
    for t in traces {
        if !labels.contains(&t.label.as_str()) {
            labels.push(&t.label);
        }
    }
    let mut table: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for t in traces {
        let li = labels.iter().position(|l| *l == t.label).expect("label listed");
        for &(it, loss) in &t.points {
            table.entry(it).or_insert_with(|| vec![Vec::new(); labels.len()])[li].push(loss);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["iteration".to_string()];
    for l in &labels {
        header.extend([format!("{l}_mean"), format!("{l}_std"), format!("{l}_n")]);
    }
    w.write_record(&header).expect("in-memory csv");
    for (it, cols) in table {
        let mut rec = vec![it.to_string()];
        for v in cols {
            if v.is_empty() {
                rec.extend([String::new(), String::new(), "0".into()]);
            } else {
                let (m, s) = mean_std(&v);
                rec.extend([m.to_string(), s.unwrap_or(0.0).to_string(), v.len().to_string()]);
            }
        }
        w.write_record(&rec).expect("in-memory csv");
    }
    Ok(String::from_utf8(w.into_inner().expect("flush")).expect("utf-8 csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(label: &str, pts: &[(usize, f64)]) -> LabelledTrace {
        LabelledTrace { label: label.into(), points: pts.to_vec() }
    }

    fn parse(csv: &str) -> Vec<Vec<String>> {
        csv.lines().map(|l| l.split(',').map(String::from).collect()).collect()
    }

    #[test]
    fn single_and_duplicate_traces() {
        let t = trace("kaf", &[(50, 2.0), (100, 1.5), (150, 1.2)]);
        let rows = parse(&merge_curves(&[t.clone()]).unwrap());
        assert_eq!(rows[0], vec!["iteration", "kaf_mean", "kaf_std", "kaf_n"]);
        assert_eq!(rows[2], vec!["100", "1.5", "0", "1"]);
        let rows = parse(&merge_curves(&[t.clone(), t]).unwrap());
        assert!(rows[1..].iter().all(|r| r[2] == "0" && r[3] == "2"));
    }

    #[test]
    fn mean_std_across_seeds_and_ragged_ends() {
        let a = trace("wl", &[(50, 1.0), (100, 2.0)]);
        let b = trace("wl", &[(50, 3.0), (100, 4.0), (150, 5.0)]);
        let c = trace("kaf", &[(50, 7.0), (73, 6.0)]);
        let rows = parse(&merge_curves(&[a, b, c]).unwrap());
        assert_eq!(rows[0].len(), 7);
        assert_eq!(rows[1], vec!["50", "2", &2f64.sqrt().to_string(), "2", "7", "0", "1"]);
        let last = rows.last().unwrap();
        assert_eq!(last[0], "150");
        assert_eq!(&last[4..], &["", "", "0"]);
    }

    #[test]
    fn misaligned_traces_are_rejected() {
        let a = trace("a", &[(50, 1.0), (100, 1.0)]);
        let b = trace("b", &[(40, 1.0), (80, 1.0)]);
        assert!(matches!(merge_curves(&[a, b]), Err(Error::Dimension(_))));
        let gap = trace("g", &[(50, 1.0), (150, 1.0), (200, 1.0)]);
        assert!(matches!(merge_curves(&[gap]), Err(Error::Dimension(_))));
        assert!(matches!(merge_curves(&[]), Err(Error::Parameter(_))));
    }

    #[test]
    fn report_marks_best_and_handles_failures() {
        let mut good = ReportRow::new("wlkaf_case1".into());
        good.accuracies = vec![0.97, 0.98];
        good.finish();
        let mut single = ReportRow::new("real_nn".into());
        single.accuracies = vec![0.95];
        single.finish();
        let mut failed = ReportRow::new("kaf_independent".into());
        failed.error = Some("numeric failure".into());
        let rep = ComparisonReport { dataset: "mnist".into(), rows: vec![single, good, failed] };
        assert_eq!(rep.best(), Some(1));
        assert_eq!(rep.rows[0].std, None);
        let text = rep.render();
        assert_eq!(text.lines().count(), 5);
        assert!(text.lines().nth(3).unwrap().starts_with('*'));
        assert!(text.contains("FAILED"));
        let back: ComparisonReport = serde_json::from_str(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
    }
}
