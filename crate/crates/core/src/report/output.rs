use std::fs;
use std::path::{Path, PathBuf};

use super::{CorpusReport, ReportError, TestSummary};

/// Store-relative directory the report files go into.
pub const REPORT_DIR: &str = "report";

fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

fn test_cells(t: Option<&TestSummary>) -> [String; 5] {
    match t {
        Some(t) => [
            fmt4(t.statistic),
            t.df.map(|d| d.to_string()).unwrap_or_default(),
            t.p_value.clone(),
            format!("{:.6}", t.alpha_effective),
            t.reject.to_string(),
        ],
        None => Default::default(),
    }
}

struct Csv {
    path: PathBuf,
    writer: csv::Writer<Vec<u8>>,
}

impl Csv {
    fn new(dir: &Path, name: &str, header: &[&str]) -> Result<Self, ReportError> {
        let mut c = Csv { path: dir.join(name), writer: csv::Writer::from_writer(Vec::new()) };
        c.row(header.iter().map(|s| s.to_string()))?;
        Ok(c)
    }

    fn row(&mut self, cells: impl IntoIterator<Item = String>) -> Result<(), ReportError> {
        self.writer
            .write_record(cells.into_iter().collect::<Vec<_>>())
            .map_err(|e| ReportError::stage("report", format!("{}: {e}", self.path.display())))
    }

    fn finish(self) -> Result<PathBuf, ReportError> {
        let bytes = self.writer.into_inner().map_err(|e| ReportError::stage("report", e.to_string()))?;
        write(&self.path, &bytes)?;
        Ok(self.path)
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    fs::write(path, bytes).map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

/// Writes `report.json` and one CSV per section into `dir`, returning the
/// paths in write order. Optional sections without data produce no file.
pub fn write_report(report: &CorpusReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io { path: dir.display().to_string(), source })?;
    let mut written = Vec::new();

    let json = dir.join("report.json");
    write(&json, report.to_json().as_bytes())?;
    written.push(json);

    let mut cases = Csv::new(dir, "cases.csv", &["query_id", "kind", "case", "count", "percent"])?;
    for table in &report.queries {
        for c in &table.cases {
            cases.row([
                table.query_id.clone(),
                format!("{:?}", table.kind).to_lowercase(),
                c.case.clone(),
                c.count.to_string(),
                fmt4(c.percent),
            ])?;
        }
    }
    written.push(cases.finish()?);

    let mut coverage = Csv::new(
        dir,
        "coverage.csv",
        &[
            "query_id",
            "category",
            "n",
            "pre_percent",
            "post_percent",
            "statistic",
            "df",
            "p_value",
            "alpha",
            "reject",
            "note",
        ],
    )?;
    for c in &report.coverage {
        let mut cells =
            vec![c.query_id.clone(), c.category.clone(), c.n.to_string(), fmt4(c.pre_percent), fmt4(c.post_percent)];
        cells.extend(test_cells(c.test.as_ref()));
        cells.push(c.note.clone().unwrap_or_default());
        coverage.row(cells)?;
    }
    written.push(coverage.finish()?);

    let mut metrics = Csv::new(
        dir,
        "text_metrics.csv",
        &[
            "metric",
            "n",
            "pre_mean",
            "pre_std",
            "post_mean",
            "post_std",
            "statistic",
            "df",
            "p_value",
            "alpha",
            "reject",
            "note",
        ],
    )?;
    for m in &report.metrics {
        let mut cells = vec![
            m.metric.clone(),
            m.n.to_string(),
            fmt4(m.pre_mean),
            fmt4(m.pre_std),
            fmt4(m.post_mean),
            fmt4(m.post_std),
        ];
        cells.extend(test_cells(m.test.as_ref()));
        cells.push(m.note.clone().unwrap_or_default());
        metrics.row(cells)?;
    }
    written.push(metrics.finish()?);

    if let Some(sim) = &report.similarity {
        let mut csv = Csv::new(dir, "similarity.csv", &["decile", "ratio"])?;
        for (k, v) in sim.deciles.iter().enumerate() {
            csv.row([(k * 10).to_string(), fmt4(*v)])?;
        }
        written.push(csv.finish()?);
    }

    if !report.key_changes.is_empty() {
        let mut csv = Csv::new(dir, "key_changes.csv", &["month", "policies"])?;
        for (month, n) in &report.key_changes {
            csv.row([month.clone(), n.to_string()])?;
        }
        written.push(csv.finish()?);
    }

    if let Some(d) = &report.disagreement {
        let mut csv = Csv::new(dir, "disagreement.csv", &["version", "rate", "policies", "queries"])?;
        for (v, rate) in [("pre", d.pre), ("post", d.post)] {
            csv.row([v.to_string(), fmt4(rate), d.policies.to_string(), d.queries.to_string()])?;
        }
        written.push(csv.finish()?);
    }
    Ok(written)
}
