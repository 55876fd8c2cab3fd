use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::metrics::{mean_std, AccuracyResult};
use crate::dataio::ClassPair;
use crate::error::{Error, Result};
use crate::fmt::g17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Text,
    Csv,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "text" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(Error::invalid(format!("unknown format '{s}', expected text or csv"))),
        }
    }
}

impl fmt::Display for TableFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TableFormat::Text => "text",
            TableFormat::Csv => "csv",
        })
    }
}

/// How a pipeline is placed in the rendered tables: one table per
/// `group`, one row per pipeline labelled `row_label`.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineInfo {
    pub name: String,
    pub group: String,
    pub row_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub subject: String,
    pub pair: ClassPair,
    pub pipeline: String,
    pub result: AccuracyResult,
}

/// The pair with the highest across-subject mean for one pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct BestRow {
    pub pipeline: String,
    pub group: String,
    pub row_label: String,
    pub pair: ClassPair,
    /// Across-repetition mean per subject, in subject order.
    pub per_subject: Vec<f64>,
    pub mean: f64,
    /// Population std across subjects.
    pub std: f64,
}

/// Accuracy results keyed by (subject, class pair, pipeline).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pipelines: Vec<PipelineInfo>,
    subjects: Vec<String>,
    rows: Vec<ResultRow>,
}

impl ResultsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_pipeline(&mut self, info: PipelineInfo) -> Result<()> {
        if self.pipelines.iter().any(|p| p.name == info.name) {
            return Err(Error::invalid(format!("duplicate pipeline name '{}'", info.name)));
        }
        self.pipelines.push(info);
        Ok(())
    }

    pub fn push(&mut self, subject: &str, pair: ClassPair, pipeline: &str, result: AccuracyResult) -> Result<()> {
        if !self.pipelines.iter().any(|p| p.name == pipeline) {
            return Err(Error::invalid(format!("pipeline '{pipeline}' is not registered")));
        }
        if self.get(subject, pair, pipeline).is_some() {
            return Err(Error::invalid(format!("duplicate result for {subject}/{pair}/{pipeline}")));
        }
        if !self.subjects.iter().any(|s| s == subject) {
            self.subjects.push(subject.to_string());
        }
        self.rows.push(ResultRow { subject: subject.to_string(), pair, pipeline: pipeline.to_string(), result });
        Ok(())
    }

    pub fn pipelines(&self) -> &[PipelineInfo] {
        &self.pipelines
    }

    pub fn subjects(&self) -> &[String] {
        &self.subjects
    }

    pub fn rows(&self) -> &[ResultRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, subject: &str, pair: ClassPair, pipeline: &str) -> Option<&AccuracyResult> {
        self.rows
            .iter()
            .find(|r| r.subject == subject && r.pair == pair && r.pipeline == pipeline)
            .map(|r| &r.result)
    }

    /// Every subject must have a result for every (pair, pipeline) that
    /// any subject has.
    pub fn check_complete(&self) -> Result<()> {
        for r in &self.rows {
            for s in &self.subjects {
                if self.get(s, r.pair, &r.pipeline).is_none() {
                    return Err(Error::invalid(format!("missing result for {s}/{}/{}", r.pair, r.pipeline)));
                }
            }
        }
        Ok(())
    }

    /// Best pair per pipeline, in pipeline registration order. Equal
    /// means go to the alphabetically first pair name.
    pub fn best_rows(&self) -> Result<Vec<BestRow>> {
        self.check_complete()?;
        let mut out = Vec::new();
        for info in &self.pipelines {
            let mut pairs: Vec<ClassPair> =
                self.rows.iter().filter(|r| r.pipeline == info.name).map(|r| r.pair).collect();
            pairs.sort_by_key(|p| p.display_name());
            pairs.dedup();
            let mut best: Option<BestRow> = None;
            for pair in pairs {
                let per_subject: Vec<f64> = self
                    .subjects
                    .iter()
                    .map(|s| self.get(s, pair, &info.name).map(|r| r.mean).unwrap_or(f64::NAN))
                    .collect();
                let (mean, std) = mean_std(&per_subject);
                if best.as_ref().is_none_or(|b| mean > b.mean) {
                    best = Some(BestRow {
                        pipeline: info.name.clone(),
                        group: info.group.clone(),
                        row_label: info.row_label.clone(),
                        pair,
                        per_subject,
                        mean,
                        std,
                    });
                }
            }
            out.extend(best);
        }
        Ok(out)
    }

    /// `subject,pair,pipeline,mean,std`, one line per result.
    pub fn aggregate_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["subject", "pair", "pipeline", "mean", "std"]).expect("in-memory write");
        for r in &self.rows {
            w.write_record([&r.subject, &r.pair.key(), &r.pipeline, &g17(r.result.mean), &g17(r.result.std)])
                .expect("in-memory write");
        }
        finish(w)
    }

    /// `subject,pair,pipeline,rep,accuracy`, one line per repetition.
    pub fn raw_csv(&self) -> String {
        let mut w = csv_writer();
        w.write_record(["subject", "pair", "pipeline", "rep", "accuracy"]).expect("in-memory write");
        for r in &self.rows {
            for (i, a) in r.result.per_rep.iter().enumerate() {
                w.write_record([&r.subject, &r.pair.key(), &r.pipeline, &i.to_string(), &g17(*a)])
                    .expect("in-memory write");
            }
        }
        finish(w)
    }
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// One line of the aggregate csv.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AggregateRecord {
    pub subject: String,
    pub pair: String,
    pub pipeline: String,
    pub mean: f64,
    pub std: f64,
}

pub fn parse_aggregate_csv(text: &str) -> Result<Vec<AggregateRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(|e| Error::Format(format!("aggregate csv: {e}"))))
        .collect()
}

fn percent(x: f64) -> String {
    format!("{:.0}", 100.0 * x)
}

fn render_text(table: &ResultsTable) -> Result<String> {
    let best = table.best_rows()?;
    let mut groups: Vec<&str> = Vec::new();
    for b in &best {
        if !groups.contains(&b.group.as_str()) {
            groups.push(&b.group);
        }
    }
    let mut out = String::new();
    for (gi, group) in groups.iter().enumerate() {
        if gi > 0 {
            out.push('\n');
        }
        let mut lines: Vec<Vec<String>> = Vec::new();
        let mut header = vec!["classifier".to_string(), "action".to_string()];
        header.extend(table.subjects.iter().cloned());
        header.push("MEAN±STD".to_string());
        lines.push(header);
        for b in best.iter().filter(|b| b.group == *group) {
            let mut line = vec![b.row_label.clone(), b.pair.display_name()];
            line.extend(b.per_subject.iter().map(|&a| percent(a)));
            line.push(format!("{}±{:.1}", percent(b.mean), 100.0 * b.std));
            lines.push(line);
        }
        let n_cols = lines[0].len();
        let widths: Vec<usize> =
            (0..n_cols).map(|c| lines.iter().map(|l| l[c].chars().count()).max().unwrap_or(0)).collect();
        out.push_str(group);
        out.push('\n');
        for line in &lines {
            let cells: Vec<String> = line
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(c, (cell, &w))| {
                    let pad = w - cell.chars().count();
                    if c + 1 == n_cols { cell.clone() } else { format!("{cell}{}", " ".repeat(pad)) }
                })
                .collect();
            out.push_str(&cells.join("  "));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Text: one table per pipeline group with the best pair per row,
/// per-subject accuracies as integer percentages and a `MM±S.S` column of
/// the across-subject mean and std. Csv: [`ResultsTable::aggregate_csv`].
pub fn render_table(table: &ResultsTable, format: TableFormat) -> Result<String> {
    if table.is_empty() {
        return Err(Error::invalid("nothing to render: the results table is empty"));
    }
    match format {
        TableFormat::Text => render_text(table),
        TableFormat::Csv => {
            table.check_complete()?;
            Ok(table.aggregate_csv())
        }
    }
}
