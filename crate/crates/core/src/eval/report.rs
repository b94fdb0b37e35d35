//! Cross-report tables: degradation summary and per-figure series.

use serde::{Deserialize, Serialize};

use super::EvalReport;
use crate::error::{Error, Result};
use crate::features::Schema;
use crate::ml::ModelKind;

pub const MEAN_LABEL: &str = "mean";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub model: ModelKind,
    pub schema: Schema,
    /// Period label, or `mean` for the cross-period average.
    pub period: String,
    pub in_f1: Option<f64>,
    pub out_f1: Option<f64>,
    pub degradation_pp: Option<f64>,
}

fn mean(v: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let vals: Vec<f64> = v.flatten().collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// One row per report, followed for each (model, schema) by the mean over
/// its periods.
pub fn degradation_summary(reports: &[EvalReport]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    let mut groups: Vec<(ModelKind, Schema)> = Vec::new();
    for r in reports {
        if !groups.contains(&(r.model, r.schema)) {
            groups.push((r.model, r.schema));
        }
    }
    for (model, schema) in groups {
        let group: Vec<&EvalReport> = reports.iter().filter(|r| r.model == model && r.schema == schema).collect();
        for r in &group {
            rows.push(SummaryRow {
                model,
                schema,
                period: r.period.label.clone(),
                in_f1: r.in_period_f1,
                out_f1: r.out_period_f1,
                degradation_pp: r.degradation_pp,
            });
        }
        rows.push(SummaryRow {
            model,
            schema,
            period: MEAN_LABEL.into(),
            in_f1: mean(group.iter().map(|r| r.in_period_f1)),
            out_f1: mean(group.iter().map(|r| r.out_period_f1)),
            degradation_pp: mean(group.iter().map(|r| r.degradation_pp)),
        });
    }
    rows
}

fn csv_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::RawIo(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("ascii csv"))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["model", "schema", "period", "in_f1", "out_f1", "degradation_pp"])?;
    for r in rows {
        w.write_record([
            r.model.to_string(),
            r.schema.to_string(),
            r.period.clone(),
            opt(r.in_f1),
            opt(r.out_f1),
            opt(r.degradation_pp),
        ])?;
    }
    csv_string(w)
}

/// One CSV per (model, schema): a `week` column plus one macro-F1 column
/// per training period. Returns (file name, contents).
pub fn plot_series(reports: &[EvalReport]) -> Result<Vec<(String, String)>> {
    let mut groups: Vec<(ModelKind, Schema)> = Vec::new();
    for r in reports {
        if !groups.contains(&(r.model, r.schema)) {
            groups.push((r.model, r.schema));
        }
    }
    groups
        .into_iter()
        .map(|(model, schema)| {
            let group: Vec<&EvalReport> = reports.iter().filter(|r| r.model == model && r.schema == schema).collect();
            let last = group.iter().flat_map(|r| r.weeks.iter().map(|w| w.week)).max().unwrap_or(0);
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["week".to_string()];
            header.extend(group.iter().map(|r| format!("trained_{}", r.period.label)));
            w.write_record(&header)?;
            for week in 1..=last {
                let mut rec = vec![week.to_string()];
                for r in &group {
                    rec.push(opt(r.weeks.iter().find(|s| s.week == week).and_then(|s| s.macro_f1)));
                }
                w.write_record(&rec)?;
            }
            Ok((format!("fig-{model}-{schema}.csv"), csv_string(w)?))
        })
        .collect()
}
