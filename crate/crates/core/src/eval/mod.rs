//! Temporal evaluation: train on one multi-week period, score every week.

mod report;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureSet, Schema};
use crate::ml::network::rng;
use crate::ml::{derive_seed, f1_scores, ModelArtifact, ModelKind, TrainOptions, TrainingPeriod};
use crate::time::Timestamp;

pub use report::{degradation_summary, plot_series, write_summary_csv, SummaryRow, MEAN_LABEL};

pub const WEEK_SECS: i64 = 604_800;
pub const TRAIN_FRACTION: f64 = 0.8;

pub type Period = TrainingPeriod;

impl fmt::Display for TrainingPeriod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start_week, self.end_week)
    }
}

impl TrainingPeriod {
    pub fn new(start_week: u32, end_week: u32) -> Self {
        TrainingPeriod { label: format!("{start_week}-{end_week}"), start_week, end_week }
    }

    pub fn contains(&self, week: u32) -> bool {
        (self.start_week..=self.end_week).contains(&week)
    }
}

/// Training periods plus the start of week 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodSpec {
    pub periods: Vec<Period>,
    pub week_origin: Timestamp,
}

/// Parses a list like `1-9,10-18,19-27`; a bare number is a one-week
/// period.
pub fn parse_periods(text: &str) -> Result<Vec<Period>> {
    let bad = |why: &str| Error::InvalidInput(format!("bad period list {text:?}: {why}"));
    let mut out: Vec<Period> = Vec::new();
    for part in text.split(',').map(str::trim) {
        let (a, b) = part.split_once('-').unwrap_or((part, part));
        let start: u32 = a.trim().parse().map_err(|_| bad("expected START-END week numbers"))?;
        let end: u32 = b.trim().parse().map_err(|_| bad("expected START-END week numbers"))?;
        if start == 0 || end < start {
            return Err(bad("weeks start at 1 and END must not precede START"));
        }
        if out.last().is_some_and(|p| p.end_week >= start) {
            return Err(bad("periods must be disjoint and in order"));
        }
        out.push(Period::new(start, end));
    }
    Ok(out)
}

impl PeriodSpec {
    pub const DEFAULT_PERIODS: &'static str = "1-9,10-18,19-27";

    pub fn new(periods: Vec<Period>, week_origin: Timestamp) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidInput("no training periods".into()));
        }
        for w in periods.windows(2) {
            if w[0].end_week >= w[1].start_week {
                return Err(Error::InvalidInput("periods must be disjoint and in order".into()));
            }
        }
        Ok(PeriodSpec { periods, week_origin })
    }

    pub fn parse(text: &str, week_origin: Timestamp) -> Result<Self> {
        Self::new(parse_periods(text)?, week_origin)
    }

    pub fn default_for(week_origin: Timestamp) -> Self {
        Self::parse(Self::DEFAULT_PERIODS, week_origin).expect("default periods are valid")
    }
}

impl FromStr for Period {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = parse_periods(s)?;
        if p.len() != 1 {
            return Err(Error::InvalidInput(format!("expected a single period, got {s:?}")));
        }
        Ok(p.remove(0))
    }
}

pub fn assign_week(t: Timestamp, origin: Timestamp) -> Result<u32> {
    if t < origin {
        return Err(Error::InvalidInput(format!("timestamp {t} precedes week origin {origin}")));
    }
    Ok(1 + ((t.micros() - origin.micros()) / (WEEK_SECS * 1_000_000)) as u32)
}

/// Midnight UTC on or before `t`.
pub fn midnight_before(t: Timestamp) -> Timestamp {
    Timestamp::from_secs(t.secs().div_euclid(86_400) * 86_400)
}

/// Per class: seeded shuffle, then `round(fraction·n)` rows to train and the
/// rest to test. Both index lists are returned sorted.
pub fn stratified_split(labels: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if labels.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty dataset".into()));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in labels.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut idx) in by_class {
        idx.shuffle(&mut rng(derive_seed(seed, c as u64)));
        let k = ((fraction * idx.len() as f64).round() as usize).min(idx.len());
        train.extend_from_slice(&idx[..k]);
        test.extend_from_slice(&idx[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekScore {
    pub week: u32,
    pub in_period: bool,
    pub samples: usize,
    /// `None` when the week has no evaluated rows.
    pub macro_f1: Option<f64>,
    pub weighted_f1: Option<f64>,
    pub accuracy: Option<f64>,
}

/// Row indices (into the evaluated dataset) used for training and scored
/// in each week.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Audit {
    pub train_ids: Vec<usize>,
    pub evaluated: BTreeMap<u32, Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelKind,
    pub schema: Schema,
    pub period: Period,
    pub seed: u64,
    pub class_count: usize,
    pub train_rows: usize,
    /// Weekly scores use macro-F1 as the headline; weighted F1 is reported
    /// alongside.
    pub headline_metric: String,
    pub weeks: Vec<WeekScore>,
    pub in_period_f1: Option<f64>,
    pub out_period_f1: Option<f64>,
    pub degradation_pp: Option<f64>,
    #[serde(skip)]
    pub audit: Audit,
}

fn mean(v: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per week: week, in_period, samples, macro_f1, weighted_f1,
    /// accuracy (blank when absent).
    pub fn weekly_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["week", "in_period", "samples", "macro_f1", "weighted_f1", "accuracy"])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for s in &self.weeks {
            w.write_record([
                s.week.to_string(),
                s.in_period.to_string(),
                s.samples.to_string(),
                opt(s.macro_f1),
                opt(s.weighted_f1),
                opt(s.accuracy),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| Error::RawIo(e.into_error()))?).expect("ascii csv"))
    }

    /// Mean weekly macro-F1 over the given weeks, skipping absent ones.
    pub fn mean_f1(&self, weeks: impl Fn(u32) -> bool) -> Option<f64> {
        mean(self.weeks.iter().filter(|s| weeks(s.week)).filter_map(|s| s.macro_f1))
    }
}

/// Week of every row.
pub fn row_weeks(data: &FeatureSet, origin: Timestamp) -> Result<Vec<u32>> {
    data.timestamps().into_iter().map(|t| assign_week(t, origin)).collect()
}

/// Train/test split of one period's rows, as indices into `data`.
pub fn period_split(labels: &[usize], weeks: &[u32], period: &Period, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let rows: Vec<usize> = (0..weeks.len()).filter(|&i| period.contains(weeks[i])).collect();
    if rows.is_empty() {
        return Err(Error::EmptyPeriod(period.label.clone()));
    }
    let sub: Vec<usize> = rows.iter().map(|&i| labels[i]).collect();
    let (tr, te) = stratified_split(&sub, TRAIN_FRACTION, derive_seed(seed, period.start_week as u64))?;
    Ok((tr.into_iter().map(|i| rows[i]).collect(), te.into_iter().map(|i| rows[i]).collect()))
}

/// Trains one model per period on that period's training split and scores
/// every week.
pub fn run_experiment(
    data: &FeatureSet,
    kind: ModelKind,
    spec: &PeriodSpec,
    class_count: usize,
    opts: &TrainOptions,
) -> Result<Vec<EvalReport>> {
    let weeks = row_weeks(data, spec.week_origin)?;
    let labels = data.labels();
    spec.periods
        .iter()
        .map(|period| {
            let (train, test) = period_split(&labels, &weeks, period, opts.seed)?;
            let model = fit(data, kind, period, &train, class_count, opts)?;
            score(&model, data, &weeks, period, train, &test)
        })
        .collect()
}

/// Trains one model on a period's training split; the artifact records the
/// period so [`evaluate_artifact`] can rebuild the same split.
pub fn train_period(
    data: &FeatureSet,
    kind: ModelKind,
    period: &Period,
    origin: Timestamp,
    class_count: usize,
    opts: &TrainOptions,
) -> Result<ModelArtifact> {
    let weeks = row_weeks(data, origin)?;
    let (train, _) = period_split(&data.labels(), &weeks, period, opts.seed)?;
    fit(data, kind, period, &train, class_count, opts)
}

fn fit(
    data: &FeatureSet,
    kind: ModelKind,
    period: &Period,
    train: &[usize],
    class_count: usize,
    opts: &TrainOptions,
) -> Result<ModelArtifact> {
    log::info!("{kind}/{}: period {} trains on {} rows", data.schema(), period.label, train.len());
    ModelArtifact::train(
        kind,
        &data.select(train),
        class_count,
        &TrainOptions { period: Some(period.clone()), ..opts.clone() },
    )
}

/// Re-scores a saved model. Its recorded period and seed reproduce the
/// training split, so in-period weeks are again scored on held-out rows
/// only.
pub fn evaluate_artifact(model: &ModelArtifact, data: &FeatureSet, origin: Timestamp) -> Result<EvalReport> {
    let period = model
        .training_period
        .clone()
        .ok_or_else(|| Error::InvalidInput("model has no recorded training period".into()))?;
    let weeks = row_weeks(data, origin)?;
    let (train, test) = period_split(&data.labels(), &weeks, &period, model.seed)?;
    score(model, data, &weeks, &period, train, &test)
}

fn score(
    model: &ModelArtifact,
    data: &FeatureSet,
    weeks: &[u32],
    period: &Period,
    train_ids: Vec<usize>,
    test: &[usize],
) -> Result<EvalReport> {
    let held_out: BTreeSet<usize> = test.iter().copied().collect();
    let mut evaluated: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (i, &w) in weeks.iter().enumerate() {
        if !period.contains(w) || held_out.contains(&i) {
            evaluated.entry(w).or_default().push(i);
        }
    }
    let all: Vec<usize> = evaluated.values().flatten().copied().collect();
    let preds = model.predict(&data.select(&all))?;
    let labels = data.labels();
    let mut pred_of = vec![usize::MAX; data.len()];
    for (&i, p) in all.iter().zip(&preds) {
        pred_of[i] = p.class_index;
    }
    let last = weeks.iter().copied().max().unwrap_or(0).max(period.end_week);
    let mut scores = Vec::new();
    for week in 1..=last {
        let ids = evaluated.get(&week).map(Vec::as_slice).unwrap_or(&[]);
        let mut s = WeekScore {
            week,
            in_period: period.contains(week),
            samples: ids.len(),
            macro_f1: None,
            weighted_f1: None,
            accuracy: None,
        };
        if !ids.is_empty() {
            let p: Vec<usize> = ids.iter().map(|&i| pred_of[i]).collect();
            let t: Vec<usize> = ids.iter().map(|&i| labels[i]).collect();
            let r = f1_scores(&p, &t, model.class_count)?;
            s.macro_f1 = Some(r.macro_f1);
            s.weighted_f1 = Some(r.weighted_f1);
            s.accuracy = Some(r.accuracy);
        }
        scores.push(s);
    }
    let mut report = EvalReport {
        model: model.kind,
        schema: model.schema,
        period: period.clone(),
        seed: model.seed,
        class_count: model.class_count,
        train_rows: train_ids.len(),
        headline_metric: "macro_f1".into(),
        weeks: scores,
        in_period_f1: None,
        out_period_f1: None,
        degradation_pp: None,
        audit: Audit { train_ids, evaluated },
    };
    report.in_period_f1 = report.mean_f1(|w| period.contains(w));
    report.out_period_f1 = report.mean_f1(|w| !period.contains(w));
    report.degradation_pp = match (report.in_period_f1, report.out_period_f1) {
        (Some(a), Some(b)) => Some((a - b) * 100.0),
        _ => None,
    };
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn week_boundaries() {
        let o = Timestamp::from_secs(1_000_000);
        assert_eq!(assign_week(o, o).unwrap(), 1);
        assert_eq!(assign_week(Timestamp::from_secs(1_000_000 + 604_799), o).unwrap(), 1);
        assert_eq!(assign_week(Timestamp::from_secs(1_000_000 + 604_800), o).unwrap(), 2);
        assert_eq!(assign_week(Timestamp::from_secs(1_000_000 + 20 * 86_400), o).unwrap(), 3);
        assert!(assign_week(Timestamp::from_secs(999_999), o).is_err());
    }

    #[test]
    fn split_counts() {
        let labels: Vec<usize> = std::iter::repeat_n(0, 100).chain(std::iter::repeat_n(1, 50)).collect();
        let (tr, te) = stratified_split(&labels, 0.8, 1).unwrap();
        assert_eq!(tr.iter().filter(|&&i| labels[i] == 0).count(), 80);
        assert_eq!(tr.iter().filter(|&&i| labels[i] == 1).count(), 40);
        assert_eq!(te.len(), 30);
    }

    #[test]
    fn singleton_class_goes_to_train() {
        let (tr, te) = stratified_split(&[3], 0.8, 1).unwrap();
        assert_eq!((tr, te), (vec![0], vec![]));
        assert!(stratified_split(&[], 0.8, 1).is_err());
    }

    #[test]
    fn period_parsing() {
        let p = parse_periods("1-9,10-18,19-27").unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(p[2], Period::new(19, 27));
        assert_eq!(parse_periods("3").unwrap(), vec![Period::new(3, 3)]);
        assert!(parse_periods("1-9,5-12").is_err());
        assert!(parse_periods("0-2").is_err());
        assert!(parse_periods("4-2").is_err());
        assert!(parse_periods("a-b").is_err());
    }

    #[test]
    fn midnight() {
        let t = Timestamp::from_secs(1_609_718_400 + 3_725);
        assert_eq!(midnight_before(t), Timestamp::from_secs(1_609_718_400));
    }
}
