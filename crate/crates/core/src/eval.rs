//! Link-prediction scoring of a model on labeled pairs.
//!
//! A pair is predicted compatible when its style-space distance is at most a
//! threshold. Sweeping the threshold over every observed distance gives an
//! exact stepwise ROC curve whose trapezoidal area equals the rank statistic
//! `P(d+ < d-) + P(d+ = d-) / 2`.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::embed::{embed, euclidean, ProjectionModel};
use crate::error::{Error, Result};
use crate::graph::ItemId;
use crate::sampler::{Label, Pair};

pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledDistance {
    pub distance: f64,
    pub label: Label,
}

impl LabeledDistance {
    pub fn new(distance: f64, label: Label) -> Self {
        LabeledDistance { distance, label }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    #[serde(
        rename = "t",
        serialize_with = "ser_threshold",
        deserialize_with = "de_threshold"
    )]
    pub threshold: f64,
    #[serde(rename = "tpr")]
    pub true_positive_rate: f64,
    #[serde(rename = "fpr")]
    pub false_positive_rate: f64,
}

// JSON has no infinities; the two sentinels are written as strings.
fn ser_threshold<S: Serializer>(t: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *t == f64::INFINITY {
        s.serialize_str("inf")
    } else if *t == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*t)
    }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(t) if t == "inf" => Ok(f64::INFINITY),
        Raw::Text(t) if t == "-inf" => Ok(f64::NEG_INFINITY),
        Raw::Text(t) => Err(serde::de::Error::custom(format!("bad threshold `{t}`"))),
    }
}

/// Embeds both members of each pair and returns their distance, in order.
pub fn pair_distances(
    model: &ProjectionModel,
    features: &BTreeMap<ItemId, Vec<f64>>,
    pairs: &[Pair],
) -> Result<Vec<LabeledDistance>> {
    let mut cache: BTreeMap<&ItemId, Vec<f64>> = BTreeMap::new();
    let mut style = |id: &ItemId| -> Result<Vec<f64>> {
        if let Some(s) = cache.get(id) {
            return Ok(s.clone());
        }
        let (key, f) = features
            .get_key_value(id)
            .ok_or_else(|| Error::MissingFeatures(id.clone()))?;
        let s = embed(model, f)?;
        cache.insert(key, s.clone());
        Ok(s)
    };
    pairs
        .iter()
        .map(|p| {
            let a = style(&p.a)?;
            let b = style(&p.b)?;
            Ok(LabeledDistance::new(euclidean(&a, &b), p.label))
        })
        .collect()
}

fn class_counts(distances: &[LabeledDistance]) -> (usize, usize) {
    let pos = distances.iter().filter(|d| d.label.is_positive()).count();
    (pos, distances.len() - pos)
}

/// Exact ROC curve, ordered by increasing threshold: `-inf`, every distinct
/// distance, `+inf`.
pub fn roc_curve(distances: &[LabeledDistance]) -> Result<Vec<RocPoint>> {
    let (pos, neg) = class_counts(distances);
    if pos == 0 || neg == 0 {
        return Err(Error::Degenerate(format!(
            "ROC needs both classes, got {pos} positive and {neg} negative"
        )));
    }
    if let Some(d) = distances.iter().find(|d| !d.distance.is_finite()) {
        return Err(Error::Numeric(format!(
            "distance {} is not finite",
            d.distance
        )));
    }
    let mut sorted: Vec<&LabeledDistance> = distances.iter().collect();
    sorted.sort_by(|a, b| a.distance.total_cmp(&b.distance));

    let point = |t: f64, tp: usize, fp: usize| RocPoint {
        threshold: t,
        true_positive_rate: tp as f64 / pos as f64,
        false_positive_rate: fp as f64 / neg as f64,
    };
    let mut curve = vec![point(f64::NEG_INFINITY, 0, 0)];
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < sorted.len() {
        let t = sorted[i].distance;
        while i < sorted.len() && sorted[i].distance == t {
            if sorted[i].label.is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.push(point(t, tp, fp));
    }
    curve.push(point(f64::INFINITY, pos, neg));
    Ok(curve)
}

/// Trapezoidal area under a curve from [`roc_curve`].
pub fn auc(roc: &[RocPoint]) -> f64 {
    roc.windows(2)
        .map(|w| {
            let dx = w[1].false_positive_rate - w[0].false_positive_rate;
            dx * (w[0].true_positive_rate + w[1].true_positive_rate) / 2.0
        })
        .sum()
}

/// Share of the full model's AUC gain over the baseline that the holdout
/// model attains: `(holdout - baseline) / (full - baseline)`. Values outside
/// `[0, 1]` are returned as they are.
pub fn transfer_ratio(auc_holdout: f64, auc_full: f64, auc_baseline: f64) -> Result<f64> {
    let denom = auc_full - auc_baseline;
    if denom == 0.0 {
        return Err(Error::Degenerate("full and baseline AUC are equal".into()));
    }
    Ok((auc_holdout - auc_baseline) / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges; bin `i` covers `[edges[i], edges[i + 1])`, the last
    /// bin is closed on the right.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

fn bin_of(edges: &[f64], d: f64) -> usize {
    let bins = edges.len() - 1;
    // First edge strictly greater than d, minus one.
    let upper = edges.partition_point(|e| *e <= d);
    upper.saturating_sub(1).min(bins - 1)
}

/// Per-label distance histograms over shared bins spanning `[0, max]`.
pub fn histogram(distances: &[LabeledDistance], bins: usize) -> Result<(Histogram, Histogram)> {
    if bins == 0 {
        return Err(Error::Parameter("bins must be at least 1".into()));
    }
    if distances.is_empty() {
        return Err(Error::Degenerate("no distances to bin".into()));
    }
    let max = distances.iter().map(|d| d.distance).fold(0.0, f64::max);
    let edges: Vec<f64> = (0..=bins).map(|i| max * i as f64 / bins as f64).collect();
    let mut pos = vec![0; bins];
    let mut neg = vec![0; bins];
    for d in distances {
        let b = bin_of(&edges, d.distance);
        match d.label {
            Label::Positive => pos[b] += 1,
            Label::Negative => neg[b] += 1,
        }
    }
    Ok((
        Histogram {
            edges: edges.clone(),
            counts: pos,
        },
        Histogram { edges, counts: neg },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub positives: usize,
    pub negatives: usize,
}

/// Serialized as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub pos_hist: Histogram,
    pub neg_hist: Histogram,
    pub counts: Counts,
}

impl EvalReport {
    pub fn from_distances(distances: &[LabeledDistance], bins: usize) -> Result<Self> {
        let roc = roc_curve(distances)?;
        let (pos_hist, neg_hist) = histogram(distances, bins)?;
        let (positives, negatives) = class_counts(distances);
        Ok(EvalReport {
            auc: auc(&roc),
            roc,
            pos_hist,
            neg_hist,
            counts: Counts {
                positives,
                negatives,
            },
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `t,tpr,fpr` rows.
    pub fn write_roc_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<roc.csv>", e);
        writeln!(w, "t,tpr,fpr").map_err(io)?;
        for p in &self.roc {
            writeln!(
                w,
                "{},{},{}",
                p.threshold, p.true_positive_rate, p.false_positive_rate
            )
            .map_err(io)?;
        }
        Ok(())
    }

    /// `lo,hi,pos,neg` rows, one per bin.
    pub fn write_hist_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e| Error::io("<hist.csv>", e);
        writeln!(w, "lo,hi,pos,neg").map_err(io)?;
        let e = &self.pos_hist.edges;
        for i in 0..self.pos_hist.counts.len() {
            writeln!(
                w,
                "{},{},{},{}",
                e[i],
                e[i + 1],
                self.pos_hist.counts[i],
                self.neg_hist.counts[i]
            )
            .map_err(io)?;
        }
        Ok(())
    }
}

/// Distances, ROC, AUC and histograms of `model` on `pairs`.
pub fn evaluate(
    model: &ProjectionModel,
    features: &BTreeMap<ItemId, Vec<f64>>,
    pairs: &[Pair],
    bins: usize,
) -> Result<EvalReport> {
    EvalReport::from_distances(&pair_distances(model, features, pairs)?, bins)
}
