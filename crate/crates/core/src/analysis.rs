//! Correlation between binarization quality and writer-identification scores.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::function::beta::beta_reg;

use crate::metrics::BinMetricsReport;
use crate::report::value_as_real;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    #[default]
    Pearson,
    Spearman,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    /// Two-sided p-value of the t-test with n - 2 degrees of freedom.
    pub p: f64,
    pub n: usize,
}

/// Two-sided p-value for a sample correlation `r` over `n` pairs.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let x = 1.0 - r * r;
    if x <= 0.0 {
        return 0.0;
    }
    // P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2) and df/(df+t^2) = 1 - r^2
    beta_reg(df / 2.0, 0.5, x.min(1.0)).clamp(0.0, 1.0)
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { left: (xs.len(), 1), right: (ys.len(), 1) });
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("correlation needs at least 3 pairs, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::param("correlation input must be finite"));
    }
    // shifted-data sums: exact for affine integer series, stable for the rest
    let (x0, y0) = (xs[0], ys[0]);
    let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (a, b) = (x - x0, y - y0);
        sa += a;
        sb += b;
        saa += a * a;
        sbb += b * b;
        sab += a * b;
    }
    let nf = n as f64;
    let sxx = saa - sa * sa / nf;
    let syy = sbb - sb * sb / nf;
    let sxy = sab - sa * sb / nf;
    if xs.iter().all(|&x| x == x0) || sxx <= 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if ys.iter().all(|&y| y == y0) || syy <= 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(Correlation { r, p: correlation_p_value(r, n), n })
}

/// Ranks starting at 1, ties receive their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            out[o] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { left: (xs.len(), 1), right: (ys.len(), 1) });
    }
    pearson(&ranks(xs), &ranks(ys))
}

pub fn correlate(kind: CorrelationKind, xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    match kind {
        CorrelationKind::Pearson => pearson(xs, ys),
        CorrelationKind::Spearman => spearman(xs, ys),
    }
}

/// Mean binarization scores of one method on one subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinEntry {
    pub method: String,
    pub subset: String,
    pub metrics: BinMetricsReport,
}

/// Writer-analysis scores of one method; absent metrics are skipped.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct WriterEntry {
    pub method: String,
    pub map: Option<f64>,
    pub retrieval_top1: Option<f64>,
    pub classification_top1: Option<f64>,
}

pub const BIN_METRICS: [&str; 4] = ["fm", "pfm", "psnr", "drd"];
pub const WRITER_METRICS: [&str; 3] = ["map", "retrieval_top1", "classification_top1"];
pub const COMBINED_SUBSET: &str = "A+B";

fn bin_value(m: &BinMetricsReport, metric: &str) -> f64 {
    match metric {
        "fm" => m.fm,
        "pfm" => m.pfm,
        "psnr" => m.psnr,
        _ => m.drd,
    }
}

fn writer_value(w: &WriterEntry, metric: &str) -> Option<f64> {
    match metric {
        "map" => w.map,
        "retrieval_top1" => w.retrieval_top1,
        _ => w.classification_top1,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub bin_metric: String,
    pub subset: String,
    pub writer_metric: String,
    pub n: usize,
    pub r: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterRow {
    pub method: String,
    pub subset: String,
    pub bin_metric: String,
    pub bin_value: f64,
    pub writer_metric: String,
    pub writer_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub kind: CorrelationKind,
    pub methods: Vec<String>,
    pub cells: Vec<CorrelationCell>,
    pub scatter: Vec<ScatterRow>,
    pub warnings: Vec<String>,
}

impl CorrelationReport {
    pub fn cell(&self, bin_metric: &str, subset: &str, writer_metric: &str) -> Option<&CorrelationCell> {
        self.cells.iter().find(|c| c.bin_metric == bin_metric && c.subset == subset && c.writer_metric == writer_metric)
    }

    pub fn scatter_csv(&self) -> String {
        let mut s = String::from("method,subset,bin_metric,bin_value,writer_metric,writer_value\n");
        for r in &self.scatter {
            s.push_str(&format!("{},{},{},{},{},{}\n", r.method, r.subset, r.bin_metric, r.bin_value, r.writer_metric, r.writer_value));
        }
        s
    }
}

/// Joins binarization and writer scores on method id and correlates every
/// (binarization metric, subset, writer metric) combination. Subset `A+B` is
/// the unweighted mean of the `A` and `B` means when both are present.
pub fn correlation_report(bins: &[BinEntry], writers: &[WriterEntry], kind: CorrelationKind) -> Result<CorrelationReport> {
    let mut per_subset: BTreeMap<String, BTreeMap<String, BinMetricsReport>> = BTreeMap::new();
    for b in bins {
        if per_subset.entry(b.subset.clone()).or_default().insert(b.method.clone(), b.metrics.clone()).is_some() {
            return Err(Error::param(format!("duplicate binarization entry for method {:?} on subset {:?}", b.method, b.subset)));
        }
    }
    if let (Some(a), Some(bb)) = (per_subset.get("A"), per_subset.get("B")) {
        let combined: BTreeMap<String, BinMetricsReport> = a
            .iter()
            .filter_map(|(m, ra)| {
                bb.get(m).map(|rb| {
                    let avg = |x: f64, y: f64| (x + y) / 2.0;
                    (m.clone(), BinMetricsReport { fm: avg(ra.fm, rb.fm), pfm: avg(ra.pfm, rb.pfm), psnr: avg(ra.psnr, rb.psnr), drd: avg(ra.drd, rb.drd) })
                })
            })
            .collect();
        per_subset.insert(COMBINED_SUBSET.into(), combined);
    }

    let mut writer_by: BTreeMap<&str, &WriterEntry> = BTreeMap::new();
    for w in writers {
        if writer_by.insert(w.method.as_str(), w).is_some() {
            return Err(Error::param(format!("duplicate writer entry for method {:?}", w.method)));
        }
    }
    let bin_methods: BTreeSet<&str> = bins.iter().map(|b| b.method.as_str()).collect();
    let writer_methods: BTreeSet<&str> = writer_by.keys().copied().collect();
    let joined: Vec<String> = bin_methods.intersection(&writer_methods).map(|s| s.to_string()).collect();
    if joined.len() < 3 {
        let missing: Vec<&str> = bin_methods.symmetric_difference(&writer_methods).copied().collect();
        return Err(Error::InsufficientData(format!("only {} methods appear in both report sets (need 3); unmatched: {}", joined.len(), missing.join(", "))));
    }

    let mut cells = Vec::new();
    let mut scatter = Vec::new();
    let mut warnings = Vec::new();
    for metric in BIN_METRICS {
        for (subset, table) in &per_subset {
            for wm in WRITER_METRICS {
                let mut rows = Vec::new();
                for m in &joined {
                    let (Some(b), Some(wv)) = (table.get(m), writer_value(writer_by[m.as_str()], wm)) else { continue };
                    let bv = bin_value(b, metric);
                    if !bv.is_finite() || !wv.is_finite() {
                        warnings.push(format!("excluded {m} from {metric}/{subset}/{wm}: non-finite value"));
                        continue;
                    }
                    rows.push((m.clone(), bv, wv));
                }
                if rows.is_empty() {
                    continue;
                }
                let xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
                let ys: Vec<f64> = rows.iter().map(|r| r.2).collect();
                let (r, p) = match correlate(kind, &xs, &ys) {
                    Ok(c) => (Some(c.r), Some(c.p)),
                    Err(e) => {
                        warnings.push(format!("{metric}/{subset}/{wm}: {e}"));
                        (None, None)
                    }
                };
                cells.push(CorrelationCell { bin_metric: metric.into(), subset: subset.clone(), writer_metric: wm.into(), n: rows.len(), r, p });
                scatter.extend(rows.into_iter().map(|(method, bin_value, writer_value)| ScatterRow {
                    method,
                    subset: subset.clone(),
                    bin_metric: metric.into(),
                    bin_value,
                    writer_metric: wm.into(),
                    writer_value,
                }));
            }
        }
    }
    Ok(CorrelationReport { kind, methods: joined, cells, scatter, warnings })
}

fn field<'a>(v: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter().try_fold(v, |cur, k| cur.get(*k))
}

/// Reads an `eval-bin` report (needs `method`, `subset` and the `mean_*` fields).
pub fn bin_entry_from_json(v: &Value) -> Result<BinEntry> {
    let bad = |reason: &str| Error::Format { what: "binarization report", reason: reason.into() };
    let method = field(v, &["method"]).and_then(Value::as_str).ok_or_else(|| bad("missing method"))?;
    let subset = field(v, &["subset"]).and_then(Value::as_str).ok_or_else(|| bad("missing subset"))?;
    let get = |k: &str| {
        let key = format!("mean_{k}");
        v.get(&key).and_then(value_as_real).ok_or_else(|| bad(&format!("missing {key}")))
    };
    Ok(BinEntry { method: method.into(), subset: subset.into(), metrics: BinMetricsReport { fm: get("fm")?, pfm: get("pfm")?, psnr: get("psnr")?, drd: get("drd")? } })
}

/// Reads a `retrieve` or `classify` report and merges it into `into` by method.
pub fn merge_writer_json(v: &Value, into: &mut BTreeMap<String, WriterEntry>) -> Result<()> {
    let bad = |reason: &str| Error::Format { what: "writer report", reason: reason.into() };
    let method = field(v, &["method"]).and_then(Value::as_str).ok_or_else(|| bad("missing method"))?;
    let e = into.entry(method.to_string()).or_insert_with(|| WriterEntry { method: method.into(), ..Default::default() });
    let mut any = false;
    if let Some(r) = v.get("retrieval") {
        e.map = r.get("map").and_then(value_as_real);
        e.retrieval_top1 = r.get("top1").and_then(value_as_real);
        any = true;
    }
    if let Some(c) = v.get("classification") {
        e.classification_top1 = c.get("top1_mean").and_then(value_as_real);
        any = true;
    }
    if !any {
        return Err(bad("neither a retrieval nor a classification block"));
    }
    Ok(())
}
