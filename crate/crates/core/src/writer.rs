//! Writer retrieval (leave-one-out ranking) and nearest-neighbour writer
//! classification over sampled reference sets.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{seed, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub image_id: String,
    pub writer: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingIndex {
    entries: Vec<Embedding>,
}

impl EmbeddingIndex {
    pub fn new(mut entries: Vec<Embedding>) -> Result<Self> {
        entries.sort_by(|a, b| a.image_id.cmp(&b.image_id));
        if let Some(w) = entries.windows(2).find(|w| w[0].image_id == w[1].image_id) {
            return Err(Error::param(format!("duplicate image id {:?}", w[0].image_id)));
        }
        if let Some(e) = entries.iter().find(|e| e.writer.is_empty()) {
            return Err(Error::param(format!("image {:?} has an empty writer label", e.image_id)));
        }
        if let Some(first) = entries.first() {
            let d = first.values.len();
            if let Some(e) = entries.iter().find(|e| e.values.len() != d) {
                return Err(Error::DimensionMismatch { left: (d, 1), right: (e.values.len(), 1) });
            }
        }
        Ok(Self { entries })
    }

    /// Entries sorted by image id.
    pub fn entries(&self) -> &[Embedding] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Image indices per writer, writers in lexicographic order.
    pub fn by_writer(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut m: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, e) in self.entries.iter().enumerate() {
            m.entry(e.writer.as_str()).or_default().push(i);
        }
        m
    }
}

/// Cosine similarity; 0 when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb).sqrt()
    }
}

pub fn similarity_matrix(idx: &EmbeddingIndex) -> Result<Vec<Vec<f64>>> {
    if idx.len() < 2 {
        return Err(Error::InsufficientData("similarity needs at least two embeddings".into()));
    }
    let e = idx.entries();
    Ok((0..e.len()).into_par_iter().map(|i| e.iter().map(|o| cosine(&e[i].values, &o.values)).collect()).collect())
}

/// Mean over relevant positions of precision at that position.
pub fn average_precision(relevant: &[bool]) -> f64 {
    let (mut hits, mut sum) = (0usize, 0.0);
    for (r, &rel) in relevant.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (r + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// All other images ordered by descending similarity to `q`, ties by image id.
pub fn ranking(idx: &EmbeddingIndex, sims: &[Vec<f64>], q: usize) -> Vec<usize> {
    let mut others: Vec<usize> = (0..idx.len()).filter(|&j| j != q).collect();
    // entries are id-sorted, so index order is id order
    others.sort_by(|&a, &b| sims[q][b].total_cmp(&sims[q][a]).then(a.cmp(&b)));
    others
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub image_id: String,
    pub ap: f64,
    pub first_relevant_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub map: f64,
    pub top1: f64,
    pub top5: f64,
    pub top10: f64,
    pub queries: Vec<QueryResult>,
}

pub fn retrieval_eval(idx: &EmbeddingIndex) -> Result<RetrievalReport> {
    for (w, imgs) in idx.by_writer() {
        if imgs.len() < 2 {
            return Err(Error::InsufficientData(format!("writer {w:?} has a single image, so its query has no relevant item")));
        }
    }
    let sims = similarity_matrix(idx)?;
    let e = idx.entries();
    let queries: Vec<QueryResult> = (0..e.len())
        .into_par_iter()
        .map(|q| {
            let rel: Vec<bool> = ranking(idx, &sims, q).into_iter().map(|j| e[j].writer == e[q].writer).collect();
            QueryResult {
                image_id: e[q].image_id.clone(),
                ap: average_precision(&rel),
                first_relevant_rank: rel.iter().position(|&r| r).expect("writer has another image") + 1,
            }
        })
        .collect();
    let n = queries.len() as f64;
    let top = |k: usize| 100.0 * queries.iter().filter(|q| q.first_relevant_rank <= k).count() as f64 / n;
    Ok(RetrievalReport { map: 100.0 * queries.iter().map(|q| q.ap).sum::<f64>() / n, top1: top(1), top5: top(5), top10: top(10), queries })
}

/// Reference images per writer, writers in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReferenceCombination {
    pub refs: BTreeMap<String, Vec<String>>,
}

fn binomial(n: usize, r: usize) -> u128 {
    (0..r).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Lexicographic r-subsets of 0..n.
fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..r).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..r).rev().find(|&i| cur[i] < n - r + i) else { return out };
        cur[i] += 1;
        for j in i + 1..r {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

/// Number of distinct combinations, `None` if it overflows u128.
pub fn combination_space(idx: &EmbeddingIndex, per_writer: usize) -> Option<u128> {
    idx.by_writer().values().try_fold(1u128, |acc, imgs| acc.checked_mul(binomial(imgs.len(), per_writer)))
}

/// Distinct reference combinations drawn uniformly by rejection. When `count`
/// equals the size of the space the whole space is enumerated instead.
pub fn sample_reference_sets(idx: &EmbeddingIndex, per_writer: usize, count: usize, seed: u64) -> Result<Vec<ReferenceCombination>> {
    if per_writer == 0 || count == 0 {
        return Err(Error::param("per-writer reference count and combination count must be positive"));
    }
    let writers = idx.by_writer();
    if writers.is_empty() {
        return Err(Error::InsufficientData("empty embedding index".into()));
    }
    for (w, imgs) in &writers {
        if imgs.len() < per_writer + 1 {
            return Err(Error::InsufficientData(format!("writer {w:?} has {} images, needs {} references plus a probe", imgs.len(), per_writer)));
        }
    }
    let space = combination_space(idx, per_writer);
    if space.is_some_and(|s| (count as u128) > s) {
        return Err(Error::param(format!("{count} combinations requested but only {} exist", space.unwrap_or(0))));
    }

    let e = idx.entries();
    let build = |choice: &[Vec<usize>]| ReferenceCombination {
        refs: writers.iter().zip(choice).map(|((w, imgs), c)| (w.to_string(), c.iter().map(|&i| e[imgs[i]].image_id.clone()).collect())).collect(),
    };

    if space == Some(count as u128) {
        // odometer over each writer's subset list, last writer fastest
        let lists: Vec<Vec<Vec<usize>>> = writers.values().map(|imgs| subsets(imgs.len(), per_writer)).collect();
        let mut digit = vec![0usize; lists.len()];
        let mut out = Vec::with_capacity(count);
        loop {
            out.push(build(&digit.iter().zip(&lists).map(|(&d, l)| l[d].clone()).collect::<Vec<_>>()));
            let Some(i) = (0..lists.len()).rev().find(|&i| digit[i] + 1 < lists[i].len()) else { return Ok(out) };
            digit[i] += 1;
            digit[i + 1..].iter_mut().for_each(|d| *d = 0);
        }
    }

    let mut rng = seed::rng(seed);
    let mut seen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let choice: Vec<Vec<usize>> = writers
            .values()
            .map(|imgs| {
                let mut s = index::sample(&mut rng, imgs.len(), per_writer).into_vec();
                s.sort_unstable();
                s
            })
            .collect();
        if seen.insert(choice.clone()) {
            out.push(build(&choice));
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WriterScore {
    /// Best similarity over the writer's references.
    #[default]
    Max,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub top1_mean: f64,
    pub top1_std: f64,
    pub top5_mean: f64,
    pub top5_std: f64,
    pub combinations: usize,
    pub std_convention: String,
    pub writer_score: WriterScore,
    /// Per-combination (top1, top5) accuracy in percent.
    pub per_combination: Vec<(f64, f64)>,
}

/// Writers ranked for `probe` against the references of one combination.
fn rank_writers(sims: &[Vec<f64>], probe: usize, refs: &[(&str, Vec<usize>)], mode: WriterScore) -> Vec<usize> {
    let scores: Vec<f64> = refs
        .iter()
        .map(|(_, r)| {
            let s = r.iter().map(|&j| sims[probe][j]);
            match mode {
                WriterScore::Max => s.fold(f64::NEG_INFINITY, f64::max),
                WriterScore::Mean => s.sum::<f64>() / r.len() as f64,
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..refs.len()).collect();
    // refs are in lexicographic writer order, so the index tie-break is the label tie-break
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    order
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

pub fn nn_classify_eval(idx: &EmbeddingIndex, combos: &[ReferenceCombination], mode: WriterScore) -> Result<ClassificationReport> {
    if combos.is_empty() {
        return Err(Error::InsufficientData("no reference combinations".into()));
    }
    let sims = similarity_matrix(idx)?;
    let e = idx.entries();
    let pos: BTreeMap<&str, usize> = e.iter().enumerate().map(|(i, x)| (x.image_id.as_str(), i)).collect();

    let per_combination: Vec<(f64, f64)> = combos
        .par_iter()
        .map(|c| {
            let mut refs: Vec<(&str, Vec<usize>)> = Vec::with_capacity(c.refs.len());
            for (w, ids) in &c.refs {
                let js = ids.iter().map(|id| pos.get(id.as_str()).copied().ok_or_else(|| Error::param(format!("unknown reference image {id:?}")))).collect::<Result<Vec<_>>>()?;
                refs.push((w.as_str(), js));
            }
            let is_ref: HashSet<usize> = refs.iter().flat_map(|r| r.1.iter().copied()).collect();
            let (mut top1, mut top5, mut probes) = (0usize, 0usize, 0usize);
            for p in (0..e.len()).filter(|p| !is_ref.contains(p)) {
                let order = rank_writers(&sims, p, &refs, mode);
                let Some(rank) = order.iter().position(|&w| refs[w].0 == e[p].writer) else {
                    return Err(Error::param(format!("writer {:?} of probe {:?} has no references", e[p].writer, e[p].image_id)));
                };
                probes += 1;
                top1 += (rank == 0) as usize;
                top5 += (rank < 5) as usize;
            }
            if probes == 0 {
                return Err(Error::InsufficientData("combination leaves no probe images".into()));
            }
            Ok((100.0 * top1 as f64 / probes as f64, 100.0 * top5 as f64 / probes as f64))
        })
        .collect::<Result<_>>()?;

    let (top1_mean, top1_std) = mean_std(&per_combination.iter().map(|p| p.0).collect::<Vec<_>>());
    let (top5_mean, top5_std) = mean_std(&per_combination.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(ClassificationReport {
        top1_mean,
        top1_std,
        top5_mean,
        top5_std,
        combinations: combos.len(),
        std_convention: "population".into(),
        writer_score: mode,
        per_combination,
    })
}
