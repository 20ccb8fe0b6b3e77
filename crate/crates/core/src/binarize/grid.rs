//! Exhaustive parameter search over window / minN / glyph grids.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GridAxes, LocalThreshParams, Registry};
use crate::imgcore::{BinaryImage, RasterImage};
use crate::metrics;
use crate::report::inf_f64;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Fm,
    Pfm,
    Psnr,
    Drd,
}

impl Objective {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fm" => Ok(Objective::Fm),
            "pfm" => Ok(Objective::Pfm),
            "psnr" => Ok(Objective::Psnr),
            "drd" => Ok(Objective::Drd),
            other => Err(Error::param(format!("unknown objective '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Objective::Fm => "fm",
            Objective::Pfm => "pfm",
            Objective::Psnr => "psnr",
            Objective::Drd => "drd",
        }
    }

    /// DRD is a penalty; everything else is a score.
    pub fn is_better(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Objective::Drd => candidate < incumbent,
            _ => candidate > incumbent,
        }
    }

    fn score(self, pred: &BinaryImage, gt: &BinaryImage) -> Result<f64> {
        match self {
            Objective::Fm => Ok(metrics::f_measure(&metrics::confusion(pred, gt)?)),
            Objective::Pfm => metrics::pseudo_f_measure(pred, gt),
            Objective::Psnr => metrics::psnr(pred, gt),
            Objective::Drd => metrics::drd(pred, gt),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub methods: Vec<String>,
    pub windows: Vec<usize>,
    pub min_ns: Vec<usize>,
    pub glyphs: Vec<usize>,
}

impl GridSpec {
    /// Even window sizes are bumped to the next odd value; lists are sorted and deduplicated.
    pub fn new(methods: Vec<String>, windows: Vec<usize>, min_ns: Vec<usize>, glyphs: Vec<usize>) -> Self {
        let norm = |mut v: Vec<usize>| {
            v.sort_unstable();
            v.dedup();
            v
        };
        Self {
            methods,
            windows: norm(windows.into_iter().map(|w| w | 1).collect()),
            min_ns: norm(min_ns),
            glyphs: norm(glyphs),
        }
    }

    /// Inclusive arithmetic range `start..=end` in steps of `step`.
    pub fn range(start: usize, end: usize, step: usize) -> Result<Vec<usize>> {
        if step == 0 || start > end {
            return Err(Error::param(format!("bad range {start}:{end}:{step}")));
        }
        Ok((start..=end).step_by(step).collect())
    }

    /// Windows 37..=147, minN 37..=147 and glyph 30..=120, all in steps of 10.
    pub fn default_search(methods: Vec<String>) -> Self {
        Self::new(
            methods,
            Self::range(37, 147, 10).unwrap(),
            Self::range(37, 147, 10).unwrap(),
            Self::range(30, 120, 10).unwrap(),
        )
    }
}

/// One evaluated grid cell. `second` is minN for Su, glyph for Gatos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub method: String,
    pub window: Option<usize>,
    pub second: Option<usize>,
    #[serde(with = "inf_f64")]
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub objective: Objective,
    pub best: Vec<GridCell>,
    pub table: Vec<GridCell>,
}

impl GridResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,window,second,score\n");
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        for c in &self.table {
            let score = if c.score.is_infinite() { "inf".to_string() } else { c.score.to_string() };
            out.push_str(&format!("{},{},{},{}\n", c.method, opt(c.window), opt(c.second), score));
        }
        out
    }
}

fn cells_for(axes: GridAxes, spec: &GridSpec) -> Vec<(Option<usize>, Option<usize>)> {
    let pairs = |seconds: &[usize]| {
        spec.windows
            .iter()
            .flat_map(|&w| seconds.iter().map(move |&s| (Some(w), Some(s))))
            .collect::<Vec<_>>()
    };
    match axes {
        GridAxes::None => vec![(None, None)],
        GridAxes::Window => spec.windows.iter().map(|&w| (Some(w), None)).collect(),
        GridAxes::WindowMinN => pairs(&spec.min_ns),
        GridAxes::WindowGlyph => pairs(&spec.glyphs),
    }
}

/// Evaluates every cell of every requested method on every pair and returns,
/// per method, the cell with the best mean objective. Ties keep the smallest
/// window, then the smallest second parameter.
pub fn grid_search(
    pairs: &[(RasterImage, BinaryImage)],
    spec: &GridSpec,
    objective: Objective,
    registry: &Registry,
    base: &LocalThreshParams,
) -> Result<GridResult> {
    if pairs.is_empty() {
        return Err(Error::param("grid search needs at least one image/ground-truth pair"));
    }
    if spec.methods.is_empty() {
        return Err(Error::param("empty method list"));
    }

    let mut tasks = Vec::new();
    for name in &spec.methods {
        let method = registry.get(name)?;
        let cells = cells_for(method.grid_axes(), spec);
        if cells.is_empty() {
            return Err(Error::param(format!("empty grid for method '{name}'")));
        }
        for (window, second) in cells {
            let mut params = base.clone();
            if let Some(w) = window {
                params.window = w;
            }
            match (method.grid_axes(), second) {
                (GridAxes::WindowMinN, Some(s)) => params.min_n = s,
                (GridAxes::WindowGlyph, Some(s)) => params.glyph = s,
                _ => {}
            }
            params.validate()?;
            tasks.push((method.name(), window, second, params));
        }
    }

    // every (cell, image) pair is an independent task; means are reduced in image order
    let scores: Vec<Result<f64>> = tasks
        .par_iter()
        .flat_map_iter(|(name, _, _, params)| {
            pairs.iter().map(move |(gray, gt)| {
                let pred = registry.get(name)?.binarize(gray, params)?;
                objective.score(&pred, gt)
            })
        })
        .collect();

    let n = pairs.len();
    let mut table = Vec::with_capacity(tasks.len());
    for (t, (name, window, second, _)) in tasks.iter().enumerate() {
        let mut total = 0f64;
        for s in &scores[t * n..(t + 1) * n] {
            total += *s.as_ref().map_err(|e| Error::param(format!("{name}: {e}")))?;
        }
        table.push(GridCell { method: name.to_string(), window: *window, second: *second, score: total / n as f64 });
    }

    let mut best: Vec<GridCell> = Vec::new();
    for name in &spec.methods {
        let name = registry.get(name)?.name();
        let mut incumbent: Option<&GridCell> = None;
        // table rows are already in (window, second) ascending order per method
        for cell in table.iter().filter(|c| c.method == name) {
            if incumbent.is_none_or(|b| objective.is_better(cell.score, b.score)) {
                incumbent = Some(cell);
            }
        }
        if let Some(c) = incumbent {
            if !best.iter().any(|b| b.method == c.method) {
                best.push(c.clone());
            }
        }
    }
    Ok(GridResult { objective, best, table })
}
