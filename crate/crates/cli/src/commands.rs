use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use papyrion::analysis::{bin_entry_from_json, correlation_report, merge_writer_json, CorrelationKind};
use papyrion::augment::{run_augmentation, AugmentConfig, AugmentJob};
use papyrion::binarize::{grid_search, invert_gray, GridSpec, LocalThreshParams, Objective, Registry};
use papyrion::corpus::{ingest_pairs, parse_writer_label, run_manifest, ExperimentManifest};
use papyrion::features::{assign_clusters, describe_image, kmeans_fit, read_pdsc, vlad_encode, write_pdsc, Codebook, DescriptorSet, KmeansParams, VladOptions};
use papyrion::imgcore::io::{is_image_path, read_binary, read_raster, write_binary};
use papyrion::imgcore::to_grayscale;
use papyrion::metrics::{evaluate, mean_report};
use papyrion::report::{read_json, write_json, ReportMeta};
use papyrion::writer::{nn_classify_eval, retrieval_eval, sample_reference_sets, Embedding, EmbeddingIndex, WriterScore};
use papyrion::{BinaryImage, RasterImage};

use crate::args::*;
use crate::runner::CliRunner;

fn meta<T: Serialize>(seed: u64, args: &T) -> Result<ReportMeta> {
    Ok(ReportMeta::new(seed, serde_json::to_value(args)?))
}

fn emit<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    Ok(write_json(path, value)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| papyrion::Error::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| papyrion::Error::io(path, e))?;
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn files_with(dir: &Path, keep: impl Fn(&Path) -> bool) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| papyrion::Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && keep(p))
        .collect();
    v.sort();
    Ok(v)
}

fn images_in(dir: &Path) -> Result<Vec<PathBuf>> {
    files_with(dir, is_image_path)
}

fn with_ext(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    files_with(dir, |p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext)))
}

fn params_from(a: &ParamArgs) -> LocalThreshParams {
    let mut p = LocalThreshParams::default();
    if let Some(w) = a.window {
        p.window = w;
    }
    p.k = a.k;
    if let Some(r) = a.r {
        p.r = r;
    }
    if let Some(m) = a.min_n {
        p.min_n = m;
    }
    if let Some(g) = a.glyph {
        p.glyph = g;
    }
    p
}

fn binarize_gray(registry: &Registry, method: &str, params: &LocalThreshParams, invert: bool, gray: &RasterImage) -> Result<BinaryImage> {
    let b = registry.get(method)?;
    Ok(if invert { b.binarize(&invert_gray(gray), params)? } else { b.binarize(gray, params)? })
}

fn binarize_file(registry: &Registry, method: &str, params: &LocalThreshParams, invert: bool, path: &Path) -> Result<BinaryImage> {
    binarize_gray(registry, method, params, invert, &to_grayscale(&read_raster(path)?))
}

pub fn binarize(a: &BinarizeArgs, seed: u64) -> Result<()> {
    let registry = Registry::builtin();
    let params = params_from(&a.params);
    params.validate()?;
    registry.get(&a.method)?;
    let (input, out) = match (a.input.as_ref().or(a.in_path.as_ref()), a.out.as_ref().or(a.out_path.as_ref())) {
        (Some(i), Some(o)) => (i, o),
        _ => bail!(papyrion::Error::Parameter("binarize needs an input and an output path".into())),
    };
    let jobs: Vec<(PathBuf, PathBuf)> = if input.is_dir() {
        std::fs::create_dir_all(out).map_err(|e| papyrion::Error::io(out, e))?;
        images_in(input)?.into_iter().map(|p| { let o = out.join(format!("{}.png", stem(&p))); (p, o) }).collect()
    } else {
        vec![(input.clone(), out.clone())]
    };
    jobs.par_iter().try_for_each(|(src, dst)| -> Result<()> {
        write_binary(dst, &binarize_file(&registry, &a.method, &params, a.params.invert, src)?)?;
        Ok(())
    })?;
    info!("binarized {} image(s) with {}", jobs.len(), a.method);
    if let Some(report) = &a.report {
        let outputs: Vec<String> = jobs.iter().map(|j| j.1.display().to_string()).collect();
        emit(report, &json!({ "meta": meta(seed, a)?, "method": a.method, "params": params, "outputs": outputs }))?;
    }
    Ok(())
}

fn parse_axis(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 3 {
        let n = |t: &str| t.trim().parse::<usize>().with_context(|| format!("bad range {s:?}"));
        return Ok(GridSpec::range(n(parts[0])?, n(parts[1])?, n(parts[2])?)?);
    }
    s.split(',').map(|t| t.trim().parse::<usize>().with_context(|| format!("bad value list {s:?}"))).collect()
}

fn load_pairs(images: &Path, gt: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    let (m, warnings) = ingest_pairs(images, gt, "cli", "")?;
    warnings.iter().for_each(|w| warn!("{w}"));
    Ok(m.rows.into_iter().map(|r| (r.stem, r.image, r.gt.expect("paired row"))).collect())
}

pub fn grid(a: &GridSearchArgs, seed: u64) -> Result<()> {
    let registry = Registry::builtin();
    let methods = if a.methods.is_empty() { registry.names().into_iter().map(String::from).collect() } else { a.methods.clone() };
    let spec = GridSpec::new(methods, parse_axis(&a.window_range)?, parse_axis(&a.minn_range)?, parse_axis(&a.glyph_range)?);
    let objective = Objective::parse(&a.objective)?;
    let pairs = load_pairs(&a.images, &a.gt)?
        .into_par_iter()
        .map(|(_, img, gt)| Ok((to_grayscale(&read_raster(&img)?), read_binary(&gt)?)))
        .collect::<Result<Vec<_>>>()?;
    let result = grid_search(&pairs, &spec, objective, &registry, &LocalThreshParams::default())?;
    for b in &result.best {
        info!("{}: window {:?} second {:?} -> {} {}", b.method, b.window, b.second, objective.name(), b.score);
    }
    if let Some(csv) = &a.csv {
        write_text(csv, &result.to_csv())?;
    }
    if a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return write_text(&a.out, &result.to_csv());
    }
    let mut v = serde_json::to_value(&result)?;
    v["meta"] = serde_json::to_value(meta(seed, a)?)?;
    emit(&a.out, &v)
}

pub fn eval_bin(a: &EvalBinArgs, seed: u64) -> Result<()> {
    let registry = Registry::builtin();
    let params = params_from(&a.params);
    let (dir, binarize_with) = match (&a.pred, &a.images) {
        (Some(p), None) => (p, None),
        (None, Some(i)) => {
            let Some(m) = a.method.as_deref() else { bail!(papyrion::Error::Parameter("--images requires --method".into())) };
            params.validate()?;
            (i, Some(m))
        }
        _ => bail!(papyrion::Error::Parameter("give exactly one of --pred or --images".into())),
    };
    let pairs = load_pairs(dir, &a.gt)?;
    let rows = pairs
        .par_iter()
        .map(|(name, img, gt)| {
            let pred = match binarize_with {
                Some(m) => binarize_file(&registry, m, &params, a.params.invert, img)?,
                None => read_binary(img)?,
            };
            Ok((name.clone(), evaluate(&pred, &read_binary(gt)?)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let reports: Vec<_> = rows.iter().map(|r| r.1).collect();
    let mean = mean_report(&reports).expect("at least one pair");
    let json_rows = rows
        .iter()
        .map(|(name, r)| {
            let mut v = serde_json::to_value(r)?;
            v["image"] = Value::from(name.as_str());
            Ok(v)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(csv) = &a.csv {
        let mut s = String::from("image,fm,pfm,psnr,drd\n");
        for (name, r) in &rows {
            s.push_str(&format!("{name},{},{},{},{}\n", r.fm, r.pfm, r.psnr, r.drd));
        }
        write_text(csv, &s)?;
    }
    info!("{} pairs: FM {:.2} pFM {:.2} PSNR {:.2} DRD {:.2}", rows.len(), mean.fm, mean.pfm, mean.psnr, mean.drd);
    let mean = serde_json::to_value(mean)?;
    emit(
        &a.out,
        &json!({
            "meta": meta(seed, a)?,
            "method": a.method,
            "subset": a.subset,
            "rows": json_rows,
            "mean_fm": mean["fm"],
            "mean_pfm": mean["pfm"],
            "mean_psnr": mean["psnr"],
            "mean_drd": mean["drd"],
        }),
    )
}

pub fn augment(a: &AugmentArgs, seed: u64) -> Result<()> {
    let registry = Registry::builtin();
    let job = AugmentJob {
        sources: images_in(&a.sources)?,
        papyri: images_in(&a.papyri)?,
        masks: a.masks.clone(),
        out_dir: a.out.clone(),
        cfg: AugmentConfig { inpaint_radius: a.radius, texture_alpha: a.alpha, bg_threshold: a.bg_threshold, seed },
        mask_binarizer: registry.get(&a.mask_method)?,
        mask_params: LocalThreshParams::with_window(a.mask_window),
    };
    let manifest = run_augmentation(&job)?;
    for r in &manifest.rejected_overlays {
        warn!("papyrus {r} rejected as overlay: background too dark");
    }
    info!("wrote {} augmented image(s) to {}", manifest.entries.len(), a.out.display());
    emit(&a.out.join("manifest.json"), &manifest)
}

pub fn extract(a: &ExtractArgs, seed: u64) -> Result<()> {
    let registry = Registry::builtin();
    let params = params_from(&a.params);
    if a.binary.is_none() {
        params.validate()?;
        registry.get(&a.method)?;
    }
    std::fs::create_dir_all(&a.out).map_err(|e| papyrion::Error::io(&a.out, e))?;
    let binaries: BTreeMap<String, PathBuf> = match &a.binary {
        Some(dir) => images_in(dir)?.into_iter().map(|p| (stem(&p).to_lowercase(), p)).collect(),
        None => BTreeMap::new(),
    };
    let counts = images_in(&a.images)?
        .par_iter()
        .map(|img| {
            let id = stem(img);
            let gray = to_grayscale(&read_raster(img)?);
            let binary = match &a.binary {
                Some(_) => {
                    let p = binaries.get(&id.to_lowercase()).with_context(|| format!("no binarized image for {id}"))?;
                    read_binary(p)?
                }
                None => binarize_gray(&registry, &a.method, &params, a.params.invert, &gray)?,
            };
            let set = describe_image(&id, &gray, &binary, a.min_fg)?;
            write_pdsc(&a.out.join(format!("{id}.pdsc")), &set)?;
            Ok((id, set.len()))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_image: BTreeMap<String, usize> = counts.into_iter().collect();
    info!("described {} image(s)", per_image.len());
    emit(&a.out.join("extract_report.json"), &json!({ "meta": meta(seed, a)?, "descriptors": per_image }))
}

fn load_descriptors(dir: &Path) -> Result<Vec<DescriptorSet>> {
    let sets = with_ext(dir, "pdsc")?.iter().map(|p| Ok(read_pdsc(p)?)).collect::<Result<Vec<_>>>()?;
    if sets.is_empty() {
        bail!(papyrion::Error::InsufficientData(format!("no .pdsc files in {}", dir.display())));
    }
    if let Some(s) = sets.iter().find(|s| s.d != sets[0].d) {
        bail!(papyrion::Error::DimensionMismatch { left: (sets[0].d, 1), right: (s.d, 1) });
    }
    Ok(sets)
}

fn stacked(sets: &[DescriptorSet]) -> Vec<f32> {
    sets.iter().flat_map(|s| s.values.iter().copied()).collect()
}

pub fn codebook(a: &CodebookArgs, seed: u64) -> Result<()> {
    let sets = load_descriptors(&a.desc)?;
    let cb = kmeans_fit(&stacked(&sets), sets[0].d, a.k, seed, &KmeansParams { max_iter: a.max_iter, tol: a.tol })?;
    info!("k={} inertia {} after {} iterations", cb.k, cb.inertia, cb.iterations);
    emit(&a.out, &json!({ "meta": meta(seed, a)?, "codebook": cb }))
}

pub fn surrogate(a: &SurrogateArgs, seed: u64) -> Result<()> {
    let sets = load_descriptors(&a.desc)?;
    let d = sets[0].d;
    let data = stacked(&sets);
    let cb = kmeans_fit(&data, d, a.k, seed, &KmeansParams { max_iter: a.max_iter, ..Default::default() })?;
    let ids = assign_clusters(&data, d, &cb)?;
    let mut csv = String::from("image,patch-index,cluster\n");
    let mut it = ids.iter();
    for s in &sets {
        for i in 0..s.len() {
            csv.push_str(&format!("{},{i},{}\n", s.image_id, it.next().expect("one id per row")));
        }
    }
    write_text(&a.out, &csv)?;
    if let Some(path) = &a.codebook_out {
        emit(path, &json!({ "meta": meta(seed, a)?, "codebook": cb }))?;
    }
    Ok(())
}

fn load_codebook(path: &Path) -> Result<Codebook> {
    let v: Value = read_json(path)?;
    let cb: Codebook = serde_json::from_value(v.get("codebook").cloned().unwrap_or(v)).with_context(|| format!("{} is not a codebook", path.display()))?;
    cb.validate()?;
    Ok(cb)
}

#[derive(Serialize, serde::Deserialize)]
struct EmbeddingFile {
    meta: ReportMeta,
    image_id: String,
    writer: String,
    degenerate: bool,
    values: Vec<f64>,
}

pub fn encode(a: &EncodeArgs, seed: u64) -> Result<()> {
    let cb = load_codebook(&a.codebook)?;
    let sets = load_descriptors(&a.desc)?;
    std::fs::create_dir_all(&a.out).map_err(|e| papyrion::Error::io(&a.out, e))?;
    let m = meta(seed, a)?;
    sets.par_iter().try_for_each(|s| -> Result<()> {
        let v = vlad_encode(s, &cb, VladOptions { intra_norm: a.intra_norm })?;
        if v.degenerate {
            warn!("{}: degenerate (all-zero) embedding", s.image_id);
        }
        let (writer, w) = parse_writer_label(&s.image_id);
        if let Some(w) = w {
            warn!("{w}");
        }
        let file = EmbeddingFile { meta: m.clone(), image_id: v.image_id, writer, degenerate: v.degenerate, values: v.values };
        emit(&a.out.join(format!("{}.json", s.image_id)), &file)?;
        Ok(())
    })
}

fn load_index(dir: &Path) -> Result<EmbeddingIndex> {
    let entries = with_ext(dir, "json")?
        .iter()
        .map(|p| {
            let f: EmbeddingFile = read_json(p).with_context(|| format!("{} is not an embedding file", p.display()))?;
            Ok(Embedding { image_id: f.image_id, writer: f.writer, values: f.values })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EmbeddingIndex::new(entries)?)
}

pub fn retrieve(a: &RetrieveArgs, seed: u64) -> Result<()> {
    let idx = load_index(&a.emb)?;
    let r = retrieval_eval(&idx)?;
    info!("mAP {:.2} top-1 {:.2} top-5 {:.2} top-10 {:.2}", r.map, r.top1, r.top5, r.top10);
    emit(&a.out, &json!({ "meta": meta(seed, a)?, "method": a.method, "retrieval": r }))
}

pub fn classify(a: &ClassifyArgs, seed: u64) -> Result<()> {
    let idx = load_index(&a.emb)?;
    let combos = sample_reference_sets(&idx, a.refs, a.combinations, seed)?;
    let mode = match a.writer_score {
        ScoreArg::Max => WriterScore::Max,
        ScoreArg::Mean => WriterScore::Mean,
    };
    let r = nn_classify_eval(&idx, &combos, mode)?;
    info!("top-1 {:.2} ± {:.2}, top-5 {:.2} ± {:.2}", r.top1_mean, r.top1_std, r.top5_mean, r.top5_std);
    emit(&a.out, &json!({ "meta": meta(seed, a)?, "method": a.method, "classification": r, "reference_sets": combos }))
}

fn glob_json(pattern: &str) -> Result<Vec<(PathBuf, Value)>> {
    let mut paths: Vec<PathBuf> = glob::glob(pattern).with_context(|| format!("bad glob {pattern:?}"))?.filter_map(|p| p.ok()).collect();
    paths.sort();
    if paths.is_empty() {
        bail!(papyrion::Error::InsufficientData(format!("no files match {pattern:?}")));
    }
    paths.into_iter().map(|p| Ok((p.clone(), read_json(&p)?))).collect()
}

pub fn correlate(a: &CorrelateArgs, seed: u64) -> Result<()> {
    let bins = glob_json(&a.bin_reports)?
        .iter()
        .map(|(p, v)| bin_entry_from_json(v).with_context(|| p.display().to_string()))
        .collect::<Result<Vec<_>>>()?;
    let mut writers = BTreeMap::new();
    for (p, v) in glob_json(&a.writer_reports)? {
        merge_writer_json(&v, &mut writers).with_context(|| p.display().to_string())?;
    }
    let writers: Vec<_> = writers.into_values().collect();
    let kind = if a.spearman { CorrelationKind::Spearman } else { CorrelationKind::Pearson };
    let report = correlation_report(&bins, &writers, kind)?;
    report.warnings.iter().for_each(|w| warn!("{w}"));
    if let Some(path) = &a.scatter {
        write_text(path, &report.scatter_csv())?;
    }
    emit(&a.out, &json!({ "meta": meta(seed, a)?, "correlation": report }))
}

pub fn run(a: &RunArgs) -> Result<()> {
    let m: ExperimentManifest = read_json(&a.experiment)?;
    let report = run_manifest(&m, &CliRunner, &a.report)?;
    if let Some(failed) = report.stages.iter().find(|s| s.error.is_some()) {
        bail!(papyrion::Error::Manifest(format!("stage {:?} failed: {}", failed.id, failed.error.as_deref().unwrap_or(""))));
    }
    Ok(())
}
