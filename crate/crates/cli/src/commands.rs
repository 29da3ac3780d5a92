use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use scatiris::corpus::{self, DatasetManifest, Split, SyntheticSpec};
use scatiris::features::{FitOptions, PcaModel, ReducedVector};
use scatiris::matcher::{self, Gallery};
use scatiris::persist::{self, FeatureRecord};
use scatiris::pipeline::{FeatureExtractor, PipelineConfig};
use scatiris::texture::BlockGrid;
use scatiris::{load_image, ColorPolicy, GrayImage};

use crate::ConfigArgs;

pub fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (x, y) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected COLSxROWS, got `{s}`"))?;
    Ok((
        x.trim().parse().map_err(|e| format!("bad grid: {e}"))?,
        y.trim().parse().map_err(|e| format!("bad grid: {e}"))?,
    ))
}

pub fn parse_offset(s: &str) -> Result<(i32, i32), String> {
    let (dx, dy) = s
        .split_once(',')
        .ok_or_else(|| format!("expected DX,DY, got `{s}`"))?;
    Ok((
        dx.trim().parse().map_err(|e| format!("bad offset: {e}"))?,
        dy.trim().parse().map_err(|e| format!("bad offset: {e}"))?,
    ))
}

/// defaults <- config file <- command-line flags
fn resolve_config(args: &ConfigArgs) -> Result<PipelineConfig> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::from_toml_file(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.width {
        config.width = v;
    }
    if let Some(v) = args.height {
        config.height = v;
    }
    if let Some(v) = args.scales {
        config.scattering.scales = v;
    }
    if let Some(v) = args.orientations {
        config.scattering.orientations = v;
    }
    if let Some(v) = args.layers {
        config.scattering.max_layer = v;
    }
    if let Some((x, y)) = args.grid {
        config.texture.grid = BlockGrid::new(x, y);
    }
    if let Some(v) = args.levels {
        config.texture.levels = v;
    }
    if let Some(v) = args.offset {
        config.texture.offset = v;
    }
    if args.no_texture {
        config.texture.enabled = false;
    }
    if args.luma {
        config.luma_conversion = true;
    }
    if args.standardize {
        config.pca.standardize = true;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    config.validate()?;
    Ok(config)
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .context("building worker pool")
}

pub fn synth(
    out: &Path,
    classes: usize,
    per_class: usize,
    noise: f64,
    train_fraction: f64,
    config_args: &ConfigArgs,
) -> Result<()> {
    let config = resolve_config(config_args)?;
    let spec = SyntheticSpec::new(
        classes,
        per_class,
        config.width,
        config.height,
        noise,
        config.seed,
    )?;
    let manifest = corpus::generate_synthetic(&spec, out)?;
    let manifest = corpus::split_dataset(&manifest, train_fraction, config.seed)?;
    let manifest_path = out.join("manifest.tsv");
    manifest.save(&manifest_path)?;
    println!(
        "synthesized {} images ({} classes x {} each, {}x{}) under {}",
        manifest.len(),
        classes,
        per_class,
        config.width,
        config.height,
        out.display()
    );
    println!(
        "manifest: {} ({} train / {} test)",
        manifest_path.display(),
        manifest.of_split(Split::Train).count(),
        manifest.of_split(Split::Test).count()
    );
    Ok(())
}

/// Flat artifact stem derived from the manifest-relative image path.
fn artifact_stem(rel: &Path) -> String {
    let mut stem = rel.to_string_lossy().replace(['/', '\\'], "_");
    if let Some(idx) = stem.rfind('.') {
        stem.truncate(idx);
    }
    stem
}

fn load_working_image(manifest_dir: &Path, rel: &Path, colors: ColorPolicy) -> Result<GrayImage> {
    let path = manifest_dir.join(rel);
    let img =
        load_image(&path, colors).with_context(|| format!("loading image {}", path.display()))?;
    Ok(img)
}

pub fn extract(
    manifest_path: &Path,
    out: &Path,
    threads: Option<usize>,
    texture_csv: Option<&Path>,
    config_args: &ConfigArgs,
) -> Result<()> {
    let config = resolve_config(config_args)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    if manifest.is_empty() {
        bail!("manifest {} has no entries", manifest_path.display());
    }
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    if let Some(dir) = texture_csv {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let extractor = FeatureExtractor::new(config.clone())?;
    let config_json = config.to_json();
    let pool = thread_pool(threads)?;
    let results: Vec<Result<(usize, usize)>> = pool.install(|| {
        manifest
            .entries()
            .par_iter()
            .map(|entry| -> Result<(usize, usize)> {
                let img = load_working_image(manifest_dir, &entry.path, config.color_policy())?;
                let (fs_part, ft_part) = extractor
                    .extract_parts(&img)
                    .with_context(|| format!("extracting features for {}", entry.path.display()))?;
                if let (Some(dir), Some(ft)) = (texture_csv, ft_part.as_ref()) {
                    let csv = scatiris::texture::haralick_csv(ft.blocks());
                    fs::write(dir.join(format!("{}.csv", artifact_stem(&entry.path))), csv)
                        .with_context(|| "writing texture CSV")?;
                }
                let features = match ft_part {
                    Some(ft) => scatiris::concat_features(&fs_part, &ft)?,
                    None => scatiris::FeatureVector::scatter_only(&fs_part)?,
                };
                let lens = (features.scatter_len(), features.texture_len());
                let record = FeatureRecord {
                    subject: entry.subject.clone(),
                    split: entry.split,
                    source: entry.path.to_string_lossy().into_owned(),
                    features,
                };
                let name = format!("{}.scir", artifact_stem(&entry.path));
                persist::save_features(&record, &config_json, out.join(name))?;
                Ok(lens)
            })
            .collect()
    });

    let mut dims = None;
    for result in results {
        let lens = result?;
        dims = Some(lens);
    }
    let (scatter_len, texture_len) = dims.expect("nonempty manifest produced records");
    println!(
        "extracted {} feature vectors of length {} (scattering {} + texture {}) into {}",
        manifest.len(),
        scatter_len + texture_len,
        scatter_len,
        texture_len,
        out.display()
    );
    Ok(())
}

fn load_feature_dir(dir: &Path) -> Result<(Vec<FeatureRecord>, String)> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "scir"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .scir feature files under {}", dir.display());
    }
    let mut records = Vec::with_capacity(paths.len());
    let mut config_json: Option<String> = None;
    for path in &paths {
        let (record, config) = persist::load_features(path)?;
        match &config_json {
            None => config_json = Some(config),
            Some(existing) if *existing != config => {
                bail!(
                    "feature files under {} were produced by different configurations",
                    dir.display()
                );
            }
            _ => {}
        }
        records.push(record);
    }
    Ok((records, config_json.expect("at least one record")))
}

pub fn train(
    features_dir: &Path,
    epsilon: Option<f64>,
    k: Option<usize>,
    out_model: &Path,
    out_gallery: &Path,
) -> Result<()> {
    let (records, config_json) = load_feature_dir(features_dir)?;
    let mut config = PipelineConfig::from_json(&config_json)?;
    if let Some(eps) = epsilon {
        config.pca.epsilon = eps;
        config.pca.components = None;
    }
    if let Some(k) = k {
        config.pca.components = Some(k);
    }
    config.validate()?;

    let train: Vec<&FeatureRecord> = records.iter().filter(|r| r.split == Split::Train).collect();
    if train.is_empty() {
        bail!("no records tagged `train` under {}", features_dir.display());
    }
    let subjects: std::collections::BTreeSet<&str> =
        train.iter().map(|r| r.subject.as_str()).collect();
    if subjects.len() == 1 {
        eprintln!("warning: train split has a single subject; evaluation will be trivially 100%");
    }

    let rows: Vec<&[f64]> = train.iter().map(|r| r.features.values()).collect();
    let model = PcaModel::fit_rows(
        &rows,
        FitOptions {
            standardize: config.pca.standardize,
            ..FitOptions::default()
        },
    )?;
    let chosen_k = match config.pca.components {
        Some(k) => {
            if k > model.dim() {
                bail!(
                    "requested k {} exceeds feature dimension {}",
                    k,
                    model.dim()
                );
            }
            k
        }
        None => model.choose_k(config.pca.epsilon)?,
    };
    let retained = model.retained_variance(chosen_k)?;

    let mut gallery = Gallery::new();
    for record in &train {
        let template = model.project(&record.features, chosen_k)?;
        gallery.enroll(record.subject.clone(), &template)?;
    }

    let echo = config.to_json();
    persist::save_model(&model, &echo, out_model)?;
    persist::save_gallery(&gallery, &echo, out_gallery)?;
    println!(
        "trained on {} images of {} subjects; K = {chosen_k} retains {:.4} of variance",
        train.len(),
        subjects.len(),
        retained
    );
    println!("model: {}", out_model.display());
    println!("gallery: {}", out_gallery.display());
    Ok(())
}

fn parse_k_grid(text: &str, max_k: usize) -> Result<Vec<usize>> {
    let mut grid = Vec::new();
    for token in text.split(',') {
        let token = token.trim();
        if token.is_empty() {
            continue;
        }
        let k: usize = token
            .parse()
            .with_context(|| format!("bad k-grid entry `{token}`"))?;
        grid.push(k);
    }
    grid.sort_unstable();
    grid.dedup();
    let dropped: Vec<usize> = grid.iter().copied().filter(|&k| k > max_k).collect();
    if !dropped.is_empty() {
        eprintln!(
            "warning: dropping k-grid entries beyond the template dimension {max_k}: {dropped:?}"
        );
    }
    grid.retain(|&k| k >= 1 && k <= max_k);
    if grid.is_empty() {
        bail!("k-grid has no usable entries (template dimension is {max_k})");
    }
    Ok(grid)
}

pub fn evaluate(
    model_path: &Path,
    gallery_path: &Path,
    manifest_path: &Path,
    k_grid_text: &str,
    out: &Path,
    out_csv: Option<&Path>,
    threads: Option<usize>,
) -> Result<()> {
    let (model, config_json) = persist::load_model(model_path)?;
    let (gallery, _) = persist::load_gallery(gallery_path)?;
    if gallery.fingerprint() != Some(model.fingerprint()) {
        return Err(scatiris::Error::FingerprintMismatch.into());
    }
    let config = PipelineConfig::from_json(&config_json)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let manifest_dir = manifest_path.parent().unwrap_or(Path::new("."));
    let k = gallery.dim().ok_or(scatiris::Error::EmptyGallery)?;
    let k_grid = parse_k_grid(k_grid_text, k)?;
    if gallery.subjects().len() == 1 {
        eprintln!("warning: gallery holds a single subject; accuracy is trivially 100%");
    }

    let extractor = FeatureExtractor::new(config.clone())?;
    let test_entries: Vec<_> = manifest.of_split(Split::Test).collect();
    if test_entries.is_empty() {
        bail!("manifest {} has no test entries", manifest_path.display());
    }
    let pool = thread_pool(threads)?;
    let probes: Vec<(String, ReducedVector)> = pool.install(|| {
        test_entries
            .par_iter()
            .map(|entry| -> Result<(String, ReducedVector)> {
                let img = load_working_image(manifest_dir, &entry.path, config.color_policy())?;
                let features = extractor
                    .extract(&img)
                    .with_context(|| format!("extracting features for {}", entry.path.display()))?;
                Ok((entry.subject.clone(), model.project(&features, k)?))
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let report = matcher::evaluate(&gallery, &probes, &k_grid)?;
    let json = serde_json::json!({
        "config": config,
        "report": report,
    });
    fs::write(out, serde_json::to_string_pretty(&json)?)
        .with_context(|| format!("writing {}", out.display()))?;
    let csv_path = out_csv
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("csv"));
    fs::write(&csv_path, matcher::eval_curve_csv(&report))
        .with_context(|| format!("writing {}", csv_path.display()))?;

    println!(
        "rank-1 accuracy: {:.4} over {} probes (K = {k})",
        report.rank1_accuracy, report.probe_count
    );
    for (k_prime, acc) in &report.curve {
        println!("  K'={k_prime:>4}  accuracy {acc:.4}");
    }
    println!("report: {} / {}", out.display(), csv_path.display());
    Ok(())
}

pub fn identify(model_path: &Path, gallery_path: &Path, image_path: &Path) -> Result<()> {
    let (model, config_json) = persist::load_model(model_path)?;
    let (gallery, _) = persist::load_gallery(gallery_path)?;
    if gallery.fingerprint() != Some(model.fingerprint()) {
        return Err(scatiris::Error::FingerprintMismatch.into());
    }
    let config = PipelineConfig::from_json(&config_json)?;
    let extractor = FeatureExtractor::new(config.clone())?;
    let img = load_image(image_path, config.color_policy())
        .with_context(|| format!("loading image {}", image_path.display()))?;
    let features = extractor.extract(&img)?;
    let k = gallery.dim().ok_or(scatiris::Error::EmptyGallery)?;
    let probe = model.project(&features, k)?;
    let result = matcher::identify(&gallery, &probe)?;
    println!("{} {}", result.subject, result.distance);
    Ok(())
}

pub fn bench(images_dir: &Path, reps: usize, config_args: &ConfigArgs) -> Result<()> {
    let config = resolve_config(config_args)?;
    if reps == 0 {
        bail!("need at least one repetition");
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(images_dir)
        .with_context(|| format!("reading {}", images_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no .pgm images under {}", images_dir.display());
    }
    let images: Vec<GrayImage> = paths
        .iter()
        .map(|p| {
            load_image(p, config.color_policy()).with_context(|| format!("loading {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;

    let extractor = FeatureExtractor::new(config.clone())?;

    // a warm-up pass doubles as the model/gallery builder for the matching leg
    let features: Vec<scatiris::FeatureVector> = images
        .iter()
        .map(|img| extractor.extract(img))
        .collect::<scatiris::Result<Vec<_>>>()?;
    let matching = if features.len() >= 2 {
        let rows: Vec<&[f64]> = features.iter().map(|f| f.values()).collect();
        let model = PcaModel::fit_rows(&rows, FitOptions::default())?;
        let k = model.rank().max(1);
        let mut gallery = Gallery::new();
        for (idx, f) in features.iter().enumerate() {
            gallery.enroll(format!("img{idx:03}"), &model.project(f, k)?)?;
        }
        Some((model, gallery, k))
    } else {
        eprintln!("warning: single image; benchmarking extraction only");
        None
    };

    let mut latencies_ms = Vec::with_capacity(reps * images.len());
    for _rep in 0..reps {
        for img in &images {
            let started = Instant::now();
            let f = extractor.extract(img)?;
            if let Some((model, gallery, k)) = &matching {
                let probe = model.project(&f, *k)?;
                let _ = matcher::identify(gallery, &probe)?;
            }
            latencies_ms.push(started.elapsed().as_secs_f64() * 1e3);
        }
    }
    latencies_ms.sort_by(|a, b| a.partial_cmp(b).expect("finite latencies"));
    let median = percentile(&latencies_ms, 0.50);
    let p95 = percentile(&latencies_ms, 0.95);

    println!(
        "benchmark: {} images x {} repetitions = {} timed extract+match runs at {}x{}",
        images.len(),
        reps,
        latencies_ms.len(),
        config.width,
        config.height
    );
    println!("median per-image latency: {median:.2} ms");
    println!("p95    per-image latency: {p95:.2} ms");
    println!(
        "machine: {} {}, {} logical cpus",
        std::env::consts::OS,
        std::env::consts::ARCH,
        std::thread::available_parallelism().map_or(0, usize::from)
    );
    if median > 100.0 {
        eprintln!("warning: median latency {median:.2} ms exceeds the 100 ms advisory budget");
    }
    Ok(())
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx.min(sorted.len() - 1)]
}
