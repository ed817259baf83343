//! Command implementations behind the `skymatte` binary: corpus refinement,
//! upsampling, grading, evaluation, benchmarking and fixture generation.
//!
//! Batch commands keep going when one item fails and report per-item
//! status; [`BatchReport::exit_code`] turns that into 0 (all ok) or 1.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, UpsampleParams};
use crate::confidence::inference_confidence;
use crate::effects::{apply_chain, Effect, GradingConfig};
use crate::error::{Error, Result};
use crate::imagecore::{resize_bilinear, rgb_to_yuv, ColorSpace, PlanarImage, RangePolicy};
use crate::io::{self, BitDepth, Transfer};
use crate::metrics::{evaluate, MetricsReport};
use crate::refine::{refine_annotation, Annotation};
use crate::synth::make_synthetic_scene;
use crate::trimap::Label;
use crate::wgf::{apply_coefficients, match_reference_size, solve_coefficients, weighted_moments};

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("thread count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Outcome of one item of a batch command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemStatus {
    pub name: String,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BatchReport {
    pub items: Vec<ItemStatus>,
}

impl BatchReport {
    pub fn failures(&self) -> usize {
        self.items.iter().filter(|i| i.error.is_some()).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            1
        }
    }

    fn push(&mut self, name: String, result: Result<()>) {
        match &result {
            Ok(()) => log::info!("{name}: ok"),
            Err(e) => log::error!("{name}: {e}"),
        }
        self.items.push(ItemStatus {
            name,
            error: result.err().map(|e| e.to_string()),
        });
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn parent_dir(path: &Path) -> PathBuf {
    path.parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// One manifest entry. Relative paths resolve against the manifest's
/// directory; `params` overrides the run config for this image only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineJob {
    pub image_path: PathBuf,
    pub annotation_path: PathBuf,
    pub output_path: PathBuf,
    #[serde(default)]
    pub params: RunConfig,
}

/// Reads an annotation file.
///
/// PFM files are continuous mattes. PNGs are read as trimaps; one without
/// undetermined pixels is a binary mask.
pub fn read_annotation(path: &Path) -> Result<Annotation> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
    {
        return Ok(Annotation::Alpha(
            io::read_pfm(path)?.with_space(ColorSpace::Mask)?,
        ));
    }
    let t = io::read_trimap(path)?;
    Ok(if t.count(Label::Undetermined) > 0 {
        Annotation::Trimap(t)
    } else {
        Annotation::Binary {
            mask: t.to_mask(),
            extra_undetermined: None,
        }
    })
}

fn refine_job(job: &RefineJob, base: &Path, config: &RunConfig, transfer: Transfer) -> Result<()> {
    let params = config.overlay(&job.params).refine_params()?;
    let img = io::read_rgb(&resolve(base, &job.image_path), transfer)?;
    let annotation = read_annotation(&resolve(base, &job.annotation_path))?;
    let alpha = refine_annotation(&img, &annotation, &params)?;
    io::write_matte(&resolve(base, &job.output_path), &alpha)
}

/// Refines every manifest entry. A malformed manifest or config is an
/// error; failures of single images are recorded in the report.
pub fn cmd_refine(manifest: &Path, config: &RunConfig, transfer: Transfer) -> Result<BatchReport> {
    config.refine_params()?;
    let text = fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
    let jobs: Vec<RefineJob> = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest.display())))?;
    let base = parent_dir(manifest);
    let results: Vec<Result<()>> = jobs
        .par_iter()
        .map(|job| refine_job(job, &base, config, transfer))
        .collect();
    let mut report = BatchReport::default();
    for (job, result) in jobs.iter().zip(results) {
        report.push(job.image_path.display().to_string(), result);
    }
    Ok(report)
}

/// Brings a low-resolution sky probability map to the resolution of `rgb`:
/// confidence from the probabilities, bilinear resize of both, then the
/// weighted guided filter guided by the YUV image.
pub fn upsample_matte(
    probability: &PlanarImage,
    rgb: &PlanarImage,
    params: &UpsampleParams,
) -> Result<PlanarImage> {
    upsample_matte_timed(probability, rgb, params).map(|(m, _)| m)
}

/// Per-stage wall-clock times of one [`upsample_matte`] call, in ms.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    pub confidence: f64,
    pub moments: f64,
    pub solve: f64,
    pub upsample: f64,
    pub linear_systems: usize,
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

pub fn upsample_matte_timed(
    probability: &PlanarImage,
    rgb: &PlanarImage,
    params: &UpsampleParams,
) -> Result<(PlanarImage, StageTimes)> {
    rgb.check_channels(3, "reference image")?;
    let probability = probability.clone().with_space(ColorSpace::Mask)?;
    let mut times = StageTimes::default();

    let t = Instant::now();
    let c = inference_confidence(&probability, &params.confidence)?;
    let (p, c) = match_reference_size(rgb, &probability, &c)?;
    times.confidence = ms(t);

    let t = Instant::now();
    let reference = rgb_to_yuv(rgb, RangePolicy::Clamp)?;
    let moments = weighted_moments(&reference, &p, &c, params.gf.s)?;
    times.moments = ms(t);

    let t = Instant::now();
    let coeffs = solve_coefficients(&moments, &params.gf)?;
    times.solve = ms(t);
    times.linear_systems = coeffs.systems_solved();

    let t = Instant::now();
    let matte = apply_coefficients(&coeffs, &reference, params.gf.s)?;
    times.upsample = ms(t);
    Ok((matte, times))
}

pub fn cmd_upsample(
    probability: &Path,
    reference: &Path,
    output: &Path,
    config: &RunConfig,
    transfer: Transfer,
) -> Result<()> {
    let params = config.upsample_params()?;
    let p = io::read_mask(probability)?;
    let rgb = io::read_rgb(reference, transfer)?;
    let matte = upsample_matte(&p, &rgb, &params)?;
    io::write_matte(output, &matte)
}

/// Applies a grading config to `image` under `matte`. An empty effect list
/// copies the input file unchanged. PNG output keeps the input bit depth.
pub fn cmd_grade(
    image: &Path,
    matte: &Path,
    grading: &Path,
    output: &Path,
    transfer: Transfer,
) -> Result<()> {
    let cfg = GradingConfig::load(grading)?;
    let effects = cfg.resolve(&parent_dir(grading))?;
    if effects.is_empty() {
        fs::copy(image, output).map_err(|e| Error::io(output, e))?;
        return Ok(());
    }
    grade_file(image, matte, &effects, output, transfer)
}

fn grade_file(
    image: &Path,
    matte: &Path,
    effects: &[Effect],
    output: &Path,
    transfer: Transfer,
) -> Result<()> {
    let depth = io::bit_depth(image)?;
    let img = io::read_rgb(image, transfer)?;
    let alpha = io::read_mask(matte)?;
    let out = apply_chain(&img, &alpha, effects)?;
    if output
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pfm"))
    {
        io::write_pfm(output, &out)
    } else {
        io::write_png(output, &out, depth, transfer)
    }
}

/// Evaluation results: one report per image plus their mean.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub images: Vec<(String, MetricsReport)>,
    pub mean: Option<MetricsReport>,
    pub status: BatchReport,
}

impl EvalReport {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::InvalidInput(format!("CSV output: {e}"));
        let mut header = vec!["image"];
        header.extend(MetricsReport::COLUMNS);
        w.write_record(&header).map_err(csv_err)?;
        let rows = self.images.iter().map(|(n, r)| (n.as_str(), r));
        for (name, r) in rows.chain(self.mean.as_ref().map(|m| ("mean", m))) {
            let mut rec = vec![name.to_string()];
            rec.extend(
                [r.miou_05, r.mcr_05, r.rmse, r.mae, r.boundary_loss, r.jsd]
                    .iter()
                    .map(|v| v.to_string()),
            );
            rec.push(r.pixels.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Row<'a> {
            image: &'a str,
            #[serde(flatten)]
            metrics: &'a MetricsReport,
        }
        #[derive(Serialize)]
        struct Doc<'a> {
            images: Vec<Row<'a>>,
            mean: Option<&'a MetricsReport>,
            errors: Vec<&'a ItemStatus>,
        }
        let doc = Doc {
            images: self
                .images
                .iter()
                .map(|(image, metrics)| Row { image, metrics })
                .collect(),
            mean: self.mean.as_ref(),
            errors: self.status.items.iter().filter(|i| i.error.is_some()).collect(),
        };
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }
}

fn list_files(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_file() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    Ok(names)
}

/// Compares every ground-truth matte with the same-named prediction.
pub fn cmd_eval(pred_dir: &Path, gt_dir: &Path) -> Result<EvalReport> {
    let names = list_files(gt_dir)?;
    let results: Vec<Result<MetricsReport>> = names
        .par_iter()
        .map(|name| {
            let pred = io::read_mask(&pred_dir.join(name))?;
            let gt = io::read_mask(&gt_dir.join(name))?;
            evaluate(&pred, &gt)
        })
        .collect();
    let mut report = EvalReport::default();
    for (name, r) in names.into_iter().zip(results) {
        match r {
            Ok(m) => {
                report.images.push((name.clone(), m));
                report.status.push(name, Ok(()));
            }
            Err(e) => report.status.push(name, Err(e)),
        }
    }
    let per_image: Vec<MetricsReport> = report.images.iter().map(|(_, m)| *m).collect();
    report.mean = MetricsReport::mean(&per_image);
    Ok(report)
}

/// Benchmark settings.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub sizes: Vec<(usize, usize)>,
    pub s_values: Vec<usize>,
    pub repetitions: usize,
    /// Side of the square low-resolution probability map.
    pub probability_size: usize,
    pub seed: u64,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            sizes: vec![(1024, 768)],
            s_values: vec![64],
            repetitions: 5,
            probability_size: 256,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub width: usize,
    pub height: usize,
    pub s: usize,
    pub stage: &'static str,
    pub median_ms: f64,
    pub linear_systems: usize,
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Times the upsampling path and a grading chain on synthetic scenes.
pub fn cmd_bench(params: &BenchParams, config: &RunConfig) -> Result<Vec<BenchRow>> {
    if params.repetitions == 0 || params.probability_size == 0 {
        return Err(Error::Config("bench needs repetitions >= 1 and a nonempty probability map".into()));
    }
    let base = config.upsample_params()?;
    let effects = [
        Effect::Darken { b_d: 0.3 },
        Effect::Contrast { b_c: 0.3, t_c: crate::effects::DEFAULT_T_C },
        Effect::DualWb { gains_fg: [1.0; 3], gains_sky: [1.1, 1.0, 0.9] },
    ];
    let mut rows = Vec::new();
    for &(w, h) in &params.sizes {
        let scene = make_synthetic_scene(w, h, params.seed)?;
        let n = params.probability_size;
        let probability = resize_bilinear(&scene.alpha, n.min(w), n.min(h));
        for &s in &params.s_values {
            let up = UpsampleParams {
                gf: crate::wgf::GuidedFilterParams { s, ..base.gf },
                ..base
            };
            let mut stages: [Vec<f64>; 6] = Default::default();
            let mut systems = 0;
            for _ in 0..params.repetitions {
                let t = Instant::now();
                let (matte, st) = upsample_matte_timed(&probability, &scene.image, &up)?;
                let total = ms(t);
                let t = Instant::now();
                apply_chain(&scene.image, &matte, &effects)?;
                let fx = ms(t);
                for (v, x) in stages
                    .iter_mut()
                    .zip([st.confidence, st.moments, st.solve, st.upsample, fx, total])
                {
                    v.push(x);
                }
                systems = st.linear_systems;
            }
            let names = ["confidence", "moments", "solve", "upsample", "effects", "filter_total"];
            for (stage, v) in names.into_iter().zip(stages.iter_mut()) {
                rows.push(BenchRow {
                    width: w,
                    height: h,
                    s,
                    stage,
                    median_ms: median(v),
                    linear_systems: systems,
                });
            }
        }
    }
    Ok(rows)
}

pub fn bench_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| Error::InvalidInput(format!("CSV output: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV is UTF-8"))
}

/// File names written by [`cmd_synth`].
pub mod synth_files {
    pub const IMAGE: &str = "image.png";
    pub const ALPHA: &str = "alpha.pfm";
    pub const ANNOTATION: &str = "annotation.png";
    pub const TRIMAP: &str = "trimap.png";
    pub const PROBABILITY: &str = "probability.png";
    pub const MANIFEST: &str = "manifest.json";
}

/// Writes a synthetic scene into `dir`: 16-bit image, PFM ground truth,
/// binary annotation, trimap, a low-resolution probability map and a
/// one-entry refinement manifest.
pub fn cmd_synth(dir: &Path, width: usize, height: usize, seed: u64) -> Result<()> {
    use synth_files::*;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let scene = make_synthetic_scene(width, height, seed)?;
    io::write_png(&dir.join(IMAGE), &scene.image, BitDepth::Sixteen, Transfer::Encoded)?;
    io::write_pfm(&dir.join(ALPHA), &scene.alpha)?;
    io::write_png(&dir.join(ANNOTATION), &scene.annotation, BitDepth::Eight, Transfer::Encoded)?;
    io::write_trimap(&dir.join(TRIMAP), &scene.trimap)?;
    let low = resize_bilinear(&scene.alpha, (width / 4).max(1), (height / 4).max(1));
    io::write_png(&dir.join(PROBABILITY), &low, BitDepth::Sixteen, Transfer::Encoded)?;
    let manifest = vec![RefineJob {
        image_path: IMAGE.into(),
        annotation_path: ANNOTATION.into(),
        output_path: "refined.pfm".into(),
        params: RunConfig::default(),
    }];
    let path = dir.join(MANIFEST);
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes"))
        .map_err(|e| Error::io(&path, e))
}
