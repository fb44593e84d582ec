//! Batch commands behind the `mpri` binary: the PRI regime demo, the full
//! pipeline run, the ablation grid, standalone evaluation, and cube/CSV
//! conversion. Each command is deterministic given its inputs and seed and
//! writes a run manifest sufficient to reproduce it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use ndarray::Array2;
use rayon::prelude::*;

use crate::config::{load_config, RunConfig};
use crate::cube::{
    load_cube, load_labels, save_cube, save_labels, synth_intersect, HyperCube, LabelMap,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, split_train_test, EvalReport, Split};
use crate::itl::Sample;
use crate::knn::KnnModel;
use crate::manifest::RunManifest;
use crate::pipeline::{
    run_pipeline_with_trace, silverman_range, FeatureMatrix, PipelineConfig,
};
use crate::render::{write_class_map, write_scatter};
use crate::solver::{pri_solve, PriConfig};

/// Cap the rayon worker count from `--threads` or the `PRI_THREADS`
/// variable, flag winning. No setting keeps the default (all cores). Safe to
/// call once at startup; a later call cannot resize the pool.
pub fn init_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("PRI_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        if n >= 1 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global();
        }
    }
}

fn io_other(path: &Path, message: impl std::fmt::Display) -> Error {
    Error::io(
        path.display().to_string(),
        std::io::Error::other(message.to_string()),
    )
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn load_inputs(cube: &Path, labels: &Path) -> Result<(HyperCube, LabelMap)> {
    let cube = load_cube(cube).map_err(|e| e.in_stage("load cube"))?;
    let labels = load_labels(labels).map_err(|e| e.in_stage("load labels"))?;
    if labels.rows() != cube.rows() || labels.cols() != cube.cols() {
        return Err(Error::ShapeMismatch {
            left_n: cube.rows(),
            left_p: cube.cols(),
            right_n: labels.rows(),
            right_p: labels.cols(),
        });
    }
    Ok((cube, labels))
}

/// Representatives of `sample` under greedy merging at `radius`: a point
/// joins the first earlier representative within `radius`, else founds a
/// new one.
pub fn distinct_points(sample: &Sample, radius: f64) -> Vec<Vec<f64>> {
    let mut reps: Vec<Vec<f64>> = Vec::new();
    'points: for i in 0..sample.len() {
        let row = sample.row(i);
        for rep in &reps {
            let d2: f64 = row
                .iter()
                .zip(rep)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2.sqrt() < radius {
                continue 'points;
            }
        }
        reps.push(row.to_vec());
    }
    reps
}

fn write_points_csv(sample: &Sample, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_other(path, e))?;
    let header: Vec<String> = (0..sample.dim()).map(|j| format!("x{j}")).collect();
    w.write_record(&header).map_err(|e| io_other(path, e))?;
    for i in 0..sample.len() {
        let record: Vec<String> = sample.row(i).iter().map(|v| v.to_string()).collect();
        w.write_record(&record).map_err(|e| io_other(path, e))?;
    }
    w.flush().map_err(|e| io_other(path, e))
}

/// Classify every pixel of `features` against `model`, in parallel with a
/// thread-count-independent result.
pub fn classify_map(features: &FeatureMatrix, model: &KnnModel) -> Result<LabelMap> {
    let preds: Vec<u16> = (0..features.len())
        .into_par_iter()
        .map(|i| model.classify(features.data().row(i)))
        .collect::<Result<_>>()?;
    LabelMap::new(
        Array2::from_shape_vec((features.rows(), features.cols()), preds)
            .expect("one prediction per pixel"),
    )
}

/// Fit a KNN on the split's training pixels and evaluate it on the test
/// pixels of the same feature matrix.
pub fn knn_eval(features: &FeatureMatrix, split: &Split, k: usize) -> Result<EvalReport> {
    let (train_x, train_y) = features.gather(&split.train)?;
    let model = KnnModel::fit(train_x, train_y, k)?;
    let preds: Vec<u16> = split
        .test
        .par_iter()
        .map(|&(r, c, _)| model.classify(features.feature(r, c)))
        .collect::<Result<_>>()?;
    let truth: Vec<u16> = split.test.iter().map(|&(_, _, l)| l).collect();
    evaluate(&preds, &truth)
}

/// Kernel evaluations the pipeline will perform, printed before a run as a
/// cost estimate: per pixel and layer, `tau` sweeps over `width^4` kernel
/// pairs per scale, times the beta count and the layer input dimension.
pub fn kernel_eval_estimate(cube: &HyperCube, cfg: &PipelineConfig, classes: usize) -> u128 {
    let window4: u128 = cfg
        .scales
        .iter()
        .map(|&w| {
            let n = (w * w) as u128;
            n * n
        })
        .sum();
    let later_dim = cfg.lda_dim.unwrap_or(classes.saturating_sub(1).max(1)) as u128;
    let dims = cube.bands() as u128 + (cfg.layers as u128 - 1) * later_dim;
    cube.pixels() as u128 * cfg.tau as u128 * cfg.betas.len() as u128 * window4 * dims
}

/// Generate the two-segment intersect cloud and solve the PRI at each beta,
/// writing point CSVs, scatter images, and a manifest.
#[derive(Debug, Args)]
pub struct DemoArgs {
    /// Beta values to solve at.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 2.0, 3.0, 100.0])]
    pub beta: Vec<f64>,
    /// Fixed-point sweeps.
    #[arg(long, default_value_t = 50)]
    pub tau: usize,
    /// Kernel width; the default is the Silverman range midpoint.
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Cloud size.
    #[arg(long, default_value_t = 500)]
    pub points: usize,
    /// Coordinate noise standard deviation.
    #[arg(long, default_value_t = 0.04)]
    pub noise: f64,
    /// Output directory.
    #[arg(long, default_value = "mpri-demo")]
    pub out: PathBuf,
}

pub fn cmd_demo(args: &DemoArgs) -> Result<()> {
    if args.beta.is_empty() {
        return Err(Error::InvalidConfig("at least one beta required".into()));
    }
    let x = synth_intersect(args.points, args.noise, args.seed)?;
    let delta = match args.delta {
        Some(d) => crate::itl::KernelWidth::new(d)?,
        None => {
            let (lo, hi) = silverman_range(&x)?;
            crate::itl::KernelWidth::new(0.5 * (lo.get() + hi.get()))?
        }
    };

    let config_text = format!(
        "command = demo\nbetas = {}\ntau = {}\ndelta = {}\nseed = {}\npoints = {}\nnoise = {}\n",
        args.beta
            .iter()
            .map(|b| b.to_string())
            .collect::<Vec<_>>()
            .join(","),
        args.tau,
        delta.get(),
        args.seed,
        args.points,
        args.noise
    );
    let mut manifest = RunManifest::new("demo", config_text);
    manifest.add_seed(args.seed);

    let evals = args.beta.len() as u128
        * args.tau as u128
        * (args.points as u128) * (args.points as u128);
    println!(
        "demo: {} points, {} betas, tau {}, delta {:.6}; <= {evals} kernel evaluations",
        args.points,
        args.beta.len(),
        args.tau,
        delta.get()
    );

    create_dir(&args.out)?;
    let input_path = args.out.join("input.csv");
    write_points_csv(&x, &input_path)?;
    manifest.add_output(&input_path);

    for &beta in &args.beta {
        let cfg = PriConfig {
            tau: args.tau,
            displacement_tol: Some(1e-12),
            ..PriConfig::new(beta, delta)
        };
        let start = Instant::now();
        let (y, trace) = pri_solve(&x, &cfg, None)?;
        manifest.record_stage(format!("solve beta={beta}"), start.elapsed());

        let csv_path = args.out.join(format!("beta_{beta}.csv"));
        write_points_csv(&y, &csv_path)?;
        let png_path = args.out.join(format!("beta_{beta}.png"));
        let sets: Vec<(&Sample, [u8; 3])> =
            vec![(&x, [176, 176, 176]), (&y, [205, 32, 32])];
        write_scatter(&sets, 512, &png_path)?;
        manifest.add_output(&csv_path);
        manifest.add_output(&png_path);

        let modes = distinct_points(&y, 1e-3).len();
        println!(
            "beta {beta}: {} sweeps, objective {:.6}, {} distinct points at 1e-3",
            trace.iterations(),
            trace.objective_per_iteration.last().unwrap(),
            modes
        );
    }

    let manifest_path = args.out.join("manifest.txt");
    manifest.write(&manifest_path)?;
    println!("wrote {}", manifest_path.display());
    Ok(())
}

/// Run split, pipeline, KNN, and evaluation end to end, writing features,
/// a classification map, test-pixel predictions, the report, and a
/// manifest.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Input cube file.
    #[arg(long)]
    pub cube: PathBuf,
    /// Label map file.
    #[arg(long)]
    pub labels: PathBuf,
    /// Key-value configuration file; defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Per-class training fraction.
    #[arg(long, default_value_t = 0.1)]
    pub train_fraction: f64,
    /// Overrides the config file seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config file layer count.
    #[arg(long)]
    pub layers: Option<usize>,
    /// KNN neighbor count.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Output directory.
    #[arg(long, default_value = "mpri-run")]
    pub out: PathBuf,
    /// Feature cube path (default <out>/features.cube).
    #[arg(long)]
    pub out_features: Option<PathBuf>,
    /// Classification map PNG path (default <out>/map.png).
    #[arg(long)]
    pub out_map: Option<PathBuf>,
    /// Report path (default <out>/report.txt).
    #[arg(long)]
    pub out_report: Option<PathBuf>,
}

pub fn cmd_pipeline(args: &PipelineArgs) -> Result<EvalReport> {
    let (cube, labels) = load_inputs(&args.cube, &args.labels)?;
    let mut run_cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(layers) = args.layers {
        run_cfg.pipeline.layers = layers;
    }
    if let Some(seed) = args.seed {
        run_cfg.seed = seed;
    }
    run_cfg.pipeline.validate()?;

    let config_text = format!(
        "command = pipeline\ntrain_fraction = {}\nk = {}\n{}",
        args.train_fraction,
        args.k,
        run_cfg.render()
    );
    let mut manifest = RunManifest::new("pipeline", config_text);
    manifest.add_seed(run_cfg.seed);

    let classes = labels.distinct_classes().len();
    println!(
        "pipeline: {}x{}x{} cube, {} classes; per-pixel cost O(d*W^2*tau*L*S*B), \
         ~{} kernel evaluations total",
        cube.rows(),
        cube.cols(),
        cube.bands(),
        classes,
        kernel_eval_estimate(&cube, &run_cfg.pipeline, classes)
    );

    let split = manifest.time_stage("split", || {
        split_train_test(&labels, args.train_fraction, run_cfg.seed)
    })?;
    println!(
        "split: {} train / {} test pixels",
        split.train.len(),
        split.test.len()
    );

    let start = Instant::now();
    let (features, trace) = run_pipeline_with_trace(&cube, &split.train, &run_cfg.pipeline)?;
    let elapsed = start.elapsed();
    manifest.record_stage("pipeline", elapsed);
    manifest.set_per_pixel(elapsed / cube.pixels() as u32);
    for (i, layer) in trace.iter().enumerate() {
        println!(
            "layer {}: delta {:.6}, raw dim {}, reduced dim {}",
            i + 1,
            layer.delta.get(),
            layer.raw_dim,
            layer.reduced_dim
        );
    }
    println!(
        "pipeline: {:.3}s total, {:.6}s per pixel",
        elapsed.as_secs_f64(),
        elapsed.as_secs_f64() / cube.pixels() as f64
    );

    let (train_x, train_y) = features.gather(&split.train)?;
    let model = KnnModel::fit(train_x, train_y, args.k).map_err(|e| e.in_stage("knn fit"))?;
    let pred_map = manifest
        .time_stage("classify", || classify_map(&features, &model))
        .map_err(|e| e.in_stage("classify"))?;

    let preds: Vec<u16> = split
        .test
        .iter()
        .map(|&(r, c, _)| pred_map.get(r, c))
        .collect();
    let truth: Vec<u16> = split.test.iter().map(|&(_, _, l)| l).collect();
    let report = manifest
        .time_stage("evaluate", || evaluate(&preds, &truth))
        .map_err(|e| e.in_stage("evaluate"))?;

    create_dir(&args.out)?;
    let features_path = args
        .out_features
        .clone()
        .unwrap_or_else(|| args.out.join("features.cube"));
    save_cube(&features.to_cube()?, &features_path).map_err(|e| e.in_stage("save features"))?;
    manifest.add_output(&features_path);

    let map_path = args
        .out_map
        .clone()
        .unwrap_or_else(|| args.out.join("map.png"));
    write_class_map(&pred_map, &map_path).map_err(|e| e.in_stage("save map"))?;
    manifest.add_output(&map_path);

    // Test-pixel predictions in label-map form, for standalone evaluation.
    let mut test_pred = Array2::<u16>::zeros((labels.rows(), labels.cols()));
    for &(r, c, _) in &split.test {
        test_pred[[r, c]] = pred_map.get(r, c);
    }
    let pred_path = args.out.join("pred.labels");
    save_labels(&LabelMap::new(test_pred)?, &pred_path)
        .map_err(|e| e.in_stage("save predictions"))?;
    manifest.add_output(&pred_path);

    let report_path = args
        .out_report
        .clone()
        .unwrap_or_else(|| args.out.join("report.txt"));
    write_text(&report_path, &report.render())?;
    manifest.add_output(&report_path);

    let manifest_path = args.out.join("manifest.txt");
    manifest.write(&manifest_path)?;

    print!("{}", report.render());
    println!("wrote {}", manifest_path.display());
    Ok(report)
}

/// One ablation grid row: which axes were on and the seed-averaged metrics.
#[derive(Debug, Clone)]
pub struct AblationRow {
    pub multi_layer: bool,
    pub multi_scale: bool,
    pub multi_beta: bool,
    pub oa: f64,
    pub aa: f64,
    pub kappa: f64,
}

/// Run the 8-row on/off grid over {multi-layer, multi-scale, multi-beta},
/// averaged over seeds. Off means one layer, the single middle scale, or
/// the single beta 3.
#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Input cube file.
    #[arg(long)]
    pub cube: PathBuf,
    /// Label map file.
    #[arg(long)]
    pub labels: PathBuf,
    /// Key-value configuration file for the full (all-on) row.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds to average over.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 2, 3, 4, 5])]
    pub seeds: Vec<u64>,
    /// Per-class training fraction.
    #[arg(long, default_value_t = 0.1)]
    pub train_fraction: f64,
    /// KNN neighbor count.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    /// Report output path.
    #[arg(long, default_value = "ablation.txt")]
    pub out: PathBuf,
}

/// The configuration of one grid row derived from the full configuration.
pub fn ablation_config(
    base: &PipelineConfig,
    multi_layer: bool,
    multi_scale: bool,
    multi_beta: bool,
) -> PipelineConfig {
    let mut cfg = base.clone();
    if !multi_layer {
        cfg.layers = 1;
    }
    if !multi_scale {
        cfg.scales = vec![cfg.scales[(cfg.scales.len() - 1) / 2]];
    }
    if !multi_beta {
        cfg.betas = vec![3.0];
    }
    cfg
}

pub fn cmd_ablate(args: &AblateArgs) -> Result<Vec<AblationRow>> {
    if args.seeds.is_empty() {
        return Err(Error::InvalidConfig("at least one seed required".into()));
    }
    let (cube, labels) = load_inputs(&args.cube, &args.labels)?;
    let base = match &args.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };

    let config_text = format!(
        "command = ablate\ntrain_fraction = {}\nk = {}\nseeds = {}\n{}",
        args.train_fraction,
        args.k,
        args.seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(","),
        base.render()
    );
    let mut manifest = RunManifest::new("ablate", config_text);
    for &seed in &args.seeds {
        manifest.add_seed(seed);
    }

    let mut rows = Vec::with_capacity(8);
    for multi_layer in [true, false] {
        for multi_scale in [true, false] {
            for multi_beta in [true, false] {
                let cfg = ablation_config(&base.pipeline, multi_layer, multi_scale, multi_beta);
                let start = Instant::now();
                let (mut oa, mut aa, mut kappa) = (0.0, 0.0, 0.0);
                for &seed in &args.seeds {
                    let split = split_train_test(&labels, args.train_fraction, seed)?;
                    let features = crate::pipeline::run_pipeline(&cube, &split.train, &cfg)?;
                    let report = knn_eval(&features, &split, args.k)?;
                    oa += report.oa();
                    aa += report.aa();
                    kappa += report.kappa();
                }
                let n = args.seeds.len() as f64;
                let row = AblationRow {
                    multi_layer,
                    multi_scale,
                    multi_beta,
                    oa: oa / n,
                    aa: aa / n,
                    kappa: kappa / n,
                };
                manifest.record_stage(
                    format!(
                        "row {},{},{}",
                        on_off(multi_layer),
                        on_off(multi_scale),
                        on_off(multi_beta)
                    ),
                    start.elapsed(),
                );
                rows.push(row);
            }
        }
    }

    let text = render_ablation(&rows, args.seeds.len());
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            create_dir(parent)?;
        }
    }
    write_text(&args.out, &text)?;
    manifest.add_output(&args.out);
    let manifest_path = args.out.with_extension("manifest");
    manifest.write(&manifest_path)?;

    print!("{text}");
    println!("wrote {}", args.out.display());
    Ok(rows)
}

fn on_off(v: bool) -> &'static str {
    if v {
        "on"
    } else {
        "off"
    }
}

fn render_ablation(rows: &[AblationRow], seeds: usize) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    writeln!(out, "ablation grid, mean over {seeds} seed(s)").unwrap();
    writeln!(
        out,
        "{:>12} {:>12} {:>11} {:>10} {:>10} {:>10}",
        "multi-layer", "multi-scale", "multi-beta", "OA", "AA", "kappa"
    )
    .unwrap();
    for row in rows {
        writeln!(
            out,
            "{:>12} {:>12} {:>11} {:>10.6} {:>10.6} {:>10.6}",
            on_off(row.multi_layer),
            on_off(row.multi_scale),
            on_off(row.multi_beta),
            row.oa,
            row.aa,
            row.kappa
        )
        .unwrap();
    }
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        writeln!(
            out,
            "row[{i}] = {},{},{},oa={:.12},aa={:.12},kappa={:.12}",
            on_off(row.multi_layer),
            on_off(row.multi_scale),
            on_off(row.multi_beta),
            row.oa,
            row.aa,
            row.kappa
        )
        .unwrap();
    }
    out
}

/// Standalone evaluation of stored predictions against stored truth over
/// the pixels labeled in both maps.
#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted label map.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth label map.
    #[arg(long)]
    pub truth: PathBuf,
    /// Report output path.
    #[arg(long, default_value = "eval.txt")]
    pub out: PathBuf,
}

pub fn cmd_eval(args: &EvalArgs) -> Result<EvalReport> {
    let pred = load_labels(&args.pred).map_err(|e| e.in_stage("load predictions"))?;
    let truth = load_labels(&args.truth).map_err(|e| e.in_stage("load truth"))?;
    if pred.rows() != truth.rows() || pred.cols() != truth.cols() {
        return Err(Error::ShapeMismatch {
            left_n: pred.rows(),
            left_p: pred.cols(),
            right_n: truth.rows(),
            right_p: truth.cols(),
        });
    }
    let mut p = Vec::new();
    let mut t = Vec::new();
    for (r, c, label) in truth.iter_labeled() {
        let q = pred.get(r, c);
        if q != 0 {
            p.push(q);
            t.push(label);
        }
    }
    let report = evaluate(&p, &t)?;

    let config_text = format!(
        "command = eval\npred = {}\ntruth = {}\n",
        args.pred.display(),
        args.truth.display()
    );
    let mut manifest = RunManifest::new("eval", config_text);
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            create_dir(parent)?;
        }
    }
    write_text(&args.out, &report.render())?;
    manifest.add_output(&args.out);
    manifest.write(args.out.with_extension("manifest"))?;

    print!("{}", report.render());
    Ok(report)
}

/// Convert between the binary cube format and CSV (`row,col,b0..`). The
/// output extension picks the direction.
#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Input file (.cube or .csv).
    pub input: PathBuf,
    /// Output file (.csv or .cube).
    pub output: PathBuf,
}

pub fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    let ext = args
        .output
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("");
    match ext {
        "csv" => {
            let cube = load_cube(&args.input)?;
            cube_to_csv(&cube, &args.output)?;
        }
        "cube" => {
            let cube = csv_to_cube(&args.input)?;
            save_cube(&cube, &args.output)?;
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "output extension must be .csv or .cube, got {other:?}"
            )))
        }
    }
    let mut manifest = RunManifest::new(
        "convert",
        format!(
            "command = convert\ninput = {}\noutput = {}\n",
            args.input.display(),
            args.output.display()
        ),
    );
    manifest.add_output(&args.output);
    manifest.write(args.output.with_extension("manifest"))?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn cube_to_csv(cube: &HyperCube, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_other(path, e))?;
    let mut header = vec!["row".to_string(), "col".to_string()];
    header.extend((0..cube.bands()).map(|b| format!("b{b}")));
    w.write_record(&header).map_err(|e| io_other(path, e))?;
    for r in 0..cube.rows() {
        for c in 0..cube.cols() {
            let mut record = vec![r.to_string(), c.to_string()];
            record.extend(cube.pixel(r, c).iter().map(|v| v.to_string()));
            w.write_record(&record).map_err(|e| io_other(path, e))?;
        }
    }
    w.flush().map_err(|e| io_other(path, e))
}

fn csv_to_cube(path: &Path) -> Result<HyperCube> {
    let path_text = path.display().to_string();
    let fmt = |line: u64, message: String| Error::format(&path_text, line, message);
    let mut reader = csv::Reader::from_path(path).map_err(|e| io_other(path, e))?;
    let headers = reader.headers().map_err(|e| io_other(path, e))?.clone();
    if headers.len() < 3 || &headers[0] != "row" || &headers[1] != "col" {
        return Err(fmt(1, "header must be row,col,b0,...".into()));
    }
    let bands = headers.len() - 2;

    let mut cells: Vec<(usize, usize, Vec<f64>)> = Vec::new();
    let mut max_row = 0usize;
    let mut max_col = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = (i + 2) as u64;
        let record = record.map_err(|e| io_other(path, e))?;
        if record.len() != headers.len() {
            return Err(fmt(
                line,
                format!("expected {} fields, got {}", headers.len(), record.len()),
            ));
        }
        let parse_idx = |field: &str| -> std::result::Result<usize, Error> {
            field
                .parse()
                .map_err(|_| fmt(line, format!("bad index {field:?}")))
        };
        let r = parse_idx(&record[0])?;
        let c = parse_idx(&record[1])?;
        let mut values = Vec::with_capacity(bands);
        for field in record.iter().skip(2) {
            let v: f64 = field
                .parse()
                .map_err(|_| fmt(line, format!("bad value {field:?}")))?;
            values.push(v);
        }
        max_row = max_row.max(r);
        max_col = max_col.max(c);
        cells.push((r, c, values));
    }
    if cells.is_empty() {
        return Err(fmt(1, "no data rows".into()));
    }

    let (rows, cols) = (max_row + 1, max_col + 1);
    if cells.len() != rows * cols {
        return Err(fmt(
            0,
            format!(
                "grid {rows}x{cols} needs {} pixels, file has {}",
                rows * cols,
                cells.len()
            ),
        ));
    }
    let mut seen = vec![false; rows * cols];
    let mut flat = vec![0.0; rows * cols * bands];
    for (r, c, values) in cells {
        let at = r * cols + c;
        if seen[at] {
            return Err(fmt(0, format!("pixel ({r}, {c}) appears twice")));
        }
        seen[at] = true;
        flat[at * bands..(at + 1) * bands].copy_from_slice(&values);
    }
    HyperCube::from_flat(rows, cols, bands, flat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{synth_labeled_cube, BlockSpec};

    fn demo_dir() -> tempfile::TempDir {
        tempfile::tempdir().unwrap()
    }

    #[test]
    fn distinct_points_merges_within_radius() {
        let s = Sample::one_dim(&[0.0, 0.0004, 1.0, 1.0012, 5.0]).unwrap();
        assert_eq!(distinct_points(&s, 1e-3).len(), 4);
        assert_eq!(distinct_points(&s, 1e-2).len(), 3);
    }

    #[test]
    fn demo_beta_zero_collapses_to_one_distinct_point() {
        let dir = demo_dir();
        let args = DemoArgs {
            beta: vec![0.0],
            tau: 5,
            delta: Some(0.3),
            seed: 3,
            points: 40,
            noise: 0.03,
            out: dir.path().to_path_buf(),
        };
        cmd_demo(&args).unwrap();
        let text = std::fs::read_to_string(dir.path().join("beta_0.csv")).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x0,x1"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().all(|&r| r == rows[0]));
        assert!(dir.path().join("input.csv").exists());
        assert!(dir.path().join("beta_0.png").exists());
        assert!(dir.path().join("manifest.txt").exists());
    }

    fn desk_inputs(dir: &Path) -> (PathBuf, PathBuf) {
        let (cube, labels) = synth_labeled_cube(
            &BlockSpec {
                rows: 8,
                cols: 8,
                block: 4,
                classes: 3,
            },
            3,
            0.06,
            11,
        )
        .unwrap();
        let cube_path = dir.join("demo.cube");
        let labels_path = dir.join("demo.labels");
        save_cube(&cube, &cube_path).unwrap();
        crate::cube::save_labels(&labels, &labels_path).unwrap();
        (cube_path, labels_path)
    }

    fn fast_config(dir: &Path) -> PathBuf {
        let path = dir.join("fast.conf");
        std::fs::write(
            &path,
            "scales = 3\nbetas = 2\nlayers = 1\ntau = 2\nseed = 1\n",
        )
        .unwrap();
        path
    }

    #[test]
    fn pipeline_command_writes_every_output() {
        let dir = demo_dir();
        let (cube_path, labels_path) = desk_inputs(dir.path());
        let out = dir.path().join("run");
        let args = PipelineArgs {
            cube: cube_path,
            labels: labels_path,
            config: Some(fast_config(dir.path())),
            train_fraction: 0.3,
            seed: None,
            layers: None,
            k: 1,
            out: out.clone(),
            out_features: None,
            out_map: None,
            out_report: None,
        };
        let report = cmd_pipeline(&args).unwrap();
        assert!(report.oa() > 0.5, "oa = {}", report.oa());
        for name in ["features.cube", "map.png", "pred.labels", "report.txt", "manifest.txt"] {
            assert!(out.join(name).exists(), "{name} missing");
        }
        let features = load_cube(out.join("features.cube")).unwrap();
        assert_eq!(features.rows(), 8);
        assert_eq!(features.bands(), 2);

        let report_text = std::fs::read_to_string(out.join("report.txt")).unwrap();
        assert_eq!(report_text, report.render());
    }

    #[test]
    fn pipeline_then_eval_round_trips_the_report() {
        let dir = demo_dir();
        let (cube_path, labels_path) = desk_inputs(dir.path());
        let out = dir.path().join("run");
        let args = PipelineArgs {
            cube: cube_path,
            labels: labels_path.clone(),
            config: Some(fast_config(dir.path())),
            train_fraction: 0.3,
            seed: None,
            layers: None,
            k: 1,
            out: out.clone(),
            out_features: None,
            out_map: None,
            out_report: None,
        };
        let direct = cmd_pipeline(&args).unwrap();
        let eval_args = EvalArgs {
            pred: out.join("pred.labels"),
            truth: labels_path,
            out: dir.path().join("eval.txt"),
        };
        let rescored = cmd_eval(&eval_args).unwrap();
        assert_eq!(rescored.render(), direct.render());
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let dir = demo_dir();
        let (cube_path, _) = desk_inputs(dir.path());
        let (_, other_labels) = synth_labeled_cube(
            &BlockSpec {
                rows: 6,
                cols: 6,
                block: 3,
                classes: 2,
            },
            2,
            0.05,
            1,
        )
        .unwrap();
        let other_path = dir.path().join("other.labels");
        crate::cube::save_labels(&other_labels, &other_path).unwrap();
        let args = PipelineArgs {
            cube: cube_path,
            labels: other_path,
            config: None,
            train_fraction: 0.3,
            seed: None,
            layers: None,
            k: 1,
            out: dir.path().join("run"),
            out_features: None,
            out_map: None,
            out_report: None,
        };
        assert!(matches!(
            cmd_pipeline(&args).unwrap_err(),
            Error::ShapeMismatch { .. }
        ));
    }

    #[test]
    fn ablation_runs_eight_rows_and_all_off_matches_single_unit() {
        let dir = demo_dir();
        let (cube_path, labels_path) = desk_inputs(dir.path());
        let conf = dir.path().join("base.conf");
        std::fs::write(
            &conf,
            "scales = 3,5\nbetas = 2,3\nlayers = 2\ntau = 1\nseed = 1\n",
        )
        .unwrap();
        let args = AblateArgs {
            cube: cube_path.clone(),
            labels: labels_path.clone(),
            config: Some(conf),
            seeds: vec![4],
            train_fraction: 0.3,
            k: 1,
            out: dir.path().join("ablation.txt"),
        };
        let rows = cmd_ablate(&args).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows[0].multi_layer && rows[0].multi_scale && rows[0].multi_beta);
        let last = rows.last().unwrap();
        assert!(!last.multi_layer && !last.multi_scale && !last.multi_beta);

        // The all-off row is exactly the single-unit single-scale single-beta
        // pipeline.
        let cube = load_cube(&cube_path).unwrap();
        let labels = load_labels(&labels_path).unwrap();
        let split = split_train_test(&labels, 0.3, 4).unwrap();
        let cfg = PipelineConfig {
            scales: vec![3],
            betas: vec![3.0],
            layers: 1,
            tau: 1,
            ..PipelineConfig::default()
        };
        let features = crate::pipeline::run_pipeline(&cube, &split.train, &cfg).unwrap();
        let report = knn_eval(&features, &split, 1).unwrap();
        assert_eq!(report.oa(), last.oa);
        assert_eq!(report.kappa(), last.kappa);

        let text = std::fs::read_to_string(dir.path().join("ablation.txt")).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("row[")).count(), 8);
        assert!(dir.path().join("ablation.manifest").exists());
    }

    #[test]
    fn convert_round_trips_a_cube_through_csv() {
        let dir = demo_dir();
        let (cube_path, _) = desk_inputs(dir.path());
        let csv_path = dir.path().join("cube.csv");
        let back_path = dir.path().join("back.cube");
        cmd_convert(&ConvertArgs {
            input: cube_path.clone(),
            output: csv_path.clone(),
        })
        .unwrap();
        cmd_convert(&ConvertArgs {
            input: csv_path,
            output: back_path.clone(),
        })
        .unwrap();
        assert_eq!(
            std::fs::read(&cube_path).unwrap(),
            std::fs::read(&back_path).unwrap()
        );
    }

    #[test]
    fn convert_rejects_incomplete_grids_and_bad_extensions() {
        let dir = demo_dir();
        let bad = dir.path().join("bad.csv");
        std::fs::write(&bad, "row,col,b0\n0,0,1.5\n0,2,2.5\n").unwrap();
        assert!(matches!(
            cmd_convert(&ConvertArgs {
                input: bad.clone(),
                output: dir.path().join("x.cube"),
            })
            .unwrap_err(),
            Error::Format { .. }
        ));
        let dup = dir.path().join("dup.csv");
        std::fs::write(&dup, "row,col,b0\n0,0,1\n0,0,2\n0,1,3\n0,1,4\n").unwrap();
        assert!(cmd_convert(&ConvertArgs {
            input: dup,
            output: dir.path().join("y.cube"),
        })
        .is_err());
        assert!(matches!(
            cmd_convert(&ConvertArgs {
                input: bad,
                output: dir.path().join("z.txt"),
            })
            .unwrap_err(),
            Error::InvalidConfig(_)
        ));
    }

    #[test]
    fn eval_command_reproduces_the_hand_confusion() {
        // 100 pixels: class 1 truth on the first 50, class 2 on the rest;
        // predictions flip 5 and 10 of them.
        let dir = demo_dir();
        let mut truth = Array2::<u16>::zeros((10, 10));
        let mut pred = Array2::<u16>::zeros((10, 10));
        for i in 0..100 {
            let (r, c) = (i / 10, i % 10);
            let t = if i < 50 { 1 } else { 2 };
            truth[[r, c]] = t;
            pred[[r, c]] = match (t, i) {
                (1, i) if i >= 45 => 2,
                (2, i) if i >= 90 => 1,
                _ => t,
            };
        }
        let truth_path = dir.path().join("truth.labels");
        let pred_path = dir.path().join("pred.labels");
        crate::cube::save_labels(&LabelMap::new(truth).unwrap(), &truth_path).unwrap();
        crate::cube::save_labels(&LabelMap::new(pred).unwrap(), &pred_path).unwrap();
        let report = cmd_eval(&EvalArgs {
            pred: pred_path,
            truth: truth_path,
            out: dir.path().join("eval.txt"),
        })
        .unwrap();
        assert!((report.oa() - 0.85).abs() < 1e-12);
        assert!((report.kappa() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn kernel_estimate_counts_scales_and_layers() {
        let (cube, _) = synth_labeled_cube(
            &BlockSpec {
                rows: 4,
                cols: 4,
                block: 2,
                classes: 2,
            },
            3,
            0.1,
            1,
        )
        .unwrap();
        let cfg = PipelineConfig {
            scales: vec![3],
            betas: vec![2.0, 3.0],
            layers: 2,
            tau: 2,
            lda_dim: Some(1),
            ..PipelineConfig::default()
        };
        // 16 pixels * tau 2 * 2 betas * 9^2 * (3 + 1 dims).
        assert_eq!(kernel_eval_estimate(&cube, &cfg, 2), 16 * 2 * 2 * 81 * 4);
    }
}
