use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use log::{info, warn};
use scenecomp::field::checkpoint::encode_grid;
use scenecomp::geometry::obj::write_obj;
use scenecomp::guidance::{
    optimize_scene, DisparityOracle, GuidanceContext, GuidanceError, LuminanceDisparity, MockPredictor, NoisePredictor,
    Predictors, PureNoise, RunConfig, RunObserver, SceneScorer, TraceEvent,
};
use scenecomp::imaging::{encode_pfm, read_pfm, ImageBuf};
use scenecomp::layout::{make_landscape, run_pso, Landscape, PsoParams, ScoreError, Scorer};
use scenecomp::metrics::{
    clip_ap, degrade as apply_degradation, depth_align_metric, fid_monotonicity_report, Degradation, DegradationKind,
    EvalReport, FeatureExtractor, FidReport, PatchFeatures, SimilarityMatrix,
};
use scenecomp::render::{
    rasterize, render_panorama, render_perspective, CompositeMode, EquirectCamera, PerspectiveCamera, PerspectiveSampling,
    VolumeSettings,
};
use scenecomp::rng::mix_seed;
use scenecomp::scene::{Layout, SceneDescription, SceneState};
use scenecomp::service::RemoteFeatures;
use scenecomp::{RenderScorer, ServiceClient, ServiceEndpoint, Vec3};
use serde::Serialize;

use crate::output::{ensure_dir, write_atomic, write_json, write_jsonl};
use crate::select::{CameraSpec, EvalScorerSpec, ModelSpec, ScorerSpec};
use crate::{CliError, ComposeArgs, DegradeArgs, EvaluateArgs, OptimizeArgs, RenderArgs};

fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn load_state(path: &Path) -> Result<(SceneDescription, SceneState), CliError> {
    let desc = SceneDescription::load(path)?;
    let state = desc.instantiate(&base_dir(path))?;
    Ok((desc, state))
}

fn connect(url: &str) -> Result<ServiceClient, CliError> {
    let client = ServiceClient::new(ServiceEndpoint::new(url))?;
    let health = client.health()?;
    info!("service at {url} reports models {:?}", health.models);
    Ok(client)
}

/// A scene scorer with the scene fixed.
struct Frozen<'a> {
    scorer: &'a dyn SceneScorer,
    state: &'a SceneState,
}

impl Scorer for Frozen<'_> {
    fn score(&self, config: &[f64]) -> Result<f64, ScoreError> {
        self.scorer.score_config(self.state, config)
    }
}

/// The layout scorer behind `--scorer`; owns whatever it borrows from.
enum LayoutScorer {
    Mock(Landscape),
    Remote(Box<ServiceClient>),
}

impl LayoutScorer {
    fn new(spec: &ScorerSpec, state: &SceneState, seed: u64) -> Result<Self, CliError> {
        Ok(match spec {
            ScorerSpec::Mock(kind) => LayoutScorer::Mock(make_landscape(*kind, &state.bounds(), seed)?),
            ScorerSpec::Remote(url) => LayoutScorer::Remote(Box::new(connect(url)?)),
        })
    }

    /// Calls `f` with a scene scorer built on `self`.
    fn with<R>(
        &self,
        prompt: &str,
        state: &SceneState,
        seed: u64,
        f: impl FnOnce(&dyn SceneScorer) -> Result<R, CliError>,
    ) -> Result<R, CliError> {
        match self {
            LayoutScorer::Mock(landscape) => f(landscape),
            LayoutScorer::Remote(client) => {
                let scorer = RenderScorer::new(
                    client.as_ref(),
                    prompt,
                    state,
                    &PerspectiveSampling::default(),
                    RenderScorer::DEFAULT_VIEWS,
                    seed,
                )?;
                f(&scorer)
            }
        }
    }
}

pub fn compose(args: &ComposeArgs) -> Result<(), CliError> {
    let (desc, mut state) = load_state(&args.scene)?;
    let seed = args.seed.unwrap_or(desc.seed);
    let layout_path = args.out.join("layout.json");
    let trace_path = args.out.join("trace.jsonl");
    if state.objects.is_empty() {
        info!("scene has no objects; writing an empty layout");
        write_json(&layout_path, &Layout::from_state(&state, None))?;
        return write_jsonl::<()>(&trace_path, &[]);
    }
    let params = PsoParams {
        n_particles: args.particles,
        n_iters: args.iters,
        ..Default::default()
    };
    let scorer = LayoutScorer::new(&args.scorer, &state, seed)?;
    let result = scorer.with(&desc.prompt, &state, seed, |s| {
        Ok(run_pso(&Frozen { scorer: s, state: &state }, &state.bounds(), &params, seed)?)
    })?;
    info!("best layout score {:.6}", result.best_score);
    state.set_config(&result.best);
    write_json(&layout_path, &Layout::from_state(&state, Some(result.best_score)))?;
    write_jsonl(&trace_path, &result.trace)
}

fn apply_layout(state: &mut SceneState, layout: Option<&Path>) -> Result<(), CliError> {
    match layout {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
            let layout: Layout = serde_json::from_str(&text).map_err(|e| CliError::input(path, e))?;
            layout.apply(state)?;
        }
        None if !state.objects.is_empty() => warn!("no layout given; rendering the initial poses"),
        None => {}
    }
    Ok(())
}

pub fn render(args: &RenderArgs) -> Result<(), CliError> {
    let (_, mut state) = load_state(&args.scene)?;
    apply_layout(&mut state, args.layout.as_deref())?;
    let settings = VolumeSettings::default();
    let products = match args.camera {
        CameraSpec::Pano { height } => {
            // the panorama shows the environment only
            let cam = EquirectCamera::new(state.center, 2 * height, height)?;
            render_panorama(&state.grid, &cam, &settings, args.seed).products
        }
        CameraSpec::Perspective {
            azimuth_deg,
            elevation_deg,
            distance,
            fov_deg,
            width,
            height,
        } => {
            let (a, e) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
            let dir = Vec3::new(e.cos() * a.cos(), e.sin(), e.cos() * a.sin());
            let position = state.center + dir * distance.unwrap_or(state.radius);
            let cam = PerspectiveCamera::new(position, state.center, Vec3::y(), fov_deg.to_radians(), width, height)?;
            let gbuf = rasterize(&state.posed_meshes(), &cam);
            render_perspective(&gbuf, &state.grid, &cam, CompositeMode::Hard, &settings, args.seed).products
        }
    };
    let d = &products.disparity;
    write_atomic(&args.out.join("render.png"), &products.rgb.encode_png()?)?;
    write_atomic(&args.out.join("disparity.pfm"), &encode_pfm(d.width, d.height, &d.data))
}

/// Target color for the mock predictor, derived from the prompt so that
/// different prompts pull toward different colors.
fn prompt_color(prompt: &str) -> [f64; 3] {
    let h = mix_seed(&prompt.bytes().map(u64::from).collect::<Vec<_>>());
    std::array::from_fn(|i| 0.2 + 0.6 * ((h >> (16 * i)) & 0xFFFF) as f64 / 65535.0)
}

fn mock_target(w: usize, h: usize, channels: usize, color: [f64; 3]) -> ImageBuf {
    let pixel: Vec<f64> = (0..channels).map(|c| color.get(c).copied().unwrap_or(0.5)).collect();
    ImageBuf::from_vec(w, h, channels, pixel.repeat(w * h))
}

struct Recorder {
    dir: PathBuf,
    events: Vec<TraceEvent>,
}

fn write_state(dir: &Path, state: &SceneState, score: Option<f64>) -> Result<(), CliError> {
    write_atomic(&dir.join("field.rgrd"), &encode_grid(&state.grid))?;
    write_json(&dir.join("layout.json"), &Layout::from_state(state, score))?;
    for (o, mesh) in state.objects.iter().zip(state.posed_meshes()) {
        let mut bytes = Vec::new();
        write_obj(&mut bytes, &mesh).map_err(|e| CliError::Internal(e.to_string()))?;
        write_atomic(&dir.join(format!("{}.obj", o.name)), &bytes)?;
    }
    Ok(())
}

impl RunObserver for Recorder {
    fn event(&mut self, event: &TraceEvent) -> Result<(), GuidanceError> {
        self.events.push(event.clone());
        Ok(())
    }

    fn checkpoint(&mut self, iter: u64, state: &SceneState) -> Result<(), GuidanceError> {
        let dir = self.dir.join("checkpoints").join(format!("iter_{iter:06}"));
        write_state(&dir, state, None).map_err(|e| GuidanceError::Io(std::io::Error::other(e.to_string())))
    }
}

pub fn optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    let (desc, mut state) = load_state(&args.scene)?;
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::input(path, e))?;
            serde_json::from_str::<RunConfig>(&text).map_err(|e| CliError::input(path, e))?
        }
        None => RunConfig {
            seed: desc.seed,
            ..Default::default()
        },
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(iters) = args.iters {
        config.schedule = config.schedule.with_total_iters(iters);
    }
    config.schedule.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    config.render.perspective.validate()?;

    // reach every external service before touching any parameter
    let client = match &args.predictor {
        ModelSpec::Remote(url) => Some(connect(url)?),
        ModelSpec::Mock => None,
    };
    let layout_scorer = LayoutScorer::new(&args.scorer, &state, config.seed)?;

    let color = prompt_color(&desc.prompt);
    let r = &config.render;
    let pers_mock = MockPredictor::new(mock_target(r.perspective.width, r.perspective.height, 3, color), 1.0);
    let pano_mock = MockPredictor::new(mock_target(r.pano_width, r.pano_height, 4, color), 1.0);
    let (pers, pano, oracle): (&dyn NoisePredictor, &dyn NoisePredictor, &dyn DisparityOracle) = match &client {
        Some(c) => (c, c, c),
        None => (&pers_mock, &pano_mock, &LuminanceDisparity),
    };
    let ctx = GuidanceContext {
        predictors: Predictors {
            perspective: pers,
            perspective_baseline: &PureNoise,
            panorama: pano,
            panorama_baseline: &PureNoise,
        },
        oracle,
        prompt: &desc.prompt,
        render: &config.render,
    };
    ensure_dir(&args.out)?;
    let mut recorder = Recorder {
        dir: args.out.clone(),
        events: Vec::new(),
    };
    let snapshot = state.clone();
    let summary = layout_scorer.with(&desc.prompt, &snapshot, config.seed, |scorer| {
        Ok(optimize_scene(&mut state, &config, &ctx, scorer, &mut recorder)?)
    });
    // keep whatever trace was produced, even on failure
    write_jsonl(&args.out.join("trace.jsonl"), &recorder.events)?;
    let summary = summary?;
    info!("{} iterations, {} layout phases", summary.iterations, summary.pso_phases);
    write_state(&args.out, &state, None)
}

fn png_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::input(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    Ok(files)
}

fn read_png(path: &Path) -> Result<ImageBuf, CliError> {
    ImageBuf::read_png(path).map_err(|e| CliError::input(path, e))
}

#[derive(Debug, Serialize)]
struct EvaluateReport {
    #[serde(flatten)]
    metrics: EvalReport,
    images: usize,
    /// Files that could not be paired or aligned, with the reason.
    skipped: Vec<String>,
}

const EXPECTED_LAYOUT: &str = "expected <renders>/<prompt-dir>/<name>.png with optional <name>.pfm disparities, \
     and a prompts file mapping each <prompt-dir> to its prompt text";

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.prompts).map_err(|e| CliError::input(&args.prompts, e))?;
    let prompts: BTreeMap<String, String> =
        serde_json::from_str(&text).map_err(|e| CliError::input(&args.prompts, e))?;
    let mut images = Vec::new();
    for (p, dir) in prompts.keys().enumerate() {
        let sub = args.renders.join(dir);
        if !sub.is_dir() {
            warn!("{}: missing prompt directory", sub.display());
            continue;
        }
        for file in png_files(&sub)? {
            images.push((p, file));
        }
    }
    if images.is_empty() {
        return Err(CliError::input(&args.renders, format!("no renders found; {EXPECTED_LAYOUT}")));
    }
    let prompt_texts: Vec<&String> = prompts.values().collect();
    let connect_opt = |spec: &ModelSpec| match spec {
        ModelSpec::Remote(url) => connect(url).map(Some),
        ModelSpec::Mock => Ok(None),
    };
    let scorer_client = match &args.scorer {
        EvalScorerSpec::Remote(url) => Some(connect(url)?),
        EvalScorerSpec::Perfect => None,
    };
    let oracle_client = connect_opt(&args.oracle)?;
    let oracle: &dyn DisparityOracle = match &oracle_client {
        Some(c) => c,
        None => &LuminanceDisparity,
    };

    let mut scores = Vec::with_capacity(images.len());
    let mut ground_truth = Vec::with_capacity(images.len());
    let mut skipped = Vec::new();
    let mut align = Vec::new();
    for (p, file) in &images {
        let img = read_png(file)?;
        let row = match &scorer_client {
            None => (0..prompts.len()).map(|q| if q == *p { 1.0 } else { 0.0 }).collect(),
            Some(c) => prompt_texts
                .iter()
                .map(|t| c.score_image(&img, t))
                .collect::<Result<Vec<f64>, _>>()?,
        };
        scores.push(row);
        ground_truth.push(*p);

        let pfm = file.with_extension("pfm");
        let Ok(handle) = fs::File::open(&pfm) else {
            warn!("{}: no disparity file", pfm.display());
            skipped.push(format!("{}: missing disparity", pfm.display()));
            continue;
        };
        let (w, h, rendered) = read_pfm(BufReader::new(handle)).map_err(|e| CliError::input(&pfm, e))?;
        if (w, h) != (img.width, img.height) {
            skipped.push(format!("{}: size {w}x{h} differs from the render", pfm.display()));
            continue;
        }
        let predicted = oracle.estimate(&img)?;
        match depth_align_metric(&rendered, &predicted.data) {
            Ok(v) => align.push(v),
            Err(e) => {
                warn!("{}: {e}", pfm.display());
                skipped.push(format!("{}: {e}", pfm.display()));
            }
        }
    }
    let present: std::collections::BTreeSet<usize> = ground_truth.iter().copied().collect();
    let clip = if present.len() == prompts.len() {
        Some(clip_ap(&SimilarityMatrix::new(scores, ground_truth, prompts.len())?)?)
    } else {
        warn!("some prompts have no renders; CLIP-AP is not reported");
        None
    };
    let fid = match &args.reference {
        Some(dir) => Some(degradation_study(dir, &args.degradation, &args.levels, args.seed, &args.features)?),
        None => None,
    };
    let report = EvaluateReport {
        metrics: EvalReport {
            clip_ap: clip,
            depth_align_mse: (!align.is_empty()).then(|| align.iter().sum::<f64>() / align.len() as f64),
            fid,
        },
        images: images.len(),
        skipped,
    };
    write_json(&args.out, &report)
}

fn parse_kind(kind: &str) -> Result<DegradationKind, CliError> {
    DegradationKind::parse(kind)
        .ok_or_else(|| CliError::Usage(format!("unknown degradation `{kind}` (noise, blur, swirl, rectangles)")))
}

fn degradation_study(dir: &Path, kind: &str, levels: &[f64], seed: u64, features: &ModelSpec) -> Result<FidReport, CliError> {
    let kind = parse_kind(kind)?;
    let images = png_files(dir)?.iter().map(|p| read_png(p)).collect::<Result<Vec<_>, _>>()?;
    let client = match features {
        ModelSpec::Remote(url) => Some(connect(url)?),
        ModelSpec::Mock => None,
    };
    let remote;
    let extractor: &dyn FeatureExtractor = match &client {
        Some(c) => {
            remote = RemoteFeatures { client: c, layer: 192 };
            &remote
        }
        None => &PatchFeatures,
    };
    Ok(fid_monotonicity_report(&images, kind, levels, seed, extractor)?)
}

#[derive(Debug, Serialize)]
struct DegradeReport {
    kind: String,
    levels: Vec<f64>,
    images: Vec<String>,
    /// Present when the study is well-posed: at least two images of at
    /// least 32×32 pixels and at least two levels including 0.
    fid: Option<FidReport>,
}

pub fn degrade(args: &DegradeArgs) -> Result<(), CliError> {
    let kind = parse_kind(&args.kind)?;
    let files = png_files(&args.images)?;
    if files.is_empty() {
        return Err(CliError::input(&args.images, "no PNG images found"));
    }
    let mut levels = args.levels.clone();
    if levels.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(CliError::Usage("levels must be finite and non-negative".into()));
    }
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let images = files.iter().map(|p| read_png(p)).collect::<Result<Vec<_>, _>>()?;
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
        .collect();
    for (li, &amount) in levels.iter().enumerate() {
        let dir = args.out.join(format!("level_{li:02}"));
        for (i, (img, file)) in images.iter().zip(&files).enumerate() {
            let target = dir.join(&names[i]);
            if amount == 0.0 {
                let bytes = fs::read(file).map_err(|e| CliError::input(file, e))?;
                write_atomic(&target, &bytes)?;
            } else {
                let d = Degradation {
                    kind,
                    amount,
                    seed: mix_seed(&[args.seed, i as u64]),
                };
                write_atomic(&target, &apply_degradation(img, &d).encode_png()?)?;
            }
        }
    }
    let well_posed =
        images.len() >= 2 && levels.len() >= 2 && levels[0] == 0.0 && images.iter().all(|i| i.width >= 32 && i.height >= 32);
    let fid = if well_posed {
        Some(fid_monotonicity_report(&images, kind, &levels, args.seed, &PatchFeatures)?)
    } else {
        warn!("Fréchet study skipped: needs 2+ images of 32×32 or more and 2+ levels including 0");
        None
    };
    write_json(
        &args.out.join("report.json"),
        &DegradeReport {
            kind: kind.name().into(),
            levels,
            images: names,
            fid,
        },
    )
}
