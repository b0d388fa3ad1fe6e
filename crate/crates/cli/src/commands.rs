use std::fs;
use std::io::Write;
use std::path::Path;

use polar_core::assignment::{
    box_cost, build_cost_matrix, class_cost, filter_perception_range, hungarian, MatchCandidate, MatchTarget,
};
use polar_core::camera::{check_view_symmetry, make_symmetric_rig, Intrinsics, SymmetryReport};
use polar_core::eval::{
    average_precision_center_distance, greedy_center_matching, mean_average_precision, nds, tp_errors, BoxState,
    GtCenter, NdsInput, ScoredCenter, AP_THRESHOLDS, TP_DISTANCE_THRESHOLD,
};
use polar_core::geometry::{CartesianBox, RangeConfig};
use polar_core::io::{
    detections_from_json, detections_to_json, scene_from_json, scene_to_json, to_json_string, SCHEMA_VERSION,
};
use polar_core::loss::{gradcheck_fixtures, run_gradcheck};
use polar_core::simulator::{generate_scene, render_detections, EgoTrajectory, NoiseFrame, CLASS_NAMES};
use polar_core::tracker::{count_id_switches, run_tracker, GtRef, MatchStrategy};
use polar_core::{ClassCost, DetectionSet, NoiseModel, PerceptionRange, Scene, SceneConfig, TrackerConfig};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::*;
use crate::error::{CliError, CliResult};

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn load_scene(path: &Path) -> CliResult<Scene> {
    Ok(scene_from_json(&read_text(path)?)?)
}

fn load_detections(path: &Path) -> CliResult<DetectionSet> {
    Ok(detections_from_json(&read_text(path)?)?)
}

/// Overlays the fields of the JSON object in `path` onto `base`.
fn apply_config_file<T: Serialize + DeserializeOwned>(base: T, path: Option<&Path>) -> CliResult<T> {
    let Some(path) = path else {
        return Ok(base);
    };
    let text = read_text(path)?;
    let overrides: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))?;
    let serde_json::Value::Object(overrides) = overrides else {
        return Err(CliError::invalid(format!("{}: config must be a JSON object", path.display())));
    };
    let mut merged = serde_json::to_value(base).map_err(|e| CliError::invalid(e.to_string()))?;
    let target = merged.as_object_mut().expect("configs serialize to objects");
    for (key, value) in overrides {
        if !target.contains_key(&key) {
            return Err(CliError::invalid(format!("{}: unknown config field `{key}`", path.display())));
        }
        target.insert(key, value);
    }
    serde_json::from_value(merged).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn write_csv<S: Serialize>(rows: &[S], out: Option<&Path>) -> CliResult<()> {
    let mut buf = csv::Writer::from_writer(Vec::new());
    for row in rows {
        buf.serialize(row).map_err(|e| CliError::invalid(e.to_string()))?;
    }
    let bytes = buf.into_inner().map_err(|e| CliError::invalid(e.to_string()))?;
    match out {
        Some(path) => fs::write(path, &bytes).map_err(|e| CliError::io(path, e)),
        None => std::io::stdout().write_all(&bytes).map_err(|e| CliError::io(Path::new("<stdout>"), e)),
    }
}

pub fn simulate(a: &SimulateArgs) -> CliResult<()> {
    let trajectory = match a.trajectory {
        TrajectoryKind::Static => EgoTrajectory::Static,
        TrajectoryKind::Straight => EgoTrajectory::Straight { speed: a.ego_speed },
        TrajectoryKind::Arc => EgoTrajectory::Arc { speed: a.ego_speed, yaw_rate: a.yaw_rate },
    };
    let flags = SceneConfig {
        objects: a.objects,
        frames: a.frames,
        dt: a.dt,
        seed: a.seed,
        r_max: a.r_max,
        min_speed: a.min_speed,
        max_speed: a.max_speed,
        cameras: a.cameras,
        trajectory,
        clip_to_range: !a.no_clip,
    };
    let cfg = apply_config_file(flags, a.config.as_deref())?;
    let scene = generate_scene(&cfg)?;
    write_text(&a.out, &scene_to_json(&scene)?)
}

pub fn render(a: &RenderArgs) -> CliResult<()> {
    let flags = NoiseModel {
        sigma_radial: a.sigma_radial,
        sigma_tangential: a.sigma_tangential,
        sigma_z: a.sigma_z,
        sigma_size: a.sigma_size,
        sigma_yaw: a.sigma_yaw,
        sigma_velocity: a.sigma_velocity,
        drop_prob: a.drop_prob,
        fp_rate: a.fp_rate,
        fp_range: a.fp_range,
        seed: a.seed,
        frame: match a.noise_frame {
            NoiseFrameArg::Polar => NoiseFrame::Polar,
            NoiseFrameArg::Cartesian => NoiseFrame::Cartesian,
        },
    };
    let noise = apply_config_file(flags, a.config.as_deref())?;
    let scene = load_scene(&a.scene)?;
    let dets = render_detections(&scene, &noise)?;
    write_text(&a.out, &detections_to_json(&dets)?)
}

fn check_frame_counts(scene: &Scene, dets: &DetectionSet) -> CliResult<()> {
    if scene.frames.len() != dets.frames.len() {
        return Err(CliError::invalid(format!(
            "scene has {} frames but detections have {}",
            scene.frames.len(),
            dets.frames.len()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct PairReport {
    gt_id: u64,
    detection: usize,
    class_cost: f64,
    box_cost: f64,
    total: f64,
}

#[derive(Serialize)]
struct FrameAssignment {
    frame: usize,
    pairs: Vec<PairReport>,
    total_cost: f64,
    unmatched_gt_ids: Vec<u64>,
    unmatched_detections: Vec<usize>,
    out_of_range_gt_ids: Vec<u64>,
}

#[derive(Serialize)]
struct AssignmentDoc {
    schema_version: u32,
    k_scaling: f64,
    frames: Vec<FrameAssignment>,
}

pub fn assign(a: &AssignArgs) -> CliResult<()> {
    let scene = load_scene(&a.scene)?;
    let dets = load_detections(&a.detections)?;
    check_frame_counts(&scene, &dets)?;
    let range = match a.range {
        RangeShape::Circular => PerceptionRange::Circular { r_max: a.r_max },
        RangeShape::Rectangular => PerceptionRange::Rectangular { x_max: a.x_max, y_max: a.y_max },
    };
    let kind = match a.class_cost {
        ClassCostArg::NegProb => ClassCost::NegativeProbability,
        ClassCostArg::Focal => ClassCost::Focal { alpha: 0.25, gamma: 2.0 },
    };
    if !(a.k_scaling.is_finite() && a.k_scaling >= 0.0) {
        return Err(CliError::invalid("--k-scaling must be finite and nonnegative"));
    }

    let mut frames = Vec::with_capacity(scene.frames.len());
    for (n, (frame, dframe)) in scene.frames.iter().zip(&dets.frames).enumerate() {
        let inside: Vec<_> = frame.objects.iter().filter(|o| range.contains(o.bbox.x, o.bbox.y)).collect();
        let out_of_range_gt_ids =
            frame.objects.iter().filter(|o| !range.contains(o.bbox.x, o.bbox.y)).map(|o| o.id).collect();
        let targets = inside
            .iter()
            .map(|o| Ok(MatchTarget { polar: o.polar()?.0, class: o.class }))
            .collect::<polar_core::Result<Vec<_>>>()?;
        let cands: Vec<MatchCandidate> =
            dframe.detections.iter().map(|d| MatchCandidate { polar: d.polar, probs: d.probs.clone() }).collect();
        let costs = build_cost_matrix(&cands, &targets, a.k_scaling, kind)?;
        let assignment = hungarian(&costs)?;
        let mut pairs = Vec::with_capacity(assignment.len());
        for &(g, p) in &assignment.pairs {
            let cls = class_cost(&cands[p].probs, targets[g].class, kind)?;
            let bx = box_cost(&cands[p].polar, &targets[g].polar, a.k_scaling);
            pairs.push(PairReport {
                gt_id: inside[g].id,
                detection: p,
                class_cost: cls,
                box_cost: bx,
                total: cls + bx,
            });
        }
        frames.push(FrameAssignment {
            frame: n,
            total_cost: assignment.total_cost(&costs),
            unmatched_gt_ids: (0..targets.len())
                .filter(|&g| assignment.prediction_for(g).is_none())
                .map(|g| inside[g].id)
                .collect(),
            unmatched_detections: (0..cands.len()).filter(|&p| assignment.gt_for(p).is_none()).collect(),
            out_of_range_gt_ids,
            pairs,
        });
    }
    let doc = AssignmentDoc { schema_version: SCHEMA_VERSION, k_scaling: a.k_scaling, frames };
    write_text(&a.out, &to_json_string(&doc)?)
}

#[derive(Serialize)]
struct TrackedDetection {
    track_id: u64,
    class: usize,
    center: [f64; 2],
    score: f64,
}

#[derive(Serialize)]
struct TrackFrame {
    frame: usize,
    t: f64,
    detections: Vec<TrackedDetection>,
}

#[derive(Serialize)]
struct TrackSummary {
    tracks_created: u64,
    id_switches: Option<usize>,
}

#[derive(Serialize)]
struct TrackingDoc {
    schema_version: u32,
    frames: Vec<TrackFrame>,
    summary: TrackSummary,
}

pub fn gt_refs(scene: &Scene) -> Vec<Vec<GtRef>> {
    scene
        .frames
        .iter()
        .map(|f| f.objects.iter().map(|o| GtRef { id: o.id, center: [o.bbox.x, o.bbox.y], class: o.class }).collect())
        .collect()
}

pub fn track(a: &TrackArgs) -> CliResult<()> {
    let flags = TrackerConfig {
        distance_threshold: a.threshold,
        max_misses: a.max_misses,
        strategy: match a.strategy {
            StrategyArg::Greedy => MatchStrategy::Greedy,
            StrategyArg::Hungarian => MatchStrategy::Hungarian,
        },
    };
    let cfg = apply_config_file(flags, a.config.as_deref())?;
    let dets = load_detections(&a.detections)?;
    let scene = a.scene.as_deref().map(load_scene).transpose()?;
    if let Some(scene) = &scene {
        check_frame_counts(scene, &dets)?;
    }

    let run = run_tracker(cfg, &dets)?;
    let id_switches = scene.as_ref().map(|s| count_id_switches(&run.frames, &gt_refs(s), TP_DISTANCE_THRESHOLD));
    let frames = run
        .frames
        .iter()
        .zip(&dets.frames)
        .enumerate()
        .map(|(n, (objs, df))| TrackFrame {
            frame: n,
            t: df.t,
            detections: objs
                .iter()
                .zip(&df.detections)
                .map(|(o, d)| TrackedDetection {
                    track_id: o.track_id,
                    class: o.class,
                    center: o.center,
                    score: d.score,
                })
                .collect(),
        })
        .collect();
    let summary = TrackSummary { tracks_created: run.tracks_created, id_switches };
    match summary.id_switches {
        Some(s) => println!("tracks created: {}, id switches: {s}", summary.tracks_created),
        None => println!("tracks created: {}", summary.tracks_created),
    }
    let doc = TrackingDoc { schema_version: SCHEMA_VERSION, frames, summary };
    write_text(&a.out, &to_json_string(&doc)?)
}

#[derive(Serialize)]
struct ClassAp {
    class: &'static str,
    threshold: f64,
    ap: f64,
}

#[derive(Serialize)]
struct TpReport {
    ate: f64,
    ase: f64,
    aoe: f64,
    ave: f64,
    aae: f64,
}

#[derive(Serialize)]
struct MetricsDoc {
    schema_version: u32,
    map: f64,
    nds: f64,
    true_positives: usize,
    tp: TpReport,
    ap: Vec<ClassAp>,
}

#[derive(Serialize)]
struct MetricRow<'a> {
    metric: &'a str,
    class: &'a str,
    threshold: Option<f64>,
    value: f64,
}

pub fn eval(a: &EvalArgs) -> CliResult<()> {
    if !(a.aae.is_finite() && a.aae >= 0.0) {
        return Err(CliError::invalid("--aae must be finite and nonnegative"));
    }
    let scene = load_scene(&a.scene)?;
    let dets = load_detections(&a.detections)?;
    check_frame_counts(&scene, &dets)?;

    let mut gts = Vec::new();
    let mut gt_states = Vec::new();
    for (n, f) in scene.frames.iter().enumerate() {
        for o in &f.objects {
            let (polar, velocity) = o.polar()?;
            gts.push(GtCenter { frame: n, center: [o.bbox.x, o.bbox.y], class: o.class });
            gt_states.push(BoxState { polar, velocity });
        }
    }
    let mut preds = Vec::new();
    let mut pred_states = Vec::new();
    for (n, f) in dets.frames.iter().enumerate() {
        for d in &f.detections {
            preds.push(ScoredCenter { frame: n, center: d.polar.center_xy(), class: d.class, score: d.score });
            pred_states.push(BoxState { polar: d.polar, velocity: d.velocity });
        }
    }
    let map = mean_average_precision(&preds, &gts)
        .ok_or_else(|| CliError::invalid("scene has no ground-truth objects to evaluate against"))?;

    let mut ap = Vec::new();
    for (c, name) in CLASS_NAMES.iter().enumerate() {
        let p: Vec<ScoredCenter> = preds.iter().filter(|x| x.class == c).copied().collect();
        let g: Vec<GtCenter> = gts.iter().filter(|x| x.class == c).copied().collect();
        for &t in &AP_THRESHOLDS {
            if let Some(v) = average_precision_center_distance(&p, &g, t) {
                ap.push(ClassAp { class: name, threshold: t, ap: v });
            }
        }
    }

    let (order, matched) = greedy_center_matching(&preds, &gts, TP_DISTANCE_THRESHOLD);
    let pairs: Vec<(BoxState, BoxState)> =
        order.iter().zip(&matched).filter_map(|(&pi, m)| m.map(|gi| (pred_states[pi], gt_states[gi]))).collect();
    // without true positives every TP error takes its worst clamped value
    let tp = if pairs.is_empty() {
        TpReport { ate: 1.0, ase: 1.0, aoe: 1.0, ave: 1.0, aae: a.aae }
    } else {
        let e = tp_errors(&pairs)?;
        TpReport { ate: e.ate, ase: e.ase, aoe: e.aoe, ave: e.ave, aae: a.aae }
    };
    let score = nds(&NdsInput { map, tp: [tp.ate, tp.ase, tp.aoe, tp.ave, tp.aae] })?;

    if let Some(path) = &a.csv {
        let mut rows = vec![
            MetricRow { metric: "map", class: "", threshold: None, value: map },
            MetricRow { metric: "nds", class: "", threshold: None, value: score },
            MetricRow { metric: "ate", class: "", threshold: None, value: tp.ate },
            MetricRow { metric: "ase", class: "", threshold: None, value: tp.ase },
            MetricRow { metric: "aoe", class: "", threshold: None, value: tp.aoe },
            MetricRow { metric: "ave", class: "", threshold: None, value: tp.ave },
            MetricRow { metric: "aae", class: "", threshold: None, value: tp.aae },
        ];
        rows.extend(ap.iter().map(|x| MetricRow {
            metric: "ap",
            class: x.class,
            threshold: Some(x.threshold),
            value: x.ap,
        }));
        write_csv(&rows, Some(path))?;
    }
    println!("mAP {map:.4}  NDS {score:.4}  true positives {}", pairs.len());
    let doc = MetricsDoc { schema_version: SCHEMA_VERSION, map, nds: score, true_positives: pairs.len(), tp, ap };
    write_text(&a.out, &to_json_string(&doc)?)
}

#[derive(Serialize)]
struct SymmetryDoc {
    cameras: usize,
    seed: u64,
    #[serde(flatten)]
    report: SymmetryReport,
}

pub fn symmetry_check(a: &SymmetryArgs) -> CliResult<()> {
    if a.points == 0 {
        return Err(CliError::invalid("--points must be positive"));
    }
    let intrinsics = Intrinsics { fx: 1260.0, fy: 1260.0, cx: 800.0, cy: 450.0 };
    let rig = make_symmetric_rig(a.cameras, intrinsics, 1600, 900, [1.0, 0.0, 1.5])?;
    let report = check_view_symmetry(&rig, a.points, a.seed)?;
    print!("{}", to_json_string(&SymmetryDoc { cameras: a.cameras, seed: a.seed, report })?);
    Ok(())
}

#[derive(Serialize)]
struct RangeRow {
    object: usize,
    x: f64,
    y: f64,
    radial_distance: f64,
    circular: &'static str,
    rectangular: &'static str,
}

pub fn range_demo(a: &RangeDemoArgs) -> CliResult<()> {
    if !(a.radius.is_finite() && a.radius > 0.0) {
        return Err(CliError::invalid("--radius must be positive"));
    }
    let d = a.radius / 2f64.sqrt();
    let objs: Vec<CartesianBox> = [(a.radius, 0.0), (d, d)]
        .iter()
        .map(|&(x, y)| CartesianBox { x, y, z: 0.0, length: 4.0, width: 2.0, height: 1.5, yaw: 0.0 })
        .collect();
    let circle = PerceptionRange::Circular { r_max: a.r_max };
    let rect = PerceptionRange::Rectangular { x_max: a.x_max, y_max: a.y_max };
    let (kept_circle, _) = filter_perception_range(&objs, circle);
    let (kept_rect, _) = filter_perception_range(&objs, rect);
    let verdict = |kept: &[CartesianBox], o: &CartesianBox| if kept.contains(o) { "kept" } else { "dropped" };
    let rows: Vec<RangeRow> = objs
        .iter()
        .enumerate()
        .map(|(i, o)| RangeRow {
            object: i,
            x: o.x,
            y: o.y,
            radial_distance: o.radial_distance(),
            circular: verdict(&kept_circle, o),
            rectangular: verdict(&kept_rect, o),
        })
        .collect();
    match a.format {
        ReportFormat::Csv => write_csv(&rows, None),
        ReportFormat::Json => {
            print!("{}", to_json_string(&rows)?);
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct GradRow {
    fixture_id: usize,
    max_relative_error: f64,
}

pub fn gradcheck(a: &GradcheckArgs) -> CliResult<()> {
    if a.count == 0 {
        return Err(CliError::invalid("--count must be positive"));
    }
    let range = RangeConfig::default();
    let fixtures = gradcheck_fixtures(a.count, a.seed, &range)?;
    let errors = run_gradcheck(&fixtures, &range)?;
    let rows: Vec<GradRow> = errors
        .into_iter()
        .enumerate()
        .map(|(fixture_id, max_relative_error)| GradRow { fixture_id, max_relative_error })
        .collect();
    write_csv(&rows, a.out.as_deref())
}

pub fn nds_cmd(a: &NdsArgs) -> CliResult<()> {
    let tp: [f64; 5] = a
        .tps
        .as_slice()
        .try_into()
        .map_err(|_| CliError::invalid(format!("--tps needs 5 comma-separated values, got {}", a.tps.len())))?;
    let score = nds(&NdsInput { map: a.map, tp })?;
    println!("{score:.3}");
    Ok(())
}
