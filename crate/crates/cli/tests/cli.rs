mod common;

use std::fs;

use common::*;
use scenecomp::imaging::{read_pfm, ImageBuf};
use serde_json::Value;
use tempfile::tempdir;

fn read_json(p: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bad_arguments_exit_1() {
    assert_eq!(run(&["compose"]).status.code(), Some(1));
    assert_eq!(run(&["render", "--scene", "x.json", "--camera", "ortho", "--out", "o"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn malformed_scene_fails_without_outputs() {
    let dir = tempdir().unwrap();
    let scene = dir.path().join("bad.json");
    fs::write(&scene, r#"{"schema": 1, "prompt": 5}"#).unwrap();
    let out = dir.path().join("out");
    let r = run(&["compose", "--scene", s(&scene), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("error"));
    assert!(!out.exists());

    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["render", "--scene", s(&missing), "--out", s(&out)]).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn compose_with_no_objects_writes_empty_layout() {
    let dir = tempdir().unwrap();
    let mut desc = scenecomp::scene::SceneDescription::demo();
    desc.objects.clear();
    let scene = dir.path().join("empty.json");
    fs::write(&scene, desc.to_json()).unwrap();
    let out = dir.path().join("out");
    run_ok(&["compose", "--scene", s(&scene), "--out", s(&out)]);
    let layout = read_json(&out.join("layout.json"));
    assert_eq!(layout["objects"].as_array().unwrap().len(), 0);
    assert_eq!(fs::read_to_string(out.join("trace.jsonl")).unwrap(), "");
}

#[test]
fn compose_is_deterministic_and_traces_every_iteration() {
    let dir = tempdir().unwrap();
    let scene = write_demo(dir.path());
    let go = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        run_ok(&["compose", "--scene", s(&scene), "--seed", seed, "--particles", "8", "--iters", "6", "--out", s(&out)]);
        (fs::read(out.join("layout.json")).unwrap(), fs::read_to_string(out.join("trace.jsonl")).unwrap())
    };
    let a = go("a", "1");
    assert_eq!(a, go("b", "1"));
    assert_ne!(a.0, go("c", "2").0);
    let trace: Vec<Value> = a.1.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(trace.len(), 7);
    let best: Vec<f64> = trace.iter().map(|t| t["gbest_score"].as_f64().unwrap()).collect();
    assert!(best.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn pano_of_empty_environment_is_black_with_zero_disparity() {
    let dir = tempdir().unwrap();
    let mut desc = scenecomp::scene::SceneDescription::demo();
    desc.environment.init = scenecomp::field::DensityInit::Zero;
    desc.environment.resolution = [8; 3];
    let scene = dir.path().join("s.json");
    fs::write(&scene, desc.to_json()).unwrap();
    let out = dir.path().join("out");
    run_ok(&["render", "--scene", s(&scene), "--camera", "pano:16", "--out", s(&out)]);
    let img = ImageBuf::read_png(&out.join("render.png")).unwrap();
    assert_eq!((img.width, img.height), (32, 16));
    assert!(img.data.iter().all(|v| *v == 0.0));
    let bytes = fs::read(out.join("disparity.pfm")).unwrap();
    assert!(bytes.starts_with(b"Pf\n32 16\n-1"));
    let (w, h, d) = read_pfm(&bytes[..]).unwrap();
    assert_eq!((w, h), (32, 16));
    assert!(d.iter().all(|v| *v == 0.0));
}

#[test]
fn perspective_render_shows_objects_and_is_deterministic() {
    let dir = tempdir().unwrap();
    let scene = write_demo(dir.path());
    let go = |name: &str| {
        let out = dir.path().join(name);
        run_ok(&["render", "--scene", s(&scene), "--camera", "perspective:90,20,3,60,40x30", "--seed", "5", "--out", s(&out)]);
        (fs::read(out.join("render.png")).unwrap(), fs::read(out.join("disparity.pfm")).unwrap())
    };
    let a = go("a");
    assert_eq!(a, go("b"));
    let (w, h, d) = read_pfm(&a.1[..]).unwrap();
    assert_eq!((w, h), (40, 30));
    assert!(d.iter().all(|v| v.is_finite() && *v >= 0.0));
    // objects are closer than the environment, so they stand out in disparity
    let max = d.iter().cloned().fold(0.0, f64::max);
    assert!(max > 1.0 / 3.0);
}

#[test]
fn optimize_records_one_step_per_iteration() {
    let dir = tempdir().unwrap();
    let scene = write_tiny(dir.path());
    let config = write_tiny_config(dir.path());
    let out = dir.path().join("out");
    run_ok(&["optimize", "--scene", s(&scene), "--config", s(&config), "--iters", "10", "--out", s(&out)]);
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    let events: Vec<Value> = trace.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.len(), 10);
    assert!(events.iter().all(|e| e["event"] == "step"));
    for f in ["field.rgrd", "layout.json", "lamp.obj", "table.obj"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(!out.join("checkpoints").exists());
}

#[test]
fn optimize_runs_layout_phases_and_checkpoints() {
    let dir = tempdir().unwrap();
    let scene = write_tiny(dir.path());
    let config = write_tiny_config(dir.path());
    let out = dir.path().join("out");
    run_ok(&["optimize", "--scene", s(&scene), "--config", s(&config), "--iters", "6000", "--out", s(&out)]);
    let trace = fs::read_to_string(out.join("trace.jsonl")).unwrap();
    let pso: Vec<Value> = trace
        .lines()
        .map(|l| serde_json::from_str::<Value>(l).unwrap())
        .filter(|e| e["event"] == "pso")
        .collect();
    assert_eq!(pso.iter().map(|e| e["iter"].as_u64().unwrap()).collect::<Vec<_>>(), [3000, 6000]);
    for e in &pso {
        assert!(e["score_after"].as_f64().unwrap() >= e["score_before"].as_f64().unwrap());
    }
    for iter in ["iter_003000", "iter_006000"] {
        let c = out.join("checkpoints").join(iter);
        assert!(c.join("field.rgrd").is_file() && c.join("layout.json").is_file() && c.join("lamp.obj").is_file());
    }
}

#[test]
fn unreachable_predictor_exits_2_before_writing() {
    let dir = tempdir().unwrap();
    let scene = write_tiny(dir.path());
    let out = dir.path().join("out");
    let r = run(&["optimize", "--scene", s(&scene), "--iters", "3", "--predictor", "remote:http://127.0.0.1:9", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
    let r = run(&["compose", "--scene", s(&scene), "--scorer", "remote:http://127.0.0.1:9", "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
}

fn eval_fixture(dir: &std::path::Path, affine: bool) -> (std::path::PathBuf, std::path::PathBuf) {
    let renders = dir.join("renders");
    for (g, group) in ["a", "b"].iter().enumerate() {
        fs::create_dir_all(renders.join(group)).unwrap();
        for i in 0..2 {
            let mut img = ImageBuf::new(16, 16, 3);
            for (k, v) in img.data.iter_mut().enumerate() {
                *v = ((k * (g + 3) + i * 11) % 17) as f64 / 16.0;
            }
            let stem = renders.join(group).join(format!("v{i}"));
            fs::write(stem.with_extension("png"), img.encode_png().unwrap()).unwrap();
            // the mock oracle echoes luminance, so an affine map of the
            // luminance of the stored PNG aligns exactly
            let stored = ImageBuf::read_png(&stem.with_extension("png")).unwrap();
            let lum: Vec<f64> = stored
                .luminance()
                .iter()
                .enumerate()
                .map(|(p, l)| if affine { 2.0 * l + 0.5 } else { (p % 7) as f64 })
                .collect();
            fs::write(stem.with_extension("pfm"), scenecomp::imaging::encode_pfm(16, 16, &lum)).unwrap();
        }
    }
    let prompts = dir.join("prompts.json");
    fs::write(&prompts, r#"{"a": "first", "b": "second"}"#).unwrap();
    (renders, prompts)
}

#[test]
fn evaluate_perfect_scorer_and_aligned_depth() {
    let dir = tempdir().unwrap();
    let (renders, prompts) = eval_fixture(dir.path(), true);
    let out = dir.path().join("eval.json");
    run_ok(&["evaluate", "--renders", s(&renders), "--prompts", s(&prompts), "--out", s(&out)]);
    let r = read_json(&out);
    assert_eq!(r["clip_ap"].as_f64(), Some(100.0));
    assert!(r["depth_align_mse"].as_f64().unwrap() < 1e-12);
    assert_eq!(r["images"], 4);
}

#[test]
fn evaluate_reports_misaligned_depth() {
    let dir = tempdir().unwrap();
    let (renders, prompts) = eval_fixture(dir.path(), false);
    let out = dir.path().join("eval.json");
    run_ok(&["evaluate", "--renders", s(&renders), "--prompts", s(&prompts), "--out", s(&out)]);
    assert!(read_json(&out)["depth_align_mse"].as_f64().unwrap() > 1e-3);
}

#[test]
fn evaluate_on_empty_directory_explains_the_layout() {
    let dir = tempdir().unwrap();
    let prompts = dir.path().join("prompts.json");
    fs::write(&prompts, r#"{"a": "first", "b": "second"}"#).unwrap();
    let out = dir.path().join("eval.json");
    let r = run(&["evaluate", "--renders", s(dir.path()), "--prompts", s(&prompts), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("expected"));
    assert!(!out.exists());
}

fn corpus_dir(dir: &std::path::Path) -> std::path::PathBuf {
    let images = dir.join("images");
    fs::create_dir_all(&images).unwrap();
    for (i, img) in scenecomp::metrics::synthetic_corpus(6, 32, 0).iter().enumerate() {
        fs::write(images.join(format!("img{i}.png")), img.encode_png().unwrap()).unwrap();
    }
    images
}

#[test]
fn degrade_level_zero_is_identity_and_levels_are_sorted() {
    let dir = tempdir().unwrap();
    let images = corpus_dir(dir.path());
    let out = dir.path().join("out");
    run_ok(&["degrade", "--images", s(&images), "--kind", "noise", "--levels", "0.2,0,0.05", "--out", s(&out)]);
    for i in 0..6 {
        let name = format!("img{i}.png");
        assert_eq!(fs::read(images.join(&name)).unwrap(), fs::read(out.join("level_00").join(&name)).unwrap());
        assert_ne!(fs::read(images.join(&name)).unwrap(), fs::read(out.join("level_01").join(&name)).unwrap());
    }
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["levels"], serde_json::json!([0.0, 0.05, 0.2]));
    let d: Vec<f64> = report["fid"]["distances"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(d[0] == 0.0 && d[1] < d[2]);
}

#[test]
fn degrade_is_deterministic() {
    let dir = tempdir().unwrap();
    let images = corpus_dir(dir.path());
    let go = |name: &str| {
        let out = dir.path().join(name);
        run_ok(&["degrade", "--images", s(&images), "--kind", "rectangles", "--levels", "2", "--seed", "4", "--out", s(&out)]);
        fs::read(out.join("level_00").join("img3.png")).unwrap()
    };
    assert_eq!(go("a"), go("b"));
    let r = run(&["degrade", "--images", s(dir.path()), "--kind", "noise", "--levels", "0.1", "--out", s(&dir.path().join("c"))]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn golden_pipeline_is_reproduced() {
    let dir = tempdir().unwrap();
    let files = golden_pipeline(dir.path());
    let bad = check_golden(dir.path(), &files);
    assert!(bad.is_empty(), "differs from golden: {bad:?} (UPDATE_GOLDEN=1 regenerates)");
}
