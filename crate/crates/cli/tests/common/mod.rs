#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use scenecomp::guidance::{RenderConfig, RunConfig};
use scenecomp::layout::PsoParams;
use scenecomp::render::{PerspectiveSampling, VolumeSettings};
use scenecomp::scene::{GeometrySpec, SceneDescription};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_scenecomp"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn scenecomp")
}

pub fn run_ok(args: &[&str]) {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn write_demo(dir: &Path) -> PathBuf {
    let path = dir.join("scene.json");
    fs::write(&path, SceneDescription::demo().to_json()).unwrap();
    path
}

/// The demo scene shrunk to a 6³ environment and coarse object lattices.
pub fn write_tiny(dir: &Path) -> PathBuf {
    let mut desc = SceneDescription::demo();
    desc.environment.resolution = [6; 3];
    for o in &mut desc.objects {
        if let GeometrySpec::Sdf { lattice_resolution, .. } = &mut o.geometry {
            *lattice_resolution = 6;
        }
    }
    let path = dir.join("tiny.json");
    fs::write(&path, desc.to_json()).unwrap();
    path
}

/// A run configuration with tiny renders and a tiny swarm.
pub fn write_tiny_config(dir: &Path) -> PathBuf {
    let config = RunConfig {
        render: RenderConfig {
            volume: VolumeSettings {
                n_samples: 4,
                ..Default::default()
            },
            perspective: PerspectiveSampling {
                width: 6,
                height: 6,
                ..Default::default()
            },
            pano_width: 8,
            pano_height: 4,
            ..Default::default()
        },
        pso: PsoParams {
            n_particles: 4,
            n_iters: 2,
            ..Default::default()
        },
        ..Default::default()
    };
    let path = dir.join("run.json");
    fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

pub const VIEWS: [&str; 2] = ["perspective:30,20,3,60,48x48", "perspective:210,10,3,60,48x48"];

/// compose → render → evaluate on the demo scene, entirely on mocks.
/// Returns the files that are compared against the golden copies, relative
/// to `work`.
pub fn golden_pipeline(work: &Path) -> Vec<PathBuf> {
    let scene = write_demo(work);
    let comp = work.join("compose");
    run_ok(&["compose", "--scene", s(&scene), "--seed", "7", "--particles", "12", "--iters", "15", "--out", s(&comp)]);
    let layout = comp.join("layout.json");
    let renders = work.join("renders");
    let mut files = vec![PathBuf::from("compose/layout.json"), PathBuf::from("compose/trace.jsonl")];
    for (group, with_layout) in [("composed", true), ("initial", false)] {
        for (v, camera) in VIEWS.iter().enumerate() {
            let tmp = work.join(format!("view_{group}_{v}"));
            let mut args = vec!["render", "--scene", s(&scene), "--camera", camera, "--seed", "3", "--out", s(&tmp)];
            if with_layout {
                args.extend(["--layout", s(&layout)]);
            }
            run_ok(&args);
            let dir = renders.join(group);
            fs::create_dir_all(&dir).unwrap();
            for ext in ["png", "pfm"] {
                let name = format!("view{v}.{ext}");
                let src = tmp.join(if ext == "png" { "render.png" } else { "disparity.pfm" });
                fs::rename(src, dir.join(&name)).unwrap();
                files.push(PathBuf::from("renders").join(group).join(name));
            }
        }
    }
    let prompts = work.join("prompts.json");
    fs::write(&prompts, r#"{"composed": "a lamp standing next to a small table", "initial": "a lamp and a table"}"#)
        .unwrap();
    run_ok(&["evaluate", "--renders", s(&renders), "--prompts", s(&prompts), "--out", s(&work.join("eval.json"))]);
    files.push(PathBuf::from("eval.json"));
    files
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

/// Compares the pipeline outputs in `work` with the golden copies, or
/// rewrites them when `UPDATE_GOLDEN` is set. Returns the mismatching files.
pub fn check_golden(work: &Path, files: &[PathBuf]) -> Vec<PathBuf> {
    let golden = golden_dir();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        for f in files {
            let dst = golden.join(f);
            fs::create_dir_all(dst.parent().unwrap()).unwrap();
            fs::copy(work.join(f), dst).unwrap();
        }
        return Vec::new();
    }
    files
        .iter()
        .filter(|f| fs::read(work.join(f)).ok() != fs::read(golden.join(f)).ok())
        .cloned()
        .collect()
}
