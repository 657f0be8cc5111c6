use std::path::Path;
use std::process::{Command, Output};

use dpsconf::eval::optimal_auc;
use dpsconf::imagery::{encode_pfm, save_image};
use dpsconf::raster::RasterImage;
use dpsconf::synth::{composite_scene, noise_scene};
use dpsconf::RunConfig;

mod common;

fn dpsconf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dpsconf")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes a planted pair as `left.png` / `right.png` under `dir`.
fn planted_pair(dir: &Path, w: usize, h: usize, d: usize) {
    let scene = noise_scene(w, h, d, 3);
    save_image(&scene.left, dir.join("left.png")).unwrap();
    save_image(&scene.right, dir.join("right.png")).unwrap();
}

fn small_dataset(root: &Path) {
    let scenes: Vec<_> = [(6, 0), (8, 1), (10, 2)]
        .iter()
        .map(|&(d, seed)| composite_scene(160, 120, d, seed))
        .collect();
    common::write_dataset(root, &scenes);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn match_writes_disparity_and_preview() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 96, 64, 5);
    let out = dir.path().join("out");
    let o = dpsconf(&[
        "match",
        "--left", s(&dir.path().join("left.png")),
        "--right", s(&dir.path().join("right.png")),
        "--d-max", "16",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(out.join("disp_0.pfm").exists());
    assert!(out.join("disp_0_vis.png").exists());
}

#[test]
fn mismatched_pair_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    save_image(&RasterImage::gray(40, 30, vec![0; 1200]).unwrap(), dir.path().join("l.png")).unwrap();
    save_image(&RasterImage::gray(30, 30, vec![0; 900]).unwrap(), dir.path().join("r.png")).unwrap();
    let o = dpsconf(&[
        "match",
        "--left", s(&dir.path().join("l.png")),
        "--right", s(&dir.path().join("r.png")),
        "--out", s(&dir.path().join("out")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("40x30"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 64, 32, 3);
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"").unwrap();
    let o = dpsconf(&[
        "match",
        "--left", s(&dir.path().join("left.png")),
        "--right", s(&dir.path().join("right.png")),
        "--d-max", "8",
        "--out", s(&blocker.join("sub")),
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn confidence_on_a_planted_pair_is_high() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 160, 120, 7);
    let out = dir.path().join("out");
    let o = dpsconf(&[
        "confidence",
        "--left", s(&dir.path().join("left.png")),
        "--right", s(&dir.path().join("right.png")),
        "--d-max", "32",
        "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let mean: f64 = text.split("mean ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(mean >= 0.9, "{text}");
    for f in ["disp_0.pfm", "unreliability.pfm", "confidence.pfm", "confidence.png"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn explicit_shift_list_calls_the_matcher_once_per_shift() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 24, 16, 2);
    let fixed = dir.path().join("fixed.pfm");
    std::fs::write(&fixed, encode_pfm(24, 16, &[2.0; 24 * 16])).unwrap();
    let log = dir.path().join("calls.log");
    let template = format!("echo call >> '{}'; cp '{}' {{out}} # {{left}} {{right}}", s(&log), s(&fixed));
    let o = dpsconf(&[
        "confidence",
        "--left", s(&dir.path().join("left.png")),
        "--right", s(&dir.path().join("right.png")),
        "--external-cmd", &template,
        "--d-max", "8",
        "--shifts", "0,1",
        "--out", s(&dir.path().join("out")),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 2);
}

#[test]
fn even_shift_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 64, 32, 3);
    let o = dpsconf(&[
        "confidence",
        "--left", s(&dir.path().join("left.png")),
        "--right", s(&dir.path().join("right.png")),
        "--n", "4",
        "--k", "2",
        "--out", s(&dir.path().join("out")),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn external_failure_exits_with_external_code() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 32, 16, 2);
    let o = dpsconf(&[
        "match",
        "--left", s(&dir.path().join("left.png")),
        "--right", s(&dir.path().join("right.png")),
        "--external-cmd", "echo nope >&2; exit 1 # {left} {right} {out}",
        "--out", s(&dir.path().join("out")),
    ]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn eval_ranks_the_sweep_above_the_random_control() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let out = dir.path().join("out");
    let o = dpsconf(&["eval", "--dataset", s(&data), "--d-max", "32", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("random-control"));

    let summary = csv_rows(&out.join("summary.csv"));
    let auc = |m: &str| -> f64 { summary.iter().find(|r| r[0] == m).unwrap()[4].parse().unwrap() };
    assert!(auc("sweep") < auc("random-control"));
    assert!(summary.iter().all(|r| r[2] == "3"));

    let per_image = csv_rows(&out.join("per_image.csv"));
    assert_eq!(per_image.len(), 9);
    for r in &per_image {
        let eps: f64 = r[2].parse().unwrap();
        let opt: f64 = r[4].parse().unwrap();
        assert!((opt - optimal_auc(eps).unwrap() * 100.0).abs() < 1e-5, "{r:?}");
    }
    assert!(out.join("curves").join("img_0_sweep.csv").exists());
}

#[test]
fn unreadable_ground_truth_skips_only_that_image() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    std::fs::write(data.join("gt").join("img_1.pfm"), b"not a pfm").unwrap();
    let out = dir.path().join("out");
    let o = dpsconf(&["eval", "--dataset", s(&data), "--d-max", "32", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("img_1"), "{}", stderr(&o));
    let summary = csv_rows(&out.join("summary.csv"));
    assert!(summary.iter().all(|r| r[2] == "2"));
}

#[test]
fn all_images_failing_has_its_own_code() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    for i in 0..3 {
        std::fs::write(data.join("gt").join(format!("img_{i}.pfm")), b"junk").unwrap();
    }
    let o = dpsconf(&["eval", "--dataset", s(&data), "--d-max", "32", "--out", s(&dir.path().join("out"))]);
    assert_eq!(code(&o), 5);
}

#[test]
fn ablation_rows_follow_the_axis() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let out = dir.path().join("out");
    for (axis, values, counts) in [("n", "2,3,5,7", [2, 3, 5, 7]), ("k", "1,2,4,8", [3, 3, 3, 3])] {
        let o = dpsconf(&[
            "ablate", "--dataset", s(&data), "--d-max", "32", "--out", s(&out), "--axis", axis, "--values", values,
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let rows = csv_rows(&out.join(format!("ablation_{axis}.csv")));
        assert_eq!(rows.len(), 4);
        for (r, (want, v)) in rows.iter().zip(counts.iter().zip(values.split(','))) {
            assert_eq!(r[0], axis.to_uppercase());
            assert_eq!(r[1], v);
            let shifts: Vec<i32> = r[2].split(';').map(|x| x.parse().unwrap()).collect();
            assert_eq!(shifts.len(), *want);
            assert!(shifts.contains(&0));
            assert_eq!(r[3], "3");
        }
    }
}

#[test]
fn ablation_without_values_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    small_dataset(&data);
    let o = dpsconf(&["ablate", "--dataset", s(&data), "--axis", "n", "--values", ""]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn saved_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 80, 48, 4);
    let cfg_path = dir.path().join("run.toml");
    let first = dir.path().join("first");
    let o = dpsconf(&[
        "confidence",
        "--left", s(&dir.path().join("left.png")),
        "--right", s(&dir.path().join("right.png")),
        "--d-max", "16",
        "--shifts=-1,0,1",
        "--sigma", "3.5",
        "--out", s(&first),
        "--save-config", s(&cfg_path),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cfg = RunConfig::load(&cfg_path).unwrap();
    assert_eq!(cfg.sweep_spec().unwrap().shifts(), &[-1, 0, 1]);
    assert_eq!(cfg.confidence.sigma, Some(3.5));
    assert_eq!(RunConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap(), cfg);

    let second = dir.path().join("second");
    let o = dpsconf(&["confidence", "--config", s(&cfg_path), "--out", s(&second)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["confidence.pfm", "unreliability.pfm", "disp_0.pfm"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn confidence_outputs_do_not_depend_on_parallelism() {
    let dir = tempfile::tempdir().unwrap();
    planted_pair(dir.path(), 96, 64, 5);
    let mut outputs = Vec::new();
    for p in ["1", "0", "3"] {
        let out = dir.path().join(format!("out_{p}"));
        let o = dpsconf(&[
            "confidence",
            "--left", s(&dir.path().join("left.png")),
            "--right", s(&dir.path().join("right.png")),
            "--d-max", "16",
            "--parallel", p,
            "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        outputs.push(std::fs::read(out.join("confidence.pfm")).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(code(&dpsconf(&["--help"])), 0);
    assert_eq!(code(&dpsconf(&["frobnicate"])), 2);
}
