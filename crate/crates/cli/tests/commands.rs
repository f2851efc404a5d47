//! End-to-end checks of the command pipeline: exit codes, output layout,
//! determinism, and checkpoint round trips.

use std::path::{Path, PathBuf};
use std::process::Command;

use sfr_cli::commands::{cmd_eval, cmd_gradcheck, cmd_masks, cmd_split, cmd_synth, cmd_train};
use sfr_cli::config::Config;
use sfr_cli::error::CliError;
use sfr_core::dataset::{assemble_sample, SampleRecipe};
use sfr_core::model::read_checkpoint;
use sfr_core::normalize::Normalizer;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sfr"))
}

fn exit_code(out: &std::process::Output) -> i32 {
    out.status.code().expect("process was signalled")
}

/// Config text for a small self-contained experiment rooted at `root`.
fn small_config(root: &Path) -> String {
    format!(
        "data={root}/data\n\
         split={root}/split/split.txt\n\
         models={root}/train\n\
         height=10\n\
         width=12\n\
         frames=24\n\
         field=cyclical\n\
         cycle_len=6\n\
         cycle_mode=wake\n\
         data_seed=5\n\
         geometry=circular_x\n\
         split_scheme=partitioned\n\
         chunk_len=4\n\
         train_ratio=0.5\n\
         val_ratio=0.25\n\
         test_ratio=0.25\n\
         split_seed=2\n\
         counts=5\n\
         placement_seeds=1,2\n\
         recipe=voronoi,dt_sensor\n\
         masked_loss=true\n\
         normalize=true\n\
         layers=2\n\
         features=3\n\
         kernel=3\n\
         net_seed=1\n\
         learning_rate=0.001\n\
         batch_size=4\n\
         max_epochs=2\n\
         train_seed=1\n\
         experiment=small\n\
         unseen_seeds=7\n",
        root = root.display()
    )
}

fn write_config(root: &Path, text: &str) -> PathBuf {
    let path = root.join("exp.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn load(text: &str) -> Config {
    Config::from_text(text).unwrap()
}

/// Run synth + split in-process so later stages have data to work on.
fn prepare_data(root: &Path, cfg: &Config) {
    cmd_synth(cfg, &root.join("data"), false).unwrap();
    cmd_split(cfg, &root.join("split"), false).unwrap();
}

#[test]
fn config_problems_exit_with_code_2() {
    let out = bin()
        .args(["synth", "--config", "/nonexistent.cfg", "--out", "/tmp/never"])
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);

    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "height=ten\nwidth=4\nframes=5\nfield=cyclical\ncycle_len=2\n");
    let out = bin()
        .args(["synth", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn data_problems_exit_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!("data={}/missing\nsplit_scheme=extrapolation\n", tmp.path().display()),
    );
    let out = bin()
        .args(["split", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(tmp.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3);

    // A non-empty output directory is refused without --force.
    let occupied = tmp.path().join("occupied");
    std::fs::create_dir(&occupied).unwrap();
    std::fs::write(occupied.join("keep"), "x").unwrap();
    let cfg = write_config(tmp.path(), &small_config(tmp.path()));
    let out = bin()
        .args(["synth", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&occupied)
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 3);
    assert!(occupied.join("keep").exists());
}

#[test]
fn numerical_failures_exit_with_code_4() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(tmp.path()).replace("learning_rate=0.001", "learning_rate=1e200");
    let cfg_path = write_config(tmp.path(), &text);
    let cfg = load(&text);
    prepare_data(tmp.path(), &cfg);

    let out = bin()
        .args(["train", "--config"])
        .arg(&cfg_path)
        .arg("--out")
        .arg(tmp.path().join("train"))
        .output()
        .unwrap();
    assert_eq!(exit_code(&out), 4);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("diverged"), "stderr was: {stderr}");
}

#[test]
fn successful_pipeline_exits_0_at_every_stage() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(tmp.path());
    let cfg_path = write_config(tmp.path(), &text);
    for (command, out_dir) in [
        ("synth", "data"),
        ("split", "split"),
        ("train", "train"),
        ("eval", "eval"),
    ] {
        let out = bin()
            .args([command, "--config"])
            .arg(&cfg_path)
            .arg("--out")
            .arg(tmp.path().join(out_dir))
            .output()
            .unwrap();
        assert_eq!(
            exit_code(&out),
            0,
            "{command} failed",
        );
    }
    let out = bin().arg("gradcheck").output().unwrap();
    assert_eq!(exit_code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("gradient check"), "stdout was: {stdout}");
    assert!(stdout.contains("detected"), "stdout was: {stdout}");
}

#[test]
fn masks_write_one_file_per_frame_case_and_channel() {
    let tmp = tempfile::tempdir().unwrap();
    let base = small_config(tmp.path());
    let cfg = load(&base);
    cmd_synth(&cfg, &tmp.path().join("data"), false).unwrap();

    let masks_cfg = load(&format!(
        "data={}/data\nrecipe=voronoi,sparse_location\ncounts=3\nplacement_seeds=1,2\nmask_frames=0,2\n",
        tmp.path().display()
    ));
    let out = tmp.path().join("masks");
    cmd_masks(&masks_cfg, &out, false).unwrap();

    let mut names: Vec<String> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    // 2 frames x 2 cases x 2 channels.
    assert_eq!(names.len(), 8);
    assert_eq!(names[0], "f000000_c3_s1_sparse_location.sfr");
    assert!(names.contains(&"f000002_c3_s2_voronoi.sfr".to_string()));

    // A recipe carrying both location encodings is rejected up front.
    let bad = load(&format!(
        "data={}/data\nrecipe=sparse_location,dt_sensor\ncounts=3\nplacement_seeds=1\n",
        tmp.path().display()
    ));
    match cmd_masks(&bad, &tmp.path().join("masks2"), false) {
        Err(CliError::Config(_)) => {}
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn trained_checkpoints_reload_to_identical_predictions() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(tmp.path());
    let cfg = load(&text);
    prepare_data(tmp.path(), &cfg);
    cmd_train(&cfg, &tmp.path().join("train"), false).unwrap();

    let ckpt = tmp.path().join("train").join("c5_s1.sfrnet");
    let (net_a, meta) = read_checkpoint(&ckpt).unwrap();
    let (net_b, _) = read_checkpoint(&ckpt).unwrap();
    assert_eq!(meta.get("recipe").unwrap(), "voronoi,dt_sensor");
    assert_eq!(meta.get("sensor_count").unwrap(), "5");
    assert_eq!(meta.get("placement_seed").unwrap(), "1");

    let scales = tmp.path().join("train").join(meta.get("scales").unwrap());
    let normalizer = Normalizer::load(&scales).unwrap();

    // Reassemble one test sample and predict with both loaded copies.
    let data_cfg = load(&format!("data={}/data\n", tmp.path().display()));
    let data = sfr_cli::files::load_dataset(&data_cfg).unwrap();
    let recipe = SampleRecipe::parse("voronoi,dt_sensor", true).unwrap();
    let placement = sfr_core::dataset::place_sensors(
        data.height(),
        data.width(),
        data.valid_mask(),
        5,
        1,
        &sfr_core::dataset::PlacementMode::Free,
    )
    .unwrap();
    let stack = assemble_sample(&data.frames[23], &placement, &recipe, &normalizer, None).unwrap();
    let pred_a = net_a.forward_field(&stack).unwrap();
    let pred_b = net_b.forward_field(&stack).unwrap();
    assert_eq!(pred_a.values(), pred_b.values());
    assert!(pred_a.values().iter().all(|v| v.is_finite()));

    // The loss history is a well-formed CSV with one row per epoch.
    let history = std::fs::read_to_string(tmp.path().join("train").join("history_c5_s1.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next().unwrap(), "epoch,train_loss,val_loss");
    assert_eq!(lines.count(), 2);
}

#[test]
fn eval_reports_every_cell_and_writes_maps() {
    let tmp = tempfile::tempdir().unwrap();
    let text = small_config(tmp.path());
    let cfg = load(&text);
    prepare_data(tmp.path(), &cfg);
    cmd_train(&cfg, &tmp.path().join("train"), false).unwrap();
    cmd_eval(&cfg, &tmp.path().join("eval"), false).unwrap();

    let eval = tmp.path().join("eval");
    // 2 cases x (1 seen + 1 unseen) x 2 metrics raw records.
    let records = std::fs::read_to_string(eval.join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,sensor_count,split,metric,seed,value"
    );
    assert_eq!(lines.count(), 8);

    // Aggregated: one row per (split, metric) since there is one count.
    let report = std::fs::read_to_string(eval.join("report.csv")).unwrap();
    let mut lines = report.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,sensor_count,split,metric,mean,sd,n"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r.starts_with("small,5,seen,relative_l2,")));
    assert!(rows.iter().any(|r| r.starts_with("small,5,unseen,rmse,")));

    for map in ["map_c5_s1_seen.pgm", "map_c5_s2_seen.pgm", "map_c5_s1_unseen_7.pgm"] {
        let bytes = std::fs::read(eval.join(map)).unwrap();
        assert!(bytes.starts_with(b"P5\n12 10\n255\n"), "{map} header");
    }

    // A training placement seed listed as unseen is refused.
    let clash = load(&text.replace("unseen_seeds=7", "unseen_seeds=2,7"));
    match cmd_eval(&clash, &tmp.path().join("eval2"), false) {
        Err(CliError::Config(msg)) => assert!(msg.contains("disjoint"), "{msg}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn synth_is_deterministic_and_manifest_is_complete() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = load(&small_config(tmp.path()));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    cmd_synth(&cfg, &a, false).unwrap();
    cmd_synth(&cfg, &b, false).unwrap();

    let manifest = std::fs::read_to_string(a.join("manifest.txt")).unwrap();
    for key in ["frames=24", "height=10", "width=12", "geometry=circular_x", "data_seed=5"] {
        assert!(manifest.contains(key), "manifest lacks {key}: {manifest}");
    }
    for name in ["manifest.txt", "frame_000000.sfr", "frame_000023.sfr"] {
        let left = std::fs::read(a.join(name)).unwrap();
        let right = std::fs::read(b.join(name)).unwrap();
        assert_eq!(left, right, "{name} differs between identical runs");
    }
}

#[test]
fn gradcheck_passes_and_its_negative_control_detects_corruption() {
    let summary = cmd_gradcheck(None).unwrap();
    assert!(summary.report.pass);
    assert!(summary.report.max_relative_error < summary.report.tolerance);
    assert!(summary.control_detected);
    assert!(summary.control_error > 5e-2);
}
