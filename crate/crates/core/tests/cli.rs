use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
seed = 3

[data]
shapes = [{ kind = "sphere", points = 256 }]
noise = [{ kind = "gaussian", scale = 0.01 }, { kind = "gaussian", scale = 0.02 }]
variants = 2

[train]
epochs = 2
steps_per_epoch = 1
batch = 2
lr = 1e-3
patch_size = 64
checkpoint_every = 1

[model]
k = 8
channels = 16

[eval]
noise_scales = [0.02]
holdout_shape = "torus"

[theory]
landing_samples = 20000
moment_samples = 20000
moment_instances = 2
taylor_samples = 20000
projection_points = 50
"#;

fn simpc(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_simpc"))
        .arg("--config")
        .arg(dir.join("run.toml"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .output()
        .unwrap()
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("run.toml"), SMALL).unwrap();
    dir
}

#[test]
fn generate_writes_variants_and_manifest() {
    let dir = setup();
    let out = simpc(dir.path(), &["generate"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let data = dir.path().join("data");
    let (manifest, entries) = simpc::pipeline::read_dataset(&data).unwrap();
    assert_eq!(manifest.entries.len(), 2);
    let noisy: usize = manifest.entries.iter().map(|e| e.variants.len()).sum();
    assert_eq!(noisy, 4);
    for e in &manifest.entries {
        assert_ne!(e.variant_seeds[0], e.variant_seeds[1]);
    }
    assert!(data.join("sphere_mesh.off").exists());
    assert_eq!(entries[0].clean.len(), 256);

    let before: Vec<Vec<u8>> = manifest.entries[0]
        .variants
        .iter()
        .map(|v| std::fs::read(data.join(v)).unwrap())
        .collect();
    assert!(simpc(dir.path(), &["generate"]).status.success());
    let after: Vec<Vec<u8>> = manifest.entries[0]
        .variants
        .iter()
        .map(|v| std::fs::read(data.join(v)).unwrap())
        .collect();
    assert_eq!(before, after);
}

#[test]
fn train_denoise_eval_round_trip() {
    let dir = setup();
    assert!(simpc(dir.path(), &["generate"]).status.success());
    let out = simpc(dir.path(), &["train"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ckpt = dir.path().join("checkpoints/model.ckpt");
    let (model, meta) = simpc::pipeline::load_model(&ckpt).unwrap();
    assert_eq!(meta.epoch, 2);
    assert_eq!(model.hyper.k, 8);
    assert!(dir.path().join("checkpoints/epoch_0001.ckpt").exists());
    let log = std::fs::read_to_string(dir.path().join("reports/train_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 3);

    let data = dir.path().join("data");
    let manifest = simpc::pipeline::read_manifest(&data).unwrap();
    let input = data.join(&manifest.entries[1].variants[0]);
    let output = dir.path().join("den.ply");
    let out = simpc(
        dir.path(),
        &[
            "denoise",
            "--input",
            input.to_str().unwrap(),
            "--output",
            output.to_str().unwrap(),
            "--iterations",
            "2",
            "--intermediates",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let den = simpc::io::read_cloud(&output).unwrap();
    assert_eq!(den.len(), 256);
    let it1 = simpc::io::read_cloud(&dir.path().join("den_iter1.ply")).unwrap();
    assert_ne!(it1.points, den.points);

    let out = simpc(
        dir.path(),
        &[
            "eval",
            "--denoised",
            output.to_str().unwrap(),
            "--clean",
            data.join("sphere_clean.ply").to_str().unwrap(),
            "--mesh",
            data.join("sphere_mesh.off").to_str().unwrap(),
            "--noisy",
            input.to_str().unwrap(),
        ],
    );
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("noisy,") && lines[2].starts_with("denoised,"));

    let out = simpc(dir.path(), &["eval"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("reports/eval.csv")).unwrap();
    // header + (sphere, torus) × noisy/denoised
    assert_eq!(report.lines().count(), 5);
}

#[test]
fn theory_report_is_written() {
    let dir = setup();
    let out = simpc(dir.path(), &["theory"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("reports/theory.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["all_pass"], true);
}

#[test]
fn errors_exit_with_reason_codes() {
    let dir = setup();
    std::fs::write(dir.path().join("bad.toml"), "[train]\nepoch = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_simpc"))
        .args(["--config", dir.path().join("bad.toml").to_str().unwrap(), "theory"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[config]"));

    let out = simpc(dir.path(), &["train"]);
    assert_eq!(out.status.code(), Some(3), "missing dataset is an IO error");

    assert!(simpc(dir.path(), &["generate"]).status.success());
    assert!(simpc(dir.path(), &["train"]).status.success());
    let tiny = dir.path().join("tiny.xyz");
    std::fs::write(&tiny, "0 0 0\n1 0 0\n0 1 0\n").unwrap();
    let out = simpc(dir.path(), &["denoise", "--input", tiny.to_str().unwrap(), "--output", "x.ply"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error[parameter]"));
}

#[test]
fn shipped_configs_parse() {
    let cfg = simpc::pipeline::RunConfig::from_toml(include_str!("../../../configs/full.toml")).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.model.k, 32);
    assert_eq!(cfg.train.batch, 16);
}
