use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nca_core::config::RunConfig;
use nca_core::lineage::{DnaVector, LineageRecord};
use nca_core::{Boundary, Grid};

fn nca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nca")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: &str = r#"
[grid]
height = 20
width = 20

[egg]
side = 3
division = [9, 15]

[training]
hidden_size = 8
batch_size = 2
rollout_steps = 6
total_training_steps = 4
seed = 3

[[targets]]
label = "grow"
initial = { kind = "egg" }
layers = [{ kind = "sprite", name = "fish", side = 10, offset = [5, 5] }]

[lineage]
offspring = "egg"
generations = 3
growth_steps = 6
division_steps = 6

[output]
log_every = 1
"#;

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn unknown_flag_is_rejected() {
    let o = nca(&["train", "--no-such-flag", "x.toml"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("--no-such-flag"));
}

#[test]
fn missing_subcommand_is_rejected() {
    assert!(!nca(&[]).status.success());
}

#[test]
fn gradcheck_passes_on_a_small_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "gc.toml", "instances = 3\nseed = 5\n");
    let out = dir.path().join("gc");
    let o = nca(&["gradcheck", &cfg, "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("PASS"));
}

#[test]
fn missing_image_asset_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let text = TINY.replace(
        r#"{ kind = "sprite", name = "fish", side = 10, offset = [5, 5] }"#,
        r#"{ kind = "image", path = "art/nowhere.png" }"#,
    );
    let cfg = write(dir.path(), "run.toml", &text);
    let o = nca(&["train", &cfg, "--out-dir", dir.path().join("out").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nowhere.png"), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", &TINY.replace("hidden_size = 8", "hidden_size = 8\nhiden = 3"));
    let o = nca(&["train", &cfg, "--out-dir", dir.path().join("out").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("hiden"), "{}", stderr(&o));
}

#[test]
fn train_then_lineage_then_render() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", TINY);
    let run = dir.path().join("run");
    let o = nca(&["train", &cfg, "--out-dir", run.to_str().unwrap(), "--mode", "sync", "--seed", "9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["manifest.toml", "loss.csv", "checkpoint.ncaw", "renders/grow.png"] {
        assert!(run.join(f).exists(), "{f} missing");
    }
    let manifest = RunConfig::load(run.join("manifest.toml")).unwrap();
    assert_eq!(manifest.training.seed, 9);
    assert!(manifest.training.mode.is_synchronous());
    let loss = fs::read_to_string(run.join("loss.csv")).unwrap();
    assert_eq!(loss.lines().count(), 5);

    let ckpt = run.join("checkpoint.ncaw");
    let lin = dir.path().join("lineage");
    let o = nca(&["lineage", ckpt.to_str().unwrap(), &cfg, "--out-dir", lin.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(lin.join("generations.csv").exists());
    assert!(lin.join("manifest.toml").exists());

    let frames = dir.path().join("frames");
    let o = nca(&[
        "render",
        ckpt.to_str().unwrap(),
        frames.to_str().unwrap(),
        "--config",
        &cfg,
        "--steps",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_dir(&frames).unwrap().count(), 3);
}

#[test]
fn checkpoint_with_wrong_hidden_size_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "run.toml", TINY);
    let run = dir.path().join("run");
    assert!(nca(&["train", &cfg, "--out-dir", run.to_str().unwrap()]).status.success());
    let other = write(dir.path(), "wide.toml", &TINY.replace("hidden_size = 8", "hidden_size = 12"));
    let o = nca(&[
        "lineage",
        run.join("checkpoint.ncaw").to_str().unwrap(),
        &other,
        "--out-dir",
        dir.path().join("lin").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn analyze_writes_tables_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<LineageRecord> = (0..30)
        .map(|g| {
            let x = 0.01 * (0.05 * g as f32).exp();
            let mut phenotype = Grid::new(4, 4, Boundary::Torus).unwrap();
            phenotype.cell_at_mut(0)[3] = 0.5 + x;
            LineageRecord {
                generation: g,
                dna: DnaVector(vec![x; 16]),
                phenotype,
                viable: true,
            }
        })
        .collect();
    let lin = dir.path().join("lineage");
    nca_core::io::save_lineage(&records, &lin, None).unwrap();
    let out = dir.path().join("analysis");
    let o = nca(&["analyze", lin.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in [
        "dna_drift_matrix.csv",
        "dna_drift_curve.csv",
        "phenotype_drift_curve.csv",
        "correlation.csv",
        "dna_heatmap.png",
        "fit_report.txt",
        "manifest.toml",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let curve = fs::read_to_string(out.join("dna_drift_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 30);
    let report = fs::read_to_string(out.join("fit_report.txt")).unwrap();
    assert!(report.contains("better_fit"));
}

#[test]
fn sprites_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let o = nca(&["sprites", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["bacterium", "fish", "lizard"] {
        assert!(dir.path().join(format!("{name}.png")).exists());
    }
}
