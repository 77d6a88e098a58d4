use std::path::Path;

use surrogate_ood::pipeline::{
    run_all, run_stage, PipelineConfig, RunLock, RunManifest, RunReport, Stage, SurrogateKind,
};
use surrogate_ood::Error;

const SMALL: &str = r#"
[design]
dims = 3
lo = 0.0
hi = 1.0

[oracle]
kind = "regime_switch_ttc_like"
seed = 4
cost_seconds = 10678.0

[data]
n_train = 150
n_test = 80
train_seed = 1
test_seed = 2

[data.bias]
dims = 1
lo = 0.0
hi = 0.7

[surrogate]
kind = "fnn"
validation_folds = 3
seed = 5

[fnn]
hidden = [32, 32, 32]
learning_rate = 0.005
weight_decay = 1e-4
batch_size = 32
epochs = 50
holdout_fraction = 0.1
seed = 6

[gp]
restarts = 2
max_iters = 20
fit_noise = true
seed = 7

[sensitivity]
delta = 0.05
n_perturb = 16
seed = 8

[labeling]
level = 0.9
resamples = 200
seed = 9

[detector]
methods = ["smote"]
k = [3]
ratios = [1.0]
learning_rates = [0.1]
n_estimators = [20]
max_depth = 2
min_samples_leaf = 2
cv_folds = 2
seed = 10

[baseline]
neighbors = [4, 8]

[hybrid]
risk_threshold = 0.5
"#;

fn small(kind: SurrogateKind) -> PipelineConfig {
    let mut c = PipelineConfig::from_toml_str(SMALL).unwrap();
    c.surrogate.kind = kind;
    c
}

fn report(dir: &Path) -> RunReport {
    serde_json::from_slice(&std::fs::read(dir.join("report/report.json")).unwrap()).unwrap()
}

#[test]
fn unknown_key_is_rejected() {
    let text = SMALL.replace("[hybrid]\n", "[hybrid]\nrisk_treshold = 0.4\n");
    let err = PipelineConfig::from_toml_str(&text).unwrap_err();
    assert!(matches!(err, Error::Config(ref m) if m.contains("risk_treshold")), "{err}");
}

#[test]
fn missing_seed_is_rejected() {
    let text = SMALL.replace("train_seed = 1\n", "");
    assert!(matches!(PipelineConfig::from_toml_str(&text), Err(Error::Config(_))));
}

#[test]
fn fnn_run_report_and_missing_prerequisites() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let config = small(SurrogateKind::Fnn);

    match run_stage(&config, dir, Stage::Train) {
        Err(Error::MissingStage { prerequisite, .. }) => assert_eq!(prerequisite, "doe"),
        other => panic!("{other:?}"),
    }

    let manifest = run_all(&config, dir).unwrap();
    for a in manifest.artifacts() {
        let (sha, _) = surrogate_ood::pipeline::file_sha256(&dir.join(&a.path)).unwrap();
        assert_eq!(sha, a.sha256, "{}", a.path);
    }

    let r = report(dir);
    let pca = r.pca.expect("fnn report has a projection");
    let [a, b] = pca.explained_variance_ratio;
    assert!(a >= b && b >= 0.0 && a + b <= 1.0 + 1e-12);
    assert_eq!(r.profile_boxes.unwrap().len(), 4);
    assert!(r.gp_std_boxes.is_none());
    let pca_rows = std::fs::read_to_string(dir.join("report/pca.csv")).unwrap();
    assert_eq!(pca_rows.lines().count(), 1 + 80);

    // every artifact consumed later is a hard prerequisite
    for (rel, stage, producer) in [
        ("train/surrogate.json", Stage::Profile, "train"),
        ("profile/test.csv", Stage::Label, "profile"),
        ("label/validation.csv", Stage::Detector, "label"),
        ("detector/model.json", Stage::Hybrid, "detector"),
        ("hybrid/report.json", Stage::Report, "hybrid"),
    ] {
        let path = dir.join(rel);
        let saved = std::fs::read(&path).unwrap();
        std::fs::remove_file(&path).unwrap();
        match run_stage(&config, dir, stage) {
            Err(Error::MissingStage { missing, prerequisite, .. }) => {
                assert_eq!(missing, rel);
                assert_eq!(prerequisite, producer);
            }
            other => panic!("{rel}: {other:?}"),
        }
        std::fs::write(&path, saved).unwrap();
    }

    // rerunning a stage reproduces its numeric artifacts
    let before = RunManifest::read(dir).unwrap();
    run_stage(&config, dir, Stage::Profile).unwrap();
    let after = RunManifest::read(dir).unwrap();
    let digest = |m: &RunManifest| m.stage(Stage::Profile).unwrap().artifacts.clone();
    assert_eq!(digest(&before), digest(&after));
    assert!(after.stage(Stage::Label).is_none());
}

#[test]
fn gp_run_reports_mean_and_std_boxes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    run_all(&small(SurrogateKind::Gp), dir).unwrap();
    let r = report(dir);
    let std = r.gp_std_boxes.expect("gp report has std boxes");
    let mean = r.gp_mean_boxes.expect("gp report has mean boxes");
    for b in [std.id, mean.id].into_iter().flatten() {
        assert!(b.min <= b.q1 && b.q1 <= b.median && b.median <= b.q3 && b.q3 <= b.max);
    }
    assert!(std.id.unwrap().min >= 0.0);
    assert!(r.pca.is_none() && r.profile_boxes.is_none());
    assert_eq!(r.detection.len(), 1);
}

#[test]
fn changed_config_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let config = small(SurrogateKind::Fnn);
    run_stage(&config, tmp.path(), Stage::Doe).unwrap();
    let mut other = config.clone();
    other.hybrid.risk_threshold = 0.3;
    assert!(matches!(run_stage(&other, tmp.path(), Stage::Train), Err(Error::Config(_))));
}

#[test]
fn locked_directory_is_refused() {
    let tmp = tempfile::tempdir().unwrap();
    let _held = RunLock::acquire(tmp.path()).unwrap();
    let err = run_stage(&small(SurrogateKind::Fnn), tmp.path(), Stage::Doe).unwrap_err();
    assert!(matches!(err, Error::Locked(_)));
}

#[test]
fn cli_reports_stage_tagged_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    std::fs::write(&cfg, SMALL).unwrap();
    let out = tmp.path().join("run");
    let bin = env!("CARGO_BIN_EXE_surrogate-ood");
    let run = |cmd: &str| {
        std::process::Command::new(bin)
            .args([cmd, "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .env("SURROGATE_OOD_THREADS", "1")
            .output()
            .unwrap()
    };
    let failed = run("profile");
    assert!(!failed.status.success());
    let stderr = String::from_utf8_lossy(&failed.stderr);
    assert!(stderr.contains("error [profile]") && stderr.contains("run `doe` first"), "{stderr}");
    assert!(run("doe").status.success());
    assert!(out.join("doe/train.csv").is_file());
}
