use serde::{Deserialize, Serialize};

use super::report::{HybridSummary, PcaSummary};
use super::{
    read_csv, BaselineSummary, DetectionRow, ErrorRow, GpArtifact, IdOodBoxes, LabelSummary, PointRow,
    RunManifest, RunReport, RunTimings, SetLabels, Stage, StageContext, SurrogateKind,
};
use crate::dataset::{kfold_split, lhs_sample, load_csv, save_csv, Dataset, Fold, NormalizationStats};
use crate::detector::{
    baseline_detect, baseline_tune_out_of_fold, calibrate_sigma_t, classification_report,
    detector_cv_tune, neighbor_sigma, out_of_fold_sigmas, pr_curve, report_from_predictions,
    train_detector, DetectorModel, PrPoint, ReferenceSet,
};
use crate::fnn::{grid_search_cv, train, FnnModel, TrainConfig};
use crate::gp::{gp_fit, GpModel};
use crate::hybrid::{evaluate_hybrid, evaluate_routes, nrmse, HybridTiming};
use crate::labeling::{bootstrap_ci, label_ood};
use crate::pca::pca2;
use crate::persist::read_json;
use crate::sensitivity::{profile, SensitivityProfile};
use crate::{par_map, stats, Error, Result, Surrogate};

const CONFIG_JSON: &str = "doe/config.json";
const TRAIN_CSV: &str = "doe/train.csv";
const TEST_CSV: &str = "doe/test.csv";
const NORM_JSON: &str = "train/normalization.json";
const FOLDS_JSON: &str = "train/folds.json";
const SURROGATE_JSON: &str = "train/surrogate.json";
const FOLD_MODELS_JSON: &str = "train/fold_models.json";
const CV_TABLE_JSON: &str = "train/cv_table.json";
const VALIDATION_CSV: &str = "train/validation.csv";
const PROFILE_VAL_CSV: &str = "profile/validation.csv";
const PROFILE_TEST_CSV: &str = "profile/test.csv";
const LABELS_JSON: &str = "label/labels.json";
const LABEL_VAL_CSV: &str = "label/validation.csv";
const LABEL_TEST_CSV: &str = "label/test.csv";
const DETECTOR_JSON: &str = "detector/model.json";
const DETECTOR_TUNING_JSON: &str = "detector/tuning.json";
const DETECTOR_SCORES_CSV: &str = "detector/test_scores.csv";
const PR_CURVE_CSV: &str = "detector/pr_curve.csv";
const BASELINE_JSON: &str = "detector/baseline.json";
const BASELINE_TEST_CSV: &str = "detector/baseline_test.csv";
const EVALUATION_JSON: &str = "detector/evaluation.json";
const HYBRID_JSON: &str = "hybrid/report.json";
const TRACE_CSV: &str = "hybrid/trace.csv";
const HYBRID_TIMING_JSON: &str = "hybrid/timing.json";
const REPORT_JSON: &str = "report/report.json";
const TIMINGS_JSON: &str = "report/timings.json";
const PCA_CSV: &str = "report/pca.csv";

pub(super) fn run(ctx: &mut StageContext) -> Result<()> {
    match ctx.stage {
        Stage::Doe => doe(ctx),
        Stage::Train => train_stage(ctx),
        Stage::Profile => profile_stage(ctx),
        Stage::Label => label_stage(ctx),
        Stage::Detector => detector_stage(ctx),
        Stage::Hybrid => hybrid_stage(ctx),
        Stage::Report => report_stage(ctx),
    }
}

fn doe(ctx: &mut StageContext) -> Result<()> {
    let c = ctx.config;
    let oracle = c.oracle_spec();
    let full = c.full_space()?;
    let train_points = lhs_sample(&c.train_space()?, c.data.n_train, c.data.train_seed)?;
    let test_points = lhs_sample(&full, c.data.n_test, c.data.test_seed)?;
    for (rel, points) in [(TRAIN_CSV, train_points), (TEST_CSV, test_points)] {
        let data = Dataset::from_oracle(full.clone(), &oracle, points)?;
        save_csv(&data, ctx.output(rel)?)?;
        ctx.record(rel, true)?;
    }
    ctx.write_json(CONFIG_JSON, c, true)
}

fn load_set(ctx: &StageContext, rel: &str) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let data = load_csv(ctx.input(rel, Stage::Doe)?, Some(&ctx.config.full_space()?))?;
    Ok((data.inputs(), data.targets()))
}

/// Standardized training inputs, raw targets, normalization and folds.
struct TrainSet {
    z: Vec<Vec<f64>>,
    y: Vec<f64>,
    norm: NormalizationStats,
    folds: Vec<Fold>,
}

fn load_train_set(ctx: &StageContext) -> Result<TrainSet> {
    let (x, y) = load_set(ctx, TRAIN_CSV)?;
    let norm: NormalizationStats = read_json(ctx.input(NORM_JSON, Stage::Train)?)?;
    let folds: Vec<Fold> = read_json(ctx.input(FOLDS_JSON, Stage::Train)?)?;
    Ok(TrainSet {
        z: norm.apply_all(&x)?,
        y,
        norm,
        folds,
    })
}

fn subset<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Index of the fold holding each point in its validation part.
fn fold_owner(folds: &[Fold], n: usize) -> Vec<usize> {
    let mut owner = vec![0; n];
    for (j, f) in folds.iter().enumerate() {
        for &i in &f.validation {
            owner[i] = j;
        }
    }
    owner
}

fn gp_models(kernel_art: &GpArtifact, set: &TrainSet) -> Result<(GpModel, Vec<GpModel>)> {
    let k = set.folds.len();
    let mut models = par_map(k + 1, |j| {
        if j == k {
            GpModel::condition(kernel_art.kernel, set.z.clone(), &set.y)
        } else {
            let f = &set.folds[j];
            GpModel::condition(kernel_art.kernel, subset(&set.z, &f.train), &subset(&set.y, &f.train))
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let full = models.pop().expect("k + 1 models");
    Ok((full, models))
}

fn train_stage(ctx: &mut StageContext) -> Result<()> {
    let c = ctx.config;
    let (x, y) = load_set(ctx, TRAIN_CSV)?;
    let norm = NormalizationStats::fit(&x, &y)?;
    let z = norm.apply_all(&x)?;
    let folds = kfold_split(z.len(), c.surrogate.validation_folds, c.surrogate.seed)?;
    ctx.write_json(NORM_JSON, &norm, true)?;
    ctx.write_json(FOLDS_JSON, &folds, true)?;
    let k = folds.len();
    let mut predictions = vec![0.0; z.len()];
    match c.surrogate.kind {
        SurrogateKind::Fnn => {
            let fnn = c.fnn.as_ref().expect("validated config");
            let (arch, config) = match &fnn.grid {
                Some(g) => {
                    let archs = g
                        .hidden
                        .iter()
                        .map(|h| c.fnn_architecture(*h))
                        .collect::<Result<Vec<_>>>()?;
                    let configs = c.fnn_grid_configs(fnn, g);
                    let search = grid_search_cv(&z, &y, &archs, &configs, g.folds, g.seed)?;
                    ctx.write_json(CV_TABLE_JSON, &search, true)?;
                    (search.best.arch, search.best.config)
                }
                None => (c.fnn_architecture(fnn.hidden)?, fnn.train_config()),
            };
            let mut models = par_map(k + 1, |j| {
                if j == k {
                    train(&z, &y, &arch, &config)
                } else {
                    let f = &folds[j];
                    let fold_config = TrainConfig {
                        seed: stats::derive_seed(config.seed, j as u64 + 1),
                        ..config
                    };
                    train(&subset(&z, &f.train), &subset(&y, &f.train), &arch, &fold_config)
                }
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let full = models.pop().expect("k + 1 models");
            for (f, m) in folds.iter().zip(&models) {
                for &i in &f.validation {
                    predictions[i] = m.predict(&z[i])?;
                }
            }
            ctx.write_json(SURROGATE_JSON, &full, true)?;
            ctx.write_json(FOLD_MODELS_JSON, &models, true)?;
        }
        SurrogateKind::Gp => {
            let fit = gp_fit(&z, &y, &c.gp_fit_config().expect("validated config"))?;
            let art = GpArtifact {
                kernel: *fit.model.kernel(),
                log_marginal_likelihood: fit.model.log_marginal_likelihood(),
                restarts: fit.restarts,
                best_restart: fit.best_restart,
            };
            let set = TrainSet { z, y: y.clone(), norm, folds };
            let (_, models) = gp_models(&art, &set)?;
            for (f, m) in set.folds.iter().zip(&models) {
                for &i in &f.validation {
                    predictions[i] = m.predict(&set.z[i])?;
                }
            }
            ctx.write_json(SURROGATE_JSON, &art, true)?;
        }
    }
    let rows: Vec<PointRow> = predictions
        .iter()
        .zip(&y)
        .enumerate()
        .map(|(i, (p, t))| PointRow::new(i, *p, *t))
        .collect();
    ctx.write_csv(VALIDATION_CSV, &rows)
}

fn set_profile(row: &mut PointRow, p: &SensitivityProfile) {
    row.sa = Some(p.sa);
    row.sv = Some(p.sv);
    row.ja = Some(p.ja);
    row.jv = Some(p.jv);
}

fn profile_stage(ctx: &mut StageContext) -> Result<()> {
    let c = ctx.config;
    let set = load_train_set(ctx)?;
    let (tx, ty) = load_set(ctx, TEST_CSV)?;
    let tz = set.norm.apply_all(&tx)?;
    let mut val: Vec<PointRow> = read_csv(&ctx.input(VALIDATION_CSV, Stage::Train)?)?;
    if val.len() != set.z.len() {
        return Err(Error::invalid("validation rows do not match the training set"));
    }
    let owner = fold_owner(&set.folds, set.z.len());
    let spec = c.perturbation();
    let mut test: Vec<PointRow> = Vec::with_capacity(tz.len());
    match c.surrogate.kind {
        SurrogateKind::Fnn => {
            let model: FnnModel = read_json(ctx.input(SURROGATE_JSON, Stage::Train)?)?;
            let fold_models: Vec<FnnModel> = read_json(ctx.input(FOLD_MODELS_JSON, Stage::Train)?)?;
            let profiles = par_map(val.len(), |i| profile(&fold_models[owner[i]], &set.z[i], &spec.for_point(i)))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            for (row, p) in val.iter_mut().zip(&profiles) {
                set_profile(row, p);
            }
            let scored = par_map(tz.len(), |i| -> Result<(f64, SensitivityProfile)> {
                Ok((model.predict(&tz[i])?, profile(&model, &tz[i], &spec.for_point(i))?))
            });
            for (i, r) in scored.into_iter().enumerate() {
                let (pred, p) = r?;
                let mut row = PointRow::new(i, pred, ty[i]);
                set_profile(&mut row, &p);
                test.push(row);
            }
        }
        SurrogateKind::Gp => {
            let art: GpArtifact = read_json(ctx.input(SURROGATE_JSON, Stage::Train)?)?;
            let (full, fold_models) = gp_models(&art, &set)?;
            let dists = par_map(val.len(), |i| fold_models[owner[i]].predict_dist(&set.z[i]))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            for (row, d) in val.iter_mut().zip(&dists) {
                row.gp_std = Some(d.std);
            }
            let dists = par_map(tz.len(), |i| full.predict_dist(&tz[i]))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            for (i, d) in dists.iter().enumerate() {
                let mut row = PointRow::new(i, d.mean, ty[i]);
                row.gp_std = Some(d.std);
                test.push(row);
            }
        }
    }
    ctx.write_csv(PROFILE_VAL_CSV, &val)?;
    ctx.write_csv(PROFILE_TEST_CSV, &test)
}

fn label_rows(rows: &mut [PointRow], level: f64, resamples: usize, seed: u64) -> Result<SetLabels> {
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let ci = bootstrap_ci(&errors, level, resamples, seed)?;
    let labels = label_ood(&errors, &ci)?;
    for (r, o) in rows.iter_mut().zip(&labels.is_ood) {
        r.is_ood = Some(*o);
    }
    Ok(SetLabels {
        ci,
        n: rows.len(),
        n_ood: labels.n_ood,
        ratio: labels.ratio,
    })
}

fn label_stage(ctx: &mut StageContext) -> Result<()> {
    let l = ctx.config.labeling;
    let mut val: Vec<PointRow> = read_csv(&ctx.input(PROFILE_VAL_CSV, Stage::Profile)?)?;
    let mut test: Vec<PointRow> = read_csv(&ctx.input(PROFILE_TEST_CSV, Stage::Profile)?)?;
    // each set gets its own margin, the test one from a derived stream
    let summary = LabelSummary {
        validation: label_rows(&mut val, l.level, l.resamples, l.seed)?,
        test: label_rows(&mut test, l.level, l.resamples, stats::derive_seed(l.seed, 1))?,
    };
    ctx.write_json(LABELS_JSON, &summary, true)?;
    ctx.write_csv(LABEL_VAL_CSV, &val)?;
    ctx.write_csv(LABEL_TEST_CSV, &test)
}

fn labels_of(rows: &[PointRow]) -> Result<Vec<bool>> {
    rows.iter()
        .map(|r| r.is_ood.ok_or_else(|| Error::invalid(format!("row {} has no OOD label", r.id))))
        .collect()
}

fn profiles_of(rows: &[PointRow]) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .map(|r| {
            r.profile()
                .map(|p| p.to_vec())
                .ok_or_else(|| Error::invalid(format!("row {} has no sensitivity profile", r.id)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ScoreRow {
    id: usize,
    risk: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SigmaRow {
    id: usize,
    sigma: f64,
    flagged: bool,
}

fn detector_stage(ctx: &mut StageContext) -> Result<()> {
    let c = ctx.config;
    let val: Vec<PointRow> = read_csv(&ctx.input(LABEL_VAL_CSV, Stage::Label)?)?;
    let test: Vec<PointRow> = read_csv(&ctx.input(LABEL_TEST_CSV, Stage::Label)?)?;
    let val_labels = labels_of(&val)?;
    let test_labels = labels_of(&test)?;
    let threshold = c.hybrid.risk_threshold;
    let mut rows = Vec::new();

    if c.surrogate.kind == SurrogateKind::Fnn {
        let vf = profiles_of(&val)?;
        let tf = profiles_of(&test)?;
        let d = &c.detector;
        let tuning = detector_cv_tune(&vf, &val_labels, &c.oversample_grid(), &c.gbdt_grid(), d.cv_folds, d.seed)?;
        ctx.write_json(DETECTOR_TUNING_JSON, &tuning, true)?;
        let model = train_detector(&vf, &val_labels, &tuning.oversample, &tuning.gbdt)?;
        ctx.write_json(DETECTOR_JSON, &model, true)?;
        let scores = model.predict_proba_all(&tf)?;
        let score_rows: Vec<ScoreRow> = scores
            .iter()
            .enumerate()
            .map(|(id, &risk)| ScoreRow { id, risk })
            .collect();
        ctx.write_csv(DETECTOR_SCORES_CSV, &score_rows)?;
        let curve = pr_curve(&scores, &test_labels).ok();
        if let Some(curve) = &curve {
            ctx.write_csv(PR_CURVE_CSV, &curve.points)?;
        }
        rows.push(DetectionRow {
            method: "sensitivity_profile".into(),
            aupr: curve.map(|c| c.aupr),
            report: classification_report(&scores, &test_labels, threshold)?,
        });
    }

    let set = load_train_set(ctx)?;
    let predictions: Vec<f64> = val.iter().map(|r| r.prediction).collect();
    let tuning = baseline_tune_out_of_fold(&set.z, &set.y, &predictions, &set.folds, &c.baseline.neighbors)?;
    let n = tuning.n_neighbors;
    let val_sigmas = out_of_fold_sigmas(&set.z, &set.y, &predictions, &set.folds, n)?;
    let sigma_t = calibrate_sigma_t(&val_sigmas)?;
    let (tx, _) = load_set(ctx, TEST_CSV)?;
    let tz = set.norm.apply_all(&tx)?;
    let reference = ReferenceSet::new(set.z, set.y)?;
    let test_sigmas = par_map(tz.len(), |i| neighbor_sigma(&tz[i], test[i].prediction, &reference, n))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let flags: Vec<bool> = test_sigmas.iter().map(|s| baseline_detect(*s, sigma_t)).collect();
    let report = report_from_predictions(&flags, &test_labels, sigma_t)?;
    let sigma_rows: Vec<SigmaRow> = test_sigmas
        .iter()
        .zip(&flags)
        .enumerate()
        .map(|(id, (&sigma, &flagged))| SigmaRow { id, sigma, flagged })
        .collect();
    ctx.write_csv(BASELINE_TEST_CSV, &sigma_rows)?;
    let flagged_val = val_sigmas.iter().filter(|s| baseline_detect(**s, sigma_t)).count();
    ctx.write_json(
        BASELINE_JSON,
        &BaselineSummary {
            tuning,
            sigma_t,
            validation_flag_ratio: flagged_val as f64 / val_sigmas.len() as f64,
            test: report.clone(),
        },
        true,
    )?;
    rows.push(DetectionRow {
        method: "neighbor_sigma".into(),
        aupr: pr_curve(&test_sigmas, &test_labels).ok().map(|c| c.aupr),
        report,
    });
    ctx.write_json(EVALUATION_JSON, &rows, true)
}

fn hybrid_stage(ctx: &mut StageContext) -> Result<()> {
    let c = ctx.config;
    let test: Vec<PointRow> = read_csv(&ctx.input(LABEL_TEST_CSV, Stage::Label)?)?;
    let is_ood = labels_of(&test)?;
    let (tx, ty) = load_set(ctx, TEST_CSV)?;
    let set = load_train_set(ctx)?;
    let y_min = ty.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = ty.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let oracle = c.oracle_spec();
    let router = c.router();
    let (mut report, timing) = match c.surrogate.kind {
        SurrogateKind::Fnn => {
            let model: FnnModel = read_json(ctx.input(SURROGATE_JSON, Stage::Train)?)?;
            let detector: DetectorModel = read_json(ctx.input(DETECTOR_JSON, Stage::Detector)?)?;
            evaluate_hybrid(
                &tx,
                &ty,
                &is_ood,
                &set.norm,
                &model,
                &detector,
                |x: &[f64]| oracle.eval(x),
                oracle.cost_seconds,
                &router,
                (y_min, y_max),
            )?
        }
        SurrogateKind::Gp => {
            let art: GpArtifact = read_json(ctx.input(SURROGATE_JSON, Stage::Train)?)?;
            let baseline: BaselineSummary = read_json(ctx.input(BASELINE_JSON, Stage::Detector)?)?;
            let model = GpModel::condition(art.kernel, set.z.clone(), &set.y)?;
            let reference = ReferenceSet::new(set.z.clone(), set.y.clone())?;
            let n = baseline.tuning.n_neighbors;
            evaluate_routes(
                &tx,
                &ty,
                &is_ood,
                &set.norm,
                &model,
                |_, z: &[f64], prediction| {
                    let sigma = neighbor_sigma(z, prediction, &reference, n)?;
                    Ok(if baseline_detect(sigma, baseline.sigma_t) { 1.0 } else { 0.0 })
                },
                |x: &[f64]| oracle.eval(x),
                oracle.cost_seconds,
                &router,
                (y_min, y_max),
            )?
        }
    };
    let trace = std::mem::take(&mut report.trace);
    let summary = HybridSummary {
        risk_threshold: report.risk_threshold,
        n_surrogate: report.n_surrogate,
        n_oracle: report.n_oracle,
        nrmse_pure: report.nrmse_pure,
        nrmse_hybrid: report.nrmse_hybrid,
        decr_err: report.decr_err,
        confusion: report.confusion,
    };
    ctx.write_json(HYBRID_JSON, &summary, true)?;
    ctx.write_csv(TRACE_CSV, &trace)?;
    ctx.write_json(HYBRID_TIMING_JSON, &timing, false)
}

fn error_row(rows: &[PointRow], labels: &SetLabels) -> Result<ErrorRow> {
    let preds: Vec<f64> = rows.iter().map(|r| r.prediction).collect();
    let targets: Vec<f64> = rows.iter().map(|r| r.target).collect();
    let y_min = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let errors: Vec<f64> = rows.iter().map(|r| r.error).collect();
    Ok(ErrorRow {
        n: rows.len(),
        nrmse: nrmse(&preds, &targets, y_min, y_max)?,
        mean_abs_error: stats::mean(&errors),
        ci: labels.ci,
        n_ood: labels.n_ood,
        pct_ood: 100.0 * labels.ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PcaRow {
    id: usize,
    pc1: f64,
    pc2: f64,
    is_ood: bool,
}

fn report_stage(ctx: &mut StageContext) -> Result<()> {
    let c = ctx.config;
    let labels: LabelSummary = read_json(ctx.input(LABELS_JSON, Stage::Label)?)?;
    let val: Vec<PointRow> = read_csv(&ctx.input(LABEL_VAL_CSV, Stage::Label)?)?;
    let test: Vec<PointRow> = read_csv(&ctx.input(LABEL_TEST_CSV, Stage::Label)?)?;
    let detection: Vec<DetectionRow> = read_json(ctx.input(EVALUATION_JSON, Stage::Detector)?)?;
    let hybrid: HybridSummary = read_json(ctx.input(HYBRID_JSON, Stage::Hybrid)?)?;
    let timing: HybridTiming = read_json(ctx.input(HYBRID_TIMING_JSON, Stage::Hybrid)?)?;
    let is_ood = labels_of(&test)?;

    let mut report = RunReport {
        surrogate: c.surrogate.kind,
        oracle: c.oracle.kind,
        validation: error_row(&val, &labels.validation)?,
        test: error_row(&test, &labels.test)?,
        detection,
        hybrid,
        profile_boxes: None,
        pca: None,
        gp_mean_boxes: None,
        gp_std_boxes: None,
        pr_curve: None,
    };
    match c.surrogate.kind {
        SurrogateKind::Fnn => {
            let features = profiles_of(&test)?;
            let boxes = SensitivityProfile::FEATURES
                .iter()
                .enumerate()
                .map(|(j, name)| {
                    let col: Vec<f64> = features.iter().map(|f| f[j]).collect();
                    (name.to_string(), IdOodBoxes::split(&col, &is_ood))
                })
                .collect();
            report.profile_boxes = Some(boxes);
            let pca = pca2(&features)?;
            let pca_rows: Vec<PcaRow> = pca
                .coords
                .iter()
                .zip(&is_ood)
                .enumerate()
                .map(|(id, (xy, &o))| PcaRow {
                    id,
                    pc1: xy[0],
                    pc2: xy[1],
                    is_ood: o,
                })
                .collect();
            ctx.write_csv(PCA_CSV, &pca_rows)?;
            report.pca = Some(PcaSummary {
                explained_variance_ratio: pca.explained_variance_ratio,
                loadings: pca.loadings,
            });
            let pr_path = ctx.dir.join(PR_CURVE_CSV);
            if pr_path.is_file() {
                report.pr_curve = Some(read_csv::<PrPoint>(&pr_path)?);
            }
        }
        SurrogateKind::Gp => {
            let means: Vec<f64> = test.iter().map(|r| r.prediction).collect();
            let stds: Vec<f64> = test.iter().map(|r| r.gp_std.unwrap_or(f64::NAN)).collect();
            report.gp_mean_boxes = Some(IdOodBoxes::split(&means, &is_ood));
            report.gp_std_boxes = Some(IdOodBoxes::split(&stds, &is_ood));
        }
    }
    ctx.write_json(REPORT_JSON, &report, true)?;
    let manifest = RunManifest::read(ctx.dir)?;
    let timings = RunTimings {
        stages: manifest
            .stages
            .iter()
            .filter(|s| s.stage < Stage::Report)
            .map(|s| (s.stage, s.seconds))
            .collect(),
        hybrid: timing,
    };
    ctx.write_json(TIMINGS_JSON, &timings, false)
}
