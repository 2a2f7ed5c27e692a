//! Monte-Carlo experiment runner: scene -> datasets -> training ->
//! metrics, repeated over independent trials with derived seeds, with
//! deterministic CSV/JSON artifacts.

use std::path::Path;
use std::rc::Rc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use cvnn_core::models::{build, Family};
use cvnn_core::nn::{metrics, ConfusionMatrix, Metrics, Network};
use cvnn_core::polsar::{encode_field, PolsarField, UNLABELED};
use cvnn_core::sampling::{
    balance_patches, balanced_pixel_sampling, extract_centered_patches, occurrence_csv,
    sample_pixels, sliding_window, spatial_split, weighted_loss_weights, ChannelField, PatchSet,
};
use cvnn_core::{Error, Result};

use crate::config::{Balancing, ExperimentConfig, SplitMode};
use crate::train::{evaluate, train, EpochStats, TrainConfig};

/// Outcome of one trial; wall time goes to `timings.log`, not into the
/// deterministic JSON/CSV artifacts.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial: usize,
    pub classes: Vec<String>,
    /// Row-major classes x classes counts, rows = ground truth.
    pub confusion: Vec<u64>,
    pub overall_accuracy: f64,
    pub average_accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    pub epochs_run: usize,
    #[serde(skip)]
    pub wall_secs: f64,
}

impl TrialResult {
    /// Rebuilds the metrics from the stored confusion matrix.
    pub fn recompute_metrics(&self) -> Result<Metrics> {
        let k = self.classes.len();
        let cm = ConfusionMatrix::from_counts(k, self.confusion.clone())?;
        metrics(&cm)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single trial.
    pub sd: f64,
    /// 1.96 * sd / sqrt(n).
    pub half_width_95: f64,
    pub n: usize,
}

pub fn mean_sd(values: &[f64]) -> MeanSd {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n.max(1) as f64;
    let sd = if n > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    MeanSd {
        mean,
        sd,
        half_width_95: 1.96 * sd / (n.max(1) as f64).sqrt(),
        n,
    }
}

/// Per-metric mean and interval over the trials. The interval is a 95%
/// normal approximation; with a single trial the half-width degenerates
/// to 0 and is flagged.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateResult {
    pub trials: usize,
    pub interval: &'static str,
    pub degenerate_interval: bool,
    pub class_names: Vec<String>,
    pub overall_accuracy: MeanSd,
    pub average_accuracy: MeanSd,
    pub per_class_accuracy: Vec<MeanSd>,
}

pub const INTERVAL_NOTE: &str = "mean +- 1.96*sd/sqrt(n) (95% normal approximation)";

pub fn aggregate(trials: &[TrialResult]) -> Result<AggregateResult> {
    if trials.is_empty() {
        return Err(Error::Contract("no trials to aggregate".into()));
    }
    let class_names = trials[0].classes.clone();
    let k = class_names.len();
    let oa: Vec<f64> = trials.iter().map(|t| t.overall_accuracy).collect();
    let aa: Vec<f64> = trials.iter().map(|t| t.average_accuracy).collect();
    let per_class = (0..k)
        .map(|c| {
            let vals: Vec<f64> = trials
                .iter()
                .filter_map(|t| t.per_class_accuracy[c])
                .collect();
            mean_sd(&vals)
        })
        .collect();
    Ok(AggregateResult {
        trials: trials.len(),
        interval: INTERVAL_NOTE,
        degenerate_interval: trials.len() == 1,
        class_names,
        overall_accuracy: mean_sd(&oa),
        average_accuracy: mean_sd(&aa),
        per_class_accuracy: per_class,
    })
}

/// Test-set evaluation plan: FCNN patches are materialized, center-label
/// test pixels are streamed in chunks to bound memory.
enum EvalPlan {
    Patches(PatchSet),
    CenterStream {
        field: Rc<ChannelField>,
        pixels: Vec<usize>,
        patch: usize,
    },
}

struct Datasets {
    train: PatchSet,
    val: PatchSet,
    test: EvalPlan,
    class_weights: Option<Vec<f64>>,
    /// (file name, csv body) side reports such as balance tables.
    reports: Vec<(String, String)>,
}

fn encode(cfg: &ExperimentConfig, field: &PolsarField) -> Result<ChannelField> {
    let data = encode_field(field, cfg.representation, cfg.domain, cfg.boxcar)?;
    ChannelField::new(data, field.labels().to_vec(), field.classes())
}

/// Balanced per-class center sampling for train and val together
/// (disjoint by construction), honoring the per-class availability cap.
fn balanced_center_split(
    field: &PolsarField,
    rate_train: f64,
    rate_val: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let counts = field.class_counts();
    let labeled: usize = counts.iter().sum();
    let k = counts.len();
    let min_count = *counts.iter().min().unwrap_or(&0);
    let want_train = (rate_train * labeled as f64 / k as f64).floor() as usize;
    let want_val = (rate_val * labeled as f64 / k as f64).floor() as usize;
    let share_train = rate_train / (rate_train + rate_val);
    let m_train = want_train.min(((min_count as f64) * share_train).floor() as usize);
    let m_val = want_val.min(min_count.saturating_sub(m_train));
    let per_class = balanced_pixel_sampling(field, m_train + m_val, rng)?;
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class_set in per_class {
        train.extend_from_slice(&class_set[..m_train]);
        val.extend_from_slice(&class_set[m_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// Balanced per-class center sampling within one field at a single rate.
fn balanced_center_pixels(
    field: &PolsarField,
    rate: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let counts = field.class_counts();
    let labeled: usize = counts.iter().sum();
    let k = counts.len();
    let min_count = *counts.iter().min().unwrap_or(&0);
    let m = ((rate * labeled as f64 / k as f64).floor() as usize).min(min_count);
    let per_class = balanced_pixel_sampling(field, m, rng)?;
    let mut out: Vec<usize> = per_class.into_iter().flatten().collect();
    out.sort_unstable();
    Ok(out)
}

fn center_class_counts(field: &PolsarField, pixels: &[usize]) -> Vec<u64> {
    let mut counts = vec![0u64; field.classes()];
    for &p in pixels {
        let l = field.labels()[p];
        if l != UNLABELED {
            counts[l as usize] += 1;
        }
    }
    counts
}

fn counts_csv(names: &[String], before: &[u64], after: &[u64]) -> String {
    let mut s = String::from("Class,Train pixels (proportional),Train pixels (used)\n");
    for (i, n) in names.iter().enumerate() {
        s.push_str(&format!("{n},{},{}\n", before[i], after[i]));
    }
    s
}

/// Center-label pipeline (MLP / CNN).
fn center_datasets(
    cfg: &ExperimentConfig,
    scene: &PolsarField,
    rng: &mut ChaCha8Rng,
) -> Result<Datasets> {
    let patch = cfg.patch_size();
    let mut reports = Vec::new();
    let (train_field, train_px, val_field, val_px, test_field, test_px) = match cfg.split {
        SplitMode::RandomSampling => {
            let field = Rc::new(scene.clone());
            let (train_px, val_px, test_px) = match cfg.balancing {
                Balancing::Dataset => {
                    let (train_px, val_px) = balanced_center_split(
                        scene,
                        cfg.sampling.train_rate,
                        cfg.sampling.val_rate,
                        rng,
                    )?;
                    // Proportional reference for the occurrence report.
                    let mut prop_rng = rng.clone();
                    let (prop, _, _) = sample_pixels(
                        scene,
                        (cfg.sampling.train_rate, cfg.sampling.val_rate),
                        &mut prop_rng,
                    )?;
                    reports.push((
                        "train_occurrences.csv".into(),
                        counts_csv(
                            scene.class_names(),
                            &center_class_counts(scene, &prop),
                            &center_class_counts(scene, &train_px),
                        ),
                    ));
                    let mut used = vec![false; scene.labels().len()];
                    for &p in train_px.iter().chain(&val_px) {
                        used[p] = true;
                    }
                    let test_px: Vec<usize> = scene
                        .labels()
                        .iter()
                        .enumerate()
                        .filter(|&(i, &l)| l != UNLABELED && !used[i])
                        .map(|(i, _)| i)
                        .collect();
                    (train_px, val_px, test_px)
                }
                _ => sample_pixels(
                    scene,
                    (cfg.sampling.train_rate, cfg.sampling.val_rate),
                    rng,
                )?,
            };
            (
                field.clone(),
                train_px,
                field.clone(),
                val_px,
                field,
                test_px,
            )
        }
        SplitMode::SpatialSplit => {
            let (train_f, val_f, test_f) = spatial_split(scene, (0.70, 0.15, 0.15))?;
            let (train_px, val_px) = match cfg.balancing {
                Balancing::Dataset => {
                    let tr = balanced_center_pixels(&train_f, cfg.sampling.train_rate, rng)?;
                    let va = balanced_center_pixels(&val_f, cfg.sampling.val_rate, rng)?;
                    (tr, va)
                }
                _ => {
                    let (tr, _, _) =
                        sample_pixels(&train_f, (cfg.sampling.train_rate, 0.0), rng)?;
                    let (va, _, _) = sample_pixels(&val_f, (cfg.sampling.val_rate, 0.0), rng)?;
                    (tr, va)
                }
            };
            let test_px: Vec<usize> = test_f
                .labels()
                .iter()
                .enumerate()
                .filter(|(_, &l)| l != UNLABELED)
                .map(|(i, _)| i)
                .collect();
            (
                Rc::new(train_f),
                train_px,
                Rc::new(val_f),
                val_px,
                Rc::new(test_f),
                test_px,
            )
        }
    };

    let train_counts = center_class_counts(&train_field, &train_px);
    let class_weights = match cfg.balancing {
        Balancing::WeightedLoss => Some(weighted_loss_weights(&train_counts)?),
        _ => None,
    };

    let train_ch = Rc::new(encode(cfg, &train_field)?);
    let val_ch = if Rc::ptr_eq(&val_field, &train_field) {
        train_ch.clone()
    } else {
        Rc::new(encode(cfg, &val_field)?)
    };
    let test_ch = if Rc::ptr_eq(&test_field, &train_field) {
        train_ch.clone()
    } else {
        Rc::new(encode(cfg, &test_field)?)
    };

    let train = extract_centered_patches(&train_ch, &train_px, patch)?;
    let val = extract_centered_patches(&val_ch, &val_px, patch)?;
    Ok(Datasets {
        train,
        val,
        test: EvalPlan::CenterStream {
            field: test_ch,
            pixels: test_px,
            patch,
        },
        class_weights,
        reports,
    })
}

/// Dense-label pipeline (FCNN).
fn dense_datasets(
    cfg: &ExperimentConfig,
    scene: &PolsarField,
    rng: &mut ChaCha8Rng,
    balance_seed: u64,
) -> Result<Datasets> {
    let patch = cfg.patch_size();
    let stride = cfg.patch_stride();
    let mut reports = Vec::new();
    let (mut train, val, test) = match cfg.split {
        SplitMode::RandomSampling => {
            let ch = encode(cfg, scene)?;
            let all = sliding_window(&ch, patch, stride)?;
            let n = all.patches.len();
            if n < 3 {
                return Err(Error::Contract(format!(
                    "only {n} patches of size {patch} at stride {stride}; \
                     reduce the patch size"
                )));
            }
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            let n_train = ((cfg.sampling.train_rate * n as f64).floor() as usize).max(1);
            let n_val = ((cfg.sampling.val_rate * n as f64).floor() as usize).max(1);
            let pick = |ids: &[usize]| PatchSet {
                size: all.size,
                classes: all.classes,
                patches: ids.iter().map(|&i| all.patches[i].clone()).collect(),
            };
            let train = pick(&order[..n_train]);
            let val = pick(&order[n_train..n_train + n_val]);
            let test = pick(&order[n_train + n_val..]);
            (train, val, test)
        }
        SplitMode::SpatialSplit => {
            let (train_f, val_f, test_f) = spatial_split(scene, (0.70, 0.15, 0.15))?;
            for (f, name) in [(&train_f, "train"), (&val_f, "val"), (&test_f, "test")] {
                if f.width() < patch || f.height() < patch {
                    return Err(Error::Contract(format!(
                        "{name} strip is {}x{}, smaller than the {patch} patch; \
                         override patch.size for this scene",
                        f.height(),
                        f.width()
                    )));
                }
            }
            let train = sliding_window(&encode(cfg, &train_f)?, patch, stride)?;
            let val = sliding_window(&encode(cfg, &val_f)?, patch, stride)?;
            let test = sliding_window(&encode(cfg, &test_f)?, patch, stride)?;
            (train, val, test)
        }
    };

    if cfg.balancing == Balancing::Dataset {
        let (balanced, report) = balance_patches(train, balance_seed);
        train = balanced;
        reports.push((
            "balance_before.csv".into(),
            occurrence_csv(&report.before, scene.class_names()),
        ));
        reports.push((
            "balance_after.csv".into(),
            occurrence_csv(&report.after, scene.class_names()),
        ));
    }

    let class_weights = match cfg.balancing {
        Balancing::WeightedLoss => Some(weighted_loss_weights(&train.pixel_totals())?),
        _ => None,
    };

    Ok(Datasets {
        train,
        val,
        test: EvalPlan::Patches(test),
        class_weights,
        reports,
    })
}

fn build_datasets(
    cfg: &ExperimentConfig,
    scene: &PolsarField,
    rng: &mut ChaCha8Rng,
    balance_seed: u64,
) -> Result<Datasets> {
    match cfg.family {
        Family::Mlp | Family::Cnn => center_datasets(cfg, scene, rng),
        Family::Fcnn => dense_datasets(cfg, scene, rng, balance_seed),
    }
}

/// Streams center-label evaluation in chunks to bound memory.
fn evaluate_stream(
    net: &mut Network,
    field: &ChannelField,
    pixels: &[usize],
    patch: usize,
) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::new(field.classes);
    for chunk in pixels.chunks(512) {
        let set = extract_centered_patches(field, chunk, patch)?;
        let part = evaluate(net, &set)?;
        cm.merge(&part);
    }
    Ok(cm)
}

pub struct TrialArtifacts {
    pub result: TrialResult,
    pub history: Vec<EpochStats>,
    pub reports: Vec<(String, String)>,
    /// The trained network, ready to checkpoint.
    pub network: Network,
}

/// Runs one trial with seeds derived from (master seed, trial index).
pub fn run_trial(cfg: &ExperimentConfig, scene: &PolsarField, trial: usize) -> Result<TrialArtifacts> {
    let start = Instant::now();
    let mut seed_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    seed_rng.set_stream(trial as u64 + 1);
    let sampling_seed: u64 = seed_rng.random();
    let init_seed: u64 = seed_rng.random();
    let train_seed: u64 = seed_rng.random();
    let balance_seed: u64 = seed_rng.random();

    let mut sampling_rng = ChaCha8Rng::seed_from_u64(sampling_seed);
    let data = build_datasets(cfg, scene, &mut sampling_rng, balance_seed)?;

    let spec = cfg.model_spec(scene.classes())?;
    let mut init_rng = ChaCha8Rng::seed_from_u64(init_seed);
    let mut net = build(&spec, &mut init_rng)?;

    let tc = TrainConfig {
        learning_rate: spec.learning_rate,
        epochs: spec.epochs,
        batch_size: cfg.optimizer.batch_size,
        patience: cfg.optimizer.patience,
        class_weights: data.class_weights.clone(),
        seed: train_seed,
    };
    let history = train(&mut net, &data.train, &data.val, &tc)?;

    let cm = match &data.test {
        EvalPlan::Patches(set) => evaluate(&mut net, set)?,
        EvalPlan::CenterStream {
            field,
            pixels,
            patch,
        } => evaluate_stream(&mut net, field, pixels, *patch)?,
    };
    let m = metrics(&cm)?;
    let result = TrialResult {
        trial,
        classes: scene.class_names().to_vec(),
        confusion: cm.counts().to_vec(),
        overall_accuracy: m.overall_accuracy,
        average_accuracy: m.average_accuracy,
        per_class_accuracy: m.per_class,
        epochs_run: history.len(),
        wall_secs: start.elapsed().as_secs_f64(),
    };
    Ok(TrialArtifacts {
        result,
        history,
        reports: data.reports,
        network: net,
    })
}

/// Runs all trials and writes the artifact tree under `out`:
/// `config.json`, `trials/`, `trials.csv`, `aggregate.json`,
/// `per_class_accuracy.csv` and `timings.log` (wall times only).
/// Partial results stay on disk if a later trial fails.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<AggregateResult> {
    cfg.validate()?;
    let scene = cfg.load_scene()?;
    std::fs::create_dir_all(out.join("trials"))?;
    std::fs::write(
        out.join("config.json"),
        serde_json::to_string_pretty(cfg).map_err(|e| Error::Format(e.to_string()))? + "\n",
    )?;
    let mut timings = String::new();
    let mut results = Vec::new();
    for trial in 0..cfg.trials {
        let artifacts = run_trial(cfg, &scene, trial)?;
        let tdir = out.join("trials");
        std::fs::write(
            tdir.join(format!("trial_{trial:03}.json")),
            serde_json::to_string_pretty(&artifacts.result)
                .map_err(|e| Error::Format(e.to_string()))?
                + "\n",
        )?;
        let mut hist = String::from("epoch,train_loss,val_overall_accuracy\n");
        for e in &artifacts.history {
            hist.push_str(&format!(
                "{},{},{}\n",
                e.epoch, e.train_loss, e.val_overall_accuracy
            ));
        }
        std::fs::write(tdir.join(format!("history_{trial:03}.csv")), hist)?;
        for (name, body) in &artifacts.reports {
            std::fs::write(tdir.join(format!("trial_{trial:03}_{name}")), body)?;
        }
        cvnn_core::nn::save_checkpoint(
            &artifacts.network,
            &tdir.join(format!("model_{trial:03}.ckpt")),
        )?;
        timings.push_str(&format!(
            "trial {trial}: {:.3}s\n",
            artifacts.result.wall_secs
        ));
        results.push(artifacts.result);
    }

    let agg = aggregate(&results)?;
    std::fs::write(
        out.join("aggregate.json"),
        serde_json::to_string_pretty(&agg).map_err(|e| Error::Format(e.to_string()))? + "\n",
    )?;

    let mut trials_csv =
        String::from("trial,overall_accuracy,average_accuracy,epochs_run\n");
    for r in &results {
        trials_csv.push_str(&format!(
            "{},{},{},{}\n",
            r.trial, r.overall_accuracy, r.average_accuracy, r.epochs_run
        ));
    }
    std::fs::write(out.join("trials.csv"), trials_csv)?;

    let mut bars = String::from("class,mean_accuracy,sd,half_width_95,trials\n");
    for (name, ms) in agg.class_names.iter().zip(&agg.per_class_accuracy) {
        bars.push_str(&format!(
            "{name},{},{},{},{}\n",
            ms.mean, ms.sd, ms.half_width_95, ms.n
        ));
    }
    std::fs::write(out.join("per_class_accuracy.csv"), bars)?;
    std::fs::write(out.join("timings.log"), timings)?;
    Ok(agg)
}
