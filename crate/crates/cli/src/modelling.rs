use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use loadlens::learn::{
    decode_target, evaluate, fit_dnn, fit_lrm, permutation_importance, split, Dataset, DnnConfig, EvalReport,
    Evaluation, FeaturePreset, LossCurve, Model, SplitFractions,
};
use serde::{Deserialize, Serialize};

use crate::analysis::{create, read_features, write_json};
use crate::failure::{config, CmdResult, OrFail};
use crate::manifest::{beside, Manifest};
use crate::{ModelArg, PredictArgs, ReportArgs, TrainArgs};

#[derive(Debug, Serialize, Deserialize)]
struct SplitSizes {
    train: usize,
    validation: usize,
    prediction: usize,
}

/// Contents of `report.json` in a train output directory.
#[derive(Debug, Serialize, Deserialize)]
struct TrainReport {
    model: String,
    preset: String,
    features: Vec<String>,
    seed: u64,
    config: serde_json::Value,
    rows: usize,
    skipped_rows: usize,
    split: SplitSizes,
    #[serde(flatten)]
    eval: EvalReport,
}

fn parse_hidden(s: &str) -> CmdResult<Vec<usize>> {
    let widths: Vec<usize> = s
        .split(',')
        .map(|w| w.trim().parse::<usize>())
        .collect::<Result<_, _>>()
        .map_err(|_| config(format!("--hidden must be comma-separated integers, got {s:?}")))?;
    if widths.is_empty() || widths.contains(&0) {
        return Err(config("--hidden widths must be positive"));
    }
    Ok(widths)
}

pub fn train(args: &TrainArgs) -> CmdResult {
    let preset: FeaturePreset = args.preset.parse().or_fail("invalid --preset")?;
    let hidden = parse_hidden(&args.hidden)?;
    if !(args.lr > 0.0 && args.lr.is_finite()) || args.batch == 0 || args.importance_repeats == 0 {
        return Err(config("--lr, --batch and --importance-repeats must be positive"));
    }
    let rows = read_features(&args.features)?;
    let (ds, skipped) = Dataset::from_sessions(&rows, &preset.columns());
    if skipped > 0 {
        log::warn!("{skipped} sessions lack a {preset} feature and were left out");
    }
    let parts = split(&ds.classes(), SplitFractions::default(), args.seed).or_fail("cannot split rows")?;
    let (train_ds, val_ds, pred_ds) = (
        ds.subset(&parts.train),
        ds.subset(&parts.validation),
        ds.subset(&parts.prediction),
    );

    let (model, curve): (Model, Option<LossCurve>) = match args.model {
        ModelArg::Lrm => (fit_lrm(&train_ds).or_fail("linear fit failed")?, None),
        ModelArg::Dnn => {
            let cfg = DnnConfig {
                hidden: hidden.clone(),
                epochs: args.epochs,
                lr: args.lr,
                batch: args.batch,
                seed: args.seed,
            };
            let (m, c) = fit_dnn(&train_ds, &val_ds, &cfg).or_fail("network training failed")?;
            (m, Some(c))
        }
    };
    let eval = |d: &Dataset, name: &str| -> CmdResult<Evaluation> { evaluate(&model, d).or_fail(format!("{name} split")) };
    let (e_train, e_val, e_pred) = (eval(&train_ds, "train")?, eval(&val_ds, "validation")?, eval(&pred_ds, "prediction")?);

    // importance needs 10 rows; small validation splits borrow the prediction rows
    let imp_ds = if val_ds.len() >= 10 {
        val_ds.clone()
    } else {
        ds.subset(&[parts.validation.as_slice(), parts.prediction.as_slice()].concat())
    };
    let importances =
        permutation_importance(&model, &imp_ds, args.seed, args.importance_repeats).or_fail("permutation importance")?;

    std::fs::create_dir_all(&args.out).or_fail(format!("cannot create {}", args.out.display()))?;
    let model_path = args.out.join("model.json");
    let report_path = args.out.join("report.json");
    let loss_path = args.out.join("loss.csv");
    let mut outputs = vec![model_path.clone(), report_path.clone()];

    let mut w = create(&model_path)?;
    writeln!(w, "{}", model.to_json())
        .and_then(|_| w.flush())
        .or_fail(format!("cannot write {}", model_path.display()))?;
    drop(w);
    if let Some(c) = &curve {
        let mut w = create(&loss_path)?;
        c.write_csv(&mut w)
            .and_then(|_| w.flush())
            .or_fail(format!("cannot write {}", loss_path.display()))?;
        outputs.push(loss_path);
    }
    let report = TrainReport {
        model: model.kind.as_str().to_string(),
        preset: preset.name().to_string(),
        features: model.features.iter().map(|f| f.name().to_string()).collect(),
        seed: args.seed,
        config: serde_json::to_value(args).expect("args serialize"),
        rows: ds.len(),
        skipped_rows: skipped,
        split: SplitSizes {
            train: train_ds.len(),
            validation: val_ds.len(),
            prediction: pred_ds.len(),
        },
        eval: EvalReport::new(&e_train, &e_val, &e_pred, curve.as_ref(), &importances),
    };
    write_json(&report_path, &report)?;
    log::info!(
        "{} on {}: prediction accuracy {:.3}, MAE {:.3}",
        report.model,
        report.preset,
        e_pred.accuracy,
        e_pred.mae
    );
    Manifest::new("train", Some(args.seed), args)
        .inputs([args.features.as_path()])?
        .outputs(outputs.iter().map(PathBuf::as_path))?
        .write(&args.out.join("manifest.json"))
}

pub fn predict(args: &PredictArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.model).or_fail(format!("cannot read {}", args.model.display()))?;
    let model = Model::from_json(&text).or_fail(format!("invalid model {}", args.model.display()))?;
    let rows = read_features(&args.features)?;
    let (ds, skipped) = Dataset::from_sessions(&rows, &model.features);
    if skipped > 0 {
        log::warn!("{skipped} sessions lack a model feature and were not scored");
    }
    let mut w = create(&args.out)?;
    let mut write = || -> std::io::Result<()> {
        writeln!(w, "session_id,activity,prediction,predicted_activity")?;
        for (i, row) in ds.x.iter().enumerate() {
            let y = model.predict_row(row);
            writeln!(w, "{},{},{},{}", ds.ids[i], decode_target(ds.y[i]), y, decode_target(y))?;
        }
        w.flush()
    };
    write().or_fail(format!("cannot write {}", args.out.display()))?;
    drop(w);
    if !ds.is_empty() {
        let e = evaluate(&model, &ds).or_fail("evaluation failed")?;
        log::info!("accuracy against recorded activities: {:.3}", e.accuracy);
    }
    Manifest::new("predict", None, args)
        .inputs([args.model.as_path(), args.features.as_path()])?
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}

#[derive(Debug, Serialize)]
struct RunSummary {
    run: String,
    preset: String,
    model: String,
    accuracy: f64,
    mae_train: f64,
    mrd_train: f64,
    mae_val: f64,
    mrd_val: f64,
    mae_pred: f64,
    mrd_pred: f64,
}

#[derive(Debug, Serialize)]
struct PresetComparison {
    preset: String,
    lrm_accuracy: Option<f64>,
    dnn_accuracy: Option<f64>,
}

#[derive(Debug, Serialize)]
struct Comparison {
    runs: Vec<RunSummary>,
    presets: Vec<PresetComparison>,
}

fn preset_rank(name: &str) -> usize {
    FeaturePreset::ALL
        .iter()
        .position(|p| p.name() == name)
        .unwrap_or(FeaturePreset::ALL.len())
}

fn run_name(dir: &Path) -> String {
    dir.to_string_lossy().replace('\\', "/")
}

pub fn report(args: &ReportArgs) -> CmdResult {
    let mut runs = Vec::new();
    let mut inputs = Vec::new();
    for dir in &args.runs {
        let path = dir.join("report.json");
        let text = std::fs::read_to_string(&path).or_fail(format!("cannot read {}", path.display()))?;
        let r: TrainReport = serde_json::from_str(&text).or_fail(format!("invalid report {}", path.display()))?;
        runs.push(RunSummary {
            run: run_name(dir),
            preset: r.preset,
            model: r.model,
            accuracy: r.eval.accuracy,
            mae_train: r.eval.mae_train,
            mrd_train: r.eval.mrd_train,
            mae_val: r.eval.mae_val,
            mrd_val: r.eval.mrd_val,
            mae_pred: r.eval.mae_pred,
            mrd_pred: r.eval.mrd_pred,
        });
        inputs.push(path);
    }
    runs.sort_by(|a, b| {
        (preset_rank(&a.preset), &a.preset, &a.model, &a.run).cmp(&(preset_rank(&b.preset), &b.preset, &b.model, &b.run))
    });
    let mut by_preset: BTreeMap<(usize, String), PresetComparison> = BTreeMap::new();
    for r in &runs {
        let entry = by_preset
            .entry((preset_rank(&r.preset), r.preset.clone()))
            .or_insert_with(|| PresetComparison {
                preset: r.preset.clone(),
                lrm_accuracy: None,
                dnn_accuracy: None,
            });
        let slot = if r.model == "lrm" { &mut entry.lrm_accuracy } else { &mut entry.dnn_accuracy };
        if slot.is_some() {
            log::warn!("several {} runs for preset {}; keeping the first", r.model, r.preset);
        } else {
            *slot = Some(r.accuracy);
        }
    }
    let out = Comparison {
        runs,
        presets: by_preset.into_values().collect(),
    };
    write_json(&args.out, &out)?;
    Manifest::new("report", None, args)
        .inputs(inputs.iter().map(PathBuf::as_path))?
        .outputs([args.out.as_path()])?
        .write(&beside(&args.out))
}
