//! `roadgrid train` — fit the point classifier on labelled scans.

use std::fmt::Write as _;
use std::path::PathBuf;

use roadgrid_core::glr::{train_glr, TrainConfig};
use roadgrid_core::metrics::f1_score;

use crate::commands::labelled_points;
use crate::config::{self};
use crate::dataset::Dataset;
use crate::CliError;

#[derive(clap::Args, Debug)]
pub struct TrainArgs {
    /// Config file (TOML); its values override flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Dataset directory holding labelled scans.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Seed for weight initialization.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &TrainArgs) -> Result<(), CliError> {
    let file = config::load(args.config.as_deref())?;
    let out =
        config::require(config::pick_opt(file.out.clone(), args.out.clone()), "--out")?;
    let ds = Dataset::new(out);

    let defaults = TrainConfig::default();
    let cfg = TrainConfig {
        hidden_dim: file.hidden_dim.unwrap_or(defaults.hidden_dim),
        epochs: file.epochs.unwrap_or(defaults.epochs),
        learning_rate: file.learning_rate.unwrap_or(defaults.learning_rate),
        l2: file.l2.unwrap_or(defaults.l2),
        patience: file.patience.unwrap_or(defaults.patience),
        seed: config::pick(file.seed, args.seed, defaults.seed),
    };
    let stride = file.train_stride.unwrap_or(9).max(1);

    let frames = ds.labelled_frames()?;
    if frames.is_empty() {
        return Err(CliError::Runtime(format!(
            "no label files under {} (run `roadgrid label` first)",
            ds.labels_dir().display()
        )));
    }
    let (inputs, targets) = labelled_points(&ds, &frames, stride)?;

    // Every fifth example is held out for validation; the split is
    // deterministic so reruns report the same number.
    let mut train_x = Vec::new();
    let mut train_y = Vec::new();
    let mut val_x = Vec::new();
    let mut val_y = Vec::new();
    for (i, (x, y)) in inputs.into_iter().zip(targets).enumerate() {
        if i % 5 == 4 {
            val_x.push(x);
            val_y.push(y);
        } else {
            train_x.push(x);
            train_y.push(y);
        }
    }

    let outcome = train_glr(&train_x, &train_y, &cfg)?;
    let classifier = outcome.classifier;

    let predicted: Vec<bool> = val_x
        .iter()
        .map(|x| classifier.predict_class(x))
        .collect::<Result<_, _>>()?;
    let actual: Vec<bool> = val_y.iter().map(|&y| y > 0.5).collect();
    let val_f1 = match f1_score(&predicted, &actual) {
        Ok(v) => Some(v),
        Err(roadgrid_core::Error::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };

    classifier.write_params(&ds.classifier_path())?;

    let mut report = String::new();
    let _ = writeln!(report, "labelled_frames {}", frames.len());
    let _ = writeln!(report, "train_points {}", train_x.len());
    let _ = writeln!(report, "val_points {}", val_x.len());
    match val_f1 {
        Some(v) => {
            let _ = writeln!(report, "val_f1 {v:.6}");
        }
        None => {
            let _ = writeln!(report, "val_f1 undefined (no positives in validation)");
        }
    }
    let _ = writeln!(report, "epochs_run {}", outcome.loss_history.len());
    let _ = writeln!(
        report,
        "final_loss {:.6}",
        outcome.loss_history.last().copied().unwrap_or(f64::NAN)
    );
    std::fs::write(ds.train_report_path(), &report)?;

    match val_f1 {
        Some(v) => println!(
            "trained on {} points ({} frames); validation F1 {v:.4}; params in {}",
            train_x.len(),
            frames.len(),
            ds.classifier_path().display()
        ),
        None => println!(
            "trained on {} points ({} frames); validation F1 undefined; params in {}",
            train_x.len(),
            frames.len(),
            ds.classifier_path().display()
        ),
    }
    Ok(())
}
