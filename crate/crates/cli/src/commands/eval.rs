//! `roadgrid eval` — score fused grids against the road map.
//!
//! Re-runs the grid pipeline over the selected frames and, after each fusion,
//! rasterizes the vector map at the true pose and scores the observed cells:
//! the logarithmic road score, the mean absolute evidence error, and the
//! centered cross-correlation. Correlation is undefined while the observed
//! patch is single-class; those frames record NaN and stay out of the means.

use std::fmt::Write as _;

use roadgrid_core::metrics::{
    cross_correlation, ground_truth_grid, map_score, overall_error, write_metrics_csv,
    MetricsRow, ObservationMask,
};

use crate::commands::{drive_pipeline, pipeline_setup, PipelineArgs};
use crate::CliError;

pub type EvalArgs = PipelineArgs;

pub fn run(args: &EvalArgs) -> Result<(), CliError> {
    let setup = pipeline_setup(args)?;

    let mut rows: Vec<MetricsRow> = Vec::with_capacity(setup.frames.len());
    drive_pipeline(&setup, |k, state, _out| {
        let gt = ground_truth_grid(&setup.world.map, &setup.poses[k], &setup.grid_cfg)?;
        let mask = ObservationMask::from_grid(&state.road);
        let correlation = match cross_correlation(&state.road, &gt, &mask) {
            Ok(v) => v,
            Err(roadgrid_core::Error::Degenerate(_)) => f64::NAN,
            Err(e) => return Err(e.into()),
        };
        rows.push(MetricsRow {
            frame_index: k,
            map_score: map_score(&state.road, &gt, &mask)?,
            overall_error: overall_error(&state.road, &gt, &mask)?,
            cross_correlation: correlation,
        });
        Ok(())
    })?;
    write_metrics_csv(&setup.ds.metrics_path(), &rows)?;

    let mean = |take: &dyn Fn(&MetricsRow) -> f64| {
        let vals: Vec<f64> = rows.iter().map(take).filter(|v| v.is_finite()).collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    };
    let last = rows.last().expect("selection is never empty");
    let mut summary = String::new();
    let _ = writeln!(summary, "frames {}", rows.len());
    let _ = writeln!(summary, "mass_source {}", setup.source.name());
    let _ = writeln!(summary, "mean_map_score {:.6}", mean(&|r| r.map_score));
    let _ = writeln!(summary, "final_map_score {:.6}", last.map_score);
    let _ = writeln!(summary, "mean_overall_error {:.6}", mean(&|r| r.overall_error));
    let _ = writeln!(summary, "final_overall_error {:.6}", last.overall_error);
    let _ = writeln!(
        summary,
        "mean_cross_correlation {:.6}",
        mean(&|r| r.cross_correlation)
    );
    let _ = writeln!(summary, "final_cross_correlation {:.6}", last.cross_correlation);
    std::fs::write(setup.ds.eval_summary_path(), &summary)?;

    print!("{summary}");
    println!(
        "metrics in {}, summary in {}",
        setup.ds.metrics_path().display(),
        setup.ds.eval_summary_path().display()
    );
    Ok(())
}
