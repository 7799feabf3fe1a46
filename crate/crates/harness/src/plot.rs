//! Static SVG figures: loss curves with a bound envelope, and log-log
//! growth fits from a sweep.

use std::path::Path;

use plotters::prelude::*;

use crate::error::{HarnessError, Result};
use crate::experiment::TraceRecord;
use crate::sweep::{SlopeFit, SweepPoint};

fn plot_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Plot(e.to_string())
}

const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
];

/// Cumulative loss of the learner, and optionally an upper envelope
/// `L_t(f) + bound_t(f)` for one comparator.
pub fn plot_losses(trace: &TraceRecord, envelope: Option<&[f64]>, path: &Path) -> Result<()> {
    let cumulative = trace.cumulative_losses();
    let t = cumulative.len().max(1);
    let top = cumulative
        .iter()
        .chain(envelope.unwrap_or(&[]))
        .fold(1e-12f64, |m, v| m.max(*v))
        * 1.05;
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("{:?}: cumulative loss (T = {}, n = {})", trace.mode, trace.horizon, trace.rank), ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..t as f64, 0f64..top)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("step t").y_desc("loss").draw().map_err(plot_err)?;
    chart
        .draw_series(LineSeries::new(cumulative.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)), &PALETTE[0]))
        .map_err(plot_err)?
        .label("learner")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], PALETTE[0]));
    if let Some(env) = envelope {
        chart
            .draw_series(LineSeries::new(env.iter().enumerate().map(|(i, v)| ((i + 1) as f64, *v)), &PALETTE[3]))
            .map_err(plot_err)?
            .label("zero comparator + bound")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], PALETTE[3]));
    }
    chart
        .configure_series_labels()
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}

/// Mean regret against `T` on log-log axes with the fitted lines.
pub fn plot_growth(points: &[SweepPoint], fits: &[SlopeFit], path: &Path) -> Result<()> {
    let positive: Vec<&SweepPoint> = points.iter().filter(|p| p.mean_regret > 0.0).collect();
    if positive.is_empty() {
        return Err(HarnessError::Plot("no positive regrets to plot".into()));
    }
    let (t_min, t_max) = positive.iter().fold((f64::MAX, 0f64), |(a, b), p| (a.min(p.horizon as f64), b.max(p.horizon as f64)));
    let (r_min, r_max) = positive.iter().fold((f64::MAX, 0f64), |(a, b), p| (a.min(p.mean_regret), b.max(p.mean_regret)));
    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption("regret growth", ("sans-serif", 20))
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d((t_min * 0.9..t_max * 1.1).log_scale(), (r_min * 0.5..r_max * 2.0).log_scale())
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc("T").y_desc("mean regret").draw().map_err(plot_err)?;
    for (i, fit) in fits.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<(f64, f64)> = positive.iter().filter(|p| p.p == fit.p).map(|p| (p.horizon as f64, p.mean_regret)).collect();
        chart
            .draw_series(pts.iter().map(|&(x, y)| Circle::new((x, y), 4, color.filled())))
            .map_err(plot_err)?
            .label(format!("p = {}: slope {:.3} (theory {:.3})", fit.p, fit.slope, fit.theory))
            .legend(move |(x, y)| Circle::new((x + 10, y), 4, color.filled()));
        let line = [t_min, t_max].map(|t| (t, (fit.intercept + fit.slope * t.ln()).exp()));
        chart.draw_series(LineSeries::new(line, &color)).map_err(plot_err)?;
    }
    chart
        .configure_series_labels()
        .position(SeriesLabelPosition::UpperLeft)
        .border_style(BLACK)
        .background_style(WHITE.mix(0.8))
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)
}
