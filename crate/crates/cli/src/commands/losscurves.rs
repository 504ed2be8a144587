//! `annoclean losscurves`: convergence summary and the two-panel plot,
//! L1-family losses on the left and MSE-bearing losses on the right.

use std::path::PathBuf;

use annoclean_core::train::{
    convergence_step, LossCurve, LossSpec, LossTerm, DEFAULT_CONVERGENCE_REL_EPS,
    DEFAULT_CONVERGENCE_WINDOW,
};
use annoclean_core::{Error, Result};
use clap::Args;

use crate::config::ExperimentConfig;
use crate::plot::{self, Curve, Panel};

#[derive(Args)]
pub struct LosscurvesArgs {
    /// Run directories (each containing loss.csv and config.toml).
    #[arg(required = true, num_args = 1..)]
    pub runs: Vec<PathBuf>,
    /// Output directory for summary and plot.
    #[arg(long, default_value = "losscurves")]
    pub out: PathBuf,
    /// Moving-average window for convergence detection.
    #[arg(long, default_value_t = DEFAULT_CONVERGENCE_WINDOW)]
    pub window: usize,
    /// Relative tolerance around the final window's average.
    #[arg(long, default_value_t = DEFAULT_CONVERGENCE_REL_EPS)]
    pub rel_eps: f64,
}

struct RunSummary {
    run_id: String,
    loss: LossSpec,
    scheme: String,
    step: u64,
    degenerate: bool,
    final_loss: f64,
    curve: LossCurve,
}

pub fn run(args: LosscurvesArgs) -> Result<()> {
    let mut summaries = Vec::new();
    for run_dir in &args.runs {
        let csv = run_dir.join("loss.csv");
        if !csv.is_file() {
            return Err(Error::config(format!(
                "run {} has no loss.csv",
                run_dir.display()
            )));
        }
        let curve = LossCurve::load_csv(&csv)?;
        let conv = convergence_step(&curve, args.window, args.rel_eps)?;
        let run_id = run_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| run_dir.display().to_string());
        let snapshot = ExperimentConfig::load(&run_dir.join("config.toml"))?;
        let train = snapshot
            .train
            .ok_or_else(|| Error::config(format!("{}: snapshot has no [train]", run_dir.display())))?;
        let loss: LossSpec = train.loss.parse()?;
        summaries.push(RunSummary {
            run_id,
            loss,
            scheme: train.scheme,
            step: conv.step,
            degenerate: conv.degenerate,
            final_loss: curve.entries.last().map(|&(_, l)| l).unwrap_or(f64::NAN),
            curve,
        });
    }
    summaries.sort_by_key(|s| s.step);

    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    // Summary: text to stdout, CSV alongside the plot.
    let mut csv = String::from("run,loss,scheme,convergence_step,degenerate,final_loss\n");
    println!(
        "{:<28} {:<22} {:<7} {:>16} {:>11} {:>12}",
        "run", "loss", "scheme", "convergence_step", "degenerate", "final_loss"
    );
    for s in &summaries {
        println!(
            "{:<28} {:<22} {:<7} {:>16} {:>11} {:>12.6}",
            s.run_id,
            s.loss.to_string(),
            s.scheme,
            s.step,
            if s.degenerate { "yes" } else { "no" },
            s.final_loss
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.run_id, s.loss, s.scheme, s.step, s.degenerate, s.final_loss
        ));
    }
    let csv_path = args.out.join("convergence.csv");
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(&csv_path, e))?;

    // Two panels as in the published comparison: pure L1-family losses on
    // one, anything bearing an MSE term on the other.
    let has_mse = |spec: &LossSpec| spec.terms.iter().any(|t| matches!(t.term, LossTerm::Mse));
    let mut l1_panel = Panel {
        title: "l1 family".into(),
        curves: Vec::new(),
    };
    let mut mse_panel = Panel {
        title: "mse and combinations".into(),
        curves: Vec::new(),
    };
    for s in &summaries {
        let curve = Curve {
            label: s.loss.to_string(),
            points: s.curve.entries.clone(),
        };
        if has_mse(&s.loss) {
            mse_panel.curves.push(curve);
        } else {
            l1_panel.curves.push(curve);
        }
    }
    let mut panels = Vec::new();
    if !l1_panel.curves.is_empty() {
        panels.push(l1_panel);
    }
    if !mse_panel.curves.is_empty() {
        panels.push(mse_panel);
    }
    let plot_path = args.out.join("losscurves.png");
    plot::render(&panels, &plot_path)?;
    println!("plot: {}", plot_path.display());
    println!("summary: {}", csv_path.display());
    Ok(())
}
