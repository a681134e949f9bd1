//! PSNR scoring, dataset evaluation, report tables and ablations.

mod ablation;
mod evaluate;
mod psnr;
mod report;

pub use ablation::{ablation_run, cell_label, validation_loss, AblationData, AblationResult, ValSeries};
pub use evaluate::{denoise, evaluate, evaluate_row};
pub use psnr::psnr;
pub use report::{
    fmt_psnr, report_parse_csv, report_render, report_render_timed, EvalReport, EvalRow,
    ImageScore, ReportFormat,
};
