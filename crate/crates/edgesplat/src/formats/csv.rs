//! Loss log and evaluation CSV files. Reals use the shortest round-trip
//! decimal form; missing or infinite values are written as `nan` and `inf`.

use std::fmt::Write as _;

use edgesplat_core::slam::LossRecord;

pub const LOSS_HEADER: &str = "iter,chunk,phase,loss_edge,loss_dssim,loss_total";
pub const EVAL_HEADER: &str = "scene,psnr_db,ssim,ate_rmse_m,n_pairs";

pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

pub fn format_loss_log(log: &[LossRecord]) -> String {
    let mut s = String::from(LOSS_HEADER);
    s.push('\n');
    for r in log {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iter,
            r.chunk,
            r.phase.name(),
            format_real(r.loss.edge),
            format_real(r.loss.dssim),
            format_real(r.loss.total)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub scene: String,
    pub psnr_db: f64,
    pub ssim: f64,
    pub ate_rmse_m: f64,
    pub n_pairs: usize,
}

/// Scene names may not contain commas, quotes or line breaks.
pub fn format_eval(rows: &[EvalRow]) -> String {
    let mut s = String::from(EVAL_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.scene,
            format_real(r.psnr_db),
            format_real(r.ssim),
            format_real(r.ate_rmse_m),
            r.n_pairs
        );
    }
    s
}
