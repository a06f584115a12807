//! Image similarity, map distortion and text error metrics.
//!
//! `ld_exact` and `ad_simplified` use the true backward maps available for
//! synthetic data instead of an estimated optical flow, so their values are not
//! comparable to published benchmark numbers.

mod distortion;
mod ssim;
mod text;

pub use distortion::{ad_simplified, ld_exact};
pub use ssim::{ms_ssim, MS_SSIM_MIN_SIDE, MS_SSIM_WEIGHTS};
pub use text::{cer, edit_distance};

/// One evaluation record. Map and text metrics are absent when their inputs
/// were not supplied.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricReport {
    pub ms_ssim: f64,
    pub ld_exact: Option<f64>,
    pub ad_simplified: Option<f64>,
    pub ed: Option<usize>,
    pub cer: Option<f64>,
}

impl MetricReport {
    /// Single-line `key=value` record; missing values print as `na`.
    pub fn to_record(&self) -> String {
        fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
            v.map_or_else(|| "na".to_string(), |x| x.to_string())
        }
        format!(
            "ms_ssim={} ld={} ad={} ed={} cer={}",
            self.ms_ssim,
            opt(self.ld_exact),
            opt(self.ad_simplified),
            opt(self.ed),
            opt(self.cer)
        )
    }

    pub fn to_table(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map_or_else(|| "-".to_string(), |x| format!("{x:.6}"))
        }
        let mut out = String::new();
        out.push_str(&format!("{:<14}{:>12.6}\n", "MS-SSIM", self.ms_ssim));
        out.push_str(&format!("{:<14}{:>12}\n", "LD (px)", opt(self.ld_exact)));
        out.push_str(&format!("{:<14}{:>12}\n", "AD", opt(self.ad_simplified)));
        out.push_str(&format!(
            "{:<14}{:>12}\n",
            "ED",
            self.ed.map_or_else(|| "-".to_string(), |e| e.to_string())
        ));
        out.push_str(&format!("{:<14}{:>12}\n", "CER", opt(self.cer)));
        out
    }
}
