//! Loss terms with hand-derived gradients.
//!
//! Every term returns its value together with the gradient with respect to
//! the free parameters it depends on. Gradients of mapping-point terms are
//! always expressed over the interleaved Cartesian coordinates
//! `[x0, y0, x1, y1, ...]`; the Polar channels are treated as functions of
//! `(x, y)` through the shared centroid origin.

mod gradcheck;
mod iou;
mod regression;
mod total;

pub use gradcheck::{
    check_term, gradient_check, numeric_gradient, random_instance, GradCheckReport, LossTerm,
    RandomInstance,
};
pub use iou::{
    doc_iou_discrete, focal_wrap, focal_wrap_with_grad, global_iou_loss, local_iou_loss,
    local_iou_patches, polar_iou_integral, PatchLoss,
};
pub use regression::{
    chain_polar_to_xy, diff_loss, edge_loss, edge_loss_grid, huber, shape3d_loss, smooth_l1,
    smooth_l1_scaled, smooth_l1_values, smooth_l1_values_scaled, Neighborhood,
};
pub use total::{total_loss, ControlPoints, LossBreakdown};

use crate::error::{Error, Result};

/// How the focal factor of the global and local IOU terms is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FocalMode {
    /// `(1 - iou)^γ · (-log iou)`.
    #[default]
    IouFocal,
    /// `(1 - loss)^γ · loss` with `loss = -log iou`.
    Literal,
}

/// Which mapping points enter the mapping-radius IOU term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoScope {
    #[default]
    All,
    OuterRing,
}

/// Coefficients and switches of the combined objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
    /// Focal exponent; `0` disables the focal factor.
    pub gamma: f64,
    pub focal_mode: FocalMode,
    pub neighbors: Neighborhood,
    /// Global IOU over the mapping-point radii.
    pub mapping_global: bool,
    pub mapping_scope: RhoScope,
    /// Global IOU over the outermost contour radii.
    pub contour_global: bool,
    /// Edge-length regression inside the global term.
    pub edge: bool,
    /// Pixels per normalized unit for the smooth-L1 term, which puts the
    /// Huber knee at one pixel. `1` evaluates it in normalized units.
    pub sl1_scale: f64,
}

/// Default smooth-L1 scale: a 256-pixel frame.
pub const SL1_PIXEL_SCALE: f64 = 256.0;

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha1: 0.1,
            alpha2: 1.0,
            alpha3: 1.0,
            alpha4: 0.5,
            gamma: 2.0,
            focal_mode: FocalMode::IouFocal,
            neighbors: Neighborhood::Eight,
            mapping_global: true,
            mapping_scope: RhoScope::All,
            contour_global: true,
            edge: true,
            sl1_scale: SL1_PIXEL_SCALE,
        }
    }
}

impl LossWeights {
    /// Smooth-L1 only: every regularizer switched off.
    pub fn smooth_l1_only() -> Self {
        Self {
            alpha1: 0.0,
            alpha2: 0.0,
            alpha3: 0.0,
            alpha4: 0.0,
            gamma: 0.0,
            mapping_global: false,
            contour_global: false,
            edge: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.alpha4,
            self.gamma,
        ];
        if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(
                "loss weights and gamma must be finite and non-negative".into(),
            ));
        }
        if !(self.sl1_scale.is_finite() && self.sl1_scale > 0.0) {
            return Err(Error::InvalidArgument(
                "smooth-L1 scale must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Dense 3D coordinate field `height × width × 3`, row-major, channel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct Shape3DField {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Shape3DField {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::ShapeMismatch(format!(
                "3D field {height}x{width} needs {} values, got {}",
                height * width * 3,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("3D field"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width * 3],
        }
    }
}
