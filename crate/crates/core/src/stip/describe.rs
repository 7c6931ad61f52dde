use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::detect::SpaceTimePoint;
use super::flow::{lucas_kanade, plane_gradients, FlowParams};
use super::volume::Volume;
use crate::error::{Error, Result};
use crate::features::plane::Plane;
use crate::media_io::FrameSequence;

pub const GRADIENT_BINS: usize = 4;
pub const FLOW_BINS: usize = 5;
const CELLS_XY: usize = 3;
const CELLS_T: usize = 2;
const CELLS: usize = CELLS_XY * CELLS_XY * CELLS_T;
pub const GRADIENT_BLOCK: usize = CELLS * GRADIENT_BINS;
pub const FLOW_BLOCK: usize = CELLS * FLOW_BINS;
pub const STIP_DIM: usize = GRADIENT_BLOCK + FLOW_BLOCK;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StipDescriptorParams {
    /// Support half-widths in units of sigma and tau.
    pub spatial_extent: f64,
    pub temporal_extent: f64,
    /// Pre-smoothing of each frame before gradients and flow.
    pub presmooth: f64,
    /// Flow slower than this (pixels/frame) counts as no motion.
    pub still_speed: f64,
    pub flow: FlowParams,
}

impl Default for StipDescriptorParams {
    fn default() -> Self {
        StipDescriptorParams {
            spatial_extent: 9.0,
            temporal_extent: 4.0,
            presmooth: 1.0,
            still_speed: 0.2,
            flow: FlowParams::default(),
        }
    }
}

/// Gradient-orientation and flow histograms over space-time supports of one
/// video. Per-frame gradients are computed up front; flow for a frame pair is
/// computed the first time a support needs it.
pub struct StipDescriber {
    params: StipDescriptorParams,
    w: usize,
    h: usize,
    frames: Vec<Plane>,
    grads: Vec<(Plane, Plane)>,
    flow: Vec<OnceLock<Vec<Option<(f64, f64)>>>>,
}

fn direction_bin(dx: f64, dy: f64) -> usize {
    // bins centred on +x, +y, -x, -y
    let a = dy.atan2(dx).rem_euclid(2.0 * PI);
    ((a / (PI / 2.0)).round() as usize) % 4
}

impl StipDescriber {
    pub fn new(video: &FrameSequence, params: &StipDescriptorParams) -> StipDescriber {
        Self::from_volume(&Volume::luma(video), params)
    }

    pub fn from_volume(luma: &Volume, params: &StipDescriptorParams) -> StipDescriber {
        let frames: Vec<Plane> = (0..luma.t)
            .map(|t| Plane::new(luma.w, luma.h, luma.frame(t).to_vec()).blur(params.presmooth))
            .collect();
        let grads = frames.iter().map(plane_gradients).collect();
        let pairs = luma.t.saturating_sub(1);
        StipDescriber {
            params: params.clone(),
            w: luma.w,
            h: luma.h,
            frames,
            grads,
            flow: (0..pairs).map(|_| OnceLock::new()).collect(),
        }
    }

    fn flow_at(&self, t: usize) -> Option<&[Option<(f64, f64)>]> {
        if self.flow.is_empty() {
            return None;
        }
        // the last frame reuses the flow into it
        let pair = t.min(self.flow.len() - 1);
        Some(self.flow[pair].get_or_init(|| {
            lucas_kanade(&self.frames[pair], &self.frames[pair + 1], &self.params.flow)
        }))
    }

    pub fn describe(&self, p: &SpaceTimePoint) -> Result<Vec<f64>> {
        let hx = self.params.spatial_extent * p.sigma_spatial;
        let ht = self.params.temporal_extent * p.tau_temporal;
        let (x0, y0, t0) = (p.x - hx, p.y - hx, p.t as f64 - ht);
        let clip = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
            let a = lo.ceil().max(0.0);
            let b = hi.min(n as f64 - 1.0).floor();
            (a <= b).then_some((a as usize, b as usize))
        };
        let ranges = (
            clip(x0, p.x + hx, self.w),
            clip(y0, p.y + hx, self.h),
            clip(t0, p.t as f64 + ht, self.frames.len()),
        );
        let (Some((xa, xb)), Some((ya, yb)), Some((ta, tb))) = ranges else {
            return Err(Error::Contract(format!(
                "support of the point at ({}, {}, {}) lies outside the video",
                p.x, p.y, p.t
            )));
        };
        let cell = |v: f64, lo: f64, extent: f64, n: usize| -> usize {
            (((v - lo) / extent * n as f64).floor().max(0.0) as usize).min(n - 1)
        };
        let mut desc = vec![0.0; STIP_DIM];
        for t in ta..=tb {
            let ct = cell(t as f64, t0, 2.0 * ht, CELLS_T);
            let (gx, gy) = &self.grads[t];
            let flow = self.flow_at(t);
            for y in ya..=yb {
                let cy = cell(y as f64, y0, 2.0 * hx, CELLS_XY);
                for x in xa..=xb {
                    let cx = cell(x as f64, x0, 2.0 * hx, CELLS_XY);
                    let c = (ct * CELLS_XY + cy) * CELLS_XY + cx;
                    let (dx, dy) = (gx.at(x, y), gy.at(x, y));
                    let mag = dx.hypot(dy);
                    if mag > 0.0 {
                        desc[c * GRADIENT_BINS + direction_bin(dx, dy)] += mag;
                    }
                    if let Some(Some((u, v))) = flow.map(|f| f[y * self.w + x]) {
                        let bin = if u.hypot(v) < self.params.still_speed {
                            4
                        } else {
                            direction_bin(u, v)
                        };
                        desc[GRADIENT_BLOCK + c * FLOW_BINS + bin] += 1.0;
                    }
                }
            }
        }
        let (grad, flow) = desc.split_at_mut(GRADIENT_BLOCK);
        for block in [grad, flow] {
            let s: f64 = block.iter().sum();
            if s > 0.0 {
                block.iter_mut().for_each(|v| *v /= s);
            }
        }
        Ok(desc)
    }
}

/// One-off descriptor; prefer [`StipDescriber`] for many points of a video.
pub fn describe_stip(video: &FrameSequence, p: &SpaceTimePoint) -> Result<Vec<f64>> {
    StipDescriber::new(video, &StipDescriptorParams::default()).describe(p)
}
