//! Iterative local least-squares (Lucas-Kanade) optical flow between two frames.

use serde::{Deserialize, Serialize};

use crate::features::plane::Plane;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    /// Side of the square least-squares window.
    pub window: usize,
    pub iterations: usize,
    /// Tikhonov term added to the normal equations, so that edges (rank-one
    /// structure tensors) still yield their normal flow.
    pub regularization: f64,
    /// Windows whose structure-tensor trace is below this carry no flow.
    pub min_trace: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            window: 5,
            iterations: 3,
            regularization: 1e-3,
            min_trace: 1e-4,
        }
    }
}

/// Image gradients by central differences with replicated borders.
pub fn plane_gradients(p: &Plane) -> (Plane, Plane) {
    let (w, h) = (p.width, p.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            gx[i] = 0.5 * (p.at((x + 1).min(w - 1), y) - p.at(x.saturating_sub(1), y));
            gy[i] = 0.5 * (p.at(x, (y + 1).min(h - 1)) - p.at(x, y.saturating_sub(1)));
        }
    }
    (Plane::new(w, h, gx), Plane::new(w, h, gy))
}

fn bilinear(p: &Plane, x: f64, y: f64) -> f64 {
    let x = x.clamp(0.0, (p.width - 1) as f64);
    let y = y.clamp(0.0, (p.height - 1) as f64);
    let (x0, y0) = (x.floor() as usize, y.floor() as usize);
    let (x1, y1) = ((x0 + 1).min(p.width - 1), (y0 + 1).min(p.height - 1));
    let (fx, fy) = (x - x0 as f64, y - y0 as f64);
    let top = p.at(x0, y0) * (1.0 - fx) + p.at(x1, y0) * fx;
    let bottom = p.at(x0, y1) * (1.0 - fx) + p.at(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Per-pixel flow from `a` to `b`; `None` where the window has no texture.
pub fn lucas_kanade(a: &Plane, b: &Plane, params: &FlowParams) -> Vec<Option<(f64, f64)>> {
    let (w, h) = (a.width, a.height);
    let (gx, gy) = plane_gradients(a);
    let r = (params.window / 2) as isize;
    let lambda = params.regularization;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let window: Vec<(usize, usize)> = (-r..=r)
                .flat_map(|dy| (-r..=r).map(move |dx| (x + dx, y + dy)))
                .filter(|&(px, py)| px >= 0 && py >= 0 && px < w as isize && py < h as isize)
                .map(|(px, py)| (px as usize, py as usize))
                .collect();
            let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
            for &(px, py) in &window {
                let (ix, iy) = (gx.at(px, py), gy.at(px, py));
                sxx += ix * ix;
                sxy += ix * iy;
                syy += iy * iy;
            }
            if sxx + syy < params.min_trace {
                out.push(None);
                continue;
            }
            let (a11, a12, a22) = (sxx + lambda, sxy, syy + lambda);
            let det = a11 * a22 - a12 * a12;
            let (mut u, mut v) = (0.0, 0.0);
            for _ in 0..params.iterations {
                let (mut bx, mut by) = (0.0, 0.0);
                for &(px, py) in &window {
                    let it = bilinear(b, px as f64 + u, py as f64 + v) - a.at(px, py);
                    bx += gx.at(px, py) * it;
                    by += gy.at(px, py) * it;
                }
                u -= (a22 * bx - a12 * by) / det;
                v -= (a11 * by - a12 * bx) / det;
            }
            out.push(Some((u, v)));
        }
    }
    out
}
