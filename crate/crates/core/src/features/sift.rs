//! Difference-of-Gaussians keypoints and gradient-orientation descriptors.
//!
//! The scale space starts from the luma plane (assumed pre-blurred by 0.5),
//! uses `scales_per_octave + 3` Gaussian layers per octave and halves the
//! resolution by 2x2 averaging until the shorter side drops below 16 pixels.
//! Keypoint coordinates are reported in full-resolution pixels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::histogram::hue_histogram_of;
use super::plane::Plane;
use crate::media_io::Frame;

pub const SIFT_DIM: usize = 128;
pub const HUE_BINS: usize = 36;
pub const HUESIFT_DIM: usize = SIFT_DIM + HUE_BINS;

const DESCR_WIDTH: usize = 4;
const DESCR_BINS: usize = 8;
const DESCR_SCALE: f64 = 3.0;
/// Cap on every entry of a normalized SIFT descriptor.
pub const DESCR_CLAMP: f64 = 0.2;
const ORI_BINS: usize = 36;
const ORI_SIGMA: f64 = 1.5;
const INPUT_SIGMA: f64 = 0.5;
const BORDER: usize = 2;
const MAX_INTERP_STEPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiftParams {
    pub scales_per_octave: usize,
    pub base_sigma: f64,
    pub contrast_threshold: f64,
    pub edge_ratio: f64,
    /// Extra orientations are emitted for histogram peaks at least this
    /// fraction of the dominant one.
    pub peak_ratio: f64,
    /// Octaves are added while the shorter side is at least this long.
    pub min_octave_size: usize,
    /// Keep only the strongest responses per frame.
    pub max_keypoints: usize,
}

impl Default for SiftParams {
    fn default() -> Self {
        SiftParams {
            scales_per_octave: 3,
            base_sigma: 1.6,
            contrast_threshold: 0.03,
            edge_ratio: 10.0,
            peak_ratio: 0.8,
            min_octave_size: 16,
            max_keypoints: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Gaussian scale in full-resolution pixels.
    pub scale: f64,
    /// Radians in `[0, 2π)`, measured with `atan2(dy, dx)` in image axes.
    pub orientation: f64,
    pub response: f64,
}

struct Octave {
    gaussians: Vec<Plane>,
    dogs: Vec<Plane>,
}

/// Gaussian and difference-of-Gaussian pyramid of one frame.
pub struct ScaleSpace {
    params: SiftParams,
    octaves: Vec<Octave>,
    width: usize,
    height: usize,
}

impl ScaleSpace {
    pub fn build(frame: &Frame, params: &SiftParams) -> ScaleSpace {
        let s = params.scales_per_octave;
        let k = 2f64.powf(1.0 / s as f64);
        let luma = Plane::new(frame.width(), frame.height(), frame.luma().to_vec());
        let mut base = luma.blur((params.base_sigma.powi(2) - INPUT_SIGMA.powi(2)).max(0.0).sqrt());
        let mut octaves = Vec::new();
        while base.width.min(base.height) >= params.min_octave_size {
            let mut gaussians = vec![base];
            for i in 1..s + 3 {
                let prev = params.base_sigma * k.powi(i as i32 - 1);
                let next = prev * k;
                let g = gaussians[i - 1].blur((next * next - prev * prev).sqrt());
                gaussians.push(g);
            }
            let dogs = gaussians.windows(2).map(|w| w[1].sub(&w[0])).collect();
            base = gaussians[s].downsample();
            octaves.push(Octave { gaussians, dogs });
        }
        ScaleSpace {
            params: params.clone(),
            octaves,
            width: frame.width(),
            height: frame.height(),
        }
    }

    pub fn octave_count(&self) -> usize {
        self.octaves.len()
    }

    /// Scale-space extrema passing the contrast and edge tests, one keypoint
    /// per dominant orientation. Sorted by descending response, then position.
    pub fn detect(&self) -> Vec<Keypoint> {
        let mut out = Vec::new();
        let s = self.params.scales_per_octave;
        let prefilter = 0.5 * self.params.contrast_threshold;
        for (o, oct) in self.octaves.iter().enumerate() {
            let (w, h) = (oct.dogs[0].width, oct.dogs[0].height);
            if w <= 2 * BORDER || h <= 2 * BORDER {
                continue;
            }
            for layer in 1..=s {
                for y in BORDER..h - BORDER {
                    for x in BORDER..w - BORDER {
                        let v = oct.dogs[layer].at(x, y);
                        if v.abs() <= prefilter || !is_extremum(&oct.dogs, layer, x, y) {
                            continue;
                        }
                        if let Some(c) = self.refine(oct, layer, x, y) {
                            self.orient(o, oct, &c, &mut out);
                        }
                    }
                }
            }
        }
        out.sort_by(|a, b| {
            b.response
                .total_cmp(&a.response)
                .then(a.y.total_cmp(&b.y))
                .then(a.x.total_cmp(&b.x))
                .then(a.orientation.total_cmp(&b.orientation))
        });
        out.truncate(self.params.max_keypoints);
        out
    }

    fn refine(&self, oct: &Octave, mut layer: usize, mut x: usize, mut y: usize) -> Option<Candidate> {
        let s = self.params.scales_per_octave;
        let (w, h) = (oct.dogs[0].width, oct.dogs[0].height);
        let mut offset = [0.0; 3];
        let mut converged = false;
        for _ in 0..MAX_INTERP_STEPS {
            let (g, hess) = derivatives(&oct.dogs, layer, x, y);
            offset = solve3(&hess, &g).map(|v| -v);
            if offset.iter().all(|v| v.abs() < 0.5) {
                converged = true;
                break;
            }
            let step = |p: usize, d: f64| p as isize + d.round() as isize;
            let (nx, ny, nl) = (step(x, offset[0]), step(y, offset[1]), step(layer, offset[2]));
            if nl < 1
                || nl > s as isize
                || nx < BORDER as isize
                || ny < BORDER as isize
                || nx >= (w - BORDER) as isize
                || ny >= (h - BORDER) as isize
            {
                return None;
            }
            x = nx as usize;
            y = ny as usize;
            layer = nl as usize;
        }
        if !converged {
            return None;
        }
        let (g, _) = derivatives(&oct.dogs, layer, x, y);
        let value = oct.dogs[layer].at(x, y)
            + 0.5 * (g[0] * offset[0] + g[1] * offset[1] + g[2] * offset[2]);
        if value.abs() < self.params.contrast_threshold {
            return None;
        }
        // principal curvature ratio from the spatial Hessian
        let d = &oct.dogs[layer];
        let c = d.at(x, y);
        let dxx = d.at(x + 1, y) + d.at(x - 1, y) - 2.0 * c;
        let dyy = d.at(x, y + 1) + d.at(x, y - 1) - 2.0 * c;
        let dxy = 0.25 * (d.at(x + 1, y + 1) - d.at(x - 1, y + 1) - d.at(x + 1, y - 1) + d.at(x - 1, y - 1));
        let tr = dxx + dyy;
        let det = dxx * dyy - dxy * dxy;
        let r = self.params.edge_ratio;
        if det <= 0.0 || tr * tr * r >= (r + 1.0).powi(2) * det {
            return None;
        }
        Some(Candidate {
            x,
            y,
            layer,
            offset,
            response: value.abs(),
        })
    }

    fn orient(&self, o: usize, oct: &Octave, c: &Candidate, out: &mut Vec<Keypoint>) {
        let s = self.params.scales_per_octave as f64;
        let pow = (1u64 << o) as f64;
        let fx = (c.x as f64 + c.offset[0] + 0.5) * pow - 0.5;
        let fy = (c.y as f64 + c.offset[1] + 0.5) * pow - 0.5;
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return;
        }
        let layer_pos = c.layer as f64 + c.offset[2];
        let sigma_oct = self.params.base_sigma * 2f64.powf(layer_pos / s);
        let scale = sigma_oct * pow;

        let img = &oct.gaussians[c.layer];
        let sigma_w = ORI_SIGMA * sigma_oct;
        let radius = (3.0 * sigma_w).round() as isize;
        let mut hist = [0.0f64; ORI_BINS];
        for dy in -radius..=radius {
            let yy = c.y as isize + dy;
            if yy <= 0 || yy >= img.height as isize - 1 {
                continue;
            }
            for dx in -radius..=radius {
                let xx = c.x as isize + dx;
                if xx <= 0 || xx >= img.width as isize - 1 {
                    continue;
                }
                let (xu, yu) = (xx as usize, yy as usize);
                let gx = img.at(xu + 1, yu) - img.at(xu - 1, yu);
                let gy = img.at(xu, yu + 1) - img.at(xu, yu - 1);
                let mag = gx.hypot(gy);
                if mag == 0.0 {
                    continue;
                }
                let weight = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_w * sigma_w)).exp();
                let angle = gy.atan2(gx).rem_euclid(2.0 * PI);
                let bin = ((angle * ORI_BINS as f64 / (2.0 * PI)).round() as usize) % ORI_BINS;
                hist[bin] += weight * mag;
            }
        }
        // circular [1 4 6 4 1] smoothing
        let mut smooth = [0.0; ORI_BINS];
        for i in 0..ORI_BINS {
            let at = |d: isize| hist[(i as isize + d).rem_euclid(ORI_BINS as isize) as usize];
            smooth[i] = (at(-2) + at(2) + 4.0 * (at(-1) + at(1)) + 6.0 * at(0)) / 16.0;
        }
        let max = smooth.iter().cloned().fold(0.0, f64::max);
        if max <= 0.0 {
            return;
        }
        for i in 0..ORI_BINS {
            let l = smooth[(i + ORI_BINS - 1) % ORI_BINS];
            let r = smooth[(i + 1) % ORI_BINS];
            let v = smooth[i];
            if v > l && v > r && v >= self.params.peak_ratio * max {
                let interp = 0.5 * (l - r) / (l - 2.0 * v + r);
                let bin = i as f64 + interp;
                let orientation = (bin * 2.0 * PI / ORI_BINS as f64).rem_euclid(2.0 * PI);
                out.push(Keypoint {
                    x: fx,
                    y: fy,
                    scale,
                    orientation,
                    response: c.response,
                });
            }
        }
    }

    /// (octave, layer) whose Gaussian image best matches a keypoint scale.
    fn level_for(&self, scale: f64) -> (usize, usize) {
        let s = self.params.scales_per_octave;
        let t = (scale / self.params.base_sigma).log2() * s as f64;
        let max_o = self.octaves.len().saturating_sub(1);
        let o = ((t / s as f64).floor().max(0.0) as usize).min(max_o);
        let layer = (t - (o * s) as f64).round().clamp(0.0, (s + 2) as f64) as usize;
        (o, layer)
    }

    /// 128-d descriptor for a keypoint. Samples outside the frame read as zero.
    pub fn describe(&self, kp: &Keypoint) -> Vec<f64> {
        if self.octaves.is_empty() {
            return vec![0.0; SIFT_DIM];
        }
        let (o, layer) = self.level_for(kp.scale);
        let img = &self.octaves[o].gaussians[layer];
        let pow = (1u64 << o) as f64;
        let (cx, cy) = ((kp.x + 0.5) / pow - 0.5, (kp.y + 0.5) / pow - 0.5);
        let sigma_oct = kp.scale / pow;
        let hist_width = DESCR_SCALE * sigma_oct;
        let d = DESCR_WIDTH as f64;
        let radius = (hist_width * std::f64::consts::SQRT_2 * (d + 1.0) * 0.5).round() as isize;
        let (sin_t, cos_t) = kp.orientation.sin_cos();
        let (ix, iy) = (cx.round() as isize, cy.round() as isize);
        let mut hist = vec![0.0; SIFT_DIM];
        let bins_per_rad = DESCR_BINS as f64 / (2.0 * PI);
        let weight_denom = 2.0 * (0.5 * d) * (0.5 * d);
        for dy in -radius..=radius {
            for dx in -radius..=radius {
                let (px, py) = (ix + dx, iy + dy);
                let ox = px as f64 - cx;
                let oy = py as f64 - cy;
                let c_rot = (ox * cos_t + oy * sin_t) / hist_width;
                let r_rot = (-ox * sin_t + oy * cos_t) / hist_width;
                let rbin = r_rot + 0.5 * d - 0.5;
                let cbin = c_rot + 0.5 * d - 0.5;
                if rbin <= -1.0 || rbin >= d || cbin <= -1.0 || cbin >= d {
                    continue;
                }
                let gx = img.at_or_zero(px + 1, py) - img.at_or_zero(px - 1, py);
                let gy = img.at_or_zero(px, py + 1) - img.at_or_zero(px, py - 1);
                let mag = gx.hypot(gy);
                if mag == 0.0 {
                    continue;
                }
                let angle = (gy.atan2(gx) - kp.orientation).rem_euclid(2.0 * PI);
                let obin = angle * bins_per_rad;
                let weight = (-(c_rot * c_rot + r_rot * r_rot) / weight_denom).exp();
                trilinear_vote(&mut hist, rbin, cbin, obin, weight * mag);
            }
        }
        normalize_clamped(&mut hist, DESCR_CLAMP);
        hist
    }
}

struct Candidate {
    x: usize,
    y: usize,
    layer: usize,
    offset: [f64; 3],
    response: f64,
}

fn is_extremum(dogs: &[Plane], layer: usize, x: usize, y: usize) -> bool {
    let v = dogs[layer].at(x, y);
    let (mut is_max, mut is_min) = (true, true);
    for l in layer - 1..=layer + 1 {
        for yy in y - 1..=y + 1 {
            for xx in x - 1..=x + 1 {
                if l == layer && xx == x && yy == y {
                    continue;
                }
                let n = dogs[l].at(xx, yy);
                is_max &= v > n;
                is_min &= v < n;
                if !is_max && !is_min {
                    return false;
                }
            }
        }
    }
    true
}

/// Gradient and Hessian of the DoG stack at (x, y, layer) in (x, y, scale) order.
fn derivatives(dogs: &[Plane], l: usize, x: usize, y: usize) -> ([f64; 3], [[f64; 3]; 3]) {
    let v = |dl: isize, dx: isize, dy: isize| {
        dogs[(l as isize + dl) as usize].at((x as isize + dx) as usize, (y as isize + dy) as usize)
    };
    let c = v(0, 0, 0);
    let g = [
        0.5 * (v(0, 1, 0) - v(0, -1, 0)),
        0.5 * (v(0, 0, 1) - v(0, 0, -1)),
        0.5 * (v(1, 0, 0) - v(-1, 0, 0)),
    ];
    let dxx = v(0, 1, 0) + v(0, -1, 0) - 2.0 * c;
    let dyy = v(0, 0, 1) + v(0, 0, -1) - 2.0 * c;
    let dss = v(1, 0, 0) + v(-1, 0, 0) - 2.0 * c;
    let dxy = 0.25 * (v(0, 1, 1) - v(0, -1, 1) - v(0, 1, -1) + v(0, -1, -1));
    let dxs = 0.25 * (v(1, 1, 0) - v(1, -1, 0) - v(-1, 1, 0) + v(-1, -1, 0));
    let dys = 0.25 * (v(1, 0, 1) - v(1, 0, -1) - v(-1, 0, 1) + v(-1, 0, -1));
    (g, [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]])
}

/// Solves `a x = b` by Cramer's rule; singular systems give a zero step.
fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> [f64; 3] {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-300 {
        return [0.0; 3];
    }
    let mut x = [0.0; 3];
    for (col, xi) in x.iter_mut().enumerate() {
        let mut m = *a;
        for row in 0..3 {
            m[row][col] = b[row];
        }
        *xi = det(&m) / d;
    }
    x
}

fn trilinear_vote(hist: &mut [f64], rbin: f64, cbin: f64, obin: f64, value: f64) {
    let (r0, c0, o0) = (rbin.floor(), cbin.floor(), obin.floor());
    let (dr, dc, dor) = (rbin - r0, cbin - c0, obin - o0);
    for (ri, wr) in [(r0 as isize, 1.0 - dr), (r0 as isize + 1, dr)] {
        if ri < 0 || ri >= DESCR_WIDTH as isize {
            continue;
        }
        for (ci, wc) in [(c0 as isize, 1.0 - dc), (c0 as isize + 1, dc)] {
            if ci < 0 || ci >= DESCR_WIDTH as isize {
                continue;
            }
            for (oi, wo) in [(o0 as isize, 1.0 - dor), (o0 as isize + 1, dor)] {
                let ob = oi.rem_euclid(DESCR_BINS as isize) as usize;
                let idx = (ri as usize * DESCR_WIDTH + ci as usize) * DESCR_BINS + ob;
                hist[idx] += value * wr * wc * wo;
            }
        }
    }
}

/// Scales `v` to unit L2 norm with no entry above `cap`, by repeatedly
/// clamping and renormalizing until the clamped set stops growing. With
/// fewer than `1/cap²` non-zero entries no such vector exists; the result
/// is then the unit vector with all non-zero entries equal.
pub fn normalize_clamped(v: &mut [f64], cap: f64) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return;
    }
    v.iter_mut().for_each(|x| *x /= norm);
    let mut clamped = vec![false; v.len()];
    loop {
        let mut grew = false;
        for (x, c) in v.iter_mut().zip(clamped.iter_mut()) {
            if !*c && *x > cap {
                *x = cap;
                *c = true;
                grew = true;
            }
        }
        if !grew {
            break;
        }
        let fixed: f64 = clamped.iter().filter(|&&c| c).count() as f64 * cap * cap;
        let free: f64 = v
            .iter()
            .zip(&clamped)
            .filter(|(_, &c)| !c)
            .map(|(x, _)| x * x)
            .sum();
        if fixed >= 1.0 || free == 0.0 {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= n);
            return;
        }
        let scale = ((1.0 - fixed) / free).sqrt();
        for (x, &c) in v.iter_mut().zip(&clamped) {
            if !c {
                *x *= scale;
            }
        }
    }
}

/// DoG keypoints of one frame.
pub fn detect_sift_keypoints(frame: &Frame, params: &SiftParams) -> Vec<Keypoint> {
    ScaleSpace::build(frame, params).detect()
}

/// Descriptor of one keypoint, building the frame's scale space on the way.
/// Prefer [`extract_sift`] when describing many keypoints of the same frame.
pub fn describe_sift(frame: &Frame, kp: &Keypoint, params: &SiftParams) -> Vec<f64> {
    ScaleSpace::build(frame, params).describe(kp)
}

/// Detection and description in one pass over the frame.
pub fn extract_sift(frame: &Frame, params: &SiftParams) -> Vec<(Keypoint, Vec<f64>)> {
    let space = ScaleSpace::build(frame, params);
    space
        .detect()
        .into_iter()
        .map(|kp| {
            let d = space.describe(&kp);
            (kp, d)
        })
        .collect()
}

/// 36-bin hue histogram of the pixels covered by a keypoint's descriptor window.
pub fn support_hue_histogram(frame: &Frame, kp: &Keypoint) -> Vec<f64> {
    let d = DESCR_WIDTH as f64;
    let radius = DESCR_SCALE * kp.scale * std::f64::consts::SQRT_2 * (d + 1.0) * 0.5;
    let r2 = radius * radius;
    let x0 = (kp.x - radius).floor().max(0.0) as usize;
    let y0 = (kp.y - radius).floor().max(0.0) as usize;
    let x1 = ((kp.x + radius).ceil() as usize).min(frame.width() - 1);
    let y1 = ((kp.y + radius).ceil() as usize).min(frame.height() - 1);
    let pixels = (y0..=y1).flat_map(move |y| {
        (x0..=x1).filter_map(move |x| {
            let (dx, dy) = (x as f64 - kp.x, y as f64 - kp.y);
            (dx * dx + dy * dy <= r2).then(|| frame.pixel(x, y))
        })
    });
    hue_histogram_of(pixels, HUE_BINS)
}

/// SIFT vector followed by the 36-bin hue histogram of the support window.
pub fn describe_huesift(frame: &Frame, kp: &Keypoint, params: &SiftParams) -> Vec<f64> {
    let mut v = describe_sift(frame, kp, params);
    v.extend(support_hue_histogram(frame, kp));
    v
}

/// Like [`extract_sift`] but with the hue block appended.
pub fn extract_huesift(frame: &Frame, params: &SiftParams) -> Vec<(Keypoint, Vec<f64>)> {
    extract_sift(frame, params)
        .into_iter()
        .map(|(kp, mut d)| {
            d.extend(support_hue_histogram(frame, &kp));
            (kp, d)
        })
        .collect()
}
