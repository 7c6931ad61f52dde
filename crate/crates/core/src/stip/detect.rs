use serde::{Deserialize, Serialize};

use super::volume::Volume;
use crate::media_io::FrameSequence;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub x: f64,
    pub y: f64,
    pub t: usize,
    pub sigma_spatial: f64,
    pub tau_temporal: f64,
    pub response: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StipParams {
    /// (sigma, tau) pairs: spatial and temporal standard deviations of the
    /// local smoothing, in pixels and frames.
    pub scales: Vec<(f64, f64)>,
    pub k_harris: f64,
    pub threshold: f64,
    /// Ratio of integration to local scale variance.
    pub integration_ratio: f64,
    /// Points closer than `spatial_margin * sigma` to the frame border or
    /// `temporal_margin * tau` to the first/last frame are discarded.
    pub spatial_margin: f64,
    pub temporal_margin: f64,
    /// Maximum points kept per video, strongest first.
    pub max_points: usize,
}

impl Default for StipParams {
    fn default() -> Self {
        StipParams {
            scales: vec![(2.0, 2.0), (4.0, 2.0), (2.0, 4.0), (4.0, 4.0)],
            k_harris: 0.0005,
            threshold: 1e-8,
            integration_ratio: 2.0,
            spatial_margin: 1.0,
            temporal_margin: 3.5,
            max_points: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StipDetection {
    pub points: Vec<SpaceTimePoint>,
    /// Set when the video had fewer than `2 * max(tau)` frames.
    pub too_short: bool,
}

/// Scale-normalized Harris response volume `det(mu) - k trace(mu)^3`.
pub fn harris_response(luma: &Volume, sigma: f64, tau: f64, params: &StipParams) -> Volume {
    let l = luma.smooth(sigma, tau);
    let [mut gx, mut gy, mut gt] = l.gradients();
    gx.data.iter_mut().for_each(|v| *v *= sigma);
    gy.data.iter_mut().for_each(|v| *v *= sigma);
    gt.data.iter_mut().for_each(|v| *v *= tau);
    let s = params.integration_ratio.sqrt();
    let product = |a: &Volume, b: &Volume| Volume {
        data: a.data.iter().zip(&b.data).map(|(p, q)| p * q).collect(),
        ..*a
    };
    let smooth = |v: Volume| v.smooth(s * sigma, s * tau);
    let xx = smooth(product(&gx, &gx));
    let yy = smooth(product(&gy, &gy));
    let tt = smooth(product(&gt, &gt));
    let xy = smooth(product(&gx, &gy));
    let xt = smooth(product(&gx, &gt));
    let yt = smooth(product(&gy, &gt));
    let mut h = Volume::zeros(luma.w, luma.h, luma.t);
    for i in 0..h.data.len() {
        let (a, b, c) = (xx.data[i], xy.data[i], xt.data[i]);
        let (e, f, k) = (yy.data[i], yt.data[i], tt.data[i]);
        let det = a * (e * k - f * f) - b * (b * k - f * c) + c * (b * f - e * c);
        let tr = a + e + k;
        h.data[i] = det - params.k_harris * tr * tr * tr;
    }
    h
}

fn local_maxima(h: &Volume, sigma: f64, tau: f64, params: &StipParams, out: &mut Vec<SpaceTimePoint>) {
    let ms = (params.spatial_margin * sigma).ceil() as usize;
    let mt = (params.temporal_margin * tau).ceil() as usize;
    let ms = ms.max(1);
    let mt = mt.max(1);
    if h.w <= 2 * ms || h.h <= 2 * ms || h.t <= 2 * mt {
        return;
    }
    for t in mt..h.t - mt {
        for y in ms..h.h - ms {
            for x in ms..h.w - ms {
                let v = h.at(x, y, t);
                if !(v > params.threshold) {
                    continue;
                }
                let mut is_max = true;
                'n: for dt in [-1isize, 0, 1] {
                    for dy in [-1isize, 0, 1] {
                        for dx in [-1isize, 0, 1] {
                            if dt == 0 && dy == 0 && dx == 0 {
                                continue;
                            }
                            let n = h.at(
                                (x as isize + dx) as usize,
                                (y as isize + dy) as usize,
                                (t as isize + dt) as usize,
                            );
                            if n >= v {
                                is_max = false;
                                break 'n;
                            }
                        }
                    }
                }
                if is_max {
                    out.push(SpaceTimePoint {
                        x: x as f64,
                        y: y as f64,
                        t,
                        sigma_spatial: sigma,
                        tau_temporal: tau,
                        response: v,
                    });
                }
            }
        }
    }
}

/// Space-time interest points over the fixed scale grid, ordered by
/// (t, y, x, sigma, tau).
pub fn detect_stips(video: &FrameSequence, params: &StipParams) -> StipDetection {
    detect_stips_in(&Volume::luma(video), params)
}

pub fn detect_stips_in(luma: &Volume, params: &StipParams) -> StipDetection {
    let max_tau = params.scales.iter().map(|s| s.1).fold(0.0, f64::max);
    if (luma.t as f64) < 2.0 * max_tau {
        log::warn!(
            "video of {} frames is shorter than 2 x tau = {}; no interest points",
            luma.t,
            2.0 * max_tau
        );
        return StipDetection {
            points: Vec::new(),
            too_short: true,
        };
    }
    let mut points = Vec::new();
    for &(sigma, tau) in &params.scales {
        let h = harris_response(luma, sigma, tau, params);
        local_maxima(&h, sigma, tau, params, &mut points);
    }
    if points.len() > params.max_points {
        points.sort_by(|a, b| b.response.total_cmp(&a.response).then(order(a, b)));
        points.truncate(params.max_points);
    }
    points.sort_by(order);
    StipDetection {
        points,
        too_short: false,
    }
}

fn order(a: &SpaceTimePoint, b: &SpaceTimePoint) -> std::cmp::Ordering {
    a.t.cmp(&b.t)
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
        .then(a.sigma_spatial.total_cmp(&b.sigma_spatial))
        .then(a.tau_temporal.total_cmp(&b.tau_temporal))
}
