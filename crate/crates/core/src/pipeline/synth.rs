//! Synthetic labelled corpus. Positive clips contain an object that
//! reverses direction mid-shot and usually carries a checkerboard texture;
//! negative clips contain static or constant-velocity objects, usually
//! with a plain two-tone texture. Both classes share colours, backgrounds
//! and a "blink" nuisance (a static patch that abruptly changes colour).

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media_io::{write_pnm_dir, DatasetManifest, Frame, FrameSequence, Label, ManifestEntry};

/// Bright colours for objects and blink patches.
const PALETTE: [[f64; 3]; 6] = [
    [250.0, 135.0, 115.0],
    [120.0, 220.0, 110.0],
    [130.0, 160.0, 250.0],
    [230.0, 210.0, 70.0],
    [220.0, 130.0, 230.0],
    [90.0, 220.0, 225.0],
];
/// Dark backdrop colours, low in luma so objects stand out. Every channel
/// is 0 or 72, so each colour falls in its own cell of a 4-level RGB
/// histogram and consecutive shots are told apart by their backdrops.
const BACKDROPS: [[f64; 3]; 5] = [
    [72.0, 0.0, 0.0],
    [0.0, 72.0, 0.0],
    [0.0, 0.0, 72.0],
    [72.0, 0.0, 72.0],
    [0.0, 72.0, 72.0],
];
const DARK_TONE: f64 = 0.55;
const CHECKER: f64 = 6.0;
/// Minimum gap in pixels between a blink patch and the object's path.
const BLINK_CLEARANCE: f64 = 6.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthParams {
    pub positives: usize,
    pub negatives: usize,
    pub size: usize,
    pub shot_frames: usize,
    pub max_shots: usize,
    /// Probability that a positive clip uses the checkerboard texture; a
    /// negative clip uses it with probability `1 - texture_bias`.
    pub texture_bias: f64,
    pub blink_probability: f64,
    /// Half-width of the uniform per-channel pixel noise.
    pub noise: f64,
    pub frame_rate: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            positives: 100,
            negatives: 100,
            size: 64,
            shot_frames: 32,
            max_shots: 2,
            texture_bias: 0.8,
            blink_probability: 0.5,
            noise: 3.0,
            frame_rate: 25.0,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Texture {
    Checker,
    Halves,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Motion {
    Static,
    Constant { vx: f64, vy: f64 },
    /// Moves with (vx, vy) until relative frame `at`, then back.
    Reversal { vx: f64, vy: f64, at: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotTruth {
    pub start_frame: usize,
    pub end_frame: usize,
    pub texture: Texture,
    pub motion: Motion,
    /// Relative frame at which the blink patch changes colour.
    pub blink_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipTruth {
    pub video_id: String,
    pub label: Label,
    pub shots: Vec<ShotTruth>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub video: FrameSequence,
    pub truth: ClipTruth,
}

impl SynthParams {
    pub fn video_id(&self, index: usize) -> String {
        if index < self.positives {
            format!("pos_{index:04}")
        } else {
            format!("neg_{:04}", index - self.positives)
        }
    }

    pub fn len(&self) -> usize {
        self.positives + self.negatives
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn check(&self) -> Result<()> {
        if self.size < 32 || self.shot_frames < 24 || self.max_shots == 0 {
            return Err(Error::config(
                "synth",
                "clips need size >= 32, shot_frames >= 24 and max_shots >= 1",
            ));
        }
        Ok(())
    }
}

fn lerp(a: [f64; 3], b: [f64; 3], t: f64) -> [f64; 3] {
    [0, 1, 2].map(|c| a[c] + (b[c] - a[c]) * t)
}

struct ShotScene {
    bg: ([f64; 3], [f64; 3], f64, f64),
    color: [f64; 3],
    side: f64,
    origin: (f64, f64),
    texture: Texture,
    motion: Motion,
    blink: Option<(f64, f64, f64, [f64; 3], [f64; 3], usize)>,
}

impl ShotScene {
    fn position(&self, f: usize) -> (f64, f64) {
        let (x0, y0) = self.origin;
        let f = f as f64;
        match self.motion {
            Motion::Static => (x0, y0),
            Motion::Constant { vx, vy } => (x0 + vx * f, y0 + vy * f),
            Motion::Reversal { vx, vy, at } => {
                let s = at as f64 - (at as f64 - f).abs();
                (x0 + vx * s, y0 + vy * s)
            }
        }
    }

    /// Smooth backdrop blending two dark colours.
    fn background(&self, x: f64, y: f64, size: f64) -> [f64; 3] {
        let (a, b, angle, freq) = self.bg;
        let u = (x * angle.cos() + y * angle.sin()) / size;
        lerp(a, b, 0.5 + 0.5 * (2.0 * std::f64::consts::PI * freq * u).sin())
    }

    /// Object colour at a point inside the square, in object coordinates.
    fn object(&self, u: f64, v: f64) -> [f64; 3] {
        let dark = self.color.map(|c| DARK_TONE * c);
        let first = match self.texture {
            Texture::Checker => ((u / CHECKER).floor() as i64 + (v / CHECKER).floor() as i64) % 2 == 0,
            Texture::Halves => u < self.side / 2.0,
        };
        if first {
            self.color
        } else {
            dark
        }
    }

    fn render(&self, f: usize, size: usize, rng: &mut ChaCha8Rng, noise: f64) -> Frame {
        const SS: usize = 4;
        let (ox, oy) = self.position(f);
        let mut px = Vec::with_capacity(size * size);
        for y in 0..size {
            for x in 0..size {
                let (xf, yf) = (x as f64, y as f64);
                let near = xf + 1.0 >= ox && xf <= ox + self.side && yf + 1.0 >= oy && yf <= oy + self.side;
                let mut c = if near {
                    // supersample the object's edges and texture
                    let mut acc = [0.0; 3];
                    for sy in 0..SS {
                        for sx in 0..SS {
                            let (px_, py_) = (xf + (sx as f64 + 0.5) / SS as f64, yf + (sy as f64 + 0.5) / SS as f64);
                            let (u, v) = (px_ - ox, py_ - oy);
                            let s = if (0.0..self.side).contains(&u) && (0.0..self.side).contains(&v) {
                                self.object(u, v)
                            } else {
                                self.background(px_, py_, size as f64)
                            };
                            (0..3).for_each(|k| acc[k] += s[k]);
                        }
                    }
                    acc.map(|a| a / (SS * SS) as f64)
                } else {
                    self.background(xf + 0.5, yf + 0.5, size as f64)
                };
                if let Some((bx, by, bs, before, after, at)) = self.blink {
                    if xf >= bx && xf < bx + bs && yf >= by && yf < by + bs {
                        c = if f < at { before } else { after };
                    }
                }
                let n = |rng: &mut ChaCha8Rng| if noise > 0.0 { rng.random_range(-noise..=noise) } else { 0.0 };
                px.push([0, 1, 2].map(|k| (c[k] + n(rng)).round().clamp(0.0, 255.0) as u8));
            }
        }
        Frame::from_rgb(size, size, px).expect("synthetic frame dimensions")
    }
}

fn pick_distinct(rng: &mut ChaCha8Rng, n: usize, avoid: &[usize]) -> usize {
    loop {
        let i = rng.random_range(0..n);
        if !avoid.contains(&i) {
            return i;
        }
    }
}

fn direction(rng: &mut ChaCha8Rng, speed: f64) -> (f64, f64) {
    let a = rng.random_range(0.0..2.0 * std::f64::consts::PI);
    (speed * a.cos(), speed * a.sin())
}

/// Places the origin so the object stays inside the frame over the whole shot.
fn fit_origin(rng: &mut ChaCha8Rng, size: f64, side: f64, path: &[(f64, f64)]) -> (f64, f64) {
    let (min_dx, max_dx) = path.iter().fold((0.0f64, 0.0f64), |(a, b), p| (a.min(p.0), b.max(p.0)));
    let (min_dy, max_dy) = path.iter().fold((0.0f64, 0.0f64), |(a, b), p| (a.min(p.1), b.max(p.1)));
    let pad = 2.0;
    let lo_x = pad - min_dx;
    let hi_x = (size - side - pad - max_dx).max(lo_x);
    let lo_y = pad - min_dy;
    let hi_y = (size - side - pad - max_dy).max(lo_y);
    (rng.random_range(lo_x..=hi_x), rng.random_range(lo_y..=hi_y))
}

/// Bounding box (x0, y0, x1, y1) of the object over the whole shot.
fn swept_box(scene: &ShotScene, path: &[(f64, f64)]) -> (f64, f64, f64, f64) {
    let (ox, oy) = scene.origin;
    path.iter().fold((f64::MAX, f64::MAX, f64::MIN, f64::MIN), |b, &(dx, dy)| {
        let (x, y) = (ox + dx, oy + dy);
        (b.0.min(x), b.1.min(y), b.2.max(x + scene.side), b.3.max(y + scene.side))
    })
}

/// Renders clip `index` of the corpus. Each clip draws from its own seeded
/// stream, so any subset regenerates identically.
pub fn generate_clip(params: &SynthParams, index: usize) -> Result<SynthClip> {
    params.check()?;
    let label = if index < params.positives { Label::Positive } else { Label::Negative };
    let video_id = params.video_id(index);
    let mut rng = crate::seed::rng(crate::seed::derive(params.seed, "synth/clip", index as u64));
    let shots = rng.random_range(1..=params.max_shots);
    let size = params.size as f64;
    let mut frames = Vec::new();
    let mut truths = Vec::new();
    let mut prev_bg: Vec<usize> = Vec::new();
    let checker_p = match label {
        Label::Positive => params.texture_bias,
        Label::Negative => 1.0 - params.texture_bias,
    };
    for _ in 0..shots {
        let len = params.shot_frames;
        let bg_a = pick_distinct(&mut rng, BACKDROPS.len(), &prev_bg);
        let bg_b = pick_distinct(&mut rng, BACKDROPS.len(), &[prev_bg.as_slice(), &[bg_a]].concat());
        prev_bg = vec![bg_a, bg_b];
        let color = rng.random_range(0..PALETTE.len());
        let side = rng.random_range(16.0..20.0);
        let texture = if rng.random_bool(checker_p) { Texture::Checker } else { Texture::Halves };
        let motion = match label {
            Label::Positive => {
                let speed = rng.random_range(1.4..1.8);
                let (vx, vy) = direction(&mut rng, speed);
                let at = rng.random_range(len * 3 / 8..=len * 5 / 8);
                Motion::Reversal { vx, vy, at }
            }
            Label::Negative => {
                if rng.random_bool(0.5) {
                    Motion::Static
                } else {
                    let speed = rng.random_range(0.6..1.2);
                    let (vx, vy) = direction(&mut rng, speed);
                    Motion::Constant { vx, vy }
                }
            }
        };
        let mut scene = ShotScene {
            bg: (BACKDROPS[bg_a], BACKDROPS[bg_b], rng.random_range(0.0..std::f64::consts::PI), rng.random_range(0.3..0.8)),
            color: PALETTE[color],
            side,
            origin: (0.0, 0.0),
            texture,
            motion,
            blink: None,
        };
        let path: Vec<(f64, f64)> = (0..len).map(|f| scene.position(f)).collect();
        scene.origin = fit_origin(&mut rng, size, side, &path);
        let swept = swept_box(&scene, &path);
        let blink_at = if rng.random_bool(params.blink_probability) {
            let bs = rng.random_range(6.0..9.0f64).floor();
            let spot = (0..64).find_map(|_| {
                let bx = rng.random_range(2.0..size - bs - 2.0).floor();
                let by = rng.random_range(2.0..size - bs - 2.0).floor();
                let clear = bx + bs + BLINK_CLEARANCE <= swept.0
                    || bx >= swept.2 + BLINK_CLEARANCE
                    || by + bs + BLINK_CLEARANCE <= swept.1
                    || by >= swept.3 + BLINK_CLEARANCE;
                clear.then_some((bx, by))
            });
            let before = rng.random_range(0..PALETTE.len());
            let after = pick_distinct(&mut rng, PALETTE.len(), &[before]);
            let at = rng.random_range(len * 3 / 8..=len * 5 / 8);
            spot.map(|(bx, by)| {
                scene.blink = Some((bx, by, bs, PALETTE[before], PALETTE[after], at));
                at
            })
        } else {
            None
        };
        let start = frames.len();
        for f in 0..len {
            frames.push(scene.render(f, params.size, &mut rng, params.noise));
        }
        truths.push(ShotTruth {
            start_frame: start,
            end_frame: frames.len() - 1,
            texture,
            motion,
            blink_at,
        });
    }
    Ok(SynthClip {
        video: FrameSequence::new(video_id.clone(), params.frame_rate, frames)?,
        truth: ClipTruth {
            video_id,
            label,
            shots: truths,
        },
    })
}

pub fn synth_manifest(params: &SynthParams) -> Result<DatasetManifest> {
    let entries = (0..params.len())
        .map(|i| {
            let id = params.video_id(i);
            ManifestEntry {
                path: Path::new("videos").join(&id),
                label: if i < params.positives { Label::Positive } else { Label::Negative },
                video_id: id,
                subgroup: None,
            }
        })
        .collect();
    DatasetManifest::new(entries)
}

/// Writes `videos/<id>/frame_*.ppm`, `manifest.csv` and `truth.json` under
/// `dir`, generating clips in parallel.
pub fn write_corpus(params: &SynthParams, dir: &Path) -> Result<DatasetManifest> {
    use rayon::prelude::*;
    let manifest = synth_manifest(params)?;
    let truths = (0..params.len())
        .into_par_iter()
        .map(|i| {
            let clip = generate_clip(params, i)?;
            write_pnm_dir(&clip.video, &dir.join("videos").join(&clip.truth.video_id))?;
            Ok(clip.truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let m = dir.join("manifest.csv");
    fs::write(&m, manifest.to_csv()).map_err(|e| Error::io(&m, e))?;
    let t = dir.join("truth.json");
    let json = serde_json::to_string_pretty(&truths).map_err(|e| Error::Invariant(e.to_string()))?;
    fs::write(&t, json).map_err(|e| Error::io(&t, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::segmentation::{detect_shots, DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN};

    fn small(n: usize) -> SynthParams {
        SynthParams {
            positives: n,
            negatives: n,
            ..SynthParams::default()
        }
    }

    #[test]
    fn clips_regenerate_identically() {
        let p = small(3);
        for i in [0, 4] {
            assert_eq!(generate_clip(&p, i).unwrap(), generate_clip(&p, i).unwrap());
        }
        let other = SynthParams { seed: 2, ..p.clone() };
        assert_ne!(generate_clip(&p, 0).unwrap().video, generate_clip(&other, 0).unwrap().video);
    }

    #[test]
    fn truth_matches_labels_and_frames() {
        let p = small(6);
        for i in 0..p.len() {
            let clip = generate_clip(&p, i).unwrap();
            let label = if i < p.positives { Label::Positive } else { Label::Negative };
            assert_eq!(clip.truth.label, label);
            assert_eq!(clip.video.len(), clip.truth.shots.len() * p.shot_frames);
            for s in &clip.truth.shots {
                let reverses = matches!(s.motion, Motion::Reversal { .. });
                assert_eq!(reverses, label == Label::Positive);
            }
        }
    }

    /// The cut detector recovers the generated shot boundaries.
    #[test]
    fn detected_shots_match_truth() {
        let p = small(15);
        for i in 0..p.len() {
            let clip = generate_clip(&p, i).unwrap();
            let shots = detect_shots(&clip.video, DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN).unwrap();
            let got: Vec<(usize, usize)> = shots.iter().map(|s| (s.start_frame, s.end_frame)).collect();
            let want: Vec<(usize, usize)> = clip.truth.shots.iter().map(|s| (s.start_frame, s.end_frame)).collect();
            assert_eq!(got, want, "{}", clip.truth.video_id);
        }
    }

    #[test]
    fn certain_blinks_mostly_find_room() {
        let p = SynthParams {
            blink_probability: 1.0,
            ..small(5)
        };
        let shots: Vec<ShotTruth> = (0..p.len()).flat_map(|i| generate_clip(&p, i).unwrap().truth.shots).collect();
        let blinks = shots.iter().filter(|s| s.blink_at.is_some()).count();
        assert!(2 * blinks >= shots.len(), "{blinks} of {}", shots.len());
    }
}
