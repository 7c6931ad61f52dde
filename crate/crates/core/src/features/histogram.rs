//! Global color histograms.

use std::f64::consts::PI;

use crate::media_io::Frame;

/// Quantization levels per RGB axis; the histogram has `r * g * b` cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RgbBins {
    pub r: usize,
    pub g: usize,
    pub b: usize,
}

impl RgbBins {
    /// 4 x 4 x 4 = 64 cells.
    pub const BINS_64: RgbBins = RgbBins { r: 4, g: 4, b: 4 };
    /// 8 x 8 x 4 = 256 cells.
    pub const BINS_256: RgbBins = RgbBins { r: 8, g: 8, b: 4 };

    pub fn uniform(levels: usize) -> RgbBins {
        RgbBins {
            r: levels,
            g: levels,
            b: levels,
        }
    }

    /// The 64- or 256-cell partition for a declared bin count.
    pub fn for_cells(cells: usize) -> Option<RgbBins> {
        match cells {
            64 => Some(Self::BINS_64),
            256 => Some(Self::BINS_256),
            _ => None,
        }
    }

    pub fn cells(&self) -> usize {
        self.r * self.g * self.b
    }

    #[inline]
    pub fn cell_of(&self, px: [u8; 3]) -> usize {
        let q = |v: u8, levels: usize| v as usize * levels / 256;
        (q(px[0], self.r) * self.g + q(px[1], self.g)) * self.b + q(px[2], self.b)
    }
}

/// L1-normalized histogram over quantized RGB cells.
pub fn rgb_histogram(frame: &Frame, bins: RgbBins) -> Vec<f64> {
    let mut hist = vec![0.0; bins.cells()];
    for &px in frame.rgb() {
        hist[bins.cell_of(px)] += 1.0;
    }
    let n = frame.rgb().len() as f64;
    hist.iter_mut().for_each(|h| *h /= n);
    hist
}

/// Pixels whose HSV saturation falls below this carry no hue.
pub const ACHROMATIC_SATURATION: f64 = 0.05;

/// Hexcone hue in degrees `[0, 360)`, or `None` for achromatic pixels.
pub fn hue_degrees(px: [u8; 3]) -> Option<f64> {
    let [r, g, b] = px.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if max <= 0.0 || delta / max < ACHROMATIC_SATURATION {
        return None;
    }
    let h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    Some(if h < 0.0 { h + 360.0 } else { h })
}

/// Hue in radians `[0, 2π)`.
pub fn hue_radians(px: [u8; 3]) -> Option<f64> {
    hue_degrees(px).map(|d| d * PI / 180.0)
}

/// L1-normalized hue histogram of an arbitrary pixel collection.
/// Achromatic pixels are skipped; if none remain the histogram is uniform.
pub fn hue_histogram_of(pixels: impl IntoIterator<Item = [u8; 3]>, bins: usize) -> Vec<f64> {
    assert!(bins >= 1, "hue histogram needs at least one bin");
    let mut hist = vec![0.0; bins];
    let mut counted = 0usize;
    for px in pixels {
        if let Some(h) = hue_degrees(px) {
            let bin = ((h * bins as f64 / 360.0) as usize).min(bins - 1);
            hist[bin] += 1.0;
            counted += 1;
        }
    }
    if counted == 0 {
        return vec![1.0 / bins as f64; bins];
    }
    hist.iter_mut().for_each(|h| *h /= counted as f64);
    hist
}

pub fn hue_histogram(frame: &Frame, bins: usize) -> Vec<f64> {
    hue_histogram_of(frame.rgb().iter().copied(), bins)
}

/// L1 distance between two histograms of equal length.
pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    fn frame(w: usize, h: usize, px: Vec<[u8; 3]>) -> Frame {
        Frame::from_rgb(w, h, px).unwrap()
    }

    #[test]
    fn black_frame_fills_first_cell() {
        let h = rgb_histogram(&Frame::filled(5, 3, [0, 0, 0]), RgbBins::BINS_64);
        assert_eq!(h.len(), 64);
        assert_eq!(h[0], 1.0);
        assert!(h[1..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn half_red_half_blue() {
        let mut px = vec![[255, 0, 0]; 8];
        px.extend(vec![[0, 0, 255]; 8]);
        let h = rgb_histogram(&frame(4, 4, px), RgbBins::BINS_64);
        // red -> (3,0,0) = 48, blue -> (0,0,3) = 3
        assert_eq!(h[48], 0.5);
        assert_eq!(h[3], 0.5);
        assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_counted_4x4_frame() {
        // Each level spans 64 values: 0..=63 -> 0, 64..=127 -> 1, 128..=191 -> 2, 192..=255 -> 3.
        let px = vec![
            [0, 0, 0], [63, 63, 63], [64, 0, 0], [255, 255, 255],
            [128, 64, 200], [128, 64, 200], [191, 127, 192], [10, 200, 90],
            [0, 0, 0], [0, 0, 0], [255, 0, 255], [64, 0, 0],
            [255, 255, 255], [192, 192, 192], [127, 128, 129], [70, 130, 250],
        ];
        // Hand count by (r,g,b) level triple:
        //   (0,0,0) x4, (1,0,0) x2, (3,3,3) x3, (2,1,3) x3, (0,3,1) x1,
        //   (3,0,3) x1, (1,2,2) x1, (1,2,3) x1
        let mut want = vec![0.0; 64];
        let idx = |r: usize, g: usize, b: usize| (r * 4 + g) * 4 + b;
        for (cell, count) in [
            (idx(0, 0, 0), 4.0),
            (idx(1, 0, 0), 2.0),
            (idx(3, 3, 3), 3.0),
            (idx(2, 1, 3), 3.0),
            (idx(0, 3, 1), 1.0),
            (idx(3, 0, 3), 1.0),
            (idx(1, 2, 2), 1.0),
            (idx(1, 2, 3), 1.0),
        ] {
            want[cell] = count / 16.0;
        }
        assert_eq!(rgb_histogram(&frame(4, 4, px), RgbBins::BINS_64), want);
    }

    #[test]
    fn bins_256_partition() {
        assert_eq!(RgbBins::BINS_256.cells(), 256);
        assert_eq!(RgbBins::BINS_256.cell_of([255, 255, 255]), 255);
        assert_eq!(RgbBins::BINS_256.cell_of([32, 0, 0]), 32);
    }

    #[test]
    fn pure_red_hue_is_bin_zero() {
        let h = hue_histogram(&Frame::filled(3, 3, [200, 0, 0]), 256);
        assert_eq!(h[0], 1.0);
    }

    #[test]
    fn gray_frame_is_uniform() {
        let h = hue_histogram(&Frame::filled(3, 3, [90, 90, 90]), 16);
        assert!(h.iter().all(|&v| v == 1.0 / 16.0));
    }

    #[test]
    fn red_green_three_to_one() {
        // red has hue 0, green hue 120 degrees = 2π/3; with 12 bins of 30
        // degrees they land in bins 0 and 4.
        let px = vec![[255, 0, 0], [255, 0, 0], [255, 0, 0], [0, 255, 0]];
        let h = hue_histogram(&frame(2, 2, px), 12);
        assert_eq!(h[0], 0.75);
        assert_eq!(h[4], 0.25);
        assert!((hue_radians([0, 255, 0]).unwrap() - 2.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn achromatic_pixels_are_excluded() {
        let px = vec![[255, 0, 0], [40, 40, 40], [255, 255, 255], [100, 98, 99]];
        let h = hue_histogram(&frame(2, 2, px), 8);
        assert_eq!(h[0], 1.0);
    }

    proptest! {
        #[test]
        fn histograms_normalized_and_permutation_invariant(
            px in proptest::collection::vec(any::<[u8; 3]>(), 16),
            seed: u64,
        ) {
            let f = frame(4, 4, px.clone());
            let mut shuffled = px;
            shuffled.shuffle(&mut crate::seed::rng(seed));
            let g = frame(4, 4, shuffled);
            for bins in [RgbBins::BINS_64, RgbBins::BINS_256] {
                let h = rgb_histogram(&f, bins);
                prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(h.iter().all(|&v| v >= 0.0));
                prop_assert_eq!(h, rgb_histogram(&g, bins));
            }
            let h = hue_histogram(&f, 256);
            prop_assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert_eq!(h, hue_histogram(&g, 256));
        }
    }
}
