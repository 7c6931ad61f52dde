use crate::features::plane::gaussian_kernel;
use crate::media_io::FrameSequence;

/// Dense `t x h x w` real volume, indexed `[(t * h + y) * w + x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    pub w: usize,
    pub h: usize,
    pub t: usize,
    pub data: Vec<f64>,
}

impl Volume {
    pub fn zeros(w: usize, h: usize, t: usize) -> Volume {
        Volume {
            w,
            h,
            t,
            data: vec![0.0; w * h * t],
        }
    }

    pub fn luma(video: &FrameSequence) -> Volume {
        let mut data = Vec::with_capacity(video.width() * video.height() * video.len());
        for f in video.frames() {
            data.extend_from_slice(f.luma());
        }
        Volume {
            w: video.width(),
            h: video.height(),
            t: video.len(),
            data,
        }
    }

    #[inline]
    pub fn idx(&self, x: usize, y: usize, t: usize) -> usize {
        (t * self.h + y) * self.w + x
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, t: usize) -> f64 {
        self.data[self.idx(x, y, t)]
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.w * self.h;
        &self.data[t * n..(t + 1) * n]
    }

    /// Separable Gaussian smoothing with standard deviations `sigma`
    /// (spatial) and `tau` (temporal), kernels truncated at three standard
    /// deviations, replicated borders.
    pub fn smooth(&self, sigma: f64, tau: f64) -> Volume {
        let mut v = self.clone();
        if sigma > 0.0 {
            let k = gaussian_kernel(sigma);
            v = v.convolve_axis(&k, 0);
            v = v.convolve_axis(&k, 1);
        }
        if tau > 0.0 {
            v = v.convolve_axis(&gaussian_kernel(tau), 2);
        }
        v
    }

    fn convolve_axis(&self, kernel: &[f64], axis: usize) -> Volume {
        let r = (kernel.len() / 2) as isize;
        let (len, stride) = match axis {
            0 => (self.w, 1),
            1 => (self.h, self.w),
            _ => (self.t, self.w * self.h),
        };
        let mut out = vec![0.0; self.data.len()];
        let last = len as isize - 1;
        for (i, o) in out.iter_mut().enumerate() {
            let pos = (i / stride) % len;
            let base = i - pos * stride;
            let mut acc = 0.0;
            for (k, &kv) in kernel.iter().enumerate() {
                let p = (pos as isize + k as isize - r).clamp(0, last) as usize;
                acc += kv * self.data[base + p * stride];
            }
            *o = acc;
        }
        Volume {
            data: out,
            ..*self
        }
    }

    /// Central differences along x, y and t; one-sided halves at borders.
    pub fn gradients(&self) -> [Volume; 3] {
        let mut gx = Volume::zeros(self.w, self.h, self.t);
        let mut gy = gx.clone();
        let mut gt = gx.clone();
        for t in 0..self.t {
            let (tp, tn) = (t.saturating_sub(1), (t + 1).min(self.t - 1));
            for y in 0..self.h {
                let (yp, yn) = (y.saturating_sub(1), (y + 1).min(self.h - 1));
                for x in 0..self.w {
                    let (xp, xn) = (x.saturating_sub(1), (x + 1).min(self.w - 1));
                    let i = self.idx(x, y, t);
                    gx.data[i] = 0.5 * (self.at(xn, y, t) - self.at(xp, y, t));
                    gy.data[i] = 0.5 * (self.at(x, yn, t) - self.at(x, yp, t));
                    gt.data[i] = 0.5 * (self.at(x, y, tn) - self.at(x, y, tp));
                }
            }
        }
        [gx, gy, gt]
    }
}
