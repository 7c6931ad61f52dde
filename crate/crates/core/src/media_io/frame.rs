use crate::error::{Error, Result};

/// BT.601 luma of an 8-bit RGB triplet, scaled to [0, 1].
#[inline]
pub fn luma_of(rgb: [u8; 3]) -> f64 {
    (0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64) / 255.0
}

/// One decoded picture: interleaved 8-bit RGB plus the derived luma plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    rgb: Vec<[u8; 3]>,
    luma: Vec<f64>,
}

impl Frame {
    pub fn from_rgb(width: usize, height: usize, rgb: Vec<[u8; 3]>) -> Result<Frame> {
        if width == 0 || height == 0 {
            return Err(Error::Format(format!("empty frame {width}x{height}")));
        }
        if rgb.len() != width * height {
            return Err(Error::Format(format!(
                "frame {width}x{height} needs {} pixels, got {}",
                width * height,
                rgb.len()
            )));
        }
        let luma = rgb.iter().copied().map(luma_of).collect();
        Ok(Frame {
            width,
            height,
            rgb,
            luma,
        })
    }

    /// Frame filled with a single color.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Frame {
        Frame::from_rgb(width, height, vec![rgb; width * height]).expect("non-empty frame")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Row-major pixels.
    pub fn rgb(&self) -> &[[u8; 3]] {
        &self.rgb
    }

    /// Row-major luma in [0, 1].
    pub fn luma(&self) -> &[f64] {
        &self.luma
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.rgb[y * self.width + x]
    }

    #[inline]
    pub fn luma_at(&self, x: usize, y: usize) -> f64 {
        self.luma[y * self.width + x]
    }
}

/// The decoded frames of one video, all sharing one size.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    video_id: String,
    width: usize,
    height: usize,
    frame_rate: f64,
    frames: Vec<Frame>,
}

impl FrameSequence {
    pub fn new(video_id: impl Into<String>, frame_rate: f64, frames: Vec<Frame>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Format("video has zero frames".into()))?;
        let (width, height) = (first.width, first.height);
        if let Some((i, f)) = frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.width != width || f.height != height)
        {
            return Err(Error::Format(format!(
                "frame {i} is {}x{} but frame 0 is {width}x{height}",
                f.width, f.height
            )));
        }
        Ok(FrameSequence {
            video_id: video_id.into(),
            width,
            height,
            frame_rate,
            frames,
        })
    }

    pub fn video_id(&self) -> &str {
        &self.video_id
    }

    pub fn with_video_id(mut self, video_id: impl Into<String>) -> Self {
        self.video_id = video_id.into();
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, index: usize) -> &Frame {
        &self.frames[index]
    }

    /// Copy of the inclusive frame range `[start, end]` as its own sequence.
    pub fn slice(&self, start: usize, end: usize) -> FrameSequence {
        FrameSequence {
            video_id: self.video_id.clone(),
            width: self.width,
            height: self.height,
            frame_rate: self.frame_rate,
            frames: self.frames[start..=end].to_vec(),
        }
    }

    /// Same frames in reverse temporal order.
    pub fn reversed(&self) -> FrameSequence {
        let mut frames = self.frames.clone();
        frames.reverse();
        FrameSequence {
            frames,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_mixed_sizes_and_empty() {
        let a = Frame::filled(2, 2, [0, 0, 0]);
        let b = Frame::filled(3, 2, [0, 0, 0]);
        assert!(matches!(
            FrameSequence::new("v", 25.0, vec![a.clone(), b]),
            Err(Error::Format(_))
        ));
        assert!(matches!(
            FrameSequence::new("v", 25.0, vec![]),
            Err(Error::Format(_))
        ));
        assert_eq!(FrameSequence::new("v", 25.0, vec![a]).unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn luma_matches_affine_formula(r: u8, g: u8, b: u8) {
            let f = Frame::from_rgb(1, 1, vec![[r, g, b]]).unwrap();
            let want = 0.299 * (r as f64 / 255.0) + 0.587 * (g as f64 / 255.0) + 0.114 * (b as f64 / 255.0);
            prop_assert!((f.luma()[0] - want).abs() < 1e-12);
            prop_assert!((0.0..=1.0 + 1e-12).contains(&f.luma()[0]));
        }
    }
}
