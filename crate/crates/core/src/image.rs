use crate::error::{Error, Result};

/// Row-major, channel-interleaved image with unit-interval samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl ImageBuffer {
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn from_vec(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidArgument(format!(
                "images have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width}x{channels} image needs {} samples, got {}",
                height * width * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("image samples"));
        }
        Ok(Self {
            height,
            width,
            channels,
            data: data.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        let c = self.channels;
        self.data[(row * self.width + col) * c + ch] = v;
    }

    pub fn same_size(&self, other: &ImageBuffer) -> bool {
        self.height == other.height && self.width == other.width
    }

    /// Channel mean per pixel.
    pub fn to_gray(&self) -> ImageBuffer {
        if self.channels == 1 {
            return self.clone();
        }
        let data = self
            .data
            .chunks_exact(self.channels)
            .map(|px| px.iter().sum::<f64>() / self.channels as f64)
            .collect();
        ImageBuffer {
            height: self.height,
            width: self.width,
            channels: 1,
            data,
        }
    }

    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        ImageBuffer {
            height: self.height,
            width: self.width,
            channels: 3,
            data: self.data.iter().flat_map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len().max(1) as f64
    }

    /// Central crop keeping `fraction` of each side.
    pub fn center_crop(&self, fraction: f64) -> ImageBuffer {
        let ch = ((self.height as f64 * fraction).round() as usize).clamp(1, self.height);
        let cw = ((self.width as f64 * fraction).round() as usize).clamp(1, self.width);
        let r0 = (self.height - ch) / 2;
        let c0 = (self.width - cw) / 2;
        let mut out = ImageBuffer::filled(ch, cw, self.channels, 0.0);
        for r in 0..ch {
            for c in 0..cw {
                for k in 0..self.channels {
                    out.set(r, c, k, self.get(r0 + r, c0 + c, k));
                }
            }
        }
        out
    }

    /// Area-averaging resize to a grayscale `side × side` image.
    pub fn gray_thumbnail(&self, side: usize) -> ImageBuffer {
        let g = self.to_gray();
        let mut out = ImageBuffer::filled(side, side, 1, 0.0);
        for r in 0..side {
            let y0 = r as f64 * g.height as f64 / side as f64;
            let y1 = (r + 1) as f64 * g.height as f64 / side as f64;
            for c in 0..side {
                let x0 = c as f64 * g.width as f64 / side as f64;
                let x1 = (c + 1) as f64 * g.width as f64 / side as f64;
                let mut acc = 0.0;
                let mut wsum = 0.0;
                for yy in (y0.floor() as usize)..(y1.ceil() as usize).min(g.height) {
                    let wy = (y1.min(yy as f64 + 1.0) - y0.max(yy as f64)).max(0.0);
                    for xx in (x0.floor() as usize)..(x1.ceil() as usize).min(g.width) {
                        let wx = (x1.min(xx as f64 + 1.0) - x0.max(xx as f64)).max(0.0);
                        acc += wx * wy * g.get(yy, xx, 0);
                        wsum += wx * wy;
                    }
                }
                out.set(r, c, 0, if wsum > 0.0 { acc / wsum } else { 0.0 });
            }
        }
        out
    }
}

/// Per-pixel boolean flags (document interior, validity).
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub height: usize,
    pub width: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![true; height * width],
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}
