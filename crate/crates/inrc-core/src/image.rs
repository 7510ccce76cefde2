//! Pixel buffers in normalized `[0, 1]` RGB, plus PNG/PPM I/O and a seeded
//! procedural test-image generator.

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::rng::Xoshiro256StarStar;
use std::f64::consts::PI;
use std::path::Path;

/// H x W x 3 image with all channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be >= 1".into()));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::ShapeMismatch {
                context: "ImageBuffer::new",
                expected: format!("{} values ({width}x{height}x3)", width * height * 3),
                actual: format!("{} values", pixels.len()),
            });
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidConfig(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Training targets, one row per pixel in grid order.
    pub fn to_targets(&self) -> Matrix<f32> {
        Matrix {
            rows: self.pixel_count(),
            cols: 3,
            data: self.pixels.clone(),
        }
    }

    /// Builds an image from raw network outputs, clamping into `[0, 1]`.
    pub fn from_predictions(width: usize, height: usize, outputs: &Matrix<f32>) -> Result<Self> {
        if outputs.rows != width * height || outputs.cols != 3 {
            return Err(Error::ShapeMismatch {
                context: "ImageBuffer::from_predictions",
                expected: format!("{}x3 outputs", width * height),
                actual: format!("{}x{} outputs", outputs.rows, outputs.cols),
            });
        }
        let pixels = outputs.data.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        Self::new(width, height, pixels)
    }

    /// Central `size` x `size` crop; `size` of 0 or larger than the image
    /// returns the image unchanged.
    pub fn center_crop(&self, size: usize) -> ImageBuffer {
        if size == 0 || (size >= self.width && size >= self.height) {
            return self.clone();
        }
        let cw = size.min(self.width);
        let ch = size.min(self.height);
        let x0 = (self.width - cw) / 2;
        let y0 = (self.height - ch) / 2;
        let mut pixels = Vec::with_capacity(cw * ch * 3);
        for y in y0..y0 + ch {
            let start = (y * self.width + x0) * 3;
            pixels.extend_from_slice(&self.pixels[start..start + cw * 3]);
        }
        ImageBuffer {
            width: cw,
            height: ch,
            pixels,
        }
    }

    /// Reads a PNG or binary PPM (P6) file; 8-bit samples map to `[0, 1]`
    /// via division by 255.
    pub fn load(path: &Path) -> Result<Self> {
        let dynimg = image::open(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))?;
        let rgb = dynimg.to_rgb8();
        let (w, h) = (rgb.width() as usize, rgb.height() as usize);
        let pixels = rgb.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
        Self::new(w, h, pixels)
    }

    /// Writes the buffer as an 8-bit PNG, rounding each channel to the
    /// nearest of 256 levels.
    pub fn save_png(&self, path: &Path) -> Result<()> {
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        let img: image::RgbImage =
            image::ImageBuffer::from_raw(self.width as u32, self.height as u32, bytes)
                .expect("buffer length matches dimensions");
        img.save(path).map_err(|e| Error::Image(format!("{}: {e}", path.display())))
    }
}

/// Deterministic procedural test image: a smooth color ramp overlaid with
/// oriented sinusoidal textures (amplitude falling off with frequency, like
/// natural image spectra), Gaussian blobs and a few soft edges.
///
/// Used by tests and benchmarks so the repository does not depend on any
/// bundled photographs.
pub fn synthetic_test_image(seed: u64, size: usize) -> ImageBuffer {
    let mut rng = Xoshiro256StarStar::new(seed);
    let n = size * size;
    let mut acc = vec![0.0f64; n * 3];
    let coord = |i: usize| -> f64 {
        if size <= 1 {
            0.0
        } else {
            i as f64 / (size - 1) as f64
        }
    };

    // Per-channel smooth base ramp.
    for c in 0..3 {
        let a = rng.uniform(0.2, 1.0);
        let b = rng.uniform(0.2, 1.0);
        let ph = rng.uniform(0.0, 2.0 * PI);
        for y in 0..size {
            for x in 0..size {
                acc[(y * size + x) * 3 + c] = 0.5 + 0.15 * (2.0 * PI * (a * coord(x) + b * coord(y)) + ph).sin();
            }
        }
    }

    let add_texture = |rng: &mut Xoshiro256StarStar, acc: &mut [f64], f_lo: f64, f_hi: f64, amp_num: f64| {
        let f = rng.uniform(f_lo, f_hi);
        let th = rng.uniform(0.0, PI);
        let ph = rng.uniform(0.0, 2.0 * PI);
        let amp = amp_num / f.max(1.0);
        let (ux, uy) = (th.cos(), th.sin());
        let w = [rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0), rng.uniform(0.3, 1.0)];
        for y in 0..size {
            for x in 0..size {
                let t = amp * (2.0 * PI * f * (ux * coord(x) + uy * coord(y)) + ph).sin();
                let base = (y * size + x) * 3;
                for c in 0..3 {
                    acc[base + c] += t * w[c];
                }
            }
        }
    };

    // A dense low-to-mid band carries most of the energy, falling off with
    // frequency the way natural image spectra do; a couple of faint
    // higher-frequency components add fine grain.
    for _ in 0..100 {
        let amp_num = rng.uniform(0.08, 0.16);
        add_texture(&mut rng, &mut acc, 0.5, 10.0, amp_num);
    }
    for _ in 0..3 {
        add_texture(&mut rng, &mut acc, 10.0, 24.0, 0.1);
    }

    // Gaussian blobs.
    for _ in 0..6 {
        let cx = rng.uniform(0.1, 0.9);
        let cy = rng.uniform(0.1, 0.9);
        let r = rng.uniform(0.06, 0.22);
        let col = [
            rng.uniform(-0.35, 0.35),
            rng.uniform(-0.35, 0.35),
            rng.uniform(-0.35, 0.35),
        ];
        for y in 0..size {
            for x in 0..size {
                let dx = coord(x) - cx;
                let dy = coord(y) - cy;
                let g = (-(dx * dx + dy * dy) / (2.0 * r * r)).exp();
                let base = (y * size + x) * 3;
                for c in 0..3 {
                    acc[base + c] += g * col[c];
                }
            }
        }
    }

    // Soft oriented edges.
    for _ in 0..2 {
        let phi = rng.uniform(0.0, 2.0 * PI);
        let (a, b) = (phi.cos(), phi.sin());
        let off = rng.uniform(-0.4, 0.4);
        let col = [
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
            rng.uniform(-1.0, 1.0),
        ];
        for y in 0..size {
            for x in 0..size {
                let e = ((a * (coord(x) - 0.5) + b * (coord(y) - 0.5) - off) * 10.0).tanh();
                let base = (y * size + x) * 3;
                for c in 0..3 {
                    acc[base + c] += 0.1 * e * col[c];
                }
            }
        }
    }

    let pixels = acc.iter().map(|&v| v.clamp(0.0, 1.0) as f32).collect();
    ImageBuffer {
        width: size,
        height: size,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructor_validates_shape_and_range() {
        assert!(ImageBuffer::new(2, 2, vec![0.0; 12]).is_ok());
        assert!(ImageBuffer::new(2, 2, vec![0.0; 11]).is_err());
        let mut bad = vec![0.0; 12];
        bad[3] = 1.5;
        assert!(ImageBuffer::new(2, 2, bad).is_err());
    }

    #[test]
    fn center_crop_picks_the_middle() {
        let mut pixels = vec![0.0f32; 4 * 4 * 3];
        // mark pixel (1,1) .. (2,2) region
        for y in 1..3 {
            for x in 1..3 {
                pixels[(y * 4 + x) * 3] = 1.0;
            }
        }
        let img = ImageBuffer::new(4, 4, pixels).unwrap();
        let crop = img.center_crop(2);
        assert_eq!(crop.width(), 2);
        assert_eq!(crop.height(), 2);
        assert!(crop.pixels().chunks(3).all(|p| p[0] == 1.0));
        // crop of 0 means "no crop"
        assert_eq!(img.center_crop(0), img);
    }

    #[test]
    fn synthetic_image_is_deterministic_and_in_range() {
        let a = synthetic_test_image(5, 32);
        let b = synthetic_test_image(5, 32);
        let c = synthetic_test_image(6, 32);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.pixels().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn png_round_trip_preserves_quantized_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.png");
        let img = synthetic_test_image(3, 16);
        img.save_png(&path).unwrap();
        let back = ImageBuffer::load(&path).unwrap();
        assert_eq!(back.width(), 16);
        assert_eq!(back.height(), 16);
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-6);
        }
    }

    #[test]
    fn ppm_p6_is_readable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.ppm");
        let mut data = b"P6\n2 2\n255\n".to_vec();
        data.extend_from_slice(&[255, 0, 0, 0, 255, 0, 0, 0, 255, 128, 128, 128]);
        std::fs::write(&path, data).unwrap();
        let img = ImageBuffer::load(&path).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.get(0, 0), [1.0, 0.0, 0.0]);
        assert_eq!(img.get(1, 0), [0.0, 1.0, 0.0]);
        assert!((img.get(1, 1)[0] - 128.0 / 255.0).abs() < 1e-6);
    }
}
