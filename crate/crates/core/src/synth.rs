//! Synthetic test images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::GridImage;

pub const MIN_SIZE: usize = 8;

fn check_size(size: usize) -> Result<()> {
    if size < MIN_SIZE {
        return Err(Error::input(format!("image size must be at least {MIN_SIZE}, got {size}")));
    }
    Ok(())
}

/// Disc centred in a `size × size` frame; a pixel is foreground when its centre
/// lies within `radius`.
pub fn circle(size: usize, radius: f64) -> Result<GridImage> {
    check_size(size)?;
    let c = size as f64 / 2.0;
    let samples = (0..size * size)
        .map(|p| {
            let y = (p / size) as f64 + 0.5 - c;
            let x = (p % size) as f64 + 0.5 - c;
            if x * x + y * y <= radius * radius {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    GridImage::new(size, size, samples)
}

/// The noise-free two-blob mask behind [`two_blob`].
pub fn two_blob_mask(size: usize, seed: u64) -> Result<GridImage> {
    check_size(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    // One blob per half so they rarely touch.
    let blobs: Vec<(f64, f64, f64, f64)> = (0..2)
        .map(|k| {
            let rx = rng.random_range(0.12..0.2) * s;
            let ry = rng.random_range(0.12..0.2) * s;
            let cx = rng.random_range(0.3..0.7) * s;
            let lo = if k == 0 { 0.25 } else { 0.75 };
            let cy = (lo + rng.random_range(-0.05..0.05)) * s;
            (cx, cy, rx, ry)
        })
        .collect();
    let samples = (0..size * size)
        .map(|p| {
            let y = (p / size) as f64 + 0.5;
            let x = (p % size) as f64 + 0.5;
            let inside = blobs
                .iter()
                .any(|&(cx, cy, rx, ry)| ((x - cx) / rx).powi(2) + ((y - cy) / ry).powi(2) <= 1.0);
            if inside {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    GridImage::new(size, size, samples)
}

/// Two elliptic blobs plus Gaussian noise of standard deviation `noise`,
/// clamped to `[0, 1]`.
pub fn two_blob(size: usize, seed: u64, noise: f64) -> Result<GridImage> {
    let mut img = two_blob_mask(size, seed)?;
    add_gaussian_noise(&mut img, noise, seed.wrapping_add(1))?;
    Ok(img)
}

pub fn add_gaussian_noise(img: &mut GridImage, sigma: f64, seed: u64) -> Result<()> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::input(format!("noise level must be finite and non-negative, got {sigma}")));
    }
    if sigma == 0.0 {
        return Ok(());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("valid sigma");
    for v in &mut img.samples {
        *v = (*v + normal.sample(&mut rng)).clamp(0.0, 1.0);
    }
    Ok(())
}

/// 3×3 mean blur with zero padding.
pub fn blur_mean3(img: &GridImage) -> GridImage {
    let (w, h) = (img.width as isize, img.height as isize);
    let samples = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .map(|(r, c)| {
            let mut s = 0.0;
            for dr in -1..=1 {
                for dc in -1..=1 {
                    let (rr, cc) = (r + dr, c + dc);
                    if rr >= 0 && cc >= 0 && rr < h && cc < w {
                        s += img.samples[(rr * w + cc) as usize];
                    }
                }
            }
            s / 9.0
        })
        .collect();
    GridImage {
        width: img.width,
        height: img.height,
        samples,
    }
}

/// A seeded random binary image with smooth-ish structure: blurred noise,
/// thresholded at one half.
pub fn random_binary(width: usize, height: usize, seed: u64) -> GridImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = GridImage {
        width,
        height,
        samples: (0..width * height).map(|_| rng.random::<f64>()).collect(),
    };
    let b = blur_mean3(&noise);
    let mean = b.samples.iter().sum::<f64>() / b.samples.len().max(1) as f64;
    GridImage {
        width,
        height,
        samples: b.samples.iter().map(|&v| if v >= mean { 1.0 } else { 0.0 }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_pixel_count() {
        let img = circle(81, 30.0).unwrap();
        assert_eq!(img.samples.iter().filter(|&&v| v == 1.0).count(), 2821);
    }

    #[test]
    fn blobs_are_deterministic_and_binary_without_noise() {
        let a = two_blob(32, 5, 0.0).unwrap();
        assert!(a.is_binary());
        assert_eq!(a, two_blob(32, 5, 0.0).unwrap());
        assert_eq!(two_blob(32, 5, 0.2).unwrap(), two_blob(32, 5, 0.2).unwrap());
        assert!(a.samples.iter().any(|&v| v == 1.0));
    }

    #[test]
    fn small_sizes_are_rejected() {
        assert!(circle(7, 2.0).is_err());
        assert!(two_blob(4, 0, 0.0).is_err());
    }
}
