//! Lanczos resampling for preparing test corpora.
//!
//! Separable windowed-sinc interpolation with pixel-centre alignment, edge
//! replication, and kernel stretching when shrinking (antialiasing). Two
//! lobes (`a = 2`) is the default used to bring the 512×512 reference images
//! down to 256×256.

use std::f64::consts::PI;

use crate::imaging::PixelPlane;
use crate::predictor::quantise;

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn lanczos(x: f64, lobes: f64) -> f64 {
    if x.abs() < lobes {
        sinc(x) * sinc(x / lobes)
    } else {
        0.0
    }
}

// Row-stochastic weights mapping `src` samples to `dst` samples.
fn weights(src: usize, dst: usize, lobes: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = dst as f64 / src as f64;
    let stretch = scale.min(1.0);
    let support = lobes as f64 / stretch;
    (0..dst)
        .map(|i| {
            let centre = (i as f64 + 0.5) / scale - 0.5;
            let lo = (centre - support).floor() as isize;
            let hi = (centre + support).ceil() as isize;
            let mut taps: Vec<(usize, f64)> = Vec::new();
            for j in lo..=hi {
                let w = lanczos((centre - j as f64) * stretch, lobes as f64);
                if w == 0.0 {
                    continue;
                }
                let idx = j.clamp(0, src as isize - 1) as usize;
                match taps.iter_mut().find(|(k, _)| *k == idx) {
                    Some(t) => t.1 += w,
                    None => taps.push((idx, w)),
                }
            }
            let sum: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= sum);
            taps
        })
        .collect()
}

/// Resizes to `width`×`height` with a Lanczos kernel of `lobes` lobes.
pub fn lanczos_resize(img: &PixelPlane, width: usize, height: usize, lobes: usize) -> PixelPlane {
    let (sw, sh) = (img.width(), img.height());
    let horiz = weights(sw, width, lobes);
    let vert = weights(sh, height, lobes);
    let mut rows = vec![0f64; width * sh];
    for y in 0..sh {
        for (x, taps) in horiz.iter().enumerate() {
            rows[y * width + x] = taps.iter().map(|&(k, w)| w * img.get(y, k) as f64).sum();
        }
    }
    PixelPlane::from_fn(width, height, |y, x| {
        quantise(vert[y].iter().map(|&(k, w)| w * rows[k * width + x]).sum())
    })
}

/// The corpus convention: two-lobe Lanczos.
pub fn resize(img: &PixelPlane, width: usize, height: usize) -> PixelPlane {
    lanczos_resize(img, width, height, 2)
}
