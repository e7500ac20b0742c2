use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{error_stats, psnr, ssim, ErrorDistribution, ErrorStats};
use crate::bitstream::BitStream;
use crate::codec::{encode, estimate_capacity, StegoParams};
use crate::error::Result;
use crate::imaging::{Parity, PixelPlane};
use crate::overflow::{preprocess, Theta};

/// Seeded pseudo-random message of `bits` bits.
pub fn random_message(bits: usize, seed: u64) -> BitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..bits).map(|_| rng.gen::<bool>()).collect()
}

/// First-layer (white query) prediction errors on the pre-processed cover.
pub fn first_layer_errors(x: &PixelPlane, params: &StegoParams) -> Result<ErrorDistribution> {
    let (processed, _) = preprocess(x, params.theta);
    let y = params.predictor.predict(&processed, Parity::White, params.init)?;
    Ok(ErrorDistribution::from_errors(
        Parity::White
            .coords(x.width(), x.height())
            .map(|(i, j)| processed.get(i, j) as i32 - y.get(i, j) as i32),
    ))
}

/// Per-image predictive accuracy and error statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageAnalysis {
    /// PSNR of the first-layer predicted image against the cover, whole image.
    pub predicted_psnr: f64,
    pub predicted_ssim: f64,
    pub stats: ErrorStats,
    /// Conservative embedding rate at `params.theta`.
    pub capacity_bpp: f64,
}

pub fn analyze_image(x: &PixelPlane, params: &StegoParams) -> Result<ImageAnalysis> {
    let predicted = params.predictor.predict(x, Parity::White, params.init)?.into_plane();
    let errors = first_layer_errors(x, params)?;
    Ok(ImageAnalysis {
        predicted_psnr: psnr(x, &predicted)?,
        predicted_ssim: ssim(x, &predicted)?,
        stats: error_stats(&errors)?,
        capacity_bpp: estimate_capacity(x, params)?.bpp(),
    })
}

/// One point of a rate-distortion sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RdRow {
    pub theta: Theta,
    pub message_bits: usize,
    pub bpp: f64,
    pub psnr: f64,
    pub ssim: f64,
}

/// Embeds seeded random messages of `k/steps` of the conservative capacity,
/// `k = 0..=steps`, for every θ in `thetas`. The messages for one θ are
/// prefixes of a single random stream.
pub fn rd_curve(x: &PixelPlane, thetas: &[Theta], params: &StegoParams, steps: usize, seed: u64) -> Result<Vec<RdRow>> {
    let steps = steps.max(1);
    let mut rows = Vec::with_capacity(thetas.len() * (steps + 1));
    for &theta in thetas {
        let params = StegoParams { theta, ..params.clone() };
        let capacity = estimate_capacity(x, &params)?.message_bits;
        let full = random_message(capacity, seed ^ theta.get() as u64);
        for k in 0..=steps {
            let n = capacity * k / steps;
            let message = BitStream::from_bits(full.bits()[..n].iter().copied());
            let stego = encode(x, &message, &params)?;
            rows.push(RdRow {
                theta,
                message_bits: n,
                bpp: n as f64 / x.len() as f64,
                psnr: psnr(x, &stego)?,
                ssim: ssim(x, &stego)?,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_messages_are_reproducible() {
        assert_eq!(random_message(500, 7), random_message(500, 7));
        assert_ne!(random_message(500, 7), random_message(500, 8));
        let ones = random_message(100_000, 1).bits().iter().filter(|&&b| b).count();
        assert!((49_000..51_000).contains(&ones));
    }

    #[test]
    fn rd_rows_respect_distortion_bound() {
        let x = PixelPlane::from_fn(48, 48, |i, j| (((i as f64 / 5.0).sin() * 60.0 + (j as f64 / 7.0).cos() * 50.0) + 128.0) as u8);
        let thetas: Vec<Theta> = (1..=3).map(|t| Theta::new(t).unwrap()).collect();
        let rows = rd_curve(&x, &thetas, &StegoParams::lmi(thetas[0]), 4, 42).unwrap();
        assert_eq!(rows.len(), 15);
        for r in &rows {
            let bound = 20.0 * (255.0 / (2.0 * r.theta.get() as f64)).log10();
            assert!(r.psnr >= bound, "{r:?}");
        }
        assert_eq!(rows[0].bpp, 0.0);
        assert_eq!(rows, rd_curve(&x, &thetas, &StegoParams::lmi(thetas[0]), 4, 42).unwrap());
    }

    #[test]
    fn constant_image_analysis() {
        let x = PixelPlane::filled(32, 32, 90);
        let a = analyze_image(&x, &StegoParams::lmi(Theta::new(1).unwrap())).unwrap();
        assert!(a.predicted_psnr.is_infinite());
        assert_eq!(a.stats.entropy, 0.0);
        assert_eq!(a.stats.gini, 0.0);
    }
}
