//! Image quality and prediction-error statistics.

mod rd;

pub use rd::{analyze_image, first_layer_errors, random_message, rd_curve, ImageAnalysis, RdRow};

use crate::error::{Error, Result};
use crate::imaging::PixelPlane;

/// Peak signal-to-noise ratio in dB. Identical planes give `f64::INFINITY`.
pub fn psnr(a: &PixelPlane, b: &PixelPlane) -> Result<f64> {
    check_dims(a, b)?;
    let sse: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&p, &q)| {
            let d = p as i64 - q as i64;
            (d * d) as u64
        })
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / a.len() as f64;
    Ok(10.0 * (255.0f64 * 255.0 / mse).log10())
}

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_K1: f64 = 0.01;
const SSIM_K2: f64 = 0.03;

fn gaussian_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (k, v) in w.iter_mut().enumerate() {
        let d = k as f64 - c;
        *v = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    w
}

// Separable "valid" filtering with the 1-D window applied along rows then columns.
fn filter_valid(data: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut rows = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = (0..n).map(|t| k[t] * data[y * w + x + t]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = (0..n).map(|t| k[t] * rows[(y + t) * ow + x]).sum();
        }
    }
    out
}

/// Mean structural similarity over every 11×11 Gaussian window (σ = 1.5,
/// K1 = 0.01, K2 = 0.03, L = 255) that fits inside the image.
pub fn ssim(a: &PixelPlane, b: &PixelPlane) -> Result<f64> {
    check_dims(a, b)?;
    a.require_min_dims(SSIM_WINDOW)?;
    let (w, h) = (a.width(), a.height());
    let k = gaussian_window();
    let x: Vec<f64> = a.samples().iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.samples().iter().map(|&v| v as f64).collect();
    let prod = |p: &[f64], q: &[f64]| p.iter().zip(q).map(|(u, v)| u * v).collect::<Vec<_>>();
    let mu_x = filter_valid(&x, w, h, &k);
    let mu_y = filter_valid(&y, w, h, &k);
    let xx = filter_valid(&prod(&x, &x), w, h, &k);
    let yy = filter_valid(&prod(&y, &y), w, h, &k);
    let xy = filter_valid(&prod(&x, &y), w, h, &k);
    let c1 = (SSIM_K1 * 255.0).powi(2);
    let c2 = (SSIM_K2 * 255.0).powi(2);
    let total: f64 = (0..mu_x.len())
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = xx[i] - mx * mx;
            let vy = yy[i] - my * my;
            let cov = xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / mu_x.len() as f64)
}

fn check_dims(a: &PixelPlane, b: &PixelPlane) -> Result<()> {
    if !a.same_dims(b) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// PSNR, SSIM and embedding rate of one stego or predicted image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    pub psnr: f64,
    pub ssim: f64,
    pub bpp: f64,
}

impl QualityReport {
    pub fn measure(reference: &PixelPlane, other: &PixelPlane, message_bits: usize) -> Result<Self> {
        Ok(QualityReport {
            psnr: psnr(reference, other)?,
            ssim: ssim(reference, other)?,
            bpp: message_bits as f64 / reference.len() as f64,
        })
    }

    pub fn is_identical(&self) -> bool {
        self.psnr.is_infinite()
    }
}

/// Histogram of signed prediction errors in `[−255, 255]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorDistribution {
    counts: Vec<u64>,
    total: u64,
}

impl Default for ErrorDistribution {
    fn default() -> Self {
        Self {
            counts: vec![0; 511],
            total: 0,
        }
    }
}

impl ErrorDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_errors<I: IntoIterator<Item = i32>>(errors: I) -> Self {
        let mut d = Self::new();
        errors.into_iter().for_each(|e| d.record(e));
        d
    }

    /// Counts one error; values are clamped into `[−255, 255]`.
    pub fn record(&mut self, error: i32) {
        self.record_n(error, 1);
    }

    pub fn record_n(&mut self, error: i32, n: u64) {
        self.counts[(error.clamp(-255, 255) + 255) as usize] += n;
        self.total += n;
    }

    pub fn count(&self, error: i32) -> u64 {
        if !(-255..=255).contains(&error) {
            return 0;
        }
        self.counts[(error + 255) as usize]
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// `(error, count)` pairs with a non-zero count, ascending.
    pub fn iter(&self) -> impl Iterator<Item = (i32, u64)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k as i32 - 255, c))
    }

    /// Counts per magnitude `0..=255`.
    pub fn magnitudes(&self) -> [u64; 256] {
        let mut m = [0u64; 256];
        for (e, c) in self.iter() {
            m[e.unsigned_abs() as usize] += c;
        }
        m
    }

    /// Empirical cumulative distribution over `[−255, 255]`.
    pub fn cdf(&self) -> Vec<(i32, f64)> {
        let mut acc = 0;
        (0..511)
            .map(|k| {
                acc += self.counts[k];
                (k as i32 - 255, acc as f64 / self.total.max(1) as f64)
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorStats {
    /// Shannon entropy of the empirical PDF, in bits.
    pub entropy: f64,
    /// Population variance of the signed errors.
    pub variance: f64,
    /// Smallest magnitude `M` with at least 95% of errors satisfying `|ε| ≤ M`.
    pub p95: u32,
    /// Gini coefficient of the error magnitudes; 0 when all are zero.
    pub gini: f64,
}

pub fn error_stats(d: &ErrorDistribution) -> Result<ErrorStats> {
    if d.total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let n = d.total as f64;
    let entropy = -d
        .iter()
        .map(|(_, c)| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();
    let mean = d.iter().map(|(e, c)| e as f64 * c as f64).sum::<f64>() / n;
    let variance = d.iter().map(|(e, c)| (e as f64 - mean).powi(2) * c as f64).sum::<f64>() / n;

    let mags = d.magnitudes();
    // at least 95% ⇔ 20·count ≥ 19·total, kept in integers
    let mut acc = 0u64;
    let p95 = mags
        .iter()
        .position(|&c| {
            acc += c;
            20 * acc >= 19 * d.total
        })
        .unwrap_or(255) as u32;

    let gini = if mags[1..].iter().all(|&c| c == 0) {
        0.0
    } else {
        1.0 - 2.0 * lorenz_area(&lorenz_from_magnitudes(&mags))
    };
    Ok(ErrorStats {
        entropy: entropy.max(0.0),
        variance,
        p95,
        gini,
    })
}

/// Lorenz curve of error magnitudes: `(population share, magnitude share)`
/// vertices from `(0, 0)` to `(1, 1)`, one per distinct magnitude.
pub fn lorenz_curve(d: &ErrorDistribution) -> Result<Vec<(f64, f64)>> {
    if d.total == 0 {
        return Err(Error::EmptyDistribution);
    }
    let mags = d.magnitudes();
    if mags[1..].iter().all(|&c| c == 0) {
        return Err(Error::DegenerateAllZero);
    }
    Ok(lorenz_from_magnitudes(&mags))
}

fn lorenz_from_magnitudes(mags: &[u64; 256]) -> Vec<(f64, f64)> {
    let total: u64 = mags.iter().sum();
    let mass: u64 = mags.iter().enumerate().map(|(m, &c)| m as u64 * c).sum();
    let mut points = vec![(0.0, 0.0)];
    let (mut people, mut share) = (0u64, 0u64);
    for (m, &c) in mags.iter().enumerate().filter(|(_, &c)| c > 0) {
        people += c;
        share += m as u64 * c;
        points.push((people as f64 / total as f64, share as f64 / mass as f64));
    }
    points
}

/// Trapezoidal area under a polyline.
pub fn lorenz_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn psnr_closed_forms() {
        let a = PixelPlane::filled(8, 8, 100);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = PixelPlane::filled(8, 8, 101);
        assert!((psnr(&a, &b).unwrap() - 48.130803608679).abs() < 1e-9);
        // half the pixels off by 2 → MSE 2
        let c = PixelPlane::from_fn(8, 8, |i, _| if i % 2 == 0 { 102 } else { 100 });
        assert!((psnr(&a, &c).unwrap() - 45.120503652). abs() < 1e-8);
        assert!(matches!(psnr(&a, &PixelPlane::filled(8, 7, 0)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn ssim_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = PixelPlane::from_fn(32, 24, |_, _| rng.gen());
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let neg = PixelPlane::new(32, 24, a.samples().iter().map(|&v| 255 - v).collect()).unwrap();
        assert!(ssim(&a, &neg).unwrap() < 1.0);
        let c = PixelPlane::filled(16, 16, 70);
        assert!((ssim(&c, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(ssim(&PixelPlane::filled(10, 20, 0), &PixelPlane::filled(10, 20, 0)), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn ssim_window_matches_brute_force() {
        // one 11×11 window: compare against the direct weighted formula
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let a = PixelPlane::from_fn(11, 11, |_, _| rng.gen());
        let b = PixelPlane::from_fn(11, 11, |i, j| a.get(i, j).saturating_add(rng.gen_range(0..30)));
        let g = gaussian_window();
        let (mut mx, mut my) = (0.0, 0.0);
        for i in 0..11 {
            for j in 0..11 {
                mx += g[i] * g[j] * a.get(i, j) as f64;
                my += g[i] * g[j] * b.get(i, j) as f64;
            }
        }
        let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
        for i in 0..11 {
            for j in 0..11 {
                let (dx, dy) = (a.get(i, j) as f64 - mx, b.get(i, j) as f64 - my);
                vx += g[i] * g[j] * dx * dx;
                vy += g[i] * g[j] * dy * dy;
                cxy += g[i] * g[j] * dx * dy;
            }
        }
        let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
        let want = ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
        assert!((ssim(&a, &b).unwrap() - want).abs() < 1e-9);
    }

    #[test]
    fn stats_of_all_zero_errors() {
        let d = ErrorDistribution::from_errors([0; 50]);
        let s = error_stats(&d).unwrap();
        assert_eq!((s.entropy, s.variance, s.p95, s.gini), (0.0, 0.0, 0, 0.0));
        assert!(matches!(lorenz_curve(&d), Err(Error::DegenerateAllZero)));
        assert!(matches!(error_stats(&ErrorDistribution::new()), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn uniform_ternary_entropy() {
        let d = ErrorDistribution::from_errors([-1, 0, 1].repeat(10));
        let s = error_stats(&d).unwrap();
        assert!((s.entropy - 3f64.log2()).abs() < 1e-12);
        assert!((s.variance - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.p95, 1);
    }

    #[test]
    fn gini_closed_forms() {
        let d = ErrorDistribution::from_errors([0, 0, 0, 4]);
        assert!((error_stats(&d).unwrap().gini - 0.75).abs() < 1e-12);
        for n in [2usize, 5, 17] {
            let mut e = vec![0; n - 1];
            e.push(-9);
            let d = ErrorDistribution::from_errors(e);
            let g = error_stats(&d).unwrap().gini;
            assert!((g - (n as f64 - 1.0) / n as f64).abs() < 1e-12);
            let curve = lorenz_curve(&d).unwrap();
            assert_eq!(curve, vec![(0.0, 0.0), ((n - 1) as f64 / n as f64, 0.0), (1.0, 1.0)]);
        }
        let d = ErrorDistribution::from_errors([3, -3, 3, -3]);
        assert_eq!(lorenz_curve(&d).unwrap(), vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(error_stats(&d).unwrap().gini, 0.0);
    }

    #[test]
    fn p95_boundary() {
        // 19 zeros and one 7: exactly 95% are ≤ 0
        let mut e = vec![0; 19];
        e.push(7);
        assert_eq!(error_stats(&ErrorDistribution::from_errors(e)).unwrap().p95, 0);
        let mut e = vec![0; 18];
        e.extend([5, 7]);
        assert_eq!(error_stats(&ErrorDistribution::from_errors(e)).unwrap().p95, 5);
    }

    #[test]
    fn stats_invariances() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let errs: Vec<i32> = (0..200).map(|_| rng.gen_range(-20..=20)).collect();
            let d = ErrorDistribution::from_errors(errs.iter().copied());
            let flipped = ErrorDistribution::from_errors(errs.iter().map(|e| -e));
            let scaled = ErrorDistribution::from_errors(errs.iter().map(|e| 3 * e));
            let (s, f, k) = (error_stats(&d).unwrap(), error_stats(&flipped).unwrap(), error_stats(&scaled).unwrap());
            let support = d.iter().count() as f64;
            assert!(s.entropy <= support.log2() + 1e-12);
            assert!((s.variance - f.variance).abs() < 1e-9);
            assert_eq!(s.p95, f.p95);
            assert!((s.gini - k.gini).abs() < 1e-12);
        }
    }

    #[test]
    fn cdf_ends_at_one() {
        let d = ErrorDistribution::from_errors([-2, 0, 0, 5]);
        let cdf = d.cdf();
        assert_eq!(cdf.len(), 511);
        assert_eq!(cdf.last().unwrap().1, 1.0);
        assert_eq!(cdf[255 - 2].1, 0.25);
        assert_eq!(cdf[255].1, 0.75);
    }
}
