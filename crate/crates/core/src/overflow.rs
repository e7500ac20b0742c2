//! Overflow prevention.
//!
//! Embedding moves a pixel by at most θ, so before embedding every sample is
//! pulled into `[θ, 255 − θ]`. Samples near the ends of the range are folded
//! inward by θ and the fold is recorded in the overflow-status register so
//! that it can be undone after extraction. With
//!
//! ```text
//! L1 = [0, θ−1]          L0 = [θ, 2θ−1]
//! U0 = [256−2θ, 255−θ]   U1 = [256−θ, 255]
//! ```
//!
//! a sample in `L1`/`U1` is shifted into `L0`/`U0` and flagged 1, and a sample
//! already in `L0`/`U0` is flagged 0. Flags are written and read in raster
//! order.

use std::fmt;
use std::ops::RangeInclusive;

use crate::bitstream::BitStream;
use crate::error::{Error, Result};
use crate::imaging::PixelPlane;

/// Stego-channel half-width θ, validated to `1..=63`.
///
/// The upper bound keeps the four overflow intervals disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Theta(u8);

impl Theta {
    pub const MAX: u32 = 63;

    pub fn new(value: u32) -> Result<Self> {
        if (1..=Self::MAX).contains(&value) {
            Ok(Theta(value as u8))
        } else {
            Err(Error::InvalidTheta(value))
        }
    }

    #[inline]
    pub fn get(self) -> i32 {
        self.0 as i32
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl TryFrom<u32> for Theta {
    type Error = Error;

    fn try_from(value: u32) -> Result<Self> {
        Theta::new(value)
    }
}

/// The four intensity bands derived from θ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OverflowIntervals {
    pub lower_kept: RangeInclusive<u8>,
    pub lower_folded: RangeInclusive<u8>,
    pub upper_kept: RangeInclusive<u8>,
    pub upper_folded: RangeInclusive<u8>,
}

impl OverflowIntervals {
    pub fn new(theta: Theta) -> Self {
        let t = theta.0;
        Self {
            lower_kept: t..=2 * t - 1,
            lower_folded: 0..=t - 1,
            upper_kept: 255 - 2 * t + 1..=255 - t,
            upper_folded: 255 - t + 1..=255,
        }
    }

    /// True if a pre-processed sample carries a register flag.
    #[inline]
    pub fn is_flagged_band(&self, v: u8) -> bool {
        self.lower_kept.contains(&v) || self.upper_kept.contains(&v)
    }
}

/// Folds boundary samples inward. Returns the processed plane and the register.
pub fn preprocess(x: &PixelPlane, theta: Theta) -> (PixelPlane, BitStream) {
    let t = theta.0;
    let bands = OverflowIntervals::new(theta);
    let mut out = x.clone();
    let mut register = BitStream::new();
    for v in out.samples_mut() {
        if bands.upper_folded.contains(v) {
            *v -= t;
            register.push(true);
        } else if bands.upper_kept.contains(v) {
            register.push(false);
        } else if bands.lower_folded.contains(v) {
            *v += t;
            register.push(true);
        } else if bands.lower_kept.contains(v) {
            register.push(false);
        }
    }
    (out, register)
}

/// Undoes [`preprocess`] given the register it produced.
pub fn postprocess(processed: &PixelPlane, register: &BitStream, theta: Theta) -> Result<PixelPlane> {
    let expected = count_register_bits(processed, theta);
    if register.len() != expected {
        return Err(Error::RegisterLengthMismatch {
            expected,
            actual: register.len(),
        });
    }
    let t = theta.0;
    let bands = OverflowIntervals::new(theta);
    let mut flags = register.bits().iter();
    let mut out = processed.clone();
    for v in out.samples_mut() {
        if bands.upper_kept.contains(v) {
            if *flags.next().expect("length checked") {
                *v += t;
            }
        } else if bands.lower_kept.contains(v) && *flags.next().expect("length checked") {
            *v -= t;
        }
    }
    Ok(out)
}

/// Register length implied by a pre-processed plane.
pub fn count_register_bits(processed: &PixelPlane, theta: Theta) -> usize {
    let bands = OverflowIntervals::new(theta);
    processed
        .samples()
        .iter()
        .filter(|&&v| bands.is_flagged_band(v))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn theta(t: u32) -> Theta {
        Theta::new(t).unwrap()
    }

    fn single(v: u8, t: u32) -> (u8, Vec<bool>) {
        let (p, reg) = preprocess(&PixelPlane::filled(1, 1, v), theta(t));
        (p.samples()[0], reg.bits().to_vec())
    }

    #[test]
    fn theta_bounds() {
        assert!(matches!(Theta::new(0), Err(Error::InvalidTheta(0))));
        assert!(matches!(Theta::new(64), Err(Error::InvalidTheta(64))));
        assert_eq!(Theta::new(63).unwrap().get(), 63);
    }

    #[test]
    fn intervals_disjoint_up_to_63() {
        for t in 1..=63 {
            let b = OverflowIntervals::new(theta(t));
            assert!(b.lower_folded.end() < b.lower_kept.start());
            assert!(b.lower_kept.end() < b.upper_kept.start());
            assert!(b.upper_kept.end() < b.upper_folded.start());
        }
    }

    #[test]
    fn per_pixel_examples() {
        assert_eq!(single(255, 2), (253, vec![true]));
        assert_eq!(single(3, 2), (3, vec![false]));
        assert_eq!(single(128, 2), (128, vec![]));
    }

    #[test]
    fn postprocess_examples() {
        let p = PixelPlane::filled(1, 1, 253);
        let out = postprocess(&p, &BitStream::from_bits([true]), theta(2)).unwrap();
        assert_eq!(out.samples(), &[255]);
        let p = PixelPlane::filled(1, 1, 3);
        let out = postprocess(&p, &BitStream::from_bits([false]), theta(2)).unwrap();
        assert_eq!(out.samples(), &[3]);
    }

    #[test]
    fn postprocess_rejects_wrong_register_length() {
        let p = PixelPlane::filled(2, 2, 253);
        let err = postprocess(&p, &BitStream::zeros(3), theta(2)).unwrap_err();
        assert!(matches!(err, Error::RegisterLengthMismatch { expected: 4, actual: 3 }));
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_register_bits(&PixelPlane::filled(8, 8, 128), theta(3)), 0);
        let mut p = PixelPlane::filled(8, 8, 100);
        for (k, v) in [1u8, 254, 1, 254, 1].into_iter().enumerate() {
            p.samples_mut()[k * 7] = v;
        }
        assert_eq!(count_register_bits(&p, theta(1)), 5);
    }

    #[test]
    fn full_plane_round_trip_theta_1() {
        let p = PixelPlane::from_fn(16, 16, |i, j| (i * 16 + j) as u8);
        let (q, reg) = preprocess(&p, theta(1));
        assert_eq!(postprocess(&q, &reg, theta(1)).unwrap(), p);
    }

    #[test]
    fn random_planes_obey_range_count_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for t in [1, 2, 3, 7, 63] {
            for _ in 0..50 {
                // bias towards the extremes so every band is exercised
                let x = PixelPlane::from_fn(16, 16, |_, _| match rng.gen_range(0..3) {
                    0 => rng.gen_range(0..=2 * t as u8),
                    1 => rng.gen_range(255 - 2 * t as u8..=255),
                    _ => rng.gen(),
                });
                let (q, reg) = preprocess(&x, theta(t));
                assert!(q.samples().iter().all(|&v| (t as u8..=255 - t as u8).contains(&v)));
                // brute-force count straight from the interval definitions
                let brute = q
                    .samples()
                    .iter()
                    .filter(|&&v| {
                        let v = v as u32;
                        (t..=2 * t - 1).contains(&v) || (256 - 2 * t..=255 - t).contains(&v)
                    })
                    .count();
                assert_eq!(reg.len(), brute);
                assert_eq!(count_register_bits(&q, theta(t)), brute);
                assert_eq!(postprocess(&q, &reg, theta(t)).unwrap(), x);
            }
        }
    }
}
