//! Greyscale pixel planes, binary PGM I/O and the chequered context/query split.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit greyscale image stored row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct PixelPlane {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl PixelPlane {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if samples.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                samples.push(f(i, j));
            }
        }
        Self {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    /// Sample at row `i`, column `j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.samples[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: u8) {
        self.samples[i * self.width + j] = value;
    }

    pub fn same_dims(&self, other: &PixelPlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn require_min_dims(&self, min: usize) -> Result<()> {
        if self.width < min || self.height < min {
            return Err(Error::ImageTooSmall {
                width: self.width,
                height: self.height,
                min,
            });
        }
        Ok(())
    }

    /// Von Neumann neighbours of `(i, j)` that lie inside the plane.
    pub fn neighbours(&self, i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
        let (h, w) = (self.height, self.width);
        let up = (i > 0).then(|| (i - 1, j));
        let down = (i + 1 < h).then(|| (i + 1, j));
        let left = (j > 0).then(|| (i, j - 1));
        let right = (j + 1 < w).then(|| (i, j + 1));
        [up, down, left, right].into_iter().flatten()
    }
}

impl std::fmt::Debug for PixelPlane {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PixelPlane")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish_non_exhaustive()
    }
}

/// One colour of the chequerboard.
///
/// With 0-based `(row, col)`, `(0, 0)` is white: `White` holds the
/// coordinates whose index sum is even and `Black` those whose sum is odd.
/// Every von Neumann neighbour of a white pixel is black and vice versa.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Parity {
    Black,
    White,
}

impl Parity {
    #[inline]
    pub fn of(i: usize, j: usize) -> Parity {
        if (i + j).is_multiple_of(2) {
            Parity::White
        } else {
            Parity::Black
        }
    }

    #[inline]
    pub fn contains(self, i: usize, j: usize) -> bool {
        Parity::of(i, j) == self
    }

    pub fn opposite(self) -> Parity {
        match self {
            Parity::Black => Parity::White,
            Parity::White => Parity::Black,
        }
    }

    /// Number of coordinates of this colour in a `width`×`height` grid.
    pub fn count(self, width: usize, height: usize) -> usize {
        let white = (width * height).div_ceil(2);
        match self {
            Parity::White => white,
            Parity::Black => width * height - white,
        }
    }

    /// Coordinates of this colour in raster order.
    pub fn coords(self, width: usize, height: usize) -> impl Iterator<Item = (usize, usize)> {
        (0..height).flat_map(move |i| {
            let start = match (self, i % 2) {
                (Parity::White, 0) | (Parity::Black, 1) => 0,
                _ => 1,
            };
            (start..width).step_by(2).map(move |j| (i, j))
        })
    }
}

/// The samples of one chequer colour, in raster order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaskedSamples {
    pub parity: Parity,
    pub width: usize,
    pub height: usize,
    pub values: Vec<u8>,
}

/// Separates a plane into its black and white samples.
pub fn split(img: &PixelPlane) -> Result<(MaskedSamples, MaskedSamples)> {
    img.require_min_dims(2)?;
    let take = |parity: Parity| MaskedSamples {
        parity,
        width: img.width,
        height: img.height,
        values: parity
            .coords(img.width, img.height)
            .map(|(i, j)| img.get(i, j))
            .collect(),
    };
    Ok((take(Parity::Black), take(Parity::White)))
}

/// Interleaves black and white samples back into a plane.
pub fn merge(black: &MaskedSamples, white: &MaskedSamples) -> Result<PixelPlane> {
    if black.parity != Parity::Black || white.parity != Parity::White {
        return Err(Error::DimensionMismatch("merge expects one black and one white mask".into()));
    }
    if black.width != white.width || black.height != white.height {
        return Err(Error::DimensionMismatch(format!(
            "black mask is {}x{}, white mask is {}x{}",
            black.width, black.height, white.width, white.height
        )));
    }
    let (w, h) = (black.width, black.height);
    for m in [black, white] {
        let expected = m.parity.count(w, h);
        if m.values.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{:?} mask holds {} samples, {w}x{h} needs {expected}",
                m.parity,
                m.values.len()
            )));
        }
    }
    let mut out = PixelPlane::filled(w, h, 0);
    for m in [black, white] {
        for ((i, j), &v) in m.parity.coords(w, h).zip(&m.values) {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Reads a binary (P5) PGM with maxval 255.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<PixelPlane> {
    let file = File::open(path)?;
    decode_pgm(BufReader::new(file))
}

pub fn write_pgm(plane: &PixelPlane, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    encode_pgm(plane, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn encode_pgm<W: Write>(plane: &PixelPlane, mut w: W) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", plane.width, plane.height)?;
    w.write_all(&plane.samples)?;
    Ok(())
}

pub fn decode_pgm<R: Read>(mut r: R) -> Result<PixelPlane> {
    let mut magic = [0u8; 2];
    r.read_exact(&mut magic)?;
    if &magic != b"P5" {
        return Err(Error::UnsupportedFormat(format!(
            "magic {:?}, only binary greyscale PGM (P5) is supported",
            String::from_utf8_lossy(&magic)
        )));
    }
    let width = header_field(&mut r)?;
    let height = header_field(&mut r)?;
    let maxval = header_field(&mut r)?;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("maxval {maxval}, only 255 is supported")));
    }
    let mut samples = vec![0u8; width * height];
    r.read_exact(&mut samples)?;
    PixelPlane::new(width, height, samples)
}

// Parses whitespace-delimited decimal header fields, skipping `#` comments,
// and consumes the single whitespace byte that terminates each one.
fn header_field<R: Read>(r: &mut R) -> Result<usize> {
    let mut byte = [0u8; 1];
    let mut digits = String::new();
    loop {
        r.read_exact(&mut byte)?;
        match byte[0] {
            b if b.is_ascii_whitespace() && digits.is_empty() => continue,
            b if b.is_ascii_whitespace() => break,
            b if b.is_ascii_digit() && digits.len() < 9 => digits.push(b as char),
            b'#' if digits.is_empty() => {
                while byte[0] != b'\n' && byte[0] != b'\r' {
                    r.read_exact(&mut byte)?;
                }
            }
            b => {
                return Err(Error::UnsupportedFormat(format!(
                    "unexpected byte 0x{b:02x} in PGM header"
                )))
            }
        }
    }
    digits
        .parse()
        .map_err(|_| Error::Io(io::Error::new(io::ErrorKind::InvalidData, "bad PGM header field")))
}
