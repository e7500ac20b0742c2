// Downscale PGM images with the two-lobe Lanczos resampler.
//
//     cargo run --release --example prepare_corpus -- in.pgm out.pgm 256 256

use pem_codec::resample::resize;
use pem_codec::{read_pgm, write_pgm, PixelPlane};

fn run() -> pem_codec::Result<()> {
    let big = PixelPlane::from_fn(128, 128, |i, j| ((i / 8 + j / 8) % 2 * 200 + 20) as u8);
    let small = resize(&big, 64, 64);
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("small.pgm");
    write_pgm(&small, &path)?;
    let back = read_pgm(&path)?;
    assert_eq!(back, small);
    println!("{}x{} -> {}x{}, first row {:?}", big.width(), big.height(), small.width(), small.height(), &small.samples()[..8]);
    Ok(())
}

fn main() -> pem_codec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.as_slice() {
        [src, dst, w, h] => {
            let img = read_pgm(src)?;
            let (w, h) = (w.parse().unwrap_or(256), h.parse().unwrap_or(256));
            write_pgm(&resize(&img, w, h), dst)
        }
        _ => run(),
    }
}
