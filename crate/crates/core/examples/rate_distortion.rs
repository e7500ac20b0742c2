// Rate-distortion sweep: PSNR against embedding rate for θ = 1..3.
//
//     cargo run --release --example rate_distortion -- image.pgm

use pem_codec::metrics::rd_curve;
use pem_codec::{read_pgm, PixelPlane, StegoParams, Theta};

fn sweep(x: &PixelPlane, steps: usize) -> pem_codec::Result<()> {
    let thetas = [Theta::new(1)?, Theta::new(2)?, Theta::new(3)?];
    println!("theta,bits,bpp,psnr_db,ssim");
    for r in rd_curve(x, &thetas, &StegoParams::lmi(thetas[0]), steps, 7)? {
        println!("{},{},{:.6},{:.6},{:.6}", r.theta, r.message_bits, r.bpp, r.psnr, r.ssim);
    }
    Ok(())
}

fn run() -> pem_codec::Result<()> {
    let x = PixelPlane::from_fn(64, 64, |i, j| (100.0 + 40.0 * ((i as f64) / 9.0).sin() + j as f64) as u8);
    sweep(&x, 4)
}

fn main() -> pem_codec::Result<()> {
    match std::env::args().nth(1) {
        Some(path) => sweep(&read_pgm(path)?, 10),
        None => run(),
    }
}
