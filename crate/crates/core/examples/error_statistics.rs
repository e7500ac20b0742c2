// Prediction-error histogram, entropy, p95 and the Lorenz curve behind the
// Gini coefficient.
//
//     cargo run --example error_statistics -- image.pgm

use pem_codec::metrics::{error_stats, first_layer_errors, lorenz_area, lorenz_curve};
use pem_codec::{read_pgm, PixelPlane, StegoParams, Theta};

fn report(x: &PixelPlane) -> pem_codec::Result<()> {
    let d = first_layer_errors(x, &StegoParams::lmi(Theta::new(1)?))?;
    let s = error_stats(&d)?;
    println!("residuals={} entropy={:.4} bits variance={:.4} p95={} gini={:.4}", d.total(), s.entropy, s.variance, s.p95, s.gini);
    for e in -3..=3 {
        println!("  eps={e:>2} count={}", d.count(e));
    }
    let curve = lorenz_curve(&d)?;
    for (p, l) in curve.iter().take(6) {
        println!("  lorenz {p:.4} {l:.4}");
    }
    println!("  1 - 2*area = {:.6}", 1.0 - 2.0 * lorenz_area(&curve));
    Ok(())
}

fn run() -> pem_codec::Result<()> {
    report(&PixelPlane::from_fn(96, 96, |i, j| ((i * j) % 61 + i + j) as u8))
}

fn main() -> pem_codec::Result<()> {
    match std::env::args().nth(1) {
        Some(path) => report(&read_pgm(path)?),
        None => run(),
    }
}
