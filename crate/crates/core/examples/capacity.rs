// Conservative capacity per θ, and what happens one bit past it.
//
//     cargo run --example capacity -- image.pgm

use pem_codec::{encode, estimate_capacity, read_pgm, BitStream, Error, PixelPlane, StegoParams, Theta};

fn table(x: &PixelPlane) -> pem_codec::Result<()> {
    println!("theta carriers register message_bits bpp");
    for t in [1, 2, 4, 8] {
        let c = estimate_capacity(x, &StegoParams::lmi(Theta::new(t)?))?;
        println!("{t:>5} {:>8} {:>8} {:>12} {:.4}", c.carriers, c.register_bits, c.message_bits, c.bpp());
    }
    Ok(())
}

fn run() -> pem_codec::Result<()> {
    let x = PixelPlane::from_fn(64, 64, |i, j| (i * 3 + j) as u8);
    table(&x)?;
    let params = StegoParams::lmi(Theta::new(1)?);
    let c = estimate_capacity(&x, &params)?;
    match encode(&x, &BitStream::zeros(c.message_bits + 10), &params) {
        Err(Error::CapacityExceeded { shortfall, .. }) => println!("10 bits too many: short by {shortfall}"),
        other => panic!("unexpected {other:?}"),
    }
    let saturated = PixelPlane::new(2, 2, vec![0, 255, 255, 0])?;
    println!("saturated 2x2: {} message bits", estimate_capacity(&saturated, &params)?.message_bits);
    Ok(())
}

fn main() -> pem_codec::Result<()> {
    match std::env::args().nth(1) {
        Some(path) => table(&read_pgm(path)?),
        None => run(),
    }
}
