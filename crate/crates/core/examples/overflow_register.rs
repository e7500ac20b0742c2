// Fold boundary intensities inward and restore them from the flag register.
//
//     cargo run --example overflow_register

use pem_codec::overflow::{count_register_bits, postprocess, preprocess, OverflowIntervals};
use pem_codec::{PixelPlane, Theta};

fn run() -> pem_codec::Result<()> {
    let theta = Theta::new(2)?;
    let iv = OverflowIntervals::new(theta);
    println!("theta=2 intervals: {iv:?}");

    let x = PixelPlane::new(4, 2, vec![0, 1, 2, 3, 252, 253, 254, 255])?;
    let (processed, register) = preprocess(&x, theta);
    println!("cover     {:?}", x.samples());
    println!("processed {:?}", processed.samples());
    println!("register  {register:?}");
    assert_eq!(count_register_bits(&processed, theta), register.len());

    let restored = postprocess(&processed, &register, theta)?;
    assert_eq!(restored, x);
    println!("restored  {:?}", restored.samples());
    Ok(())
}

fn main() -> pem_codec::Result<()> {
    run()
}
