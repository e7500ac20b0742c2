// Build a small multi-scale convolutional predictor, store it as an NNPW
// weight file, reload it and use it for embedding.
//
//     cargo run --example conv_predictor

use pem_codec::metrics::psnr;
use pem_codec::predictor::GraphBuilder;
use pem_codec::{decode, encode, BitStream, ConvGraph, InitStrategy, Parity, PixelPlane, Predictor, StegoParams, Theta};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn run() -> pem_codec::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let graph = GraphBuilder::mscnn_lite(4, &mut rng);
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("mscnn_lite.nnpw");
    graph.save(&path)?;
    let reloaded = ConvGraph::load(&path)?;
    assert_eq!(reloaded, graph);
    println!("{} nodes, {} bytes", graph.nodes().len(), std::fs::metadata(&path)?.len());

    let x = PixelPlane::from_fn(64, 64, |i, j| (50 + i + 2 * j) as u8);
    for (name, predictor) in [("mscnn_lite", Predictor::graph(reloaded)), ("box_mean", Predictor::graph(ConvGraph::box_mean(3)))] {
        let y = predictor.predict(&x, Parity::White, InitStrategy::LocalMean)?.into_plane();
        println!("{name}: predicted image psnr {:.3} dB", psnr(&x, &y)?);
    }

    let params = StegoParams::new(Theta::new(2)?, Predictor::graph(ConvGraph::box_mean(3)))
        .with_second_predictor(Predictor::Lmi)
        .with_init(InitStrategy::LocalMean);
    let message = BitStream::from_bytes(b"nn");
    let stego = encode(&x, &message, &params)?;
    let (restored, got) = decode(&stego, &params)?;
    assert_eq!((restored, got), (x, message));
    println!("box_mean + lmi round trip ok");
    Ok(())
}

fn main() -> pem_codec::Result<()> {
    run()
}
