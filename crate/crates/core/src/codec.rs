//! Prediction-error modulation and the two-layer embedding pipeline.
//!
//! For a query pixel with processed value `x̌` and prediction `y` the residual
//! `ε = x̌ − y` is modulated into `ε′` and the stego pixel becomes `y + ε′`:
//!
//! | residual        | payload  | `ε′`              | bits |
//! |-----------------|----------|-------------------|------|
//! | `0`             | `0`      | `0`               | 1    |
//! | `0`             | `1 0`    | `−1`              | 2    |
//! | `0`             | `1 1`    | `+1`              | 2    |
//! | `0 < abs ε < θ` | `b`      | `2ε + sgn(ε)·b`   | 1    |
//! | `abs ε ≥ θ`     |          | `ε + sgn(ε)·θ`    | 0    |
//!
//! Encoding embeds the white pixels first (predicted from black), then the
//! black pixels (predicted from the stego white pixels). Decoding runs the
//! layers in reverse and reassembles the payload in embedding order.

use crate::bitstream::{build_payload, framed_len, parse_payload, BitStream};
use crate::error::{Error, Result};
use crate::imaging::{Parity, PixelPlane};
use crate::overflow::{count_register_bits, postprocess, preprocess, Theta};
use crate::predictor::{InitStrategy, PredictedPlane, Predictor};

/// Everything the decoder must share with the encoder.
#[derive(Clone, Debug)]
pub struct StegoParams {
    pub theta: Theta,
    /// Predicts white pixels from black ones (first layer).
    pub predictor: Predictor,
    /// Predicts black pixels from stego white ones (second layer).
    pub second_predictor: Predictor,
    pub init: InitStrategy,
}

impl StegoParams {
    pub fn new(theta: Theta, predictor: Predictor) -> Self {
        Self {
            theta,
            second_predictor: predictor.clone(),
            predictor,
            init: InitStrategy::default(),
        }
    }

    pub fn lmi(theta: Theta) -> Self {
        Self::new(theta, Predictor::Lmi)
    }

    pub fn with_second_predictor(mut self, predictor: Predictor) -> Self {
        self.second_predictor = predictor;
        self
    }

    pub fn with_init(mut self, init: InitStrategy) -> Self {
        self.init = init;
        self
    }

    fn predictor_for(&self, query: Parity) -> &Predictor {
        match query {
            Parity::White => &self.predictor,
            Parity::Black => &self.second_predictor,
        }
    }
}

#[inline]
fn sgn(v: i32) -> i32 {
    v.signum()
}

/// Modulates one residual, consuming 0, 1 or 2 payload bits.
pub fn modulate(eps: i32, payload: &mut BitStream, theta: Theta) -> Result<(i32, usize)> {
    let t = theta.get();
    let exhausted = |p: &BitStream| Error::PayloadExhausted(p.cursor());
    if eps == 0 {
        let first = payload.peek(0).ok_or_else(|| exhausted(payload))?;
        if !first {
            payload.skip(1)?;
            return Ok((0, 1));
        }
        let second = payload.peek(1).ok_or_else(|| exhausted(payload))?;
        payload.skip(2)?;
        Ok((if second { 1 } else { -1 }, 2))
    } else if eps.abs() < t {
        let bit = payload.read_bit().map_err(|_| exhausted(payload))?;
        Ok((2 * eps + sgn(eps) * bit as i32, 1))
    } else {
        Ok((eps + sgn(eps) * t, 0))
    }
}

const BITS_0: &[bool] = &[false];
const BITS_1: &[bool] = &[true];
const BITS_10: &[bool] = &[true, false];
const BITS_11: &[bool] = &[true, true];

/// Inverts [`modulate`]: returns the original residual and the bits it carried.
pub fn demodulate(eps_mod: i32, theta: Theta) -> (i32, &'static [bool]) {
    let t = theta.get();
    let mag = eps_mod.abs();
    match eps_mod {
        0 => (0, BITS_0),
        -1 => (0, BITS_10),
        1 => (0, BITS_11),
        _ if mag < 2 * t => (mag / 2 * sgn(eps_mod), if mag % 2 == 1 { BITS_1 } else { BITS_0 }),
        _ => (eps_mod - sgn(eps_mod) * t, &[]),
    }
}

/// Result of embedding into or extracting from one chequer colour.
#[derive(Clone, Debug)]
pub struct LayerOutcome {
    pub plane: PixelPlane,
    /// Bits consumed (embedding) or recovered (extraction).
    pub bits: usize,
    /// Query coordinates whose residual was in the stego channel, raster order.
    pub carriers: Vec<(usize, usize)>,
}

/// Embeds payload bits into the `query` pixels of a processed plane.
pub fn embed_layer(
    processed: &PixelPlane,
    query: Parity,
    prediction: &PredictedPlane,
    payload: &mut BitStream,
    theta: Theta,
) -> Result<LayerOutcome> {
    let mut plane = processed.clone();
    let mut bits = 0;
    let mut carriers = Vec::new();
    for (i, j) in query.coords(processed.width(), processed.height()) {
        let y = prediction.get(i, j) as i32;
        let eps = processed.get(i, j) as i32 - y;
        let (eps_mod, consumed) = modulate(eps, payload, theta)?;
        if eps.abs() < theta.get() {
            carriers.push((i, j));
        }
        let stego = y + eps_mod;
        if !(0..=255).contains(&stego) {
            return Err(Error::MalformedPayload(format!(
                "pixel ({i},{j}) = {} lies outside [{theta}, {}]; input was not pre-processed",
                processed.get(i, j),
                255 - theta.get()
            )));
        }
        plane.set(i, j, stego as u8);
        bits += consumed;
    }
    Ok(LayerOutcome { plane, bits, carriers })
}

/// Recovers the `query` pixels and the bits they carried.
pub fn extract_layer(
    stego: &PixelPlane,
    query: Parity,
    prediction: &PredictedPlane,
    theta: Theta,
    out: &mut BitStream,
) -> Result<LayerOutcome> {
    let mut plane = stego.clone();
    let start = out.len();
    let mut carriers = Vec::new();
    for (i, j) in query.coords(stego.width(), stego.height()) {
        let y = prediction.get(i, j) as i32;
        let (eps, bits) = demodulate(stego.get(i, j) as i32 - y, theta);
        if !bits.is_empty() {
            carriers.push((i, j));
        }
        out.extend_from_slice(bits);
        let restored = y + eps;
        if !(0..=255).contains(&restored) {
            return Err(Error::MalformedPayload(format!(
                "restored pixel ({i},{j}) = {restored} is out of range; wrong parameters or not a stego image"
            )));
        }
        plane.set(i, j, restored as u8);
    }
    Ok(LayerOutcome {
        plane,
        bits: out.len() - start,
        carriers,
    })
}

/// Runs both embedding layers over a processed plane.
fn embed_both(processed: &PixelPlane, payload: &mut BitStream, params: &StegoParams) -> Result<(PixelPlane, usize)> {
    let mut plane = processed.clone();
    let mut consumed = 0;
    for query in [Parity::White, Parity::Black] {
        let y = params.predictor_for(query).predict(&plane, query, params.init)?;
        let layer = embed_layer(&plane, query, &y, payload, params.theta)?;
        consumed += layer.bits;
        plane = layer.plane;
    }
    Ok((plane, consumed))
}

/// Conservative capacity breakdown for one image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Capacity {
    /// Stego-channel residuals in a dry run with an all-zero payload.
    pub carriers: usize,
    pub register_bits: usize,
    /// `carriers − register − 32`, floored at zero.
    pub message_bits: usize,
    pub pixels: usize,
}

impl Capacity {
    pub fn bpp(&self) -> f64 {
        self.message_bits as f64 / self.pixels as f64
    }
}

/// Message bits that are guaranteed to fit under an all-zero dry run.
pub fn estimate_capacity(x: &PixelPlane, params: &StegoParams) -> Result<Capacity> {
    x.require_min_dims(2)?;
    let (processed, register) = preprocess(x, params.theta);
    let carriers = dry_run(&processed, params)?;
    Ok(Capacity {
        carriers,
        register_bits: register.len(),
        message_bits: carriers.saturating_sub(framed_len(register.len(), 0)),
        pixels: x.len(),
    })
}

// With zero bits every carrier consumes exactly one bit.
fn dry_run(processed: &PixelPlane, params: &StegoParams) -> Result<usize> {
    let mut zeros = BitStream::zeros(processed.len());
    let (_, consumed) = embed_both(processed, &mut zeros, params)?;
    Ok(consumed)
}

/// Embeds `message` into `x`.
///
/// Fails with [`Error::CapacityExceeded`] if the framed payload does not fit
/// the conservative capacity, or if the actual embedding (whose second layer
/// depends on the payload) ends up with fewer carriers than the frame needs.
pub fn encode(x: &PixelPlane, message: &BitStream, params: &StegoParams) -> Result<PixelPlane> {
    x.require_min_dims(2)?;
    let (processed, register) = preprocess(x, params.theta);
    let carriers = dry_run(&processed, params)?;
    let required = framed_len(register.len(), message.len());
    let mut payload = build_payload(&register, message, carriers)?;
    // a zero residual can take two bits, so allow for twice the pixel count
    payload.extend(std::iter::repeat_n(false, 2 * x.len()));
    let (stego, consumed) = embed_both(&processed, &mut payload, params)?;
    if consumed < required {
        return Err(Error::CapacityExceeded {
            required,
            available: consumed,
            shortfall: required - consumed,
        });
    }
    Ok(stego)
}

/// Extracts the message and restores the cover bit-exactly.
pub fn decode(stego: &PixelPlane, params: &StegoParams) -> Result<(PixelPlane, BitStream)> {
    stego.require_min_dims(2)?;
    let theta = params.theta;
    let mut second = BitStream::new();
    let y = params.second_predictor.predict(stego, Parity::Black, params.init)?;
    let plane = extract_layer(stego, Parity::Black, &y, theta, &mut second)?.plane;

    let mut payload = BitStream::with_capacity(2 * stego.len());
    let y = params.predictor.predict(&plane, Parity::White, params.init)?;
    let processed = extract_layer(&plane, Parity::White, &y, theta, &mut payload)?.plane;
    payload.extend_from_slice(second.bits());

    let lo = theta.get() as u8;
    let hi = 255 - lo;
    if processed.samples().iter().any(|&v| v < lo || v > hi) {
        return Err(Error::MalformedPayload(format!(
            "restored samples fall outside [{lo}, {hi}]; wrong parameters or not a stego image"
        )));
    }
    let register_len = count_register_bits(&processed, theta);
    let (register, message) = parse_payload(&payload, register_len)?;
    // the encoder pads with zeros, so anything else means wrong parameters
    if payload.bits()[framed_len(register_len, message.len())..].iter().any(|&b| b) {
        return Err(Error::MalformedPayload("non-zero padding after the message".into()));
    }
    let cover = postprocess(&processed, &register, theta)?;
    Ok((cover, message))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn theta(t: u32) -> Theta {
        Theta::new(t).unwrap()
    }

    fn bits(s: &str) -> BitStream {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn modulate_examples() {
        let mut p = bits("1");
        assert_eq!(modulate(-1, &mut p, theta(2)).unwrap(), (-3, 1));
        let mut p = bits("11");
        assert_eq!(modulate(0, &mut p, theta(2)).unwrap(), (1, 2));
        let mut p = bits("");
        assert_eq!(modulate(5, &mut p, theta(2)).unwrap(), (7, 0));
    }

    #[test]
    fn modulate_detects_starvation() {
        assert!(matches!(modulate(0, &mut bits("1"), theta(2)), Err(Error::PayloadExhausted(0))));
        assert!(matches!(modulate(1, &mut bits(""), theta(2)), Err(Error::PayloadExhausted(0))));
        // a lone zero is enough for ε = 0
        assert_eq!(modulate(0, &mut bits("0"), theta(2)).unwrap(), (0, 1));
    }

    #[test]
    fn demodulate_examples() {
        assert_eq!(demodulate(-3, theta(2)), (-1, BITS_1));
        assert_eq!(demodulate(1, theta(2)), (0, BITS_11));
        assert_eq!(demodulate(7, theta(2)), (5, &[][..]));
    }

    #[test]
    fn exhaustive_inverse_and_injectivity() {
        for t in 1..=5 {
            let th = theta(t);
            let mut seen = std::collections::HashMap::new();
            for eps in -255..=255 {
                for prefix in ["00", "01", "10", "11"] {
                    let mut p = bits(prefix);
                    let (m, used) = modulate(eps, &mut p, th).unwrap();
                    assert!((m - eps).abs() <= t as i32);
                    let (back, carried) = demodulate(m, th);
                    assert_eq!(back, eps);
                    assert_eq!(carried, &bits(prefix).bits()[..used]);
                    let key = (eps, carried.to_vec());
                    if let Some(prev) = seen.insert(m, key.clone()) {
                        assert_eq!(prev, key, "ε′={m} is ambiguous");
                    }
                }
            }
        }
    }

    fn single_pixel_layer(x: u8, y: u8) -> (PixelPlane, PredictedPlane) {
        let plane = PixelPlane::filled(1, 1, x);
        let pred = PredictedPlane {
            width: 1,
            height: 1,
            values: vec![y],
        };
        (plane, pred)
    }

    #[test]
    fn single_pixel_embed_and_extract() {
        let (plane, pred) = single_pixel_layer(100, 100);
        let out = embed_layer(&plane, Parity::White, &pred, &mut bits("10"), theta(1)).unwrap();
        assert_eq!(out.plane.samples(), &[99]);
        assert_eq!(out.bits, 2);
        let mut got = BitStream::new();
        let back = extract_layer(&out.plane, Parity::White, &pred, theta(1), &mut got).unwrap();
        assert_eq!(back.plane.samples(), &[100]);
        assert_eq!(got, bits("10"));

        let (plane, pred) = single_pixel_layer(103, 100);
        let out = embed_layer(&plane, Parity::White, &pred, &mut bits(""), theta(2)).unwrap();
        assert_eq!(out.plane.samples(), &[105]);
        assert_eq!(out.bits, 0);
        let mut got = BitStream::new();
        let back = extract_layer(&out.plane, Parity::White, &pred, theta(2), &mut got).unwrap();
        assert_eq!(back.plane.samples(), &[103]);
        assert!(got.is_empty());
    }

    #[test]
    fn zero_payload_leaves_constant_plane_alone() {
        let x = PixelPlane::filled(8, 8, 128);
        let y = Predictor::Lmi.predict(&x, Parity::White, InitStrategy::Zero).unwrap();
        let out = embed_layer(&x, Parity::White, &y, &mut BitStream::zeros(64), theta(2)).unwrap();
        assert_eq!(out.plane, x);
        assert_eq!(out.carriers.len(), 32);
    }

    #[test]
    fn layer_round_trip_on_random_planes() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for t in 1..=3 {
            for _ in 0..20 {
                let x = PixelPlane::from_fn(13, 9, |_, _| rng.gen_range(t as u8..=255 - t as u8));
                let y = Predictor::Lmi.predict(&x, Parity::Black, InitStrategy::Zero).unwrap();
                let mut payload: BitStream = (0..300).map(|_| rng.gen::<bool>()).collect();
                let out = embed_layer(&x, Parity::Black, &y, &mut payload, theta(t)).unwrap();
                let mut got = BitStream::new();
                let back = extract_layer(&out.plane, Parity::Black, &y, theta(t), &mut got).unwrap();
                assert_eq!(back.plane, x);
                assert_eq!(got.bits(), &payload.bits()[..out.bits]);
                assert_eq!(back.carriers, out.carriers);
            }
        }
    }

    #[test]
    fn capacity_of_constant_plane() {
        let x = PixelPlane::filled(64, 64, 128);
        let cap = estimate_capacity(&x, &StegoParams::lmi(theta(1))).unwrap();
        assert_eq!(cap.carriers, 4096);
        assert_eq!(cap.register_bits, 0);
        assert_eq!(cap.message_bits, 4064);
    }

    #[test]
    fn capacity_of_saturated_plane_is_zero() {
        let x = PixelPlane::filled(64, 64, 255);
        let cap = estimate_capacity(&x, &StegoParams::lmi(theta(1))).unwrap();
        assert_eq!(cap.register_bits, 4096);
        assert_eq!(cap.message_bits, 0);
        let err = encode(&x, &BitStream::new(), &StegoParams::lmi(theta(1))).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { shortfall: 32, .. }));
    }

    #[test]
    fn empty_message_round_trip() {
        let x = PixelPlane::filled(16, 16, 128);
        let params = StegoParams::lmi(theta(1));
        let stego = encode(&x, &BitStream::new(), &params).unwrap();
        let (cover, m) = decode(&stego, &params).unwrap();
        assert_eq!(cover, x);
        assert!(m.is_empty());
    }

    #[test]
    fn random_round_trip_64() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let x = PixelPlane::from_fn(64, 64, |i, j| ((i * 3 + j * 2) % 220) as u8 + rng.gen_range(0..6));
        let m: BitStream = (0..100).map(|_| rng.gen::<bool>()).collect();
        let params = StegoParams::lmi(theta(2));
        let stego = encode(&x, &m, &params).unwrap();
        let (cover, got) = decode(&stego, &params).unwrap();
        assert_eq!(cover, x);
        assert_eq!(got, m);
    }

    #[test]
    fn oversized_message_is_rejected() {
        let x = PixelPlane::filled(8, 8, 128);
        let params = StegoParams::lmi(theta(1));
        let cap = estimate_capacity(&x, &params).unwrap();
        let m = BitStream::zeros(cap.message_bits + 5);
        match encode(&x, &m, &params) {
            Err(Error::CapacityExceeded { shortfall, .. }) => assert_eq!(shortfall, 5),
            other => panic!("expected CapacityExceeded, got {other:?}"),
        }
    }

    #[test]
    fn wrong_theta_does_not_yield_the_message() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let x = PixelPlane::from_fn(32, 32, |i, j| ((i * 5 + j * 3) % 200) as u8 + rng.gen_range(0..8));
        let m: BitStream = (0..200).map(|_| rng.gen::<bool>()).collect();
        let stego = encode(&x, &m, &StegoParams::lmi(theta(2))).unwrap();
        for wrong in [1, 3] {
            match decode(&stego, &StegoParams::lmi(theta(wrong))) {
                Err(Error::MalformedPayload(_)) => {}
                Ok((cover, got)) => assert!(cover != x || got != m),
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn plain_image_is_not_a_stego_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let mut malformed = 0;
        for _ in 0..20 {
            let x = PixelPlane::from_fn(32, 32, |_, _| rng.gen_range(20..236));
            if let Err(Error::MalformedPayload(_)) = decode(&x, &StegoParams::lmi(theta(1))) {
                malformed += 1;
            }
        }
        assert!(malformed >= 19, "{malformed}/20");
    }

    #[test]
    fn graph_predictor_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let x = PixelPlane::from_fn(48, 40, |i, j| (40 + i + j * 2) as u8 + rng.gen_range(0..3));
        let g = crate::predictor::ConvGraph::box_mean(3);
        for init in [InitStrategy::Zero, InitStrategy::LocalMean] {
            let params = StegoParams::new(theta(2), Predictor::graph(g.clone()))
                .with_second_predictor(Predictor::Lmi)
                .with_init(init);
            let cap = estimate_capacity(&x, &params).unwrap();
            assert!(cap.message_bits > 100, "{cap:?}");
            let m: BitStream = (0..cap.message_bits / 2).map(|_| rng.gen::<bool>()).collect();
            let stego = encode(&x, &m, &params).unwrap();
            let (cover, got) = decode(&stego, &params).unwrap();
            assert_eq!(cover, x);
            assert_eq!(got, m);
        }
    }
}
