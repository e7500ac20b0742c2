//! Context-aware pixel prediction.
//!
//! A predictor sees a plane in which the query pixels (one chequer colour)
//! are unknown and estimates them from the context pixels (the other colour).
//! Two families are provided: local-mean interpolation, which is exact integer
//! arithmetic, and convolutional graphs loaded from NNPW weight files.
//!
//! All rounding is half away from zero followed by a clamp to `[0, 255]`.

mod graph;

use std::sync::Arc;

pub use graph::{Conv2d, ConvGraph, GraphBuilder, Node, NodeId, Op, NNPW_MAGIC, NNPW_VERSION};

use crate::error::Result;
use crate::imaging::{Parity, PixelPlane};

/// How query pixels are filled in before a network sees the plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    #[default]
    Zero,
    /// Rounded mean of the in-bounds von Neumann neighbours.
    LocalMean,
}

impl std::str::FromStr for InitStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "zero" => Ok(InitStrategy::Zero),
            "localmean" => Ok(InitStrategy::LocalMean),
            other => Err(format!("unknown init strategy {other:?} (expected zero or localmean)")),
        }
    }
}

/// Predicted intensities for every coordinate; only query positions are
/// meaningful, context positions carry the input through.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredictedPlane {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u8>,
}

impl PredictedPlane {
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.width + j]
    }

    /// The predictions as an image, e.g. for measuring predictive accuracy.
    pub fn into_plane(self) -> PixelPlane {
        PixelPlane::new(self.width, self.height, self.values).expect("dims are consistent")
    }
}

/// A deterministic map from a plane and a query colour to predictions.
#[derive(Clone, Debug)]
pub enum Predictor {
    Lmi,
    Graph(Arc<ConvGraph>),
}

impl Predictor {
    pub fn graph(graph: ConvGraph) -> Self {
        Predictor::Graph(Arc::new(graph))
    }

    /// Loads a convolutional predictor from an NNPW file.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Ok(Predictor::graph(ConvGraph::load(path)?))
    }

    /// Predicts the `query` pixels of `img`. LMI ignores `init`.
    pub fn predict(&self, img: &PixelPlane, query: Parity, init: InitStrategy) -> Result<PredictedPlane> {
        match self {
            Predictor::Lmi => predict_lmi(img, query),
            Predictor::Graph(g) => predict_nn(g, img, query, init),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Predictor::Lmi => "lmi",
            Predictor::Graph(_) => "nn",
        }
    }
}

/// Rounds a non-negative ratio `sum / n` half away from zero.
#[inline]
fn rounded_mean(sum: u32, n: u32) -> u8 {
    ((2 * sum + n) / (2 * n)) as u8
}

#[inline]
fn neighbour_mean(img: &PixelPlane, i: usize, j: usize) -> u8 {
    let (sum, n) = img
        .neighbours(i, j)
        .fold((0u32, 0u32), |(s, n), (a, b)| (s + img.get(a, b) as u32, n + 1));
    if n == 0 {
        // only possible for a 1x1 plane
        return img.get(i, j);
    }
    rounded_mean(sum, n)
}

/// Replaces the `query` samples of `img` according to `strategy`; context
/// samples are untouched.
pub fn initialise(img: &PixelPlane, query: Parity, strategy: InitStrategy) -> PixelPlane {
    let mut out = img.clone();
    for (i, j) in query.coords(img.width(), img.height()) {
        let v = match strategy {
            InitStrategy::Zero => 0,
            // neighbours of a query pixel are all context pixels
            InitStrategy::LocalMean => neighbour_mean(img, i, j),
        };
        out.set(i, j, v);
    }
    out
}

/// Local-mean interpolation: each query pixel becomes the rounded mean of its
/// in-bounds von Neumann neighbours (4 inside, 3 on an edge, 2 at a corner).
pub fn predict_lmi(img: &PixelPlane, query: Parity) -> Result<PredictedPlane> {
    img.require_min_dims(2)?;
    let plane = initialise(img, query, InitStrategy::LocalMean);
    Ok(PredictedPlane {
        width: plane.width(),
        height: plane.height(),
        values: plane.into_samples(),
    })
}

/// Runs a convolutional graph on the initialised plane scaled to `[0, 1]` and
/// maps the output back to 8-bit intensities.
pub fn predict_nn(graph: &ConvGraph, img: &PixelPlane, query: Parity, init: InitStrategy) -> Result<PredictedPlane> {
    let input = initialise(img, query, init);
    let out = graph.forward(&input)?;
    let mut values: Vec<u8> = out.iter().map(|&v| quantise(v * 255.0)).collect();
    // context positions carry the input through
    for (i, j) in query.opposite().coords(img.width(), img.height()) {
        values[i * img.width() + j] = img.get(i, j);
    }
    Ok(PredictedPlane {
        width: img.width(),
        height: img.height(),
        values,
    })
}

/// Round half away from zero, then clamp to the 8-bit range.
#[inline]
pub fn quantise(v: f64) -> u8 {
    if v.is_nan() {
        return 0;
    }
    v.round().clamp(0.0, 255.0) as u8
}
