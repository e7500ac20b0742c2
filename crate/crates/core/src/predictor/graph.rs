//! Convolutional predictor graphs and the NNPW weight format.
//!
//! NNPW layout, all integers and floats little-endian:
//!
//! ```text
//! "NNPW"  version:u32 (=1)  node_count:u32
//! per node:
//!   op:u8 (0 Input, 1 Conv2D, 2 ReLU, 3 Add, 4 Concat)
//!   input_count:u8  inputs:u32[input_count]
//!   Conv2D only: kh:u16 kw:u16 in_c:u16 out_c:u16
//!                weights:f32[out_c*in_c*kh*kw]  (out, in, row, col)
//!                biases:f32[out_c]
//! ```
//!
//! The last node is the output. Convolutions use "same" zero padding, so
//! every node keeps the input's spatial size.
//!
//! Evaluation runs in serialized node order. Each convolution output starts
//! at its bias and accumulates terms in (in-channel, row, col) order in
//! `f64`, which makes repeated runs of the same binary bit-identical.
//! Agreement with other implementations is only approximate.

use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::PixelPlane;

pub const NNPW_MAGIC: [u8; 4] = *b"NNPW";
pub const NNPW_VERSION: u32 = 1;

pub type NodeId = usize;

#[derive(Clone, Debug, PartialEq)]
pub struct Conv2d {
    pub kernel_height: usize,
    pub kernel_width: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    /// `out_channels × in_channels × kernel_height × kernel_width`, row-major.
    pub weights: Vec<f32>,
    pub biases: Vec<f32>,
}

impl Conv2d {
    pub fn new(kh: usize, kw: usize, in_c: usize, out_c: usize, weights: Vec<f32>, biases: Vec<f32>) -> Result<Self> {
        let conv = Conv2d {
            kernel_height: kh,
            kernel_width: kw,
            in_channels: in_c,
            out_channels: out_c,
            weights,
            biases,
        };
        conv.check()?;
        Ok(conv)
    }

    /// He-style random initialisation.
    pub fn random<R: Rng>(kh: usize, kw: usize, in_c: usize, out_c: usize, scale: f32, rng: &mut R) -> Self {
        let fan_in = (kh * kw * in_c) as f32;
        let std = scale * (2.0 / fan_in).sqrt();
        let weights = (0..out_c * in_c * kh * kw)
            .map(|_| (rng.gen::<f32>() * 2.0 - 1.0) * std * 3f32.sqrt())
            .collect();
        Conv2d {
            kernel_height: kh,
            kernel_width: kw,
            in_channels: in_c,
            out_channels: out_c,
            weights,
            biases: vec![0.0; out_c],
        }
    }

    fn check(&self) -> Result<()> {
        if self.kernel_height == 0 || self.kernel_width == 0 || self.in_channels == 0 || self.out_channels == 0 {
            return Err(Error::ShapeMismatch("convolution with a zero dimension".into()));
        }
        let expected = self.out_channels * self.in_channels * self.kernel_height * self.kernel_width;
        if self.weights.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} conv {}→{} needs {expected} weights, has {}",
                self.kernel_height,
                self.kernel_width,
                self.in_channels,
                self.out_channels,
                self.weights.len()
            )));
        }
        if self.biases.len() != self.out_channels {
            return Err(Error::ShapeMismatch(format!(
                "conv declares {} output channels but has {} biases",
                self.out_channels,
                self.biases.len()
            )));
        }
        Ok(())
    }

    fn forward(&self, input: &Tensor) -> Tensor {
        let (h, w) = (input.height, input.width);
        let (kh, kw) = (self.kernel_height, self.kernel_width);
        let (top, left) = ((kh - 1) / 2, (kw - 1) / 2);
        let plane = h * w;
        let mut data = vec![0f64; self.out_channels * plane];
        data.par_chunks_mut(plane).enumerate().for_each(|(o, out)| {
            out.fill(self.biases[o] as f64);
            for i in 0..self.in_channels {
                let src = &input.data[i * plane..(i + 1) * plane];
                for r in 0..kh {
                    let dy = r as isize - top as isize;
                    let (y0, y1) = valid_range(dy, h);
                    for c in 0..kw {
                        let dx = c as isize - left as isize;
                        let (x0, x1) = valid_range(dx, w);
                        if x0 == x1 {
                            continue;
                        }
                        let wt = self.weights[((o * self.in_channels + i) * kh + r) * kw + c] as f64;
                        for y in y0..y1 {
                            let sy = (y as isize + dy) as usize;
                            let dst = &mut out[y * w + x0..y * w + x1];
                            let s = &src[sy * w + (x0 as isize + dx) as usize..sy * w + (x1 as isize + dx) as usize];
                            for (d, &v) in dst.iter_mut().zip(s) {
                                *d += wt * v;
                            }
                        }
                    }
                }
            }
        });
        Tensor {
            channels: self.out_channels,
            height: h,
            width: w,
            data,
        }
    }
}

// Output indices whose source `index + offset` stays inside `0..len`.
fn valid_range(offset: isize, len: usize) -> (usize, usize) {
    let lo = (-offset).max(0) as usize;
    let hi = (len as isize - offset).clamp(0, len as isize) as usize;
    (lo.min(hi), hi)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    Input,
    Conv2d(Conv2d),
    Relu,
    Add,
    Concat,
}

impl Op {
    fn code(&self) -> u8 {
        match self {
            Op::Input => 0,
            Op::Conv2d(_) => 1,
            Op::Relu => 2,
            Op::Add => 3,
            Op::Concat => 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub op: Op,
    pub inputs: Vec<NodeId>,
}

#[derive(Clone, Debug)]
struct Tensor {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

/// A validated DAG of convolution, ReLU, add and concat nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvGraph {
    nodes: Vec<Node>,
    channels: Vec<usize>,
}

impl ConvGraph {
    /// Validates node order, references and channel counts.
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        let mut channels = Vec::with_capacity(nodes.len());
        let mut inputs_seen = 0;
        for (idx, node) in nodes.iter().enumerate() {
            if let Some(&bad) = node.inputs.iter().find(|&&r| r >= idx) {
                return Err(Error::DanglingInputRef { node: idx, input: bad });
            }
            let arity = |want: &str, ok: bool| {
                if ok {
                    Ok(())
                } else {
                    Err(Error::ShapeMismatch(format!(
                        "node {idx} takes {want} input(s), got {}",
                        node.inputs.len()
                    )))
                }
            };
            let ch = match &node.op {
                Op::Input => {
                    arity("0", node.inputs.is_empty())?;
                    inputs_seen += 1;
                    1
                }
                Op::Conv2d(conv) => {
                    arity("1", node.inputs.len() == 1)?;
                    conv.check()?;
                    let got = channels[node.inputs[0]];
                    if got != conv.in_channels {
                        return Err(Error::ShapeMismatch(format!(
                            "node {idx} expects {} channels, input has {got}",
                            conv.in_channels
                        )));
                    }
                    conv.out_channels
                }
                Op::Relu => {
                    arity("1", node.inputs.len() == 1)?;
                    channels[node.inputs[0]]
                }
                Op::Add => {
                    arity("at least 1", !node.inputs.is_empty())?;
                    let first = channels[node.inputs[0]];
                    if node.inputs.iter().any(|&r| channels[r] != first) {
                        return Err(Error::ShapeMismatch(format!("node {idx} adds tensors of different depth")));
                    }
                    first
                }
                Op::Concat => {
                    arity("at least 1", !node.inputs.is_empty())?;
                    node.inputs.iter().map(|&r| channels[r]).sum()
                }
            };
            channels.push(ch);
        }
        if inputs_seen != 1 {
            return Err(Error::ShapeMismatch(format!("graph has {inputs_seen} input nodes, expected 1")));
        }
        match channels.last() {
            Some(1) => {}
            Some(&c) => return Err(Error::ShapeMismatch(format!("output node has {c} channels, expected 1"))),
            None => return Err(Error::ShapeMismatch("empty graph".into())),
        }
        Ok(ConvGraph { nodes, channels })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    /// A single 1×1 convolution with weight 1 and bias 0.
    pub fn identity() -> Self {
        let mut b = GraphBuilder::new();
        let x = b.input();
        b.conv(x, Conv2d::new(1, 1, 1, 1, vec![1.0], vec![0.0]).unwrap());
        b.build().unwrap()
    }

    /// A single `k`×`k` convolution with every weight `1/k²`.
    pub fn box_mean(k: usize) -> Self {
        let mut b = GraphBuilder::new();
        let x = b.input();
        let w = vec![1.0 / (k * k) as f32; k * k];
        b.conv(x, Conv2d::new(k, k, 1, 1, w, vec![0.0]).unwrap());
        b.build().unwrap()
    }

    /// Evaluates the graph on `img` scaled to `[0, 1]`; returns the raw
    /// single-channel output, row-major.
    pub fn forward(&self, img: &PixelPlane) -> Result<Vec<f64>> {
        if img.is_empty() {
            return Err(Error::GraphEval("empty input plane".into()));
        }
        let input = Tensor {
            channels: 1,
            height: img.height(),
            width: img.width(),
            data: img.samples().iter().map(|&v| v as f64 / 255.0).collect(),
        };
        let mut values: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        let mut remaining_uses = vec![0usize; self.nodes.len()];
        for node in &self.nodes {
            for &r in &node.inputs {
                remaining_uses[r] += 1;
            }
        }
        for (idx, node) in self.nodes.iter().enumerate() {
            let out = {
                let arg = |k: usize| -> Result<&Tensor> {
                    values[node.inputs[k]]
                        .as_ref()
                        .ok_or_else(|| Error::GraphEval(format!("node {idx}: input {} not available", node.inputs[k])))
                };
                match &node.op {
                    Op::Input => input.clone(),
                    Op::Conv2d(conv) => {
                        let x = arg(0)?;
                        if x.channels != conv.in_channels {
                            return Err(Error::GraphEval(format!("node {idx}: channel mismatch")));
                        }
                        conv.forward(x)
                    }
                    Op::Relu => {
                        let mut t = arg(0)?.clone();
                        t.data.iter_mut().for_each(|v| *v = v.max(0.0));
                        t
                    }
                    Op::Add => {
                        let mut t = arg(0)?.clone();
                        for k in 1..node.inputs.len() {
                            let other = arg(k)?;
                            if other.data.len() != t.data.len() {
                                return Err(Error::GraphEval(format!("node {idx}: add shape mismatch")));
                            }
                            t.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
                        }
                        t
                    }
                    Op::Concat => {
                        let first = arg(0)?;
                        let mut t = Tensor {
                            channels: 0,
                            height: first.height,
                            width: first.width,
                            data: Vec::new(),
                        };
                        for k in 0..node.inputs.len() {
                            let part = arg(k)?;
                            t.channels += part.channels;
                            t.data.extend_from_slice(&part.data);
                        }
                        t
                    }
                }
            };
            debug_assert_eq!(out.channels, self.channels[idx]);
            for &r in &node.inputs {
                remaining_uses[r] -= 1;
                if remaining_uses[r] == 0 {
                    values[r] = None;
                }
            }
            values[idx] = Some(out);
        }
        let out = values.pop().flatten().ok_or_else(|| Error::GraphEval("no output".into()))?;
        Ok(out.data)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&NNPW_MAGIC);
        out.extend_from_slice(&NNPW_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.nodes.len() as u32).to_le_bytes());
        for node in &self.nodes {
            out.push(node.op.code());
            out.push(node.inputs.len() as u8);
            for &r in &node.inputs {
                out.extend_from_slice(&(r as u32).to_le_bytes());
            }
            if let Op::Conv2d(c) = &node.op {
                for d in [c.kernel_height, c.kernel_width, c.in_channels, c.out_channels] {
                    out.extend_from_slice(&(d as u16).to_le_bytes());
                }
                for v in c.weights.iter().chain(&c.biases) {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { bytes, pos: 0 };
        let magic: [u8; 4] = r.take(4)?.try_into().unwrap();
        if magic != NNPW_MAGIC {
            return Err(Error::BadMagic(magic));
        }
        let version = r.u32()?;
        if version != NNPW_VERSION {
            return Err(Error::VersionUnsupported(version));
        }
        let count = r.u32()? as usize;
        let mut nodes = Vec::with_capacity(count.min(4096));
        for _ in 0..count {
            let code = r.u8()?;
            let n_inputs = r.u8()? as usize;
            let inputs = (0..n_inputs).map(|_| r.u32().map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
            let op = match code {
                0 => Op::Input,
                1 => {
                    let kh = r.u16()? as usize;
                    let kw = r.u16()? as usize;
                    let in_c = r.u16()? as usize;
                    let out_c = r.u16()? as usize;
                    let weights = r.f32s(out_c * in_c * kh * kw)?;
                    let biases = r.f32s(out_c)?;
                    Op::Conv2d(Conv2d {
                        kernel_height: kh,
                        kernel_width: kw,
                        in_channels: in_c,
                        out_channels: out_c,
                        weights,
                        biases,
                    })
                }
                2 => Op::Relu,
                3 => Op::Add,
                4 => Op::Concat,
                other => return Err(Error::UnsupportedFormat(format!("unknown NNPW op code {other}"))),
            };
            nodes.push(Node { op, inputs });
        }
        if r.pos != bytes.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} trailing bytes after the last node",
                bytes.len() - r.pos
            )));
        }
        ConvGraph::new(nodes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        ConvGraph::from_bytes(&fs::read(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "weight file ends at byte {} but {n} more bytes were declared",
                self.bytes.len()
            ))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let raw = self.take(n.checked_mul(4).ok_or_else(|| Error::ShapeMismatch("tensor too large".into()))?)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Incremental construction of a [`ConvGraph`].
#[derive(Debug, Default)]
pub struct GraphBuilder {
    nodes: Vec<Node>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, inputs: Vec<NodeId>) -> NodeId {
        self.nodes.push(Node { op, inputs });
        self.nodes.len() - 1
    }

    pub fn input(&mut self) -> NodeId {
        self.push(Op::Input, vec![])
    }

    pub fn conv(&mut self, from: NodeId, conv: Conv2d) -> NodeId {
        self.push(Op::Conv2d(conv), vec![from])
    }

    pub fn relu(&mut self, from: NodeId) -> NodeId {
        self.push(Op::Relu, vec![from])
    }

    pub fn add(&mut self, from: &[NodeId]) -> NodeId {
        self.push(Op::Add, from.to_vec())
    }

    pub fn concat(&mut self, from: &[NodeId]) -> NodeId {
        self.push(Op::Concat, from.to_vec())
    }

    pub fn build(self) -> Result<ConvGraph> {
        ConvGraph::new(self.nodes)
    }

    /// Multi-scale predictor: parallel 3×3, 5×5 and 7×7 branches of
    /// `channels` maps each, concatenated and fused by two 3×3 convolutions,
    /// ReLU after every convolution but the last, plus a skip connection
    /// from the input. Weights are random; train externally for real use.
    pub fn mscnn_lite<R: Rng>(channels: usize, rng: &mut R) -> ConvGraph {
        let mut b = GraphBuilder::new();
        let x = b.input();
        let branches: Vec<NodeId> = [3, 5, 7]
            .into_iter()
            .map(|k| {
                let c = b.conv(x, Conv2d::random(k, k, 1, channels, 1.0, rng));
                b.relu(c)
            })
            .collect();
        let cat = b.concat(&branches);
        let f = b.conv(cat, Conv2d::random(3, 3, 3 * channels, channels, 1.0, rng));
        let f = b.relu(f);
        let out = b.conv(f, Conv2d::random(3, 3, channels, 1, 0.05, rng));
        b.add(&[x, out]);
        b.build().expect("mscnn-lite graph is well formed")
    }
}
