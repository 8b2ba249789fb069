//! Reference forward-pass interpreter with synthesized weights.
//!
//! Numerics are float32 for correctness checking; the byte accounting
//! separately assumes one byte per activation element to mirror the 8-bit
//! deployment model. The interpreter counts every multiply-accumulate it
//! actually performs and tracks live-tensor bytes with last-use freeing, so a
//! trace doubles as the instrumentation oracle for the analytic estimator:
//! both sides implement the same documented counting conventions
//! independently (loop trip counts here, closed formulas there).
//!
//! Weights are drawn per layer from a counter-seeded ChaCha8 stream, uniform
//! in [-0.1, 0.1]: weights first, then biases; for squeeze-excite, first
//! dense weights, first bias, second dense weights, second bias.

// The kernels below juggle several flat buffers per loop; explicit indices
// keep the addressing arithmetic visible.
#![allow(clippy::needless_range_loop)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::archgraph::{ComputationGraph, LayerKind, Shape};

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("input tensor shape {actual:?} does not match graph input {expected:?}")]
    InputShape { expected: Shape, actual: Shape },
    #[error("layer {layer}: shape mismatch: {reason}")]
    ShapeMismatch { layer: usize, reason: String },
    #[error("tensor data length {len} does not match shape {shape:?}")]
    DataLength { shape: Shape, len: usize },
    #[error("head tensor with {channels} channels cannot split into {anchors} anchors of 5+K values")]
    HeadChannels { channels: usize, anchors: usize },
}

/// Row-major, channel-last dense tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Shape,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn zeros(shape: Shape) -> Self {
        Tensor {
            data: vec![0.0; shape.elements()],
            shape,
        }
    }

    pub fn from_vec(shape: Shape, data: Vec<f32>) -> Result<Self, ExecError> {
        if data.len() != shape.elements() {
            return Err(ExecError::DataLength {
                shape,
                len: data.len(),
            });
        }
        Ok(Tensor { shape, data })
    }

    /// Deterministic pseudo-random tensor in [-1, 1], e.g. a synthetic input.
    pub fn random(shape: Shape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..shape.elements())
            .map(|_| rng.gen_range(-1.0f32..1.0))
            .collect();
        Tensor { shape, data }
    }

    #[inline]
    fn at(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.shape.w + x) * self.shape.c + c]
    }

    /// FNV-1a over the little-endian float bit patterns.
    pub fn checksum(&self) -> u64 {
        let mut hash = 0xcbf2_9ce4_8422_2325u64;
        for v in &self.data {
            for b in v.to_le_bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionTrace {
    pub macc_performed: u64,
    /// Peak of the simulated allocator, one byte per element.
    pub peak_live_bytes: u64,
    pub per_layer_output_checksums: Vec<u64>,
}

#[inline]
fn swish(x: f32) -> f32 {
    x / (1.0 + (-x).exp())
}

#[inline]
fn sigmoid32(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

fn layer_rng(seed: u64, layer_index: usize) -> ChaCha8Rng {
    let mixed = seed ^ (layer_index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    ChaCha8Rng::seed_from_u64(mixed)
}

fn draw(rng: &mut ChaCha8Rng, n: usize) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(-0.1f32..0.1)).collect()
}

// Standard convolution, same padding; weights laid out [out_c][ky][kx][in_c].
// Padded taps multiply an explicit zero so the counter reflects the full
// k²·C_in window at every output position.
fn conv2d(
    input: &Tensor,
    out_shape: Shape,
    kernel: (usize, usize),
    stride: usize,
    act: bool,
    rng: &mut ChaCha8Rng,
    macc: &mut u64,
) -> Tensor {
    let (kh, kw) = kernel;
    let in_c = input.shape.c;
    let weights = draw(rng, kh * kw * in_c * out_shape.c);
    let bias = draw(rng, out_shape.c);
    let pad_h = ((out_shape.h - 1) * stride + kh).saturating_sub(input.shape.h) / 2;
    let pad_w = ((out_shape.w - 1) * stride + kw).saturating_sub(input.shape.w) / 2;
    let mut out = Tensor::zeros(out_shape);
    let mut count = 0u64;
    for oy in 0..out_shape.h {
        for ox in 0..out_shape.w {
            for oc in 0..out_shape.c {
                let mut acc = bias[oc];
                let wbase = oc * kh * kw * in_c;
                for ky in 0..kh {
                    let iy = (oy * stride + ky) as isize - pad_h as isize;
                    for kx in 0..kw {
                        let ix = (ox * stride + kx) as isize - pad_w as isize;
                        let inside = iy >= 0
                            && (iy as usize) < input.shape.h
                            && ix >= 0
                            && (ix as usize) < input.shape.w;
                        let wrow = wbase + (ky * kw + kx) * in_c;
                        for ic in 0..in_c {
                            let v = if inside {
                                input.at(iy as usize, ix as usize, ic)
                            } else {
                                0.0
                            };
                            acc += weights[wrow + ic] * v;
                            count += 1;
                        }
                    }
                }
                out.data[(oy * out_shape.w + ox) * out_shape.c + oc] =
                    if act { swish(acc) } else { acc };
            }
        }
    }
    *macc += count;
    out
}

// Depthwise 3x3 (or general k) convolution; weights [c][ky][kx].
fn depthwise2d(
    input: &Tensor,
    out_shape: Shape,
    kernel: (usize, usize),
    stride: usize,
    rng: &mut ChaCha8Rng,
    macc: &mut u64,
) -> Tensor {
    let (kh, kw) = kernel;
    let c = input.shape.c;
    let weights = draw(rng, kh * kw * c);
    let bias = draw(rng, c);
    let pad_h = ((out_shape.h - 1) * stride + kh).saturating_sub(input.shape.h) / 2;
    let pad_w = ((out_shape.w - 1) * stride + kw).saturating_sub(input.shape.w) / 2;
    let mut out = Tensor::zeros(out_shape);
    let mut count = 0u64;
    for oy in 0..out_shape.h {
        for ox in 0..out_shape.w {
            for ch in 0..c {
                let mut acc = bias[ch];
                for ky in 0..kh {
                    let iy = (oy * stride + ky) as isize - pad_h as isize;
                    for kx in 0..kw {
                        let ix = (ox * stride + kx) as isize - pad_w as isize;
                        let inside = iy >= 0
                            && (iy as usize) < input.shape.h
                            && ix >= 0
                            && (ix as usize) < input.shape.w;
                        let v = if inside {
                            input.at(iy as usize, ix as usize, ch)
                        } else {
                            0.0
                        };
                        acc += weights[ch * kh * kw + ky * kw + kx] * v;
                        count += 1;
                    }
                }
                out.data[(oy * out_shape.w + ox) * c + ch] = swish(acc);
            }
        }
    }
    *macc += count;
    out
}

// 1x1 convolution; weights [out_c][in_c].
fn pointwise(
    input: &Tensor,
    out_c: usize,
    act: bool,
    rng: &mut ChaCha8Rng,
    macc: &mut u64,
) -> Tensor {
    let in_c = input.shape.c;
    let weights = draw(rng, in_c * out_c);
    let bias = draw(rng, out_c);
    let mut out = Tensor::zeros(Shape::new(input.shape.h, input.shape.w, out_c));
    let mut count = 0u64;
    for px in 0..input.shape.h * input.shape.w {
        let in_base = px * in_c;
        let out_base = px * out_c;
        for oc in 0..out_c {
            let mut acc = bias[oc];
            let wrow = oc * in_c;
            for ic in 0..in_c {
                acc += weights[wrow + ic] * input.data[in_base + ic];
                count += 1;
            }
            out.data[out_base + oc] = if act { swish(acc) } else { acc };
        }
    }
    *macc += count;
    out
}

// Squeeze-excite: global average pool, dense (swish), dense (sigmoid), then
// per-channel rescale. The pool accumulations and the two dense layers count
// as MACCs; the final rescale is a multiply without accumulation and does not.
fn squeeze_excite(input: &Tensor, hidden: usize, rng: &mut ChaCha8Rng, macc: &mut u64) -> Tensor {
    let c = input.shape.c;
    let pixels = input.shape.h * input.shape.w;
    let w1 = draw(rng, c * hidden);
    let b1 = draw(rng, hidden);
    let w2 = draw(rng, hidden * c);
    let b2 = draw(rng, c);
    let mut count = 0u64;

    let mut pooled = vec![0.0f32; c];
    for px in 0..pixels {
        for ch in 0..c {
            pooled[ch] += input.data[px * c + ch];
            count += 1;
        }
    }
    for v in pooled.iter_mut() {
        *v /= pixels as f32;
    }

    let mut mid = vec![0.0f32; hidden];
    for (h, m) in mid.iter_mut().enumerate() {
        let mut acc = b1[h];
        for ch in 0..c {
            acc += w1[h * c + ch] * pooled[ch];
            count += 1;
        }
        *m = swish(acc);
    }

    let mut gate = vec![0.0f32; c];
    for (ch, g) in gate.iter_mut().enumerate() {
        let mut acc = b2[ch];
        for (h, m) in mid.iter().enumerate() {
            acc += w2[ch * hidden + h] * m;
            count += 1;
        }
        *g = sigmoid32(acc);
    }

    let mut out = Tensor::zeros(input.shape);
    for px in 0..pixels {
        for ch in 0..c {
            out.data[px * c + ch] = input.data[px * c + ch] * gate[ch];
        }
    }
    *macc += count;
    out
}

fn upsample_nearest(input: &Tensor, out_shape: Shape) -> Tensor {
    let factor = out_shape.h / input.shape.h;
    let mut out = Tensor::zeros(out_shape);
    for oy in 0..out_shape.h {
        for ox in 0..out_shape.w {
            for ch in 0..out_shape.c {
                out.data[(oy * out_shape.w + ox) * out_shape.c + ch] =
                    input.at(oy / factor, ox / factor, ch);
            }
        }
    }
    out
}

/// Execute the graph on `input`, synthesizing weights from `seed`.
pub fn run(graph: &ComputationGraph, input: &Tensor, seed: u64) -> Result<(Tensor, ExecutionTrace), ExecError> {
    if input.shape != graph.input_shape {
        return Err(ExecError::InputShape {
            expected: graph.input_shape,
            actual: input.shape,
        });
    }
    let n = graph.layers.len();

    // Tensor id 0 is the graph input; id i+1 is layer i's output. Free each
    // tensor right after its last consumer, mirroring the analytic liveness
    // model so the two peak numbers agree exactly.
    let mut last_use: Vec<usize> = (0..=n).map(|t| t.saturating_sub(1)).collect();
    for (i, layer) in graph.layers.iter().enumerate() {
        last_use[i] = last_use[i].max(i);
        if let Some(src) = layer.skip_source {
            last_use[src + 1] = last_use[src + 1].max(i);
        }
    }

    let mut slots: Vec<Option<Tensor>> = (0..=n).map(|_| None).collect();
    slots[0] = Some(input.clone());
    let mut live_bytes = input.shape.elements() as u64;
    let mut peak = live_bytes;
    let mut macc = 0u64;
    let mut checksums = Vec::with_capacity(n);

    for (i, layer) in graph.layers.iter().enumerate() {
        let chain = slots[i].as_ref().expect("chain input is live");
        if chain.shape != layer.input_shapes[0] {
            return Err(ExecError::ShapeMismatch {
                layer: i,
                reason: format!(
                    "expected input {:?}, found {:?}",
                    layer.input_shapes[0], chain.shape
                ),
            });
        }
        let mut rng = layer_rng(seed, i);
        let out_shape = layer.output_shape;
        let out = match layer.kind {
            LayerKind::StandardConv => {
                let kernel = layer.kernel.ok_or_else(|| ExecError::ShapeMismatch {
                    layer: i,
                    reason: "standard conv without kernel".into(),
                })?;
                conv2d(chain, out_shape, kernel, layer.stride, true, &mut rng, &mut macc)
            }
            LayerKind::DepthwiseConv => {
                let kernel = layer.kernel.ok_or_else(|| ExecError::ShapeMismatch {
                    layer: i,
                    reason: "depthwise conv without kernel".into(),
                })?;
                if chain.shape.c != out_shape.c {
                    return Err(ExecError::ShapeMismatch {
                        layer: i,
                        reason: "depthwise conv cannot change channels".into(),
                    });
                }
                depthwise2d(chain, out_shape, kernel, layer.stride, &mut rng, &mut macc)
            }
            LayerKind::PointwiseConv => pointwise(chain, out_shape.c, true, &mut rng, &mut macc),
            LayerKind::DetectionHeadConv => pointwise(chain, out_shape.c, false, &mut rng, &mut macc),
            LayerKind::SqueezeExcite { hidden } => squeeze_excite(chain, hidden, &mut rng, &mut macc),
            LayerKind::Upsample => upsample_nearest(chain, out_shape),
            LayerKind::Activation => Tensor {
                shape: chain.shape,
                data: chain.data.iter().map(|&x| swish(x)).collect(),
            },
            LayerKind::GlobalPool => {
                let c = chain.shape.c;
                let pixels = chain.shape.h * chain.shape.w;
                let mut pooled = vec![0.0f32; c];
                for px in 0..pixels {
                    for ch in 0..c {
                        pooled[ch] += chain.data[px * c + ch];
                        macc += 1;
                    }
                }
                for v in pooled.iter_mut() {
                    *v /= pixels as f32;
                }
                Tensor::from_vec(Shape::new(1, 1, c), pooled).expect("pooled shape")
            }
            LayerKind::AddSkip | LayerKind::ConcatSkip => {
                let other = match layer.skip_source {
                    Some(src) => slots[src + 1].as_ref().expect("skip operand is live"),
                    None => chain,
                };
                if layer.kind == LayerKind::AddSkip {
                    if chain.shape != other.shape {
                        return Err(ExecError::ShapeMismatch {
                            layer: i,
                            reason: "add-skip operands differ in shape".into(),
                        });
                    }
                    let data = chain
                        .data
                        .iter()
                        .zip(other.data.iter())
                        .map(|(&a, &b)| a + b)
                        .collect();
                    macc += chain.shape.elements() as u64;
                    Tensor {
                        shape: chain.shape,
                        data,
                    }
                } else {
                    if (chain.shape.h, chain.shape.w) != (other.shape.h, other.shape.w) {
                        return Err(ExecError::ShapeMismatch {
                            layer: i,
                            reason: "concat-skip operands differ in spatial dims".into(),
                        });
                    }
                    let c = chain.shape.c + other.shape.c;
                    let mut out = Tensor::zeros(Shape::new(chain.shape.h, chain.shape.w, c));
                    for px in 0..chain.shape.h * chain.shape.w {
                        for ch in 0..chain.shape.c {
                            out.data[px * c + ch] = chain.data[px * chain.shape.c + ch];
                        }
                        for ch in 0..other.shape.c {
                            out.data[px * c + chain.shape.c + ch] =
                                other.data[px * other.shape.c + ch];
                        }
                    }
                    out
                }
            }
        };
        if out.shape != out_shape {
            return Err(ExecError::ShapeMismatch {
                layer: i,
                reason: format!("produced {:?}, descriptor says {:?}", out.shape, out_shape),
            });
        }
        checksums.push(out.checksum());
        live_bytes += out.shape.elements() as u64;
        peak = peak.max(live_bytes);
        slots[i + 1] = Some(out);
        // Retire tensors whose last consumer has now run (keep the final output).
        for t in 0..=n {
            if t != n && last_use[t] == i {
                if let Some(tensor) = slots[t].take() {
                    live_bytes -= tensor.shape.elements() as u64;
                }
            }
        }
    }

    let output = slots[n].take().expect("final output produced");
    Ok((
        output,
        ExecutionTrace {
            macc_performed: macc,
            peak_live_bytes: peak,
            per_layer_output_checksums: checksums,
        },
    ))
}

/// One decoded head box in normalized image coordinates (center format).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
    pub confidence: f64,
    pub class_id: usize,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Five width/height priors in normalized units, shaped like a standing
/// pedestrian at increasing scales. Arbitrary defaults; override per dataset.
pub fn default_anchors() -> Vec<(f64, f64)> {
    vec![
        (0.05, 0.12),
        (0.09, 0.22),
        (0.14, 0.34),
        (0.22, 0.52),
        (0.36, 0.78),
    ]
}

/// Decode a head tensor: per cell and anchor, channels [t_x, t_y, t_w, t_h,
/// t_o, class logits...]. Centers are (σ(t)+cell)/grid, sizes anchor·exp(t),
/// confidence σ(t_o)·softmax-class-probability. Emits boxes with confidence
/// strictly above the threshold.
pub fn decode_head(
    head: &Tensor,
    anchors: &[(f64, f64)],
    conf_threshold: f64,
) -> Result<Vec<DecodedBox>, ExecError> {
    let channels = head.shape.c;
    let a = anchors.len();
    if a == 0 || !channels.is_multiple_of(a) || channels / a < 5 {
        return Err(ExecError::HeadChannels {
            channels,
            anchors: a,
        });
    }
    let k = channels / a - 5;
    let (grid_h, grid_w) = (head.shape.h, head.shape.w);
    let mut boxes = Vec::new();
    for cy in 0..grid_h {
        for cx in 0..grid_w {
            for (ai, &(aw, ah)) in anchors.iter().enumerate() {
                let at = |ch: usize| head.at(cy, cx, ai * (5 + k) + ch) as f64;
                let obj = sigmoid(at(4));
                let (class_id, class_prob) = if k == 0 {
                    (0, 1.0)
                } else {
                    let logits: Vec<f64> = (0..k).map(|c| at(5 + c)).collect();
                    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
                    let sum: f64 = exps.iter().sum();
                    let (best, best_exp) = exps
                        .iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |acc, (i, &e)| {
                            if e > acc.1 {
                                (i, e)
                            } else {
                                acc
                            }
                        });
                    (best, best_exp / sum)
                };
                let confidence = obj * class_prob;
                if confidence > conf_threshold {
                    boxes.push(DecodedBox {
                        cx: (sigmoid(at(0)) + cx as f64) / grid_w as f64,
                        cy: (sigmoid(at(1)) + cy as f64) / grid_h as f64,
                        w: aw * at(2).exp(),
                        h: ah * at(3).exp(),
                        confidence,
                        class_id,
                    });
                }
            }
        }
    }
    Ok(boxes)
}

fn box_iou(a: &DecodedBox, b: &DecodedBox) -> f64 {
    let (al, at_, ar, ab) = (a.cx - a.w / 2.0, a.cy - a.h / 2.0, a.cx + a.w / 2.0, a.cy + a.h / 2.0);
    let (bl, bt, br, bb) = (b.cx - b.w / 2.0, b.cy - b.h / 2.0, b.cx + b.w / 2.0, b.cy + b.h / 2.0);
    let iw = (ar.min(br) - al.max(bl)).max(0.0);
    let ih = (ab.min(bb) - at_.max(bt)).max(0.0);
    let inter = iw * ih;
    let union = a.w * a.h + b.w * b.h - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

/// Greedy non-maximum suppression: highest confidence first, suppressing
/// boxes that overlap a kept box above `iou_threshold` (same class only).
pub fn nms(boxes: &[DecodedBox], iou_threshold: f64) -> Vec<DecodedBox> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&i, &j| {
        boxes[j]
            .confidence
            .partial_cmp(&boxes[i].confidence)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(i.cmp(&j))
    });
    let mut kept: Vec<DecodedBox> = Vec::new();
    for &i in &order {
        let candidate = boxes[i];
        let suppressed = kept.iter().any(|k| {
            k.class_id == candidate.class_id && box_iou(k, &candidate) > iou_threshold
        });
        if !suppressed {
            kept.push(candidate);
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archgraph::{build_phinet, ArchitectureSpec, LayerDescriptor};
    use crate::resources::{count_layer, estimate};

    fn self_add_graph(shape: Shape) -> ComputationGraph {
        let mut layer = LayerDescriptor {
            kind: LayerKind::AddSkip,
            input_shapes: vec![shape, shape],
            output_shape: shape,
            kernel: None,
            stride: 1,
            parameter_count: 0,
            macc_count: 0,
            skip_source: None,
        };
        let (macc, params) = count_layer(&layer).unwrap();
        layer.macc_count = macc;
        layer.parameter_count = params;
        ComputationGraph {
            layers: vec![layer],
            input_shape: shape,
            output_shape: shape,
            block_boundaries: vec![],
            spec: ArchitectureSpec::new(32, 32, 0.5, 1, 1.0, 2.0),
        }
    }

    #[test]
    fn add_skip_of_a_tensor_with_itself_doubles_it() {
        let shape = Shape::new(2, 2, 3);
        let graph = self_add_graph(shape);
        let input = Tensor::random(shape, 7);
        let (out, trace) = run(&graph, &input, 0).unwrap();
        for (o, i) in out.data.iter().zip(input.data.iter()) {
            assert_eq!(*o, 2.0 * i);
        }
        assert_eq!(trace.macc_performed, 12);
    }

    #[test]
    fn same_seed_gives_identical_traces() {
        let spec = ArchitectureSpec::new(64, 64, 0.2, 4, 1.0, 3.0);
        let graph = build_phinet(&spec).unwrap();
        let input = Tensor::random(graph.input_shape, 3);
        let (out_a, trace_a) = run(&graph, &input, 42).unwrap();
        let (out_b, trace_b) = run(&graph, &input, 42).unwrap();
        assert_eq!(out_a, out_b);
        assert_eq!(trace_a, trace_b);
        let (_, trace_c) = run(&graph, &input, 43).unwrap();
        assert_ne!(trace_a.per_layer_output_checksums, trace_c.per_layer_output_checksums);
    }

    #[test]
    fn instrumented_counters_match_the_analytic_estimate() {
        let spec = ArchitectureSpec::new(64, 64, 0.25, 5, 0.8, 4.0);
        let graph = build_phinet(&spec).unwrap();
        let report = estimate(&graph);
        let input = Tensor::random(graph.input_shape, 1);
        let (_, trace) = run(&graph, &input, 9).unwrap();
        assert_eq!(trace.macc_performed, report.macc_total);
        assert_eq!(trace.peak_live_bytes, report.peak_working_memory);
    }

    #[test]
    fn output_grid_is_one_sixteenth_of_the_input() {
        let spec = ArchitectureSpec::new(96, 96, 0.2, 5, 1.0, 3.0);
        let graph = build_phinet(&spec).unwrap();
        let input = Tensor::random(graph.input_shape, 2);
        let (out, _) = run(&graph, &input, 0).unwrap();
        assert_eq!((out.shape.h, out.shape.w), (6, 6));
        assert_eq!(out.shape.c, graph.spec.head_channels());
    }

    #[test]
    fn wrong_input_shape_is_rejected() {
        let spec = ArchitectureSpec::new(64, 64, 0.2, 4, 1.0, 3.0);
        let graph = build_phinet(&spec).unwrap();
        let input = Tensor::zeros(Shape::new(32, 32, 3));
        assert!(matches!(run(&graph, &input, 0), Err(ExecError::InputShape { .. })));
    }

    #[test]
    fn zero_logits_decode_to_cell_centered_priors() {
        // One anchor, one class: 6 channels of zeros on a 4x4 grid.
        let head = Tensor::zeros(Shape::new(4, 4, 6));
        let anchors = [(0.2, 0.4)];

        // σ(0)=0.5 < 0.6: nothing clears the threshold.
        assert!(decode_head(&head, &anchors, 0.6).unwrap().is_empty());

        // At 0.4 every cell emits one box at its center with the prior size.
        let boxes = decode_head(&head, &anchors, 0.4).unwrap();
        assert_eq!(boxes.len(), 16);
        let b = &boxes[0];
        assert!((b.cx - 0.125).abs() < 1e-12);
        assert!((b.cy - 0.125).abs() < 1e-12);
        assert!((b.w - 0.2).abs() < 1e-12);
        assert!((b.h - 0.4).abs() < 1e-12);
        assert!((b.confidence - 0.5).abs() < 1e-12);
    }

    #[test]
    fn saturated_objectness_approaches_one() {
        let mut head = Tensor::zeros(Shape::new(1, 1, 6));
        head.data[4] = 10.0;
        let boxes = decode_head(&head, &[(0.2, 0.4)], 0.5).unwrap();
        assert_eq!(boxes.len(), 1);
        assert!((boxes[0].confidence - 0.9999).abs() < 1e-4);
    }

    #[test]
    fn decode_inverts_encoding() {
        // Encode a known box into logits, decode, and compare.
        let anchors = [(0.2f64, 0.4f64)];
        let (grid_w, grid_h) = (4.0f64, 4.0f64);
        let target = (0.3f64, 0.7f64, 0.25f64, 0.5f64); // cx, cy, w, h
        let cell = (1usize, 2usize); // cx in [1/4, 2/4), cy in [2/4, 3/4)
        let logit = |p: f64| (p / (1.0 - p)).ln();
        let tx = logit(target.0 * grid_w - cell.0 as f64);
        let ty = logit(target.1 * grid_h - cell.1 as f64);
        let tw = (target.2 / anchors[0].0).ln();
        let th = (target.3 / anchors[0].1).ln();
        let mut head = Tensor::zeros(Shape::new(4, 4, 6));
        let base = (cell.1 * 4 + cell.0) * 6;
        head.data[base] = tx as f32;
        head.data[base + 1] = ty as f32;
        head.data[base + 2] = tw as f32;
        head.data[base + 3] = th as f32;
        head.data[base + 4] = 5.0;
        let boxes = decode_head(&head, &anchors, 0.9).unwrap();
        assert_eq!(boxes.len(), 1);
        let b = &boxes[0];
        // f32 logit storage limits round-trip accuracy, not the decode math.
        assert!((b.cx - target.0).abs() / target.0 < 1e-6);
        assert!((b.cy - target.1).abs() / target.1 < 1e-6);
        assert!((b.w - target.2).abs() / target.2 < 1e-6);
        assert!((b.h - target.3).abs() / target.3 < 1e-6);
    }

    #[test]
    fn channel_count_must_match_anchors() {
        // 7 channels don't split across 2 anchors...
        let head = Tensor::zeros(Shape::new(2, 2, 7));
        assert!(matches!(
            decode_head(&head, &[(0.2, 0.4), (0.3, 0.6)], 0.5),
            Err(ExecError::HeadChannels { .. })
        ));
        // ...and 4 channels are too few for even one anchor's 5 box values.
        let thin = Tensor::zeros(Shape::new(2, 2, 4));
        assert!(matches!(
            decode_head(&thin, &[(0.2, 0.4)], 0.5),
            Err(ExecError::HeadChannels { .. })
        ));
    }

    #[test]
    fn nms_suppresses_overlaps_and_keeps_disjoint_boxes() {
        let mk = |cx: f64, conf: f64| DecodedBox {
            cx,
            cy: 0.5,
            w: 0.2,
            h: 0.2,
            confidence: conf,
            class_id: 0,
        };
        let kept = nms(&[mk(0.50, 0.9), mk(0.52, 0.8), mk(0.90, 0.7)], 0.45);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].confidence, 0.9);
        assert_eq!(kept[1].confidence, 0.7);
    }
}
