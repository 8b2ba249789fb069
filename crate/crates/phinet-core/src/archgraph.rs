//! Architecture hyperparameters and their materialization into an explicit
//! layer-by-layer computation graph.
//!
//! A network is described by five scaling hyperparameters (α, B, β, t₀ and the
//! input resolution) and built as: a stride-2 stem convolution, `B` inverted
//! residual blocks (pointwise expansion → depthwise 3×3 → squeeze-excite →
//! pointwise projection, with add-skips between same-resolution bottlenecks),
//! a neck (2× nearest upsample + concatenation with the last stride-16
//! bottleneck), and optionally a single 1×1 detection-head convolution.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Version tag for serialized graph documents.
pub const GRAPH_FORMAT: &str = "phinet-graph/1";

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("input resolution {0}x{1} is not divisible by 32")]
    BadResolution(usize, usize),
    #[error("alpha {0} outside (0, 2]")]
    BadAlpha(f64),
    #[error("beta {0} outside (0, 2]")]
    BadBeta(f64),
    #[error("t_zero {0} outside [1, 10]")]
    BadTZero(f64),
    #[error("num_blocks must be >= 1")]
    BadNumBlocks,
    #[error("head requires num_anchors >= 1 and num_classes >= 1")]
    BadHead,
    #[error("se_reduce must be >= 1")]
    BadSeReduce,
    #[error("block index {index} out of range for {num_blocks} blocks")]
    BlockIndex { index: usize, num_blocks: usize },
    #[error("malformed graph document: {0}")]
    Parse(String),
    #[error("unsupported format tag {found:?}, expected {GRAPH_FORMAT:?}")]
    FormatTag { found: String },
    #[error("graph has no layers")]
    EmptyGraph,
    #[error("layer {index}: {reason}")]
    InvalidLayer { index: usize, reason: String },
}

/// Tensor shape, channel-last.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shape {
    pub h: usize,
    pub w: usize,
    pub c: usize,
}

impl Shape {
    pub fn new(h: usize, w: usize, c: usize) -> Self {
        Shape { h, w, c }
    }

    pub fn elements(&self) -> usize {
        self.h * self.w * self.c
    }
}

/// The five scaling hyperparameters plus input resolution and head options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureSpec {
    pub width: usize,
    pub height: usize,
    pub alpha: f64,
    pub num_blocks: usize,
    pub beta: f64,
    pub t_zero: f64,
    #[serde(default = "default_classes")]
    pub num_classes: usize,
    #[serde(default = "default_anchors")]
    pub num_anchors: usize,
    #[serde(default = "default_include_head")]
    pub include_head: bool,
    /// Hidden width of the squeeze-excite bottleneck. Constant by design so
    /// the squeeze MLP cost stays linear in the expansion factor; 8 ≈ a
    /// ratio-4 reduction of the nominal bottleneck width.
    #[serde(default = "default_se_reduce")]
    pub se_reduce: usize,
}

fn default_classes() -> usize {
    1
}
fn default_anchors() -> usize {
    5
}
fn default_include_head() -> bool {
    true
}
fn default_se_reduce() -> usize {
    8
}

impl ArchitectureSpec {
    /// A detection network (head included) with default class/anchor counts.
    pub fn new(width: usize, height: usize, alpha: f64, num_blocks: usize, beta: f64, t_zero: f64) -> Self {
        ArchitectureSpec {
            width,
            height,
            alpha,
            num_blocks,
            beta,
            t_zero,
            num_classes: default_classes(),
            num_anchors: default_anchors(),
            include_head: default_include_head(),
            se_reduce: default_se_reduce(),
        }
    }

    pub fn without_head(mut self) -> Self {
        self.include_head = false;
        self
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(32) || !self.height.is_multiple_of(32) {
            return Err(GraphError::BadResolution(self.width, self.height));
        }
        if !(self.alpha > 0.0 && self.alpha <= 2.0) {
            return Err(GraphError::BadAlpha(self.alpha));
        }
        if !(self.beta > 0.0 && self.beta <= 2.0) {
            return Err(GraphError::BadBeta(self.beta));
        }
        if !(self.t_zero >= 1.0 && self.t_zero <= 10.0) {
            return Err(GraphError::BadTZero(self.t_zero));
        }
        if self.num_blocks == 0 {
            return Err(GraphError::BadNumBlocks);
        }
        if self.include_head && (self.num_anchors == 0 || self.num_classes == 0) {
            return Err(GraphError::BadHead);
        }
        if self.se_reduce == 0 {
            return Err(GraphError::BadSeReduce);
        }
        Ok(())
    }

    /// Channels emitted by the detection head: anchors · (4 box + 1 objectness + classes).
    pub fn head_channels(&self) -> usize {
        self.num_anchors * (5 + self.num_classes)
    }
}

/// The seven benchmark configurations (resolution, α, B, β, t₀).
pub fn benchmark_specs() -> Vec<ArchitectureSpec> {
    [
        (128, 0.35, 7, 1.0, 6.0),
        (128, 0.25, 7, 1.0, 6.0),
        (96, 0.25, 7, 1.0, 5.0),
        (96, 0.15, 7, 1.0, 5.0),
        (160, 0.30, 7, 1.0, 5.0),
        (160, 0.20, 7, 1.0, 5.0),
        (128, 0.20, 7, 1.0, 5.0),
    ]
    .iter()
    .map(|&(res, alpha, b, beta, t0)| ArchitectureSpec::new(res, res, alpha, b, beta, t0))
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LayerKind {
    StandardConv,
    DepthwiseConv,
    PointwiseConv,
    SqueezeExcite { hidden: usize },
    Upsample,
    ConcatSkip,
    AddSkip,
    GlobalPool,
    Activation,
    DetectionHeadConv,
}

impl LayerKind {
    pub fn label(&self) -> &'static str {
        match self {
            LayerKind::StandardConv => "standard-conv",
            LayerKind::DepthwiseConv => "depthwise-conv",
            LayerKind::PointwiseConv => "pointwise-conv",
            LayerKind::SqueezeExcite { .. } => "squeeze-excite",
            LayerKind::Upsample => "upsample",
            LayerKind::ConcatSkip => "concat-skip",
            LayerKind::AddSkip => "add-skip",
            LayerKind::GlobalPool => "global-pool",
            LayerKind::Activation => "activation",
            LayerKind::DetectionHeadConv => "detection-head-conv",
        }
    }
}

/// One layer of a built graph. `input_shapes[0]` is always the output of the
/// preceding layer (or the graph input for layer 0); a second entry is the
/// skip operand, produced by `skip_source`. A skip layer with two inputs and
/// no `skip_source` consumes its chain input twice (e.g. an add of a tensor
/// with itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDescriptor {
    #[serde(flatten)]
    pub kind: LayerKind,
    pub input_shapes: Vec<Shape>,
    pub output_shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<(usize, usize)>,
    pub stride: usize,
    pub parameter_count: u64,
    pub macc_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skip_source: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputationGraph {
    pub layers: Vec<LayerDescriptor>,
    pub input_shape: Shape,
    pub output_shape: Shape,
    /// Per-block half-open layer index ranges (stem, neck and head excluded).
    pub block_boundaries: Vec<(usize, usize)>,
    pub spec: ArchitectureSpec,
}

impl ComputationGraph {
    /// Human-readable label for a layer index ("b3.depthwise-conv", "stem", ...).
    pub fn layer_label(&self, index: usize) -> String {
        let kind = self.layers[index].kind.label();
        for (block, &(start, end)) in self.block_boundaries.iter().enumerate() {
            if index >= start && index < end {
                return format!("b{block}.{kind}");
            }
        }
        kind.to_string()
    }
}

/// Nearest-integer channel rounding with a floor of 2 (coarser multiple-of-8
/// rounding would collapse the smallest width multipliers).
pub fn round_channels(x: f64) -> usize {
    (x.round() as i64).max(2) as usize
}

/// Per-block expansion factor: t(N) = t₀ · ((β − 1)·N + B) / B.
pub fn expansion_factor(block_index: usize, t_zero: f64, beta: f64, num_blocks: usize) -> Result<f64, GraphError> {
    if block_index >= num_blocks {
        return Err(GraphError::BlockIndex {
            index: block_index,
            num_blocks,
        });
    }
    let n = block_index as f64;
    let b = num_blocks as f64;
    Ok(t_zero * ((beta - 1.0) * n + b) / b)
}

/// Block indices carrying the four in-block stride-2 depthwise convolutions
/// (the fifth downsampling is the stem). Spread as evenly as possible from
/// block 0; for B < 4 several land on one block and its depthwise convs chain.
pub fn downsample_schedule(num_blocks: usize) -> [usize; 4] {
    let b = (num_blocks - 1) as f64;
    let mut slots = [0usize; 4];
    for (i, slot) in slots.iter_mut().enumerate() {
        *slot = (i as f64 * b / 3.0).round() as usize;
    }
    slots
}

/// Bottleneck (projection) width of a block: round(24·α·2^d), minimum 2,
/// where d counts the in-block downsamplings at or before this block. The
/// stem's stride-2 and block 0's downsampling set the base resolution and do
/// not double the width — the first bottleneck stays at 24α.
pub fn bottleneck_filters(block_index: usize, alpha: f64, schedule: &[usize]) -> usize {
    let d = schedule.iter().filter(|&&s| s >= 1 && s <= block_index).count();
    round_channels(24.0 * alpha * (1u64 << d) as f64)
}

struct GraphBuilder {
    layers: Vec<LayerDescriptor>,
    prev_shape: Shape,
}

impl GraphBuilder {
    fn push(
        &mut self,
        kind: LayerKind,
        kernel: Option<(usize, usize)>,
        stride: usize,
        output_shape: Shape,
        skip_source: Option<usize>,
    ) -> usize {
        let mut input_shapes = vec![self.prev_shape];
        if let Some(src) = skip_source {
            input_shapes.push(self.layers[src].output_shape);
        }
        let mut layer = LayerDescriptor {
            kind,
            input_shapes,
            output_shape,
            kernel,
            stride,
            parameter_count: 0,
            macc_count: 0,
            skip_source,
        };
        let (macc, params) =
            crate::resources::count_layer(&layer).expect("builder emits only countable layers");
        layer.macc_count = macc;
        layer.parameter_count = params;
        self.layers.push(layer);
        self.prev_shape = output_shape;
        self.layers.len() - 1
    }
}

/// Materialize a hyperparameter choice into an explicit computation graph.
pub fn build_phinet(spec: &ArchitectureSpec) -> Result<ComputationGraph, GraphError> {
    spec.validate()?;
    let schedule = downsample_schedule(spec.num_blocks);
    let input_shape = Shape::new(spec.height, spec.width, 3);
    let stem_c = round_channels(24.0 * spec.alpha);

    let mut g = GraphBuilder {
        layers: Vec::new(),
        prev_shape: input_shape,
    };

    // Stem: stride-2 standard 3x3 conv to the first bottleneck width.
    let mut h = spec.height / 2;
    let mut w = spec.width / 2;
    g.push(
        LayerKind::StandardConv,
        Some((3, 3)),
        2,
        Shape::new(h, w, stem_c),
        None,
    );

    let stride16 = (spec.height / 16, spec.width / 16);
    let mut block_boundaries = Vec::with_capacity(spec.num_blocks);
    // Last block-final layer at stride-16 resolution (neck skip source), and
    // the last layer of any kind there as a fallback when no block ends at
    // stride 16 (possible only for B < 4).
    let mut skip_block_final: Option<usize> = None;
    let mut skip_any: Option<usize> = None;
    let mut in_c = stem_c;

    for block in 0..spec.num_blocks {
        let start = g.layers.len();
        let n_strides = schedule.iter().filter(|&&s| s == block).count();
        let t = expansion_factor(block, spec.t_zero, spec.beta, spec.num_blocks)?;
        let expanded = round_channels(t * in_c as f64);
        let out_c = bottleneck_filters(block, spec.alpha, &schedule);
        let block_input = g.layers.len() - 1;

        g.push(
            LayerKind::PointwiseConv,
            None,
            1,
            Shape::new(h, w, expanded),
            None,
        );
        if (h, w) == stride16 {
            skip_any = Some(g.layers.len() - 1);
        }
        for k in 0..n_strides.max(1) {
            let stride = if k < n_strides { 2 } else { 1 };
            h = h.div_ceil(stride);
            w = w.div_ceil(stride);
            g.push(
                LayerKind::DepthwiseConv,
                Some((3, 3)),
                stride,
                Shape::new(h, w, expanded),
                None,
            );
            if (h, w) == stride16 {
                skip_any = Some(g.layers.len() - 1);
            }
        }
        g.push(
            LayerKind::SqueezeExcite {
                hidden: spec.se_reduce,
            },
            None,
            1,
            Shape::new(h, w, expanded),
            None,
        );
        g.push(
            LayerKind::PointwiseConv,
            None,
            1,
            Shape::new(h, w, out_c),
            None,
        );
        if n_strides == 0 && in_c == out_c {
            g.push(
                LayerKind::AddSkip,
                None,
                1,
                Shape::new(h, w, out_c),
                Some(block_input),
            );
        }
        if (h, w) == stride16 {
            let last = g.layers.len() - 1;
            skip_block_final = Some(last);
            skip_any = Some(last);
        }
        block_boundaries.push((start, g.layers.len()));
        in_c = out_c;
    }

    // Neck: 2x nearest upsample + concat with the last stride-16 bottleneck.
    let hn = h * 2;
    let wn = w * 2;
    g.push(LayerKind::Upsample, None, 1, Shape::new(hn, wn, in_c), None);
    let skip = skip_block_final
        .or(skip_any)
        .expect("a 32x-reduced graph always visits stride 16");
    let skip_c = g.layers[skip].output_shape.c;
    g.push(
        LayerKind::ConcatSkip,
        None,
        1,
        Shape::new(hn, wn, in_c + skip_c),
        Some(skip),
    );

    if spec.include_head {
        g.push(
            LayerKind::DetectionHeadConv,
            Some((1, 1)),
            1,
            Shape::new(hn, wn, spec.head_channels()),
            None,
        );
    }

    let output_shape = g.prev_shape;
    Ok(ComputationGraph {
        layers: g.layers,
        input_shape,
        output_shape,
        block_boundaries,
        spec: spec.clone(),
    })
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    format: String,
    graph: ComputationGraph,
}

pub fn serialize_graph(graph: &ComputationGraph) -> String {
    let doc = GraphDocument {
        format: GRAPH_FORMAT.to_string(),
        graph: graph.clone(),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("graph serialization is infallible");
    text.push('\n');
    text
}

pub fn deserialize_graph(document: &str) -> Result<ComputationGraph, GraphError> {
    let doc: GraphDocument =
        serde_json::from_str(document).map_err(|e| GraphError::Parse(e.to_string()))?;
    if doc.format != GRAPH_FORMAT {
        return Err(GraphError::FormatTag { found: doc.format });
    }
    validate_graph(&doc.graph)?;
    Ok(doc.graph)
}

/// Structural validation: shape chaining, topological skip order, stride
/// arithmetic, and stored-count consistency.
pub fn validate_graph(graph: &ComputationGraph) -> Result<(), GraphError> {
    if graph.layers.is_empty() {
        return Err(GraphError::EmptyGraph);
    }
    let invalid = |index: usize, reason: String| GraphError::InvalidLayer { index, reason };

    for (i, layer) in graph.layers.iter().enumerate() {
        if layer.input_shapes.is_empty() || layer.input_shapes.len() > 2 {
            return Err(invalid(i, format!("expected 1 or 2 inputs, found {}", layer.input_shapes.len())));
        }
        let chain_input = if i == 0 {
            graph.input_shape
        } else {
            graph.layers[i - 1].output_shape
        };
        if layer.input_shapes[0] != chain_input {
            return Err(invalid(
                i,
                format!("input shape {:?} does not chain from {:?}", layer.input_shapes[0], chain_input),
            ));
        }
        match layer.skip_source {
            Some(src) => {
                if src >= i {
                    return Err(invalid(i, format!("skip_source {src} does not precede the layer")));
                }
                if layer.input_shapes.len() != 2 {
                    return Err(invalid(i, "skip_source requires a second input shape".into()));
                }
                if graph.layers[src].output_shape != layer.input_shapes[1] {
                    return Err(invalid(i, format!("skip input {:?} does not match source layer output", layer.input_shapes[1])));
                }
            }
            None => {
                if layer.input_shapes.len() == 2 && layer.input_shapes[1] != chain_input {
                    return Err(invalid(i, "second input without skip_source must repeat the chain input".into()));
                }
            }
        }
        if layer.stride == 0 {
            return Err(invalid(i, "stride must be >= 1".into()));
        }
        let spatial = matches!(
            layer.kind,
            LayerKind::StandardConv | LayerKind::DepthwiseConv | LayerKind::DetectionHeadConv
        );
        if spatial {
            let s = layer.stride;
            let expect = (
                layer.input_shapes[0].h.div_ceil(s),
                layer.input_shapes[0].w.div_ceil(s),
            );
            if (layer.output_shape.h, layer.output_shape.w) != expect {
                return Err(invalid(i, format!("output spatial dims {:?} are not ceil(input/stride)", (layer.output_shape.h, layer.output_shape.w))));
            }
        }
        let (macc, params) = crate::resources::count_layer(layer)
            .map_err(|e| invalid(i, e.to_string()))?;
        if macc != layer.macc_count || params != layer.parameter_count {
            return Err(invalid(
                i,
                format!(
                    "stored counts (macc {}, params {}) disagree with shapes (macc {}, params {})",
                    layer.macc_count, layer.parameter_count, macc, params
                ),
            ));
        }
    }
    let last = graph.layers.last().unwrap();
    if graph.output_shape != last.output_shape {
        return Err(invalid(
            graph.layers.len() - 1,
            "graph output shape does not match the final layer".into(),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expansion_factor_is_t_zero_when_beta_is_one() {
        assert_eq!(expansion_factor(0, 6.0, 1.0, 7).unwrap(), 6.0);
        assert_eq!(expansion_factor(3, 6.0, 1.0, 7).unwrap(), 6.0);
    }

    #[test]
    fn expansion_factor_direct_evaluation() {
        // t₀=7, β=0.5, N=6, B=7: 7·((−0.5·6)+7)/7 = 4
        assert_eq!(expansion_factor(6, 7.0, 0.5, 7).unwrap(), 4.0);
    }

    #[test]
    fn expansion_factor_rejects_out_of_range_block() {
        assert!(matches!(
            expansion_factor(7, 6.0, 1.0, 7),
            Err(GraphError::BlockIndex { index: 7, num_blocks: 7 })
        ));
    }

    #[test]
    fn downsample_schedule_spreads_evenly() {
        assert_eq!(downsample_schedule(7), [0, 2, 4, 6]);
        assert_eq!(downsample_schedule(4), [0, 1, 2, 3]);
        assert_eq!(downsample_schedule(9), [0, 3, 5, 8]);
        assert_eq!(downsample_schedule(2), [0, 0, 1, 1]);
        assert_eq!(downsample_schedule(1), [0, 0, 0, 0]);
    }

    #[test]
    fn bottleneck_filters_base_and_doubled() {
        let schedule = downsample_schedule(7);
        assert_eq!(bottleneck_filters(0, 1.0, &schedule), 24);
        assert_eq!(bottleneck_filters(0, 0.25, &schedule), 6);
        // After the downsamplings in blocks 2 and 4: round(24·0.35·4) = 34.
        assert_eq!(bottleneck_filters(4, 0.35, &schedule), 34);
    }

    #[test]
    fn bottleneck_widths_for_the_reference_configs() {
        let schedule = downsample_schedule(7);
        let widths: Vec<usize> = (0..7).map(|n| bottleneck_filters(n, 0.35, &schedule)).collect();
        assert_eq!(widths, [8, 8, 17, 17, 34, 34, 67]);
        let widths: Vec<usize> = (0..7).map(|n| bottleneck_filters(n, 0.15, &schedule)).collect();
        assert_eq!(widths, [4, 4, 7, 7, 14, 14, 29]);
    }

    #[test]
    fn build_reference_graph_structure() {
        let spec = ArchitectureSpec::new(128, 128, 0.35, 7, 1.0, 6.0);
        let g = build_phinet(&spec).unwrap();
        assert_eq!(g.layers.len(), 35);
        assert_eq!(g.block_boundaries.len(), 7);
        // Exactly five stride-2 layers; backbone reduces 32x before the neck.
        let strided = g.layers.iter().filter(|l| l.stride == 2).count();
        assert_eq!(strided, 5);
        let last_block_end = g.block_boundaries.last().unwrap().1;
        let backbone_out = g.layers[last_block_end - 1].output_shape;
        assert_eq!((backbone_out.h, backbone_out.w), (4, 4));
        // Head sits on the stride-16 grid with anchors·(5+classes) channels.
        assert_eq!(g.output_shape, Shape::new(8, 8, 30));
    }

    #[test]
    fn expansion_channels_follow_the_block_inputs() {
        let spec = ArchitectureSpec::new(128, 128, 0.35, 7, 1.0, 6.0);
        let g = build_phinet(&spec).unwrap();
        let expansions: Vec<usize> = g
            .block_boundaries
            .iter()
            .map(|&(start, _)| g.layers[start].output_shape.c)
            .collect();
        assert_eq!(expansions, [48, 48, 48, 102, 102, 204, 204]);
    }

    #[test]
    fn neck_concatenates_the_last_stride16_bottleneck() {
        let spec = ArchitectureSpec::new(128, 128, 0.35, 7, 1.0, 6.0);
        let g = build_phinet(&spec).unwrap();
        let concat = g.layers.iter().find(|l| l.kind == LayerKind::ConcatSkip).unwrap();
        let src = concat.skip_source.unwrap();
        // Block 5's add-skip output: 8x8x34, not block 6's 204-wide expansion.
        assert_eq!(g.layers[src].output_shape, Shape::new(8, 8, 34));
        assert_eq!(concat.output_shape, Shape::new(8, 8, 67 + 34));
    }

    #[test]
    fn single_block_graph_still_reduces_32x() {
        let spec = ArchitectureSpec::new(64, 64, 0.1, 1, 1.0, 2.0).without_head();
        let g = build_phinet(&spec).unwrap();
        assert_eq!(g.layers.len(), 10);
        let last_block_end = g.block_boundaries[0].1;
        let backbone_out = g.layers[last_block_end - 1].output_shape;
        assert_eq!((backbone_out.h, backbone_out.w), (2, 2));
        assert_eq!(g.layers.iter().filter(|l| l.stride == 2).count(), 5);
        // Neck still upsamples to stride 16.
        assert_eq!((g.output_shape.h, g.output_shape.w), (4, 4));
    }

    #[test]
    fn add_skips_join_identical_shapes() {
        for spec in benchmark_specs() {
            let g = build_phinet(&spec).unwrap();
            for layer in &g.layers {
                match layer.kind {
                    LayerKind::AddSkip => assert_eq!(layer.input_shapes[0], layer.input_shapes[1]),
                    LayerKind::ConcatSkip => {
                        let (a, b) = (layer.input_shapes[0], layer.input_shapes[1]);
                        assert_eq!((a.h, a.w), (b.h, b.w));
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn alpha_growth_never_shrinks_channels() {
        let small = build_phinet(&ArchitectureSpec::new(96, 96, 0.3, 7, 1.0, 5.0)).unwrap();
        let large = build_phinet(&ArchitectureSpec::new(96, 96, 0.6, 7, 1.0, 5.0)).unwrap();
        for (a, b) in small.layers.iter().zip(large.layers.iter()) {
            assert!(b.output_shape.c >= a.output_shape.c);
        }
    }

    #[test]
    fn identical_specs_build_identical_graphs() {
        let spec = ArchitectureSpec::new(96, 96, 0.25, 7, 1.0, 5.0);
        assert_eq!(build_phinet(&spec).unwrap(), build_phinet(&spec).unwrap());
    }

    #[test]
    fn rejects_resolution_not_divisible_by_32() {
        let spec = ArchitectureSpec::new(100, 100, 0.35, 7, 1.0, 6.0);
        assert!(matches!(build_phinet(&spec), Err(GraphError::BadResolution(100, 100))));
    }

    #[test]
    fn serialization_round_trips() {
        let spec = ArchitectureSpec::new(96, 96, 0.25, 7, 1.0, 5.0);
        let g = build_phinet(&spec).unwrap();
        let doc = serialize_graph(&g);
        let back = deserialize_graph(&doc).unwrap();
        assert_eq!(g, back);
    }

    #[test]
    fn deserialization_rejects_forward_skip() {
        let spec = ArchitectureSpec::new(96, 96, 0.25, 7, 1.0, 5.0);
        let mut g = build_phinet(&spec).unwrap();
        // Point some skip at a later layer and re-serialize.
        let idx = g.layers.iter().position(|l| l.skip_source.is_some()).unwrap();
        g.layers[idx].skip_source = Some(g.layers.len() - 1);
        let doc = serialize_graph(&g);
        match deserialize_graph(&doc) {
            Err(GraphError::InvalidLayer { index, .. }) => assert_eq!(index, idx),
            other => panic!("expected InvalidLayer, got {other:?}"),
        }
    }

    #[test]
    fn deserialization_rejects_empty_layer_list() {
        let doc = format!(
            r#"{{"format":"{GRAPH_FORMAT}","graph":{{"layers":[],"input_shape":{{"h":32,"w":32,"c":3}},"output_shape":{{"h":32,"w":32,"c":3}},"block_boundaries":[],"spec":{{"width":32,"height":32,"alpha":0.5,"num_blocks":1,"beta":1.0,"t_zero":2.0}}}}}}"#
        );
        assert!(matches!(deserialize_graph(&doc), Err(GraphError::EmptyGraph)));
    }

    #[test]
    fn deserialization_rejects_wrong_format_tag() {
        let spec = ArchitectureSpec::new(96, 96, 0.25, 7, 1.0, 5.0);
        let doc = serialize_graph(&build_phinet(&spec).unwrap()).replace(GRAPH_FORMAT, "phinet-graph/0");
        assert!(matches!(deserialize_graph(&doc), Err(GraphError::FormatTag { .. })));
    }

    #[test]
    fn deserialization_rejects_tampered_counts() {
        let spec = ArchitectureSpec::new(96, 96, 0.25, 7, 1.0, 5.0);
        let mut g = build_phinet(&spec).unwrap();
        g.layers[0].macc_count += 1;
        assert!(matches!(
            deserialize_graph(&serialize_graph(&g)),
            Err(GraphError::InvalidLayer { index: 0, .. })
        ));
    }
}
