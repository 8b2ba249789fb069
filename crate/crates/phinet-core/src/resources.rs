//! Analytic resource accounting: per-layer MACC/parameter counts, peak
//! working memory from a liveness simulation, and closed-form approximations
//! with their scaling laws.
//!
//! Conventions (shared verbatim with the executor's instrumentation, which is
//! the mutual oracle for these numbers):
//! - standard conv: k²·C_in·C_out·H_out·W_out MACC, k²·C_in·C_out + C_out params
//! - depthwise conv: k²·C·H_out·W_out MACC, k²·C + C params
//! - pointwise / head conv: C_in·C_out·H·W MACC, C_in·C_out + C_out params
//! - squeeze-excite: pool H·W·C + two dense layers 2·C·hidden MACC;
//!   params (C·hidden + hidden) + (hidden·C + C); the rescale multiply is a
//!   multiply without accumulation and is not a MACC
//! - add-skip: one MACC per output element; upsample/concat/activation: zero
//! - memory: one byte per activation element (8-bit deployment assumption)

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::archgraph::{ArchitectureSpec, ComputationGraph, LayerDescriptor, LayerKind};

#[derive(Debug, Error)]
pub enum ResourceError {
    #[error("layer not countable: {0}")]
    Uncountable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerUsage {
    pub index: usize,
    pub macc: u64,
    pub params: u64,
    pub live_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub macc_total: u64,
    /// Flash bytes for weights, one byte per parameter.
    pub param_memory: u64,
    /// Peak RAM for live activation tensors, one byte per element.
    pub peak_working_memory: u64,
    pub per_layer: Vec<LayerUsage>,
}

impl ResourceReport {
    /// One row per layer, aligned for terminal output.
    pub fn flat_table(&self, graph: &ComputationGraph) -> String {
        let mut out = String::from("layer  kind                    macc      params  live_bytes\n");
        for usage in &self.per_layer {
            out.push_str(&format!(
                "{:>5}  {:<20} {:>9} {:>11} {:>11}\n",
                usage.index,
                graph.layer_label(usage.index),
                usage.macc,
                usage.params,
                usage.live_bytes,
            ));
        }
        out.push_str(&format!(
            "total  {:<20} {:>9} {:>11}  peak {}\n",
            "", self.macc_total, self.param_memory, self.peak_working_memory
        ));
        out
    }
}

/// MACC and parameter count of a single layer, from its descriptor alone.
pub fn count_layer(layer: &LayerDescriptor) -> Result<(u64, u64), ResourceError> {
    let input = *layer
        .input_shapes
        .first()
        .ok_or_else(|| ResourceError::Uncountable("layer has no inputs".into()))?;
    let out = layer.output_shape;
    let (oh, ow, oc) = (out.h as u64, out.w as u64, out.c as u64);
    let ic = input.c as u64;
    let kernel = || {
        layer.kernel.map(|(kh, kw)| (kh as u64, kw as u64)).ok_or_else(|| {
            ResourceError::Uncountable(format!("{} requires a kernel size", layer.kind.label()))
        })
    };
    Ok(match layer.kind {
        LayerKind::StandardConv => {
            let (kh, kw) = kernel()?;
            (kh * kw * ic * oc * oh * ow, kh * kw * ic * oc + oc)
        }
        LayerKind::DepthwiseConv => {
            let (kh, kw) = kernel()?;
            if ic != oc {
                return Err(ResourceError::Uncountable(format!(
                    "depthwise conv cannot change channels ({ic} -> {oc})"
                )));
            }
            (kh * kw * oc * oh * ow, kh * kw * oc + oc)
        }
        LayerKind::PointwiseConv | LayerKind::DetectionHeadConv => {
            (ic * oc * oh * ow, ic * oc + oc)
        }
        LayerKind::SqueezeExcite { hidden } => {
            let h = hidden as u64;
            let (ih, iw) = (input.h as u64, input.w as u64);
            let pool = ih * iw * ic;
            let dense = 2 * ic * h;
            (pool + dense, (ic * h + h) + (h * ic + ic))
        }
        LayerKind::AddSkip => (oh * ow * oc, 0),
        LayerKind::Upsample | LayerKind::ConcatSkip | LayerKind::Activation => (0, 0),
        LayerKind::GlobalPool => (input.elements() as u64, 0),
    })
}

/// Exact resource report at one byte per activation element.
pub fn estimate(graph: &ComputationGraph) -> ResourceReport {
    estimate_with_element_size(graph, 1)
}

/// As [`estimate`], with a configurable activation element size (e.g. 4 for
/// float32 analysis). Parameter memory stays one byte per weight.
pub fn estimate_with_element_size(graph: &ComputationGraph, bytes_per_element: u64) -> ResourceReport {
    let n = graph.layers.len();
    // Tensor id 0 is the graph input; id i+1 is the output of layer i.
    let tensor_bytes: Vec<u64> = std::iter::once(graph.input_shape)
        .chain(graph.layers.iter().map(|l| l.output_shape))
        .map(|s| s.elements() as u64 * bytes_per_element)
        .collect();

    // A tensor is live from its producing layer through its last consumer;
    // the final output lives through the layer that produces it.
    let mut last_use: Vec<isize> = (0..=n).map(|t| t as isize - 1).collect();
    for (i, layer) in graph.layers.iter().enumerate() {
        last_use[i] = last_use[i].max(i as isize);
        if let Some(src) = layer.skip_source {
            last_use[src + 1] = last_use[src + 1].max(i as isize);
        }
    }

    let mut per_layer = Vec::with_capacity(n);
    let mut macc_total = 0u64;
    let mut param_memory = 0u64;
    let mut peak = 0u64;
    for (i, layer) in graph.layers.iter().enumerate() {
        let (macc, params) = count_layer(layer).expect("estimate requires a countable graph");
        macc_total += macc;
        param_memory += params;
        let produced = |t: usize| t as isize - 1;
        let live: u64 = (0..=n)
            .filter(|&t| produced(t) <= i as isize && last_use[t] >= i as isize)
            .map(|t| tensor_bytes[t])
            .sum();
        peak = peak.max(live);
        per_layer.push(LayerUsage {
            index: i,
            macc,
            params,
            live_bytes: live,
        });
    }
    ResourceReport {
        macc_total,
        param_memory,
        peak_working_memory: peak,
        per_layer,
    }
}

/// Closed-form working-memory approximation in bytes:
/// (w/2 · h/2 · 24α + w/4 · h/4 · 24α) · t₀, with 24α left unrounded.
pub fn closed_form_wm(spec: &ArchitectureSpec) -> f64 {
    closed_form_wm_for(spec.width, spec.height, spec.alpha, spec.t_zero)
}

pub fn closed_form_wm_for(width: usize, height: usize, alpha: f64, t_zero: f64) -> f64 {
    let w = width as f64;
    let h = height as f64;
    let base = (w / 2.0) * (h / 2.0) * 24.0 * alpha + (w / 4.0) * (h / 4.0) * 24.0 * alpha;
    base * t_zero
}

/// Closed-form parameter scaling: #Params ≈ C · (1 + β) / 2 of the base count.
pub fn closed_form_params(base_params: u64, beta: f64) -> f64 {
    base_params as f64 * (1.0 + beta) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archgraph::{build_phinet, benchmark_specs, ArchitectureSpec, Shape};

    fn pointwise(input: Shape, out_c: usize) -> LayerDescriptor {
        LayerDescriptor {
            kind: LayerKind::PointwiseConv,
            input_shapes: vec![input],
            output_shape: Shape::new(input.h, input.w, out_c),
            kernel: None,
            stride: 1,
            parameter_count: 0,
            macc_count: 0,
            skip_source: None,
        }
    }

    #[test]
    fn pointwise_counting() {
        let layer = pointwise(Shape::new(4, 4, 8), 16);
        assert_eq!(count_layer(&layer).unwrap(), (2048, 144));
    }

    #[test]
    fn depthwise_counting() {
        let layer = LayerDescriptor {
            kind: LayerKind::DepthwiseConv,
            input_shapes: vec![Shape::new(4, 4, 8)],
            output_shape: Shape::new(4, 4, 8),
            kernel: Some((3, 3)),
            stride: 1,
            parameter_count: 0,
            macc_count: 0,
            skip_source: None,
        };
        // 9·8·16 multiply-accumulates over the 4x4 map.
        assert_eq!(count_layer(&layer).unwrap().0, 1152);
    }

    #[test]
    fn add_skip_counting() {
        let input = Shape::new(4, 4, 8);
        let layer = LayerDescriptor {
            kind: LayerKind::AddSkip,
            input_shapes: vec![input, input],
            output_shape: input,
            kernel: None,
            stride: 1,
            parameter_count: 0,
            macc_count: 0,
            skip_source: None,
        };
        assert_eq!(count_layer(&layer).unwrap(), (128, 0));
    }

    #[test]
    fn squeeze_excite_counting() {
        let input = Shape::new(8, 8, 48);
        let layer = LayerDescriptor {
            kind: LayerKind::SqueezeExcite { hidden: 8 },
            input_shapes: vec![input],
            output_shape: input,
            kernel: None,
            stride: 1,
            parameter_count: 0,
            macc_count: 0,
            skip_source: None,
        };
        let (macc, params) = count_layer(&layer).unwrap();
        assert_eq!(macc, 8 * 8 * 48 + 2 * 48 * 8);
        assert_eq!(params, (48 * 8 + 8) + (8 * 48 + 48));
    }

    #[test]
    fn missing_kernel_is_an_error() {
        let mut layer = pointwise(Shape::new(4, 4, 8), 8);
        layer.kind = LayerKind::DepthwiseConv;
        assert!(count_layer(&layer).is_err());
    }

    // Exact totals for the seven benchmark configurations, hand-checked
    // against an independent implementation of the same counting rules.
    const BENCHMARK_COUNTS: [(u64, u64, u64); 7] = [
        (9_159_680, 70_575, 245_760),
        (5_424_576, 40_778, 184_320),
        (2_622_096, 34_406, 86_400),
        (1_293_498, 15_862, 57_600),
        (9_472_860, 45_740, 280_000),
        (5_350_240, 24_612, 200_000),
        (3_426_256, 24_612, 128_000),
    ];

    #[test]
    fn benchmark_configs_exact_counts() {
        for (spec, &(macc, params, peak)) in benchmark_specs().iter().zip(BENCHMARK_COUNTS.iter()) {
            let report = estimate(&build_phinet(spec).unwrap());
            assert_eq!(report.macc_total, macc, "macc for {spec:?}");
            assert_eq!(report.param_memory, params, "params for {spec:?}");
            assert_eq!(report.peak_working_memory, peak, "peak for {spec:?}");
        }
    }

    #[test]
    fn per_layer_sums_equal_totals() {
        let g = build_phinet(&ArchitectureSpec::new(96, 96, 0.25, 7, 1.0, 5.0)).unwrap();
        let report = estimate(&g);
        assert_eq!(report.macc_total, report.per_layer.iter().map(|l| l.macc).sum::<u64>());
        assert_eq!(report.param_memory, report.per_layer.iter().map(|l| l.params).sum::<u64>());
        assert_eq!(report.per_layer.len(), g.layers.len());
    }

    #[test]
    fn single_layer_peak_is_input_plus_output() {
        let input = Shape::new(4, 4, 8);
        let layer = pointwise(input, 16);
        let (macc, params) = count_layer(&layer).unwrap();
        let graph = ComputationGraph {
            layers: vec![LayerDescriptor {
                macc_count: macc,
                parameter_count: params,
                ..layer
            }],
            input_shape: input,
            output_shape: Shape::new(4, 4, 16),
            block_boundaries: vec![],
            spec: ArchitectureSpec::new(32, 32, 0.5, 1, 1.0, 2.0),
        };
        let report = estimate(&graph);
        assert_eq!(report.peak_working_memory, (4 * 4 * 8 + 4 * 4 * 16) as u64);
    }

    #[test]
    fn element_size_scales_peak_linearly() {
        let g = build_phinet(&ArchitectureSpec::new(96, 96, 0.25, 7, 1.0, 5.0)).unwrap();
        let one = estimate_with_element_size(&g, 1);
        let four = estimate_with_element_size(&g, 4);
        assert_eq!(four.peak_working_memory, 4 * one.peak_working_memory);
        assert_eq!(four.param_memory, one.param_memory);
    }

    #[test]
    fn closed_form_wm_hand_values() {
        assert_eq!(closed_form_wm_for(96, 96, 0.25, 5.0), 86_400.0);
        assert!((closed_form_wm_for(128, 128, 0.35, 6.0) - 258_048.0).abs() < 1e-6);
    }

    #[test]
    fn closed_form_wm_linear_in_t_zero() {
        let at = |t| closed_form_wm_for(96, 96, 0.25, t);
        assert!((at(4.0) - 0.8 * at(5.0)).abs() <= at(5.0) * f64::EPSILON);
    }

    #[test]
    fn closed_form_wm_quadratic_in_resolution() {
        assert_eq!(
            closed_form_wm_for(192, 192, 0.25, 5.0),
            4.0 * closed_form_wm_for(96, 96, 0.25, 5.0)
        );
    }

    #[test]
    fn closed_form_params_hand_values() {
        assert_eq!(closed_form_params(1000, 1.0), 1000.0);
        assert_eq!(closed_form_params(1000, 0.6), 800.0);
        assert_eq!(closed_form_params(1000, 2.0), 1500.0);
    }

    #[test]
    fn beta_scaling_tracks_the_closed_form() {
        let params_at = |beta: f64| {
            let spec = ArchitectureSpec {
                beta,
                ..ArchitectureSpec::new(128, 128, 0.35, 7, 1.0, 6.0)
            };
            estimate(&build_phinet(&spec).unwrap()).param_memory as f64
        };
        let base = params_at(1.0);
        for beta in [0.5, 0.75, 1.25, 1.5] {
            let dev = (params_at(beta) / base - (1.0 + beta) / 2.0).abs();
            assert!(dev <= 0.10, "beta {beta}: deviation {dev:.4}");
        }
    }

    #[test]
    fn macc_roughly_quadratic_in_alpha() {
        for res in [96, 128] {
            for alpha in [0.2, 0.25, 0.3, 0.35, 0.5] {
                let macc_at = |a: f64| {
                    estimate(&build_phinet(&ArchitectureSpec::new(res, res, a, 7, 1.0, 5.0)).unwrap())
                        .macc_total as f64
                };
                let ratio = macc_at(2.0 * alpha) / macc_at(alpha);
                assert!(
                    (3.0..=4.5).contains(&ratio),
                    "res {res}, alpha {alpha}: ratio {ratio:.2}"
                );
            }
        }
    }

    #[test]
    fn macc_monotone_in_block_count() {
        let mut prev = 0;
        for b in 1..=12 {
            let macc = estimate(&build_phinet(&ArchitectureSpec::new(128, 128, 0.3, b, 1.0, 5.0)).unwrap())
                .macc_total;
            assert!(macc > prev, "B={b}");
            prev = macc;
        }
    }
}
