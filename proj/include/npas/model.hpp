#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "npas/tensor.hpp"

namespace npas {

enum class LayerKind {
    Conv2d,
    DepthwiseConv2d,
    FullyConnected,
    Activation,
    Pool,   // average pooling
    Add,
    Flatten,
};

enum class ActivationKind { ReLU, Sigmoid, Swish, HardSigmoid, HardSwish, None };

const char* to_string(LayerKind k);
const char* to_string(ActivationKind a);
LayerKind layer_kind_from_string(const std::string& s);
ActivationKind activation_from_string(const std::string& s);

// Scalar activation math. HardSigmoid(x) = clamp((x+3)/6, 0, 1),
// HardSwish(x) = x * HardSigmoid(x), Swish(x) = x * sigmoid(x).
inline float sigmoid(float x) { return 1.0f / (1.0f + std::exp(-x)); }
inline float hard_sigmoid(float x) { return std::clamp((x + 3.0f) / 6.0f, 0.0f, 1.0f); }
inline float swish(float x) { return x * sigmoid(x); }
inline float hard_swish(float x) { return x * hard_sigmoid(x); }

float apply_activation(ActivationKind a, float x);
// Derivative w.r.t. pre-activation input. Clamp boundaries use the left
// limit (documented subgradient choice).
float activation_grad(ActivationKind a, float x);

struct Shape3 {
    int h = 0, w = 0, c = 0;
    bool operator==(const Shape3&) const = default;
    size_t count() const { return static_cast<size_t>(h) * w * c; }
};

struct LayerSpec {
    int id = -1;
    LayerKind kind = LayerKind::Conv2d;
    int kernel_h = 0, kernel_w = 0;       // conv / pool only
    int in_channels = 0, out_channels = 0;
    int stride = 1, padding = 0;
    ActivationKind activation = ActivationKind::None;

    bool is_conv_like() const {
        return kind == LayerKind::Conv2d || kind == LayerKind::DepthwiseConv2d;
    }
    bool has_weights() const {
        return is_conv_like() || kind == LayerKind::FullyConnected;
    }
};

// Directed acyclic graph of layers. Layers are kept in topological
// (execution) order; ids are stable across transforms. Immutable by
// convention: all transforms return new graphs.
struct NetworkGraph {
    Shape3 input_shape;
    std::vector<LayerSpec> layers;
    std::vector<std::pair<int, int>> edges;   // producer id -> consumer id
    std::map<int, WeightTensor> weights;

    const LayerSpec& layer(int id) const;
    LayerSpec& layer(int id);
    bool has_layer(int id) const;
    int max_layer_id() const;

    std::vector<int> producers(int id) const;   // sorted by id
    std::vector<int> consumers(int id) const;
    int entry_layer() const;    // unique layer with no producers
    int output_layer() const;   // unique layer with no consumers

    // Output shape per layer id, walking the DAG from input_shape.
    // Throws InvalidArgument when shapes do not compose, weights are
    // missing/mismatched, or the edge relation has a cycle.
    std::map<int, Shape3> infer_shapes() const;
    void validate() const;

    // Linear chain convenience: wires layers[i] -> layers[i+1] and assigns
    // ids 0..n-1 when unset.
    static NetworkGraph chain(Shape3 input, std::vector<LayerSpec> layers);
};

Shape3 layer_output_shape(const LayerSpec& l, const Shape3& in);

// --- serialization ----------------------------------------------------------
// File layout: magic "NPAS", u16 format version, u32 header length, JSON
// header (layers/shapes/activations, human-inspectable), then little-endian
// f32 weight payloads in layer order, then optional per-layer mask bytes.

using MaskBytes = std::map<int, std::vector<uint8_t>>;

void save_model(const NetworkGraph& graph, const std::string& path,
                const MaskBytes& masks = {});
NetworkGraph load_model(const std::string& path, MaskBytes* masks_out = nullptr);

// --- MAC accounting ---------------------------------------------------------

struct MacCounts {
    std::map<int, uint64_t> per_layer;
    uint64_t total = 0;
};

MacCounts count_macs(const NetworkGraph& graph);
// Effective MACs with per-layer pruning rates applied (dense / rate);
// layers missing from the map count dense.
struct MacCountsEffective {
    std::map<int, double> per_layer;
    double total = 0.0;
};
MacCountsEffective count_macs(const NetworkGraph& graph,
                              const std::map<int, double>& rate_per_layer);

// --- Phase 1: mobile-unfriendly operator replacement ------------------------
// Sigmoid -> HardSigmoid and Swish -> HardSwish on every layer (attached and
// standalone activations). Structure and weights untouched; idempotent.
NetworkGraph replace_unfriendly_ops(const NetworkGraph& graph);

}  // namespace npas
