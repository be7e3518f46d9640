#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "npas/model.hpp"

namespace npas {

// Per-layer filter-type options. "&" entries are cascade connections.
enum class FilterType {
    OneByOne,          // 1x1 conv
    ThreeByThree,      // 3x3 conv
    Dw3x3Pw1x1,        // 3x3 depthwise & 1x1
    Pw1x1Dw3x3Pw1x1,   // 1x1 & 3x3 depthwise & 1x1
    Skip,              // remove the layer (identity)
};

const char* to_string(FilterType t);
FilterType filter_type_from_string(const std::string& s);

// Largest kernel dimension the option introduces (0 for skip).
int filter_type_max_kernel(FilterType t);

// Options whose maximum kernel size does not exceed the layer's current
// kernel size (unidirectional replacement). Conv-like layers only.
std::vector<FilterType> candidate_filter_types(const LayerSpec& layer);

struct ApplyFilterTypeOptions {
    // Weights for the replacement layers, in cascade order. When absent,
    // layers get seeded He-normal init derived from (seed, layer_id, type).
    std::vector<WeightTensor> weights;
    uint64_t seed = 0;
};

// Replaces `layer_id` with the chosen operator or cascade. The region's
// input/output shapes are preserved (error otherwise). Skip requires
// in_channels == out_channels and stride 1. Replacement by the layer's own
// current structure keeps its weights. New layers get fresh ids.
NetworkGraph apply_filter_type(const NetworkGraph& graph, int layer_id, FilterType type,
                               const ApplyFilterTypeOptions& opts = {});

// True when apply_filter_type would succeed for this layer/type.
bool filter_type_applicable(const NetworkGraph& graph, int layer_id, FilterType type);

}  // namespace npas
