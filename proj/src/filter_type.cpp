#include "npas/filter_type.hpp"

#include <cmath>
#include <random>

namespace npas {

const char* to_string(FilterType t) {
    switch (t) {
        case FilterType::OneByOne: return "1x1";
        case FilterType::ThreeByThree: return "3x3";
        case FilterType::Dw3x3Pw1x1: return "3x3dw+1x1";
        case FilterType::Pw1x1Dw3x3Pw1x1: return "1x1+3x3dw+1x1";
        case FilterType::Skip: return "skip";
    }
    return "?";
}

FilterType filter_type_from_string(const std::string& s) {
    if (s == "1x1") return FilterType::OneByOne;
    if (s == "3x3") return FilterType::ThreeByThree;
    if (s == "3x3dw+1x1") return FilterType::Dw3x3Pw1x1;
    if (s == "1x1+3x3dw+1x1") return FilterType::Pw1x1Dw3x3Pw1x1;
    if (s == "skip") return FilterType::Skip;
    throw InvalidArgument("unknown filter type: " + s);
}

int filter_type_max_kernel(FilterType t) {
    switch (t) {
        case FilterType::OneByOne: return 1;
        case FilterType::ThreeByThree:
        case FilterType::Dw3x3Pw1x1:
        case FilterType::Pw1x1Dw3x3Pw1x1: return 3;
        case FilterType::Skip: return 0;
    }
    return 0;
}

std::vector<FilterType> candidate_filter_types(const LayerSpec& layer) {
    if (!layer.is_conv_like())
        throw InvalidArgument("filter types only apply to conv layers (layer " +
                              std::to_string(layer.id) + " is " + to_string(layer.kind) + ")");
    int current = std::max(layer.kernel_h, layer.kernel_w);
    std::vector<FilterType> out;
    for (FilterType t : {FilterType::OneByOne, FilterType::ThreeByThree, FilterType::Dw3x3Pw1x1,
                         FilterType::Pw1x1Dw3x3Pw1x1, FilterType::Skip}) {
        if (filter_type_max_kernel(t) <= current) out.push_back(t);
    }
    return out;
}

namespace {

void he_init(WeightTensor& w, uint64_t seed) {
    size_t fan_in = w.rank == 4 ? static_cast<size_t>(w.dims[1]) * w.dims[2] * w.dims[3]
                                : static_cast<size_t>(w.dims[1]);
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> dist(0.0f, std::sqrt(2.0f / static_cast<float>(fan_in)));
    for (auto& v : w.data) v = dist(rng);
}

// Replacement layer specs in cascade order. The final layer carries the
// original activation; intermediate cascade layers get ReLU.
std::vector<LayerSpec> replacement_layers(const LayerSpec& orig, FilterType type) {
    const int cin = orig.in_channels;
    const int cout = orig.out_channels;
    const int s = orig.stride;
    auto conv = [&](int kh, int kw, int in, int out, int stride, int pad) {
        LayerSpec l;
        l.kind = LayerKind::Conv2d;
        l.kernel_h = kh;
        l.kernel_w = kw;
        l.in_channels = in;
        l.out_channels = out;
        l.stride = stride;
        l.padding = pad;
        l.activation = ActivationKind::ReLU;
        return l;
    };
    auto dw = [&](int in, int stride) {
        LayerSpec l;
        l.kind = LayerKind::DepthwiseConv2d;
        l.kernel_h = 3;
        l.kernel_w = 3;
        l.in_channels = in;
        l.out_channels = in;
        l.stride = stride;
        l.padding = 1;
        l.activation = ActivationKind::ReLU;
        return l;
    };

    std::vector<LayerSpec> ls;
    switch (type) {
        case FilterType::OneByOne:
            ls = {conv(1, 1, cin, cout, s, 0)};
            break;
        case FilterType::ThreeByThree:
            ls = {conv(3, 3, cin, cout, s, 1)};
            break;
        case FilterType::Dw3x3Pw1x1:
            ls = {dw(cin, s), conv(1, 1, cin, cout, 1, 0)};
            break;
        case FilterType::Pw1x1Dw3x3Pw1x1:
            // middle width = in_channels
            ls = {conv(1, 1, cin, cin, 1, 0), dw(cin, s), conv(1, 1, cin, cout, 1, 0)};
            break;
        case FilterType::Skip:
            break;
    }
    if (!ls.empty()) ls.back().activation = orig.activation;
    return ls;
}

bool same_structure(const LayerSpec& a, const LayerSpec& b) {
    return a.kind == b.kind && a.kernel_h == b.kernel_h && a.kernel_w == b.kernel_w &&
           a.in_channels == b.in_channels && a.out_channels == b.out_channels &&
           a.stride == b.stride && a.padding == b.padding;
}

WeightTensor weights_for(const LayerSpec& l, uint64_t seed) {
    WeightTensor w = l.kind == LayerKind::DepthwiseConv2d
                         ? WeightTensor::conv(l.out_channels, 1, l.kernel_h, l.kernel_w)
                         : WeightTensor::conv(l.out_channels, l.in_channels, l.kernel_h, l.kernel_w);
    he_init(w, seed);
    return w;
}

}  // namespace

NetworkGraph apply_filter_type(const NetworkGraph& graph, int layer_id, FilterType type,
                               const ApplyFilterTypeOptions& opts) {
    const LayerSpec& orig = graph.layer(layer_id);
    if (!orig.is_conv_like())
        throw InvalidArgument("filter types only apply to conv layers");
    {
        auto cands = candidate_filter_types(orig);
        if (std::find(cands.begin(), cands.end(), type) == cands.end())
            throw InvalidArgument(std::string("filter type ") + to_string(type) +
                                  " increases kernel size of layer " + std::to_string(layer_id));
    }

    auto shapes = graph.infer_shapes();
    Shape3 out_shape = shapes.at(layer_id);

    if (type == FilterType::Skip) {
        if (orig.in_channels != orig.out_channels || orig.stride != 1)
            throw InvalidArgument("skip requires in_channels == out_channels and stride 1 "
                                  "(layer " + std::to_string(layer_id) + ")");
        NetworkGraph out = graph;
        auto prods = out.producers(layer_id);
        auto cons = out.consumers(layer_id);
        if (prods.size() > 1)
            throw InvalidArgument("cannot skip a multi-input layer");
        std::erase_if(out.edges, [&](const auto& e) {
            return e.first == layer_id || e.second == layer_id;
        });
        for (int p : prods)
            for (int c : cons) out.edges.emplace_back(p, c);
        std::erase_if(out.layers, [&](const LayerSpec& l) { return l.id == layer_id; });
        out.weights.erase(layer_id);
        out.validate();
        return out;
    }

    std::vector<LayerSpec> repl = replacement_layers(orig, type);
    if (repl.size() == 1 && same_structure(repl[0], orig)) {
        return graph;  // replacement by the current type: structurally identical
    }

    NetworkGraph out = graph;
    int next_id = out.max_layer_id() + 1;
    for (auto& l : repl) l.id = next_id++;

    if (!opts.weights.empty()) {
        if (opts.weights.size() != repl.size())
            throw InvalidArgument("expected " + std::to_string(repl.size()) +
                                  " weight tensors for replacement");
    }
    for (size_t i = 0; i < repl.size(); ++i) {
        WeightTensor w;
        if (!opts.weights.empty()) {
            w = opts.weights[i];
        } else {
            uint64_t seed = opts.seed * 0x9E3779B97F4A7C15ull + layer_id * 1000003ull +
                            static_cast<uint64_t>(type) * 131ull + i;
            w = weights_for(repl[i], seed);
        }
        if (w.rank != 4 || w.dims[0] != repl[i].out_channels ||
            w.dims[1] != (repl[i].kind == LayerKind::DepthwiseConv2d ? 1 : repl[i].in_channels) ||
            w.dims[2] != repl[i].kernel_h || w.dims[3] != repl[i].kernel_w)
            throw InvalidArgument("replacement weight tensor shape mismatch");
        out.weights.emplace(repl[i].id, std::move(w));
    }

    auto prods = out.producers(layer_id);
    auto cons = out.consumers(layer_id);
    std::erase_if(out.edges,
                  [&](const auto& e) { return e.first == layer_id || e.second == layer_id; });
    for (int p : prods) out.edges.emplace_back(p, repl.front().id);
    for (size_t i = 0; i + 1 < repl.size(); ++i)
        out.edges.emplace_back(repl[i].id, repl[i + 1].id);
    for (int c : cons) out.edges.emplace_back(repl.back().id, c);

    // splice the new layers into the old layer's position to keep execution order
    auto pos = std::find_if(out.layers.begin(), out.layers.end(),
                            [&](const LayerSpec& l) { return l.id == layer_id; });
    size_t idx = static_cast<size_t>(pos - out.layers.begin());
    out.layers.erase(pos);
    out.layers.insert(out.layers.begin() + static_cast<long>(idx), repl.begin(), repl.end());
    out.weights.erase(layer_id);

    auto new_shapes = out.infer_shapes();
    if (!(new_shapes.at(repl.back().id) == out_shape))
        throw InvalidArgument("replacement does not preserve region output shape");
    out.validate();
    return out;
}

bool filter_type_applicable(const NetworkGraph& graph, int layer_id, FilterType type) {
    try {
        apply_filter_type(graph, layer_id, type);
        return true;
    } catch (const Error&) {
        return false;
    }
}

}  // namespace npas
