#include "npas/model.hpp"

#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace npas {

using nlohmann::json;

const char* to_string(LayerKind k) {
    switch (k) {
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::DepthwiseConv2d: return "depthwise_conv2d";
        case LayerKind::FullyConnected: return "fully_connected";
        case LayerKind::Activation: return "activation";
        case LayerKind::Pool: return "pool";
        case LayerKind::Add: return "add";
        case LayerKind::Flatten: return "flatten";
    }
    return "?";
}

const char* to_string(ActivationKind a) {
    switch (a) {
        case ActivationKind::ReLU: return "relu";
        case ActivationKind::Sigmoid: return "sigmoid";
        case ActivationKind::Swish: return "swish";
        case ActivationKind::HardSigmoid: return "hard_sigmoid";
        case ActivationKind::HardSwish: return "hard_swish";
        case ActivationKind::None: return "none";
    }
    return "?";
}

LayerKind layer_kind_from_string(const std::string& s) {
    if (s == "conv2d") return LayerKind::Conv2d;
    if (s == "depthwise_conv2d") return LayerKind::DepthwiseConv2d;
    if (s == "fully_connected") return LayerKind::FullyConnected;
    if (s == "activation") return LayerKind::Activation;
    if (s == "pool") return LayerKind::Pool;
    if (s == "add") return LayerKind::Add;
    if (s == "flatten") return LayerKind::Flatten;
    throw InvalidArgument("unknown layer kind: " + s);
}

ActivationKind activation_from_string(const std::string& s) {
    if (s == "relu") return ActivationKind::ReLU;
    if (s == "sigmoid") return ActivationKind::Sigmoid;
    if (s == "swish") return ActivationKind::Swish;
    if (s == "hard_sigmoid") return ActivationKind::HardSigmoid;
    if (s == "hard_swish") return ActivationKind::HardSwish;
    if (s == "none") return ActivationKind::None;
    throw InvalidArgument("unknown activation kind: " + s);
}

float apply_activation(ActivationKind a, float x) {
    switch (a) {
        case ActivationKind::ReLU: return x > 0.0f ? x : 0.0f;
        case ActivationKind::Sigmoid: return sigmoid(x);
        case ActivationKind::Swish: return swish(x);
        case ActivationKind::HardSigmoid: return hard_sigmoid(x);
        case ActivationKind::HardSwish: return hard_swish(x);
        case ActivationKind::None: return x;
    }
    return x;
}

float activation_grad(ActivationKind a, float x) {
    switch (a) {
        case ActivationKind::ReLU:
            return x > 0.0f ? 1.0f : 0.0f;
        case ActivationKind::Sigmoid: {
            float s = sigmoid(x);
            return s * (1.0f - s);
        }
        case ActivationKind::Swish: {
            float s = sigmoid(x);
            return s + x * s * (1.0f - s);
        }
        case ActivationKind::HardSigmoid:
            // left-limit at the clamp boundaries x = +-3
            return (x > -3.0f && x <= 3.0f) ? (1.0f / 6.0f) : 0.0f;
        case ActivationKind::HardSwish:
            if (x <= -3.0f) return 0.0f;
            if (x > 3.0f) return 1.0f;
            return (2.0f * x + 3.0f) / 6.0f;
        case ActivationKind::None:
            return 1.0f;
    }
    return 1.0f;
}

const LayerSpec& NetworkGraph::layer(int id) const {
    for (const auto& l : layers)
        if (l.id == id) return l;
    throw InvalidArgument("no layer with id " + std::to_string(id));
}

LayerSpec& NetworkGraph::layer(int id) {
    for (auto& l : layers)
        if (l.id == id) return l;
    throw InvalidArgument("no layer with id " + std::to_string(id));
}

bool NetworkGraph::has_layer(int id) const {
    for (const auto& l : layers)
        if (l.id == id) return true;
    return false;
}

int NetworkGraph::max_layer_id() const {
    int m = -1;
    for (const auto& l : layers) m = std::max(m, l.id);
    return m;
}

std::vector<int> NetworkGraph::producers(int id) const {
    std::vector<int> out;
    for (const auto& [from, to] : edges)
        if (to == id) out.push_back(from);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> NetworkGraph::consumers(int id) const {
    std::vector<int> out;
    for (const auto& [from, to] : edges)
        if (from == id) out.push_back(to);
    std::sort(out.begin(), out.end());
    return out;
}

int NetworkGraph::entry_layer() const {
    int found = -1;
    for (const auto& l : layers) {
        if (producers(l.id).empty()) {
            if (found >= 0) throw InvalidArgument("graph has multiple entry layers");
            found = l.id;
        }
    }
    if (found < 0) throw InvalidArgument("graph has no entry layer");
    return found;
}

int NetworkGraph::output_layer() const {
    int found = -1;
    for (const auto& l : layers) {
        if (consumers(l.id).empty()) {
            if (found >= 0) throw InvalidArgument("graph has multiple output layers");
            found = l.id;
        }
    }
    if (found < 0) throw InvalidArgument("graph has no output layer");
    return found;
}

Shape3 layer_output_shape(const LayerSpec& l, const Shape3& in) {
    auto conv_dim = [](int x, int k, int s, int p) {
        int out = (x + 2 * p - k) / s + 1;
        if (x + 2 * p < k || out <= 0)
            throw InvalidArgument("kernel larger than padded input");
        return out;
    };
    switch (l.kind) {
        case LayerKind::Conv2d:
            if (in.c != l.in_channels)
                throw InvalidArgument("conv2d layer " + std::to_string(l.id) +
                                      ": input channels do not compose");
            return {conv_dim(in.h, l.kernel_h, l.stride, l.padding),
                    conv_dim(in.w, l.kernel_w, l.stride, l.padding), l.out_channels};
        case LayerKind::DepthwiseConv2d:
            if (in.c != l.in_channels || l.in_channels != l.out_channels)
                throw InvalidArgument("depthwise layer " + std::to_string(l.id) +
                                      ": requires out_channels = in_channels = input c");
            return {conv_dim(in.h, l.kernel_h, l.stride, l.padding),
                    conv_dim(in.w, l.kernel_w, l.stride, l.padding), l.out_channels};
        case LayerKind::FullyConnected:
            if (in.h != 1 || in.w != 1 || in.c != l.in_channels)
                throw InvalidArgument("fc layer " + std::to_string(l.id) +
                                      ": expects flattened (1,1,in) input");
            return {1, 1, l.out_channels};
        case LayerKind::Activation:
        case LayerKind::Add:
            return in;
        case LayerKind::Pool:
            return {conv_dim(in.h, l.kernel_h, l.stride, l.padding),
                    conv_dim(in.w, l.kernel_w, l.stride, l.padding), in.c};
        case LayerKind::Flatten:
            return {1, 1, in.h * in.w * in.c};
    }
    throw InvalidArgument("unhandled layer kind");
}

std::map<int, Shape3> NetworkGraph::infer_shapes() const {
    std::map<int, Shape3> out_shape;
    // Kahn topological walk; detects cycles and dangling edges.
    std::map<int, int> pending;
    for (const auto& l : layers) pending[l.id] = 0;
    for (const auto& [from, to] : edges) {
        if (!has_layer(from) || !has_layer(to))
            throw InvalidArgument("edge references missing layer");
        pending[to]++;
    }
    std::vector<int> ready;
    for (const auto& l : layers)
        if (pending[l.id] == 0) ready.push_back(l.id);

    size_t processed = 0;
    while (!ready.empty()) {
        std::sort(ready.begin(), ready.end());
        int id = ready.front();
        ready.erase(ready.begin());
        processed++;

        const LayerSpec& l = layer(id);
        auto prods = producers(id);
        Shape3 in;
        if (prods.empty()) {
            in = input_shape;
        } else if (l.kind == LayerKind::Add) {
            if (prods.size() != 2)
                throw InvalidArgument("add layer needs exactly two producers");
            if (!(out_shape.at(prods[0]) == out_shape.at(prods[1])))
                throw InvalidArgument("add layer inputs have different shapes");
            in = out_shape.at(prods[0]);
        } else {
            if (prods.size() != 1)
                throw InvalidArgument("layer " + std::to_string(id) +
                                      " needs exactly one producer");
            in = out_shape.at(prods[0]);
        }
        out_shape[id] = layer_output_shape(l, in);
        for (int c : consumers(id))
            if (--pending[c] == 0) ready.push_back(c);
    }
    if (processed != layers.size())
        throw InvalidArgument("edge relation has a cycle");
    return out_shape;
}

void NetworkGraph::validate() const {
    std::set<int> seen;
    for (const auto& l : layers) {
        if (!seen.insert(l.id).second)
            throw InvalidArgument("duplicate layer id " + std::to_string(l.id));
        if (l.has_weights()) {
            auto it = weights.find(l.id);
            if (it == weights.end())
                throw InvalidArgument("layer " + std::to_string(l.id) + " missing weights");
            const WeightTensor& w = it->second;
            if (l.kind == LayerKind::Conv2d) {
                if (w.rank != 4 || w.dims[0] != l.out_channels || w.dims[1] != l.in_channels ||
                    w.dims[2] != l.kernel_h || w.dims[3] != l.kernel_w)
                    throw InvalidArgument("conv weight shape mismatch at layer " +
                                          std::to_string(l.id));
            } else if (l.kind == LayerKind::DepthwiseConv2d) {
                if (w.rank != 4 || w.dims[0] != l.out_channels || w.dims[1] != 1 ||
                    w.dims[2] != l.kernel_h || w.dims[3] != l.kernel_w)
                    throw InvalidArgument("depthwise weight shape mismatch at layer " +
                                          std::to_string(l.id));
            } else {
                if (w.rank != 2 || w.dims[0] != l.out_channels || w.dims[1] != l.in_channels)
                    throw InvalidArgument("fc weight shape mismatch at layer " +
                                          std::to_string(l.id));
            }
            if (w.data.size() != static_cast<size_t>(w.dims[0]) * w.dims[1] * w.dims[2] * w.dims[3])
                throw InvalidArgument("weight data length mismatch at layer " +
                                      std::to_string(l.id));
        }
    }
    infer_shapes();  // shape composition + acyclicity
    entry_layer();
    output_layer();
}

NetworkGraph NetworkGraph::chain(Shape3 input, std::vector<LayerSpec> ls) {
    NetworkGraph g;
    g.input_shape = input;
    for (size_t i = 0; i < ls.size(); ++i) {
        if (ls[i].id < 0) ls[i].id = static_cast<int>(i);
        if (i > 0) g.edges.emplace_back(ls[i - 1].id, ls[i].id);
    }
    g.layers = std::move(ls);
    return g;
}

// --- serialization ----------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'N', 'P', 'A', 'S'};
constexpr uint16_t kFormatVersion = 1;

template <typename T>
void write_le(std::ostream& os, T v) {
    // host is little-endian; raw copy keeps payload bit-exact
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw IoError("truncated model file");
    return v;
}

json layer_to_json(const LayerSpec& l) {
    return json{{"id", l.id},
                {"kind", to_string(l.kind)},
                {"kernel_h", l.kernel_h},
                {"kernel_w", l.kernel_w},
                {"in_channels", l.in_channels},
                {"out_channels", l.out_channels},
                {"stride", l.stride},
                {"padding", l.padding},
                {"activation", to_string(l.activation)}};
}

LayerSpec layer_from_json(const json& j) {
    LayerSpec l;
    l.id = j.at("id").get<int>();
    l.kind = layer_kind_from_string(j.at("kind").get<std::string>());
    l.kernel_h = j.at("kernel_h").get<int>();
    l.kernel_w = j.at("kernel_w").get<int>();
    l.in_channels = j.at("in_channels").get<int>();
    l.out_channels = j.at("out_channels").get<int>();
    l.stride = j.at("stride").get<int>();
    l.padding = j.at("padding").get<int>();
    l.activation = activation_from_string(j.at("activation").get<std::string>());
    return l;
}

}  // namespace

void save_model(const NetworkGraph& graph, const std::string& path, const MaskBytes& masks) {
    graph.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);

    json header;
    header["format_version"] = kFormatVersion;
    header["input_shape"] = {graph.input_shape.h, graph.input_shape.w, graph.input_shape.c};
    header["layers"] = json::array();
    for (const auto& l : graph.layers) header["layers"].push_back(layer_to_json(l));
    header["edges"] = json::array();
    for (const auto& [from, to] : graph.edges) header["edges"].push_back({from, to});
    header["weights"] = json::array();
    for (const auto& l : graph.layers) {
        if (!l.has_weights()) continue;
        const WeightTensor& w = graph.weights.at(l.id);
        header["weights"].push_back(
            {{"layer", l.id},
             {"rank", w.rank},
             {"dims", std::vector<int>(w.dims.begin(), w.dims.begin() + w.rank)}});
    }
    header["masks"] = json::array();
    for (const auto& [id, bits] : masks) {
        if (!graph.has_layer(id))
            throw InvalidArgument("mask references missing layer " + std::to_string(id));
        if (bits.size() != graph.weights.at(id).size())
            throw InvalidArgument("mask length mismatch at layer " + std::to_string(id));
        header["masks"].push_back({{"layer", id}, {"count", bits.size()}});
    }

    std::string header_text = header.dump(2);
    os.write(kMagic, 4);
    write_le<uint16_t>(os, kFormatVersion);
    write_le<uint32_t>(os, static_cast<uint32_t>(header_text.size()));
    os.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));

    for (const auto& l : graph.layers) {
        if (!l.has_weights()) continue;
        const WeightTensor& w = graph.weights.at(l.id);
        os.write(reinterpret_cast<const char*>(w.data.data()),
                 static_cast<std::streamsize>(w.data.size() * sizeof(float)));
    }
    for (const auto& [id, bits] : masks)
        os.write(reinterpret_cast<const char*>(bits.data()),
                 static_cast<std::streamsize>(bits.size()));
    if (!os) throw IoError("write failed: " + path);
}

NetworkGraph load_model(const std::string& path, MaskBytes* masks_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open for reading: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad magic bytes: not a model file");
    uint16_t version = read_le<uint16_t>(is);
    if (version != kFormatVersion)
        throw IoError("unsupported model format version " + std::to_string(version));
    uint32_t header_len = read_le<uint32_t>(is);
    std::string header_text(header_len, '\0');
    is.read(header_text.data(), header_len);
    if (!is) throw IoError("truncated model header");

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("corrupt model header: ") + e.what());
    }

    NetworkGraph g;
    auto shape = header.at("input_shape");
    g.input_shape = {shape.at(0).get<int>(), shape.at(1).get<int>(), shape.at(2).get<int>()};
    for (const auto& jl : header.at("layers")) g.layers.push_back(layer_from_json(jl));
    for (const auto& je : header.at("edges"))
        g.edges.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());

    for (const auto& jw : header.at("weights")) {
        int id = jw.at("layer").get<int>();
        int rank = jw.at("rank").get<int>();
        auto dims = jw.at("dims").get<std::vector<int>>();
        if ((rank != 2 && rank != 4) || dims.size() != static_cast<size_t>(rank))
            throw IoError("corrupt weight descriptor for layer " + std::to_string(id));
        WeightTensor w;
        w.rank = rank;
        w.dims = {1, 1, 1, 1};
        size_t total = 1;
        for (int d = 0; d < rank; ++d) {
            w.dims[d] = dims[d];
            if (dims[d] <= 0) throw IoError("corrupt weight dims for layer " + std::to_string(id));
            total *= static_cast<size_t>(dims[d]);
        }
        w.data.resize(total);
        is.read(reinterpret_cast<char*>(w.data.data()),
                static_cast<std::streamsize>(total * sizeof(float)));
        if (!is) throw IoError("truncated weight payload at layer " + std::to_string(id));
        g.weights.emplace(id, std::move(w));
    }

    MaskBytes masks;
    for (const auto& jm : header.at("masks")) {
        int id = jm.at("layer").get<int>();
        size_t count = jm.at("count").get<size_t>();
        std::vector<uint8_t> bits(count);
        is.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(count));
        if (!is) throw IoError("truncated mask payload at layer " + std::to_string(id));
        masks.emplace(id, std::move(bits));
    }

    try {
        g.validate();
    } catch (const InvalidArgument& e) {
        throw IoError(std::string("corrupt model: ") + e.what());
    }
    for (const auto& [id, bits] : masks)
        if (bits.size() != g.weights.at(id).size())
            throw IoError("mask length mismatch at layer " + std::to_string(id));
    if (masks_out) *masks_out = std::move(masks);
    return g;
}

// --- MAC accounting ---------------------------------------------------------

namespace {

uint64_t layer_macs(const LayerSpec& l, const Shape3& out) {
    switch (l.kind) {
        case LayerKind::Conv2d:
            return static_cast<uint64_t>(out.h) * out.w * l.kernel_h * l.kernel_w *
                   l.in_channels * l.out_channels;
        case LayerKind::DepthwiseConv2d:
            return static_cast<uint64_t>(out.h) * out.w * l.kernel_h * l.kernel_w *
                   l.in_channels;
        case LayerKind::FullyConnected:
            return static_cast<uint64_t>(l.out_channels) * l.in_channels;
        default:
            return 0;
    }
}

}  // namespace

MacCounts count_macs(const NetworkGraph& graph) {
    auto shapes = graph.infer_shapes();
    MacCounts mc;
    for (const auto& l : graph.layers) {
        uint64_t m = layer_macs(l, shapes.at(l.id));
        mc.per_layer[l.id] = m;
        mc.total += m;
    }
    return mc;
}

MacCountsEffective count_macs(const NetworkGraph& graph,
                              const std::map<int, double>& rate_per_layer) {
    auto dense = count_macs(graph);
    MacCountsEffective mc;
    for (const auto& [id, m] : dense.per_layer) {
        double rate = 1.0;
        if (auto it = rate_per_layer.find(id); it != rate_per_layer.end()) {
            if (it->second < 1.0) throw InvalidArgument("pruning rate must be >= 1");
            rate = it->second;
        }
        double eff = static_cast<double>(m) / rate;
        mc.per_layer[id] = eff;
        mc.total += eff;
    }
    return mc;
}

NetworkGraph replace_unfriendly_ops(const NetworkGraph& graph) {
    NetworkGraph out = graph;
    for (auto& l : out.layers) {
        if (l.activation == ActivationKind::Sigmoid) l.activation = ActivationKind::HardSigmoid;
        else if (l.activation == ActivationKind::Swish) l.activation = ActivationKind::HardSwish;
    }
    return out;
}

}  // namespace npas
