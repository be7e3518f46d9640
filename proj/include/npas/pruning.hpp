#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "npas/tensor.hpp"

namespace npas {

struct NetworkGraph;  // model.hpp

enum class SchemeKind {
    Unstructured,
    Filter,
    Channel,
    PatternBased,
    BlockPunched,
    BlockBased,
};

const char* to_string(SchemeKind k);
SchemeKind scheme_kind_from_string(const std::string& s);

// Pruning scheme with its structural parameters. BlockPunched blocks tile
// the (filters x channels) grid of a 4-D tensor; BlockBased blocks tile the
// (rows x cols) grid of a 2-D matrix; PatternBased applies to 3x3 conv
// weights only.
struct PruningScheme {
    SchemeKind kind = SchemeKind::Unstructured;
    int block_a = 0;          // block_filters / block_rows
    int block_b = 0;          // block_channels / block_cols
    int pattern_library_id = 0;

    static PruningScheme unstructured() { return {SchemeKind::Unstructured}; }
    static PruningScheme filter() { return {SchemeKind::Filter}; }
    static PruningScheme channel() { return {SchemeKind::Channel}; }
    static PruningScheme pattern_based(int library_id = 0) {
        PruningScheme s{SchemeKind::PatternBased};
        s.pattern_library_id = library_id;
        return s;
    }
    static PruningScheme block_punched(int block_filters, int block_channels) {
        if (block_filters < 1 || block_channels < 1)
            throw InvalidArgument("block dims must be >= 1");
        return {SchemeKind::BlockPunched, block_filters, block_channels};
    }
    static PruningScheme block_based(int block_rows, int block_cols) {
        if (block_rows < 1 || block_cols < 1)
            throw InvalidArgument("block dims must be >= 1");
        return {SchemeKind::BlockBased, block_rows, block_cols};
    }

    bool operator==(const PruningScheme&) const = default;
    std::string label() const;   // stable text form, also used as search label
};

PruningScheme scheme_from_label(const std::string& label);

// Pruning rate r: fraction kept = 1/r. Only the fixed search-space list is
// accepted here; internal ramp schedules use explicit kept fractions.
struct PruningRate {
    double value = 1.0;

    static const std::vector<double>& allowed();
    static bool is_allowed(double r);
    static PruningRate of(double r);

    double kept_fraction() const { return 1.0 / value; }
    bool operator==(const PruningRate&) const = default;
};

// Boolean keep-mask aligned to a weight tensor (1 = kept).
struct SparsityMask {
    int rank = 0;
    std::array<int, 4> dims{};
    std::vector<uint8_t> bits;

    static SparsityMask ones_like(const WeightTensor& t);
    static SparsityMask zeros_like(const WeightTensor& t);

    bool matches(const WeightTensor& t) const { return rank == t.rank && dims == t.dims; }
    size_t count_kept() const;
    double kept_fraction() const;
    size_t at4(int f, int c, int i, int j) const {
        return ((static_cast<size_t>(f) * dims[1] + c) * dims[2] + i) * dims[3] + j;
    }
    size_t at2(int r, int c) const { return static_cast<size_t>(r) * dims[1] + c; }
};

// 3x3 stencils with exactly 4 non-zero entries, row-major.
struct PatternLibrary {
    std::vector<std::array<uint8_t, 9>> patterns;
    void validate() const;
};

// Eight stencils: center + 3 of the 4 edge-adjacent positions, and
// center + 3 of the 4 corner positions.
PatternLibrary default_pattern_library();
// Text format: one stencil per line as a 9-character 0/1 string (row-major);
// '#' comments and blank lines ignored.
PatternLibrary load_pattern_library(const std::string& path);
void save_pattern_library(const PatternLibrary& lib, const std::string& path);

// --- mask generation --------------------------------------------------------

// Kept units at a fraction: max(1, round(total * fraction)), the rounding
// rule shared by every granularity.
long long kept_unit_count(long long total_units, double kept_fraction);

// One-shot magnitude mask at the scheme's granularity. Selection maximizes
// retained magnitude; ties break toward the lowest index.
SparsityMask magnitude_mask(const WeightTensor& tensor, const PruningScheme& scheme,
                            PruningRate rate, const PatternLibrary* patterns = nullptr);
// Same selection logic at an arbitrary kept fraction (used by ramp
// schedules and fraction-based experiments).
SparsityMask magnitude_mask_fraction(const WeightTensor& tensor, const PruningScheme& scheme,
                                     double kept_fraction,
                                     const PatternLibrary* patterns = nullptr);

// Pattern assignment + connectivity pruning for 3x3 conv tensors: each kept
// kernel gets the library pattern with the largest retained sum(w^2); whole
// kernels are removed (lowest retained energy first) until the overall kept
// fraction is <= 1/rate.
SparsityMask assign_patterns(const WeightTensor& tensor, const PatternLibrary& library,
                             PruningRate rate);
SparsityMask assign_patterns_fraction(const WeightTensor& tensor, const PatternLibrary& library,
                                      double kept_fraction);

WeightTensor apply_mask(const WeightTensor& tensor, const SparsityMask& mask);

// Structural validity of a mask for a scheme (block position-sharing,
// full rows/cols per block, 4-nonzero patterns or removed kernels, ...).
bool mask_satisfies_scheme(const SparsityMask& mask, const PruningScheme& scheme,
                           const PatternLibrary* patterns = nullptr);

// --- regularizers & selectors ------------------------------------------------

struct GroupLassoResult {
    double penalty = 0.0;
    WeightTensor gradient;
};

// Sum of group L2 norms with the grouping induced by the scheme's prunable
// unit (weights / filters / channels / block positions / block rows /
// kernels). Zero groups get zero subgradient.
GroupLassoResult group_lasso_penalty(const WeightTensor& tensor, const PruningScheme& scheme);

struct WeiszfeldOptions {
    int max_iterations = 200;
    double tolerance = 1e-7;
    double epsilon = 1e-12;
};

std::vector<double> geometric_median(const std::vector<std::vector<float>>& points,
                                     const WeiszfeldOptions& opts = {});

// Filters closest (Euclidean) to the geometric median of all filters;
// prunes floor(n * (1 - 1/rate)) of them.
std::set<int> geometric_median_filter_select(const std::vector<std::vector<float>>& filters,
                                             PruningRate rate,
                                             const WeiszfeldOptions& opts = {});

// Channel-coupling validation: a pruned output channel (all-zero filter) in
// a producer should be a pruned input channel in each conv consumer.
// Returns human-readable violation descriptions (empty = consistent).
std::vector<std::string> validate_channel_consistency(
    const NetworkGraph& graph, const std::map<int, SparsityMask>& masks);

}  // namespace npas
