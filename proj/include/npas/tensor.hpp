#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "npas/errors.hpp"

namespace npas {

// Weight storage for conv (filters, channels, kh, kw) and FC (rows, cols)
// layers. Row-major 32-bit floats; data length always equals the product of
// the active dims.
struct WeightTensor {
    int rank = 0;                  // 4 for conv, 2 for FC
    std::array<int, 4> dims{};     // conv: f,c,kh,kw  fc: rows,cols,1,1
    std::vector<float> data;

    WeightTensor() = default;

    static WeightTensor conv(int filters, int channels, int kh, int kw) {
        if (filters <= 0 || channels <= 0 || kh <= 0 || kw <= 0)
            throw InvalidArgument("conv tensor dims must be positive");
        WeightTensor t;
        t.rank = 4;
        t.dims = {filters, channels, kh, kw};
        t.data.assign(static_cast<size_t>(filters) * channels * kh * kw, 0.0f);
        return t;
    }

    static WeightTensor fc(int rows, int cols) {
        if (rows <= 0 || cols <= 0)
            throw InvalidArgument("fc tensor dims must be positive");
        WeightTensor t;
        t.rank = 2;
        t.dims = {rows, cols, 1, 1};
        t.data.assign(static_cast<size_t>(rows) * cols, 0.0f);
        return t;
    }

    size_t size() const { return data.size(); }

    // conv indexing (f, c, i, j)
    size_t at4(int f, int c, int i, int j) const {
        return ((static_cast<size_t>(f) * dims[1] + c) * dims[2] + i) * dims[3] + j;
    }
    // fc indexing (row, col)
    size_t at2(int r, int c) const {
        return static_cast<size_t>(r) * dims[1] + c;
    }

    bool same_shape(const WeightTensor& o) const {
        return rank == o.rank && dims == o.dims;
    }
};

// Activation/feature storage in NHWC order.
struct FeatureMap {
    int n = 0, h = 0, w = 0, c = 0;
    std::vector<float> data;

    FeatureMap() = default;
    FeatureMap(int n_, int h_, int w_, int c_)
        : n(n_), h(h_), w(w_), c(c_),
          data(static_cast<size_t>(n_) * h_ * w_ * c_, 0.0f) {
        if (n_ <= 0 || h_ <= 0 || w_ <= 0 || c_ <= 0)
            throw InvalidArgument("feature map dims must be positive");
    }

    size_t size() const { return data.size(); }

    size_t at(int in, int ih, int iw, int ic) const {
        return ((static_cast<size_t>(in) * h + ih) * w + iw) * c + ic;
    }

    float& operator()(int in, int ih, int iw, int ic) { return data[at(in, ih, iw, ic)]; }
    float operator()(int in, int ih, int iw, int ic) const { return data[at(in, ih, iw, ic)]; }
};

}  // namespace npas
