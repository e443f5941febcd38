#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "pinnflow/errors.hpp"

namespace pinnflow {

// Shape of one affine layer inside the flat parameter vector. Weights are
// row-major (out x in), biases follow the weights.
struct LayerShape {
    int out = 0;
    int in = 0;
    std::size_t w_offset = 0;
    std::size_t b_offset = 0;
};

// Flat parameter vector plus the layer layout that maps (layer, row, col)
// to an index. The flat view is what the tape, the optimizer and the
// checkpoint serializer all share.
class ParameterStore {
public:
    ParameterStore() = default;

    // sizes = {in0, out0, out1, ...}: one affine layer per adjacent pair.
    explicit ParameterStore(const std::vector<int>& widths) {
        if (widths.size() < 2) throw ValidationError("parameter store: need at least one layer");
        std::size_t off = 0;
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            if (widths[l] <= 0 || widths[l + 1] <= 0)
                throw ValidationError("parameter store: layer widths must be positive");
            LayerShape s;
            s.in = widths[l];
            s.out = widths[l + 1];
            s.w_offset = off;
            off += static_cast<std::size_t>(s.in) * s.out;
            s.b_offset = off;
            off += s.out;
            layers_.push_back(s);
        }
        flat_.assign(off, 0.0);
    }

    std::size_t total_count() const { return flat_.size(); }
    std::size_t layer_count() const { return layers_.size(); }
    const LayerShape& layer(std::size_t l) const { return layers_[l]; }

    std::size_t w_index(std::size_t l, int row, int col) const {
        const LayerShape& s = layers_[l];
        return s.w_offset + static_cast<std::size_t>(row) * s.in + col;
    }
    std::size_t b_index(std::size_t l, int row) const { return layers_[l].b_offset + row; }

    double& operator[](std::size_t i) { return flat_[i]; }
    double operator[](std::size_t i) const { return flat_[i]; }
    std::span<double> flat() { return flat_; }
    std::span<const double> flat() const { return flat_; }

private:
    std::vector<LayerShape> layers_;
    std::vector<double> flat_;
};

}  // namespace pinnflow
