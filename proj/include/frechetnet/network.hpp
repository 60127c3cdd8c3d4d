#ifndef FRECHETNET_NETWORK_HPP
#define FRECHETNET_NETWORK_HPP

// ReLU multilayer perceptron producing the final hidden representation
// g_L(x). Batches are matrices with one example per row.

#include <cmath>
#include <vector>

#include "frechetnet/errors.hpp"
#include "frechetnet/numerics.hpp"

namespace frechetnet {

struct Architecture {
    Eigen::Index input_dim = 1;
    std::vector<Eigen::Index> hidden_widths{1};
    double dropout_rate = 0.0;

    Eigen::Index depth() const noexcept { return static_cast<Eigen::Index>(hidden_widths.size()); }
    Eigen::Index output_dim() const { return hidden_widths.back(); }

    /// `depth - 1` layers of `width` followed by one layer of `last_width`.
    static Architecture uniform(Eigen::Index input_dim, Eigen::Index depth, Eigen::Index width,
                                Eigen::Index last_width, double dropout_rate) {
        if (depth < 1) throw ParameterError("Architecture: depth must be at least 1");
        Architecture a;
        a.input_dim = input_dim;
        a.hidden_widths.assign(static_cast<std::size_t>(depth - 1), width);
        a.hidden_widths.push_back(last_width);
        a.dropout_rate = dropout_rate;
        a.validate();
        return a;
    }

    void validate() const {
        if (input_dim < 1) throw ParameterError("Architecture: input dimension must be at least 1");
        if (hidden_widths.empty()) throw ParameterError("Architecture: depth must be at least 1");
        for (auto w : hidden_widths) {
            if (w < 1) throw ParameterError("Architecture: widths must be at least 1");
        }
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
            throw ParameterError("Architecture: dropout rate must lie in [0, 1)");
        }
    }

    bool operator==(const Architecture&) const = default;
};

struct LayerParams {
    DenseMatrix weight;  // out x in
    DenseVector bias;    // out

    bool operator==(const LayerParams& o) const {
        return weight.rows() == o.weight.rows() && weight.cols() == o.weight.cols() &&
               weight == o.weight && bias.size() == o.bias.size() && bias == o.bias;
    }
};

/// Weight matrices and shift vectors of the hidden layers.
struct NetworkParams {
    std::vector<LayerParams> layers;

    bool operator==(const NetworkParams&) const = default;

    Eigen::Index parameter_count() const {
        Eigen::Index n = 0;
        for (const auto& l : layers) n += l.weight.size() + l.bias.size();
        return n;
    }

    bool all_finite() const {
        for (const auto& l : layers) {
            if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
        }
        return true;
    }

    /// Layer-by-layer concatenation: weight (column-major), then bias.
    DenseVector flatten() const {
        DenseVector out(parameter_count());
        Eigen::Index pos = 0;
        for (const auto& l : layers) {
            out.segment(pos, l.weight.size()) = l.weight.reshaped();
            pos += l.weight.size();
            out.segment(pos, l.bias.size()) = l.bias;
            pos += l.bias.size();
        }
        return out;
    }

    void assign_flat(const DenseVector& flat) {
        if (flat.size() != parameter_count()) throw DimensionError("assign_flat: size mismatch");
        Eigen::Index pos = 0;
        for (auto& l : layers) {
            l.weight.reshaped() = flat.segment(pos, l.weight.size());
            pos += l.weight.size();
            l.bias = flat.segment(pos, l.bias.size());
            pos += l.bias.size();
        }
    }

    NetworkParams zeros_like() const {
        NetworkParams z;
        for (const auto& l : layers) {
            z.layers.push_back({DenseMatrix::Zero(l.weight.rows(), l.weight.cols()),
                                DenseVector::Zero(l.bias.size())});
        }
        return z;
    }

    void check_shape(const Architecture& arch) const {
        if (static_cast<Eigen::Index>(layers.size()) != arch.depth()) {
            throw DimensionError("NetworkParams: layer count does not match architecture");
        }
        Eigen::Index in = arch.input_dim;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto out = arch.hidden_widths[l];
            if (layers[l].weight.rows() != out || layers[l].weight.cols() != in ||
                layers[l].bias.size() != out) {
                throw DimensionError("NetworkParams: layer shape does not match architecture");
            }
            in = out;
        }
    }
};

/// Fan-in scaled uniform initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in))
/// for every weight and shift, drawn layer by layer, weights row by row.
inline NetworkParams init_params(const Architecture& arch, Rng& rng) {
    arch.validate();
    NetworkParams params;
    Eigen::Index in = arch.input_dim;
    for (auto out : arch.hidden_widths) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(in));
        LayerParams layer{DenseMatrix(out, in), DenseVector(out)};
        for (Eigen::Index r = 0; r < out; ++r)
            for (Eigen::Index c = 0; c < in; ++c) layer.weight(r, c) = bound * (2.0 * rng.uniform() - 1.0);
        for (Eigen::Index r = 0; r < out; ++r) layer.bias(r) = bound * (2.0 * rng.uniform() - 1.0);
        params.layers.push_back(std::move(layer));
        in = out;
    }
    return params;
}

enum class ForwardMode { train, eval };

struct ForwardCache {
    DenseMatrix input;                      // n x p
    std::vector<DenseMatrix> pre;           // Z_l, n x p_l
    std::vector<DenseMatrix> post;          // g_l after dropout, n x p_l
    std::vector<DenseMatrix> masks;         // inverted-dropout scale per unit; empty when off
};

struct ForwardResult {
    DenseMatrix output;  // g_L, n x p_L
    ForwardCache cache;
};

/// Affine + ReLU per layer. In train mode inverted dropout is applied to the
/// outputs of layers 1..L-1; the final representation is never dropped.
inline ForwardResult forward(const NetworkParams& params, const Architecture& arch,
                             const DenseMatrix& x_batch, ForwardMode mode, Rng& rng) {
    params.check_shape(arch);
    if (x_batch.cols() != arch.input_dim) {
        throw DimensionError("forward: expected " + std::to_string(arch.input_dim) +
                             " predictors, got " + std::to_string(x_batch.cols()));
    }
    ForwardResult res;
    auto& cache = res.cache;
    cache.input = x_batch;
    const bool drop = mode == ForwardMode::train && arch.dropout_rate > 0.0;
    const double keep_scale = 1.0 / (1.0 - arch.dropout_rate);
    const DenseMatrix* prev = &cache.input;
    const auto depth = params.layers.size();
    cache.pre.reserve(depth);
    cache.post.reserve(depth);
    cache.masks.resize(depth);
    for (std::size_t l = 0; l < depth; ++l) {
        const auto& layer = params.layers[l];
        DenseMatrix z = (*prev) * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        DenseMatrix a = z.cwiseMax(0.0);
        if (drop && l + 1 < depth) {
            DenseMatrix mask(a.rows(), a.cols());
            for (Eigen::Index i = 0; i < a.rows(); ++i)
                for (Eigen::Index j = 0; j < a.cols(); ++j)
                    mask(i, j) = rng.uniform() < arch.dropout_rate ? 0.0 : keep_scale;
            a.array() *= mask.array();
            cache.masks[l] = std::move(mask);
        }
        cache.pre.push_back(std::move(z));
        cache.post.push_back(std::move(a));
        prev = &cache.post.back();
    }
    res.output = cache.post.back();
    return res;
}

/// Eval-mode representations without keeping the cache.
inline DenseMatrix represent(const NetworkParams& params, const Architecture& arch,
                             const DenseMatrix& x_batch) {
    params.check_shape(arch);
    if (x_batch.cols() != arch.input_dim) {
        throw DimensionError("represent: expected " + std::to_string(arch.input_dim) + " predictors");
    }
    DenseMatrix a = x_batch;
    for (const auto& layer : params.layers) {
        DenseMatrix z = a * layer.weight.transpose();
        z.rowwise() += layer.bias.transpose();
        a = z.cwiseMax(0.0);
    }
    return a;
}

}  // namespace frechetnet

#endif
