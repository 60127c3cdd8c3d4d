#ifndef FRECHETNET_METRIC_SPACES_HPP
#define FRECHETNET_METRIC_SPACES_HPP

// Response geometries. Each space has a linear embedding in which its
// squared distance is a (scaled) squared Euclidean distance, and a projection
// from the embedding back onto the space. A weighted Frechet mean is computed
// by averaging embeddings and projecting the average.
//
//   space        point              embedding           d^2 in embedding
//   wasserstein  quantiles on grid  quantile values     (1/m) |a - b|^2
//                p_j = (j-0.5)/m
//   laplacian    q x q Laplacian    row-major entries   |a - b|^2 (Frobenius)
//   aitchison    composition        clr(shares)         |a - b|^2
//   euclidean    vector             itself              |a - b|^2

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "frechetnet/errors.hpp"
#include "frechetnet/numerics.hpp"

namespace frechetnet {

/// Floor applied to composition shares before log-ratios are taken.
inline constexpr double kZeroReplacement = 1e-8;

class QuantileFunction {
public:
    static constexpr double kMonotoneTolerance = 1e-10;

    explicit QuantileFunction(DenseVector values) : values_(std::move(values)) {
        if (values_.size() == 0) throw ContractError("QuantileFunction: empty grid");
        if (!values_.allFinite()) throw ContractError("QuantileFunction: non-finite value");
        for (Eigen::Index j = 1; j < values_.size(); ++j) {
            if (values_(j) < values_(j - 1) - kMonotoneTolerance) {
                throw ContractError("QuantileFunction: values must be nondecreasing");
            }
        }
    }

    const DenseVector& values() const noexcept { return values_; }
    Eigen::Index grid_size() const noexcept { return values_.size(); }

    /// Probability level of grid point j (0-based) on an m-point grid.
    static double probability(Eigen::Index j, Eigen::Index m) {
        return (static_cast<double>(j) + 0.5) / static_cast<double>(m);
    }

private:
    DenseVector values_;
};

class GraphLaplacian {
public:
    static constexpr double kTolerance = 1e-8;

    explicit GraphLaplacian(DenseMatrix entries) : entries_(std::move(entries)) {
        const auto q = entries_.rows();
        if (q == 0 || entries_.cols() != q) throw ContractError("GraphLaplacian: must be square");
        if (!entries_.allFinite()) throw ContractError("GraphLaplacian: non-finite entry");
        for (Eigen::Index k = 0; k < q; ++k) {
            if (std::abs(entries_.row(k).sum()) > kTolerance) {
                throw ContractError("GraphLaplacian: rows must sum to zero");
            }
            for (Eigen::Index l = 0; l < q; ++l) {
                if (std::abs(entries_(k, l) - entries_(l, k)) > kTolerance) {
                    throw ContractError("GraphLaplacian: must be symmetric");
                }
                if (k != l && entries_(k, l) > kTolerance) {
                    throw ContractError("GraphLaplacian: off-diagonal entries must be nonpositive");
                }
            }
        }
    }

    const DenseMatrix& entries() const noexcept { return entries_; }
    Eigen::Index node_count() const noexcept { return entries_.rows(); }

private:
    DenseMatrix entries_;
};

class Composition {
public:
    static constexpr double kSumTolerance = 1e-10;

    explicit Composition(DenseVector shares) : shares_(std::move(shares)) {
        if (shares_.size() == 0) throw ContractError("Composition: empty");
        if (!shares_.allFinite() || (shares_.array() <= 0.0).any()) {
            throw ContractError("Composition: shares must be positive");
        }
        if (std::abs(shares_.sum() - 1.0) > kSumTolerance) {
            throw ContractError("Composition: shares must sum to 1");
        }
    }

    const DenseVector& shares() const noexcept { return shares_; }
    Eigen::Index dimension() const noexcept { return shares_.size(); }

private:
    DenseVector shares_;
};

class EuclideanPoint {
public:
    explicit EuclideanPoint(DenseVector coords) : coords_(std::move(coords)) {
        if (coords_.size() == 0) throw ContractError("EuclideanPoint: empty");
        if (!coords_.allFinite()) throw ContractError("EuclideanPoint: non-finite coordinate");
    }

    const DenseVector& coordinates() const noexcept { return coords_; }
    Eigen::Index dimension() const noexcept { return coords_.size(); }

private:
    DenseVector coords_;
};

using Point = std::variant<QuantileFunction, GraphLaplacian, Composition, EuclideanPoint>;

/// Floors shares below 1e-8 at 1e-8 and renormalizes.
inline Composition zero_replace(const DenseVector& raw) {
    if (raw.size() == 0) throw ContractError("zero_replace: empty composition");
    if (!raw.allFinite() || (raw.array() < 0.0).any()) {
        throw ContractError("zero_replace: shares must be nonnegative");
    }
    if (!(raw.sum() > 0.0)) throw ContractError("zero_replace: degenerate all-zero composition");
    DenseVector s = raw / raw.sum();
    if ((s.array() < kZeroReplacement).any()) {
        s = s.cwiseMax(kZeroReplacement);
        s /= s.sum();
    }
    return Composition(std::move(s));
}

/// Centered log-ratio transform.
inline DenseVector clr(const DenseVector& shares) {
    DenseVector l = shares.array().log();
    return l.array() - l.mean();
}

enum class SpaceKind { wasserstein, laplacian, aitchison, euclidean };

/// How the gradient engine differentiates the projection onto the space.
enum class ProjectionAdjoint {
    straight_through,  // identity on the embedded gradient
    exact,             // Jacobian of the locally affine projection
};

inline std::string_view to_string(SpaceKind kind) {
    switch (kind) {
        case SpaceKind::wasserstein: return "wasserstein";
        case SpaceKind::laplacian: return "laplacian";
        case SpaceKind::aitchison: return "aitchison";
        case SpaceKind::euclidean: return "euclidean";
    }
    return "unknown";
}

inline std::optional<SpaceKind> parse_space_kind(std::string_view name) {
    for (auto k : {SpaceKind::wasserstein, SpaceKind::laplacian, SpaceKind::aitchison,
                   SpaceKind::euclidean}) {
        if (name == to_string(k)) return k;
    }
    return std::nullopt;
}

class MetricSpace {
public:
    static constexpr double kWeightMeanTolerance = 1e-6;

    MetricSpace(SpaceKind kind, Eigen::Index dimension) : kind_(kind), dim_(dimension) {
        if (dimension < 1) throw ParameterError("MetricSpace: dimension must be positive");
    }

    static MetricSpace wasserstein(Eigen::Index grid_size = 100) {
        return {SpaceKind::wasserstein, grid_size};
    }
    static MetricSpace laplacian(Eigen::Index nodes) { return {SpaceKind::laplacian, nodes}; }
    static MetricSpace aitchison(Eigen::Index parts) { return {SpaceKind::aitchison, parts}; }
    static MetricSpace euclidean(Eigen::Index dim) { return {SpaceKind::euclidean, dim}; }

    SpaceKind kind() const noexcept { return kind_; }

    /// m, q or k depending on the space.
    Eigen::Index dimension() const noexcept { return dim_; }

    Eigen::Index embedding_dim() const noexcept {
        return kind_ == SpaceKind::laplacian ? dim_ * dim_ : dim_;
    }

    /// Factor c with d^2(a, b) = c |embed(a) - embed(b)|^2.
    double squared_distance_scale() const noexcept {
        return kind_ == SpaceKind::wasserstein ? 1.0 / static_cast<double>(dim_) : 1.0;
    }

    bool operator==(const MetricSpace&) const = default;

    /// True when `p` is a point of this space with matching dimensions.
    bool contains(const Point& p) const {
        switch (kind_) {
            case SpaceKind::wasserstein: {
                auto* v = std::get_if<QuantileFunction>(&p);
                return v && v->grid_size() == dim_;
            }
            case SpaceKind::laplacian: {
                auto* v = std::get_if<GraphLaplacian>(&p);
                return v && v->node_count() == dim_;
            }
            case SpaceKind::aitchison: {
                auto* v = std::get_if<Composition>(&p);
                return v && v->dimension() == dim_;
            }
            case SpaceKind::euclidean: {
                auto* v = std::get_if<EuclideanPoint>(&p);
                return v && v->dimension() == dim_;
            }
        }
        return false;
    }

    DenseVector embed(const Point& p) const {
        require(p);
        switch (kind_) {
            case SpaceKind::wasserstein: return std::get<QuantileFunction>(p).values();
            case SpaceKind::laplacian: {
                const auto& m = std::get<GraphLaplacian>(p).entries();
                DenseVector out(dim_ * dim_);
                for (Eigen::Index k = 0; k < dim_; ++k)
                    for (Eigen::Index l = 0; l < dim_; ++l) out(k * dim_ + l) = m(k, l);
                return out;
            }
            case SpaceKind::aitchison: return clr(std::get<Composition>(p).shares());
            case SpaceKind::euclidean: return std::get<EuclideanPoint>(p).coordinates();
        }
        return {};
    }

    double squared_distance(const Point& a, const Point& b) const {
        return squared_distance_scale() * (embed(a) - embed(b)).squaredNorm();
    }

    double distance(const Point& a, const Point& b) const { return std::sqrt(squared_distance(a, b)); }

    /// Maps an embedding-space vector to the nearest (or, for Laplacians,
    /// clip-projected) point of the space.
    Point project(const DenseVector& raw) const {
        check_raw(raw);
        switch (kind_) {
            case SpaceKind::wasserstein: return QuantileFunction(pava_isotonic(raw));
            case SpaceKind::laplacian: return GraphLaplacian(laplacian_matrix(raw));
            case SpaceKind::aitchison: {
                DenseVector c = raw.array() - raw.mean();
                DenseVector s = (c.array() - c.maxCoeff()).exp();
                s /= s.sum();
                if ((s.array() <= 0.0).any()) return zero_replace(s);
                // renormalizing twice pins the sum to 1 in floating point
                s /= s.sum();
                return Composition(std::move(s));
            }
            case SpaceKind::euclidean: return EuclideanPoint(raw);
        }
        throw ContractError("project: unknown space");
    }

    /// embed(project(raw)) computed without leaving the embedding.
    DenseVector project_embedded(const DenseVector& raw) const {
        check_raw(raw);
        switch (kind_) {
            case SpaceKind::wasserstein: return pava_isotonic(raw);
            case SpaceKind::laplacian: {
                const DenseMatrix m = laplacian_matrix(raw);
                DenseVector out(dim_ * dim_);
                for (Eigen::Index k = 0; k < dim_; ++k)
                    for (Eigen::Index l = 0; l < dim_; ++l) out(k * dim_ + l) = m(k, l);
                return out;
            }
            case SpaceKind::aitchison: return raw.array() - raw.mean();
            case SpaceKind::euclidean: return raw;
        }
        return raw;
    }

    /// Vector-Jacobian product of project_embedded at `raw` applied to `upstream`.
    DenseVector project_adjoint(const DenseVector& raw, const DenseVector& upstream,
                                ProjectionAdjoint mode) const {
        if (upstream.size() != embedding_dim()) throw DimensionError("project_adjoint: size mismatch");
        switch (kind_) {
            case SpaceKind::euclidean: return upstream;
            case SpaceKind::aitchison: return upstream.array() - upstream.mean();
            case SpaceKind::wasserstein: {
                if (mode == ProjectionAdjoint::straight_through) return upstream;
                const auto fit = pava_fit(raw);
                DenseVector out(upstream.size());
                for (std::size_t b = 0; b + 1 < fit.block_starts.size(); ++b) {
                    const auto start = fit.block_starts[b];
                    const auto len = fit.block_starts[b + 1] - start;
                    out.segment(start, len).setConstant(upstream.segment(start, len).mean());
                }
                return out;
            }
            case SpaceKind::laplacian: {
                if (mode == ProjectionAdjoint::straight_through) return upstream;
                DenseVector out = DenseVector::Zero(upstream.size());
                for (Eigen::Index k = 0; k < dim_; ++k) {
                    for (Eigen::Index l = k + 1; l < dim_; ++l) {
                        const double sym = 0.5 * (raw(k * dim_ + l) + raw(l * dim_ + k));
                        if (!(sym < 0.0)) continue;
                        // p_kl = p_lk = sym; p_kk and p_ll each subtract it
                        const double g = upstream(k * dim_ + l) + upstream(l * dim_ + k) -
                                         upstream(k * dim_ + k) - upstream(l * dim_ + l);
                        out(k * dim_ + l) = 0.5 * g;
                        out(l * dim_ + k) = 0.5 * g;
                    }
                }
                return out;
            }
        }
        return upstream;
    }

    /// Encodes which constraints of the projection are active at `raw`
    /// (PAVA pool boundaries, clipped Laplacian entries). Used to detect
    /// when a finite-difference probe crosses a kink.
    std::vector<std::int64_t> projection_pattern(const DenseVector& raw) const {
        std::vector<std::int64_t> out;
        if (kind_ == SpaceKind::wasserstein) {
            for (auto s : pava_fit(raw).block_starts) out.push_back(s);
        } else if (kind_ == SpaceKind::laplacian) {
            for (Eigen::Index k = 0; k < dim_; ++k)
                for (Eigen::Index l = k + 1; l < dim_; ++l)
                    out.push_back(0.5 * (raw(k * dim_ + l) + raw(l * dim_ + k)) < 0.0 ? 1 : 0);
        }
        return out;
    }

    /// project((1/n) sum_i w_i embed(points_i)); weights may be negative but
    /// must average to one.
    Point weighted_frechet_mean(std::span<const Point> points, const DenseVector& weights) const {
        if (points.empty()) throw ContractError("weighted_frechet_mean: no points");
        if (static_cast<Eigen::Index>(points.size()) != weights.size()) {
            throw ContractError("weighted_frechet_mean: point and weight counts differ");
        }
        const double n = static_cast<double>(points.size());
        if (std::abs(weights.sum() / n - 1.0) > kWeightMeanTolerance) {
            throw ContractError("weighted_frechet_mean: weights must average to 1");
        }
        DenseVector raw = DenseVector::Zero(embedding_dim());
        for (std::size_t i = 0; i < points.size(); ++i) {
            raw += weights(static_cast<Eigen::Index>(i)) * embed(points[i]);
        }
        return project(raw / n);
    }

    /// Natural coordinates used by the file formats: quantile values,
    /// row-major Laplacian entries, shares, or coordinates.
    DenseVector values(const Point& p) const {
        require(p);
        if (kind_ == SpaceKind::aitchison) return std::get<Composition>(p).shares();
        return embed(p);
    }

    /// Inverse of values(); validates the point invariants.
    Point from_values(const DenseVector& v) const {
        if (v.size() != embedding_dim()) throw DimensionError("from_values: wrong number of values");
        switch (kind_) {
            case SpaceKind::wasserstein: return QuantileFunction(v);
            case SpaceKind::laplacian: {
                DenseMatrix m(dim_, dim_);
                for (Eigen::Index k = 0; k < dim_; ++k)
                    for (Eigen::Index l = 0; l < dim_; ++l) m(k, l) = v(k * dim_ + l);
                return GraphLaplacian(std::move(m));
            }
            case SpaceKind::aitchison: return Composition(v);
            case SpaceKind::euclidean: return EuclideanPoint(v);
        }
        throw ContractError("from_values: unknown space");
    }

    /// Stacks embeddings as rows.
    DenseMatrix embed_all(std::span<const Point> points) const {
        DenseMatrix out(static_cast<Eigen::Index>(points.size()), embedding_dim());
        for (std::size_t i = 0; i < points.size(); ++i) {
            out.row(static_cast<Eigen::Index>(i)) = embed(points[i]).transpose();
        }
        return out;
    }

private:
    void require(const Point& p) const {
        if (!contains(p)) throw DimensionError("point does not belong to this metric space");
    }

    void check_raw(const DenseVector& raw) const {
        if (raw.size() != embedding_dim()) throw DimensionError("project: wrong embedding dimension");
        if (!raw.allFinite()) throw NumericError("project: non-finite entries");
    }

    // symmetrize, clip off-diagonals at zero, rebuild the diagonal
    DenseMatrix laplacian_matrix(const DenseVector& raw) const {
        DenseMatrix m = DenseMatrix::Zero(dim_, dim_);
        for (Eigen::Index k = 0; k < dim_; ++k) {
            for (Eigen::Index l = k + 1; l < dim_; ++l) {
                const double sym = 0.5 * (raw(k * dim_ + l) + raw(l * dim_ + k));
                m(k, l) = m(l, k) = std::min(sym, 0.0);
            }
        }
        for (Eigen::Index k = 0; k < dim_; ++k) m(k, k) = -m.row(k).sum();
        return m;
    }

    SpaceKind kind_;
    Eigen::Index dim_;
};

/// Mean squared prediction error (1/N) sum_i d^2(pred_i, truth_i).
inline double mspe(std::span<const Point> predictions, std::span<const Point> truths,
                   const MetricSpace& space) {
    if (predictions.size() != truths.size()) throw ContractError("mspe: length mismatch");
    if (predictions.empty()) throw ContractError("mspe: no predictions");
    double acc = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i) acc += space.squared_distance(predictions[i], truths[i]);
    return acc / static_cast<double>(predictions.size());
}

}  // namespace frechetnet

#endif
