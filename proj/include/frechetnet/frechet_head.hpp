#ifndef FRECHETNET_FRECHET_HEAD_HPP
#define FRECHETNET_FRECHET_HEAD_HPP

// Output layer: global Frechet regression weights over final-layer
// representations and the weighted Frechet mean they define.
//
// For reference representations F (n x p) with mean mu and 1/n covariance S,
// a query representation f gets weights
//
//     s_i(f) = 1 + (f - mu)^T (S + ridge I)^{-1} (F_i - mu),
//
// which average to exactly one because the F_i - mu sum to zero. The
// prediction is the projection of (1/n) sum_i s_i embed(Y_i).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "frechetnet/errors.hpp"
#include "frechetnet/metric_spaces.hpp"
#include "frechetnet/network.hpp"
#include "frechetnet/numerics.hpp"

namespace frechetnet {

/// How the ridge added to the representation covariance is chosen.
struct RidgePolicy {
    enum class Mode { adaptive, fixed };

    Mode mode = Mode::adaptive;
    double value = 0.0;  // fixed mode only

    /// Zero ridge when the covariance factorizes cleanly, otherwise the
    /// scale-aware default 1e-8 * trace / dim, escalated tenfold until the
    /// factorization succeeds.
    static RidgePolicy adaptive() { return {}; }
    static RidgePolicy fixed(double ridge) {
        if (!(ridge >= 0.0)) throw ParameterError("RidgePolicy: ridge must be nonnegative");
        return {Mode::fixed, ridge};
    }

    bool operator==(const RidgePolicy&) const = default;
};

struct RepresentationStats {
    DenseVector mean;
    DenseMatrix cov;
    double ridge = 0.0;
    RidgeSolver solver;
};

/// Factorizes cov + ridge I according to `policy`.
inline RidgeSolver factorize_covariance(const DenseMatrix& cov, const RidgePolicy& policy) {
    if (!cov.allFinite()) throw NumericError("fit_stats: non-finite covariance");
    RidgeSolver solver;
    if (policy.mode == RidgePolicy::Mode::fixed) {
        solver.factorize(cov, policy.value);
        return solver;
    }
    if (solver.try_factorize(cov, 0.0)) return solver;
    double ridge = std::max(auto_ridge_value(cov), 1e-12);
    for (int attempt = 0; attempt < 16 && std::isfinite(ridge); ++attempt, ridge *= 10.0) {
        if (solver.try_factorize(cov, ridge)) return solver;
    }
    throw SingularError("fit_stats: covariance could not be stabilized", ridge);
}

inline RepresentationStats fit_stats(const DenseMatrix& reps, const RidgePolicy& policy) {
    if (reps.rows() < 2) throw SampleSizeError("fit_stats: at least 2 reference points required");
    auto mc = mean_and_cov(reps);
    RepresentationStats stats;
    stats.mean = std::move(mc.mean);
    stats.cov = std::move(mc.cov);
    stats.solver = factorize_covariance(stats.cov, policy);
    stats.ridge = stats.solver.ridge();
    return stats;
}

struct WeightProfile {
    DenseVector weights;

    Eigen::Index size() const noexcept { return weights.size(); }
};

inline WeightProfile weights(const DenseVector& f_x, const DenseMatrix& reps,
                             const RepresentationStats& stats) {
    if (f_x.size() != stats.mean.size() || reps.cols() != stats.mean.size()) {
        throw DimensionError("weights: representation dimension mismatch");
    }
    const DenseVector v = stats.solver.solve(f_x - stats.mean);
    // C v has mean zero exactly; recentre it so rounding in the centred rows,
    // amplified by a near-singular covariance, cannot leak into the mean
    DenseVector cv = (reps.rowwise() - stats.mean.transpose()) * v;
    cv.array() -= cv.mean();
    WeightProfile out;
    out.weights = cv.array() + 1.0;
    return out;
}

/// (1/n) sum_i s_i d^2(Y_i, omega).
inline double frechet_objective(const Point& omega, const WeightProfile& profile,
                                std::span<const Point> responses, const MetricSpace& space) {
    if (static_cast<Eigen::Index>(responses.size()) != profile.size()) {
        throw ContractError("frechet_objective: weight and response counts differ");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        acc += profile.weights(static_cast<Eigen::Index>(i)) * space.squared_distance(responses[i], omega);
    }
    return acc / static_cast<double>(responses.size());
}

/// Reference sample of the output layer: representations, responses and
/// their covariance factorization. Immutable after construction.
class FittedHead {
public:
    FittedHead(MetricSpace space, DenseMatrix reps, std::vector<Point> responses,
               const RidgePolicy& policy = RidgePolicy::adaptive())
        : space_(std::move(space)), reps_(std::move(reps)), responses_(std::move(responses)) {
        if (reps_.rows() != static_cast<Eigen::Index>(responses_.size())) {
            throw ContractError("FittedHead: representation and response counts differ");
        }
        if (reps_.rows() < 2) throw SampleSizeError("FittedHead: at least 2 reference points required");
        embedded_ = space_.embed_all(responses_);
        stats_ = fit_stats(reps_, policy);
        centered_ = reps_.rowwise() - stats_.mean.transpose();
    }

    /// Rebuilds a head from stored statistics (checkpoint loading).
    FittedHead(MetricSpace space, DenseMatrix reps, std::vector<Point> responses, DenseVector mean,
               DenseMatrix cov, double ridge)
        : space_(std::move(space)), reps_(std::move(reps)), responses_(std::move(responses)) {
        if (reps_.rows() != static_cast<Eigen::Index>(responses_.size())) {
            throw ContractError("FittedHead: representation and response counts differ");
        }
        if (reps_.rows() < 2) throw SampleSizeError("FittedHead: at least 2 reference points required");
        embedded_ = space_.embed_all(responses_);
        stats_.mean = std::move(mean);
        stats_.cov = std::move(cov);
        stats_.solver.factorize(stats_.cov, ridge);
        stats_.ridge = ridge;
        centered_ = reps_.rowwise() - stats_.mean.transpose();
    }

    const MetricSpace& space() const noexcept { return space_; }
    const DenseMatrix& representations() const noexcept { return reps_; }
    const std::vector<Point>& responses() const noexcept { return responses_; }
    const DenseMatrix& embedded_responses() const noexcept { return embedded_; }
    const RepresentationStats& stats() const noexcept { return stats_; }
    Eigen::Index size() const noexcept { return reps_.rows(); }
    Eigen::Index feature_dim() const noexcept { return reps_.cols(); }

    WeightProfile weights_for(const DenseVector& f_x) const { return weights(f_x, reps_, stats_); }

    /// Embedding-space weighted average (1/n) sum_i s_i embed(Y_i) for each
    /// query row, before projection.
    DenseMatrix raw_predictions(const DenseMatrix& queries) const {
        if (queries.cols() != feature_dim()) throw DimensionError("predict: feature dimension mismatch");
        const DenseMatrix dev = (queries.rowwise() - stats_.mean.transpose()).transpose();
        const DenseMatrix v = stats_.solver.solve(dev);        // p x q
        const DenseMatrix w = (centered_ * v).array() + 1.0;   // n x q
        return (w.transpose() * embedded_) / static_cast<double>(size());
    }

    Point predict_features(const DenseVector& f_x) const {
        return space_.project(raw_predictions(f_x.transpose()).row(0).transpose());
    }

    std::vector<Point> predict_features(const DenseMatrix& queries) const {
        const DenseMatrix raw = raw_predictions(queries);
        std::vector<Point> out;
        out.reserve(static_cast<std::size_t>(raw.rows()));
        for (Eigen::Index i = 0; i < raw.rows(); ++i) out.push_back(space_.project(raw.row(i).transpose()));
        return out;
    }

private:
    MetricSpace space_;
    DenseMatrix reps_;
    std::vector<Point> responses_;
    DenseMatrix embedded_;
    DenseMatrix centered_;
    RepresentationStats stats_;
};

/// DFNN prediction: eval-mode representation of x, then the head.
inline Point predict(const DenseVector& x, const NetworkParams& params, const Architecture& arch,
                     const FittedHead& head, const MetricSpace& space) {
    if (!(space == head.space())) throw ContractError("predict: head was fitted in another space");
    const DenseMatrix f = represent(params, arch, x.transpose());
    return head.predict_features(DenseVector(f.row(0).transpose()));
}

inline std::vector<Point> predict(const DenseMatrix& xs, const NetworkParams& params,
                                  const Architecture& arch, const FittedHead& head) {
    return head.predict_features(represent(params, arch, xs));
}

/// Global Frechet regression: the same head with raw predictors as features.
inline Point gfr_predict(const DenseVector& x, const DenseMatrix& x_train,
                         std::span<const Point> responses, const MetricSpace& space) {
    if (x_train.rows() < 2) throw SampleSizeError("gfr_predict: at least 2 training points required");
    FittedHead head(space, x_train, std::vector<Point>(responses.begin(), responses.end()));
    return head.predict_features(x);
}

}  // namespace frechetnet

#endif
