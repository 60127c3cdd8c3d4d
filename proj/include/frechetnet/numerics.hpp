#ifndef FRECHETNET_NUMERICS_HPP
#define FRECHETNET_NUMERICS_HPP

// Random sampling, small dense linear algebra and isotonic projection.
//
// Random numbers come from std::mt19937_64, whose output sequence is fixed by
// the C++ standard, so a seed reproduces the same stream on every conforming
// platform. Uniform doubles take the top 53 bits of each 64-bit draw. The
// continuous samplers are implemented here rather than through <random>
// distributions, whose algorithms are implementation-defined:
//   normal     Marsaglia polar method, spare value cached
//   gamma      Marsaglia-Tsang squeeze; shape < 1 via the U^(1/shape) boost
//   mvnormal   mean + L z with L the Cholesky factor (eigen square root when
//              the covariance is only semi-definite)

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "frechetnet/errors.hpp"

namespace frechetnet {

using DenseMatrix = Eigen::MatrixXd;
using DenseVector = Eigen::VectorXd;

class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1).
    double uniform_open() {
        double u;
        do {
            u = uniform();
        } while (u == 0.0);
        return u;
    }

    double standard_normal() {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        return u * f;
    }

    bool operator==(const Rng& other) const {
        return engine_ == other.engine_ && spare_ == other.spare_;
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

inline Rng seeded_rng(std::uint64_t seed) { return Rng(seed); }

/// Mixes a base seed with a stream index (splitmix64 finalizer) so that
/// derived streams for replicates, folds and training stages do not collide.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline double sample_normal(Rng& rng, double mean, double sd) {
    if (!(sd > 0.0) || !std::isfinite(mean) || !std::isfinite(sd)) {
        throw ParameterError("sample_normal: sd must be positive and finite");
    }
    return mean + sd * rng.standard_normal();
}

inline double sample_uniform(Rng& rng, double a, double b) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw ParameterError("sample_uniform: requires finite a < b");
    }
    return a + (b - a) * rng.uniform();
}

inline int sample_bernoulli(Rng& rng, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("sample_bernoulli: p must lie in [0, 1]");
    return rng.uniform() < p ? 1 : 0;
}

/// Gamma with shape-scale parametrization: mean shape*scale, variance shape*scale^2.
inline double sample_gamma(Rng& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0) || !std::isfinite(shape) || !std::isfinite(scale)) {
        throw ParameterError("sample_gamma: shape and scale must be positive and finite");
    }
    if (shape < 1.0) {
        const double g = sample_gamma(rng, shape + 1.0, 1.0);
        return scale * g * std::pow(rng.uniform_open(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z, v;
        do {
            z = rng.standard_normal();
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        if (u < 1.0 - 0.0331 * z * z * z * z) return scale * d * v;
        if (std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) return scale * d * v;
    }
}

inline DenseVector sample_mvnormal(Rng& rng, const DenseVector& mean, const DenseMatrix& cov) {
    const auto k = mean.size();
    if (k == 0 || cov.rows() != k || cov.cols() != k) {
        throw DimensionError("sample_mvnormal: covariance must be k x k with k = mean length");
    }
    DenseMatrix root;
    Eigen::LLT<DenseMatrix> llt(cov);
    if (llt.info() == Eigen::Success) {
        root = llt.matrixL();
    } else {
        Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(cov);
        if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
            throw ParameterError("sample_mvnormal: covariance is not positive semi-definite");
        }
        root = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
    DenseVector z(k);
    for (Eigen::Index j = 0; j < k; ++j) z(j) = rng.standard_normal();
    return mean + root * z;
}

struct MeanCov {
    DenseVector mean;
    DenseMatrix cov;
};

/// Mean and 1/n-normalized covariance of the rows of `rows`.
inline MeanCov mean_and_cov(const DenseMatrix& rows) {
    const auto n = rows.rows();
    if (n < 2) throw SampleSizeError("mean_and_cov: at least 2 rows required");
    MeanCov out;
    out.mean = rows.colwise().mean().transpose();
    const DenseMatrix centered = rows.rowwise() - out.mean.transpose();
    out.cov = (centered.transpose() * centered) / static_cast<double>(n);
    return out;
}

inline MeanCov mean_and_cov(const std::vector<DenseVector>& rows) {
    if (rows.size() < 2) throw SampleSizeError("mean_and_cov: at least 2 rows required");
    const auto p = rows.front().size();
    DenseMatrix m(static_cast<Eigen::Index>(rows.size()), p);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != p) throw DimensionError("mean_and_cov: rows differ in length");
        m.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    }
    return mean_and_cov(m);
}

/// Tag requesting the scale-aware default ridge 1e-8 * trace(A) / dim.
struct AutoRidge {};
inline constexpr AutoRidge auto_ridge{};

inline double auto_ridge_value(const DenseMatrix& a) {
    return 1e-8 * a.trace() / static_cast<double>(a.rows());
}

/// Cholesky factorization of A + ridge*I, reusable across right-hand sides.
class RidgeSolver {
public:
    /// Pivots below this fraction of the largest diagonal entry count as failure.
    static constexpr double kPivotFloor = 1e-13;

    RidgeSolver() = default;

    RidgeSolver(const DenseMatrix& a, double ridge) { factorize(a, ridge); }

    /// Returns false instead of throwing when the factorization fails.
    bool try_factorize(const DenseMatrix& a, double ridge) {
        check_shape(a);
        if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
            throw ParameterError("ridge must be nonnegative and finite");
        }
        ridge_ = ridge;
        DenseMatrix shifted = a;
        shifted.diagonal().array() += ridge;
        llt_.compute(shifted);
        ok_ = false;
        if (llt_.info() != Eigen::Success) return false;
        const double scale = shifted.diagonal().cwiseAbs().maxCoeff();
        const auto diag = llt_.matrixLLT().diagonal();
        if (!diag.allFinite()) return false;
        if (scale <= 0.0 || diag.cwiseAbs2().minCoeff() <= kPivotFloor * scale) return false;
        ok_ = true;
        return true;
    }

    void factorize(const DenseMatrix& a, double ridge) {
        if (!try_factorize(a, ridge)) {
            throw SingularError("ridge_solve: factorization failed with ridge " + std::to_string(ridge),
                                ridge);
        }
    }

    template <typename Derived>
    DenseMatrix solve(const Eigen::MatrixBase<Derived>& b) const {
        if (!ok_) throw SingularError("ridge_solve: no valid factorization", ridge_);
        if (b.rows() != llt_.rows()) throw DimensionError("ridge_solve: right-hand side row mismatch");
        return llt_.solve(b);
    }

    double ridge() const noexcept { return ridge_; }
    bool ok() const noexcept { return ok_; }

private:
    static void check_shape(const DenseMatrix& a) {
        if (a.rows() == 0 || a.rows() != a.cols()) throw DimensionError("ridge_solve: A must be square");
        const double tol = 1e-8 * std::max(1.0, a.cwiseAbs().maxCoeff());
        if ((a - a.transpose()).cwiseAbs().maxCoeff() > tol) {
            throw ContractError("ridge_solve: A is not symmetric");
        }
    }

    Eigen::LLT<DenseMatrix> llt_;
    double ridge_ = 0.0;
    bool ok_ = false;
};

/// Solves (A + ridge*I) X = B without forming an inverse.
inline DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b, double ridge) {
    return RidgeSolver(a, ridge).solve(b);
}

inline DenseVector ridge_solve(const DenseMatrix& a, const DenseVector& b, double ridge) {
    return RidgeSolver(a, ridge).solve(b);
}

inline DenseMatrix ridge_solve(const DenseMatrix& a, const DenseMatrix& b, AutoRidge) {
    if (a.rows() == 0) throw DimensionError("ridge_solve: empty matrix");
    return ridge_solve(a, b, auto_ridge_value(a));
}

inline DenseVector ridge_solve(const DenseMatrix& a, const DenseVector& b, AutoRidge) {
    if (a.rows() == 0) throw DimensionError("ridge_solve: empty matrix");
    return ridge_solve(a, b, auto_ridge_value(a));
}

/// Pools found by the pool-adjacent-violators pass: [start, end) index ranges.
struct IsotonicFit {
    DenseVector values;
    std::vector<Eigen::Index> block_starts;  // one entry per pool, plus values.size()
};

inline IsotonicFit pava_fit(const DenseVector& values) {
    const auto n = values.size();
    if (n == 0) throw DimensionError("pava_isotonic: empty vector");
    std::vector<double> sums;
    std::vector<Eigen::Index> counts;
    sums.reserve(static_cast<std::size_t>(n));
    counts.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        sums.push_back(values(i));
        counts.push_back(1);
        while (sums.size() > 1) {
            const auto k = sums.size() - 1;
            const double prev = sums[k - 1] / static_cast<double>(counts[k - 1]);
            const double cur = sums[k] / static_cast<double>(counts[k]);
            if (!(prev > cur)) break;
            sums[k - 1] += sums[k];
            counts[k - 1] += counts[k];
            sums.pop_back();
            counts.pop_back();
        }
    }
    IsotonicFit fit;
    fit.values.resize(n);
    Eigen::Index pos = 0;
    for (std::size_t b = 0; b < sums.size(); ++b) {
        fit.block_starts.push_back(pos);
        if (counts[b] == 1) {
            // singleton pools keep the input bit-for-bit
            fit.values(pos) = sums[b];
        } else {
            fit.values.segment(pos, counts[b]).setConstant(sums[b] / static_cast<double>(counts[b]));
        }
        pos += counts[b];
    }
    fit.block_starts.push_back(n);
    return fit;
}

/// L2 projection onto nondecreasing vectors.
inline DenseVector pava_isotonic(const DenseVector& values) { return pava_fit(values).values; }

/// Central differences (f(x + h e_j) - f(x - h e_j)) / 2h.
inline DenseVector finite_diff_gradient(const std::function<double(const DenseVector&)>& f,
                                        const DenseVector& x, double h) {
    if (!(h > 0.0)) throw ParameterError("finite_diff_gradient: h must be positive");
    DenseVector g(x.size());
    DenseVector probe = x;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        probe(j) = x(j) + h;
        const double up = f(probe);
        probe(j) = x(j) - h;
        const double down = f(probe);
        probe(j) = x(j);
        g(j) = (up - down) / (2.0 * h);
    }
    return g;
}

}  // namespace frechetnet

#endif
