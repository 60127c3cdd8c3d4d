#ifndef FRECHETNET_GRADIENTS_HPP
#define FRECHETNET_GRADIENTS_HPP

// Reverse-mode gradient of the in-batch empirical Frechet risk
//
//     R = (1/n) sum_j d^2(Y_j, P(r_j)),   r_j = (1/n) sum_i s_ji e_i,
//
// where P is the projection onto the space, e_i = embed(Y_i), and
// s_ji = 1 + c_j^T K c_i with c_i = F_i - mean(F), K = (C^T C / n + ridge I)^{-1}.
// In matrix form the raw predictions are R = 1 ebar^T + (1/n) C K C^T E.
//
// With G = dR/dRaw (n x D) and Gs = G E^T + E G^T (divided by n), the adjoint
// with respect to C is
//
//     dC = (I - (1/n) C K C^T) Gs C K,
//
// whose second factor carries the dependence of K on C; the first term alone
// is the "detached statistics" gradient. Centering is undone by subtracting
// column means. Products are ordered so nothing of size n x n is formed.
// The ridge is held fixed during differentiation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "frechetnet/errors.hpp"
#include "frechetnet/frechet_head.hpp"
#include "frechetnet/metric_spaces.hpp"
#include "frechetnet/network.hpp"
#include "frechetnet/numerics.hpp"

namespace frechetnet {

/// Whether the batch mean and covariance are differentiated or treated as
/// constants of the step.
enum class StatsMode { differentiate, detached };

struct GradientOptions {
    ProjectionAdjoint projection = ProjectionAdjoint::straight_through;
    StatsMode stats = StatsMode::differentiate;
    RidgePolicy ridge = RidgePolicy::adaptive();
};

/// Gradients shaped like NetworkParams.
struct GradientBundle {
    std::vector<LayerParams> layers;

    DenseVector flatten() const {
        NetworkParams tmp{layers};
        return tmp.flatten();
    }

    bool all_finite() const {
        for (const auto& l : layers) {
            if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
        }
        return true;
    }

    static GradientBundle zeros_like(const NetworkParams& params) {
        return GradientBundle{params.zeros_like().layers};
    }
};

struct LossReport {
    double risk = 0.0;
    DenseVector per_example;  // d^2(Y_j, prediction_j)
    double ridge = 0.0;       // ridge applied to the batch covariance
};

namespace detail {

struct HeadForward {
    DenseMatrix centered;   // C, n x p
    RidgeSolver solver;     // factorization of C^T C / n + ridge I
    DenseMatrix raw;        // R, n x D
    DenseMatrix projected;  // P(R_j) per row
    LossReport report;
};

inline HeadForward head_forward(const DenseMatrix& reps, const DenseMatrix& targets,
                                const MetricSpace& space, const RidgePolicy& policy) {
    const auto n = reps.rows();
    HeadForward hf;
    const DenseVector mean = reps.colwise().mean().transpose();
    hf.centered = reps.rowwise() - mean.transpose();
    const DenseMatrix cov = (hf.centered.transpose() * hf.centered) / static_cast<double>(n);
    hf.solver = factorize_covariance(cov, policy);
    const DenseMatrix ct_e = hf.centered.transpose() * targets;  // p x D
    const DenseMatrix k_ct_e = hf.solver.solve(ct_e);
    const DenseVector ebar = targets.colwise().mean().transpose();
    hf.raw = (hf.centered * k_ct_e) / static_cast<double>(n);
    hf.raw.rowwise() += ebar.transpose();
    hf.projected.resize(n, targets.cols());
    hf.report.per_example.resize(n);
    const double scale = space.squared_distance_scale();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!hf.raw.row(j).allFinite()) {
            throw NumericError("loss_and_grad: non-finite prediction for example " + std::to_string(j), j);
        }
        hf.projected.row(j) = space.project_embedded(hf.raw.row(j).transpose()).transpose();
        hf.report.per_example(j) = scale * (hf.projected.row(j) - targets.row(j)).squaredNorm();
    }
    hf.report.risk = hf.report.per_example.mean();
    hf.report.ridge = hf.solver.ridge();
    if (!std::isfinite(hf.report.risk)) throw NumericError("loss_and_grad: non-finite risk");
    return hf;
}

/// dRisk/dReps given the forward state.
inline DenseMatrix head_backward(const HeadForward& hf, const DenseMatrix& targets,
                                 const MetricSpace& space, const GradientOptions& opts) {
    const auto n = hf.raw.rows();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double scale = space.squared_distance_scale();
    DenseMatrix g_raw(n, targets.cols());
    for (Eigen::Index j = 0; j < n; ++j) {
        const DenseVector upstream =
            (2.0 * scale * inv_n) * (hf.projected.row(j) - targets.row(j)).transpose();
        g_raw.row(j) =
            space.project_adjoint(hf.raw.row(j).transpose(), upstream, opts.projection).transpose();
    }
    const DenseMatrix& c = hf.centered;
    // Gs C = (1/n) [G (E^T C) + E (G^T C)]
    const DenseMatrix gs_c = inv_n * (g_raw * (targets.transpose() * c) + targets * (g_raw.transpose() * c));
    // Z = Gs C K, via the symmetric solve K (Gs C)^T
    const DenseMatrix z = hf.solver.solve(gs_c.transpose()).transpose();
    if (opts.stats == StatsMode::detached) return z;
    const DenseMatrix k_ct_z = hf.solver.solve(c.transpose() * z);
    DenseMatrix d_c = z - inv_n * (c * k_ct_z);
    const DenseVector col_mean = d_c.colwise().mean().transpose();
    d_c.rowwise() -= col_mean.transpose();
    return d_c;
}

/// Backpropagates dRisk/d(g_L) through the cached forward pass.
inline GradientBundle network_backward(const NetworkParams& params, const ForwardCache& cache,
                                       DenseMatrix d_out) {
    GradientBundle grads;
    grads.layers.resize(params.layers.size());
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        if (cache.masks[l].size() != 0) d_out.array() *= cache.masks[l].array();
        // ReLU subgradient 0 at 0
        d_out = (cache.pre[l].array() > 0.0).select(d_out, 0.0);
        const DenseMatrix& input = l == 0 ? cache.input : cache.post[l - 1];
        grads.layers[l].weight = d_out.transpose() * input;
        grads.layers[l].bias = d_out.colwise().sum().transpose();
        if (l > 0) d_out = d_out * params.layers[l].weight;
    }
    return grads;
}

}  // namespace detail

/// Batch risk and its exact gradient with respect to every W_l and beta_l.
/// `targets` holds the embedded responses, one row per example. Dropout
/// masks are drawn once from `rng` in train mode and reused in the backward
/// pass.
inline std::pair<LossReport, GradientBundle> loss_and_grad(
    const DenseMatrix& x, const DenseMatrix& targets, const NetworkParams& params,
    const Architecture& arch, const MetricSpace& space, ForwardMode mode, Rng& rng,
    const GradientOptions& opts = {}) {
    if (x.rows() < 2) throw SampleSizeError("loss_and_grad: batch size must be at least 2");
    if (targets.rows() != x.rows() || targets.cols() != space.embedding_dim()) {
        throw DimensionError("loss_and_grad: targets do not match batch or space");
    }
    auto fwd = forward(params, arch, x, mode, rng);
    const auto hf = detail::head_forward(fwd.output, targets, space, opts.ridge);
    DenseMatrix d_reps = detail::head_backward(hf, targets, space, opts);
    auto grads = detail::network_backward(params, fwd.cache, std::move(d_reps));
    return {hf.report, std::move(grads)};
}

inline std::pair<LossReport, GradientBundle> loss_and_grad(
    const DenseMatrix& x, std::span<const Point> responses, const NetworkParams& params,
    const Architecture& arch, const MetricSpace& space, ForwardMode mode, Rng& rng,
    const GradientOptions& opts = {}) {
    return loss_and_grad(x, space.embed_all(responses), params, arch, space, mode, rng, opts);
}

/// Risk only; same forward path as loss_and_grad.
inline LossReport batch_risk(const DenseMatrix& x, const DenseMatrix& targets, const NetworkParams& params,
                             const Architecture& arch, const MetricSpace& space, ForwardMode mode, Rng& rng,
                             const RidgePolicy& ridge = RidgePolicy::adaptive()) {
    if (x.rows() < 2) throw SampleSizeError("batch_risk: batch size must be at least 2");
    auto fwd = forward(params, arch, x, mode, rng);
    return detail::head_forward(fwd.output, targets, space, ridge).report;
}

/// ReLU on/off pattern of every pre-activation followed by the projection
/// pattern of every prediction. Two parameter vectors with equal patterns
/// lie in the same locally smooth piece of the risk.
inline std::vector<std::int64_t> smoothness_pattern(const DenseMatrix& x, const DenseMatrix& targets,
                                                    const NetworkParams& params, const Architecture& arch,
                                                    const MetricSpace& space, ForwardMode mode, Rng& rng,
                                                    const RidgePolicy& ridge) {
    auto fwd = forward(params, arch, x, mode, rng);
    std::vector<std::int64_t> out;
    for (const auto& z : fwd.cache.pre) {
        for (Eigen::Index i = 0; i < z.size(); ++i) out.push_back(z.data()[i] > 0.0 ? 1 : 0);
    }
    const auto hf = detail::head_forward(fwd.output, targets, space, ridge);
    for (Eigen::Index j = 0; j < hf.raw.rows(); ++j) {
        auto p = space.projection_pattern(hf.raw.row(j).transpose());
        out.push_back(-1);
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

struct GradientCheckReport {
    double max_relative_error = 0.0;
    int trials = 0;
    Eigen::Index coordinates_checked = 0;
    Eigen::Index coordinates_excluded = 0;
};

namespace detail {

inline Point random_point(const MetricSpace& space, Rng& rng, const DenseVector& shift) {
    const auto d = space.dimension();
    switch (space.kind()) {
        case SpaceKind::euclidean: {
            DenseVector v(d);
            for (Eigen::Index j = 0; j < d; ++j) v(j) = shift(j % shift.size()) + rng.standard_normal();
            return EuclideanPoint(v);
        }
        case SpaceKind::wasserstein: {
            DenseVector v(d);
            double acc = shift(0) + rng.standard_normal();
            for (Eigen::Index j = 0; j < d; ++j) {
                v(j) = acc;
                acc += std::abs(shift(1 % shift.size())) * 0.5 + rng.uniform();
            }
            return QuantileFunction(v);
        }
        case SpaceKind::aitchison: {
            DenseVector v(d);
            for (Eigen::Index j = 0; j < d; ++j) v(j) = std::exp(shift(j % shift.size()) + rng.standard_normal());
            return Composition(v / v.sum());
        }
        case SpaceKind::laplacian: {
            DenseMatrix w = DenseMatrix::Zero(d, d);
            for (Eigen::Index k = 0; k < d; ++k)
                for (Eigen::Index l = k + 1; l < d; ++l)
                    w(k, l) = w(l, k) = std::abs(shift((k + l) % shift.size())) + rng.uniform();
            DenseMatrix lap = -w;
            for (Eigen::Index k = 0; k < d; ++k) lap(k, k) = w.row(k).sum();
            return GraphLaplacian(lap);
        }
    }
    throw ContractError("random_point: unknown space");
}

}  // namespace detail

/// Randomized comparison of loss_and_grad against central differences on
/// small instances (batch 8-16, widths <= 8, depth 1-3, dropout on or off).
/// Parameters whose +-h probes change the ReLU or projection pattern are
/// excluded; the reported error is max_j |g_j - fd_j| / max_j |fd_j| over the
/// remaining coordinates, maximized over trials. The exact projection
/// adjoint is used so that active PAVA pools and clipped Laplacian entries
/// are differentiated rather than approximated.
inline GradientCheckReport check_gradients(const MetricSpace& space, int trials, Rng& rng,
                                           double h = 1e-5) {
    if (trials < 1) throw ParameterError("check_gradients: trials must be at least 1");
    GradientCheckReport report;
    while (report.trials < trials) {
        const auto n = static_cast<Eigen::Index>(8 + rng.next_u64() % 9);
        const auto p = static_cast<Eigen::Index>(2 + rng.next_u64() % 3);
        const auto depth = static_cast<Eigen::Index>(1 + rng.next_u64() % 3);
        Architecture arch;
        arch.input_dim = p;
        arch.hidden_widths.clear();
        for (Eigen::Index l = 0; l + 1 < depth; ++l) {
            arch.hidden_widths.push_back(static_cast<Eigen::Index>(3 + rng.next_u64() % 6));
        }
        arch.hidden_widths.push_back(static_cast<Eigen::Index>(2 + rng.next_u64() % 3));
        arch.dropout_rate = rng.uniform() < 0.5 ? 0.0 : 0.25;

        NetworkParams params;
        Eigen::Index in = p;
        for (auto out : arch.hidden_widths) {
            LayerParams layer{DenseMatrix(out, in), DenseVector(out)};
            for (Eigen::Index i = 0; i < layer.weight.size(); ++i) {
                layer.weight.data()[i] = rng.standard_normal() / std::sqrt(static_cast<double>(in));
            }
            for (Eigen::Index i = 0; i < out; ++i) layer.bias(i) = 0.5 * rng.uniform();
            params.layers.push_back(std::move(layer));
            in = out;
        }

        DenseMatrix x(n, p);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.standard_normal();
        std::vector<Point> ys;
        for (Eigen::Index i = 0; i < n; ++i) {
            DenseVector shift(3);
            shift << x(i, 0), x(i, 1 % p), 0.5 * x(i, 0) * x(i, 1 % p);
            ys.push_back(detail::random_point(space, rng, shift));
        }
        const DenseMatrix targets = space.embed_all(ys);
        const ForwardMode mode = ForwardMode::train;
        const std::uint64_t mask_seed = rng.next_u64();

        GradientOptions opts;
        opts.projection = ProjectionAdjoint::exact;
        std::pair<LossReport, GradientBundle> base;
        {
            Rng masks(mask_seed);
            try {
                base = loss_and_grad(x, targets, params, arch, space, mode, masks, opts);
            } catch (const SingularError&) {
                continue;  // degenerate draw (all units dead); resample
            }
        }
        opts.ridge = RidgePolicy::fixed(base.first.ridge);
        const DenseVector theta = params.flatten();
        const DenseVector analytic = base.second.flatten();
        NetworkParams probe = params;
        auto eval = [&](const DenseVector& t) {
            probe.assign_flat(t);
            Rng masks(mask_seed);
            return batch_risk(x, targets, probe, arch, space, mode, masks, opts.ridge).risk;
        };
        auto pattern = [&](const DenseVector& t) {
            probe.assign_flat(t);
            Rng masks(mask_seed);
            return smoothness_pattern(x, targets, probe, arch, space, mode, masks, opts.ridge);
        };
        const auto base_pattern = pattern(theta);
        double max_diff = 0.0;
        double max_fd = 0.0;
        Eigen::Index checked = 0, excluded = 0;
        DenseVector t = theta;
        for (Eigen::Index j = 0; j < theta.size(); ++j) {
            t(j) = theta(j) + h;
            const double up = eval(t);
            const bool up_same = pattern(t) == base_pattern;
            t(j) = theta(j) - h;
            const double down = eval(t);
            const bool down_same = pattern(t) == base_pattern;
            t(j) = theta(j);
            if (!up_same || !down_same) {
                ++excluded;
                continue;
            }
            const double fd = (up - down) / (2.0 * h);
            max_diff = std::max(max_diff, std::abs(fd - analytic(j)));
            max_fd = std::max(max_fd, std::abs(fd));
            ++checked;
        }
        // flat risk (every unit dead): differences are pure roundoff, nothing to check
        const double fd_noise = 100.0 * std::numeric_limits<double>::epsilon() * (1.0 + base.first.risk) / h;
        if (max_fd < fd_noise) continue;
        report.coordinates_checked += checked;
        report.coordinates_excluded += excluded;
        const double rel = max_diff / max_fd;
        report.max_relative_error = std::max(report.max_relative_error, rel);
        ++report.trials;
    }
    return report;
}

}  // namespace frechetnet

#endif
