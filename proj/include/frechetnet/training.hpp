#ifndef FRECHETNET_TRAINING_HPP
#define FRECHETNET_TRAINING_HPP

// Optimization loop: momentum SGD on the empirical Frechet risk, a random
// 4:1 train/validation split, early stopping with best-weight restoration,
// hyperparameter grid search and checkpoint files.

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "frechetnet/dataset.hpp"
#include "frechetnet/errors.hpp"
#include "frechetnet/frechet_head.hpp"
#include "frechetnet/gradients.hpp"
#include "frechetnet/metric_spaces.hpp"
#include "frechetnet/network.hpp"
#include "frechetnet/numerics.hpp"

namespace frechetnet {

enum class BatchMode { full, minibatch };

struct TrainConfig {
    Architecture arch;
    double learning_rate = 1e-3;
    double momentum = 0.9;
    BatchMode batch_mode = BatchMode::full;
    Eigen::Index batch_size = 0;  // minibatch mode only
    int max_epochs = 5000;
    int burn_in = 50;
    double tolerance = 1e-5;
    int patience = 150;
    std::uint64_t seed = 0;
    RidgePolicy ridge = RidgePolicy::adaptive();
    ProjectionAdjoint projection = ProjectionAdjoint::straight_through;
    StatsMode stats = StatsMode::differentiate;

    void validate() const {
        arch.validate();
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
            throw ParameterError("learning rate must be positive");
        }
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
        if (batch_mode == BatchMode::minibatch && batch_size < 2) {
            throw ParameterError("minibatch size must be at least 2");
        }
        if (max_epochs < 1) throw ParameterError("max_epochs must be at least 1");
        if (burn_in < 0) throw ParameterError("burn-in must be nonnegative");
        if (!(tolerance >= 0.0)) throw ParameterError("tolerance must be nonnegative");
        if (patience < 1) throw ParameterError("patience must be at least 1");
    }

    bool operator==(const TrainConfig&) const = default;
};

enum class StopReason { early, max_epochs };

/// Per-epoch record. Validation MSPE is NaN for burn-in epochs, which are
/// not evaluated. Epochs are numbered from 1; validation starts at epoch
/// burn_in (or 1 when burn_in is 0).
struct TrainHistory {
    std::vector<double> train_risk;
    std::vector<double> val_mspe;
    int best_epoch = 0;
    double best_val_mspe = std::numeric_limits<double>::quiet_NaN();
    StopReason stop_reason = StopReason::max_epochs;

    int epochs() const noexcept { return static_cast<int>(train_risk.size()); }
};

/// Affine standardization applied to predictors before the network.
struct InputScaler {
    DenseVector center;
    DenseVector scale;

    static InputScaler identity(Eigen::Index p) {
        return {DenseVector::Zero(p), DenseVector::Ones(p)};
    }

    /// z-scores from the columns of `x` (1/n variance); constant columns keep scale 1.
    static InputScaler fit(const DenseMatrix& x) {
        InputScaler s{x.colwise().mean().transpose(), DenseVector(x.cols())};
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double var = (x.col(j).array() - s.center(j)).square().mean();
            s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
        }
        return s;
    }

    DenseMatrix apply(const DenseMatrix& x) const {
        if (x.cols() != center.size()) {
            throw DimensionError("expected " + std::to_string(center.size()) + " predictors, got " +
                                 std::to_string(x.cols()));
        }
        return (x.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
    }

    bool operator==(const InputScaler& o) const {
        return center.size() == o.center.size() && center == o.center && scale == o.scale;
    }
};

struct Checkpoint {
    TrainConfig config;
    NetworkParams params;
    InputScaler scaler;
    FittedHead head;

    const MetricSpace& space() const noexcept { return head.space(); }
    const Architecture& arch() const noexcept { return config.arch; }

    /// Predictions for raw (unscaled) predictor rows.
    std::vector<Point> predict(const DenseMatrix& x) const {
        return head.predict_features(represent(params, config.arch, scaler.apply(x)));
    }
};

struct TrainResult {
    Checkpoint checkpoint;
    TrainHistory history;
};

struct Split {
    std::vector<Eigen::Index> train;
    std::vector<Eigen::Index> val;
};

/// Uniformly random partition with floor(4n/5) training rows; each part
/// keeps the original row order.
inline Split split_train_val(Eigen::Index n, Rng& rng) {
    if (n < 5) throw SampleSizeError("split_train_val: at least 5 examples required");
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    for (std::size_t i = idx.size() - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(idx[i], idx[j]);
    }
    const auto n_train = static_cast<std::size_t>((4 * n) / 5);
    Split s;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    return s;
}

/// Classical momentum: v <- momentum v + g; theta <- theta - lr v.
inline void sgd_step(NetworkParams& params, GradientBundle& velocity, const GradientBundle& grads,
                     double learning_rate, double momentum) {
    if (params.layers.size() != grads.layers.size() || velocity.layers.size() != grads.layers.size()) {
        throw DimensionError("sgd_step: layer count mismatch");
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        auto& p = params.layers[l];
        auto& v = velocity.layers[l];
        const auto& g = grads.layers[l];
        if (p.weight.rows() != g.weight.rows() || p.weight.cols() != g.weight.cols() ||
            v.weight.rows() != g.weight.rows() || v.weight.cols() != g.weight.cols() ||
            p.bias.size() != g.bias.size() || v.bias.size() != g.bias.size()) {
            throw DimensionError("sgd_step: shape mismatch");
        }
        v.weight = momentum * v.weight + g.weight;
        v.bias = momentum * v.bias + g.bias;
        p.weight -= learning_rate * v.weight;
        p.bias -= learning_rate * v.bias;
    }
}

namespace detail {

inline double validation_mspe(const NetworkParams& params, const Architecture& arch, const Dataset& train,
                              const Dataset& val, const RidgePolicy& ridge) {
    FittedHead head(train.space, represent(params, arch, train.x), train.responses, ridge);
    const auto preds = head.predict_features(represent(params, arch, val.x));
    return mspe(preds, val.responses, train.space);
}

}  // namespace detail

/// Trains on a 4:1 split of `data`. After the burn-in, the validation MSPE is
/// evaluated every epoch; training stops once it has failed to improve on
/// the previous epoch by at least `tolerance` for `patience` consecutive
/// epochs. The parameters with the lowest validation MSPE are restored and
/// the returned head is fitted on the whole training part.
inline TrainResult train(const Dataset& data, const TrainConfig& config) {
    config.validate();
    data.validate();
    if (data.predictors() != config.arch.input_dim) {
        throw DimensionError("train: dataset has " + std::to_string(data.predictors()) +
                             " predictors, architecture expects " + std::to_string(config.arch.input_dim));
    }
    const auto min_n = std::max<Eigen::Index>(5, config.arch.output_dim() + 2);
    if (data.size() < min_n) {
        throw SampleSizeError("train: at least " + std::to_string(min_n) + " examples required");
    }

    Rng split_rng(derive_seed(config.seed, 1));
    Rng init_rng(derive_seed(config.seed, 2));
    Rng dropout_rng(derive_seed(config.seed, 3));
    Rng batch_rng(derive_seed(config.seed, 4));

    const auto split = split_train_val(data.size(), split_rng);
    const Dataset train_set = data.subset(split.train);
    const Dataset val_set = data.subset(split.val);
    const MetricSpace& space = data.space;
    const DenseMatrix targets = space.embed_all(train_set.responses);

    GradientOptions opts;
    opts.projection = config.projection;
    opts.stats = config.stats;
    opts.ridge = config.ridge;

    NetworkParams params = init_params(config.arch, init_rng);
    GradientBundle velocity = GradientBundle::zeros_like(params);
    NetworkParams best = params;
    TrainHistory history;
    double best_val = std::numeric_limits<double>::infinity();
    std::optional<double> previous_val;
    int failures = 0;
    const auto n_train = train_set.size();
    const int first_validated = std::max(config.burn_in, 1);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        double epoch_risk = 0.0;
        try {
            if (config.batch_mode == BatchMode::full) {
                auto [report, grads] = loss_and_grad(train_set.x, targets, params, config.arch, space,
                                                     ForwardMode::train, dropout_rng, opts);
                epoch_risk = report.risk;
                sgd_step(params, velocity, grads, config.learning_rate, config.momentum);
            } else {
                std::vector<Eigen::Index> order(static_cast<std::size_t>(n_train));
                std::iota(order.begin(), order.end(), Eigen::Index{0});
                for (std::size_t i = order.size() - 1; i > 0; --i) {
                    std::swap(order[i], order[static_cast<std::size_t>(batch_rng.next_u64() % (i + 1))]);
                }
                const auto b = std::min(config.batch_size, n_train);
                double weighted = 0.0;
                Eigen::Index start = 0;
                while (start < n_train) {
                    auto end = std::min(start + b, n_train);
                    if (n_train - end < 2) end = n_train;  // fold a tiny remainder into this batch
                    DenseMatrix bx(end - start, train_set.predictors());
                    DenseMatrix by(end - start, targets.cols());
                    for (auto i = start; i < end; ++i) {
                        bx.row(i - start) = train_set.x.row(order[static_cast<std::size_t>(i)]);
                        by.row(i - start) = targets.row(order[static_cast<std::size_t>(i)]);
                    }
                    auto [report, grads] = loss_and_grad(bx, by, params, config.arch, space,
                                                         ForwardMode::train, dropout_rng, opts);
                    weighted += report.risk * static_cast<double>(end - start);
                    sgd_step(params, velocity, grads, config.learning_rate, config.momentum);
                    start = end;
                }
                epoch_risk = weighted / static_cast<double>(n_train);
            }
        } catch (const NumericError& e) {
            throw TrainingError(std::string("training diverged: ") + e.what(), epoch - 1);
        } catch (const SingularError& e) {
            throw TrainingError(std::string("training diverged: ") + e.what(), epoch - 1);
        }
        if (!std::isfinite(epoch_risk) || !params.all_finite()) {
            throw TrainingError("training diverged at epoch " + std::to_string(epoch), epoch - 1);
        }
        history.train_risk.push_back(epoch_risk);

        if (epoch < first_validated) {
            history.val_mspe.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        double val = 0.0;
        try {
            val = detail::validation_mspe(params, config.arch, train_set, val_set, config.ridge);
        } catch (const Error& e) {
            throw TrainingError(std::string("validation failed: ") + e.what(), epoch - 1);
        }
        if (!std::isfinite(val)) throw TrainingError("non-finite validation MSPE", epoch - 1);
        history.val_mspe.push_back(val);
        if (val < best_val) {
            best_val = val;
            best = params;
            history.best_epoch = epoch;
        }
        if (previous_val) {
            failures = (*previous_val - val >= config.tolerance) ? 0 : failures + 1;
        }
        previous_val = val;
        if (failures >= config.patience) {
            history.stop_reason = StopReason::early;
            break;
        }
    }
    if (history.best_epoch == 0) {
        // never validated: keep the last parameters
        best = params;
        history.best_epoch = history.epochs();
        best_val = detail::validation_mspe(best, config.arch, train_set, val_set, config.ridge);
    }
    history.best_val_mspe = best_val;

    FittedHead head(space, represent(best, config.arch, train_set.x), train_set.responses, config.ridge);
    Checkpoint ckpt{config, std::move(best), InputScaler::identity(data.predictors()), std::move(head)};
    return {std::move(ckpt), std::move(history)};
}

/// train() on z-scored predictors; the scaler is stored in the checkpoint
/// so predict() accepts raw inputs.
inline TrainResult train_standardized(const Dataset& data, const TrainConfig& config) {
    const auto scaler = InputScaler::fit(data.x);
    Dataset scaled{data.space, scaler.apply(data.x), data.responses};
    auto result = train(scaled, config);
    result.checkpoint.scaler = scaler;
    return result;
}

// ---------------------------------------------------------------------------
// Grid search

struct HyperGrid {
    std::vector<Eigen::Index> depths;
    std::vector<Eigen::Index> widths;       // first depth-1 layers
    std::vector<Eigen::Index> last_widths;
    std::vector<double> learning_rates;
    std::vector<double> dropout_rates;

    std::size_t size() const {
        return depths.size() * widths.size() * last_widths.size() * learning_rates.size() *
               dropout_rates.size();
    }
};

struct GridPoint {
    Eigen::Index depth = 1;
    Eigen::Index width = 1;
    Eigen::Index last_width = 1;
    double learning_rate = 1e-3;
    double dropout = 0.0;

    auto key() const { return std::tuple(depth, width, last_width, learning_rate, dropout); }
    bool operator==(const GridPoint&) const = default;
};

struct GridScore {
    GridPoint point;
    double val_mspe = std::numeric_limits<double>::quiet_NaN();
    std::string error;  // empty on success
};

struct GridSearchResult {
    TrainConfig best;
    GridPoint best_point;
    std::vector<GridScore> table;
};

inline TrainConfig apply_grid_point(TrainConfig config, const GridPoint& g) {
    config.arch = Architecture::uniform(config.arch.input_dim, g.depth, g.width, g.last_width, g.dropout);
    config.learning_rate = g.learning_rate;
    return config;
}

/// Trains one model per grid point (all with `base.seed`) and selects the
/// lowest best-epoch validation MSPE. Ties go to the smaller depth, width,
/// last width, learning rate, dropout, in that order. Failed points are
/// recorded with their error and never selected.
inline GridSearchResult grid_search(const Dataset& data, const TrainConfig& base, const HyperGrid& grid,
                                    int jobs = 1) {
    if (grid.size() == 0) throw ParameterError("grid_search: every grid must be nonempty");
    std::vector<GridScore> table;
    for (auto d : grid.depths)
        for (auto w : grid.widths)
            for (auto lw : grid.last_widths)
                for (auto lr : grid.learning_rates)
                    for (auto dr : grid.dropout_rates) table.push_back({{d, w, lw, lr, dr}, {}, {}});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < table.size(); i = next++) {
            try {
                auto cfg = apply_grid_point(base, table[i].point);
                table[i].val_mspe = train(data, cfg).history.best_val_mspe;
            } catch (const Error& e) {
                table[i].error = e.what();
            }
        }
    };
    const auto threads = static_cast<std::size_t>(std::clamp(jobs, 1, 256));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < std::min(threads, table.size()); ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (!table[i].error.empty() || !std::isfinite(table[i].val_mspe)) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& a = table[i];
        const auto& b = table[*best];
        if (a.val_mspe < b.val_mspe || (a.val_mspe == b.val_mspe && a.point.key() < b.point.key())) best = i;
    }
    if (!best) throw TrainingError("grid_search: every grid point failed", 0);
    return {apply_grid_point(base, table[*best].point), table[*best].point, std::move(table)};
}

// ---------------------------------------------------------------------------
// Checkpoint files (layout documented in docs/formats.md)

inline constexpr char kCheckpointMagic[8] = {'F', 'R', 'N', 'E', 'T', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void i64(std::int64_t v) { put(static_cast<std::uint64_t>(v), 8); }
    void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
    void bytes(const char* p, std::size_t n) { buf_.append(p, n); }
    void vec(const DenseVector& v) {
        u64(static_cast<std::uint64_t>(v.size()));
        for (Eigen::Index i = 0; i < v.size(); ++i) f64(v(i));
    }
    /// rows, cols, then entries row by row
    void mat(const DenseMatrix& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
    }
    const std::string& str() const noexcept { return buf_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    std::int64_t i64() { return static_cast<std::int64_t>(get(8)); }
    double f64() { return std::bit_cast<double>(get(8)); }
    std::string_view bytes(std::size_t n) {
        need(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    Eigen::Index count(std::uint64_t limit = 1u << 30) {
        const auto v = u64();
        if (v > limit) throw FormatError("checkpoint: implausible size field");
        return static_cast<Eigen::Index>(v);
    }
    DenseVector vec() {
        const auto n = count();
        need(static_cast<std::size_t>(n) * 8);
        DenseVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = f64();
        return v;
    }
    DenseMatrix mat() {
        const auto r = count();
        const auto c = count();
        need(static_cast<std::size_t>(r) * static_cast<std::size_t>(c) * 8);
        DenseMatrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = f64();
        return m;
    }
    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) throw FormatError("checkpoint: truncated file");
    }
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]))
                 << (8 * i);
        }
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::string_view data_;
    std::size_t pos_ = 0;
};

inline std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
    detail::ByteWriter w;
    w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u32(kCheckpointVersion);
    const auto& space = ckpt.space();
    w.u32(static_cast<std::uint32_t>(space.kind()));
    w.u64(static_cast<std::uint64_t>(space.dimension()));
    const auto& arch = ckpt.config.arch;
    w.u64(static_cast<std::uint64_t>(arch.input_dim));
    w.u64(static_cast<std::uint64_t>(arch.depth()));
    for (auto width : arch.hidden_widths) w.u64(static_cast<std::uint64_t>(width));
    w.f64(arch.dropout_rate);
    const auto& c = ckpt.config;
    w.f64(c.learning_rate);
    w.f64(c.momentum);
    w.u32(static_cast<std::uint32_t>(c.batch_mode));
    w.u64(static_cast<std::uint64_t>(c.batch_size));
    w.i64(c.max_epochs);
    w.i64(c.burn_in);
    w.f64(c.tolerance);
    w.i64(c.patience);
    w.u64(c.seed);
    w.u32(static_cast<std::uint32_t>(c.ridge.mode));
    w.f64(c.ridge.value);
    w.u32(static_cast<std::uint32_t>(c.projection));
    w.u32(static_cast<std::uint32_t>(c.stats));
    w.vec(ckpt.scaler.center);
    w.vec(ckpt.scaler.scale);
    for (const auto& layer : ckpt.params.layers) {
        w.mat(layer.weight);
        w.vec(layer.bias);
    }
    const auto& head = ckpt.head;
    w.mat(head.representations());
    DenseMatrix values(head.size(), space.embedding_dim());
    for (Eigen::Index i = 0; i < head.size(); ++i) {
        values.row(i) = space.values(head.responses()[static_cast<std::size_t>(i)]).transpose();
    }
    w.mat(values);
    w.vec(head.stats().mean);
    w.mat(head.stats().cov);
    w.f64(head.stats().ridge);
    const auto checksum = detail::fnv1a(w.str());
    w.u64(checksum);
    return w.str();
}

inline Checkpoint parse_checkpoint(std::string_view bytes) {
    detail::ByteReader r(bytes);
    if (bytes.size() < sizeof kCheckpointMagic ||
        std::memcmp(bytes.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0) {
        throw FormatError("checkpoint: bad magic");
    }
    r.bytes(sizeof kCheckpointMagic);
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionError("checkpoint: unsupported version " + std::to_string(version));
    }
    if (bytes.size() < 8 + 12 + 8) throw FormatError("checkpoint: truncated file");
    const auto body = bytes.substr(0, bytes.size() - 8);
    detail::ByteReader tail(bytes.substr(bytes.size() - 8));
    if (detail::fnv1a(body) != tail.u64()) throw FormatError("checkpoint: checksum mismatch (truncated or corrupt)");

    const auto kind_raw = r.u32();
    if (kind_raw > 3) throw FormatError("checkpoint: unknown space kind");
    MetricSpace space(static_cast<SpaceKind>(kind_raw), r.count());
    TrainConfig c;
    c.arch.input_dim = r.count();
    const auto depth = r.count(1024);
    c.arch.hidden_widths.clear();
    for (Eigen::Index l = 0; l < depth; ++l) c.arch.hidden_widths.push_back(r.count());
    c.arch.dropout_rate = r.f64();
    c.learning_rate = r.f64();
    c.momentum = r.f64();
    c.batch_mode = static_cast<BatchMode>(r.u32());
    c.batch_size = r.count();
    c.max_epochs = static_cast<int>(r.i64());
    c.burn_in = static_cast<int>(r.i64());
    c.tolerance = r.f64();
    c.patience = static_cast<int>(r.i64());
    c.seed = r.u64();
    c.ridge.mode = static_cast<RidgePolicy::Mode>(r.u32());
    c.ridge.value = r.f64();
    c.projection = static_cast<ProjectionAdjoint>(r.u32());
    c.stats = static_cast<StatsMode>(r.u32());
    InputScaler scaler;
    scaler.center = r.vec();
    scaler.scale = r.vec();
    NetworkParams params;
    for (Eigen::Index l = 0; l < depth; ++l) {
        LayerParams layer;
        layer.weight = r.mat();
        layer.bias = r.vec();
        params.layers.push_back(std::move(layer));
    }
    DenseMatrix reps = r.mat();
    DenseMatrix values = r.mat();
    DenseVector mean = r.vec();
    DenseMatrix cov = r.mat();
    const double ridge = r.f64();
    if (r.remaining() != 8) throw FormatError("checkpoint: trailing bytes");
    try {
        c.validate();
        params.check_shape(c.arch);
        if (scaler.center.size() != c.arch.input_dim || scaler.scale.size() != c.arch.input_dim) {
            throw FormatError("checkpoint: scaler dimension mismatch");
        }
        std::vector<Point> responses;
        for (Eigen::Index i = 0; i < values.rows(); ++i) responses.push_back(space.from_values(values.row(i).transpose()));
        FittedHead head(space, std::move(reps), std::move(responses), std::move(mean), std::move(cov), ridge);
        return Checkpoint{c, std::move(params), std::move(scaler), std::move(head)};
    } catch (const FormatError&) {
        throw;
    } catch (const Error& e) {
        throw FormatError(std::string("checkpoint: inconsistent content: ") + e.what());
    }
}

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    csv::write_file(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(csv::read_file(path)); }

}  // namespace frechetnet

#endif
