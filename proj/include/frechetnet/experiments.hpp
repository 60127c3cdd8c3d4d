#ifndef FRECHETNET_EXPERIMENTS_HPP
#define FRECHETNET_EXPERIMENTS_HPP

// Simulation designs, the compositional-data loader, and the Monte Carlo and
// cross-validation drivers that compare DFNN against global Frechet
// regression (GFR) and an intercept-only Frechet mean.

#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "frechetnet/dataset.hpp"
#include "frechetnet/errors.hpp"
#include "frechetnet/frechet_head.hpp"
#include "frechetnet/metric_spaces.hpp"
#include "frechetnet/numerics.hpp"
#include "frechetnet/training.hpp"

namespace frechetnet {

inline constexpr Eigen::Index kSimPredictors = 10;
inline constexpr Eigen::Index kQuantileGrid = 100;

// ---------------------------------------------------------------------------
// Experiment 1: distributional responses

inline double expit(double t) { return 1.0 / (1.0 + std::exp(-t)); }

/// Conditional mean of eta given x (x has 10 entries, 0-based here).
inline double exp1_mu(const DenseVector& x) {
    const double pi = std::numbers::pi;
    return x(0) * std::cos(pi * x(1)) - 0.5 * x(2) * x(2) + 4.0 * std::log(1.0 + x(3) * x(3)) -
           4.0 / (1.0 + std::abs(x(4)));
}

inline double exp1_theta(const DenseVector& x) {
    const double pi = std::numbers::pi;
    return 0.5 + 3.5 * expit(2.0 * x(5) * x(9) + 2.0 * x(8) * x(8) * std::sin(pi * x(7)) + 4.0 / (1.0 + x(6)));
}

/// Draws one Experiment 1 predictor vector.
inline DenseVector exp1_predictors(Rng& rng) {
    static const DenseMatrix sigma = [] {
        DenseMatrix s = DenseMatrix::Constant(4, 4, 0.1);
        s.diagonal().setOnes();
        return s;
    }();
    DenseVector x(kSimPredictors);
    x.head(4) = sample_mvnormal(rng, DenseVector::Zero(4), sigma);
    for (Eigen::Index j = 4; j < 9; ++j) x(j) = sample_normal(rng, 1.0, 1.0);
    x(9) = sample_bernoulli(rng, 0.3);
    return x;
}

/// Response given x: the empirical quantile function (sorted sample) of 100
/// draws from N(eta, sigma^2).
inline QuantileFunction exp1_response(const DenseVector& x, Rng& rng) {
    const double theta = exp1_theta(x);
    const double eta = sample_normal(rng, exp1_mu(x), 0.5);
    const double sigma = sample_gamma(rng, theta * theta, 1.0 / theta);
    std::vector<double> z(static_cast<std::size_t>(kQuantileGrid));
    for (auto& v : z) v = sample_normal(rng, eta, sigma);
    std::sort(z.begin(), z.end());
    return QuantileFunction(Eigen::Map<DenseVector>(z.data(), kQuantileGrid));
}

inline Dataset gen_experiment1(Eigen::Index n, Rng& rng) {
    if (n < 1) throw ParameterError("gen_experiment1: n must be positive");
    Dataset data{MetricSpace::wasserstein(kQuantileGrid), DenseMatrix(n, kSimPredictors), {}};
    data.responses.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        const DenseVector x = exp1_predictors(rng);
        data.x.row(i) = x.transpose();
        data.responses.emplace_back(exp1_response(x, rng));
    }
    return data;
}

// ---------------------------------------------------------------------------
// Experiment 2: network-valued responses

/// Symmetric 0/1 edge indicator with zero diagonal.
class MaskMatrix {
public:
    explicit MaskMatrix(DenseMatrix a) : a_(std::move(a)) {
        const auto q = a_.rows();
        if (q == 0 || a_.cols() != q) throw ContractError("MaskMatrix: must be square");
        for (Eigen::Index k = 0; k < q; ++k) {
            if (a_(k, k) != 0.0) throw ContractError("MaskMatrix: diagonal must be zero");
            for (Eigen::Index l = 0; l < q; ++l) {
                if ((a_(k, l) != 0.0 && a_(k, l) != 1.0) || a_(k, l) != a_(l, k)) {
                    throw ContractError("MaskMatrix: entries must be symmetric 0/1");
                }
            }
        }
    }

    static MaskMatrix sample(Eigen::Index q, Rng& rng, double p = 0.3) {
        DenseMatrix a = DenseMatrix::Zero(q, q);
        for (Eigen::Index k = 0; k < q; ++k)
            for (Eigen::Index l = k + 1; l < q; ++l) a(k, l) = a(l, k) = sample_bernoulli(rng, p);
        return MaskMatrix(std::move(a));
    }

    bool edge(Eigen::Index k, Eigen::Index l) const { return a_(k, l) != 0.0; }
    Eigen::Index nodes() const noexcept { return a_.rows(); }
    const DenseMatrix& matrix() const noexcept { return a_; }

private:
    DenseMatrix a_;
};

/// Noise-free weight of edge (k, l), 0-based nodes, k < l.
inline double exp2_edge_weight(const DenseVector& x, Eigen::Index k, Eigen::Index l, Eigen::Index q) {
    const double s = std::sin(static_cast<double>(k + l + 2) * std::numbers::pi / (2.0 * static_cast<double>(q)));
    return s / (std::abs(x(k)) + 1.0) * (2.0 + x(l) * x(l));
}

/// L = D - W for one predictor vector. Noise is drawn per masked edge only;
/// negative weights are clipped to 0.
inline GraphLaplacian exp2_response(const DenseVector& x, const MaskMatrix& mask, double a, Rng& rng) {
    const auto q = mask.nodes();
    DenseMatrix w = DenseMatrix::Zero(q, q);
    for (Eigen::Index k = 0; k < q; ++k) {
        for (Eigen::Index l = k + 1; l < q; ++l) {
            if (!mask.edge(k, l)) continue;
            double v = exp2_edge_weight(x, k, l, q);
            if (a > 0.0) v += sample_uniform(rng, -a, a);
            w(k, l) = w(l, k) = std::max(v, 0.0);
        }
    }
    DenseMatrix lap = -w;
    lap.diagonal() = w.rowwise().sum();
    return GraphLaplacian(std::move(lap));
}

struct Experiment2Data {
    MaskMatrix mask;
    Dataset data;
};

inline Experiment2Data gen_experiment2(Eigen::Index n, Eigen::Index q, double a, Rng& rng) {
    if (n < 1) throw ParameterError("gen_experiment2: n must be positive");
    if (q < 2 || q > kSimPredictors) throw ParameterError("gen_experiment2: nodes must lie in [2, 10]");
    if (!(a >= 0.0) || !std::isfinite(a)) throw ParameterError("gen_experiment2: noise must be nonnegative");
    auto mask = MaskMatrix::sample(q, rng);
    Dataset data{MetricSpace::laplacian(q), DenseMatrix(n, kSimPredictors), {}};
    data.responses.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        DenseVector x(kSimPredictors);
        for (Eigen::Index j = 0; j < kSimPredictors; ++j) x(j) = rng.uniform();
        data.x.row(i) = x.transpose();
        data.responses.emplace_back(exp2_response(x, mask, a, rng));
    }
    return {std::move(mask), std::move(data)};
}

// ---------------------------------------------------------------------------
// Experiment 3: compositional responses from a CSV file

inline constexpr Eigen::Index kCompositionParts = 9;
inline constexpr Eigen::Index kCompositionPredictors = 17;
inline constexpr Eigen::Index kCompositionRows = 49;

inline std::string compositions_header() {
    std::string h = "state";
    for (int j = 1; j <= kCompositionParts; ++j) h += ",share_" + std::to_string(j);
    for (int j = 1; j <= kCompositionPredictors; ++j) h += ",pred_" + std::to_string(j);
    return h;
}

/// Parses `state,share_1..share_9,pred_1..pred_17`. Shares are renormalized
/// and zero-replaced. `expected_rows` < 0 accepts any positive count.
inline Dataset parse_compositions(std::string_view text, Eigen::Index expected_rows = kCompositionRows) {
    auto ls = csv::lines(text);
    std::size_t first = 0;
    while (first < ls.size() && ls[first].empty()) ++first;
    if (first == ls.size()) throw FormatError("compositions: empty file");
    const auto header = csv::split(ls[first]);
    const auto width = static_cast<std::size_t>(1 + kCompositionParts + kCompositionPredictors);
    if (header.size() != width) {
        throw FormatError("compositions: header must have " + std::to_string(width) + " columns (" +
                          compositions_header() + ")");
    }
    std::vector<DenseVector> xs, shares;
    for (std::size_t i = first + 1; i < ls.size(); ++i) {
        if (ls[i].empty()) continue;
        const auto fields = csv::split(ls[i]);
        if (fields.size() != width) {
            throw FormatError("compositions line " + std::to_string(i + 1) + ": expected " +
                              std::to_string(width) + " columns, got " + std::to_string(fields.size()));
        }
        DenseVector s(kCompositionParts), x(kCompositionPredictors);
        for (Eigen::Index j = 0; j < kCompositionParts; ++j) {
            s(j) = csv::parse_double(fields[static_cast<std::size_t>(1 + j)], i + 1);
        }
        for (Eigen::Index j = 0; j < kCompositionPredictors; ++j) {
            x(j) = csv::parse_double(fields[static_cast<std::size_t>(1 + kCompositionParts + j)], i + 1);
        }
        if ((s.array() < 0.0).any()) {
            throw FormatError("compositions line " + std::to_string(i + 1) + ": negative share");
        }
        if (!x.allFinite()) throw FormatError("compositions line " + std::to_string(i + 1) + ": non-finite predictor");
        shares.push_back(std::move(s));
        xs.push_back(std::move(x));
    }
    const auto n = static_cast<Eigen::Index>(xs.size());
    if (n == 0 || (expected_rows >= 0 && n != expected_rows)) {
        throw FormatError("compositions: expected " + std::to_string(expected_rows) + " data rows, got " +
                          std::to_string(n));
    }
    Dataset data{MetricSpace::aitchison(kCompositionParts), DenseMatrix(n, kCompositionPredictors), {}};
    for (Eigen::Index i = 0; i < n; ++i) {
        data.x.row(i) = xs[static_cast<std::size_t>(i)].transpose();
        try {
            data.responses.emplace_back(zero_replace(shares[static_cast<std::size_t>(i)]));
        } catch (const ContractError& e) {
            throw FormatError("compositions row " + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return data;
}

inline Dataset load_compositions(const std::string& path, Eigen::Index expected_rows = kCompositionRows) {
    return parse_compositions(csv::read_file(path), expected_rows);
}

// ---------------------------------------------------------------------------
// Hyperparameters

/// Selected architecture, learning rate and dropout (first depth-1 widths,
/// depth, last width) plus early-stopping constants for experiments 1-3.
inline TrainConfig paper_config(int experiment) {
    TrainConfig c;
    switch (experiment) {
        case 1:
            c.arch = Architecture::uniform(kSimPredictors, 4, 2048, 8, 0.3);
            c.learning_rate = 0.001;
            c.burn_in = 50;
            c.patience = 150;
            break;
        case 2:
            c.arch = Architecture::uniform(kSimPredictors, 4, 4096, 15, 0.3);
            c.learning_rate = 0.01;
            c.burn_in = 50;
            c.patience = 100;
            break;
        case 3:
            c.arch = Architecture::uniform(kCompositionPredictors, 4, 1024, 14, 0.3);
            c.learning_rate = 0.01;
            c.burn_in = 500;
            c.patience = 1000;
            break;
        default: throw ParameterError("experiment must be 1, 2 or 3");
    }
    c.tolerance = 1e-5;
    c.momentum = 0.9;
    return c;
}

/// Candidate grids. The experiment 3 learning-rate list repeats 0.01 as
/// published; the duplicate point is trained twice and tie-broken.
inline HyperGrid paper_grid(int experiment) {
    switch (experiment) {
        case 1: return {{3, 4}, {512, 1024, 2048}, {8, 16, 24}, {0.001, 0.005, 0.01}, {0.1, 0.2, 0.3}};
        case 2: return {{3, 4}, {256, 512, 1024, 4096}, {5, 10, 15}, {0.001, 0.01, 0.1}, {0.1, 0.2, 0.3}};
        case 3: return {{3, 4}, {128, 256, 512, 1024}, {7, 14, 21}, {0.001, 0.01, 0.01}, {0.1, 0.2, 0.3}};
        default: throw ParameterError("experiment must be 1, 2 or 3");
    }
}

// ---------------------------------------------------------------------------
// Methods and evaluation

enum class Method { dfnn, gfr, mean };

inline std::string_view to_string(Method m) {
    switch (m) {
        case Method::dfnn: return "DFNN";
        case Method::gfr: return "GFR";
        case Method::mean: return "MEAN";
    }
    return "?";
}

inline std::optional<Method> parse_method(std::string_view s) {
    for (auto m : {Method::dfnn, Method::gfr, Method::mean}) {
        std::string a(to_string(m));
        if (s.size() == a.size() && std::equal(s.begin(), s.end(), a.begin(), [](char x, char y) {
                return std::toupper(static_cast<unsigned char>(x)) == y;
            })) {
            return m;
        }
    }
    return std::nullopt;
}

/// Predictions at `test_x` from a model fitted on `train`. Predictors are
/// z-scored with the training statistics before any method sees them.
inline std::vector<Point> fit_and_predict(Method method, const Dataset& train, const DenseMatrix& test_x,
                                          const TrainConfig& config) {
    switch (method) {
        case Method::dfnn: return train_standardized(train, config).checkpoint.predict(test_x);
        case Method::gfr: {
            const auto scaler = InputScaler::fit(train.x);
            FittedHead head(train.space, scaler.apply(train.x), train.responses);
            return head.predict_features(scaler.apply(test_x));
        }
        case Method::mean: {
            const DenseVector raw = train.space.embed_all(train.responses).colwise().mean().transpose();
            return std::vector<Point>(static_cast<std::size_t>(test_x.rows()), train.space.project(raw));
        }
    }
    throw ParameterError("unknown method");
}

struct McResult {
    std::string method;
    std::string setting;
    std::vector<double> values;  // NaN marks a failed replicate
    std::vector<std::string> errors;

    std::vector<double> finite_values() const {
        std::vector<double> out;
        for (double v : values)
            if (std::isfinite(v)) out.push_back(v);
        return out;
    }
    int failures() const { return static_cast<int>(values.size() - finite_values().size()); }
    double mean() const {
        const auto v = finite_values();
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    }
    /// Sample standard deviation, 1/(R-1); NaN for fewer than two values.
    double sd() const {
        const auto v = finite_values();
        if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
        const double m = mean();
        double ss = 0.0;
        for (double x : v) ss += (x - m) * (x - m);
        return std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
};

struct McSetting {
    int experiment = 1;
    Eigen::Index n = 200;
    double noise = 0.0;        // experiment 2
    Eigen::Index nodes = 10;   // experiment 2
    Eigen::Index test_size = 100;

    std::string label() const {
        std::string s = "exp" + std::to_string(experiment) + " n=" + std::to_string(n);
        if (experiment == 2) s += " q=" + std::to_string(nodes) + " a=" + csv::format_double(noise);
        return s;
    }
};

/// Training and test samples from one generator call of n + test_size pairs.
inline std::pair<Dataset, Dataset> simulate_replicate(const McSetting& s, std::uint64_t seed) {
    Rng rng(seed);
    Dataset all = s.experiment == 1   ? gen_experiment1(s.n + s.test_size, rng)
                  : s.experiment == 2 ? gen_experiment2(s.n + s.test_size, s.nodes, s.noise, rng).data
                                      : throw ParameterError("simulation is defined for experiments 1 and 2");
    return {all.slice(0, s.n), all.slice(s.n, s.n + s.test_size)};
}

namespace detail {

template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    const auto threads = std::min<std::size_t>(static_cast<std::size_t>(std::clamp(jobs, 1, 256)), count);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
    };
    if (threads <= 1) {
        worker();
        return;
    }
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

}  // namespace detail

/// Replicate r uses seed base_seed + r for data and network alike. Failed
/// replicates are recorded as NaN with their error message.
inline std::vector<McResult> run_monte_carlo(const McSetting& setting, int replicates,
                                             const std::vector<Method>& methods, const TrainConfig& config,
                                             std::uint64_t base_seed, int jobs = 1) {
    if (replicates < 1) throw ParameterError("run_monte_carlo: at least one replicate required");
    if (methods.empty()) throw ParameterError("run_monte_carlo: no methods");
    std::vector<McResult> out;
    for (auto m : methods) {
        out.push_back({std::string(to_string(m)), setting.label(),
                       std::vector<double>(static_cast<std::size_t>(replicates)),
                       std::vector<std::string>(static_cast<std::size_t>(replicates))});
    }
    const auto tasks = static_cast<std::size_t>(replicates) * methods.size();
    detail::parallel_for(tasks, jobs, [&](std::size_t t) {
        const auto r = t / methods.size();
        const auto k = t % methods.size();
        const std::uint64_t seed = base_seed + r;
        try {
            const auto [train, test] = simulate_replicate(setting, seed);
            TrainConfig cfg = config;
            cfg.seed = seed;
            const auto preds = fit_and_predict(methods[k], train, test.x, cfg);
            out[k].values[r] = mspe(preds, test.responses, train.space);
        } catch (const Error& e) {
            out[k].values[r] = std::numeric_limits<double>::quiet_NaN();
            out[k].errors[r] = e.what();
        }
    });
    return out;
}

/// Repeated k-fold cross-validation. Each repeat draws a fresh random fold
/// assignment and records the MSPE over all held-out points.
inline std::vector<McResult> run_cv(const Dataset& data, int folds, int repeats, const std::vector<Method>& methods,
                                    const TrainConfig& config, std::uint64_t base_seed, int jobs = 1,
                                    const std::string& setting = "cv") {
    data.validate();
    if (folds < 2 || data.size() < folds) throw ParameterError("run_cv: need 2 <= folds <= n");
    if (repeats < 1) throw ParameterError("run_cv: at least one repeat required");
    if (methods.empty()) throw ParameterError("run_cv: no methods");
    std::vector<McResult> out;
    for (auto m : methods) {
        out.push_back({std::string(to_string(m)), setting, std::vector<double>(static_cast<std::size_t>(repeats)),
                       std::vector<std::string>(static_cast<std::size_t>(repeats))});
    }
    const auto n = data.size();
    const auto tasks = static_cast<std::size_t>(repeats) * methods.size();
    detail::parallel_for(tasks, jobs, [&](std::size_t t) {
        const auto r = t / methods.size();
        const auto k = t % methods.size();
        const std::uint64_t seed = base_seed + r;
        try {
            Rng rng(derive_seed(seed, 5));
            std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), Eigen::Index{0});
            for (std::size_t i = order.size() - 1; i > 0; --i) {
                std::swap(order[i], order[static_cast<std::size_t>(rng.next_u64() % (i + 1))]);
            }
            double total = 0.0;
            for (int f = 0; f < folds; ++f) {
                std::vector<Eigen::Index> tr, te;
                for (std::size_t i = 0; i < order.size(); ++i) {
                    (static_cast<int>(i % static_cast<std::size_t>(folds)) == f ? te : tr).push_back(order[i]);
                }
                std::sort(tr.begin(), tr.end());
                std::sort(te.begin(), te.end());
                const Dataset train = data.subset(tr);
                const Dataset test = data.subset(te);
                TrainConfig cfg = config;
                cfg.seed = derive_seed(seed, 100 + static_cast<std::uint64_t>(f));
                const auto preds = fit_and_predict(methods[k], train, test.x, cfg);
                total += mspe(preds, test.responses, data.space) * static_cast<double>(te.size());
            }
            out[k].values[r] = total / static_cast<double>(n);
        } catch (const Error& e) {
            out[k].values[r] = std::numeric_limits<double>::quiet_NaN();
            out[k].errors[r] = e.what();
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Result tables

/// `method,setting,replicate,mspe`, one line per replicate (1-based).
inline std::string results_csv(const std::vector<McResult>& results) {
    std::string out = "method,setting,replicate,mspe\n";
    for (const auto& res : results) {
        for (std::size_t r = 0; r < res.values.size(); ++r) {
            out += res.method + "," + res.setting + "," + std::to_string(r + 1) + "," +
                   (std::isfinite(res.values[r]) ? csv::format_double(res.values[r]) : std::string("nan")) + "\n";
        }
    }
    return out;
}

/// One row per setting, a mean and sd column pair per method, in the order
/// methods first appear.
inline std::string summary_csv(const std::vector<McResult>& results) {
    std::vector<std::string> settings, methods;
    for (const auto& r : results) {
        if (std::find(settings.begin(), settings.end(), r.setting) == settings.end()) settings.push_back(r.setting);
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
    }
    auto fmt = [](double v) { return std::isfinite(v) ? csv::format_double(v) : std::string("nan"); };
    std::string out = "setting";
    for (const auto& m : methods) out += "," + m + "_mean," + m + "_sd," + m + "_failed";
    out += "\n";
    for (const auto& s : settings) {
        out += s;
        for (const auto& m : methods) {
            auto it = std::find_if(results.begin(), results.end(),
                                   [&](const McResult& r) { return r.setting == s && r.method == m; });
            if (it == results.end()) {
                out += ",,,";
            } else {
                out += "," + fmt(it->mean()) + "," + fmt(it->sd()) + "," + std::to_string(it->failures());
            }
        }
        out += "\n";
    }
    return out;
}

}  // namespace frechetnet

#endif
