// frechetnet command-line driver.
//
//   frechetnet simulate    --experiment 1|2 --n N [--noise a --nodes q] --seed S --out data.csv
//   frechetnet train       (--data data.csv | --experiment E --n N) [--config cfg.json] [overrides] --out DIR
//   frechetnet predict     --checkpoint DIR/checkpoint.frnet --inputs x.csv [--out preds.csv]
//   frechetnet evaluate    --checkpoint ... --data data.csv
//   frechetnet grid-search --data data.csv [--experiment E] [list overrides] --out DIR
//   frechetnet reproduce   --experiment 1|2|3 [--scale desk|paper] --out DIR
//
// Exit status: 0 success, 1 runtime failure, 2 usage or validation error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frechetnet/experiments.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace frechetnet;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Flags {
    std::string command;
    std::optional<int> experiment;
    std::optional<Eigen::Index> n;
    std::vector<double> noise;
    std::optional<Eigen::Index> nodes;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> space;
    std::optional<std::string> config;
    std::vector<double> lr;
    std::vector<double> dropout;
    std::vector<Eigen::Index> depth;
    std::vector<Eigen::Index> width;
    std::vector<Eigen::Index> last_width;
    std::optional<Eigen::Index> batch;
    std::optional<int> max_epochs;
    std::optional<int> burn_in;
    std::optional<double> tol;
    std::optional<int> patience;
    std::optional<double> momentum;
    std::optional<std::string> projection;
    std::optional<std::string> stats;
    int jobs = 1;
    std::optional<std::string> out;
    std::optional<std::string> data;
    std::optional<std::string> checkpoint;
    std::optional<std::string> inputs;
    std::string scale = "desk";
    std::optional<int> replicates;
    std::optional<int> folds;
    std::vector<std::string> methods;
};

std::uint64_t effective_seed(const Flags& f) {
    if (f.seed) return *f.seed;
    if (const char* env = std::getenv("FRECHETNET_SEED")) {
        try {
            std::size_t pos = 0;
            const auto v = std::stoull(env, &pos);
            if (pos != std::string(env).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw UsageError("FRECHETNET_SEED must be a nonnegative integer");
        }
    }
    return 0;
}

template <class T>
T single(const std::vector<T>& v, const char* flag) {
    if (v.size() != 1) throw UsageError(std::string(flag) + " takes exactly one value for this command");
    return v.front();
}

std::string require(const std::optional<std::string>& v, const char* flag, const std::string& cmd) {
    if (!v || v->empty()) throw UsageError(cmd + ": " + flag + " is required");
    return *v;
}

ProjectionAdjoint parse_projection(const std::string& s) {
    if (s == "straight_through") return ProjectionAdjoint::straight_through;
    if (s == "exact") return ProjectionAdjoint::exact;
    throw UsageError("projection must be straight_through or exact");
}

StatsMode parse_stats(const std::string& s) {
    if (s == "differentiate") return StatsMode::differentiate;
    if (s == "detached") return StatsMode::detached;
    throw UsageError("stats must be differentiate or detached");
}

// Architecture fields kept separately until the input dimension is known.
struct ConfigDraft {
    TrainConfig config;
    Eigen::Index depth = 3;
    Eigen::Index width = 64;
    Eigen::Index last_width = 8;
    double dropout = 0.1;

    static ConfigDraft from(const TrainConfig& c) {
        ConfigDraft d;
        d.config = c;
        d.depth = c.arch.depth();
        d.width = c.arch.depth() > 1 ? c.arch.hidden_widths.front() : c.arch.output_dim();
        d.last_width = c.arch.output_dim();
        d.dropout = c.arch.dropout_rate;
        return d;
    }

    TrainConfig finish(Eigen::Index input_dim) const {
        TrainConfig c = config;
        c.arch = Architecture::uniform(input_dim, depth, width, last_width, dropout);
        c.validate();
        return c;
    }
};

void apply_json(ConfigDraft& d, const std::string& path) {
    json j;
    try {
        j = json::parse(csv::read_file(path));
    } catch (const json::exception& e) {
        throw UsageError("config file '" + path + "': " + e.what());
    } catch (const Error& e) {
        throw UsageError(std::string("config file: ") + e.what());
    }
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    try {
        for (auto& [key, v] : j.items()) {
            if (key == "lr") d.config.learning_rate = v.get<double>();
            else if (key == "momentum") d.config.momentum = v.get<double>();
            else if (key == "dropout") d.dropout = v.get<double>();
            else if (key == "depth") d.depth = v.get<Eigen::Index>();
            else if (key == "width") d.width = v.get<Eigen::Index>();
            else if (key == "last_width") d.last_width = v.get<Eigen::Index>();
            else if (key == "batch") {
                const auto b = v.get<Eigen::Index>();
                d.config.batch_mode = b == 0 ? BatchMode::full : BatchMode::minibatch;
                d.config.batch_size = b;
            } else if (key == "max_epochs") d.config.max_epochs = v.get<int>();
            else if (key == "burn_in") d.config.burn_in = v.get<int>();
            else if (key == "tol") d.config.tolerance = v.get<double>();
            else if (key == "patience") d.config.patience = v.get<int>();
            else if (key == "seed") d.config.seed = v.get<std::uint64_t>();
            else if (key == "projection") d.config.projection = parse_projection(v.get<std::string>());
            else if (key == "stats") d.config.stats = parse_stats(v.get<std::string>());
            else if (key == "ridge") {
                if (v.is_string() && v.get<std::string>() == "adaptive") d.config.ridge = RidgePolicy::adaptive();
                else d.config.ridge = RidgePolicy::fixed(v.get<double>());
            } else throw UsageError("config file: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw UsageError(std::string("config file: ") + e.what());
    }
}

/// defaults < config file < flags
ConfigDraft resolve_config(const Flags& f, const TrainConfig& defaults, bool lists_allowed = false) {
    ConfigDraft d = ConfigDraft::from(defaults);
    if (f.config) apply_json(d, *f.config);
    if (!lists_allowed) {
        if (!f.lr.empty()) d.config.learning_rate = single(f.lr, "--lr");
        if (!f.dropout.empty()) d.dropout = single(f.dropout, "--dropout");
        if (!f.depth.empty()) d.depth = single(f.depth, "--depth");
        if (!f.width.empty()) d.width = single(f.width, "--width");
        if (!f.last_width.empty()) d.last_width = single(f.last_width, "--last-width");
    }
    if (f.batch) {
        d.config.batch_mode = *f.batch == 0 ? BatchMode::full : BatchMode::minibatch;
        d.config.batch_size = *f.batch;
    }
    if (f.max_epochs) d.config.max_epochs = *f.max_epochs;
    if (f.burn_in) d.config.burn_in = *f.burn_in;
    if (f.tol) d.config.tolerance = *f.tol;
    if (f.patience) d.config.patience = *f.patience;
    if (f.momentum) d.config.momentum = *f.momentum;
    if (f.projection) d.config.projection = parse_projection(*f.projection);
    if (f.stats) d.config.stats = parse_stats(*f.stats);
    if (f.seed || std::getenv("FRECHETNET_SEED")) d.config.seed = effective_seed(f);
    return d;
}

TrainConfig cli_defaults() {
    TrainConfig c;
    c.arch = Architecture::uniform(1, 3, 64, 8, 0.1);
    return c;
}

json config_json(const TrainConfig& c) {
    json j;
    j["input_dim"] = c.arch.input_dim;
    j["hidden_widths"] = c.arch.hidden_widths;
    j["dropout"] = c.arch.dropout_rate;
    j["lr"] = c.learning_rate;
    j["momentum"] = c.momentum;
    j["batch"] = c.batch_mode == BatchMode::full ? 0 : c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["burn_in"] = c.burn_in;
    j["tol"] = c.tolerance;
    j["patience"] = c.patience;
    j["seed"] = c.seed;
    j["ridge"] = c.ridge.mode == RidgePolicy::Mode::adaptive ? json("adaptive") : json(c.ridge.value);
    j["projection"] = c.projection == ProjectionAdjoint::exact ? "exact" : "straight_through";
    j["stats"] = c.stats == StatsMode::detached ? "detached" : "differentiate";
    return j;
}

void write_manifest(const fs::path& dir, const json& body) {
    csv::write_file((dir / "manifest.json").string(), body.dump(2) + "\n");
}

fs::path output_dir(const Flags& f) {
    const fs::path dir = require(f.out, "--out", f.command);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    return dir;
}

void check_space(const Flags& f, const MetricSpace& space) {
    if (!f.space) return;
    if (!parse_space_kind(*f.space)) throw UsageError("unknown space '" + *f.space + "'");
    if (*parse_space_kind(*f.space) != space.kind()) {
        throw UsageError("--space " + *f.space + " does not match the dataset's space " +
                         std::string(to_string(space.kind())));
    }
}

McSetting setting_from(const Flags& f, int experiment) {
    McSetting s;
    s.experiment = experiment;
    if (f.n) s.n = *f.n;
    if (!f.noise.empty()) s.noise = single(f.noise, "--noise");
    if (f.nodes) s.nodes = *f.nodes;
    if (s.n < 1) throw UsageError("--n must be positive");
    if (experiment == 2 && (s.nodes < 2 || s.nodes > kSimPredictors)) {
        throw UsageError("--nodes must lie in [2, 10] (edge weights index predictors by node)");
    }
    if (!(s.noise >= 0.0)) throw UsageError("--noise must be nonnegative");
    return s;
}

Dataset generate(const McSetting& s, std::uint64_t seed) {
    Rng rng(seed);
    if (s.experiment == 1) return gen_experiment1(s.n, rng);
    if (s.experiment == 2) return gen_experiment2(s.n, s.nodes, s.noise, rng).data;
    throw UsageError("--experiment must be 1 or 2 for simulation");
}

// ---------------------------------------------------------------------------

int cmd_simulate(const Flags& f) {
    if (!f.experiment) throw UsageError("simulate: --experiment is required");
    const auto s = setting_from(f, *f.experiment);
    const auto out = require(f.out, "--out", "simulate");
    const auto seed = effective_seed(f);
    const auto text = serialize_dataset(generate(s, seed));
    csv::write_file(out, text);
    std::cout << "experiment " << s.experiment << " n " << s.n;
    if (s.experiment == 2) std::cout << " nodes " << s.nodes << " noise " << csv::format_double(s.noise);
    std::cout << " seed " << seed << "\n";
    std::cout << "wrote " << out << "\n";
    std::cout << "digest " << content_digest(text) << "\n";
    return 0;
}

Dataset train_source(const Flags& f, json& manifest) {
    if (f.data && f.experiment) throw UsageError(f.command + ": give either --data or --experiment, not both");
    if (f.data) {
        manifest["data"] = *f.data;
        return load_dataset(*f.data);
    }
    if (f.experiment) {
        const auto s = setting_from(f, *f.experiment);
        const auto seed = effective_seed(f);
        manifest["generator"] = {{"experiment", s.experiment}, {"n", s.n}, {"noise", s.noise},
                                 {"nodes", s.nodes}, {"seed", seed}};
        return generate(s, seed);
    }
    throw UsageError(f.command + ": a data source is required (--data or --experiment)");
}

int cmd_train(const Flags& f) {
    json manifest;
    manifest["command"] = "train";
    const auto dir = output_dir(f);
    const Dataset data = train_source(f, manifest);
    check_space(f, data.space);
    const auto config = resolve_config(f, cli_defaults()).finish(data.predictors());
    manifest["space"] = {{"kind", to_string(data.space.kind())}, {"dim", data.space.dimension()}};
    manifest["config"] = config_json(config);
    write_manifest(dir, manifest);

    const auto result = train_standardized(data, config);
    const auto& h = result.history;
    std::string hist = "epoch,train_risk,val_mspe\n";
    for (int e = 0; e < h.epochs(); ++e) {
        const double v = h.val_mspe[static_cast<std::size_t>(e)];
        hist += std::to_string(e + 1) + "," + csv::format_double(h.train_risk[static_cast<std::size_t>(e)]) + "," +
                (std::isfinite(v) ? csv::format_double(v) : std::string()) + "\n";
    }
    csv::write_file((dir / "history.csv").string(), hist);
    save_checkpoint(result.checkpoint, (dir / "checkpoint.frnet").string());
    manifest["result"] = {{"epochs", h.epochs()},
                          {"best_epoch", h.best_epoch},
                          {"best_val_mspe", h.best_val_mspe},
                          {"stop_reason", h.stop_reason == StopReason::early ? "early" : "max_epochs"}};
    write_manifest(dir, manifest);
    std::cout << "epochs " << h.epochs() << " best_epoch " << h.best_epoch << " best_val_mspe "
              << csv::format_double(h.best_val_mspe) << "\n";
    std::cout << "wrote " << (dir / "checkpoint.frnet").string() << "\n";
    return 0;
}

int cmd_predict(const Flags& f) {
    const auto ckpt = load_checkpoint(require(f.checkpoint, "--checkpoint", "predict"));
    const auto x = parse_matrix_csv(csv::read_file(require(f.inputs, "--inputs", "predict")));
    std::string out;
    if (x.rows() > 0) {
        if (x.cols() != ckpt.arch().input_dim) {
            throw DimensionError("inputs have " + std::to_string(x.cols()) + " columns, expected p = " +
                                 std::to_string(ckpt.arch().input_dim));
        }
        for (const auto& y : ckpt.predict(x)) out += csv::join(ckpt.space().values(y)) + "\n";
    }
    if (f.out) {
        csv::write_file(*f.out, out);
    } else {
        std::cout << out;
    }
    return 0;
}

int cmd_evaluate(const Flags& f) {
    const auto ckpt = load_checkpoint(require(f.checkpoint, "--checkpoint", "evaluate"));
    const auto data = load_dataset(require(f.data, "--data", "evaluate"));
    check_space(f, data.space);
    if (!(data.space == ckpt.space())) throw DimensionError("dataset space differs from the checkpoint's space");
    const double v = mspe(ckpt.predict(data.x), data.responses, data.space);
    const std::string line = "mspe " + csv::format_double(v) + "\n";
    std::cout << line;
    if (f.out) csv::write_file(*f.out, line);
    return 0;
}

int cmd_grid_search(const Flags& f) {
    json manifest;
    manifest["command"] = "grid-search";
    const auto dir = output_dir(f);
    Flags src = f;
    std::optional<int> grid_exp = f.experiment;
    if (f.data) src.experiment.reset();  // --experiment then only picks the grid
    const Dataset data = train_source(src, manifest);
    check_space(f, data.space);
    HyperGrid grid = grid_exp ? paper_grid(*grid_exp) : HyperGrid{{3}, {64}, {8}, {1e-3}, {0.1}};
    if (!f.depth.empty()) grid.depths = f.depth;
    if (!f.width.empty()) grid.widths = f.width;
    if (!f.last_width.empty()) grid.last_widths = f.last_width;
    if (!f.lr.empty()) grid.learning_rates = f.lr;
    if (!f.dropout.empty()) grid.dropout_rates = f.dropout;
    TrainConfig base = resolve_config(f, grid_exp ? paper_config(*grid_exp) : cli_defaults(), true)
                           .finish(data.predictors());
    manifest["base_config"] = config_json(base);
    manifest["grid"] = {{"depth", grid.depths}, {"width", grid.widths}, {"last_width", grid.last_widths},
                        {"lr", grid.learning_rates}, {"dropout", grid.dropout_rates}};
    write_manifest(dir, manifest);

    const auto scaler = InputScaler::fit(data.x);
    const Dataset scaled{data.space, scaler.apply(data.x), data.responses};
    const auto res = grid_search(scaled, base, grid, f.jobs);
    std::string table = "depth,width,last_width,lr,dropout,val_mspe,error\n";
    for (const auto& s : res.table) {
        std::string err = s.error;
        std::replace(err.begin(), err.end(), ',', ';');
        table += std::to_string(s.point.depth) + "," + std::to_string(s.point.width) + "," +
                 std::to_string(s.point.last_width) + "," + csv::format_double(s.point.learning_rate) + "," +
                 csv::format_double(s.point.dropout) + "," +
                 (std::isfinite(s.val_mspe) ? csv::format_double(s.val_mspe) : std::string("nan")) + "," + err + "\n";
    }
    csv::write_file((dir / "grid.csv").string(), table);
    manifest["best"] = config_json(res.best);
    write_manifest(dir, manifest);
    const auto& b = res.best_point;
    std::cout << "best depth " << b.depth << " width " << b.width << " last_width " << b.last_width << " lr "
              << csv::format_double(b.learning_rate) << " dropout " << csv::format_double(b.dropout) << "\n";
    return 0;
}

std::vector<Method> methods_from(const Flags& f) {
    std::vector<Method> out;
    for (const auto& s : f.methods) {
        auto m = parse_method(s);
        if (!m) throw UsageError("unknown method '" + s + "' (expected DFNN, GFR or MEAN)");
        out.push_back(*m);
    }
    if (out.empty()) out = {Method::dfnn, Method::gfr};
    return out;
}

int cmd_reproduce(const Flags& f) {
    if (!f.experiment) throw UsageError("reproduce: --experiment is required");
    const int e = *f.experiment;
    if (e < 1 || e > 3) throw UsageError("--experiment must be 1, 2 or 3");
    if (f.scale != "desk" && f.scale != "paper") throw UsageError("--scale must be desk or paper");
    const bool paper = f.scale == "paper";
    const auto seed = effective_seed(f);
    const auto methods = methods_from(f);
    const auto dir = output_dir(f);
    json manifest;
    manifest["command"] = "reproduce";
    manifest["experiment"] = e;
    manifest["scale"] = f.scale;
    manifest["seed"] = seed;
    std::vector<std::string> mnames;
    for (auto m : methods) mnames.emplace_back(to_string(m));
    manifest["methods"] = mnames;

    std::vector<McResult> results;
    if (e == 3) {
        if (!f.data) {
            throw Error("reproduce: experiment 3 needs the employment compositions file via --data "
                        "(schema: docs/formats.md, section 'Compositions CSV')");
        }
        const Dataset data = load_compositions(*f.data);
        const auto config = resolve_config(f, paper_config(3)).finish(data.predictors());
        const int folds = f.folds.value_or(10);
        const int repeats = f.replicates.value_or(paper ? 100 : 10);
        manifest["data"] = *f.data;
        manifest["folds"] = folds;
        manifest["repeats"] = repeats;
        manifest["config"] = config_json(config);
        write_manifest(dir, manifest);
        results = run_cv(data, folds, repeats, methods, config, seed, f.jobs, "exp3 cv" + std::to_string(folds));
    } else {
        const auto config = resolve_config(f, paper_config(e)).finish(kSimPredictors);
        const int replicates = f.replicates.value_or(paper ? 250 : 10);
        std::vector<Eigen::Index> ns = f.n ? std::vector<Eigen::Index>{*f.n}
                                           : (paper ? std::vector<Eigen::Index>{200, 500, 1000}
                                                    : std::vector<Eigen::Index>{200});
        std::vector<double> noises = !f.noise.empty() ? f.noise
                                     : paper          ? std::vector<double>{0.0, 0.02, 0.1}
                                                      : std::vector<double>{0.0};
        if (e == 1) noises = {0.0};
        std::vector<McSetting> settings;
        for (double a : noises) {
            for (auto n : ns) {
                Flags g = f;
                g.n = n;
                g.noise = {a};
                settings.push_back(setting_from(g, e));
            }
        }
        manifest["replicates"] = replicates;
        manifest["settings"] = json::array();
        for (const auto& s : settings) manifest["settings"].push_back(s.label());
        manifest["config"] = config_json(config);
        write_manifest(dir, manifest);
        for (const auto& s : settings) {
            auto part = run_monte_carlo(s, replicates, methods, config, seed, f.jobs);
            results.insert(results.end(), part.begin(), part.end());
        }
    }
    csv::write_file((dir / "results.csv").string(), results_csv(results));
    const auto summary = summary_csv(results);
    csv::write_file((dir / "summary.csv").string(), summary);
    int failed = 0;
    for (const auto& r : results) {
        failed += r.failures();
        for (std::size_t i = 0; i < r.errors.size(); ++i) {
            if (!r.errors[i].empty()) {
                std::cerr << "warning: " << r.method << " " << r.setting << " replicate " << i + 1 << ": "
                          << r.errors[i] << "\n";
            }
        }
    }
    std::cout << summary;
    if (failed) std::cerr << "warning: " << failed << " replicate(s) failed and were skipped\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Deep Frechet neural network regression for metric-space responses"};
    app.require_subcommand(1);
    app.fallthrough();
    app.footer("Exit status: 0 success, 1 runtime failure, 2 usage or validation error.\n"
               "FRECHETNET_SEED supplies the seed when --seed is absent. File formats: docs/formats.md");
    Flags f;

    app.add_option("--experiment", f.experiment, "Experiment: 1 distributions, 2 networks, 3 compositions");
    app.add_option("--n", f.n, "Training sample size");
    app.add_option("--noise", f.noise, "Edge-weight noise half-width a (experiment 2; list for reproduce)")
        ->delimiter(',');
    app.add_option("--nodes", f.nodes, "Network node count q (experiment 2, at most 10)");
    app.add_option("--seed", f.seed, "Random seed (falls back to FRECHETNET_SEED, then 0)");
    app.add_option("--space", f.space, "Expected response space: wasserstein|laplacian|aitchison|euclidean");
    app.add_option("--config", f.config, "JSON training configuration (flags take precedence)");
    app.add_option("--lr", f.lr, "Learning rate (comma list for grid-search)")->delimiter(',');
    app.add_option("--dropout", f.dropout, "Dropout rate (comma list for grid-search)")->delimiter(',');
    app.add_option("--depth", f.depth, "Number of hidden layers L (comma list for grid-search)")->delimiter(',');
    app.add_option("--width", f.width, "Width of hidden layers 1..L-1 (comma list for grid-search)")
        ->delimiter(',');
    app.add_option("--last-width", f.last_width, "Width of the final hidden layer (comma list for grid-search)")
        ->delimiter(',');
    app.add_option("--batch", f.batch, "Minibatch size; 0 means full batch");
    app.add_option("--max-epochs", f.max_epochs, "Epoch ceiling");
    app.add_option("--burn-in", f.burn_in, "Epochs before validation starts (E0)");
    app.add_option("--tol", f.tol, "Early-stopping improvement tolerance");
    app.add_option("--patience", f.patience, "Early-stopping patience P");
    app.add_option("--momentum", f.momentum, "SGD momentum");
    app.add_option("--projection", f.projection, "Projection adjoint: straight_through|exact");
    app.add_option("--stats", f.stats, "Batch statistics: differentiate|detached");
    app.add_option("--jobs", f.jobs, "Parallel workers for replicates, folds and grid points");
    app.add_option("--out", f.out, "Output file (simulate, predict, evaluate) or directory");
    app.add_option("--data", f.data, "Dataset file (compositions CSV for reproduce --experiment 3)");
    app.add_option("--checkpoint", f.checkpoint, "Checkpoint file written by train");
    app.add_option("--inputs", f.inputs, "Predictor CSV for predict, one row per input");
    app.add_option("--scale", f.scale, "reproduce scale: desk|paper");
    app.add_option("--replicates", f.replicates, "Monte Carlo replicates or CV repeats");
    app.add_option("--folds", f.folds, "Cross-validation folds (experiment 3)");
    app.add_option("--methods", f.methods, "Methods to compare: DFNN,GFR,MEAN")->delimiter(',');

    for (const char* name : {"simulate", "train", "predict", "evaluate", "grid-search", "reproduce"}) {
        app.add_subcommand(name)->fallthrough()->callback([&f, name] { f.command = name; });
    }
    app.get_subcommand("simulate")->description("Generate an experiment 1 or 2 dataset");
    app.get_subcommand("train")->description("Train a DFNN and write checkpoint, history and manifest");
    app.get_subcommand("predict")->description("Predict responses for raw predictor rows");
    app.get_subcommand("evaluate")->description("MSPE of a checkpoint on a dataset");
    app.get_subcommand("grid-search")->description("Select hyperparameters by validation MSPE");
    app.get_subcommand("reproduce")->description("Monte Carlo or cross-validation comparison tables");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (f.jobs < 1) throw UsageError("--jobs must be at least 1");
        if (f.command == "simulate") return cmd_simulate(f);
        if (f.command == "train") return cmd_train(f);
        if (f.command == "predict") return cmd_predict(f);
        if (f.command == "evaluate") return cmd_evaluate(f);
        if (f.command == "grid-search") return cmd_grid_search(f);
        if (f.command == "reproduce") return cmd_reproduce(f);
        throw UsageError("unknown command");
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ParameterError& e) {
        std::cerr << "invalid configuration: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
