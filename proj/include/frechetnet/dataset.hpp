#ifndef FRECHETNET_DATASET_HPP
#define FRECHETNET_DATASET_HPP

// Predictor/response samples and their CSV container.
//
// Container layout (UTF-8, '\n' line ends, shortest round-trip decimals):
//
//   # frechetnet dataset v1 space=<kind> dim=<m|q|k> predictors=<p>
//   x_1,...,x_p,v_1,...,v_D          one line per record
//
// where v are the response's natural values (quantiles, row-major Laplacian
// entries, shares, or coordinates).

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "frechetnet/errors.hpp"
#include "frechetnet/metric_spaces.hpp"
#include "frechetnet/numerics.hpp"

namespace frechetnet {

struct Dataset {
    MetricSpace space;
    DenseMatrix x;                // n x p
    std::vector<Point> responses;

    Eigen::Index size() const noexcept { return x.rows(); }
    Eigen::Index predictors() const noexcept { return x.cols(); }

    void validate() const {
        if (x.rows() != static_cast<Eigen::Index>(responses.size())) {
            throw ContractError("Dataset: predictor and response counts differ");
        }
        for (const auto& y : responses) {
            if (!space.contains(y)) throw DimensionError("Dataset: response outside the declared space");
        }
    }

    Dataset subset(const std::vector<Eigen::Index>& rows) const {
        Dataset out{space, DenseMatrix(static_cast<Eigen::Index>(rows.size()), x.cols()), {}};
        out.responses.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            out.x.row(static_cast<Eigen::Index>(i)) = x.row(rows[i]);
            out.responses.push_back(responses[static_cast<std::size_t>(rows[i])]);
        }
        return out;
    }

    /// Rows [begin, end).
    Dataset slice(Eigen::Index begin, Eigen::Index end) const {
        std::vector<Eigen::Index> rows;
        for (auto i = begin; i < end; ++i) rows.push_back(i);
        return subset(rows);
    }
};

namespace csv {

inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view field, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
        field.remove_suffix(1);
    }
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw FormatError("line " + std::to_string(line) + ": invalid number '" + std::string(field) + "'");
    }
    return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string join(const DenseVector& v) {
    std::string out;
    for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (j) out.push_back(',');
        out += format_double(v(j));
    }
    return out;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
    if (!out) throw Error("write failed for '" + path + "'");
}

/// Splits text into lines, dropping a trailing empty line and '\r'.
inline std::vector<std::string_view> lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        if (pos == std::string_view::npos) pos = text.size();
        auto line = text.substr(start, pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        out.push_back(line);
        start = pos + 1;
    }
    return out;
}

}  // namespace csv

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
inline std::string content_digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream ss;
    ss << std::hex << std::setw(16) << std::setfill('0') << h;
    return ss.str();
}

inline std::string dataset_header(const MetricSpace& space, Eigen::Index predictors) {
    return "# frechetnet dataset v1 space=" + std::string(to_string(space.kind())) +
           " dim=" + std::to_string(space.dimension()) + " predictors=" + std::to_string(predictors);
}

inline std::string serialize_dataset(const Dataset& data) {
    data.validate();
    std::string out = dataset_header(data.space, data.predictors()) + "\n";
    for (Eigen::Index i = 0; i < data.size(); ++i) {
        out += csv::join(data.x.row(i).transpose());
        out.push_back(',');
        out += csv::join(data.space.values(data.responses[static_cast<std::size_t>(i)]));
        out.push_back('\n');
    }
    return out;
}

struct DatasetHeader {
    SpaceKind kind;
    Eigen::Index dim;
    Eigen::Index predictors;
};

inline DatasetHeader parse_dataset_header(std::string_view line) {
    std::istringstream ss{std::string(line)};
    std::string hash, magic, what, version;
    ss >> hash >> magic >> what >> version;
    if (hash != "#" || magic != "frechetnet" || what != "dataset") {
        throw FormatError("not a frechetnet dataset (bad header)");
    }
    if (version != "v1") throw VersionError("unsupported dataset version '" + version + "'");
    DatasetHeader h{SpaceKind::euclidean, -1, -1};
    bool have_kind = false;
    std::string tok;
    while (ss >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) throw FormatError("dataset header: malformed field '" + tok + "'");
        auto key = tok.substr(0, eq);
        auto val = tok.substr(eq + 1);
        try {
            if (key == "space") {
                auto k = parse_space_kind(val);
                if (!k) throw FormatError("dataset header: unknown space '" + val + "'");
                h.kind = *k;
                have_kind = true;
            } else if (key == "dim") {
                h.dim = std::stol(val);
            } else if (key == "predictors") {
                h.predictors = std::stol(val);
            }
        } catch (const std::logic_error&) {
            throw FormatError("dataset header: bad value in '" + tok + "'");
        }
    }
    if (!have_kind || h.dim < 1 || h.predictors < 1) throw FormatError("dataset header: missing fields");
    return h;
}

inline Dataset parse_dataset(std::string_view text) {
    auto ls = csv::lines(text);
    if (ls.empty()) throw FormatError("dataset: empty file");
    const auto h = parse_dataset_header(ls.front());
    MetricSpace space(h.kind, h.dim);
    const auto p = h.predictors;
    const auto d = space.embedding_dim();
    std::vector<std::size_t> record_lines;
    for (std::size_t i = 1; i < ls.size(); ++i) {
        if (!ls[i].empty()) record_lines.push_back(i);
    }
    Dataset data{space, DenseMatrix(static_cast<Eigen::Index>(record_lines.size()), p), {}};
    for (std::size_t r = 0; r < record_lines.size(); ++r) {
        const auto ln = record_lines[r];
        auto fields = csv::split(ls[ln]);
        if (static_cast<Eigen::Index>(fields.size()) != p + d) {
            throw FormatError("line " + std::to_string(ln + 1) + ": expected " + std::to_string(p + d) +
                              " fields, got " + std::to_string(fields.size()));
        }
        DenseVector v(d);
        for (Eigen::Index j = 0; j < p; ++j) {
            data.x(static_cast<Eigen::Index>(r), j) = csv::parse_double(fields[static_cast<std::size_t>(j)], ln + 1);
        }
        for (Eigen::Index j = 0; j < d; ++j) {
            v(j) = csv::parse_double(fields[static_cast<std::size_t>(p + j)], ln + 1);
        }
        try {
            data.responses.push_back(space.from_values(v));
        } catch (const ContractError& e) {
            throw FormatError("line " + std::to_string(ln + 1) + ": invalid response: " + e.what());
        }
    }
    return data;
}

inline Dataset load_dataset(const std::string& path) { return parse_dataset(csv::read_file(path)); }

inline void save_dataset(const Dataset& data, const std::string& path) {
    csv::write_file(path, serialize_dataset(data));
}

/// Numeric CSV without header; '#' lines and blank lines are skipped.
inline DenseMatrix parse_matrix_csv(std::string_view text) {
    std::vector<std::vector<double>> rows;
    auto ls = csv::lines(text);
    for (std::size_t i = 0; i < ls.size(); ++i) {
        if (ls[i].empty() || ls[i].front() == '#') continue;
        std::vector<double> row;
        for (auto f : csv::split(ls[i])) row.push_back(csv::parse_double(f, i + 1));
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw FormatError("line " + std::to_string(i + 1) + ": inconsistent column count");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return DenseMatrix(0, 0);
    DenseMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

}  // namespace frechetnet

#endif
