#pragma once

// Plain-text persistence: matrices as comma-separated rows (columns are
// samples, no header), labels as one integer per line, a fitted model as a
// directory of CSVs plus report.json.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rbdlr/types.hpp"

namespace rbdlr::io {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open " + path.string());
    return in;
}

inline std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FileError("cannot write " + path.string());
    return out;
}

}  // namespace detail

/// 17 significant digits: round-trips every double.
inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline Matrix parse_matrix(std::istream& in, const std::string& source) {
    std::vector<double> values;
    Eigen::Index rows = 0, cols = -1;
    std::string line;
    int line_no = 0;
    int blank_line = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty()) {
            if (blank_line == 0) blank_line = line_no;
            continue;
        }
        if (blank_line != 0)
            throw ParseError(source + ":" + std::to_string(blank_line) + ": blank line inside matrix");
        Eigen::Index count = 0;
        std::size_t pos = 0;
        while (true) {
            const auto comma = text.find(',', pos);
            const auto field = detail::trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
            double v = 0.0;
            const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
            if (field.empty() || ec != std::errc() || end != field.data() + field.size())
                throw ParseError(source + ":" + std::to_string(line_no) + ": invalid number '" +
                                 std::string(field) + "' in column " + std::to_string(count + 1));
            if (!std::isfinite(v))
                throw ParseError(source + ":" + std::to_string(line_no) + ": non-finite value");
            values.push_back(v);
            ++count;
            if (comma == std::string_view::npos) break;
            pos = comma + 1;
        }
        if (cols < 0) cols = count;
        if (count != cols)
            throw ParseError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                             " values, found " + std::to_string(count));
        ++rows;
    }
    if (rows == 0) throw ParseError(source + ": no data");
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), rows, cols);
}

inline Matrix read_matrix(const fs::path& path) {
    auto in = detail::open_in(path);
    return parse_matrix(in, path.string());
}

inline void write_matrix(std::ostream& out, const Matrix& m) {
    std::string line;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        line.clear();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) line += ',';
            line += format_number(m(i, j));
        }
        line += '\n';
        out << line;
    }
}

inline void write_matrix(const fs::path& path, const Matrix& m) {
    auto out = detail::open_out(path);
    write_matrix(out, m);
}

inline Labels parse_labels(std::istream& in, const std::string& source) {
    Labels labels;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto text = detail::trim(line);
        if (text.empty()) continue;
        int v = 0;
        const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
        if (ec != std::errc() || end != text.data() + text.size() || v < 0)
            throw ParseError(source + ":" + std::to_string(line_no) + ": invalid label '" + std::string(text) + "'");
        labels.push_back(v);
    }
    return labels;
}

inline Labels read_labels(const fs::path& path) {
    auto in = detail::open_in(path);
    return parse_labels(in, path.string());
}

inline void write_labels(const fs::path& path, const Labels& labels) {
    auto out = detail::open_out(path);
    for (int l : labels) out << l << '\n';
}

inline void write_json(const fs::path& path, const json& j) {
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline json read_json(const fs::path& path) {
    auto in = detail::open_in(path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

inline json to_json(const Hyperparams& hp) {
    return json{{"alpha", hp.alpha}, {"beta", hp.beta},     {"gamma", hp.gamma}, {"k", hp.k},
                {"mu0", hp.mu0},     {"mu_max", hp.mu_max}, {"eta", hp.eta},     {"eps", hp.eps},
                {"max_iter", hp.max_iter}, {"mode", to_string(hp.mode)}};
}

inline json report_json(const FitReport& report, const Hyperparams& hp, std::optional<std::uint64_t> seed) {
    json residuals = json::array();
    for (const auto& [r1, r2] : report.residual_history) residuals.push_back({r1, r2});
    json final_residuals = nullptr;
    if (!report.residual_history.empty())
        final_residuals = {{"r1", report.residual_history.back().first},
                           {"r2", report.residual_history.back().second}};
    return json{{"hyperparameters", to_json(hp)},
                {"seed", seed ? json(*seed) : json(nullptr)},
                {"iterations", report.iterations},
                {"converged", report.converged},
                {"final_residuals", final_residuals},
                {"residual_history", residuals},
                {"objective_history", report.objective_history},
                {"wall_time_seconds", report.wall_time_seconds}};
}

/// The persisted parts of a fit.
struct Model {
    Matrix Z, P, E, W;
    Vector theta;
};

inline void save_model(const fs::path& dir, const FitResult& fit, const json& report) {
    fs::create_directories(dir);
    write_matrix(dir / "Z.csv", fit.Z);
    write_matrix(dir / "P.csv", fit.P);
    write_matrix(dir / "E.csv", fit.E);
    write_matrix(dir / "W.csv", fit.W);
    write_matrix(dir / "theta.csv", Matrix(fit.theta));
    write_json(dir / "report.json", report);
}

inline Model load_model(const fs::path& dir) {
    Model m;
    m.Z = read_matrix(dir / "Z.csv");
    m.P = read_matrix(dir / "P.csv");
    m.E = read_matrix(dir / "E.csv");
    m.W = read_matrix(dir / "W.csv");
    const Matrix theta = read_matrix(dir / "theta.csv");
    const auto N = m.Z.rows(), n = m.P.rows();
    require(m.Z.cols() == N && m.W.rows() == N && m.W.cols() == N, "model Z/W shapes are inconsistent");
    require(m.P.cols() == n && m.E.rows() == n && m.E.cols() == N, "model P/E shapes are inconsistent");
    require(theta.rows() == N && theta.cols() == 1, "model theta must be an N x 1 column");
    m.theta = theta.col(0);
    return m;
}

}  // namespace rbdlr::io
