#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "prde/errors.hpp"
#include "prde/grid.hpp"
#include "prde/roughpath.hpp"

namespace prde {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double x) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

namespace detail {

/// Splits a CSV line into doubles. Columns are 1-based in errors.
inline std::vector<double> parse_row(std::string_view line, int line_no) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t end = line.find(',', pos);
        std::string_view cell = line.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        double v = 0.0;
        const char* first = cell.data();
        const char* last = cell.data() + cell.size();
        auto r = std::from_chars(first, last, v);
        if (cell.empty() || r.ec != std::errc() || r.ptr != last)
            throw ParseError("expected a number", line_no, static_cast<int>(pos) + 1);
        out.push_back(v);
        if (end == std::string_view::npos) break;
        pos = end + 1;
    }
    return out;
}

inline std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

/// Reads a header line and numeric rows of a fixed width.
inline std::pair<std::vector<std::string>, std::vector<std::vector<double>>> read_table(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file", 1, 1);
    line = strip_cr(line);
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    if (header.empty()) throw ParseError("missing header", 1, 1);
    std::vector<std::vector<double>> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto row = parse_row(line, line_no);
        if (row.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " columns, found " + std::to_string(row.size()),
                             line_no, 1);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows", line_no + 1, 1);
    return {std::move(header), std::move(rows)};
}

inline void write_row(std::ostream& out, const std::vector<double>& row) {
    for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) out << ',';
        out << format_double(row[k]);
    }
    out << '\n';
}

inline std::ifstream open_in(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw ParseError("cannot open " + p.string(), 0, 0);
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write " + p.string());
    return out;
}

}  // namespace detail

/// Header t,x1..xd followed by one row per grid point.
inline void write_path_csv(std::ostream& out, const GridPath& w) {
    const std::size_t d = dimension(w);
    out << 't';
    for (std::size_t k = 1; k <= d; ++k) out << ",x" << k;
    out << '\n';
    for (std::size_t i = 0; i < w.size(); ++i) {
        std::vector<double> row{w.time(i)};
        for (std::size_t k = 0; k < d; ++k) row.push_back(w[i](static_cast<Eigen::Index>(k)));
        detail::write_row(out, row);
    }
}

inline GridPath read_path_csv(std::istream& in) {
    auto [header, rows] = detail::read_table(in);
    if (header.size() < 2 || header[0] != "t") throw ParseError("header must be t,x1..xd", 1, 1);
    for (std::size_t k = 1; k < header.size(); ++k)
        if (header[k] != "x" + std::to_string(k)) throw ParseError("unexpected column name " + header[k], 1, 1);
    std::vector<double> t;
    std::vector<Vec> x;
    for (const auto& r : rows) {
        t.push_back(r[0]);
        x.push_back(Eigen::Map<const Vec>(r.data() + 1, static_cast<Eigen::Index>(r.size() - 1)));
    }
    try {
        return GridPath(Grid(std::move(t)), std::move(x));
    } catch (const ParameterError& e) {
        throw ParseError(e.what(), 2, 1);
    }
}

inline void write_path_csv(const std::filesystem::path& p, const GridPath& w) {
    auto out = detail::open_out(p);
    write_path_csv(out, w);
}

inline GridPath read_path_csv(const std::filesystem::path& p) {
    auto in = detail::open_in(p);
    return read_path_csv(in);
}

/// Rough path directory: manifest.json plus two step files. Row i of
/// level1.csv is t_i, the increment over [t_i, t_{i+1}] (x1..xn) and the
/// anchored value X_{0,t_{i+1}} (X1..Xn); level2.csv has the same layout for
/// the second level with row-major entries. The redundancy lets a file carry
/// an inconsistent Chen relation, which the loader reports.
struct RoughPathFile {
    RoughPath path;
    double chen_residual = 0.0;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::string level_header(std::size_t n, int level) {
    std::string h = "t";
    for (const char* tag : {"x", "X"}) {
        if (level == 1)
            for (std::size_t k = 1; k <= n; ++k) h += "," + std::string(tag) + std::to_string(k);
        else
            for (std::size_t a = 1; a <= n; ++a)
                for (std::size_t b = 1; b <= n; ++b) h += "," + std::string(tag) + std::to_string(a) + "_" + std::to_string(b);
    }
    return h;
}

inline void append(std::vector<double>& row, const Mat& m) {
    for (Eigen::Index a = 0; a < m.rows(); ++a)
        for (Eigen::Index b = 0; b < m.cols(); ++b) row.push_back(m(a, b));
}

inline Mat take(const std::vector<double>& row, std::size_t offset, Eigen::Index rows, Eigen::Index cols) {
    Mat m(rows, cols);
    for (Eigen::Index a = 0; a < rows; ++a)
        for (Eigen::Index b = 0; b < cols; ++b) m(a, b) = row[offset + static_cast<std::size_t>(a * cols + b)];
    return m;
}

}  // namespace detail

inline void write_rough_path(const std::filesystem::path& dir, const RoughPath& x) {
    std::filesystem::create_directories(dir);
    const auto n = static_cast<std::size_t>(x.dim());
    const std::string kind = x.omega().kind_name();
    if (kind != "interval-length" && kind != "variation-derived")
        throw ParameterError("only interval-length and variation-derived controls are serializable");
    nlohmann::ordered_json m;
    m["beta"] = x.beta();
    m["omega"] = kind;
    m["dim"] = n;
    m["steps"] = x.steps();
    m["horizon"] = x.grid().back();
    m["level1"] = "level1.csv";
    m["level2"] = "level2.csv";
    {
        auto out = detail::open_out(dir / "manifest.json");
        out << m.dump(2) << '\n';
    }
    auto l1 = detail::open_out(dir / "level1.csv");
    auto l2 = detail::open_out(dir / "level2.csv");
    l1 << detail::level_header(n, 1) << '\n';
    l2 << detail::level_header(n, 2) << '\n';
    const auto& a1 = x.anchored_first();
    const auto& a2 = x.anchored_second();
    for (std::size_t i = 0; i < x.steps(); ++i) {
        std::vector<double> r1{x.grid()[i]}, r2{x.grid()[i]};
        detail::append(r1, x.step_first(i));
        detail::append(r1, a1[i + 1]);
        detail::append(r2, x.step_second(i));
        detail::append(r2, a2[i + 1]);
        detail::write_row(l1, r1);
        detail::write_row(l2, r2);
    }
}

/// Loads a rough path directory. A Chen residual above chen_tol is reported
/// as a warning, not an error.
inline RoughPathFile read_rough_path(const std::filesystem::path& dir, double chen_tol = 1e-12) {
    nlohmann::json m;
    {
        auto in = detail::open_in(dir / "manifest.json");
        try {
            m = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("manifest: ") + e.what(), 1, static_cast<int>(e.byte));
        }
    }
    double beta = 0.0, horizon = 0.0;
    std::size_t n = 0, steps = 0;
    std::string kind, f1, f2;
    try {
        beta = m.at("beta").get<double>();
        kind = m.at("omega").get<std::string>();
        n = m.at("dim").get<std::size_t>();
        steps = m.at("steps").get<std::size_t>();
        horizon = m.at("horizon").get<double>();
        f1 = m.value("level1", std::string("level1.csv"));
        f2 = m.value("level2", std::string("level2.csv"));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what(), 1, 1);
    }
    if (kind != "interval-length" && kind != "variation-derived") throw ParseError("unknown control kind " + kind, 1, 1);
    auto in1 = detail::open_in(dir / f1);
    auto in2 = detail::open_in(dir / f2);
    auto [h1, r1] = detail::read_table(in1);
    auto [h2, r2] = detail::read_table(in2);
    if (h1.size() != 2 * n + 1) throw ParseError("level1.csv width does not match dim", 1, 1);
    if (h2.size() != 2 * n * n + 1) throw ParseError("level2.csv width does not match dim", 1, 1);
    if (r1.size() != steps) throw ParseError("level1.csv row count does not match steps", static_cast<int>(r1.size()) + 2, 1);
    if (r2.size() != steps) throw ParseError("level2.csv row count does not match steps", static_cast<int>(r2.size()) + 2, 1);
    const auto ni = static_cast<Eigen::Index>(n);
    std::vector<double> t;
    std::vector<Vec> s1, a1{Vec::Zero(ni)};
    std::vector<Mat> s2, a2{Mat::Zero(ni, ni)};
    for (std::size_t i = 0; i < steps; ++i) {
        if (r1[i][0] != r2[i][0]) throw ParseError("step times differ between level files", static_cast<int>(i) + 2, 1);
        t.push_back(r1[i][0]);
        s1.push_back(detail::take(r1[i], 1, ni, 1));
        a1.push_back(detail::take(r1[i], 1 + n, ni, 1));
        s2.push_back(detail::take(r2[i], 1, ni, ni));
        a2.push_back(detail::take(r2[i], 1 + n * n, ni, ni));
    }
    t.push_back(horizon);
    RoughPathFile out;
    try {
        out.path = RoughPath::from_parts(Grid(std::move(t)), std::move(s1), std::move(s2), std::move(a1), std::move(a2),
                                         beta, std::nullopt);
    } catch (const Error& e) {
        throw ParseError(e.what(), 2, 1);
    }
    if (kind == "variation-derived") out.path = out.path.with_omega(variation_derived_control(out.path));
    out.chen_residual = chen_check(out.path);
    if (out.chen_residual > chen_tol)
        out.warnings.push_back("Chen relation violated: residual " + format_double(out.chen_residual));
    return out;
}

}  // namespace prde
