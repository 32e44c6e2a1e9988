// csv.hpp - Minimal CSV reading/writing with exact floating-point round trips

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "polaroptics/errors.hpp"

namespace polaroptics::csv {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        auto cell = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
        while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
        cells.emplace_back(cell);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw DataError("missing column '" + std::string(name) + "'");
    }
    std::vector<double> values(std::size_t col) const {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(r.at(col));
        return v;
    }
};

// Reads a numeric CSV with one header line. Lines starting with '#' and blank
// lines are skipped. Throws DataError naming the path and line on bad input.
// With allow_nan, a literal "nan" cell is accepted (unresolved values).
inline Table read_table(std::istream& in, const std::string& origin, bool allow_nan = false) {
    Table t;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line == "\r" || line.front() == '#') continue;
        auto cells = split_line(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size()) {
            std::ostringstream msg;
            msg << origin << ":" << lineno << ": expected " << t.header.size() << " columns, got "
                << cells.size();
            throw DataError(msg.str());
        }
        std::vector<double> row(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const bool ok = parse_double(cells[i], row[i]) && (std::isfinite(row[i]) || (allow_nan && std::isnan(row[i])));
            if (!ok) {
                std::ostringstream msg;
                msg << origin << ":" << lineno << ": non-numeric value '" << cells[i] << "'";
                throw DataError(msg.str());
            }
        }
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw DataError(origin + ": empty file");
    if (t.rows.empty()) throw DataError(origin + ": no data rows");
    return t;
}

inline Table read_table(const std::string& path, bool allow_nan = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_table(in, path, allow_nan);
}

inline void write_row(std::ostream& out, const std::vector<double>& row) {
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ',';
        out << format_double(row[i]);
    }
    out << '\n';
}

inline void write_table(std::ostream& out, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
    for (const auto& r : rows) write_row(out, r);
}

inline void write_table(const std::string& path, const std::vector<std::string>& header,
                        const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_table(out, header, rows);
}

// Two-column data curve (abscissa strictly increasing).
struct Curve {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<std::string> warnings;
};

// Sorts by abscissa and averages rows with equal abscissa; both are reported
// as warnings.
inline Curve normalize_curve(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size()) throw DataError("curve columns differ in length");
    if (x.empty()) throw DataError("curve is empty");
    Curve c;
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (!std::is_sorted(x.begin(), x.end())) {
        c.warnings.push_back("rows were not sorted by abscissa; sorted");
    }
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
    std::size_t duplicates = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < order.size() && x[order[j]] == x[order[i]]) sum += y[order[j++]];
        if (j - i > 1) duplicates += j - i - 1;
        c.x.push_back(x[order[i]]);
        c.y.push_back(sum / static_cast<double>(j - i));
        i = j;
    }
    if (duplicates > 0)
        c.warnings.push_back(std::to_string(duplicates) + " duplicate abscissa rows averaged");
    return c;
}

// Reads the first two columns of a CSV into a validated curve.
inline Curve ingest_spectrum(const std::string& path) {
    const auto t = read_table(path);
    if (t.header.size() < 2) throw DataError(path + ": need at least two columns");
    return normalize_curve(t.values(0), t.values(1));
}

} // namespace polaroptics::csv
