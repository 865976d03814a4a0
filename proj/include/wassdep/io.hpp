#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "wassdep/linalg.hpp"

namespace wassdep {

namespace detail {

inline std::vector<std::string> split_fields(const std::string& line, bool comma_only) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        const bool sep = comma_only ? (ch == ',') : (ch == ',' || ch == ' ' || ch == '\t');
        if (sep) {
            if (comma_only || !cur.empty()) out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    if (comma_only || !cur.empty()) out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& tok, const std::string& where) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(where + ": cannot parse '" + tok + "' as a number");
    }
}

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace detail

/// Reads a headerless whitespace-or-comma-delimited square grid of numbers.
inline Matrix read_matrix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open matrix file '" + path + "'");
    std::vector<std::vector<double>> rows;
    std::string line;
    for (int lineno = 1; std::getline(in, line); ++lineno) {
        const auto fields = detail::split_fields(line, /*comma_only=*/false);
        if (fields.empty()) continue;
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields)
            row.push_back(detail::parse_double(f, path + ":" + std::to_string(lineno)));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": empty matrix file");
    const std::size_t d = rows.size();
    Matrix m(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
        if (rows[i].size() != d)
            throw ParseError(path + ": row " + std::to_string(i + 1) + " has " +
                             std::to_string(rows[i].size()) + " entries, expected " +
                             std::to_string(d));
        for (std::size_t j = 0; j < d; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

/// Validates symmetry of a parsed matrix, reporting the first violation.
inline SymMatrix require_symmetric(const Matrix& m, const std::string& origin) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = i + 1; j < m.cols(); ++j)
            if (std::abs(m(i, j) - m(j, i)) > 1e-12 * (1.0 + std::abs(m(i, j))))
                throw DomainError(origin + ": symmetry violated at (" + std::to_string(i + 1) +
                                  "," + std::to_string(j + 1) + "): " +
                                  detail::format_full(m(i, j)) + " vs " +
                                  detail::format_full(m(j, i)));
    return SymMatrix(m);
}

/// Writes a matrix as a headerless space-delimited grid with 17 significant
/// digits, enough to round-trip doubles exactly.
inline void write_matrix(std::ostream& out, const Matrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j > 0) out << ' ';
            out << detail::format_full(m(i, j));
        }
        out << '\n';
    }
}

inline void write_matrix_file(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    write_matrix(out, m);
}

struct CsvData {
    std::vector<std::string> header;
    Matrix values;
};

/// Reads a comma-delimited data file with a mandatory header row; every data
/// row must hold exactly one number per column.
inline CsvData read_data_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path + ": empty file, header row expected");
    CsvData data;
    data.header = detail::split_fields(line, /*comma_only=*/true);
    if (data.header.empty()) throw ParseError(path + ": header row has no columns");
    const std::size_t d = data.header.size();

    std::vector<std::vector<double>> rows;
    for (int lineno = 2; std::getline(in, line); ++lineno) {
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_fields(line, /*comma_only=*/true);
        if (fields.size() != d)
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(d) + " fields, got " + std::to_string(fields.size()));
        std::vector<double> row;
        row.reserve(d);
        for (const auto& f : fields)
            row.push_back(detail::parse_double(f, path + ":" + std::to_string(lineno)));
        rows.push_back(std::move(row));
    }
    data.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j)
            data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return data;
}

inline void write_data_csv(const std::string& path, const std::vector<std::string>& header,
                           const Matrix& values) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j > 0) out << ',';
        out << header[j];
    }
    out << '\n';
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            if (j > 0) out << ',';
            out << detail::format_full(values(i, j));
        }
        out << '\n';
    }
}

} // namespace wassdep
