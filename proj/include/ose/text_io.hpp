#pragma once

// Plain-text matrix formats.
//
//   sparse:  "rows cols nnz" then one "row col value" triple per line
//   dense:   "rows cols" then one line of whitespace-separated values per row
//
// Indices are zero-based and values are written as the shortest decimal that
// round-trips to the same double.

#include "ose/dense.hpp"
#include "ose/errors.hpp"
#include "ose/sparse.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace ose {

inline std::string format_real(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_real(std::string_view s) {
    double x = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("expected a real number, got '" + std::string(s) + "'");
    return x;
}

template <class Int>
Int parse_integer(std::string_view s) {
    Int x{};
    auto res = std::from_chars(s.data(), s.data() + s.size(), x);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw ParseError("expected an integer, got '" + std::string(s) + "'");
    return x;
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

inline bool next_content_line(std::istream& in, std::string& line) {
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
}

} // namespace detail

inline void write_sparse(std::ostream& out, const SparseColMatrix& p) {
    out << p.rows() << ' ' << p.cols() << ' ' << p.nnz() << '\n';
    for (std::size_t j = 0; j < p.cols(); ++j)
        for (const auto& e : p.column(j)) out << e.row << ' ' << j << ' ' << format_real(e.value) << '\n';
}

inline SparseColMatrix read_sparse(std::istream& in) {
    std::string line;
    if (!detail::next_content_line(in, line)) throw ParseError("sparse matrix: missing header");
    auto head = detail::split_ws(line);
    if (head.size() != 3) throw ParseError("sparse matrix: header must be 'rows cols nnz'");
    const auto rows = parse_integer<std::size_t>(head[0]);
    const auto cols = parse_integer<std::size_t>(head[1]);
    const auto nnz = parse_integer<std::size_t>(head[2]);
    std::vector<std::vector<SparseEntry>> by_col(cols);
    for (std::size_t k = 0; k < nnz; ++k) {
        if (!detail::next_content_line(in, line)) throw ParseError("sparse matrix: fewer triples than nnz");
        auto tok = detail::split_ws(line);
        if (tok.size() != 3) throw ParseError("sparse matrix: expected 'row col value', got '" + line + "'");
        const auto r = parse_integer<std::size_t>(tok[0]);
        const auto c = parse_integer<std::size_t>(tok[1]);
        if (c >= cols) throw IndexOutOfRange("sparse matrix: column index " + tok[1] + " out of range");
        by_col[c].push_back({r, parse_real(tok[2])});
    }
    for (auto& col : by_col)
        std::stable_sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.row < b.row; });
    return SparseColMatrix::build(rows, cols, [&](std::size_t j, std::vector<SparseEntry>& out) {
        out.insert(out.end(), by_col[j].begin(), by_col[j].end());
    });
}

inline void write_dense(std::ostream& out, const DenseMatrix& a) {
    out << a.rows() << ' ' << a.cols() << '\n';
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
            if (c != 0) out << ' ';
            out << format_real(a(r, c));
        }
        out << '\n';
    }
}

inline DenseMatrix read_dense(std::istream& in) {
    std::string line;
    if (!detail::next_content_line(in, line)) throw ParseError("dense matrix: missing header");
    auto head = detail::split_ws(line);
    if (head.size() != 2) throw ParseError("dense matrix: header must be 'rows cols'");
    const auto rows = parse_integer<std::size_t>(head[0]);
    const auto cols = parse_integer<std::size_t>(head[1]);
    std::vector<double> values;
    values.reserve(rows * cols);
    std::string tok;
    while (values.size() < rows * cols && in >> tok) values.push_back(parse_real(tok));
    if (values.size() != rows * cols) throw ParseError("dense matrix: fewer values than rows*cols");
    return DenseMatrix(rows, cols, std::move(values));
}

template <class T, class Writer>
void save_file(const std::string& path, const T& value, Writer&& writer) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    writer(out, value);
    if (!out) throw IoError("write to '" + path + "' failed");
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

} // namespace ose
