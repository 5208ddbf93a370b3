#pragma once

#include "ose/errors.hpp"
#include "ose/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace ose {

struct SweepRecord {
    std::string family;
    std::size_t m = 0;
    std::size_t n = 0;
    std::size_t d = 0;
    double eps = 0.0;
    std::size_t s = 0;
    std::size_t trials = 0;
    std::size_t failures = 0;
    double delta_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t seed = 0;

    bool operator==(const SweepRecord&) const = default;
};

inline constexpr const char* kCsvHeader = "family,m,n,d,eps,s,trials,failures,delta_hat,ci_low,ci_high,seed";

inline void write_csv(std::ostream& out, const std::vector<SweepRecord>& records) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) {
        out << r.family << ',' << r.m << ',' << r.n << ',' << r.d << ',' << format_real(r.eps) << ',' << r.s << ','
            << r.trials << ',' << r.failures << ',' << format_real(r.delta_hat) << ',' << format_real(r.ci_low) << ','
            << format_real(r.ci_high) << ',' << r.seed << '\n';
    }
}

inline std::vector<SweepRecord> parse_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kCsvHeader) throw ParseError("csv: unexpected header '" + line + "'");
    std::vector<SweepRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 12) throw ParseError("csv line " + std::to_string(lineno) + ": expected 12 fields");
        SweepRecord r;
        r.family = f[0];
        r.m = parse_integer<std::size_t>(f[1]);
        r.n = parse_integer<std::size_t>(f[2]);
        r.d = parse_integer<std::size_t>(f[3]);
        r.eps = parse_real(f[4]);
        r.s = parse_integer<std::size_t>(f[5]);
        r.trials = parse_integer<std::size_t>(f[6]);
        r.failures = parse_integer<std::size_t>(f[7]);
        r.delta_hat = parse_real(f[8]);
        r.ci_low = parse_real(f[9]);
        r.ci_high = parse_real(f[10]);
        r.seed = parse_integer<std::uint64_t>(f[11]);
        out.push_back(std::move(r));
    }
    return out;
}

namespace detail {

inline std::string fixed2(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

} // namespace detail

/// Line chart of delta_hat against log₂ m, one polyline per family in order
/// of first appearance.
inline void write_svg(std::ostream& out, const std::vector<SweepRecord>& records) {
    constexpr double width = 640, height = 400, left = 60, right = 160, top = 20, bottom = 50;
    constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    std::vector<std::string> families;
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const auto& r : records) {
        if (std::find(families.begin(), families.end(), r.family) == families.end()) families.push_back(r.family);
        const double x = std::log2(static_cast<double>(std::max<std::size_t>(r.m, 1)));
        lo = first ? x : std::min(lo, x);
        hi = first ? x : std::max(hi, x);
        first = false;
    }
    if (hi - lo < 1e-9) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](std::size_t m) { return left + (std::log2(static_cast<double>(std::max<std::size_t>(m, 1))) - lo) / (hi - lo) * pw; };
    auto py = [&](double y) { return top + (1.0 - y) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
        << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">log2 m</text>\n";
    out << "<text x=\"15\" y=\"" << top + ph / 2 << "\" transform=\"rotate(-90 15 " << top + ph / 2
        << ")\" text-anchor=\"middle\">delta_hat</text>\n";
    out << "<text x=\"" << left - 5 << "\" y=\"" << py(0.0) << "\" text-anchor=\"end\">0</text>\n";
    out << "<text x=\"" << left - 5 << "\" y=\"" << py(1.0) + 10 << "\" text-anchor=\"end\">1</text>\n";
    out << "<text x=\"" << left << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << detail::fixed2(lo)
        << "</text>\n";
    out << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">" << detail::fixed2(hi)
        << "</text>\n";

    for (std::size_t f = 0; f < families.size(); ++f) {
        std::vector<const SweepRecord*> pts;
        for (const auto& r : records)
            if (r.family == families[f]) pts.push_back(&r);
        std::stable_sort(pts.begin(), pts.end(), [](auto* a, auto* b) { return a->m < b->m; });
        const char* colour = palette[f % std::size(palette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i)
            out << (i ? " " : "") << detail::fixed2(px(pts[i]->m)) << ',' << detail::fixed2(py(pts[i]->delta_hat));
        out << "\"/>\n";
        out << "<text x=\"" << left + pw + 10 << "\" y=\"" << top + 15 + 18 * static_cast<double>(f) << "\" fill=\""
            << colour << "\">" << families[f] << "</text>\n";
    }
    out << "</svg>\n";
}

struct ReportPaths {
    std::filesystem::path csv;
    std::filesystem::path svg;
};

/// Writes <dir>/<stem>.csv and <dir>/<stem>.svg.
inline ReportPaths emit_report(const std::vector<SweepRecord>& records, const std::filesystem::path& dir,
                               const std::string& stem = "sweep") {
    detail::require<InvalidArgument>(!records.empty(), "emit_report: no records");
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
    ReportPaths paths{dir / (stem + ".csv"), dir / (stem + ".svg")};
    save_file(paths.csv.string(), records, [](std::ostream& out, const auto& r) { write_csv(out, r); });
    save_file(paths.svg.string(), records, [](std::ostream& out, const auto& r) { write_svg(out, r); });
    return paths;
}

} // namespace ose
