#pragma once

// Sketch families: Count-Sketch, OSNAP, dense Rademacher, and the
// deterministic block-Hadamard counterexample.
//
// Every random family draws column j from its own counter-based stream keyed
// by (seed, j), so a single column can be regenerated without materializing
// the matrix. Harness trials rely on this to touch only the columns a hard
// instance selects.

#include "ose/errors.hpp"
#include "ose/random.hpp"
#include "ose/sparse.hpp"
#include "ose/text_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <unordered_set>
#include <vector>

namespace ose {

enum class SketchFamily { count_sketch, osnap, dense_rademacher, hadamard_block };

inline std::string to_string(SketchFamily f) {
    switch (f) {
    case SketchFamily::count_sketch: return "count_sketch";
    case SketchFamily::osnap: return "osnap";
    case SketchFamily::dense_rademacher: return "dense_rademacher";
    case SketchFamily::hadamard_block: return "hadamard_block";
    }
    return "?";
}

inline SketchFamily parse_family(const std::string& s) {
    if (s == "count_sketch") return SketchFamily::count_sketch;
    if (s == "osnap") return SketchFamily::osnap;
    if (s == "dense_rademacher") return SketchFamily::dense_rademacher;
    if (s == "hadamard_block") return SketchFamily::hadamard_block;
    throw ParseError("unknown sketch family '" + s + "'");
}

// ---------------------------------------------------------------------------
// Hadamard helpers

/// Largest power of two b with b ≤ 1/(8·eps).
inline std::size_t hadamard_order(double eps) {
    detail::require<InvalidArgument>(eps > 0.0 && std::isfinite(eps), "hadamard_order: eps must be positive");
    std::size_t b = 1;
    // 8·eps·(2b) ≤ 1, with a relative slack so that eps = 2^-k lands exactly.
    while (8.0 * eps * static_cast<double>(2 * b) <= 1.0 + 1e-12) b *= 2;
    return b;
}

/// Sylvester Hadamard entry: H[r][c] = (−1)^popcount(r & c).
constexpr int sylvester_entry(std::size_t r, std::size_t c) noexcept {
    return (std::popcount(r & c) & 1) != 0 ? -1 : 1;
}

/// Sylvester Hadamard matrix of order b (a power of two), row-major.
inline std::vector<int> sylvester_hadamard(std::size_t b) {
    detail::require<InvalidArgument>(b >= 1 && std::has_single_bit(b), "sylvester_hadamard: order must be a power of two");
    std::vector<int> h(b * b);
    for (std::size_t r = 0; r < b; ++r)
        for (std::size_t c = 0; c < b; ++c) h[r * b + c] = sylvester_entry(r, c);
    return h;
}

// ---------------------------------------------------------------------------
// Specs

struct SketchSpec {
    SketchFamily family = SketchFamily::count_sketch;
    std::size_t m = 1;
    std::size_t n = 1;
    std::size_t s = 1;
    double eps = 0.0;           // hadamard_block only
    std::size_t d_block = 1;    // hadamard_block only: m = d_block²·b
    std::uint64_t seed = 0;

    void validate() const {
        detail::require<InvalidArgument>(n >= 1, "SketchSpec: n must be >= 1");
        if (family == SketchFamily::hadamard_block) {
            if (!(eps > 0.0 && eps <= 0.125)) throw InvalidArgument("SketchSpec: hadamard_block needs eps in (0, 1/8]");
            const std::size_t b = hadamard_order(eps);
            if (b < 2) throw EpsTooLarge("hadamard_block: 1/(8·eps) < 2, no Hadamard block fits");
            detail::require<InvalidArgument>(d_block >= 1, "SketchSpec: d_block must be >= 1");
            detail::require<InvalidArgument>(m == d_block * d_block * b, "SketchSpec: hadamard_block needs m = d_block²·b");
            detail::require<InvalidArgument>(n % b == 0, "SketchSpec: hadamard_block needs n divisible by the block width");
            return;
        }
        detail::require<InvalidArgument>(m >= 1, "SketchSpec: m must be >= 1");
        if (family == SketchFamily::count_sketch) detail::require<InvalidArgument>(s == 1, "SketchSpec: count_sketch has s = 1");
        if (family == SketchFamily::dense_rademacher) detail::require<InvalidArgument>(s == m, "SketchSpec: dense_rademacher has s = m");
        detail::require<InvalidArgument>(s >= 1 && s <= m, "SketchSpec: need 1 <= s <= m");
    }

    static SketchSpec count_sketch(std::size_t m, std::size_t n, std::uint64_t seed) {
        return {SketchFamily::count_sketch, m, n, 1, 0.0, 1, seed};
    }
    static SketchSpec osnap(std::size_t m, std::size_t n, std::size_t s, std::uint64_t seed) {
        return {SketchFamily::osnap, m, n, s, 0.0, 1, seed};
    }
    static SketchSpec dense_rademacher(std::size_t m, std::size_t n, std::uint64_t seed) {
        return {SketchFamily::dense_rademacher, m, n, m, 0.0, 1, seed};
    }
    static SketchSpec hadamard_block(double eps, std::size_t n, std::size_t d_block) {
        const std::size_t b = hadamard_order(eps);
        return {SketchFamily::hadamard_block, d_block * d_block * b, n, b, eps, d_block, 0};
    }
};

/// key=value lines; '#' starts a comment.
inline std::map<std::string, std::string> read_key_values(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

inline void write_spec(std::ostream& out, const SketchSpec& spec) {
    out << "family=" << to_string(spec.family) << '\n'
        << "m=" << spec.m << '\n'
        << "n=" << spec.n << '\n'
        << "s=" << spec.s << '\n'
        << "eps=" << format_real(spec.eps) << '\n';
    if (spec.family == SketchFamily::hadamard_block) out << "d_block=" << spec.d_block << '\n';
    out << "seed=" << spec.seed << '\n';
}

inline SketchSpec spec_from_key_values(const std::map<std::string, std::string>& kv) {
    auto get = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };
    SketchSpec spec;
    const std::string* fam = get("family");
    if (!fam) throw ParseError("sketch spec: missing 'family'");
    spec.family = parse_family(*fam);
    if (auto v = get("n")) spec.n = parse_integer<std::size_t>(*v);
    else throw ParseError("sketch spec: missing 'n'");
    if (auto v = get("seed")) spec.seed = parse_integer<std::uint64_t>(*v);
    if (auto v = get("eps")) spec.eps = parse_real(*v);
    switch (spec.family) {
    case SketchFamily::hadamard_block: {
        spec.d_block = 1;
        if (auto v = get("d_block")) spec.d_block = parse_integer<std::size_t>(*v);
        if (!(spec.eps > 0.0)) throw ParseError("sketch spec: hadamard_block needs 'eps'");
        spec.s = hadamard_order(spec.eps);
        spec.m = spec.d_block * spec.d_block * spec.s;
        if (auto v = get("m"); v && parse_integer<std::size_t>(*v) != spec.m)
            throw ParseError("sketch spec: hadamard_block 'm' must equal d_block²·b = " + std::to_string(spec.m));
        break;
    }
    default:
        if (auto v = get("m")) spec.m = parse_integer<std::size_t>(*v);
        else throw ParseError("sketch spec: missing 'm'");
        if (spec.family == SketchFamily::count_sketch) spec.s = 1;
        else if (spec.family == SketchFamily::dense_rademacher) spec.s = spec.m;
        else if (auto v = get("s")) spec.s = parse_integer<std::size_t>(*v);
        else throw ParseError("sketch spec: osnap needs 's'");
    }
    spec.validate();
    return spec;
}

inline SketchSpec read_spec(std::istream& in) { return spec_from_key_values(read_key_values(in)); }

// ---------------------------------------------------------------------------
// Column generators

namespace detail {

inline void count_sketch_column(std::size_t m, std::uint64_t key, std::vector<SparseEntry>& out) {
    Rng rng(key);
    const std::size_t row = rng.uniform_index(m);
    out.push_back({row, static_cast<double>(rng.sign())});
}

/// s distinct rows by Floyd's sampling, then s signs, scaled by 1/√s. For
/// s = 1 the draw sequence coincides with count_sketch_column.
inline void osnap_column(std::size_t m, std::size_t s, std::uint64_t key, std::vector<SparseEntry>& out) {
    Rng rng(key);
    std::vector<std::size_t> rows;
    rows.reserve(s);
    if (s == m) {
        for (std::size_t r = 0; r < m; ++r) rows.push_back(r);
    } else {
        std::unordered_set<std::size_t> taken;
        taken.reserve(2 * s);
        for (std::size_t j = m - s; j < m; ++j) {
            const std::size_t t = rng.uniform_index(j + 1);
            const std::size_t pick = taken.contains(t) ? j : t;
            taken.insert(pick);
            rows.push_back(pick);
        }
        std::sort(rows.begin(), rows.end());
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(s));
    for (std::size_t r : rows) out.push_back({r, scale * rng.sign()});
}

inline void rademacher_column(std::size_t m, std::uint64_t key, std::vector<SparseEntry>& out) {
    Rng rng(key);
    const double scale = 1.0 / std::sqrt(static_cast<double>(m));
    std::uint64_t bits = 0;
    for (std::size_t r = 0; r < m; ++r) {
        if (r % 64 == 0) bits = rng.next_u64();
        out.push_back({r, ((bits >> (r % 64)) & 1U) != 0 ? -scale : scale});
    }
}

inline void hadamard_column(std::size_t m, std::size_t b, std::size_t j, std::vector<SparseEntry>& out) {
    const std::size_t base = j % m;
    const std::size_t block = base / b;
    const std::size_t c = base % b;
    const double scale = 1.0 / std::sqrt(static_cast<double>(b));
    for (std::size_t r = 0; r < b; ++r) out.push_back({block * b + r, scale * sylvester_entry(r, c)});
}

} // namespace detail

/// A sketch whose columns can be produced one at a time.
class ColumnSketch {
public:
    virtual ~ColumnSketch() = default;
    virtual std::size_t rows() const = 0;
    virtual std::size_t cols() const = 0;
    /// Appends column j's entries (sorted by row) to `out`.
    virtual void column(std::size_t j, std::vector<SparseEntry>& out) const = 0;
    /// Declared per-column nonzero count, reported in sweep records.
    virtual std::size_t sparsity() const = 0;
    virtual std::string name() const = 0;
};

/// The sketch described by a SketchSpec.
class SeededSketch final : public ColumnSketch {
public:
    explicit SeededSketch(SketchSpec spec) : spec_(spec) {
        spec_.validate();
        if (spec_.family == SketchFamily::hadamard_block) b_ = hadamard_order(spec_.eps);
    }

    const SketchSpec& spec() const noexcept { return spec_; }
    std::size_t rows() const override { return spec_.m; }
    std::size_t cols() const override { return spec_.n; }
    std::size_t sparsity() const override { return spec_.s; }
    std::string name() const override { return to_string(spec_.family); }

    void column(std::size_t j, std::vector<SparseEntry>& out) const override {
        const std::uint64_t key = derive_seed(spec_.seed, {stream::column, j});
        switch (spec_.family) {
        case SketchFamily::count_sketch: detail::count_sketch_column(spec_.m, key, out); break;
        case SketchFamily::osnap: detail::osnap_column(spec_.m, spec_.s, key, out); break;
        case SketchFamily::dense_rademacher: detail::rademacher_column(spec_.m, key, out); break;
        case SketchFamily::hadamard_block: detail::hadamard_column(spec_.m, b_, j, out); break;
        }
    }

private:
    SketchSpec spec_;
    std::size_t b_ = 0;
};

/// Adapts a materialized matrix to the column interface.
class MatrixColumns final : public ColumnSketch {
public:
    explicit MatrixColumns(SparseColMatrix p, std::string label = "matrix") : p_(std::move(p)), label_(std::move(label)) {
        for (std::size_t j = 0; j < p_.cols(); ++j) s_ = std::max(s_, p_.column(j).size());
    }
    std::size_t rows() const override { return p_.rows(); }
    std::size_t cols() const override { return p_.cols(); }
    std::size_t sparsity() const override { return s_; }
    std::string name() const override { return label_; }
    void column(std::size_t j, std::vector<SparseEntry>& out) const override {
        auto col = p_.column(j);
        out.insert(out.end(), col.begin(), col.end());
    }

private:
    SparseColMatrix p_;
    std::string label_;
    std::size_t s_ = 0;
};

inline SparseColMatrix materialize(const ColumnSketch& sk) {
    return SparseColMatrix::build(sk.rows(), sk.cols(),
                                  [&](std::size_t j, std::vector<SparseEntry>& out) { sk.column(j, out); });
}

inline SparseColMatrix sample_sketch(const SketchSpec& spec) { return materialize(SeededSketch(spec)); }

inline SparseColMatrix count_sketch(std::size_t m, std::size_t n, std::uint64_t seed) {
    return sample_sketch(SketchSpec::count_sketch(m, n, seed));
}

inline SparseColMatrix osnap(std::size_t m, std::size_t n, std::size_t s, std::uint64_t seed) {
    return sample_sketch(SketchSpec::osnap(m, n, s, seed));
}

inline SparseColMatrix dense_rademacher(std::size_t m, std::size_t n, std::uint64_t seed) {
    return sample_sketch(SketchSpec::dense_rademacher(m, n, seed));
}

/// Horizontal tiling of an m×m block-diagonal matrix whose b×b diagonal
/// blocks are H_b/√b (b the largest power of two ≤ 1/(8·eps), m = d_block²·b);
/// the last tile is truncated at n columns.
inline SparseColMatrix hadamard_block(double eps, std::size_t n, std::size_t d_block) {
    if (hadamard_order(eps) < 2) throw EpsTooLarge("hadamard_block: 1/(8·eps) < 2, no Hadamard block fits");
    return sample_sketch(SketchSpec::hadamard_block(eps, n, d_block));
}

struct SparsityProfile {
    std::size_t max_s = 0;
    std::vector<std::size_t> per_column;
};

inline SparsityProfile column_sparsity(const SparseColMatrix& p) {
    SparsityProfile out;
    out.per_column.resize(p.cols());
    for (std::size_t j = 0; j < p.cols(); ++j) {
        out.per_column[j] = p.column(j).size();
        out.max_s = std::max(out.max_s, out.per_column[j]);
    }
    return out;
}

/// Largest column sparsity the lower bound applies to: ⌊1/(9·eps)⌋.
inline std::size_t sparsity_budget(double eps) {
    detail::require<InvalidArgument>(eps > 0.0, "sparsity_budget: eps must be positive");
    return static_cast<std::size_t>(std::floor(1.0 / (9.0 * eps) + 1e-9));
}

inline bool check_sparsity_budget(const SparseColMatrix& p, double eps) {
    return column_sparsity(p).max_s <= sparsity_budget(eps);
}

} // namespace ose
