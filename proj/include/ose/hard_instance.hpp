#pragma once

// Hard-instance distributions D_β (β = 2^-ell) and their mixture, stored in
// factored form U = V·W: V selects d·2^ell canonical basis vectors of ℝⁿ and
// W sums them in sign-randomized blocks of 2^ell, scaled by √β.

#include "ose/dense.hpp"
#include "ose/errors.hpp"
#include "ose/random.hpp"
#include "ose/sketches.hpp"
#include "ose/sparse.hpp"
#include "ose/text_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ose {

struct HardInstanceParams {
    std::size_t n = 1;
    std::size_t d = 1;
    unsigned ell = 0;
    std::uint64_t seed = 0;

    /// Number of columns of V, d/β.
    std::size_t width() const noexcept { return d << ell; }
    double beta() const noexcept { return std::ldexp(1.0, -static_cast<int>(ell)); }

    void validate() const {
        detail::require<InvalidArgument>(d >= 1, "HardInstanceParams: d must be >= 1");
        detail::require<InvalidArgument>(ell < 32, "HardInstanceParams: ell too large");
        detail::require<InvalidArgument>(n >= width(), "HardInstanceParams: need n >= d·2^ell");
    }
};

struct FactoredInstance {
    HardInstanceParams params;
    std::vector<std::size_t> v_indices;
    std::vector<int> sigma;

    void validate() const {
        params.validate();
        detail::require<LengthMismatch>(v_indices.size() == params.width() && sigma.size() == params.width(),
                                        "FactoredInstance: v_indices and sigma must have d·2^ell entries");
        for (std::size_t v : v_indices)
            detail::require<IndexOutOfRange>(v < params.n, "FactoredInstance: basis index out of range");
        for (int s : sigma) detail::require<InvalidArgument>(s == 1 || s == -1, "FactoredInstance: signs must be ±1");
    }
};

inline std::vector<std::size_t> sample_v(const HardInstanceParams& params) {
    params.validate();
    Rng rng = make_rng(params.seed, {stream::v_indices});
    std::vector<std::size_t> out(params.width());
    for (auto& v : out) v = rng.uniform_index(params.n);
    return out;
}

inline std::vector<int> sample_signs(std::size_t count, std::uint64_t seed) {
    Rng rng = make_rng(seed, {stream::signs});
    std::vector<int> out(count);
    for (auto& s : out) s = rng.sign();
    return out;
}

/// W ∈ ℝ^{(d·2^ell)×d}: column i is supported on rows i·2^ell … (i+1)·2^ell − 1
/// with values σ_j·√β.
inline DenseMatrix build_w(std::size_t d, unsigned ell, std::span<const int> sigma) {
    const std::size_t block = std::size_t{1} << ell;
    detail::require<LengthMismatch>(sigma.size() == d * block, "build_w: sigma length must be d·2^ell");
    const double scale = std::sqrt(std::ldexp(1.0, -static_cast<int>(ell)));
    DenseMatrix w(d * block, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = i * block; j < (i + 1) * block; ++j) w(j, i) = sigma[j] * scale;
    return w;
}

inline FactoredInstance sample_instance(const HardInstanceParams& params) {
    FactoredInstance inst;
    inst.params = params;
    inst.v_indices = sample_v(params);
    inst.sigma = sample_signs(params.width(), params.seed);
    return inst;
}

/// L = ⌊log₂(1/eps)⌋ − 3, the number of nontrivial mixture levels.
inline int mixture_levels(double eps) {
    detail::require<InvalidArgument>(eps > 0.0 && eps < 1.0, "mixture_levels: eps must be in (0, 1)");
    return static_cast<int>(std::floor(std::log2(1.0 / eps) + 1e-9)) - 3;
}

/// Draw from the mixture: ell = 0 with probability ½, otherwise ell uniform
/// on {1, …, L}.
inline FactoredInstance sample_mixture(std::size_t n, std::size_t d, double eps, std::uint64_t seed) {
    const int levels = mixture_levels(eps);
    if (levels < 1) throw EpsTooLarge("sample_mixture: eps too large, ⌊log₂(1/eps)⌋ − 3 < 1");
    Rng rng = make_rng(seed, {stream::mixture});
    unsigned ell = 0;
    if ((rng.next_u64() >> 63) != 0) ell = 1 + static_cast<unsigned>(rng.uniform_index(static_cast<std::uint64_t>(levels)));
    return sample_instance({n, d, ell, derive_seed(seed, {stream::instance})});
}

/// U = V·W as sparse columns (duplicate basis indices accumulate).
inline std::vector<std::vector<SparseEntry>> instance_columns(const FactoredInstance& inst) {
    const std::size_t block = std::size_t{1} << inst.params.ell;
    const double scale = std::sqrt(inst.params.beta());
    std::vector<std::vector<SparseEntry>> cols(inst.params.d);
    for (std::size_t i = 0; i < inst.params.d; ++i) {
        auto& col = cols[i];
        for (std::size_t j = i * block; j < (i + 1) * block; ++j) col.push_back({inst.v_indices[j], inst.sigma[j] * scale});
        std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.row < b.row; });
        std::vector<SparseEntry> merged;
        for (const auto& e : col) {
            if (!merged.empty() && merged.back().row == e.row) merged.back().value += e.value;
            else merged.push_back(e);
        }
        std::erase_if(merged, [](const auto& e) { return e.value == 0.0; });
        col = std::move(merged);
    }
    return cols;
}

inline DenseMatrix materialize_u(const FactoredInstance& inst) {
    DenseMatrix u(inst.params.n, inst.params.d);
    auto cols = instance_columns(inst);
    for (std::size_t i = 0; i < cols.size(); ++i)
        for (const auto& e : cols[i]) u(e.row, i) = e.value;
    return u;
}

/// ‖UᵀU − I‖_max ≤ tol.
inline bool is_isometry(const FactoredInstance& inst, double tol) {
    auto cols = instance_columns(inst);
    for (std::size_t a = 0; a < cols.size(); ++a)
        for (std::size_t b = a; b < cols.size(); ++b) {
            const double g = sparse_dot(cols[a], cols[b]);
            if (std::abs(g - (a == b ? 1.0 : 0.0)) > tol) return false;
        }
    return true;
}

struct IsometricDraw {
    FactoredInstance instance;
    std::size_t attempts = 0;
};

/// Rejection-samples D_β until U is an isometry. Attempt 0 is exactly
/// sample_instance(params); later attempts use seeds derived from params.seed.
inline IsometricDraw sample_isometric(const HardInstanceParams& params, std::size_t max_retries = 100) {
    detail::require<InvalidArgument>(max_retries >= 1, "sample_isometric: max_retries must be >= 1");
    for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
        HardInstanceParams p = params;
        if (attempt > 0) p.seed = derive_seed(params.seed, {stream::retry, attempt});
        FactoredInstance inst = sample_instance(p);
        if (is_isometry(inst, 1e-9)) return {std::move(inst), attempt + 1};
    }
    throw RetriesExhausted("sample_isometric: no isometric draw in " + std::to_string(max_retries) + " attempts");
}

/// ΠV, densified: column i is Π's column v_indices[i].
inline DenseMatrix sketch_times_v(const SparseColMatrix& p, std::span<const std::size_t> v_indices) {
    DenseMatrix out(p.rows(), v_indices.size());
    for (std::size_t i = 0; i < v_indices.size(); ++i) {
        if (v_indices[i] >= p.cols()) throw IndexOutOfRange("sketch_times_v: index " + std::to_string(v_indices[i]) + " >= n");
        for (const auto& e : p.column(v_indices[i])) out(e.row, i) = e.value;
    }
    return out;
}

inline DenseMatrix sketch_times_v(const ColumnSketch& sk, std::span<const std::size_t> v_indices) {
    DenseMatrix out(sk.rows(), v_indices.size());
    std::vector<SparseEntry> col;
    for (std::size_t i = 0; i < v_indices.size(); ++i) {
        if (v_indices[i] >= sk.cols()) throw IndexOutOfRange("sketch_times_v: index " + std::to_string(v_indices[i]) + " >= n");
        col.clear();
        sk.column(v_indices[i], col);
        for (const auto& e : col) out(e.row, i) = e.value;
    }
    return out;
}

/// (ΠV)·W in factored form: column i is √β·Σ_j σ_j (ΠV)_{*,j} over block i.
inline DenseMatrix apply_w(const DenseMatrix& pv, std::size_t d, unsigned ell, std::span<const int> sigma) {
    const std::size_t block = std::size_t{1} << ell;
    detail::require<LengthMismatch>(pv.cols() == d * block && sigma.size() == d * block,
                                    "apply_w: ΠV must have d·2^ell columns");
    const double scale = std::sqrt(std::ldexp(1.0, -static_cast<int>(ell)));
    DenseMatrix out(pv.rows(), d);
    for (std::size_t r = 0; r < pv.rows(); ++r) {
        auto src = pv.row(r);
        auto dst = out.row(r);
        for (std::size_t j = 0; j < src.size(); ++j) dst[j / block] += sigma[j] * scale * src[j];
    }
    return out;
}

inline void write_instance(std::ostream& out, const FactoredInstance& inst) {
    out << inst.params.n << ' ' << inst.params.d << ' ' << inst.params.ell << ' ' << inst.params.seed << '\n';
    for (std::size_t i = 0; i < inst.v_indices.size(); ++i) out << (i ? " " : "") << inst.v_indices[i];
    out << '\n';
    for (std::size_t i = 0; i < inst.sigma.size(); ++i) out << (i ? " " : "") << (inst.sigma[i] > 0 ? "+1" : "-1");
    out << '\n';
}

inline FactoredInstance read_instance(std::istream& in) {
    std::string line;
    if (!detail::next_content_line(in, line)) throw ParseError("instance: missing header");
    auto head = detail::split_ws(line);
    if (head.size() != 4) throw ParseError("instance: header must be 'n d ell seed'");
    FactoredInstance inst;
    inst.params = {parse_integer<std::size_t>(head[0]), parse_integer<std::size_t>(head[1]),
                   parse_integer<unsigned>(head[2]), parse_integer<std::uint64_t>(head[3])};
    if (!std::getline(in, line)) throw ParseError("instance: missing v_indices line");
    for (const auto& tok : detail::split_ws(line)) inst.v_indices.push_back(parse_integer<std::size_t>(tok));
    if (!std::getline(in, line)) throw ParseError("instance: missing sigma line");
    for (const auto& tok : detail::split_ws(line)) {
        if (tok == "+1" || tok == "1") inst.sigma.push_back(1);
        else if (tok == "-1") inst.sigma.push_back(-1);
        else throw ParseError("instance: sign must be ±1, got '" + tok + "'");
    }
    inst.validate();
    return inst;
}

} // namespace ose
