#pragma once

#include "ose/errors.hpp"
#include "ose/sketches.hpp"
#include "ose/text_io.hpp"

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <vector>

namespace ose {

enum class InstanceKind { random_subspace, hard_mixture, hard_beta, hadamard_adversarial };

inline std::string to_string(InstanceKind k) {
    switch (k) {
    case InstanceKind::random_subspace: return "random_subspace";
    case InstanceKind::hard_mixture: return "hard_mixture";
    case InstanceKind::hard_beta: return "hard_beta";
    case InstanceKind::hadamard_adversarial: return "hadamard_adversarial";
    }
    return "?";
}

inline InstanceKind parse_instance_kind(const std::string& s) {
    if (s == "random_subspace") return InstanceKind::random_subspace;
    if (s == "hard_mixture") return InstanceKind::hard_mixture;
    if (s == "hard_beta") return InstanceKind::hard_beta;
    if (s == "hadamard_adversarial") return InstanceKind::hadamard_adversarial;
    throw ParseError("unknown instance kind '" + s + "'");
}

/// Which test subspaces a sweep draws.
struct InstanceSpec {
    InstanceKind kind = InstanceKind::random_subspace;
    unsigned ell = 0; // hard_beta only
};

struct SweepConfig {
    SketchFamily family = SketchFamily::count_sketch;
    std::size_t s = 1;             // osnap only
    std::size_t n = 0;
    std::size_t d = 0;
    double eps = 0.0;
    double delta = 0.1;
    std::vector<std::size_t> m_grid;
    InstanceSpec instance;
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    double gamma = 0.0;

    void validate() const {
        detail::require<InvalidArgument>(!m_grid.empty(), "config: m_grid must be nonempty");
        detail::require<InvalidArgument>(std::is_sorted(m_grid.begin(), m_grid.end()) &&
                                             std::adjacent_find(m_grid.begin(), m_grid.end()) == m_grid.end(),
                                         "config: m_grid must be strictly ascending");
        detail::require<InvalidArgument>(m_grid.front() >= 1, "config: m must be >= 1");
        detail::require<InvalidArgument>(trials >= 1, "config: trials must be >= 1");
        detail::require<InvalidArgument>(eps > 0.0 && eps < 1.0, "config: eps must be in (0, 1)");
        detail::require<InvalidArgument>(delta > 0.0 && delta < 1.0, "config: delta must be in (0, 1)");
        detail::require<InvalidArgument>(d >= 1 && n >= d, "config: need 1 <= d <= n");
        detail::require<InvalidArgument>(gamma >= 0.0 && gamma < 0.5, "config: gamma must be in [0, 1/2)");
        if (family == SketchFamily::osnap)
            detail::require<InvalidArgument>(s >= 1 && s <= m_grid.front(), "config: osnap needs 1 <= s <= min m");
        if (family == SketchFamily::hadamard_block) {
            const std::size_t b = hadamard_order(eps);
            detail::require<InvalidArgument>(b >= 2, "config: hadamard_block needs eps <= 1/16");
            for (std::size_t m : m_grid) {
                const std::size_t q = m / b;
                std::size_t r = 1;
                while (r * r < q) ++r;
                detail::require<InvalidArgument>(m % b == 0 && r * r == q,
                                                 "config: hadamard_block needs every m = d_block²·b");
            }
        }
    }
};

/// Parses comma- or whitespace-separated counts.
inline std::vector<std::size_t> parse_count_list(const std::string& text) {
    std::string t = text;
    std::replace(t.begin(), t.end(), ',', ' ');
    std::vector<std::size_t> out;
    for (const auto& tok : detail::split_ws(t)) out.push_back(parse_integer<std::size_t>(tok));
    return out;
}

inline SweepConfig config_from_key_values(const std::map<std::string, std::string>& kv) {
    static const char* const known[] = {"family", "s", "n", "d", "eps", "delta", "m_grid", "instance",
                                        "ell", "trials", "seed", "gamma"};
    for (const auto& [key, value] : kv)
        if (std::find(std::begin(known), std::end(known), key) == std::end(known))
            throw ParseError("config: unknown key '" + key + "'");
    auto need = [&](const char* key) -> const std::string& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError(std::string("config: missing '") + key + "'");
        return it->second;
    };
    auto opt = [&](const char* key) -> const std::string* {
        auto it = kv.find(key);
        return it == kv.end() ? nullptr : &it->second;
    };

    SweepConfig c;
    c.family = parse_family(need("family"));
    c.n = parse_integer<std::size_t>(need("n"));
    c.d = parse_integer<std::size_t>(need("d"));
    c.eps = parse_real(need("eps"));
    c.m_grid = parse_count_list(need("m_grid"));
    if (auto v = opt("s")) c.s = parse_integer<std::size_t>(*v);
    if (auto v = opt("delta")) c.delta = parse_real(*v);
    if (auto v = opt("instance")) c.instance.kind = parse_instance_kind(*v);
    if (auto v = opt("ell")) c.instance.ell = parse_integer<unsigned>(*v);
    if (auto v = opt("trials")) c.trials = parse_integer<std::size_t>(*v);
    if (auto v = opt("seed")) c.seed = parse_integer<std::uint64_t>(*v);
    if (auto v = opt("gamma")) c.gamma = parse_real(*v);
    if (c.family == SketchFamily::count_sketch) c.s = 1;
    c.validate();
    return c;
}

inline SweepConfig read_config(std::istream& in) { return config_from_key_values(read_key_values(in)); }

} // namespace ose
