#pragma once

#include "ose/collision.hpp"
#include "ose/errors.hpp"
#include "ose/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace ose {

namespace detail {

inline std::vector<double> random_direction(Rng& rng, std::size_t dim) {
    std::vector<double> v(dim);
    double sq = 0.0;
    while (sq < 1e-24) {
        sq = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            sq += x * x;
        }
    }
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x *= inv;
    return v;
}

inline void clamp_to_ball(std::vector<double>& v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    if (sq > 1.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& x : v) x *= inv;
    }
}

} // namespace detail

/// Random multiset in the unit ball, drawn from one of several shapes:
/// scattered points, signed copies of a few centres, noisy clusters,
/// signed basis vectors, and sparse sign vectors.
inline VectorFamily random_family(Rng& rng, std::size_t size, std::size_t dim) {
    detail::require<InvalidArgument>(dim >= 1, "random_family: dim must be >= 1");
    VectorFamily f;
    f.dim = dim;
    f.vectors.reserve(size);
    const auto shape = rng.uniform_index(5);
    const std::size_t centres = 1 + rng.uniform_index(3);
    std::vector<std::vector<double>> base;
    for (std::size_t c = 0; c < centres; ++c) base.push_back(detail::random_direction(rng, dim));
    for (std::size_t i = 0; i < size; ++i) {
        std::vector<double> v;
        switch (shape) {
        case 0: {
            v = detail::random_direction(rng, dim);
            const double r = rng.uniform01();
            for (auto& x : v) x *= r;
            break;
        }
        case 1: {
            v = base[rng.uniform_index(centres)];
            const int sgn = rng.sign();
            for (auto& x : v) x *= sgn;
            break;
        }
        case 2: {
            v = base[rng.uniform_index(centres)];
            for (auto& x : v) x += 0.2 * rng.normal() / std::sqrt(static_cast<double>(dim));
            detail::clamp_to_ball(v);
            break;
        }
        case 3: {
            v.assign(dim, 0.0);
            v[rng.uniform_index(dim)] = rng.sign();
            break;
        }
        default: {
            v.assign(dim, 0.0);
            const std::size_t t = 1 + rng.uniform_index(dim);
            const double scale = 1.0 / std::sqrt(static_cast<double>(t));
            for (std::size_t k = 0; k < t; ++k) v[rng.uniform_index(dim)] = rng.sign() * scale;
            detail::clamp_to_ball(v);
            break;
        }
        }
        f.vectors.push_back(std::move(v));
    }
    return f;
}

/// Hand-built edge cases: equal vectors, orthonormal sets, ± pairs, zeros.
inline std::vector<VectorFamily> degenerate_families() {
    std::vector<VectorFamily> out;
    auto unit = [](std::size_t dim, std::size_t i, double sign = 1.0) {
        std::vector<double> v(dim, 0.0);
        v[i] = sign;
        return v;
    };
    for (std::size_t size : {1, 2, 5, 12}) {
        VectorFamily same{3, {}};
        for (std::size_t i = 0; i < size; ++i) same.vectors.push_back(unit(3, 0));
        out.push_back(same);
    }
    for (std::size_t dim : {2, 8, 12}) {
        VectorFamily ortho{dim, {}};
        for (std::size_t i = 0; i < dim; ++i) ortho.vectors.push_back(unit(dim, i));
        out.push_back(ortho);
    }
    for (std::size_t pairs : {1, 3, 6}) {
        VectorFamily pm{pairs, {}};
        for (std::size_t i = 0; i < pairs; ++i) {
            pm.vectors.push_back(unit(pairs, i));
            pm.vectors.push_back(unit(pairs, i, -1.0));
        }
        out.push_back(pm);
    }
    out.push_back(VectorFamily{4, std::vector<std::vector<double>>(6, std::vector<double>(4, 0.0))});
    return out;
}

struct LemmaTally {
    std::size_t passed = 0;
    std::size_t total = 0;
    bool all() const noexcept { return passed == total; }
};

struct LemmaReport {
    LemmaTally good_level;
    LemmaTally great_collision;  // exhaustive adversary
    LemmaTally degenerate;
    LemmaTally greedy;           // informational
    /// Every exhaustive tier passed; the greedy tier does not count.
    bool ok() const noexcept { return good_level.all() && great_collision.all() && degenerate.all(); }
};

struct LemmaBatch {
    std::uint64_t seed = 0;
    std::size_t families = 500;
    std::size_t min_size = 2;
    std::size_t max_size = 12;
    std::size_t max_dim = 16;
    std::vector<double> kappas{0.5, 0.25, 0.125};
    std::size_t greedy_families = 20;
    std::size_t greedy_size = 64;
    std::size_t greedy_random_subsets = 16;
};

namespace detail {

/// good_level must return; the collision level must verify exhaustively.
inline void check_family(const VectorFamily& f, double kappa, std::size_t cutoff, LemmaTally& good,
                         LemmaTally& collision) {
    const GramFamily g = GramFamily::from_vectors(f);
    ++good.total;
    try {
        (void)good_level(g, kappa);
        ++good.passed;
    } catch (const LemmaViolated&) {
    }
    ++collision.total;
    try {
        const auto cert = find_collision_level(g, kappa, cutoff);
        if (cert.ell <= collision_levels(kappa) &&
            verify_collision_level(g, kappa, cert.ell, AdversaryMode::exhaustive()))
            ++collision.passed;
    } catch (const LemmaViolated&) {
    }
}

} // namespace detail

/// Batch check of the good-level and great-collision statements on random
/// and degenerate families. Exhaustive verification is used up to max_size.
inline LemmaReport verify_lemmas(const LemmaBatch& batch) {
    detail::require<InvalidArgument>(batch.max_size <= 16, "verify_lemmas: exhaustive tier needs max_size <= 16");
    detail::require<InvalidArgument>(batch.min_size >= 1 && batch.min_size <= batch.max_size,
                                     "verify_lemmas: need 1 <= min_size <= max_size");
    detail::require<InvalidArgument>(!batch.kappas.empty(), "verify_lemmas: no kappa values");
    LemmaReport report;
    Rng rng = make_rng(batch.seed, {stream::family});
    for (std::size_t i = 0; i < batch.families; ++i) {
        const std::size_t size = batch.min_size + rng.uniform_index(batch.max_size - batch.min_size + 1);
        const std::size_t dim = 1 + rng.uniform_index(batch.max_dim);
        const double kappa = batch.kappas[rng.uniform_index(batch.kappas.size())];
        detail::check_family(random_family(rng, size, dim), kappa, batch.max_size, report.good_level,
                             report.great_collision);
    }
    for (const auto& f : degenerate_families())
        for (double kappa : batch.kappas) {
            LemmaTally good, collision;
            detail::check_family(f, kappa, batch.max_size, good, collision);
            ++report.degenerate.total;
            if (good.all() && collision.all()) ++report.degenerate.passed;
        }
    for (std::size_t i = 0; i < batch.greedy_families; ++i) {
        const std::size_t dim = 1 + rng.uniform_index(batch.max_dim);
        const double kappa = batch.kappas[rng.uniform_index(batch.kappas.size())];
        const GramFamily g = GramFamily::from_vectors(random_family(rng, batch.greedy_size, dim));
        ++report.greedy.total;
        try {
            const auto cert = find_collision_level(g, kappa, batch.max_size);
            if (verify_collision_level(
                    g, kappa, cert.ell,
                    AdversaryMode::greedy_plus_random(batch.greedy_random_subsets, derive_seed(batch.seed, {i}))))
                ++report.greedy.passed;
        } catch (const Error&) {
        }
    }
    return report;
}

} // namespace ose
