#pragma once

// Inner-product anticoncentration for finite multisets of vectors in the unit
// ball: the good-level search, the great-collision level search, and a checker
// for the "every small removal set" conclusion.
//
// All probabilities are over ORDERED pairs drawn with replacement, so the
// diagonal ⟨c,c⟩ counts. Logarithms are base 2. Families are processed as
// classes of bitwise-equal vectors with multiplicities; every count below is
// a multiset count, so this is exact, and families made of a few distinct
// vectors repeated thousands of times stay cheap.

#include "ose/errors.hpp"
#include "ose/random.hpp"
#include "ose/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ose {

/// Slack applied to every inner-product threshold comparison.
inline constexpr double kInnerProductTol = 1e-12;

inline bool meets_threshold(double inner, double threshold) noexcept { return inner >= threshold - kInnerProductTol; }

/// An ordered multiset of vectors of a common dimension, each of norm ≤ 1.
struct VectorFamily {
    std::size_t dim = 0;
    std::vector<std::vector<double>> vectors;

    std::size_t size() const noexcept { return vectors.size(); }

    void validate() const {
        for (const auto& v : vectors) {
            detail::require<DimensionMismatch>(v.size() == dim, "VectorFamily: vector of wrong dimension");
            double sq = 0.0;
            for (double x : v) {
                detail::require<InvalidArgument>(std::isfinite(x), "VectorFamily: non-finite coordinate");
                sq += x * x;
            }
            detail::require<InvalidArgument>(std::sqrt(sq) <= 1.0 + 1e-9, "VectorFamily: vector outside the unit ball");
        }
    }
};

/// ⌈log₂(1/kappa)⌉ for kappa ∈ (0, ½].
inline unsigned collision_levels(double kappa) {
    detail::require<InvalidArgument>(kappa > 0.0 && kappa <= 0.5, "kappa must be in (0, 1/2]");
    unsigned k = 0;
    while (std::ldexp(kappa, static_cast<int>(k)) < 1.0 - 1e-12) ++k;
    return k;
}

/// Inner-product threshold 2^ell·kappa − 2·kappa.
inline double level_threshold(unsigned ell, double kappa) noexcept {
    return std::ldexp(kappa, static_cast<int>(ell)) - 2.0 * kappa;
}

/// A family grouped into classes of identical vectors, with the class Gram
/// matrix. Class order follows first occurrence; `members[a]` lists the
/// original indices of class a in ascending order.
class GramFamily {
public:
    static GramFamily from_vectors(const VectorFamily& family) {
        family.validate();
        GramFamily out;
        std::map<std::vector<double>, std::size_t> index;
        std::vector<const std::vector<double>*> reps;
        for (std::size_t i = 0; i < family.size(); ++i) {
            auto [it, fresh] = index.try_emplace(family.vectors[i], out.members_.size());
            if (fresh) {
                out.members_.emplace_back();
                reps.push_back(&family.vectors[i]);
            }
            out.members_[it->second].push_back(i);
        }
        out.fill_gram([&](std::size_t a, std::size_t b) {
            double acc = 0.0;
            for (std::size_t t = 0; t < family.dim; ++t) acc += (*reps[a])[t] * (*reps[b])[t];
            return acc;
        });
        out.total_ = family.size();
        return out;
    }

    /// Family of sparse columns (each sorted by row).
    static GramFamily from_sparse(std::span<const std::vector<SparseEntry>> columns) {
        GramFamily out;
        std::map<std::vector<std::pair<std::size_t, double>>, std::size_t> index;
        std::vector<std::size_t> rep_of;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            std::vector<std::pair<std::size_t, double>> key;
            key.reserve(columns[i].size());
            for (const auto& e : columns[i]) key.emplace_back(e.row, e.value);
            auto [it, fresh] = index.try_emplace(std::move(key), out.members_.size());
            if (fresh) {
                out.members_.emplace_back();
                rep_of.push_back(i);
            }
            out.members_[it->second].push_back(i);
        }
        out.fill_gram([&](std::size_t a, std::size_t b) { return sparse_dot(columns[rep_of[a]], columns[rep_of[b]]); });
        out.total_ = columns.size();
        return out;
    }

    std::size_t size() const noexcept { return total_; }
    std::size_t classes() const noexcept { return members_.size(); }
    std::size_t multiplicity(std::size_t a) const noexcept { return members_[a].size(); }
    const std::vector<std::size_t>& members(std::size_t a) const noexcept { return members_[a]; }
    double inner(std::size_t a, std::size_t b) const noexcept { return gram_[a * members_.size() + b]; }

    /// adjacency[a·N + b] = 1 iff ⟨a,b⟩ meets `threshold`.
    std::vector<char> adjacency(double threshold) const {
        const std::size_t n = classes();
        std::vector<char> adj(n * n);
        for (std::size_t i = 0; i < adj.size(); ++i) adj[i] = meets_threshold(gram_[i], threshold) ? 1 : 0;
        return adj;
    }

private:
    template <class Ip>
    void fill_gram(Ip&& ip) {
        const std::size_t n = members_.size();
        gram_.assign(n * n, 0.0);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = a; b < n; ++b) gram_[a * n + b] = gram_[b * n + a] = ip(a, b);
    }

    std::vector<std::vector<std::size_t>> members_;
    std::vector<double> gram_;
    std::size_t total_ = 0;
};

// ---------------------------------------------------------------------------
// Pair probabilities and the good level

namespace detail {

/// Σ_b adj(a,b)·count_b for every class a.
inline std::vector<std::uint64_t> neighbour_counts(std::span<const char> adj, std::span<const std::uint64_t> count) {
    const std::size_t n = count.size();
    std::vector<std::uint64_t> nc(n, 0);
    for (std::size_t a = 0; a < n; ++a) {
        std::uint64_t acc = 0;
        for (std::size_t b = 0; b < n; ++b) acc += adj[a * n + b] ? count[b] : 0;
        nc[a] = acc;
    }
    return nc;
}

inline std::vector<std::uint64_t> multiplicities(const GramFamily& f) {
    std::vector<std::uint64_t> out(f.classes());
    for (std::size_t a = 0; a < out.size(); ++a) out[a] = f.multiplicity(a);
    return out;
}

inline std::uint64_t ordered_pairs(const GramFamily& f, double threshold) {
    const auto count = multiplicities(f);
    const auto nc = neighbour_counts(f.adjacency(threshold), count);
    std::uint64_t pairs = 0;
    for (std::size_t a = 0; a < count.size(); ++a) pairs += count[a] * nc[a];
    return pairs;
}

inline void require_small_enough(std::size_t total, unsigned levels) {
    // Products such as pairs·2^(ℓ+5)·K must stay inside 64 bits.
    require<InvalidArgument>(total < (std::size_t{1} << 20) && levels < 20,
                             "collision: family or level count too large for exact counting");
}

} // namespace detail

/// Fraction of ordered pairs (u, v), diagonal included, with ⟨u,v⟩ ≥ p.
inline double pair_probability(const GramFamily& family, double p) {
    detail::require<InvalidArgument>(family.size() >= 1, "pair_probability: empty family");
    const double total = static_cast<double>(family.size());
    return static_cast<double>(detail::ordered_pairs(family, p)) / (total * total);
}

inline double pair_probability(const VectorFamily& family, double p) {
    return pair_probability(GramFamily::from_vectors(family), p);
}

/// Smallest i ≤ K−1 (K = ⌈log₂(1/kappa)⌉) with
/// Pr[⟨u,v⟩ ≥ 2^i·kappa − 2·kappa] ≥ 2^(−i−2)/K. Such an i always exists;
/// LemmaViolated signals an implementation defect.
inline unsigned good_level(const GramFamily& family, double kappa) {
    detail::require<InvalidArgument>(family.size() >= 1, "good_level: empty family");
    const unsigned k = collision_levels(kappa);
    detail::require_small_enough(family.size(), k);
    const std::uint64_t total = family.size();
    for (unsigned i = 0; i < k; ++i) {
        const std::uint64_t pairs = detail::ordered_pairs(family, level_threshold(i, kappa));
        if (pairs * (std::uint64_t{1} << (i + 2)) * k >= total * total) return i;
    }
    throw LemmaViolated("good_level: no level satisfies the pair-probability bound");
}

inline unsigned good_level(const VectorFamily& family, double kappa) {
    return good_level(GramFamily::from_vectors(family), kappa);
}

// ---------------------------------------------------------------------------
// Great collision

enum class AdversaryKind { exhaustive, greedy };

enum class ReturnSite {
    /// The heaviest remaining vector has fewer than |S|/2^ℓ neighbours.
    neighbourhood_bound,
    /// |S|/(6K) heavy vectors were peeled off at this level.
    peeling_exhausted,
};

struct CollisionCertificate {
    unsigned ell = 0;
    double kappa = 0.5;
    unsigned levels = 1;            // K = ⌈log₂(1/kappa)⌉
    double threshold = 0.0;         // 2^ℓ·kappa − 2·kappa
    double heavy_fraction = 0.0;    // Pr_c[Pr_c'[⟨c,c'⟩ ≥ threshold] ≥ inner_bound], with nothing removed
    double inner_bound = 0.0;       // 1/(2^(ℓ+5)·K)
    double outer_bound = 0.0;       // 3/(31·K)
    ReturnSite site = ReturnSite::neighbourhood_bound;
    AdversaryKind adversary = AdversaryKind::exhaustive;
    std::size_t ground_size = 0;    // |S'_ℓ|
    std::size_t remaining_size = 0; // |S_j| at return
};

namespace detail {

/// Mutable multiset over the classes of a GramFamily. Removing a copy of a
/// class always removes its lowest remaining original index.
struct ClassMultiset {
    const GramFamily* family = nullptr;
    std::vector<std::uint64_t> count;

    explicit ClassMultiset(const GramFamily& f) : family(&f), count(multiplicities(f)) {}

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (auto c : count) t += c;
        return t;
    }
    /// Lowest original index still present in class a.
    std::size_t lowest_index(std::size_t a) const {
        const auto& mem = family->members(a);
        return mem[mem.size() - count[a]];
    }
};

/// #{c ∈ R : #{c' ∈ R : adj(c,c')} · scale ≥ bound} for the multiset R = count.
inline std::uint64_t heavy_count(std::span<const char> adj, std::span<const std::uint64_t> count, std::uint64_t scale,
                                 std::uint64_t bound) {
    const auto nc = neighbour_counts(adj, count);
    std::uint64_t heavy = 0;
    for (std::size_t a = 0; a < count.size(); ++a)
        if (count[a] > 0 && nc[a] * scale >= bound) heavy += count[a];
    return heavy;
}

/// Visits every class-count vector r with r ≤ available and Σr ≤ budget.
template <class Visit>
void for_each_removal(std::span<const std::uint64_t> available, std::uint64_t budget, Visit&& visit) {
    std::vector<std::uint64_t> r(available.size(), 0);
    auto rec = [&](auto&& self, std::size_t a, std::uint64_t left) -> void {
        if (a == available.size()) {
            visit(std::span<const std::uint64_t>(r));
            return;
        }
        const std::uint64_t top = std::min(available[a], left);
        for (std::uint64_t k = 0; k <= top; ++k) {
            r[a] = k;
            self(self, a + 1, left - k);
        }
        r[a] = 0;
    };
    rec(rec, 0, budget);
}

/// Greedy minimizer over removal sets: repeatedly removes the single copy that
/// lowers the objective most (ties by lowest original index), up to `budget`
/// copies. `after(rest, nc, x)` scores removing one more copy of class x, where
/// rest holds the surviving counts and nc the neighbour counts against rest.
/// With `stop_when_flat` the greedy stops once no removal helps; otherwise it
/// keeps going and reports every prefix to `on_step`.
template <class After, class OnStep>
std::vector<std::uint64_t> greedy_removal(const ClassMultiset& base, std::span<const char> adj, std::uint64_t budget,
                                          std::uint64_t current, After&& after, bool stop_when_flat,
                                          OnStep&& on_step) {
    const std::size_t n = base.count.size();
    std::vector<std::uint64_t> removal(n, 0);
    std::vector<std::uint64_t> rest = base.count;
    std::vector<std::uint64_t> nc = neighbour_counts(adj, rest);
    for (std::uint64_t step = 0; step < budget; ++step) {
        std::optional<std::size_t> best;
        std::uint64_t best_value = std::numeric_limits<std::uint64_t>::max();
        std::size_t best_index = std::numeric_limits<std::size_t>::max();
        for (std::size_t x = 0; x < n; ++x) {
            if (rest[x] == 0) continue;
            const std::uint64_t value = after(std::span<const std::uint64_t>(rest), std::span<const std::uint64_t>(nc), x);
            const auto& mem = base.family->members(x);
            const std::size_t idx = mem[mem.size() - rest[x]];
            if (value < best_value || (value == best_value && idx < best_index)) {
                best = x;
                best_value = value;
                best_index = idx;
            }
        }
        if (!best || (stop_when_flat && best_value >= current)) break;
        const std::size_t x = *best;
        ++removal[x];
        --rest[x];
        for (std::size_t a = 0; a < n; ++a) nc[a] -= adj[a * n + x] ? 1 : 0;
        current = best_value;
        on_step(std::span<const std::uint64_t>(removal));
    }
    return removal;
}

} // namespace detail

/// Fraction of c ∈ S whose Pr_{c'∼Unif(S)}[⟨c,c'⟩ ≥ threshold(ℓ)] reaches 1/(2^(ℓ+5)K).
inline double heavy_fraction(const GramFamily& family, double kappa, unsigned ell) {
    const unsigned k = collision_levels(kappa);
    const auto count = detail::multiplicities(family);
    const auto adj = family.adjacency(level_threshold(ell, kappa));
    const std::uint64_t heavy = detail::heavy_count(adj, count, (std::uint64_t{1} << (ell + 5)) * k, family.size());
    return static_cast<double>(heavy) / static_cast<double>(family.size());
}

/// Runs the great-collision level search. The removal set S''_ℓ is found by
/// exact enumeration when |S| ≤ adversary_cutoff and by a greedy surrogate
/// otherwise. Ties in the heaviest-vector choice go to the lowest index.
inline CollisionCertificate find_collision_level(const GramFamily& family, double kappa,
                                                 std::size_t adversary_cutoff = 12) {
    detail::require<InvalidArgument>(family.size() >= 1, "find_collision_level: empty family");
    const unsigned k = collision_levels(kappa);
    detail::require_small_enough(family.size(), k);
    const std::uint64_t total = family.size();
    const std::uint64_t budget = total / (32 * std::uint64_t{k});
    const AdversaryKind adversary = total <= adversary_cutoff ? AdversaryKind::exhaustive : AdversaryKind::greedy;

    detail::ClassMultiset alive(family);
    const std::size_t n = family.classes();

    for (unsigned ell = 0; ell <= k; ++ell) {
        const double threshold = level_threshold(ell, kappa);
        const auto adj = family.adjacency(threshold);
        const std::uint64_t ground_size = alive.total();

        // S''_ℓ: the removal minimizing the number of heavy survivors.
        const std::uint64_t inner_scale = (std::uint64_t{1} << (ell + 5)) * k;
        auto survivors_heavy = [&](std::span<const std::uint64_t> removal) {
            std::vector<std::uint64_t> rest(n);
            for (std::size_t a = 0; a < n; ++a) rest[a] = alive.count[a] - removal[a];
            return detail::heavy_count(adj, rest, inner_scale, total);
        };
        std::vector<std::uint64_t> removal(n, 0);
        if (adversary == AdversaryKind::exhaustive) {
            std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
            detail::for_each_removal(alive.count, budget, [&](std::span<const std::uint64_t> r) {
                const std::uint64_t v = survivors_heavy(r);
                if (v < best) {
                    best = v;
                    removal.assign(r.begin(), r.end());
                }
            });
        } else {
            // Heavy survivors once one more copy of x is gone; the bound stays |S|.
            auto after = [&](std::span<const std::uint64_t> rest, std::span<const std::uint64_t> nc, std::size_t x) {
                std::uint64_t heavy = 0;
                for (std::size_t a = 0; a < n; ++a) {
                    const std::uint64_t cnt = rest[a] - (a == x ? 1 : 0);
                    if (cnt > 0 && (nc[a] - (adj[a * n + x] ? 1 : 0)) * inner_scale >= total) heavy += cnt;
                }
                return heavy;
            };
            removal = detail::greedy_removal(alive, adj, budget, survivors_heavy(removal), after, true, [](auto) {});
        }
        for (std::size_t a = 0; a < n; ++a) alive.count[a] -= removal[a];

        auto certify = [&](ReturnSite site) {
            CollisionCertificate cert;
            cert.ell = ell;
            cert.kappa = kappa;
            cert.levels = k;
            cert.threshold = threshold;
            cert.heavy_fraction = heavy_fraction(family, kappa, ell);
            cert.inner_bound = 1.0 / (std::ldexp(1.0, static_cast<int>(ell) + 5) * k);
            cert.outer_bound = 3.0 / (31.0 * k);
            cert.site = site;
            cert.adversary = adversary;
            cert.ground_size = ground_size;
            cert.remaining_size = alive.total();
            return cert;
        };
        auto nc = detail::neighbour_counts(adj, alive.count);
        auto pairs = [&] {
            std::uint64_t p = 0;
            for (std::size_t a = 0; a < n; ++a) p += alive.count[a] * nc[a];
            return p;
        };
        std::uint64_t i = 1;
        while (i * 6 * k <= total && pairs() * (std::uint64_t{1} << (ell + 3)) * k >= total * total) {
            std::size_t c = n;
            for (std::size_t a = 0; a < n; ++a) {
                if (alive.count[a] == 0) continue;
                if (c == n || nc[a] > nc[c] || (nc[a] == nc[c] && alive.lowest_index(a) < alive.lowest_index(c))) c = a;
            }
            if ((nc[c] << ell) < total) {
                return certify(ReturnSite::neighbourhood_bound);
            }
            --alive.count[c];
            for (std::size_t a = 0; a < n; ++a) nc[a] -= adj[a * n + c] ? 1 : 0;
            ++i;
        }
        if (i * 6 * k > total) {
            return certify(ReturnSite::peeling_exhausted);
        }
    }
    if (adversary == AdversaryKind::greedy)
        throw NoLevelFound("find_collision_level: greedy removal surrogate left no returning level");
    throw LemmaViolated("find_collision_level: exact search ended without returning a level");
}

inline CollisionCertificate find_collision_level(const VectorFamily& family, double kappa,
                                                 std::size_t adversary_cutoff = 12) {
    return find_collision_level(GramFamily::from_vectors(family), kappa, adversary_cutoff);
}

/// Which removal sets S' the verifier tries.
struct AdversaryMode {
    enum class Kind { exhaustive, greedy_plus_random };
    Kind kind = Kind::exhaustive;
    std::size_t random_subsets = 0;
    std::uint64_t seed = 0;

    static AdversaryMode exhaustive() { return {}; }
    static AdversaryMode greedy_plus_random(std::size_t r, std::uint64_t seed = 0) {
        return {Kind::greedy_plus_random, r, seed};
    }
};

/// Checks, for every removal set S' the adversary produces (|S'| ≤ |S|/(32K)),
///   Pr_{c∼Unif(S)}[ Pr_{c'∼Unif(S∖S')}[⟨c,c'⟩ ≥ 2^ℓκ − 2κ] ≥ 1/(2^(ℓ+5)K) ] ≥ 3/(31K).
/// The outer draw ranges over all of S, removed members included.
inline bool verify_collision_level(const GramFamily& family, double kappa, unsigned ell, AdversaryMode mode) {
    detail::require<InvalidArgument>(family.size() >= 1, "verify_collision_level: empty family");
    const unsigned k = collision_levels(kappa);
    detail::require_small_enough(family.size(), k);
    const std::uint64_t total = family.size();
    const std::uint64_t budget = total / (32 * std::uint64_t{k});
    const std::size_t n = family.classes();
    const auto adj = family.adjacency(level_threshold(ell, kappa));
    const auto mult = detail::multiplicities(family);
    const std::uint64_t inner_scale = (std::uint64_t{1} << (ell + 5)) * k;

    // Number of c ∈ S that are heavy against S∖S'.
    auto good_outer = [&](std::span<const std::uint64_t> removal) {
        std::vector<std::uint64_t> rest(n);
        std::uint64_t remaining = 0;
        for (std::size_t a = 0; a < n; ++a) {
            rest[a] = mult[a] - removal[a];
            remaining += rest[a];
        }
        const auto nc = detail::neighbour_counts(adj, rest);
        std::uint64_t good = 0;
        for (std::size_t a = 0; a < n; ++a)
            if (nc[a] * inner_scale >= remaining) good += mult[a];
        return good;
    };
    auto passes = [&](std::span<const std::uint64_t> removal) { return good_outer(removal) * 31 * k >= 3 * total; };

    bool ok = true;
    if (mode.kind == AdversaryMode::Kind::exhaustive) {
        detail::for_each_removal(mult, budget, [&](std::span<const std::uint64_t> r) {
            if (ok && !passes(r)) ok = false;
        });
        return ok;
    }

    const std::vector<std::uint64_t> none(n, 0);
    ok = passes(none);
    detail::ClassMultiset base(family);
    // Outer count once one more copy of x is gone; removed members still count.
    auto after = [&](std::span<const std::uint64_t> rest, std::span<const std::uint64_t> nc, std::size_t x) {
        std::uint64_t remaining = 0;
        for (auto c : rest) remaining += c;
        --remaining;
        std::uint64_t good = 0;
        for (std::size_t a = 0; a < n; ++a)
            if ((nc[a] - (adj[a * n + x] ? 1 : 0)) * inner_scale >= remaining) good += mult[a];
        return good;
    };
    detail::greedy_removal(base, adj, budget, good_outer(none), after, false, [&](std::span<const std::uint64_t> r) {
        if (ok && !passes(r)) ok = false;
    });
    if (budget > 0) {
        Rng rng(derive_seed(mode.seed, {stream::family, total, ell}));
        std::vector<std::size_t> class_of(total);
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t idx : family.members(a)) class_of[idx] = a;
        for (std::size_t t = 0; t < mode.random_subsets && ok; ++t) {
            const std::uint64_t size = 1 + rng.uniform_index(budget);
            std::vector<std::size_t> perm(total);
            for (std::size_t i = 0; i < total; ++i) perm[i] = i;
            std::vector<std::uint64_t> r(n, 0);
            for (std::uint64_t i = 0; i < size; ++i) {
                const std::size_t j = i + rng.uniform_index(total - i);
                std::swap(perm[i], perm[j]);
                ++r[class_of[perm[i]]];
            }
            if (!passes(r)) ok = false;
        }
    }
    return ok;
}

inline bool verify_collision_level(const VectorFamily& family, double kappa, unsigned ell, AdversaryMode mode) {
    return verify_collision_level(GramFamily::from_vectors(family), kappa, ell, mode);
}

} // namespace ose
