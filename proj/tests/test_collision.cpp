#include "ose/collision.hpp"
#include "ose/errors.hpp"
#include "ose/harness/lemmas.hpp"
#include "ose/random.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <optional>
#include <vector>

using namespace ose;

namespace {

// Index-level oracles: no class grouping, every vector handled by its own index.

double raw_dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t t = 0; t < a.size(); ++t) acc += a[t] * b[t];
    return acc;
}

bool adjacent(const VectorFamily& f, std::size_t i, std::size_t j, double thr) {
    return raw_dot(f.vectors[i], f.vectors[j]) >= thr - 1e-12;
}

double oracle_pair_probability(const VectorFamily& f, double p) {
    const std::size_t n = f.size();
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) hits += adjacent(f, i, j, p);
    return static_cast<double>(hits) / static_cast<double>(n * n);
}

unsigned oracle_levels(double kappa) {
    unsigned k = 0;
    double x = kappa;
    while (x < 1.0 - 1e-12) {
        x *= 2;
        ++k;
    }
    return k;
}

double oracle_threshold(unsigned ell, double kappa) { return std::pow(2.0, ell) * kappa - 2 * kappa; }

std::optional<unsigned> oracle_good_level(const VectorFamily& f, double kappa) {
    const unsigned k = oracle_levels(kappa);
    for (unsigned i = 0; i < k; ++i)
        if (oracle_pair_probability(f, oracle_threshold(i, kappa)) >= std::pow(2.0, -double(i) - 2) / k) return i;
    return std::nullopt;
}

// Calls visit(removed) for every index subset of size ≤ budget.
template <class Visit>
void for_each_subset(std::size_t n, std::size_t budget, Visit&& visit) {
    std::vector<char> removed(n, 0);
    auto rec = [&](auto&& self, std::size_t start, std::size_t left) -> void {
        visit(removed);
        if (left == 0) return;
        for (std::size_t i = start; i < n; ++i) {
            removed[i] = 1;
            self(self, i + 1, left - 1);
            removed[i] = 0;
        }
    };
    rec(rec, 0, budget);
}

bool oracle_verify(const VectorFamily& f, double kappa, unsigned ell) {
    const std::size_t n = f.size();
    const unsigned k = oracle_levels(kappa);
    const std::size_t budget = n / (32 * k);
    const double thr = oracle_threshold(ell, kappa);
    const double inner_bound = 1.0 / (std::pow(2.0, ell + 5) * k);
    const double outer_bound = 3.0 / (31.0 * k);
    bool ok = true;
    for_each_subset(n, budget, [&](const std::vector<char>& removed) {
        std::size_t remaining = 0;
        for (char r : removed) remaining += !r;
        std::size_t good = 0;
        for (std::size_t c = 0; c < n; ++c) {
            std::size_t hits = 0;
            for (std::size_t c2 = 0; c2 < n; ++c2) hits += !removed[c2] && adjacent(f, c, c2, thr);
            if (static_cast<double>(hits) / static_cast<double>(remaining) >= inner_bound) ++good;
        }
        if (static_cast<double>(good) / static_cast<double>(n) < outer_bound) ok = false;
    });
    return ok;
}

struct OracleLevel {
    unsigned ell;
    ReturnSite site;
};

// Literal level search for families with an empty removal budget.
std::optional<OracleLevel> oracle_find_level(const VectorFamily& f, double kappa) {
    const std::size_t n = f.size();
    const unsigned k = oracle_levels(kappa);
    std::vector<char> alive(n, 1);
    for (unsigned ell = 0; ell <= k; ++ell) {
        const double thr = oracle_threshold(ell, kappa);
        auto neighbours = [&](std::size_t c) {
            std::size_t cnt = 0;
            for (std::size_t j = 0; j < n; ++j) cnt += alive[j] && adjacent(f, c, j, thr);
            return cnt;
        };
        auto pair_fraction = [&] {
            std::size_t p = 0;
            for (std::size_t c = 0; c < n; ++c)
                if (alive[c]) p += neighbours(c);
            return static_cast<double>(p) / static_cast<double>(n * n);
        };
        std::size_t i = 1;
        while (static_cast<double>(i) <= static_cast<double>(n) / (6.0 * k) &&
               pair_fraction() >= 1.0 / (std::pow(2.0, ell + 3) * k)) {
            std::size_t best = n, best_nc = 0;
            for (std::size_t c = 0; c < n; ++c) {
                if (!alive[c]) continue;
                const std::size_t nc = neighbours(c);
                if (best == n || nc > best_nc) {
                    best = c;
                    best_nc = nc;
                }
            }
            if (static_cast<double>(best_nc) < static_cast<double>(n) / std::pow(2.0, ell))
                return OracleLevel{ell, ReturnSite::neighbourhood_bound};
            alive[best] = 0;
            ++i;
        }
        if (static_cast<double>(i) > static_cast<double>(n) / (6.0 * k)) return OracleLevel{ell, ReturnSite::peeling_exhausted};
    }
    return std::nullopt;
}

std::vector<double> unit(std::size_t dim, std::size_t i, double sign = 1.0) {
    std::vector<double> v(dim, 0.0);
    v[i] = sign;
    return v;
}

VectorFamily copies(std::size_t count, const std::vector<double>& v) {
    return VectorFamily{v.size(), std::vector<std::vector<double>>(count, v)};
}

} // namespace

TEST(CollisionLevels, CeilLogTwo) {
    EXPECT_EQ(collision_levels(0.5), 1u);
    EXPECT_EQ(collision_levels(0.25), 2u);
    EXPECT_EQ(collision_levels(0.3), 2u);
    EXPECT_EQ(collision_levels(0.125), 3u);
    EXPECT_EQ(collision_levels(0.1), 4u);
    EXPECT_THROW(collision_levels(0.6), InvalidArgument);
    EXPECT_THROW(collision_levels(0.0), InvalidArgument);
    EXPECT_DOUBLE_EQ(level_threshold(0, 0.25), -0.25);
    EXPECT_DOUBLE_EQ(level_threshold(3, 0.25), 1.5);
}

TEST(GramFamily, ClassesFollowFirstOccurrence) {
    VectorFamily f{2, {unit(2, 1), unit(2, 0), unit(2, 1), unit(2, 1, -1.0)}};
    const auto g = GramFamily::from_vectors(f);
    EXPECT_EQ(g.size(), 4u);
    ASSERT_EQ(g.classes(), 3u);
    EXPECT_EQ(g.members(0), (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(g.members(1), (std::vector<std::size_t>{1}));
    EXPECT_DOUBLE_EQ(g.inner(0, 2), -1.0);
    EXPECT_DOUBLE_EQ(g.inner(0, 1), 0.0);
}

TEST(GramFamily, SparseAndDenseAgree) {
    const std::vector<std::vector<SparseEntry>> cols{{{0, 0.5}, {3, -0.5}}, {{1, 1.0}}, {{0, 0.5}, {3, -0.5}}};
    VectorFamily dense{4, {{0.5, 0, 0, -0.5}, {0, 1, 0, 0}, {0.5, 0, 0, -0.5}}};
    const auto a = GramFamily::from_sparse(cols);
    const auto b = GramFamily::from_vectors(dense);
    ASSERT_EQ(a.classes(), b.classes());
    for (std::size_t x = 0; x < a.classes(); ++x) {
        EXPECT_EQ(a.members(x), b.members(x));
        for (std::size_t y = 0; y < a.classes(); ++y) EXPECT_DOUBLE_EQ(a.inner(x, y), b.inner(x, y));
    }
}

TEST(VectorFamily, RejectsBadInput) {
    EXPECT_THROW(GramFamily::from_vectors(VectorFamily{2, {{1.0, 1.0}}}), InvalidArgument);
    EXPECT_THROW(GramFamily::from_vectors(VectorFamily{2, {{1.0}}}), DimensionMismatch);
    EXPECT_THROW(pair_probability(VectorFamily{2, {}}, 0.0), InvalidArgument);
}

TEST(PairProbability, SmallExamples) {
    EXPECT_DOUBLE_EQ(pair_probability(copies(2, unit(2, 0)), 1.0), 1.0);
    EXPECT_DOUBLE_EQ(pair_probability(VectorFamily{2, {unit(2, 0), unit(2, 0, -1.0)}}, -0.5), 0.5);
    const double h = std::sqrt(3.0) / 2;
    VectorFamily triple{2, {{1.0, 0.0}, {-0.5, h}, {-0.5, -h}}};
    EXPECT_DOUBLE_EQ(pair_probability(triple, 0.0), 3.0 / 9.0);
    EXPECT_DOUBLE_EQ(pair_probability(triple, -0.5), 1.0);
}

TEST(PairProbability, MatchesOracleAndIsMonotone) {
    Rng rng(21);
    for (int t = 0; t < 300; ++t) {
        const auto f = random_family(rng, 1 + rng.uniform_index(20), 1 + rng.uniform_index(6));
        double prev = 1.0;
        for (double p = -1.0; p <= 1.0; p += 0.125) {
            const double q = pair_probability(f, p);
            ASSERT_DOUBLE_EQ(q, oracle_pair_probability(f, p));
            ASSERT_LE(q, prev);
            prev = q;
        }
    }
}

TEST(GoodLevel, Examples) {
    EXPECT_EQ(good_level(copies(4, unit(3, 0)), 0.5), 0u);
    VectorFamily ortho{8, {}};
    for (std::size_t i = 0; i < 8; ++i) ortho.vectors.push_back(unit(8, i));
    // Thresholds −κ, 0, 2κ: every pair meets 0 at level 0 for κ = 1/8.
    EXPECT_EQ(good_level(ortho, 0.125), 0u);
}

TEST(GoodLevel, AlwaysExistsAndMatchesOracle) {
    Rng rng(22);
    const double kappas[] = {0.5, 0.25, 0.125, 1.0 / 16};
    for (int t = 0; t < 10000; ++t) {
        const auto f = random_family(rng, 1 + rng.uniform_index(12), 1 + rng.uniform_index(8));
        const double kappa = kappas[rng.uniform_index(4)];
        const auto expected = oracle_good_level(f, kappa);
        ASSERT_TRUE(expected.has_value());
        ASSERT_EQ(good_level(f, kappa), *expected);
    }
}

TEST(HeavyFraction, CopiesOfOneVectorAreAllHeavy) {
    const auto f = copies(8, unit(2, 0));
    for (unsigned ell = 0; ell <= 2; ++ell) EXPECT_DOUBLE_EQ(heavy_fraction(GramFamily::from_vectors(f), 0.25, ell), 1.0);
}

TEST(FindCollisionLevel, FourCopiesVerify) {
    const auto f = copies(4, unit(3, 0));
    const auto cert = find_collision_level(f, 0.5);
    EXPECT_EQ(cert.adversary, AdversaryKind::exhaustive);
    EXPECT_EQ(cert.levels, 1u);
    EXPECT_LE(cert.ell, 1u);
    EXPECT_TRUE(verify_collision_level(f, 0.5, cert.ell, AdversaryMode::exhaustive()));
    EXPECT_TRUE(oracle_verify(f, 0.5, cert.ell));
}

TEST(FindCollisionLevel, EightCopiesHaveFullHeavyFraction) {
    const auto f = copies(8, unit(2, 1));
    const auto cert = find_collision_level(f, 0.25);
    EXPECT_DOUBLE_EQ(cert.heavy_fraction, 1.0);
    EXPECT_DOUBLE_EQ(cert.threshold, level_threshold(cert.ell, 0.25));
    EXPECT_DOUBLE_EQ(cert.inner_bound, 1.0 / (std::pow(2.0, cert.ell + 5) * 2));
    EXPECT_DOUBLE_EQ(cert.outer_bound, 3.0 / 62.0);
}

TEST(FindCollisionLevel, MatchesLiteralSearchAndVerifies) {
    Rng rng(23);
    const double kappas[] = {0.5, 0.25, 0.125};
    for (int t = 0; t < 2000; ++t) {
        const auto f = random_family(rng, 1 + rng.uniform_index(12), 1 + rng.uniform_index(8));
        const double kappa = kappas[rng.uniform_index(3)];
        const auto expected = oracle_find_level(f, kappa);
        ASSERT_TRUE(expected.has_value());
        const auto cert = find_collision_level(f, kappa);
        ASSERT_EQ(cert.ell, expected->ell);
        ASSERT_EQ(cert.site, expected->site);
        ASSERT_TRUE(oracle_verify(f, kappa, cert.ell)) << "trial " << t;
    }
}

TEST(VerifyCollisionLevel, ExhaustiveMatchesSubsetOracle) {
    // Sizes 32..40 at κ = ½ and 64..66 at κ = ¼ give a removal budget of one.
    Rng rng(24);
    for (int t = 0; t < 60; ++t) {
        const bool half = t % 2 == 0;
        const double kappa = half ? 0.5 : 0.25;
        const std::size_t size = half ? 32 + rng.uniform_index(9) : 64 + rng.uniform_index(3);
        const auto f = random_family(rng, size, 1 + rng.uniform_index(4));
        for (unsigned ell = 0; ell <= collision_levels(kappa); ++ell)
            ASSERT_EQ(verify_collision_level(f, kappa, ell, AdversaryMode::exhaustive()), oracle_verify(f, kappa, ell))
                << "trial " << t << " ell " << ell;
    }
}

// κ = ¼ and 64 vectors give budget 1; at ℓ = 2 the threshold is ½ and one
// neighbour suffices for heaviness, while 4 heavy vectors are needed overall.
namespace {

VectorFamily padded(std::vector<std::vector<double>> head) {
    VectorFamily f{4, std::move(head)};
    while (f.size() < 64) f.vectors.push_back(std::vector<double>(4, 0.0));
    return f;
}

} // namespace

TEST(VerifyCollisionLevel, OuterDrawIncludesRemovedMembers) {
    // Removing one of four equal unit vectors leaves three survivors; the removed
    // copy still has neighbours and keeps the heavy count at four.
    const auto f = padded(std::vector<std::vector<double>>(4, unit(4, 0)));
    EXPECT_DOUBLE_EQ(heavy_fraction(GramFamily::from_vectors(f), 0.25, 2), 4.0 / 64.0);
    EXPECT_TRUE(verify_collision_level(f, 0.25, 2, AdversaryMode::exhaustive()));
    EXPECT_TRUE(oracle_verify(f, 0.25, 2));
}

TEST(VerifyCollisionLevel, InnerDrawExcludesRemovedMembers) {
    // Three short vectors reach the threshold only through the unit vector a.
    // Removing a leaves one heavy vector (a itself).
    std::vector<std::vector<double>> head{unit(4, 0)};
    for (std::size_t i = 1; i <= 3; ++i) {
        std::vector<double> b(4, 0.0);
        b[0] = 0.7 * 0.8;
        b[i] = 0.7 * 0.6;
        head.push_back(b);
    }
    const auto f = padded(head);
    EXPECT_DOUBLE_EQ(heavy_fraction(GramFamily::from_vectors(f), 0.25, 2), 4.0 / 64.0);
    EXPECT_FALSE(verify_collision_level(f, 0.25, 2, AdversaryMode::exhaustive()));
    EXPECT_FALSE(verify_collision_level(f, 0.25, 2, AdversaryMode::greedy_plus_random(0)));
    EXPECT_FALSE(oracle_verify(f, 0.25, 2));
}

TEST(VerifyCollisionLevel, ExhaustivePassImpliesGreedyPass) {
    Rng rng(25);
    for (int t = 0; t < 40; ++t) {
        const auto f = random_family(rng, 32 + rng.uniform_index(9), 1 + rng.uniform_index(4));
        for (unsigned ell = 0; ell <= 1; ++ell)
            if (verify_collision_level(f, 0.5, ell, AdversaryMode::exhaustive())) {
                EXPECT_TRUE(verify_collision_level(f, 0.5, ell, AdversaryMode::greedy_plus_random(8, t)));
            }
    }
}

TEST(FindCollisionLevel, GreedyAdversaryOnLargerFamilies) {
    Rng rng(26);
    std::size_t verified = 0, returned = 0;
    for (int t = 0; t < 30; ++t) {
        const auto f = random_family(rng, 64, 1 + rng.uniform_index(8));
        const double kappa = t % 2 ? 0.25 : 0.5;
        try {
            const auto cert = find_collision_level(f, kappa);
            ++returned;
            EXPECT_EQ(cert.adversary, AdversaryKind::greedy);
            EXPECT_LE(cert.ell, collision_levels(kappa));
            EXPECT_LE(cert.remaining_size, cert.ground_size);
            EXPECT_LE(cert.ground_size, 64u);
            verified += verify_collision_level(f, kappa, cert.ell, AdversaryMode::greedy_plus_random(16, t));
        } catch (const NoLevelFound&) {
        }
    }
    EXPECT_GT(returned, 0u);
    EXPECT_EQ(verified, returned);
}

TEST(Degenerate, AllHandBuiltFamiliesPass) {
    for (const auto& f : degenerate_families())
        for (double kappa : {0.5, 0.25, 0.125}) {
            EXPECT_NO_THROW((void)good_level(f, kappa));
            const auto cert = find_collision_level(f, kappa);
            EXPECT_TRUE(verify_collision_level(f, kappa, cert.ell, AdversaryMode::exhaustive()));
        }
}
