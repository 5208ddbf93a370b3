#pragma once

#include "ose/errors.hpp"
#include "ose/harness/config.hpp"
#include "ose/harness/report.hpp"
#include "ose/harness/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace ose {

struct MinMParams {
    SketchFamily family = SketchFamily::count_sketch;
    std::size_t s = 1;
    std::size_t n = 0;
    std::size_t d = 0;
    double eps = 0.0;
    double delta = 0.1;
    InstanceSpec instance;
    std::size_t trials = 100;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
};

struct MinMResult {
    std::size_t m_star = 0;
    std::vector<SweepRecord> probes;  // in probe order
};

/// Geometric grid with eight points per octave from lo to hi, both included.
inline std::vector<std::size_t> min_m_grid(std::size_t lo, std::size_t hi) {
    detail::require<InvalidArgument>(lo >= 1 && lo <= hi, "min_m_grid: need 1 <= lo <= hi");
    std::vector<std::size_t> grid;
    for (int k = 0;; ++k) {
        const double x = static_cast<double>(lo) * std::exp2(k / 8.0);
        if (x >= static_cast<double>(hi)) break;
        const auto m = static_cast<std::size_t>(std::llround(x));
        if (grid.empty() || m > grid.back()) grid.push_back(m);
    }
    if (grid.empty() || grid.back() < hi) grid.push_back(hi);
    return grid;
}

/// A probe passes when delta_hat ≤ delta and the upper Wilson bound ≤ 1.5·delta.
inline bool probe_passes(const SweepRecord& r, double delta) {
    return r.delta_hat <= delta && r.ci_high <= 1.5 * delta;
}

/// Smallest grid m that passes, found by bisection between a failing and a
/// passing grid point; the grid spans [max(d, s), n].
inline MinMResult min_m_search(const MinMParams& p, SketchFactory factory = {}) {
    detail::require<InvalidArgument>(p.family != SketchFamily::hadamard_block,
                                     "min_m_search: hadamard_block has a fixed row count");
    const std::size_t s = p.family == SketchFamily::osnap ? p.s : 1;
    const auto grid = min_m_grid(std::max(p.d, s), p.n);

    SweepConfig base;
    base.family = p.family;
    base.s = s;
    base.n = p.n;
    base.d = p.d;
    base.eps = p.eps;
    base.delta = p.delta;
    base.instance = p.instance;
    base.trials = p.trials;
    base.seed = p.seed;
    if (!factory) factory = family_factory(p.family, p.n, s, p.eps);

    MinMResult out;
    auto probe = [&](std::size_t idx) {
        SweepConfig c = base;
        c.m_grid = {grid[idx]};
        auto rec = run_sweep(c, p.workers, factory).front();
        out.probes.push_back(rec);
        return probe_passes(rec, p.delta);
    };

    if (probe(0)) {
        out.m_star = grid.front();
        return out;
    }
    std::size_t lo = 0, hi = grid.size() - 1;
    if (!probe(hi)) throw NoBracket("min_m_search: largest probed m = " + std::to_string(grid[hi]) + " still fails");
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        (probe(mid) ? hi : lo) = mid;
    }
    out.m_star = grid[hi];
    return out;
}

} // namespace ose
