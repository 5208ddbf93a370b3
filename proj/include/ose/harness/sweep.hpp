#pragma once

#include "ose/dense.hpp"
#include "ose/embedding.hpp"
#include "ose/errors.hpp"
#include "ose/hard_instance.hpp"
#include "ose/harness/config.hpp"
#include "ose/harness/report.hpp"
#include "ose/montecarlo.hpp"
#include "ose/parallel.hpp"
#include "ose/random.hpp"
#include "ose/sketches.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ose {

/// Builds the m-row sketch used in a trial; the seed is shared across m.
using SketchFactory = std::function<std::unique_ptr<ColumnSketch>(std::size_t m, std::uint64_t seed)>;

inline SketchSpec family_spec(SketchFamily family, std::size_t m, std::size_t n, std::size_t s, double eps,
                              std::uint64_t seed) {
    switch (family) {
    case SketchFamily::count_sketch: return SketchSpec::count_sketch(m, n, seed);
    case SketchFamily::osnap: return SketchSpec::osnap(m, n, s, seed);
    case SketchFamily::dense_rademacher: return SketchSpec::dense_rademacher(m, n, seed);
    case SketchFamily::hadamard_block: {
        const std::size_t b = hadamard_order(eps);
        const auto d_block = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(m / b))));
        return SketchSpec::hadamard_block(eps, n, d_block);
    }
    }
    throw InvalidArgument("family_spec: unknown family");
}

inline SketchFactory family_factory(SketchFamily family, std::size_t n, std::size_t s, double eps) {
    return [=](std::size_t m, std::uint64_t seed) -> std::unique_ptr<ColumnSketch> {
        return std::make_unique<SeededSketch>(family_spec(family, m, n, s, eps, seed));
    };
}

inline SketchFactory config_factory(const SweepConfig& c) { return family_factory(c.family, c.n, c.s, c.eps); }

/// Gaussian n×d matrix orthonormalized.
inline DenseMatrix random_subspace(std::size_t n, std::size_t d, std::uint64_t seed) {
    Rng rng = make_rng(seed, {stream::subspace});
    DenseMatrix g(n, d);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < d; ++c) g(r, c) = rng.normal();
    return orthonormal_basis(g);
}

/// Π·A with Π's columns generated on demand.
inline DenseMatrix sketch_apply(const ColumnSketch& sk, const DenseMatrix& a) {
    detail::require<DimensionMismatch>(sk.cols() == a.rows(), "sketch_apply: inner dimensions differ");
    DenseMatrix out(sk.rows(), a.cols());
    std::vector<SparseEntry> col;
    for (std::size_t j = 0; j < sk.cols(); ++j) {
        col.clear();
        sk.column(j, col);
        auto src = a.row(j);
        for (const auto& e : col) {
            auto dst = out.row(e.row);
            for (std::size_t c = 0; c < src.size(); ++c) dst[c] += e.value * src[c];
        }
    }
    return out;
}

/// A test subspace in whichever form is cheapest to sketch.
struct TestSubspace {
    std::optional<FactoredInstance> factored;
    std::optional<DenseMatrix> basis;
};

/// Hard-mixture draw conditioned on isometry. When the mixture has no
/// nontrivial levels (eps > 1/16) it degenerates to D_1.
inline FactoredInstance sample_mixture_isometric(std::size_t n, std::size_t d, double eps, std::uint64_t seed) {
    HardInstanceParams params{n, d, 0, derive_seed(seed, {stream::instance})};
    if (mixture_levels(eps) >= 1) params = sample_mixture(n, d, eps, seed).params;
    return sample_isometric(params).instance;
}

inline TestSubspace draw_test_subspace(std::size_t n, std::size_t d, double eps, const InstanceSpec& spec,
                                       std::uint64_t seed) {
    TestSubspace out;
    switch (spec.kind) {
    case InstanceKind::random_subspace: out.basis = random_subspace(n, d, seed); break;
    case InstanceKind::hard_mixture: out.factored = sample_mixture_isometric(n, d, eps, seed); break;
    case InstanceKind::hard_beta:
        out.factored = sample_isometric({n, d, spec.ell, derive_seed(seed, {stream::instance})}).instance;
        break;
    case InstanceKind::hadamard_adversarial: {
        const std::size_t b = hadamard_order(eps);
        detail::require<InvalidArgument>(b >= 1, "hadamard_adversarial: eps too large");
        const auto ell = static_cast<unsigned>(std::countr_zero(b));
        out.factored = sample_isometric({n, d, ell, derive_seed(seed, {stream::instance})}).instance;
        break;
    }
    }
    return out;
}

/// Π·U for the drawn subspace.
inline DenseMatrix sketch_subspace(const ColumnSketch& sk, const TestSubspace& sub) {
    if (sub.factored) {
        const auto& f = *sub.factored;
        return apply_w(sketch_times_v(sk, f.v_indices), f.params.d, f.params.ell, f.sigma);
    }
    return sketch_apply(sk, *sub.basis);
}

struct TrialOutcome {
    std::size_t m = 0;
    DistortionReport report;
    bool failed = false;
};

/// Evaluates trial `trial` of the sweep at every m in `ms`, reusing one
/// subspace and one sketch seed across m.
inline std::vector<TrialOutcome> run_trial(const SweepConfig& c, const SketchFactory& factory,
                                           std::span<const std::size_t> ms, std::size_t trial) {
    const std::uint64_t trial_seed = derive_seed(c.seed, {stream::trial, trial});
    const TestSubspace sub = draw_test_subspace(c.n, c.d, c.eps, c.instance, derive_seed(trial_seed, {stream::subspace}));
    const std::uint64_t sketch_seed = derive_seed(trial_seed, {stream::sketch});
    std::vector<TrialOutcome> out;
    out.reserve(ms.size());
    for (std::size_t m : ms) {
        const auto sk = factory(m, sketch_seed);
        TrialOutcome t;
        t.m = m;
        t.report = singular_extremes(sketch_subspace(*sk, sub));
        t.failed = !t.report.within(c.eps);
        out.push_back(t);
    }
    return out;
}

/// One record per m; failure means the sketched isometry has a singular value
/// outside [1−eps, 1+eps]. Output depends only on the config, not on workers.
inline std::vector<SweepRecord> run_sweep(const SweepConfig& c, std::size_t workers = 1, SketchFactory factory = {}) {
    c.validate();
    if (!factory) factory = config_factory(c);
    const std::size_t cols = c.m_grid.size();
    const auto flags = parallel_map<std::vector<char>>(c.trials, workers, [&](std::size_t i) {
        std::vector<char> row(cols);
        const auto outcomes = run_trial(c, factory, c.m_grid, i);
        for (std::size_t k = 0; k < cols; ++k) row[k] = outcomes[k].failed ? 1 : 0;
        return row;
    });
    std::vector<SweepRecord> out;
    for (std::size_t k = 0; k < cols; ++k) {
        const std::size_t m = c.m_grid[k];
        std::size_t failures = 0;
        for (const auto& row : flags) failures += static_cast<std::size_t>(row[k]);
        const auto sk = factory(m, 0);
        SweepRecord r;
        r.family = sk->name();
        r.m = m;
        r.n = c.n;
        r.d = c.d;
        r.eps = c.eps;
        r.s = sk->sparsity();
        r.trials = c.trials;
        r.failures = failures;
        r.delta_hat = static_cast<double>(failures) / static_cast<double>(c.trials);
        const Interval ci = wilson_interval(failures, c.trials);
        r.ci_low = ci.low;
        r.ci_high = ci.high;
        r.seed = c.seed;
        out.push_back(std::move(r));
    }
    return out;
}

/// Re-runs a single trial standalone, at one m or across the whole grid.
inline std::vector<TrialOutcome> replay(const SweepConfig& c, std::size_t trial, std::optional<std::size_t> m = {},
                                        SketchFactory factory = {}) {
    c.validate();
    detail::require<IndexOutOfRange>(trial < c.trials, "replay: trial index out of range");
    if (!factory) factory = config_factory(c);
    std::vector<std::size_t> ms = c.m_grid;
    if (m) ms = {*m};
    return run_trial(c, factory, ms, trial);
}

} // namespace ose
