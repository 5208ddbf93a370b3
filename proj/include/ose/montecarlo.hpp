#pragma once

#include "ose/embedding.hpp"
#include "ose/errors.hpp"
#include "ose/parallel.hpp"
#include "ose/random.hpp"

#include <cmath>
#include <cstdint>

namespace ose {

struct Interval {
    double low = 0.0;
    double high = 1.0;
};

/// 95% Wilson score interval for `failures` successes out of `trials`.
inline Interval wilson_interval(std::size_t failures, std::size_t trials, double z = 1.959963984540054) {
    detail::require<InvalidArgument>(trials >= 1, "wilson_interval: trials must be >= 1");
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(failures) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double centre = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, std::min(p, centre - half)), std::min(1.0, std::max(p, centre + half))};
}

struct FailureEstimate {
    std::size_t trials = 0;
    std::size_t failures = 0;
    double delta_hat = 0.0;
    Interval ci;
};

/// Runs `trial(i, trial_seed)` -> bool (true = failure) for every trial index
/// and aggregates in index order. trial_seed depends only on (seed, i).
template <class TrialFn>
FailureEstimate count_failures(std::size_t trials, std::uint64_t seed, std::size_t workers, TrialFn&& trial) {
    detail::require<InvalidArgument>(trials >= 1, "estimate_failure: trials must be >= 1");
    auto verdicts = parallel_map<char>(trials, workers, [&](std::size_t i) -> char {
        return trial(i, derive_seed(seed, {stream::trial, i})) ? 1 : 0;
    });
    FailureEstimate est;
    est.trials = trials;
    for (char v : verdicts) est.failures += static_cast<std::size_t>(v);
    est.delta_hat = static_cast<double>(est.failures) / static_cast<double>(trials);
    est.ci = wilson_interval(est.failures, trials);
    return est;
}

/// Monte-Carlo estimate of Pr[Π is not an eps-embedding for span(Q)].
/// `sketch_sampler(seed)` yields a SparseColMatrix and `subspace_sampler(seed)`
/// an orthonormal DenseMatrix; both receive seeds derived from (seed, trial).
template <class SketchSampler, class SubspaceSampler>
FailureEstimate estimate_failure(SketchSampler&& sketch_sampler, SubspaceSampler&& subspace_sampler, double eps,
                                 std::size_t trials, std::uint64_t seed, std::size_t workers = 1) {
    return count_failures(trials, seed, workers, [&](std::size_t, std::uint64_t trial_seed) {
        const SparseColMatrix p = sketch_sampler(derive_seed(trial_seed, {stream::sketch}));
        const DenseMatrix q = subspace_sampler(derive_seed(trial_seed, {stream::subspace}));
        return !is_embedding(p, q, eps);
    });
}

} // namespace ose
