#pragma once

// Adversarial audit of a fixed sketch: choose an entry scale θ, classify rows
// by collision level, sample good entries, grow a set of columns that have
// large inner products with examined ones, and report a colliding pair.
// Column "valid" means squared norm within [1−eps, 1+eps].

#include "ose/collision.hpp"
#include "ose/dense.hpp"
#include "ose/embedding.hpp"
#include "ose/errors.hpp"
#include "ose/hard_instance.hpp"
#include "ose/random.hpp"
#include "ose/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace ose {

inline std::vector<char> valid_columns(const SparseColMatrix& p, double eps) {
    std::vector<char> valid(p.cols());
    for (std::size_t j = 0; j < p.cols(); ++j) {
        const double sq = squared_norm(p.column(j));
        valid[j] = (sq >= 1.0 - eps && sq <= 1.0 + eps) ? 1 : 0;
    }
    return valid;
}

/// Fraction of columns whose squared norm lies in [1−eps, 1+eps].
inline double column_norm_fraction(const SparseColMatrix& p, double eps) {
    if (p.cols() == 0) return 0.0;
    const auto valid = valid_columns(p, eps);
    return static_cast<double>(std::count(valid.begin(), valid.end(), 1)) / static_cast<double>(p.cols());
}

// ---------------------------------------------------------------------------
// θ selection

struct BucketMass {
    unsigned index = 0;  // bucket [2^i·eps, 2^(i+1)·eps)
    double lower = 0.0;
    double mass = 0.0;   // mean over valid columns of Σ Π_kj² with Π_kj² in the bucket
};

struct ThetaChoice {
    double theta = 0.0;
    unsigned bucket = 0;
    std::vector<BucketMass> buckets;
};

/// Buckets i = 0 … ⌈log₂(10/(9·eps))⌉; θ is the left end of the heaviest
/// bucket (ties go to the smaller i).
inline ThetaChoice select_theta(const SparseColMatrix& p, double eps) {
    detail::require<InvalidArgument>(eps > 0.0 && eps < 1.0, "select_theta: eps must be in (0, 1)");
    const auto valid = valid_columns(p, eps);
    const std::size_t valid_count = static_cast<std::size_t>(std::count(valid.begin(), valid.end(), 1));
    if (valid_count == 0) throw NoValidColumns("select_theta: no column has squared norm in [1-eps, 1+eps]");

    const unsigned top = static_cast<unsigned>(std::ceil(std::log2(10.0 / (9.0 * eps)) - 1e-12));
    ThetaChoice out;
    out.buckets.resize(top + 1);
    for (unsigned i = 0; i <= top; ++i) out.buckets[i] = {i, std::ldexp(eps, static_cast<int>(i)), 0.0};
    for (std::size_t j = 0; j < p.cols(); ++j) {
        if (!valid[j]) continue;
        for (const auto& e : p.column(j)) {
            const double sq = e.value * e.value;
            if (sq < eps) continue;
            // Largest i with 2^i·eps ≤ sq, found by doubling to stay exact on dyadic values.
            unsigned i = 0;
            while (i + 1 <= top && std::ldexp(eps, static_cast<int>(i + 1)) <= sq) ++i;
            if (sq < std::ldexp(eps, static_cast<int>(i + 1))) out.buckets[i].mass += sq;
        }
    }
    for (auto& b : out.buckets) b.mass /= static_cast<double>(valid_count);
    for (unsigned i = 1; i <= top; ++i)
        if (out.buckets[i].mass > out.buckets[out.bucket].mass) out.bucket = i;
    out.theta = out.buckets[out.bucket].lower;
    return out;
}

// ---------------------------------------------------------------------------
// Row classification

struct RowRecord {
    std::size_t row = 0;
    std::vector<std::size_t> s_theta;  // valid columns with Π_kj² ≥ θ
    std::vector<std::size_t> s_plus;   // the majority-sign part of s_theta
    int sign_side = 1;
    std::optional<unsigned> ell;       // collision level; absent when |s_plus| ≤ 1
};

/// For each row k: S_kθ, its majority sign side (ties positive), and the
/// collision level of {Π_{*,j} with row k zeroed : j ∈ S⁺} at kappa = θ/2
/// (capped at ½). Rows with |S⁺| ≤ 1 are left unclassified.
inline std::vector<RowRecord> classify_rows(const SparseColMatrix& p, double theta, double eps,
                                            std::size_t adversary_cutoff = 12) {
    detail::require<InvalidArgument>(theta >= eps * (1.0 - 1e-12), "classify_rows: need theta >= eps");
    const auto valid = valid_columns(p, eps);
    const auto rows = rows_of(p);
    const double kappa = std::min(theta / 2.0, 0.5);

    std::vector<RowRecord> out(p.rows());
    for (std::size_t k = 0; k < p.rows(); ++k) {
        RowRecord& rec = out[k];
        rec.row = k;
        std::vector<std::size_t> pos, neg;
        for (const auto& e : rows[k]) {
            if (!valid[e.col] || !(e.value * e.value >= theta - 1e-15)) continue;
            rec.s_theta.push_back(e.col);
            (e.value > 0 ? pos : neg).push_back(e.col);
        }
        rec.sign_side = 2 * pos.size() >= rec.s_theta.size() ? 1 : -1;
        rec.s_plus = rec.sign_side > 0 ? std::move(pos) : std::move(neg);
        if (rec.s_plus.size() <= 1) continue;

        std::vector<std::vector<SparseEntry>> zeroed(rec.s_plus.size());
        for (std::size_t t = 0; t < rec.s_plus.size(); ++t)
            for (const auto& e : p.column(rec.s_plus[t]))
                if (e.row != k) zeroed[t].push_back(e);
        const GramFamily family = GramFamily::from_sparse(zeroed);
        rec.ell = find_collision_level(family, kappa, adversary_cutoff).ell;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Level selection and profile

struct GoodPair {
    std::size_t row = 0;
    std::size_t col = 0;
    bool operator==(const GoodPair&) const = default;
};

struct AuditProfile {
    double eps = 0.0;
    double theta = 0.0;
    std::vector<BucketMass> bucket_masses;
    std::vector<RowRecord> rows;
    unsigned ell_theta = 0;
    std::vector<double> level_masses;          // per level: Σ|S⁺_k| over rows at that level / #valid
    std::vector<std::size_t> rows_at_level;    // S_{ℓθ}
    std::vector<GoodPair> good_entries;        // sorted by (col, row)
    std::vector<std::vector<std::size_t>> good_rows_of_column;
    std::size_t s_prime_max = 0;

    /// Inner-product threshold 2^ℓθ·θ used to grow S'.
    double growth_threshold() const noexcept { return std::ldexp(theta, static_cast<int>(ell_theta)); }
};

struct EllChoice {
    unsigned ell_theta = 0;
    std::vector<double> level_masses;
    std::vector<std::size_t> rows_at_level;
    std::vector<GoodPair> good_entries;
    std::vector<std::vector<std::size_t>> good_rows_of_column;
    std::size_t s_prime_max = 0;
};

/// ℓθ maximizes the mean over valid columns j of #{k : ell_k = ℓ, j ∈ S⁺_k}
/// (ties go to the smaller level).
inline EllChoice select_ell(const SparseColMatrix& p, double eps, std::span<const RowRecord> rows) {
    const auto valid = valid_columns(p, eps);
    const double valid_count = static_cast<double>(std::count(valid.begin(), valid.end(), 1));
    unsigned max_level = 0;
    bool any = false;
    for (const auto& r : rows)
        if (r.ell) {
            any = true;
            max_level = std::max(max_level, *r.ell);
        }
    if (!any || valid_count == 0) throw NoClassifiedRows("select_ell: no row has a collision level");

    EllChoice out;
    out.level_masses.assign(max_level + 1, 0.0);
    for (const auto& r : rows)
        if (r.ell) out.level_masses[*r.ell] += static_cast<double>(r.s_plus.size());
    for (auto& m : out.level_masses) m /= valid_count;
    for (unsigned l = 1; l <= max_level; ++l)
        if (out.level_masses[l] > out.level_masses[out.ell_theta]) out.ell_theta = l;

    out.good_rows_of_column.resize(p.cols());
    for (const auto& r : rows) {
        if (!r.ell || *r.ell != out.ell_theta) continue;
        out.rows_at_level.push_back(r.row);
        for (std::size_t j : r.s_plus) out.good_rows_of_column[j].push_back(r.row);
    }
    for (std::size_t j = 0; j < p.cols(); ++j) {
        auto& g = out.good_rows_of_column[j];
        std::sort(g.begin(), g.end());
        out.s_prime_max = std::max(out.s_prime_max, g.size());
        for (std::size_t k : g) out.good_entries.push_back({k, j});
    }
    return out;
}

inline AuditProfile build_profile(const SparseColMatrix& p, double eps, std::size_t adversary_cutoff = 12) {
    AuditProfile prof;
    prof.eps = eps;
    ThetaChoice t = select_theta(p, eps);
    prof.theta = t.theta;
    prof.bucket_masses = std::move(t.buckets);
    prof.rows = classify_rows(p, prof.theta, eps, adversary_cutoff);
    EllChoice e = select_ell(p, eps, prof.rows);
    prof.ell_theta = e.ell_theta;
    prof.level_masses = std::move(e.level_masses);
    prof.rows_at_level = std::move(e.rows_at_level);
    prof.good_entries = std::move(e.good_entries);
    prof.good_rows_of_column = std::move(e.good_rows_of_column);
    prof.s_prime_max = e.s_prime_max;
    return prof;
}

// ---------------------------------------------------------------------------
// Sampling

/// One column draw; `row` is empty when the draw was discarded.
struct ColumnDraw {
    std::size_t column = 0;
    std::optional<std::size_t> row;
};

/// d_prime i.i.d. uniform columns, each kept with probability s'/s'_max
/// (s' its good-entry count) and then paired with a uniform good row, which
/// makes every kept pair uniform over the good entries.
inline std::vector<ColumnDraw> draw_columns(const AuditProfile& prof, std::size_t d_prime, std::uint64_t seed) {
    detail::require<InvalidArgument>(prof.s_prime_max >= 1, "draw_columns: profile has no good entries");
    const std::size_t n = prof.good_rows_of_column.size();
    Rng rng = make_rng(seed, {stream::attack});
    std::vector<ColumnDraw> out(d_prime);
    for (auto& draw : out) {
        draw.column = rng.uniform_index(n);
        const auto& good = prof.good_rows_of_column[draw.column];
        // Accept iff α < s'/s'_max with α uniform on [0, 1).
        const double alpha = rng.uniform01();
        if (alpha * static_cast<double>(prof.s_prime_max) < static_cast<double>(good.size()))
            draw.row = good[rng.uniform_index(good.size())];
    }
    return out;
}

inline std::vector<GoodPair> sample_good_columns(const AuditProfile& prof, std::size_t d_prime, std::uint64_t seed) {
    std::vector<GoodPair> out;
    for (const auto& d : draw_columns(prof, d_prime, seed))
        if (d.row) out.push_back({*d.row, d.column});
    return out;
}

// ---------------------------------------------------------------------------
// Collection and scan

enum class VerdictKind { pair_found, collision_found, inconclusive };

struct Verdict {
    VerdictKind kind = VerdictKind::inconclusive;
    std::size_t p = 0;        // examined column (witness)
    std::size_t q = 0;        // column found in S'
    double value = 0.0;       // ⟨Π_p, Π_q⟩
    std::size_t step = 0;     // 1-based good-pair index at which the verdict fired
    std::string reason;       // set for inconclusive verdicts
};

struct TranscriptEvent {
    std::size_t step = 0;                // 1-based draw index
    std::size_t column = 0;
    std::optional<std::size_t> row;      // empty: discarded
    std::vector<std::size_t> added;      // columns added to S' at this step
};

/// S' with, for each member, the examined column that brought it in.
class CollectedSet {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    explicit CollectedSet(std::size_t n = 0) : witness_(n, npos) {}

    bool contains(std::size_t c) const noexcept { return witness_[c] != npos; }
    std::size_t witness(std::size_t c) const noexcept { return witness_[c]; }
    std::size_t size() const noexcept { return size_; }
    void add(std::size_t c, std::size_t by) {
        if (witness_[c] == npos) ++size_;
        witness_[c] = by;
    }

private:
    std::vector<std::size_t> witness_;
    std::size_t size_ = 0;
};

/// Incremental form of the collecting loop.
class ColumnCollector {
public:
    ColumnCollector(const SparseColMatrix& p, const AuditProfile& prof)
        : p_(&p), prof_(&prof), set_(p.cols()), rows_(p.rows()) {
        for (const auto& r : prof.rows)
            if (r.ell && *r.ell == prof.ell_theta) rows_[r.row] = &r.s_plus;
    }

    /// Examines one good pair. Returns true (and sets `verdict`) when its
    /// column is already in S'; otherwise grows S' and lists the additions.
    bool examine(const GoodPair& pair, std::size_t step, Verdict& verdict, std::vector<std::size_t>& added) {
        added.clear();
        if (set_.contains(pair.col)) {
            verdict.kind = VerdictKind::collision_found;
            verdict.p = set_.witness(pair.col);
            verdict.q = pair.col;
            verdict.value = sparse_dot(p_->column(verdict.p), p_->column(verdict.q));
            verdict.step = step;
            return true;
        }
        const double threshold = prof_->growth_threshold();
        const auto* good = rows_[pair.row];
        if (good == nullptr) return false;
        const auto base = p_->column(pair.col);
        for (std::size_t c : *good) {
            if (set_.contains(c)) continue;
            if (meets_threshold(sparse_dot(base, p_->column(c)), threshold)) {
                set_.add(c, pair.col);
                added.push_back(c);
            }
        }
        return false;
    }

    const CollectedSet& collected() const noexcept { return set_; }

private:
    const SparseColMatrix* p_;
    const AuditProfile* prof_;
    CollectedSet set_;
    std::vector<const std::vector<std::size_t>*> rows_;
};

struct CollectionResult {
    Verdict verdict;
    CollectedSet collected;
    std::vector<TranscriptEvent> transcript;
};

/// Runs the collecting loop over `first_half`; the verdict is collision_found
/// or inconclusive.
inline CollectionResult collect_columns(const SparseColMatrix& p, const AuditProfile& prof,
                                        std::span<const GoodPair> first_half) {
    ColumnCollector collector(p, prof);
    CollectionResult out;
    out.verdict.reason = "no collision among examined columns";
    std::vector<std::size_t> added;
    for (std::size_t i = 0; i < first_half.size(); ++i) {
        const bool hit = collector.examine(first_half[i], i + 1, out.verdict, added);
        out.transcript.push_back({i + 1, first_half[i].col, first_half[i].row, added});
        if (hit) break;
    }
    if (first_half.empty()) out.verdict.reason = "no good columns sampled";
    out.collected = collector.collected();
    return out;
}

/// PairFound on the first unexamined column lying in S'.
inline Verdict scan_second_half(const SparseColMatrix& p, const CollectedSet& collected,
                                std::span<const GoodPair> second_half) {
    for (std::size_t i = 0; i < second_half.size(); ++i) {
        const std::size_t c = second_half[i].col;
        if (!collected.contains(c)) continue;
        Verdict v;
        v.kind = VerdictKind::pair_found;
        v.p = collected.witness(c);
        v.q = c;
        v.value = sparse_dot(p.column(v.p), p.column(v.q));
        v.step = i + 1;
        return v;
    }
    Verdict v;
    v.reason = second_half.empty() ? "no unexamined good columns" : "no unexamined column lies in S'";
    return v;
}

// ---------------------------------------------------------------------------
// Full attack

struct AttackConfig {
    double gamma = 0.0;
    std::size_t adversary_cutoff = 12;
};

struct AttackOutcome {
    Verdict verdict;
    std::size_t collected_set_size = 0;
    std::size_t good_column_count = 0;   // g
    std::size_t d_prime = 0;
    double theta = 0.0;
    unsigned ell_theta = 0;
    double threshold = 0.0;              // 2^ℓθ·θ
    std::vector<TranscriptEvent> transcript;
};

/// d' = 2^ℓ'·d with ℓ' = clamp(round(log₂(θ·2^ℓθ / eps^(1−γ))), 0, L),
/// L = ⌊log₂(1/eps)⌋ − 3, then capped at n/4.
inline std::size_t attack_width(double theta, unsigned ell_theta, double eps, double gamma, std::size_t d,
                                std::size_t n) {
    const int levels = std::max(0, mixture_levels(eps));
    const double raw = std::log2(std::ldexp(theta, static_cast<int>(ell_theta)) / std::pow(eps, 1.0 - gamma));
    const int ell_prime = std::clamp(static_cast<int>(std::lround(raw)), 0, levels);
    const std::size_t width = d << ell_prime;
    return std::max<std::size_t>(1, std::min(width, n / 4));
}

/// Attack with a precomputed profile (the profile does not depend on the seed).
inline AttackOutcome attack(const SparseColMatrix& p, const AuditProfile& prof, std::size_t d, std::uint64_t seed,
                            const AttackConfig& config = {}) {
    detail::require<InvalidArgument>(d >= 1, "attack: d must be >= 1");
    detail::require<InvalidArgument>(config.gamma >= 0.0 && config.gamma < 0.5, "attack: gamma must be in [0, 1/2)");
    const double eps = prof.eps;
    AttackOutcome out;
    out.theta = prof.theta;
    out.ell_theta = prof.ell_theta;
    out.threshold = prof.growth_threshold();
    out.d_prime = attack_width(prof.theta, prof.ell_theta, eps, config.gamma, d, p.cols());

    const auto draws = draw_columns(prof, out.d_prime, seed);
    std::vector<GoodPair> pairs;
    std::vector<std::size_t> draw_of_pair;
    for (std::size_t i = 0; i < draws.size(); ++i) {
        out.transcript.push_back({i + 1, draws[i].column, draws[i].row, {}});
        if (draws[i].row) {
            pairs.push_back({*draws[i].row, draws[i].column});
            draw_of_pair.push_back(i);
        }
    }
    out.good_column_count = pairs.size();
    const std::size_t half = (pairs.size() + 1) / 2;

    ColumnCollector collector(p, prof);
    std::vector<std::size_t> added;
    for (std::size_t i = 0; i < half; ++i) {
        if (collector.examine(pairs[i], i + 1, out.verdict, added)) break;
        out.transcript[draw_of_pair[i]].added = added;
    }
    out.collected_set_size = collector.collected().size();
    if (out.verdict.kind == VerdictKind::collision_found) return out;

    out.verdict = scan_second_half(p, collector.collected(), std::span<const GoodPair>(pairs).subspan(half));
    if (out.verdict.kind == VerdictKind::pair_found) out.verdict.step += half;
    if (pairs.empty()) out.verdict.reason = "no good columns sampled";
    return out;
}

inline AttackOutcome attack(const SparseColMatrix& p, double eps, std::size_t d, std::uint64_t seed,
                            const AttackConfig& config = {}) {
    detail::require<InvalidArgument>(p.nnz() > 0, "attack: sketch is zero");
    AttackOutcome out;
    try {
        return attack(p, build_profile(p, eps, config.adversary_cutoff), d, seed, config);
    } catch (const NoClassifiedRows&) {
        out.verdict.reason = "no classified rows";
    } catch (const NoValidColumns&) {
        out.verdict.reason = "no valid columns";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Transcript and verdict text

inline std::string to_string(VerdictKind k) {
    switch (k) {
    case VerdictKind::pair_found: return "PairFound";
    case VerdictKind::collision_found: return "CollisionFound";
    case VerdictKind::inconclusive: return "Inconclusive";
    }
    return "?";
}

inline std::string describe(const Verdict& v) {
    std::ostringstream os;
    os << to_string(v.kind);
    if (v.kind == VerdictKind::inconclusive) {
        if (!v.reason.empty()) os << " (" << v.reason << ")";
    } else {
        os << " p=" << v.p << " q=" << v.q << " value=" << format_real(v.value) << " step=" << v.step;
    }
    return os.str();
}

/// "step i: column C row R accepted|discarded; S' += {…}", one line per draw.
inline std::string format_transcript(std::span<const TranscriptEvent> events) {
    std::ostringstream os;
    for (const auto& e : events) {
        os << "step " << e.step << ": column " << e.column << " row ";
        if (e.row) os << *e.row << " accepted"; else os << "- discarded";
        os << "; S' += {";
        for (std::size_t i = 0; i < e.added.size(); ++i) os << (i ? "," : "") << e.added[i];
        os << "}\n";
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Anticoncentration

/// Fraction of fresh sign draws σ for which A·W(σ) has a singular value
/// outside [1−eps, 1+eps]. A has d·2^ell columns grouped in blocks of 2^ell.
inline double anticoncentration(const DenseMatrix& a, double eps, unsigned ell, std::size_t trials,
                                std::uint64_t seed) {
    detail::require<InvalidArgument>(trials >= 1, "anticoncentration: trials must be >= 1");
    const std::size_t block = std::size_t{1} << ell;
    detail::require<DimensionMismatch>(a.cols() >= block && a.cols() % block == 0,
                                       "anticoncentration: column count must be a multiple of 2^ell");
    const std::size_t d = a.cols() / block;
    std::size_t escapes = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const auto sigma = sample_signs(a.cols(), derive_seed(seed, {stream::trial, t}));
        if (!singular_extremes(apply_w(a, d, ell, sigma)).within(eps)) ++escapes;
    }
    return static_cast<double>(escapes) / static_cast<double>(trials);
}

} // namespace ose
