#include "ose/embedding.hpp"
#include "ose/errors.hpp"
#include "ose/harness/config.hpp"
#include "ose/harness/lemmas.hpp"
#include "ose/harness/min_m.hpp"
#include "ose/harness/report.hpp"
#include "ose/harness/sweep.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace ose;

namespace {

SweepConfig parse(const std::string& text) {
    std::istringstream in(text);
    return read_config(in);
}

SweepConfig small_config() {
    return parse("family=osnap\ns=2\nn=512\nd=3\neps=0.25\nm_grid=8,16,32,64,128\ntrials=40\nseed=5\n");
}

// Identity sketch regardless of m, so no trial ever fails.
SketchFactory identity_factory(std::size_t n) {
    return [n](std::size_t, std::uint64_t) -> std::unique_ptr<ColumnSketch> {
        return std::make_unique<MatrixColumns>(SparseColMatrix::identity(n), "identity");
    };
}

// Zero sketch, so every trial fails.
SketchFactory zero_factory(std::size_t n) {
    return [n](std::size_t m, std::uint64_t) -> std::unique_ptr<ColumnSketch> {
        return std::make_unique<MatrixColumns>(SparseColMatrix(m, n), "zero");
    };
}

std::size_t count_substr(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
}

} // namespace

TEST(Config, ParsesAllKeys) {
    const auto c = parse("# sweep\nfamily=osnap\ns=4\nn=1024\nd=4\neps=0.125\ndelta=0.05\nm_grid=16 32,64\n"
                         "instance=hard_beta\nell=2\ntrials=10\nseed=99\ngamma=0.1\n");
    EXPECT_EQ(c.family, SketchFamily::osnap);
    EXPECT_EQ(c.s, 4u);
    EXPECT_EQ(c.n, 1024u);
    EXPECT_DOUBLE_EQ(c.eps, 0.125);
    EXPECT_DOUBLE_EQ(c.delta, 0.05);
    EXPECT_EQ(c.m_grid, (std::vector<std::size_t>{16, 32, 64}));
    EXPECT_EQ(c.instance.kind, InstanceKind::hard_beta);
    EXPECT_EQ(c.instance.ell, 2u);
    EXPECT_EQ(c.trials, 10u);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_DOUBLE_EQ(c.gamma, 0.1);
    EXPECT_EQ(parse("family=count_sketch\nn=10\nd=1\neps=0.5\nm_grid=2\n").s, 1u);
}

TEST(Config, RejectsBadInput) {
    EXPECT_THROW(parse("family=count_sketch\nn=10\nd=1\neps=0.5\nm_grid=2\ncolour=red\n"), ParseError);
    EXPECT_THROW(parse("family=count_sketch\nn=10\nd=1\neps=0.5\n"), ParseError);
    EXPECT_THROW(parse("family=count_sketch\nn=10\nd=1\neps=0.5\nm_grid=4,2\n"), InvalidArgument);
    EXPECT_THROW(parse("family=count_sketch\nn=10\nd=1\neps=1.5\nm_grid=2\n"), InvalidArgument);
    EXPECT_THROW(parse("family=count_sketch\nn=10\nd=11\neps=0.5\nm_grid=2\n"), InvalidArgument);
    EXPECT_THROW(parse("family=osnap\ns=8\nn=10\nd=1\neps=0.5\nm_grid=4\n"), InvalidArgument);
    EXPECT_THROW(parse("family=hadamard_block\nn=64\nd=1\neps=0.03125\nm_grid=8\n"), InvalidArgument);
    EXPECT_NO_THROW(parse("family=hadamard_block\nn=64\nd=1\neps=0.03125\nm_grid=4,16,36\n"));
    EXPECT_THROW(parse("family=count_sketch\nn=10\nd=1\neps=0.5\nm_grid=2\ninstance=fancy\n"), ParseError);
    EXPECT_THROW(parse_count_list("3,x"), ParseError);
}

TEST(Sweep, IdentitySketchNeverFails) {
    const auto c = small_config();
    for (const auto& r : run_sweep(c, 2, identity_factory(c.n))) {
        EXPECT_EQ(r.failures, 0u);
        EXPECT_EQ(r.delta_hat, 0.0);
        EXPECT_EQ(r.ci_low, 0.0);
        EXPECT_EQ(r.family, "identity");
    }
}

TEST(Sweep, RecordsDescribeTheConfig) {
    const auto c = small_config();
    const auto recs = run_sweep(c);
    ASSERT_EQ(recs.size(), c.m_grid.size());
    for (std::size_t k = 0; k < recs.size(); ++k) {
        EXPECT_EQ(recs[k].family, "osnap");
        EXPECT_EQ(recs[k].m, c.m_grid[k]);
        EXPECT_EQ(recs[k].s, 2u);
        EXPECT_EQ(recs[k].trials, 40u);
        EXPECT_LE(recs[k].ci_low, recs[k].delta_hat);
        EXPECT_GE(recs[k].ci_high, recs[k].delta_hat);
    }
    EXPECT_GT(recs.front().failures, recs.back().failures);
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
    const auto c = small_config();
    const auto one = run_sweep(c, 1);
    EXPECT_EQ(one, run_sweep(c, 3));
    EXPECT_EQ(one, run_sweep(c, 8));
}

TEST(Sweep, ReplayReproducesFailures) {
    const auto c = small_config();
    const auto recs = run_sweep(c);
    std::vector<std::size_t> failures(c.m_grid.size(), 0);
    for (std::size_t t = 0; t < c.trials; ++t) {
        const auto all = replay(c, t);
        for (std::size_t k = 0; k < all.size(); ++k) failures[k] += all[k].failed;
        const auto single = replay(c, t, c.m_grid[2]);
        ASSERT_EQ(single.size(), 1u);
        EXPECT_EQ(single[0].report.sigma_min, all[2].report.sigma_min);
    }
    for (std::size_t k = 0; k < recs.size(); ++k) EXPECT_EQ(failures[k], recs[k].failures);
    EXPECT_THROW(replay(c, c.trials), IndexOutOfRange);
}

TEST(Subspaces, KindsProduceIsometries) {
    for (auto kind : {InstanceKind::random_subspace, InstanceKind::hard_mixture, InstanceKind::hard_beta,
                      InstanceKind::hadamard_adversarial}) {
        const auto sub = draw_test_subspace(256, 3, 1.0 / 32, {kind, 2}, 7);
        const auto id = MatrixColumns(SparseColMatrix::identity(256));
        const DenseMatrix u = sketch_subspace(id, sub);
        EXPECT_LE(orthonormality_defect(u), 1e-10) << to_string(kind);
    }
    // eps = 1/8 leaves no mixture levels; the draw falls back to ell = 0.
    EXPECT_EQ(draw_test_subspace(256, 3, 0.125, {InstanceKind::hard_mixture, 0}, 1).factored->params.ell, 0u);
    EXPECT_EQ(draw_test_subspace(256, 3, 1.0 / 32, {InstanceKind::hadamard_adversarial, 0}, 1).factored->params.ell, 2u);
    EXPECT_EQ(draw_test_subspace(256, 3, 1.0 / 32, {InstanceKind::hard_beta, 3}, 1).factored->params.ell, 3u);
}

TEST(Subspaces, LazySketchApplyMatchesMaterialized) {
    const auto spec = SketchSpec::osnap(12, 80, 3, 2);
    const DenseMatrix u = random_subspace(80, 4, 3);
    EXPECT_LE(max_abs_diff(sketch_apply(SeededSketch(spec), u), sketch_apply(sample_sketch(spec), u)), 1e-14);
}

TEST(Report, CsvRoundTrip) {
    const auto recs = run_sweep(small_config());
    std::stringstream ss;
    write_csv(ss, recs);
    std::string header;
    std::getline(ss, header);
    EXPECT_EQ(header, kCsvHeader);
    ss.seekg(0);
    EXPECT_EQ(parse_csv(ss), recs);
    std::stringstream bad("family,m\nx,1\n");
    EXPECT_THROW(parse_csv(bad), ParseError);
}

TEST(Report, SvgHasOnePolylinePerFamily) {
    auto recs = run_sweep(small_config());
    const std::size_t half = recs.size();
    auto c = small_config();
    c.family = SketchFamily::count_sketch;
    c.s = 1;
    for (const auto& r : run_sweep(c)) recs.push_back(r);
    ASSERT_EQ(recs.size(), 2 * half);
    std::ostringstream os;
    write_svg(os, recs);
    EXPECT_EQ(count_substr(os.str(), "<polyline"), 2u);
    EXPECT_NE(os.str().find(">count_sketch<"), std::string::npos);
}

TEST(Report, EmitWritesBothFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "ose_report_test";
    std::filesystem::remove_all(dir);
    const auto paths = emit_report(run_sweep(small_config()), dir);
    EXPECT_TRUE(std::filesystem::exists(paths.csv));
    EXPECT_TRUE(std::filesystem::exists(paths.svg));
    std::ifstream in(paths.csv);
    EXPECT_EQ(parse_csv(in).size(), 5u);
    std::filesystem::remove_all(dir);
}

TEST(MinM, GridShape) {
    const auto g = min_m_grid(4, 64);
    EXPECT_EQ(g.front(), 4u);
    EXPECT_EQ(g.back(), 64u);
    for (std::size_t i = 1; i < g.size(); ++i) EXPECT_GT(g[i], g[i - 1]);
    std::vector<std::size_t> oracle;
    for (int k = 0; k < 32; ++k) {
        const auto m = static_cast<std::size_t>(std::llround(4 * std::pow(2.0, k / 8.0)));
        if (oracle.empty() || m != oracle.back()) oracle.push_back(m);
    }
    oracle.push_back(64);
    EXPECT_EQ(g, oracle);
    EXPECT_NE(std::find(g.begin(), g.end(), 8u), g.end());
    EXPECT_NE(std::find(g.begin(), g.end(), 32u), g.end());
    EXPECT_EQ(min_m_grid(10, 10), (std::vector<std::size_t>{10}));
    const auto h = min_m_grid(100, 1000);
    EXPECT_EQ(h.back(), 1000u);
    EXPECT_EQ(h.size(), 28u);  // 100·2^(k/8) < 1000 for k ≤ 26, then 1000
}

TEST(MinM, IdentityStubReturnsSmallestGridPoint) {
    MinMParams p;
    p.n = 256;
    p.d = 3;
    p.eps = 0.25;
    p.trials = 40;  // Wilson upper bound of 0/40 is below 1.5·delta
    const auto r = min_m_search(p, identity_factory(256));
    EXPECT_EQ(r.m_star, 3u);
    EXPECT_EQ(r.probes.size(), 1u);
}

TEST(MinM, ZeroStubHasNoBracket) {
    MinMParams p;
    p.n = 256;
    p.d = 3;
    p.eps = 0.25;
    p.trials = 20;
    EXPECT_THROW(min_m_search(p, zero_factory(256)), NoBracket);
    p.family = SketchFamily::hadamard_block;
    EXPECT_THROW(min_m_search(p), InvalidArgument);
}

TEST(MinM, BisectionFindsFirstPassingGridPoint) {
    // Stub passes exactly from m ≥ 40 on.
    const std::size_t n = 256;
    SketchFactory step = [n](std::size_t m, std::uint64_t) -> std::unique_ptr<ColumnSketch> {
        if (m >= 40) return std::make_unique<MatrixColumns>(SparseColMatrix::identity(n), "step");
        return std::make_unique<MatrixColumns>(SparseColMatrix(m, n), "step");
    };
    MinMParams p;
    p.n = n;
    p.d = 3;
    p.eps = 0.25;
    p.trials = 40;
    const auto r = min_m_search(p, step);
    const auto grid = min_m_grid(3, n);
    const std::size_t expected = *std::find_if(grid.begin(), grid.end(), [](std::size_t m) { return m >= 40; });
    EXPECT_EQ(r.m_star, expected);
    EXPECT_LE(r.probes.size(), 2 + static_cast<std::size_t>(std::ceil(std::log2(grid.size()))));
}

TEST(MinM, CountSketchSmallCase) {
    MinMParams p;
    p.n = 4096;
    p.d = 2;
    p.eps = 0.25;
    p.delta = 0.2;
    p.trials = 100;
    p.seed = 3;
    p.instance = {InstanceKind::hard_beta, 0};
    const auto r = min_m_search(p);
    EXPECT_GT(r.m_star, 2u);
    EXPECT_LT(r.m_star, 4096u);
    bool seen = false;
    for (const auto& probe : r.probes) {
        if (probe.m != r.m_star) continue;
        seen = true;
        EXPECT_TRUE(probe_passes(probe, p.delta));
    }
    EXPECT_TRUE(seen);
}

TEST(Lemmas, SmallBatchPasses) {
    LemmaBatch b;
    b.seed = 11;
    b.families = 200;
    b.greedy_families = 5;
    const auto r = verify_lemmas(b);
    EXPECT_TRUE(r.ok());
    EXPECT_EQ(r.good_level.total, 200u);
    EXPECT_EQ(r.degenerate.total, degenerate_families().size() * 3);
    b.max_size = 17;
    EXPECT_THROW(verify_lemmas(b), InvalidArgument);
}
