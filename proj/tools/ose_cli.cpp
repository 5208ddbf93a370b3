// Command-line front end: sketch sampling, audits, sweeps, min-m search,
// lemma batches and trial replay.
//
// Exit codes: 0 success, 1 invariant or lemma violation, 2 usage error.

#include "ose/ose.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

std::size_t default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

int cmd_sketch_sample(const std::string& spec_path, const std::string& out_path) {
    auto in = ose::open_input(spec_path);
    const auto spec = ose::read_spec(in);
    const auto p = ose::sample_sketch(spec);
    ose::save_file(out_path, p, [](std::ostream& out, const ose::SparseColMatrix& m) { ose::write_sparse(out, m); });
    std::cout << "wrote " << ose::to_string(spec.family) << " sketch " << p.rows() << "x" << p.cols() << " (nnz "
              << p.nnz() << ") to " << out_path << '\n';
    return kOk;
}

int cmd_audit(const std::string& sketch_path, double eps, std::uint64_t seed, double gamma, std::size_t d,
              bool transcript) {
    auto in = ose::open_input(sketch_path);
    const auto p = ose::read_sparse(in);
    ose::AttackConfig config;
    config.gamma = gamma;
    const auto out = ose::attack(p, eps, d, seed, config);
    std::cout << "sketch " << p.rows() << "x" << p.cols() << ", eps " << ose::format_real(eps) << ", d " << d << '\n'
              << "column norm fraction " << ose::format_real(ose::column_norm_fraction(p, eps)) << '\n'
              << "theta " << ose::format_real(out.theta) << ", ell_theta " << out.ell_theta << ", threshold "
              << ose::format_real(out.threshold) << '\n'
              << "d' " << out.d_prime << ", good columns " << out.good_column_count << ", |S'| "
              << out.collected_set_size << '\n'
              << "verdict " << ose::describe(out.verdict) << '\n';
    if (transcript) std::cout << ose::format_transcript(out.transcript);
    if (out.verdict.kind != ose::VerdictKind::inconclusive) {
        const double value = ose::sparse_dot(p.column(out.verdict.p), p.column(out.verdict.q));
        if (!ose::meets_threshold(value, out.threshold)) {
            std::cerr << "invariant violated: reported pair has inner product " << ose::format_real(value)
                      << " below threshold\n";
            return kViolation;
        }
    }
    return kOk;
}

int cmd_sweep(const std::string& config_path, const std::string& out_dir, std::size_t workers) {
    auto in = ose::open_input(config_path);
    const auto config = ose::read_config(in);
    const auto records = ose::run_sweep(config, workers);
    const auto paths = ose::emit_report(records, out_dir);
    ose::write_csv(std::cout, records);
    std::cerr << "wrote " << paths.csv.string() << " and " << paths.svg.string() << '\n';
    return kOk;
}

int cmd_min_m(const ose::MinMParams& params) {
    const auto result = ose::min_m_search(params);
    ose::write_csv(std::cout, result.probes);
    std::cout << "m_star " << result.m_star << '\n';
    return kOk;
}

int cmd_verify_lemmas(const ose::LemmaBatch& batch) {
    const auto r = ose::verify_lemmas(batch);
    auto line = [](const char* name, const ose::LemmaTally& t) {
        std::cout << name << ' ' << t.passed << '/' << t.total << '\n';
    };
    line("good_level", r.good_level);
    line("great_collision_exhaustive", r.great_collision);
    line("degenerate", r.degenerate);
    line("great_collision_greedy (informational)", r.greedy);
    if (!r.ok()) {
        std::cerr << "lemma violation detected\n";
        return kViolation;
    }
    return kOk;
}

int cmd_replay(const std::string& config_path, std::size_t trial, std::optional<std::size_t> m) {
    auto in = ose::open_input(config_path);
    const auto config = ose::read_config(in);
    for (const auto& t : ose::replay(config, trial, m))
        std::cout << "trial " << trial << " m " << t.m << " sigma_min " << ose::format_real(t.report.sigma_min)
                  << " sigma_max " << ose::format_real(t.report.sigma_max) << (t.failed ? " FAIL" : " ok") << '\n';
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Oblivious subspace embedding experiments"};
    app.require_subcommand(1);

    // sketch sample
    auto* sketch = app.add_subcommand("sketch", "Sketch utilities");
    sketch->require_subcommand(1);
    auto* sample = sketch->add_subcommand("sample", "Sample a sketch from a spec file");
    std::string spec_path, sketch_out;
    sample->add_option("--spec", spec_path, "key=value sketch spec")->required();
    sample->add_option("--out", sketch_out, "output sparse matrix file")->required();

    // audit
    auto* audit = app.add_subcommand("audit", "Run the adversarial audit on a sketch");
    std::string audit_path;
    double audit_eps = 0.0, audit_gamma = 0.0;
    std::uint64_t audit_seed = 0;
    std::size_t audit_d = 4;
    bool audit_transcript = false;
    audit->add_option("--sketch", audit_path, "sparse matrix file")->required();
    audit->add_option("--eps", audit_eps, "distortion")->required()->check(CLI::Range(1e-9, 0.999999));
    audit->add_option("--seed", audit_seed, "attack seed")->required();
    audit->add_option("--gamma", audit_gamma, "width exponent slack in [0, 1/2)")->check(CLI::Range(0.0, 0.4999999));
    audit->add_option("--d", audit_d, "subspace dimension")->check(CLI::PositiveNumber);
    audit->add_flag("--transcript", audit_transcript, "print the per-step transcript");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Estimate failure rates over an m grid");
    std::string sweep_config, sweep_dir;
    std::size_t sweep_workers = default_workers();
    sweep->add_option("--config", sweep_config, "key=value sweep config")->required();
    sweep->add_option("--out-dir", sweep_dir, "directory for sweep.csv and sweep.svg")->required();
    sweep->add_option("--workers", sweep_workers, "worker threads")->check(CLI::PositiveNumber);

    // min-m
    auto* minm = app.add_subcommand("min-m", "Search the smallest m with failure rate <= delta");
    ose::MinMParams mp;
    mp.n = 1 << 16;
    mp.trials = 400;
    mp.workers = default_workers();
    std::string mp_family, mp_instance = "hard_mixture";
    minm->add_option("--family", mp_family, "count_sketch | osnap | dense_rademacher")->required();
    minm->add_option("--d", mp.d, "subspace dimension")->required()->check(CLI::PositiveNumber);
    minm->add_option("--eps", mp.eps, "distortion")->required()->check(CLI::Range(1e-9, 0.999999));
    minm->add_option("--delta", mp.delta, "target failure probability")->required()->check(CLI::Range(1e-9, 0.999999));
    minm->add_option("--instance", mp_instance, "random_subspace | hard_mixture | hard_beta | hadamard_adversarial");
    minm->add_option("--ell", mp.instance.ell, "level for hard_beta");
    minm->add_option("--s", mp.s, "osnap column sparsity")->check(CLI::PositiveNumber);
    minm->add_option("--n", mp.n, "ambient dimension")->check(CLI::PositiveNumber);
    minm->add_option("--trials", mp.trials, "trials per probe")->check(CLI::PositiveNumber);
    minm->add_option("--seed", mp.seed, "seed");
    minm->add_option("--workers", mp.workers, "worker threads")->check(CLI::PositiveNumber);

    // verify-lemmas
    auto* lemmas = app.add_subcommand("verify-lemmas", "Batch-check the collision lemmas");
    ose::LemmaBatch batch;
    lemmas->add_option("--seed", batch.seed, "seed")->required();
    lemmas->add_option("--families", batch.families, "random families in the exhaustive tier");
    lemmas->add_option("--max-size", batch.max_size, "largest family size")->check(CLI::Range(1, 16));

    // replay
    auto* rep = app.add_subcommand("replay", "Re-run one sweep trial");
    std::string rep_config;
    std::size_t rep_trial = 0;
    std::optional<std::size_t> rep_m;
    rep->add_option("--config", rep_config, "key=value sweep config")->required();
    rep->add_option("--trial", rep_trial, "trial index")->required();
    rep->add_option("--m", rep_m, "single m to replay");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (sample->parsed()) return cmd_sketch_sample(spec_path, sketch_out);
        if (audit->parsed()) return cmd_audit(audit_path, audit_eps, audit_seed, audit_gamma, audit_d, audit_transcript);
        if (sweep->parsed()) return cmd_sweep(sweep_config, sweep_dir, sweep_workers);
        if (minm->parsed()) {
            mp.family = ose::parse_family(mp_family);
            mp.instance.kind = ose::parse_instance_kind(mp_instance);
            return cmd_min_m(mp);
        }
        if (lemmas->parsed()) return cmd_verify_lemmas(batch);
        if (rep->parsed()) return cmd_replay(rep_config, rep_trial, rep_m);
    } catch (const ose::LemmaViolated& e) {
        std::cerr << "lemma violated: " << e.what() << '\n';
        return kViolation;
    } catch (const ose::NoBracket& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kViolation;
    } catch (const ose::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
