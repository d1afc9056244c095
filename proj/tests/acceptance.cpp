// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "stg3net/config.hpp"
#include "stg3net/g2n.hpp"
#include "stg3net/log.hpp"
#include "stg3net/losses.hpp"
#include "stg3net/metrics.hpp"
#include "stg3net/pipeline.hpp"
#include "stg3net/synth.hpp"

#include "gradcheck_cases.hpp"
#include "oracles.hpp"
#include "toy.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace stg3net;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and thresholds.
constexpr double kGradTolKinked = 1e-4;
constexpr double kGradTolSmooth = 1e-6;
constexpr double kGradBudgetSeconds = 30.0;
constexpr double kOracleTol = 1e-12;
constexpr int kOracleTrials = 200;
constexpr int kOracleMaxN = 12;
constexpr double kF1Expected = 0.61538;
constexpr double kF1Tol = 1e-9;
constexpr int kSeeds = 5;
constexpr double kMinMedianAri = 0.8;
constexpr double kRunBudgetSeconds = 600.0;
constexpr double kSceDropRatio = 0.5;
constexpr int kSceCheckEpoch = 200;
constexpr int kMnnK = 10;

struct Line {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

std::vector<Line> g_lines;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    g_lines.push_back({id, title, pass, detail});
    std::cout << (pass ? "PASS" : "FAIL") << " [" << id << "] " << title << ": " << detail << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(6);
    s << v;
    return s.str();
}

std::string join(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
        out += (i ? ", " : "") + fmt(v[i]);
    }
    return out + "]";
}

void gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_smooth = 0.0, worst_kinked = 0.0;
    std::string failing;
    for (const auto& c : gradcheck::primitive_cases()) {
        const double err = ad::grad_check(c.f, c.theta);
        const bool smooth = c.tol <= gradcheck::kSmooth;
        (smooth ? worst_smooth : worst_kinked) = std::max(smooth ? worst_smooth : worst_kinked, err);
        if (err >= (smooth ? kGradTolSmooth : kGradTolKinked)) {
            failing += std::string(" ") + c.name;
        }
    }
    toy::FullObjective obj;
    double worst_full = 0.0;
    for (auto* p : obj.params.all()) {
        const std::string name = p->name;
        const double err = ad::grad_check([&](ad::Tape& t, ad::Var x) { return obj(t, x, name); }, p->value);
        worst_full = std::max(worst_full, err);
        if (err >= kGradTolKinked) {
            failing += " full:" + name;
        }
    }
    const double elapsed = seconds_since(t0);
    const bool pass = failing.empty() && elapsed < kGradBudgetSeconds;
    report(1, "gradient correctness", pass,
           "smooth max " + fmt(worst_smooth) + " (< " + fmt(kGradTolSmooth) + "), kinked max " + fmt(worst_kinked) +
               ", full objective max " + fmt(worst_full) + " (< " + fmt(kGradTolKinked) + "), " + fmt(elapsed) + " s" +
               (failing.empty() ? "" : ", failing:" + failing));
}

void metric_oracles() {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> len(2, kOracleMaxN), k(1, 5);
    double worst = 0.0;
    for (int trial = 0; trial < kOracleTrials; ++trial) {
        const int n = len(rng);
        std::uniform_int_distribution<int> la(0, k(rng) - 1), lb(0, k(rng) - 1);
        Labels a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            a[static_cast<std::size_t>(i)] = la(rng);
            b[static_cast<std::size_t>(i)] = lb(rng);
        }
        worst = std::max({worst, std::abs(metrics::ari(a, b) - oracle::ari_pairs(a, b)),
                          std::abs(metrics::nmi(a, b) - oracle::nmi_direct(a, b)),
                          std::abs(metrics::homogeneity(a, b) - oracle::homogeneity_direct(a, b)),
                          std::abs(metrics::completeness(a, b) - oracle::homogeneity_direct(b, a))});
    }
    const double ari_example = metrics::ari({0, 0, 1, 1}, {0, 1, 0, 1});
    const double com_example = metrics::completeness({0, 0, 1, 1}, {0, 1, 2, 3});
    const bool pass = worst < kOracleTol && ari_example == -0.5 && com_example == 0.5;
    report(2, "metric oracle equivalence", pass,
           "max deviation " + fmt(worst) + " over " + std::to_string(kOracleTrials) + " labelings, ARI example " +
               fmt(ari_example) + ", COM example " + fmt(com_example));
}

void endpoints() {
    const double acc = metrics::accuracy(1.0, 1.0, 1.0);
    const double cons = metrics::consistency(0.0, 0.0);
    const double f1 = metrics::f1_from_norms(0.2, 0.5);
    const bool pass = acc == 1.0 && cons == 0.0 && std::abs(f1 - kF1Expected) <= 1e-5 &&
                      std::abs(f1 - 0.8 / 1.3) <= kF1Tol;
    report(3, "score endpoints", pass, "accuracy " + fmt(acc) + ", consistency " + fmt(cons) + ", f1 " + fmt(f1));
}

struct SeedRun {
    double ari = 0.0;
    double f1 = 0.0;
    double sce_first = 0.0;
    double sce_check = 0.0;
    double seconds = 0.0;
};

SeedRun run_benchmark(Variant variant, std::uint64_t seed) {
    RunConfig cfg;
    cfg.seed = seed;
    cfg.ablation.variant = variant;
    cfg.finalize();
    const auto ds = synth::generate(cfg.synth);
    const auto data = preprocess(ds.slices, cfg.n_top_genes);
    const auto graph = build_spatial_graph(data, cfg.k_spatial);
    const auto t0 = std::chrono::steady_clock::now();
    const auto r = run_pipeline(data, graph, ds.stacked_truth(), cfg);
    SeedRun out;
    out.seconds = seconds_since(t0);
    out.ari = r.report.ari;
    out.f1 = r.report.f1_lisi;
    out.sce_first = r.trained.history.front().sce;
    out.sce_check = r.trained.history[kSceCheckEpoch - 1].sce;
    return out;
}

void integration_and_reconstruction() {
    std::vector<SeedRun> full, gan, only;
    for (int s = 0; s < kSeeds; ++s) {
        full.push_back(run_benchmark(Variant::full, static_cast<std::uint64_t>(s)));
        gan.push_back(run_benchmark(Variant::mask_gan, static_cast<std::uint64_t>(s)));
        only.push_back(run_benchmark(Variant::only_mask, static_cast<std::uint64_t>(s)));
    }
    auto column = [](const std::vector<SeedRun>& runs, double SeedRun::*field) {
        std::vector<double> v;
        for (const auto& r : runs) v.push_back(r.*field);
        return v;
    };
    const double ari_full = metrics::median(column(full, &SeedRun::ari));
    const double f1_full = metrics::median(column(full, &SeedRun::f1));
    const double f1_gan = metrics::median(column(gan, &SeedRun::f1));
    const double f1_only = metrics::median(column(only, &SeedRun::f1));
    double slowest = 0.0;
    for (const auto* runs : {&full, &gan, &only}) {
        for (const auto& r : *runs) slowest = std::max(slowest, r.seconds);
    }
    const bool pass4 = ari_full >= kMinMedianAri && f1_full > f1_gan && f1_gan > f1_only && slowest < kRunBudgetSeconds;
    report(4, "synthetic integration", pass4,
           "median ARI(full) " + fmt(ari_full) + " (>= " + fmt(kMinMedianAri) + ") per seed " +
               join(column(full, &SeedRun::ari)) + "; median F1LISI full " + fmt(f1_full) + " > mask-gan " + fmt(f1_gan) +
               " > only-mask " + fmt(f1_only) + "; slowest run " + fmt(slowest) + " s");

    bool pass5 = true;
    std::vector<double> ratios;
    for (const auto& r : full) {
        ratios.push_back(r.sce_check / r.sce_first);
        pass5 = pass5 && r.sce_check < kSceDropRatio * r.sce_first;
    }
    report(5, "reconstruction learning", pass5,
           "epoch-" + std::to_string(kSceCheckEpoch) + " / epoch-1 sce per seed " + join(ratios) + " (< " +
               fmt(kSceDropRatio) + ")");
}

void pass_counts() {
    bool pass = true;
    std::string detail;
    for (int s : {2, 5, 35}) {
        const Index n = 4 * s;
        std::mt19937_64 rng(static_cast<std::uint64_t>(s));
        std::normal_distribution<double> g(0.0, 1.0);
        Matrix h(n, 4);
        for (Index i = 0; i < n; ++i) for (Index j = 0; j < 4; ++j) h(i, j) = g(rng);
        Labels slice_of;
        for (Index i = 0; i < n; ++i) slice_of.push_back(static_cast<int>(i / 4));
        PassCounter counter;
        G2NConfig cfg;
        cfg.kc = 2;
        select_g2n_pairs(h, slice_of, cfg, &counter);
        select_mnn_pairs(h, slice_of, 1, &counter);
        const auto expected_mnn = static_cast<std::size_t>(s * (s - 1) / 2);
        pass = pass && counter.g2n_passes == static_cast<std::size_t>(s) && counter.mnn_passes == expected_mnn;
        detail += (detail.empty() ? "" : "; ") + std::string("S=") + std::to_string(s) + " g2n " +
                  std::to_string(counter.g2n_passes) + " mnn " + std::to_string(counter.mnn_passes);
    }
    report(6, "pair-selection passes", pass, detail);
}

double same_domain_fraction(const std::vector<std::pair<Index, Index>>& pairs, const Labels& truth) {
    double same = 0.0;
    for (auto [a, b] : pairs) same += truth[static_cast<std::size_t>(a)] == truth[static_cast<std::size_t>(b)];
    return pairs.empty() ? 0.0 : same / static_cast<double>(pairs.size());
}

void pair_purity() {
    std::vector<double> g2n_purity, mnn_purity;
    std::size_t smallest = std::numeric_limits<std::size_t>::max();
    for (int s = 0; s < kSeeds; ++s) {
        RunConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(s);
        cfg.synth.drop_domain_on_slice = true;
        cfg.finalize();
        const auto ds = synth::generate(cfg.synth);
        const auto data = preprocess(ds.slices, cfg.n_top_genes);
        const auto graph = build_spatial_graph(data, cfg.k_spatial);
        const Labels truth = ds.stacked_truth();
        const auto trained = train(data, graph, cfg.train, cfg.ablation);

        G2NConfig g2n_cfg = cfg.train.g2n;
        g2n_cfg.seed = cfg.seed;
        std::vector<std::pair<Index, Index>> g2n, mnn;
        for (const auto& t : select_g2n_pairs(trained.H, data.slice_of, g2n_cfg).triples) g2n.emplace_back(t[0], t[1]);
        mnn = select_mnn_pairs(trained.H, data.slice_of, kMnnK);
        // Equal pair counts: subsample the larger set.
        std::mt19937_64 rng(cfg.seed);
        auto& larger = g2n.size() > mnn.size() ? g2n : mnn;
        std::shuffle(larger.begin(), larger.end(), rng);
        larger.resize(std::min(g2n.size(), mnn.size()));
        smallest = std::min(smallest, g2n.size());
        g2n_purity.push_back(same_domain_fraction(g2n, truth));
        mnn_purity.push_back(same_domain_fraction(mnn, truth));
    }
    const double g = metrics::median(g2n_purity), m = metrics::median(mnn_purity);
    report(7, "pair purity with a missing domain", g > m && smallest > 0,
           "median same-domain fraction g2n " + fmt(g) + " vs mnn " + fmt(m) + " per seed g2n " + join(g2n_purity) +
               " mnn " + join(mnn_purity) + ", fewest compared pairs " + std::to_string(smallest));
}

int cli(const std::string& args) {
    const std::string cmd = std::string(STG3NET_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism() {
    const fs::path root = fs::temp_directory_path() / "stg3net_acceptance";
    fs::remove_all(root);
    const std::string data = (root / "data").string();
    bool ok = cli("synth --out " + data + " --seed 3") == 0;
    for (const char* run : {"a", "b"}) {
        ok = ok && cli("run --manifest " + data + "/manifest.json --truth " + data + "/truth.csv --seed 3 --out " +
                       (root / run).string() + " -q") == 0;
    }
    const std::string a = slurp(root / "a" / "metrics.json"), b = slurp(root / "b" / "metrics.json");
    report(8, "determinism", ok && !a.empty() && a == b,
           ok ? (a == b ? "metrics.json byte-identical (" + std::to_string(a.size()) + " bytes)" : "metrics.json differs")
              : "CLI invocation failed");
}

void invariant_suite() {
    std::string failing;
    int count = 0;
    std::istringstream paths(STG3NET_UNIT_TESTS);
    std::string path;
    while (std::getline(paths, path, '|')) {
        ++count;
        const int status = std::system((path + " > /dev/null 2>&1").c_str());
        if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            failing += " " + fs::path(path).filename().string();
        }
    }
    report(9, "invariant suite", failing.empty() && count > 0,
           std::to_string(count) + " unit test binaries" + (failing.empty() ? " all passing" : ", failing:" + failing));
}

}

int main() {
    logging::set_level(logging::Level::quiet);
    gradient_correctness();
    metric_oracles();
    endpoints();
    integration_and_reconstruction();
    pass_counts();
    pair_purity();
    determinism();
    invariant_suite();

    int failed = 0;
    for (const auto& l : g_lines) failed += !l.pass;
    std::cout << (failed ? "FAILED " : "ALL PASSED ") << g_lines.size() - static_cast<std::size_t>(failed) << "/"
              << g_lines.size() << std::endl;
    return failed ? 1 : 0;
}
