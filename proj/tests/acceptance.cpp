// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [criterion numbers...]   (default: all)

#include "ccme/extraction.hpp"
#include "ccme/graph.hpp"
#include "ccme/metrics.hpp"
#include "ccme/null_model.hpp"
#include "ccme/wsbm.hpp"
#include "support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace ccme;
using ccme::testing::correlation;
using ccme::testing::mean;
using ccme::testing::power_law_null;
using ccme::testing::variance;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    double limit_seconds;
    std::function<Outcome()> run;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// 1 -------------------------------------------------------------------------

// Largest k with #{p_i <= k alpha / n} >= k; reject every p_i <= k alpha / n.
std::vector<std::size_t> bh_brute_force(const std::vector<double>& p, double alpha) {
    const std::size_t n = p.size();
    std::size_t best = 0;
    for (std::size_t k = 1; k <= n; ++k) {
        const double cut = static_cast<double>(k) * alpha / static_cast<double>(n);
        std::size_t count = 0;
        for (double x : p)
            count += x <= cut;
        if (count >= k)
            best = k;
    }
    std::vector<std::size_t> out;
    if (best == 0)
        return out;
    const double cut = static_cast<double>(best) * alpha / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (p[i] <= cut)
            out.push_back(i);
    }
    return out;
}

Outcome bh_oracle() {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(1, 12);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_real_distribution<double> small(0.0, 0.1);
    std::uniform_int_distribution<int> grid(0, 40);
    const double alphas[] = {0.05, 0.1, 0.2};
    std::size_t mismatches = 0, rejections = 0;
    for (int t = 0; t < 10000; ++t) {
        std::vector<double> p(static_cast<std::size_t>(len(rng)));
        const int mode = t % 3;
        for (auto& x : p) {
            if (mode == 0)
                x = unif(rng);
            else if (mode == 1)
                x = small(rng);
            else
                x = grid(rng) * 0.0025; // many ties
        }
        const double alpha = alphas[t % 3];
        const auto got = bh_select(p, alpha).rejected;
        const auto want = bh_brute_force(p, alpha);
        mismatches += got != want;
        rejections += want.size();
    }
    return {mismatches == 0, fmt("10000 vectors, %zu mismatches, %zu total rejections", mismatches,
                                 rejections)};
}

// 2 -------------------------------------------------------------------------

struct ExactMoments {
    double mean, var;
};

// Exhaustive over all 2^(n(n-1)/2) edge configurations of the whole graph.
std::vector<ExactMoments> exhaustive_moments(const NullParams& p, const std::vector<NodeId>& set) {
    const std::size_t n = p.size();
    double dT = 0.0, sT = 0.0;
    for (std::size_t u = 0; u < n; ++u) {
        dT += p.degree[u];
        sT += p.strength[u];
    }
    struct Pair {
        std::size_t u, v;
        double prob, f;
    };
    std::vector<Pair> pairs;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) {
            const double prob = std::min(1.0, p.degree[u] * p.degree[v] / dT);
            const double f = (p.strength[u] * p.strength[v] / sT) / prob;
            pairs.push_back({u, v, prob, f});
        }
    }
    std::vector<char> in(n, 0);
    for (NodeId v : set)
        in[v] = 1;
    std::vector<double> m1(n, 0.0), m2(n, 0.0);
    const std::size_t configs = std::size_t{1} << pairs.size();
    for (std::size_t c = 0; c < configs; ++c) {
        double prob = 1.0;
        std::vector<double> cond_mean(n, 0.0), cond_var(n, 0.0);
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            const auto& pr = pairs[e];
            const bool present = (c >> e) & 1;
            prob *= present ? pr.prob : 1.0 - pr.prob;
            if (!present)
                continue;
            // weight = f xi, E = f, Var = kappa f^2
            if (in[pr.v]) {
                cond_mean[pr.u] += pr.f;
                cond_var[pr.u] += p.kappa * pr.f * pr.f;
            }
            if (in[pr.u]) {
                cond_mean[pr.v] += pr.f;
                cond_var[pr.v] += p.kappa * pr.f * pr.f;
            }
        }
        if (prob == 0.0)
            continue;
        for (std::size_t u = 0; u < n; ++u) {
            m1[u] += prob * cond_mean[u];
            m2[u] += prob * (cond_var[u] + cond_mean[u] * cond_mean[u]);
        }
    }
    std::vector<ExactMoments> out(n);
    for (std::size_t u = 0; u < n; ++u)
        out[u] = {m1[u], m2[u] - m1[u] * m1[u]};
    return out;
}

Outcome null_moment_oracle() {
    std::mt19937_64 rng(22);
    std::uniform_int_distribution<int> size(2, 6);
    std::uniform_real_distribution<double> deg(0.2, 4.0);
    std::uniform_real_distribution<double> str(0.1, 5.0);
    std::uniform_real_distribution<double> kap(0.05, 2.0);
    double worst = 0.0;
    std::size_t checks = 0, truncated_instances = 0;
    for (int t = 0; t < 300; ++t) {
        const auto n = static_cast<std::size_t>(size(rng));
        NullParams p;
        p.degree.resize(n);
        p.strength.resize(n);
        for (std::size_t u = 0; u < n; ++u) {
            p.degree[u] = deg(rng);
            p.strength[u] = str(rng);
        }
        if (t % 4 == 0)
            p.degree[0] = 6.0 * n; // forces r_uv(d) > 1 on some pairs
        p.kappa = kap(rng);
        std::vector<NodeId> set;
        for (std::size_t u = 0; u < n; ++u) {
            if (rng() % 2)
                set.push_back(static_cast<NodeId>(u));
        }
        if (set.empty())
            set.push_back(0);
        double dT = 0.0;
        for (double x : p.degree)
            dT += x;
        for (std::size_t u = 0; u < n && t % 4 == 0; ++u) {
            if (p.degree[0] * p.degree[u] > dT && u != 0) {
                ++truncated_instances;
                break;
            }
        }
        const auto exact = exhaustive_moments(p, set);
        MomentEngine engine(p);
        engine.prepare(set);
        for (std::size_t u = 0; u < n; ++u) {
            const auto direct = null_moments(static_cast<NodeId>(u), set, p);
            const auto batched = engine.moments(static_cast<NodeId>(u));
            for (const auto& m : {direct, batched}) {
                worst = std::max(worst, std::abs(m.mean - exact[u].mean));
                worst = std::max(worst, std::abs(m.sd * m.sd - exact[u].var));
            }
            ++checks;
        }
    }
    return {worst < 1e-9 && truncated_instances > 0,
            fmt("%zu node/set checks (direct and batched), %zu with truncated pairs, max abs error %.3g",
                checks, truncated_instances, worst)};
}

// 3 -------------------------------------------------------------------------

Outcome clt_calibration() {
    const auto params = power_law_null(4000, 0.5, 33);
    const WeightDistribution dist{WeightDistribution::Family::Gamma, 0.5};
    const auto z = standardized_null_statistics(params, dist, 500, 500, 34);
    const double m = mean(z), v = variance(z), ks = ks_distance_to_normal(z);
    const bool pass = std::abs(m) <= 0.15 && v >= 0.8 && v <= 1.2 && ks <= 0.08;
    return {pass, fmt("mean %.4f, variance %.4f, KS %.4f", m, v, ks)};
}

// 4 -------------------------------------------------------------------------

Outcome kappa_consistency() {
    const WeightDistribution dist{WeightDistribution::Family::Gamma, 0.5};
    int good = 0;
    double worst = 0.0;
    for (int seed = 0; seed < 20; ++seed) {
        const auto params = power_law_null(2000, 0.5, 400 + seed);
        const auto net = sample_null_network(params, dist, 4000 + seed);
        const double k = estimate_kappa(net);
        worst = std::max(worst, std::abs(k - 0.5));
        good += std::abs(k - 0.5) < 0.05;
    }
    return {good >= 19, fmt("%d/20 within 0.05, max deviation %.4f", good, worst)};
}

// 5 -------------------------------------------------------------------------

Outcome null_fdr() {
    const WeightDistribution dist{WeightDistribution::Family::Gamma, 0.5};
    int empty = 0;
    std::size_t found = 0;
    for (int seed = 0; seed < 50; ++seed) {
        const auto params = power_law_null(1000, 0.5, 500 + seed);
        const auto net = sample_null_network(params, dist, 5000 + seed);
        ExtractionConfig cfg;
        cfg.seed = static_cast<std::uint64_t>(seed);
        const auto result = run_ccme(net, cfg);
        empty += result.cover.communities.empty();
        found += result.cover.communities.size();
    }
    return {empty >= 45, fmt("%d/50 empty covers, %zu communities in total", empty, found)};
}

// 6, 7 ----------------------------------------------------------------------

struct RecoveryStats {
    std::vector<double> onmi, cib, bic;
};

RecoveryStats recover(BenchmarkConfig cfg, int seeds, std::uint64_t base) {
    RecoveryStats r;
    for (int s = 0; s < seeds; ++s) {
        const auto b = generate_benchmark(cfg, base + s);
        ExtractionConfig ec;
        ec.seed = base + s;
        const auto result = run_ccme(b.net, ec);
        const auto report = evaluate(result.cover, b.truth);
        r.onmi.push_back(report.onmi);
        r.cib.push_back(report.pct_cib);
        r.bic.push_back(report.pct_bic);
    }
    return r;
}

std::string summary(const std::vector<double>& x) {
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return fmt("mean %.3f [%.3f, %.3f]", mean(x), *lo, *hi);
}

Outcome recovery_default() {
    BenchmarkConfig cfg;
    cfg.n = 2000;
    cfg.num_communities = 4;
    cfg.s_e = 3.0;
    cfg.s_w = 3.0;
    const auto r = recover(cfg, 20, 600);
    int good = 0;
    for (std::size_t i = 0; i < r.onmi.size(); ++i)
        good += r.onmi[i] >= 0.95 && r.cib[i] <= 5.0;
    int onmi_ok = 0;
    for (double x : r.onmi)
        onmi_ok += x >= 0.95;
    return {good >= 18, fmt("%d/20 meet both; onmi>=0.95 in %d/20, onmi %s, %%cib %s", good, onmi_ok,
                            summary(r.onmi).c_str(), summary(r.cib).c_str())};
}

Outcome recovery_single_signal() {
    std::string detail;
    bool pass = true;
    for (auto [se, sw] : {std::pair{1.0, 3.0}, std::pair{3.0, 1.0}}) {
        BenchmarkConfig cfg;
        cfg.n = 2000;
        cfg.s_e = se;
        cfg.s_w = sw;
        const auto r = recover(cfg, 20, se > sw ? 800 : 700);
        int good = 0;
        for (double x : r.onmi)
            good += x >= 0.90;
        pass = pass && good >= 16;
        detail += fmt("(s_e=%g, s_w=%g) %d/20 onmi>=0.90, onmi %s; ", se, sw, good,
                      summary(r.onmi).c_str());
    }
    return {pass, detail};
}

// 8 -------------------------------------------------------------------------

// the update_set example calls s_e = s_w = 3 strong
constexpr double kStrongSignal = 3.0;

Outcome fixed_point_stability() {
    BenchmarkConfig cfg;
    cfg.n = 2000;
    cfg.s_e = kStrongSignal;
    cfg.s_w = kStrongSignal;
    int good = 0;
    std::size_t communities = 0, stable_communities = 0, worst_diff = 0;
    for (int s = 0; s < 20; ++s) {
        const auto b = generate_benchmark(cfg, 900 + s);
        const auto params = estimate_params(b.net);
        SetUpdater update(b.net, params, 0.05);
        bool all = true;
        for (const auto& c : b.truth.cover.communities) {
            const auto next = update(c);
            std::vector<NodeId> diff;
            std::set_symmetric_difference(c.begin(), c.end(), next.begin(), next.end(),
                                          std::back_inserter(diff));
            worst_diff = std::max(worst_diff, diff.size());
            ++communities;
            stable_communities += diff.empty();
            all = all && diff.empty();
        }
        good += all;
    }
    return {good >= 18,
            fmt("s_e=s_w=%g: %d/20 seeds with every planted community fixed; %zu/%zu communities "
                "fixed, largest symmetric difference %zu",
                kStrongSignal, good, stable_communities, communities, worst_diff)};
}

// 9 -------------------------------------------------------------------------

Outcome background_specificity() {
    BenchmarkConfig cfg;
    cfg.n = 2000;
    cfg.n_b = 500;
    cfg.o_n = 500;
    cfg.o_m = 2;
    const auto r = recover(cfg, 20, 1000);
    int good = 0;
    for (std::size_t i = 0; i < r.onmi.size(); ++i)
        good += r.bic[i] <= 10.0 && r.cib[i] <= 10.0;
    return {good >= 16, fmt("%d/20 meet both; %%bic %s, %%cib %s, onmi %s", good,
                            summary(r.bic).c_str(), summary(r.cib).c_str(),
                            summary(r.onmi).c_str())};
}

// 10 ------------------------------------------------------------------------

Outcome background_fidelity() {
    BenchmarkConfig cfg;
    cfg.n = 2000;
    cfg.n_b = 500;
    double worst_residual = 0.0, worst_corr = 1.0, worst_z = 0.0;
    for (int s = 0; s < 10; ++s) {
        const auto b = generate_benchmark(cfg, 1100 + s);
        worst_residual = std::max({worst_residual, b.background.phi_residual});
        worst_corr = std::min(worst_corr, correlation(b.net.degrees(), b.background.phi_prime));
        const auto z = background_block_z(b.net, estimate_params(b.net), b.truth);
        for (double x : z)
            worst_z = std::max(worst_z, std::abs(x));
    }
    const bool pass = worst_residual < 1e-9 && worst_corr >= 0.99 && worst_z <= 0.3;
    return {pass, fmt("10 runs: max residual %.3g, min degree/phi' correlation %.4f, max |avg z| %.3f",
                      worst_residual, worst_corr, worst_z)};
}

// 11 ------------------------------------------------------------------------

Outcome consistency_checker() {
    std::mt19937_64 rng(1212);
    std::uniform_real_distribution<double> entry(0.01, 5.0);
    std::uniform_real_distribution<double> share(0.01, 0.99);
    int disagreements = 0, satisfied = 0;
    for (int t = 0; t < 1000; ++t) {
        BlockMatrix P(2, 0.0), M(2, 0.0);
        P(0, 0) = entry(rng);
        P(1, 1) = entry(rng);
        P(0, 1) = P(1, 0) = entry(rng);
        M(0, 0) = entry(rng);
        M(1, 1) = entry(rng);
        M(0, 1) = M(1, 0) = entry(rng);
        const double a = share(rng);
        const std::vector<double> pi{a, 1.0 - a};
        const bool got = consistency_condition(P, M, pi).satisfied;
        const double h11 = P(0, 0) * M(0, 0), h22 = P(1, 1) * M(1, 1), h12 = P(0, 1) * M(0, 1);
        const bool want = h11 * h22 > h12 * h12;
        disagreements += got != want;
        satisfied += want;
    }
    return {disagreements == 0,
            fmt("1000 instances (%d satisfied), %d disagreements", satisfied, disagreements)};
}

// 12 ------------------------------------------------------------------------

Outcome modularity_identities() {
    std::mt19937_64 rng(1313);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst_single = 0.0, worst_decomp = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t n = 3 + rng() % 18;
        std::vector<Edge> edges;
        for (NodeId u = 0; u < n; ++u) {
            for (NodeId v = u + 1; v < n; ++v) {
                if (unif(rng) < 0.4)
                    edges.push_back({u, v, 0.1 + 5.0 * unif(rng)});
            }
        }
        if (edges.empty())
            edges.push_back({0, 1, 1.0});
        const auto net = WeightedNetwork::from_edges(n, edges);
        const std::vector<std::size_t> one(n, 0);
        worst_single = std::max(worst_single, std::abs(weighted_modularity(one, net)));

        std::vector<std::size_t> part(n);
        const std::size_t blocks = 1 + rng() % 4;
        for (auto& b : part)
            b = rng() % blocks;
        // direct double sum over ordered pairs, self pairs included
        const auto& s = net.strengths();
        const double sT = net.total_strength();
        double direct = 0.0;
        for (NodeId u = 0; u < n; ++u) {
            for (NodeId v = 0; v < n; ++v) {
                if (part[u] == part[v])
                    direct += (u == v ? 0.0 : net.weight(u, v)) - s[u] * s[v] / sT;
            }
        }
        direct /= sT;
        const auto a = modularity_contributions(part, net);
        double decomposed = 0.0;
        for (double x : a)
            decomposed += x;
        decomposed /= sT;
        worst_decomp = std::max({worst_decomp, std::abs(decomposed - direct),
                                 std::abs(weighted_modularity(part, net) - direct)});
    }
    return {worst_single < 1e-9 && worst_decomp < 1e-9,
            fmt("100 graphs: max |Q single block| %.3g, max decomposition error %.3g", worst_single,
                worst_decomp)};
}

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all{
        {1, "BH oracle equivalence", 10, bh_oracle},
        {2, "null-moment oracle", 30, null_moment_oracle},
        {3, "CLT calibration", 300, clt_calibration},
        {4, "kappa consistency", 120, kappa_consistency},
        {5, "null FDR calibration", 600, null_fdr},
        {6, "recovery, s_e = s_w = 3, K = 4", 900, recovery_default},
        {7, "single-signal recovery", 1200, recovery_single_signal},
        {8, "fixed-point stability", 600, fixed_point_stability},
        {9, "background specificity", 1200, background_specificity},
        {10, "background construction fidelity", 300, background_fidelity},
        {11, "consistency-condition checker", 1, consistency_checker},
        {12, "weighted-modularity identities", 10, modularity_identities},
    };
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i)
        wanted.insert(std::atoi(argv[i]));

    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_seconds;
        const bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s [%2d] %s: %s (%.2f s, limit %.0f s%s)\n", pass ? "PASS" : "FAIL", c.id,
                    c.name, o.detail.c_str(), secs, c.limit_seconds, in_time ? "" : ", too slow");
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
