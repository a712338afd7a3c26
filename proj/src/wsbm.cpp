#include "ccme/wsbm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace ccme {

namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

bool shares_block(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j)
            return true;
        if (*i < *j)
            ++i;
        else
            ++j;
    }
    return false;
}

double pair_block_entry(const BlockMatrix& m, const std::vector<std::uint32_t>& a,
                        const std::vector<std::uint32_t>& b) {
    if (a.empty() || b.empty())
        return 1.0;
    if (shares_block(a, b)) {
        double best = 0.0;
        for (auto x : a) {
            if (std::binary_search(b.begin(), b.end(), x))
                best = std::max(best, m(x, x));
        }
        return best;
    }
    double sum = 0.0;
    for (auto x : a) {
        for (auto y : b)
            sum += m(x, y);
    }
    return sum / static_cast<double>(a.size() * b.size());
}

} // namespace

BlockMatrix BlockMatrix::assortative(std::size_t k, double on, double off) {
    BlockMatrix m(k, off);
    for (std::size_t i = 0; i < k; ++i)
        m(i, i) = on;
    return m;
}

double BlockMatrix::max() const {
    return a_.empty() ? 0.0 : *std::max_element(a_.begin(), a_.end());
}

double truncated_power_law_mean(double exponent, double lo, double hi) {
    if (!(lo > 0.0) || lo > hi)
        throw DomainError("power law needs 0 < lo <= hi");
    if (lo == hi)
        return lo;
    const double e1 = exponent + 1.0, e2 = exponent + 2.0;
    if (std::abs(e1) < 1e-12)
        return (hi - lo) / std::log(hi / lo);
    if (std::abs(e2) < 1e-12)
        return std::log(hi / lo) / (1.0 / lo - 1.0 / hi);
    return e1 / e2 * (std::pow(hi, e2) - std::pow(lo, e2)) / (std::pow(hi, e1) - std::pow(lo, e1));
}

std::vector<double> sample_truncated_power_law(double exponent, double lo, double hi,
                                               std::size_t count, std::uint64_t seed) {
    if (!(lo > 0.0) || lo > hi)
        throw DomainError("power law needs 0 < lo <= hi");
    std::mt19937_64 rng(seed);
    std::vector<double> out(count);
    for (auto& x : out)
        x = std::clamp(draw_power_law(exponent, lo, hi, rng), lo, hi);
    return out;
}

double power_law_lower_bound_for_mean(double exponent, double mean, double hi) {
    if (!(mean > 0.0) || mean > hi)
        throw DomainError("power-law mean must lie in (0, max]");
    if (mean == hi)
        return hi;
    double lo = hi * 1e-12, up = hi;
    if (truncated_power_law_mean(exponent, lo, hi) > mean)
        throw DomainError("power-law mean too small for this exponent and maximum");
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + up);
        if (truncated_power_law_mean(exponent, mid, hi) < mean)
            lo = mid;
        else
            up = mid;
    }
    return 0.5 * (lo + up);
}

BenchmarkConfig BenchmarkConfig::resolved() const {
    BenchmarkConfig c = *this;
    const double nn = static_cast<double>(n);
    if (c.m_min <= 0.0)
        c.m_min = nn / 5.0;
    if (c.m_max <= 0.0)
        c.m_max = 3.0 * c.m_min / 2.0;
    if (c.k_mean <= 0.0)
        c.k_mean = std::sqrt(nn);
    if (c.k_max <= 0.0)
        c.k_max = 3.0 * c.k_mean;
    return c;
}

void BenchmarkConfig::validate() const {
    const BenchmarkConfig c = resolved();
    if (c.n < 2)
        throw ValidationError("n: need at least two community nodes");
    if (!(c.m_min >= 1.0))
        throw ValidationError("m_min: must be at least 1");
    if (c.m_max < c.m_min)
        throw ValidationError("m_max: must be at least m_min");
    if (!(c.k_mean > 0.0) || c.k_max < c.k_mean)
        throw ValidationError("k_mean/k_max: need 0 < k_mean <= k_max");
    if (!(c.s_e > 0.0))
        throw ValidationError("s_e: must be positive");
    if (!(c.s_w > 0.0))
        throw ValidationError("s_w: must be positive");
    if (c.o_n > c.n)
        throw ValidationError("o_n: cannot exceed n");
    if (c.o_m < 1)
        throw ValidationError("o_m: must be at least 1");
    if (c.num_communities != 0 && c.o_n > 0 && c.num_communities < c.o_m)
        throw ValidationError("num_communities: fewer communities than memberships per node");
    if (!std::isfinite(c.beta))
        throw ValidationError("beta: must be finite");
    try {
        c.distribution().validate();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string("sigma2: ") + e.what());
    }
}

Membership build_membership_cover(const BenchmarkConfig& raw, std::uint64_t seed) {
    const BenchmarkConfig cfg = raw.resolved();
    cfg.validate();
    const std::size_t n = cfg.n;
    const std::size_t total = cfg.memberships();
    std::mt19937_64 rng(seed);

    for (int attempt = 0; attempt < 100; ++attempt) {
        // Community sizes.
        std::vector<double> drawn;
        double sum = 0.0;
        while (cfg.num_communities ? drawn.size() < cfg.num_communities
                                   : sum < static_cast<double>(total)) {
            const double x = std::round(draw_power_law(cfg.tau2, cfg.m_min, cfg.m_max, rng));
            drawn.push_back(x);
            sum += x;
        }
        const double scale = static_cast<double>(total) / sum;
        std::vector<std::size_t> sizes(drawn.size());
        std::vector<std::pair<double, std::size_t>> remainder;
        std::size_t assigned = 0;
        for (std::size_t i = 0; i < drawn.size(); ++i) {
            const double exact = drawn[i] * scale;
            sizes[i] = static_cast<std::size_t>(std::floor(exact));
            assigned += sizes[i];
            remainder.emplace_back(exact - std::floor(exact), i);
        }
        std::stable_sort(remainder.begin(), remainder.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < total; ++i, ++assigned)
            ++sizes[remainder[i % remainder.size()].second];

        const std::size_t K = sizes.size();
        const std::size_t per_overlap = cfg.o_n > 0 ? cfg.o_m : 1;
        if (K < per_overlap || std::count(sizes.begin(), sizes.end(), std::size_t{0}) > 0)
            continue;

        // Node memberships and community slots.
        std::vector<NodeId> nodes(n);
        std::iota(nodes.begin(), nodes.end(), NodeId{0});
        std::shuffle(nodes.begin(), nodes.end(), rng);
        std::vector<NodeId> owner;
        owner.reserve(total);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t count = i < cfg.o_n ? cfg.o_m : 1;
            for (std::size_t k = 0; k < count; ++k)
                owner.push_back(nodes[i]);
        }
        std::vector<std::uint32_t> slot;
        slot.reserve(total);
        for (std::size_t c = 0; c < K; ++c)
            slot.insert(slot.end(), sizes[c], static_cast<std::uint32_t>(c));
        std::shuffle(slot.begin(), slot.end(), rng);

        std::vector<std::vector<std::size_t>> positions(n);
        for (std::size_t i = 0; i < total; ++i)
            positions[owner[i]].push_back(i);
        auto conflicts_at = [&](std::size_t i, std::uint32_t community) {
            for (std::size_t j : positions[owner[i]]) {
                if (j != i && slot[j] == community)
                    return true;
            }
            return false;
        };

        // Repair repeated memberships by swapping slots with random partners.
        bool ok = true;
        std::uniform_int_distribution<std::size_t> pick(0, total - 1);
        for (std::size_t i = 0; i < total && ok; ++i) {
            std::size_t tries = 0;
            while (conflicts_at(i, slot[i])) {
                if (++tries > 100000) {
                    ok = false;
                    break;
                }
                const std::size_t j = pick(rng);
                if (owner[j] == owner[i] || slot[j] == slot[i])
                    continue;
                if (conflicts_at(i, slot[j]) || conflicts_at(j, slot[i]))
                    continue;
                std::swap(slot[i], slot[j]);
            }
        }
        if (!ok)
            continue;

        Membership out;
        out.communities.resize(K);
        out.of_node.resize(n);
        for (std::size_t i = 0; i < total; ++i) {
            out.communities[slot[i]].push_back(owner[i]);
            out.of_node[owner[i]].push_back(slot[i]);
        }
        for (auto& c : out.communities)
            canonicalize(c);
        for (auto& m : out.of_node)
            std::sort(m.begin(), m.end());
        return out;
    }
    throw ValidationError("membership cover infeasible: n_m = " + std::to_string(total) +
                          ", o_m = " + std::to_string(cfg.o_m) + ", m_min = " +
                          std::to_string(cfg.m_min) + ", m_max = " + std::to_string(cfg.m_max));
}

double WsbmConfig::block_entry(const BlockMatrix& m, NodeId u, NodeId v) const {
    return pair_block_entry(m, membership[u], membership[v]);
}

double WsbmConfig::edge_probability(NodeId u, NodeId v) const {
    const double n = static_cast<double>(num_nodes());
    return rho * phi[u] * phi[v] / n * edge_block(u, v);
}

void WsbmConfig::validate() const {
    const std::size_t n = num_nodes();
    if (phi.size() != n || psi.size() != n)
        throw ValidationError("wsbm: propensity vectors do not match node count");
    if (P.size() != K || M.size() != K)
        throw ValidationError("wsbm: block matrices must be K x K");
    for (const auto& m : membership) {
        for (auto b : m) {
            if (b >= K)
                throw ValidationError("wsbm: membership refers to a missing block");
        }
    }
    if (!(rho > 0.0 && rho <= 1.0) && rho != 0.0)
        throw ValidationError("wsbm: rho must lie in (0, 1]");
    const double nn = static_cast<double>(n);
    for (const auto* v : {&phi, &psi}) {
        const double total = stable_sum(*v);
        if (std::abs(total - nn) > 1e-6 * nn)
            throw ValidationError("wsbm: propensities must sum to n");
    }
    if (n < 2)
        return;
    // Proper probabilities: check the largest-phi pair against the largest block entry.
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    std::partial_sort(order.begin(), order.begin() + 2, order.end(),
                      [&](NodeId a, NodeId b) { return phi[a] > phi[b]; });
    const double bound = rho * phi[order[0]] * phi[order[1]] / nn * P.max();
    if (bound > 1.0)
        throw ValidationError("wsbm: improper edge probability for pair (" +
                              std::to_string(order[0]) + ", " + std::to_string(order[1]) +
                              "): bound " + std::to_string(bound));
}

Propensities draw_propensities(const BenchmarkConfig& raw, std::size_t count, std::uint64_t seed) {
    const BenchmarkConfig cfg = raw.resolved();
    Propensities p;
    const double lo = power_law_lower_bound_for_mean(cfg.tau1, cfg.k_mean, cfg.k_max);
    p.phi = sample_truncated_power_law(cfg.tau1, lo, cfg.k_max, count, seed);
    p.psi.resize(count);
    for (std::size_t u = 0; u < count; ++u)
        p.psi[u] = std::pow(p.phi[u], cfg.beta + 1.0);
    return p;
}

ExpectedTotals expected_totals(const WsbmConfig& cfg) {
    // Group nodes with identical membership lists.
    std::map<std::vector<std::uint32_t>, std::size_t> group_of;
    std::vector<const std::vector<std::uint32_t>*> rep;
    struct Sums {
        double phi = 0, psi = 0, phi2 = 0, psi2 = 0;
    };
    std::vector<Sums> sums;
    for (std::size_t u = 0; u < cfg.num_nodes(); ++u) {
        auto [it, inserted] = group_of.emplace(cfg.membership[u], sums.size());
        if (inserted) {
            sums.emplace_back();
            rep.push_back(&it->first);
        }
        auto& s = sums[it->second];
        s.phi += cfg.phi[u];
        s.psi += cfg.psi[u];
        s.phi2 += cfg.phi[u] * cfg.phi[u];
        s.psi2 += cfg.psi[u] * cfg.psi[u];
    }
    const double n = static_cast<double>(cfg.num_nodes());
    ExpectedTotals t;
    for (std::size_t g = 0; g < sums.size(); ++g) {
        for (std::size_t h = 0; h < sums.size(); ++h) {
            const double pe = pair_block_entry(cfg.P, *rep[g], *rep[h]);
            const double me = pair_block_entry(cfg.M, *rep[g], *rep[h]);
            double dd = sums[g].phi * sums[h].phi;
            double ss = sums[g].psi * sums[h].psi;
            if (g == h) {
                dd -= sums[g].phi2;
                ss -= sums[g].psi2;
            }
            t.degree += dd * pe;
            t.strength += ss * pe * me;
        }
    }
    t.degree *= cfg.rho / n;
    t.strength *= cfg.rho / n;
    return t;
}

WsbmConfig build_wsbm_config(const BenchmarkConfig& raw, const Membership& membership,
                             std::span<const double> raw_phi, std::span<const double> raw_psi) {
    const BenchmarkConfig cfg = raw.resolved();
    const std::size_t n = membership.of_node.size();
    if (raw_phi.size() != n || raw_psi.size() != n)
        throw ValidationError("propensity vectors do not match membership size");
    WsbmConfig w;
    w.K = membership.communities.size();
    w.membership = membership.of_node;
    w.P = BlockMatrix::assortative(w.K, cfg.s_e, 1.0);
    w.M = BlockMatrix::assortative(w.K, cfg.s_w, 1.0);
    w.dist = cfg.distribution();
    const double nn = static_cast<double>(n);
    const double phi_total = stable_sum(raw_phi);
    const double psi_total = stable_sum(raw_psi);
    w.phi.resize(n);
    w.psi.resize(n);
    for (std::size_t u = 0; u < n; ++u) {
        w.phi[u] = raw_phi[u] * nn / phi_total;
        w.psi[u] = raw_psi[u] * nn / psi_total;
    }
    // Degree scale goes into P; rho stays 1 so it remains a pure sparsity knob.
    w.rho = 1.0;
    const auto base = expected_totals(w);
    const double edge_scale = phi_total / base.degree;
    const double weight_scale = psi_total / (base.strength * edge_scale);
    for (std::size_t i = 0; i < w.K; ++i) {
        for (std::size_t j = 0; j < w.K; ++j) {
            w.P(i, j) *= edge_scale;
            w.M(i, j) *= weight_scale;
        }
    }
    w.validate();
    return w;
}

namespace {

/// Geometric-skip Bernoulli sampler over pairs of `order` (sorted by
/// decreasing propensity). `bound(u, v)` must be non-increasing along each
/// row and dominate `prob(u, v)`.
template <class Bound, class Prob, class OnEdge, class Rng>
void sample_sorted_pairs(std::span<const NodeId> order, Bound bound, Prob prob, OnEdge on_edge,
                         Rng& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const std::size_t m = order.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const NodeId u = order[i];
        std::size_t j = i + 1;
        double p = std::min(1.0, bound(u, order[j]));
        while (j < m && p > 0.0) {
            if (p < 1.0) {
                const double skip = std::floor(std::log(1.0 - unif(rng)) / std::log1p(-p));
                if (skip >= static_cast<double>(m - j))
                    break;
                j += static_cast<std::size_t>(skip);
            }
            const NodeId v = order[j];
            const double q = std::min(1.0, bound(u, v));
            if (unif(rng) * p < prob(u, v))
                on_edge(u, v);
            p = q;
            ++j;
        }
    }
}

} // namespace

WsbmSample generate_wsbm(const WsbmConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t n = cfg.num_nodes();
    std::mt19937_64 rng(seed);
    RatioKernel kernel(cfg.phi, cfg.psi);
    std::vector<NodeId> order;
    for (std::size_t u = 0; u < n; ++u) {
        if (cfg.phi[u] > 0.0)
            order.push_back(static_cast<NodeId>(u));
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](NodeId a, NodeId b) { return cfg.phi[a] > cfg.phi[b]; });
    const double nn = static_cast<double>(n);
    const double pmax = cfg.P.max();
    std::vector<Edge> edges;
    if (cfg.rho > 0.0) {
        sample_sorted_pairs(
            order, [&](NodeId u, NodeId v) { return cfg.rho * cfg.phi[u] * cfg.phi[v] / nn * pmax; },
            [&](NodeId u, NodeId v) { return cfg.edge_probability(u, v); },
            [&](NodeId u, NodeId v) {
                edges.push_back({u, v, kernel.f(u, v) * cfg.weight_block(u, v) * cfg.dist.sample(rng)});
            },
            rng);
    }
    WsbmSample out;
    out.net = WeightedNetwork::from_edges(n, std::move(edges));
    out.truth.cover.num_nodes = n;
    out.truth.cover.communities.resize(cfg.K);
    for (std::size_t u = 0; u < n; ++u) {
        for (auto b : cfg.membership[u])
            out.truth.cover.communities[b].push_back(static_cast<NodeId>(u));
    }
    for (std::size_t u = 0; u < n; ++u) {
        if (cfg.membership[u].empty())
            out.truth.background.push_back(static_cast<NodeId>(u));
    }
    return out;
}

double adjusted_total(double observed_total, double community_target, double background_target) {
    const double half = 0.5 * (background_target + observed_total);
    return half + std::sqrt(half * half + community_target * background_target);
}

BackgroundFit fit_background_propensities(const WeightedNetwork& community_net,
                                          std::span<const double> phi,
                                          std::span<const double> psi) {
    const std::size_t n = community_net.num_nodes();
    const std::size_t total = phi.size();
    if (psi.size() != total || total < n)
        throw ValidationError("background propensities must cover all nodes");
    BackgroundFit fit;
    auto solve = [&](std::span<const double> target, const std::vector<double>& observed,
                     double observed_total, std::vector<double>& out, double& out_total,
                     double& residual) {
        const double c_total = stable_sum(target.subspan(0, n));
        const double b_total = stable_sum(target.subspan(n));
        out_total = adjusted_total(observed_total, c_total, b_total);
        residual = std::abs(out_total - (observed_total + b_total * c_total / out_total + b_total));
        out.resize(total);
        for (std::size_t u = 0; u < n; ++u)
            out[u] = observed[u] + b_total / out_total * target[u];
        for (std::size_t u = n; u < total; ++u)
            out[u] = target[u];
    };
    solve(phi, community_net.degrees(), community_net.total_degree(), fit.phi_prime,
          fit.phi_prime_total, fit.phi_residual);
    solve(psi, community_net.strengths(), community_net.total_strength(), fit.psi_prime,
          fit.psi_prime_total, fit.psi_residual);
    return fit;
}

BackgroundSample append_background(const WeightedNetwork& community_net, const GroundTruth& truth,
                                   std::span<const double> phi, std::span<const double> psi,
                                   const WeightDistribution& dist, std::uint64_t seed) {
    dist.validate();
    const std::size_t n = community_net.num_nodes();
    const std::size_t total = phi.size();
    BackgroundSample out;
    out.fit = fit_background_propensities(community_net, phi, psi);
    RatioKernel kernel(out.fit.phi_prime, out.fit.psi_prime);
    std::mt19937_64 rng(seed);

    std::vector<Edge> edges(community_net.edges().begin(), community_net.edges().end());
    for (std::size_t ui = n; ui < total; ++ui) {
        const auto u = static_cast<NodeId>(ui);
        for (NodeId v = 0; v < u; ++v) {
            const double w = sample_pair_weight(kernel, u, v, dist, rng);
            if (w > 0.0)
                edges.push_back({v, u, w});
        }
    }
    out.net = WeightedNetwork::from_edges(total, std::move(edges));
    out.truth.cover.num_nodes = total;
    out.truth.cover.communities = truth.cover.communities;
    out.truth.background = truth.background;
    for (std::size_t u = n; u < total; ++u)
        out.truth.background.push_back(static_cast<NodeId>(u));
    return out;
}

Benchmark generate_benchmark(const BenchmarkConfig& raw, std::uint64_t seed) {
    const BenchmarkConfig cfg = raw.resolved();
    cfg.validate();
    const std::size_t n = cfg.n;
    const std::size_t total = n + cfg.n_b;
    Benchmark b;
    const auto membership = build_membership_cover(cfg, derive_seed(seed, 1));
    b.targets = draw_propensities(cfg, total, derive_seed(seed, 2));

    std::vector<double> phi_c(b.targets.phi.begin(), b.targets.phi.begin() + n);
    std::vector<double> psi_c(b.targets.psi.begin(), b.targets.psi.begin() + n);
    if (cfg.n_b > 0) {
        // Community-side share of each propensity.
        const double phi_ct = stable_sum(phi_c), psi_ct = stable_sum(psi_c);
        const double phi_t = stable_sum(b.targets.phi), psi_t = stable_sum(b.targets.psi);
        for (auto& x : phi_c)
            x *= phi_ct / phi_t;
        for (auto& x : psi_c)
            x *= psi_ct / psi_t;
    }
    b.wsbm = build_wsbm_config(cfg, membership, phi_c, psi_c);
    auto sample = generate_wsbm(b.wsbm, derive_seed(seed, 3));
    if (cfg.n_b == 0) {
        b.net = std::move(sample.net);
        b.truth = std::move(sample.truth);
        return b;
    }
    auto bg = append_background(sample.net, sample.truth, b.targets.phi, b.targets.psi,
                                cfg.distribution(), derive_seed(seed, 4));
    b.net = std::move(bg.net);
    b.truth = std::move(bg.truth);
    b.background = std::move(bg.fit);
    return b;
}

ConsistencyCheck consistency_condition(const BlockMatrix& P, const BlockMatrix& M,
                                       std::span<const double> pi_tilde) {
    const std::size_t k = P.size();
    if (M.size() != k || pi_tilde.size() != k)
        throw DomainError("consistency check: dimension mismatch");
    BlockMatrix H(k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j)
            H(i, j) = P(i, j) * M(i, j);
    }
    std::vector<double> left(k, 0.0), right(k, 0.0); // H pi and pi^t H
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            left[i] += H(i, j) * pi_tilde[j];
            right[j] += pi_tilde[i] * H(i, j);
        }
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        denom += pi_tilde[i] * left[i];
    if (!(denom != 0.0))
        throw DomainError("consistency check: pi^t H pi is zero");
    ConsistencyCheck out;
    out.matrix = BlockMatrix(k, 0.0);
    out.satisfied = true;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            const double v = H(i, j) - left[i] * right[j] / denom;
            out.matrix(i, j) = v;
            if (i == j ? !(v > 0.0) : !(v < 0.0))
                out.satisfied = false;
        }
    }
    return out;
}

} // namespace ccme
