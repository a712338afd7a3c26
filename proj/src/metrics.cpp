#include "ccme/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccme {

namespace {

double h(double count, double total) {
    if (count <= 0.0)
        return 0.0;
    const double p = count / total;
    return -p * std::log2(p);
}

std::size_t intersection_size(const NodeSet& a, const NodeSet& b) {
    std::size_t k = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) {
            ++k;
            ++i;
            ++j;
        } else if (*i < *j) {
            ++i;
        } else {
            ++j;
        }
    }
    return k;
}

double community_entropy(std::size_t size, double N) {
    return h(static_cast<double>(size), N) + h(N - static_cast<double>(size), N);
}

// H(X_k | Y) for every community X_k: best admissible conditional entropy
// against the communities of Y, or H(X_k) when none is admissible.
std::vector<double> conditional_entropies(const std::vector<NodeSet>& x,
                                          const std::vector<NodeSet>& y, double N) {
    std::vector<double> out;
    out.reserve(x.size());
    for (const auto& xk : x) {
        double best = community_entropy(xk.size(), N);
        for (const auto& yl : y) {
            const double d = static_cast<double>(intersection_size(xk, yl));
            const double b = static_cast<double>(xk.size()) - d;
            const double c = static_cast<double>(yl.size()) - d;
            const double a = N - b - c - d;
            if (h(a, N) + h(d, N) < h(b, N) + h(c, N))
                continue;
            const double joint = h(a, N) + h(b, N) + h(c, N) + h(d, N);
            best = std::min(best, joint - h(c + d, N) - h(a + b, N));
        }
        out.push_back(std::max(best, 0.0));
    }
    return out;
}

std::vector<NodeSet> non_empty(const std::vector<NodeSet>& cs) {
    std::vector<NodeSet> out;
    for (const auto& c : cs) {
        if (!c.empty())
            out.push_back(canonical(c));
    }
    return out;
}

} // namespace

double onmi(const Cover& a, const Cover& b, OnmiVariant variant) {
    if (a.num_nodes != b.num_nodes)
        throw DomainError("onmi: covers over different node counts");
    const auto x = non_empty(a.communities);
    const auto y = non_empty(b.communities);
    if (x.empty() || y.empty() || a.num_nodes == 0)
        return 0.0;
    const double N = static_cast<double>(a.num_nodes);
    const auto hxy = conditional_entropies(x, y, N);
    const auto hyx = conditional_entropies(y, x, N);

    if (variant == OnmiVariant::Lfk) {
        auto normalised = [&](const std::vector<NodeSet>& cs, const std::vector<double>& cond) {
            double sum = 0.0;
            for (std::size_t k = 0; k < cs.size(); ++k) {
                const double hk = community_entropy(cs[k].size(), N);
                sum += hk > 0.0 ? cond[k] / hk : 1.0; // 0/0 counts as fully uncertain
            }
            return sum / static_cast<double>(cs.size());
        };
        return std::clamp(1.0 - 0.5 * (normalised(x, hxy) + normalised(y, hyx)), 0.0, 1.0);
    }

    double hx = 0.0, hy = 0.0, cx = 0.0, cy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        hx += community_entropy(x[k].size(), N);
        cx += hxy[k];
    }
    for (std::size_t l = 0; l < y.size(); ++l) {
        hy += community_entropy(y[l].size(), N);
        cy += hyx[l];
    }
    const double denom = std::max(hx, hy);
    if (denom <= 0.0)
        return x == y ? 1.0 : 0.0;
    const double mi = 0.5 * ((hx - cx) + (hy - cy));
    return std::clamp(mi / denom, 0.0, 1.0);
}

OnmiResult onmi_restricted(const Cover& result, const GroundTruth& truth, OnmiVariant variant) {
    if (result.num_nodes != truth.cover.num_nodes)
        throw DomainError("onmi: result and truth disagree on node count");
    OnmiResult out;
    const auto flags = result.assigned();
    std::vector<NodeId> local(result.num_nodes, 0);
    std::size_t m = 0;
    for (std::size_t u = 0; u < flags.size(); ++u) {
        if (flags[u])
            local[u] = static_cast<NodeId>(m++);
    }
    out.nodes = m;
    auto restrict = [&](const Cover& c) {
        Cover r;
        r.num_nodes = m;
        for (const auto& com : c.communities) {
            NodeSet s;
            for (NodeId v : com) {
                if (flags.at(v))
                    s.push_back(local[v]);
            }
            if (!s.empty())
                r.communities.push_back(canonicalize(s));
        }
        return r;
    };
    const Cover a = restrict(result);
    const Cover b = restrict(truth.cover);
    if (a.communities.empty() || b.communities.empty()) {
        out.empty_restriction = true;
        return out;
    }
    out.value = onmi(a, b, variant);
    return out;
}

double t_onmi(double x, double a) {
    if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("t_onmi: x must lie in [0, 1]");
    if (!(a > 0.0))
        throw DomainError("t_onmi: a must be positive");
    const double lo = 1.0 / (1.0 + a);
    return (1.0 / (1.0 - x + a) - lo) / (1.0 / a - lo);
}

BackgroundErrors background_metrics(const Cover& result, const GroundTruth& truth) {
    const std::size_t n = truth.cover.num_nodes;
    if (result.num_nodes != n)
        throw DomainError("background metrics: result and truth disagree on node count");
    const auto in_result = result.assigned();
    std::vector<char> true_bg(n, 0);
    for (NodeId v : truth.background)
        true_bg.at(v) = 1;
    const auto true_assigned = truth.cover.assigned();
    std::size_t com = 0, com_missed = 0, bg = 0, bg_wrong = 0;
    for (std::size_t u = 0; u < n; ++u) {
        if (true_assigned[u]) {
            ++com;
            com_missed += !in_result[u];
        } else {
            ++bg;
            bg_wrong += in_result[u] != 0;
        }
    }
    BackgroundErrors out;
    if (com > 0)
        out.pct_cib = 100.0 * static_cast<double>(com_missed) / static_cast<double>(com);
    if (bg > 0)
        out.pct_bic = 100.0 * static_cast<double>(bg_wrong) / static_cast<double>(bg);
    return out;
}

namespace {

void check_partition(std::span<const std::size_t> partition, const WeightedNetwork& net) {
    if (partition.size() != net.num_nodes())
        throw DomainError("modularity: partition size does not match the network");
    if (!(net.total_strength() > 0.0))
        throw DomainError("modularity: total strength is zero");
}

} // namespace

double weighted_modularity(std::span<const std::size_t> partition, const WeightedNetwork& net) {
    check_partition(partition, net);
    const double sT = net.total_strength();
    const std::size_t blocks = *std::max_element(partition.begin(), partition.end()) + 1;
    std::vector<double> block_strength(blocks, 0.0);
    const auto& s = net.strengths();
    for (std::size_t u = 0; u < partition.size(); ++u)
        block_strength[partition[u]] += s[u];
    std::vector<double> internal;
    for (const auto& e : net.edges()) {
        if (partition[e.u] == partition[e.v])
            internal.push_back(2.0 * e.weight);
    }
    std::vector<double> expected;
    for (double x : block_strength)
        expected.push_back(x * x / sT);
    return (stable_sum(internal) - stable_sum(expected)) / sT;
}

std::vector<double> modularity_contributions(std::span<const std::size_t> partition,
                                             const WeightedNetwork& net) {
    check_partition(partition, net);
    const double sT = net.total_strength();
    const std::size_t blocks = *std::max_element(partition.begin(), partition.end()) + 1;
    std::vector<double> block_strength(blocks, 0.0);
    const auto& s = net.strengths();
    for (std::size_t u = 0; u < partition.size(); ++u)
        block_strength[partition[u]] += s[u];
    std::vector<double> out(partition.size());
    for (std::size_t u = 0; u < partition.size(); ++u) {
        double w = 0.0;
        for (const auto& nb : net.neighbors(static_cast<NodeId>(u))) {
            if (partition[nb.node] == partition[u])
                w += nb.weight;
        }
        out[u] = w - s[u] * block_strength[partition[u]] / sT;
    }
    return out;
}

std::vector<double> background_block_z(const WeightedNetwork& net, const NullParams& params,
                                       const GroundTruth& truth) {
    MomentEngine engine(params);
    std::vector<double> out;
    for (const auto& c : truth.cover.communities) {
        engine.prepare(c);
        const auto stats = node_set_statistics(c, net);
        std::vector<double> z;
        for (NodeId b : truth.background) {
            const auto m = engine.moments(b);
            if (m.sd > 0.0)
                z.push_back((stats[b] - m.mean) / m.sd);
        }
        out.push_back(z.empty() ? 0.0 : stable_sum(z) / static_cast<double>(z.size()));
    }
    return out;
}

std::string EvalReport::csv_header() {
    return "onmi,t_onmi,pct_cib,pct_bic,n_communities,size_min,size_q25,size_median,size_q75,"
           "size_max,empty_restriction";
}

std::string EvalReport::csv_row() const {
    std::ostringstream os;
    os.precision(10);
    os << onmi << ',' << t_onmi << ',' << pct_cib << ',' << pct_bic << ',' << n_communities;
    for (double q : size_quantiles)
        os << ',' << q;
    os << ',' << (empty_restriction ? 1 : 0);
    return os.str();
}

std::string EvalReport::json() const {
    nlohmann::json j{{"onmi", onmi},
                     {"t_onmi", t_onmi},
                     {"pct_cib", pct_cib},
                     {"pct_bic", pct_bic},
                     {"n_communities", n_communities},
                     {"size_quantiles", size_quantiles},
                     {"empty_restriction", empty_restriction}};
    return j.dump(2);
}

EvalReport evaluate(const Cover& result, const GroundTruth& truth, OnmiVariant variant, double a) {
    EvalReport r;
    const auto o = onmi_restricted(result, truth, variant);
    r.onmi = o.value;
    r.empty_restriction = o.empty_restriction;
    r.t_onmi = t_onmi(r.onmi, a);
    const auto bg = background_metrics(result, truth);
    r.pct_cib = bg.pct_cib;
    r.pct_bic = bg.pct_bic;
    std::vector<double> sizes;
    for (const auto& c : result.communities) {
        if (!c.empty())
            sizes.push_back(static_cast<double>(c.size()));
    }
    r.n_communities = sizes.size();
    if (!sizes.empty()) {
        std::sort(sizes.begin(), sizes.end());
        const std::array<double, 5> probs{0.0, 0.25, 0.5, 0.75, 1.0};
        for (std::size_t i = 0; i < probs.size(); ++i) {
            // linear interpolation between order statistics
            const double pos = probs[i] * static_cast<double>(sizes.size() - 1);
            const auto lo = static_cast<std::size_t>(std::floor(pos));
            const auto hi = std::min(lo + 1, sizes.size() - 1);
            r.size_quantiles[i] = sizes[lo] + (pos - static_cast<double>(lo)) * (sizes[hi] - sizes[lo]);
        }
    }
    return r;
}

} // namespace ccme
