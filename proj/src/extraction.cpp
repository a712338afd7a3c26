#include "ccme/extraction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

namespace ccme {

NodeSet& canonicalize(NodeSet& set) {
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
}

NodeSet canonical(std::span<const NodeId> nodes) {
    NodeSet set(nodes.begin(), nodes.end());
    return canonicalize(set);
}

std::size_t NodeSetHash::operator()(const NodeSet& set) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (NodeId v : set) {
        h ^= v;
        h *= 0x100000001b3ULL;
    }
    h ^= set.size();
    return static_cast<std::size_t>(h);
}

NodeSet Cover::background() const {
    const auto flags = assigned();
    NodeSet bg;
    for (std::size_t u = 0; u < num_nodes; ++u) {
        if (!flags[u])
            bg.push_back(static_cast<NodeId>(u));
    }
    return bg;
}

std::vector<char> Cover::assigned() const {
    std::vector<char> flags(num_nodes, 0);
    for (const auto& c : communities) {
        for (NodeId v : c)
            flags.at(v) = 1;
    }
    return flags;
}

BhResult bh_select(std::span<const double> pvalues, double alpha) {
    BhResult out;
    const std::size_t n = pvalues.size();
    if (n == 0)
        return out;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    const double total = static_cast<double>(n);
    bool found = false;
    for (std::size_t k = n; k-- > 0;) {
        // Use the largest rank within a tie group.
        if (k + 1 < n && pvalues[order[k + 1]] == pvalues[order[k]])
            continue;
        const double p = pvalues[order[k]];
        if (p <= static_cast<double>(k + 1) * alpha / total) {
            out.threshold = p;
            found = true;
            break;
        }
    }
    if (!found)
        return out;
    for (std::size_t i = 0; i < n; ++i) {
        if (pvalues[i] <= out.threshold)
            out.rejected.push_back(i);
    }
    return out;
}

void ExtractionConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ValidationError("alpha must lie in (0, 1)");
    if (!(tau_overlap >= 0.0 && tau_overlap <= 1.0))
        throw ValidationError("tau must lie in [0, 1]");
    if (max_iter == 0)
        throw ValidationError("max_iter must be positive");
}

SetUpdater::SetUpdater(const WeightedNetwork& net, const NullParams& params, double alpha)
    : net_(&net), params_(&params), alpha_(alpha), engine_(params) {
    if (params.size() != net.num_nodes())
        throw ValidationError("null parameters do not match the network size");
}

NodeSet SetUpdater::operator()(const NodeSet& set) {
    const auto p = node_set_p_values(set, *net_, engine_);
    const auto bh = bh_select(p, alpha_);
    NodeSet out;
    out.reserve(bh.rejected.size());
    for (std::size_t i : bh.rejected)
        out.push_back(static_cast<NodeId>(i));
    return out;
}

NodeSet update_set(const NodeSet& set, const WeightedNetwork& net, const NullParams& params,
                   double alpha) {
    SetUpdater update(net, params, alpha);
    return update(canonical(set));
}

namespace {

bool intersects(const NodeSet& a, const NodeSet& b) {
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

std::size_t intersection_size(const NodeSet& a, const NodeSet& b) {
    std::size_t count = 0;
    auto i = a.begin();
    auto j = b.begin();
    while (i != a.end() && j != b.end()) {
        if (*i == *j) {
            ++count;
            ++i;
            ++j;
        } else if (*i < *j) {
            ++i;
        } else {
            ++j;
        }
    }
    return count;
}

} // namespace

ScsOutcome scs_search(const NodeSet& start, SetUpdater& update, std::size_t max_iter) {
    ScsOutcome out;
    // Every set seen so far, and the trajectory since the last (re)start.
    std::unordered_set<NodeSet, NodeSetHash> visited{NodeSet{}};
    std::vector<NodeSet> path;
    std::unordered_map<NodeSet, std::size_t, NodeSetHash> position;
    auto restart = [&](NodeSet set) {
        visited.insert(set);
        path.clear();
        position.clear();
        position.emplace(set, 0);
        path.push_back(std::move(set));
    };

    NodeSet current = canonical(start);
    if (current.empty()) {
        out.visited = visited.size();
        return out;
    }
    restart(current);

    while (out.updates < max_iter) {
        NodeSet next = update(path.back());
        ++out.updates;
        if (next.empty())
            break;
        auto it = position.find(next);
        if (it == position.end()) {
            visited.insert(next);
            position.emplace(next, path.size());
            path.push_back(std::move(next));
            continue;
        }
        const std::size_t first = it->second;
        const std::size_t last = path.size() - 1;
        if (first == last) {
            out.kind = ScsOutcome::Kind::Stable;
            out.community = std::move(next);
            break;
        }
        // Cycle C_1..C_J = path[first..last] with U(C_J) = C_1.
        bool broken = false;
        for (std::size_t k = first; k <= last && !broken; ++k)
            broken = !intersects(path[k], path[k == last ? first : k + 1]);
        if (broken)
            break;
        NodeSet merged;
        for (std::size_t k = first; k <= last; ++k)
            merged.insert(merged.end(), path[k].begin(), path[k].end());
        canonicalize(merged);
        if (visited.count(merged)) {
            out.kind = ScsOutcome::Kind::Stable;
            out.community = std::move(merged);
            out.from_cycle_union = true;
            break;
        }
        restart(std::move(merged));
    }
    if (!out.stable() && out.updates >= max_iter)
        out.hit_iteration_cap = true;
    out.visited = visited.size();
    return out;
}

ScsOutcome scs_search(const NodeSet& start, const WeightedNetwork& net, const NullParams& params,
                      const ExtractionConfig& config) {
    SetUpdater update(net, params, config.alpha);
    return scs_search(start, update, config.max_iter);
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace

std::vector<NodeSet> seed_sets(const WeightedNetwork& net, const NullParams& params,
                               std::uint64_t seed) {
    const std::size_t n = net.num_nodes();
    RatioKernel kernel(params.degree, params.strength);
    const double root_kappa = std::sqrt(params.kappa);
    std::vector<NodeSet> seeds(n);
    std::vector<double> score;
    for (std::size_t ui = 0; ui < n; ++ui) {
        const auto u = static_cast<NodeId>(ui);
        const auto nbrs = net.neighbors(u);
        if (nbrs.empty())
            continue;
        score.assign(nbrs.size(), 0.0);
        bool any = false;
        for (std::size_t i = 0; i < nbrs.size(); ++i) {
            const double f = kernel.f(u, nbrs[i].node);
            if (f > 0.0) {
                score[i] = std::max((nbrs[i].weight - f) / (root_kappa * f), 0.0);
                any = any || score[i] > 0.0;
            }
        }
        if (!any)
            std::fill(score.begin(), score.end(), 1.0);
        std::mt19937_64 rng(mix_seed(seed, ui));
        std::discrete_distribution<std::size_t> pick(score.begin(), score.end());
        NodeSet& set = seeds[ui];
        const auto draws = static_cast<std::size_t>(net.degrees()[ui]);
        set.reserve(draws);
        for (std::size_t k = 0; k < draws; ++k)
            set.push_back(nbrs[pick(rng)].node);
        canonicalize(set);
    }
    return seeds;
}

std::vector<std::size_t> filter_seed_sets(std::span<const NodeSet> seeds,
                                          const WeightedNetwork& net, const NullParams& params,
                                          double alpha, bool conservative) {
    if (seeds.empty())
        return {};
    MomentEngine engine(params);
    std::vector<double> p(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i)
        p[i] = set_self_statistic(seeds[i], net, engine, conservative).p;
    return bh_select(p, alpha).rejected;
}

namespace {

struct Candidate {
    NodeSet nodes;
    CommunityInfo info;
};

std::vector<Candidate> prune_candidates(std::vector<Candidate> items, double tau) {
    // Exact duplicates first; keep the earliest.
    {
        std::unordered_set<NodeSet, NodeSetHash> seen;
        std::vector<Candidate> unique;
        for (auto& c : items) {
            if (seen.insert(c.nodes).second)
                unique.push_back(std::move(c));
        }
        items = std::move(unique);
    }
    while (items.size() > 1) {
        double best = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < items.size(); ++i) {
            const double size = static_cast<double>(items[i].nodes.size());
            for (std::size_t j = 0; j < items.size(); ++j) {
                if (i == j)
                    continue;
                const double o = static_cast<double>(intersection_size(items[i].nodes, items[j].nodes)) / size;
                if (o > best) {
                    best = o;
                    bi = i;
                    bj = j;
                }
            }
        }
        if (best < tau)
            break;
        const std::size_t drop = items[bi].info.z < items[bj].info.z ? bi
                                 : items[bj].info.z < items[bi].info.z ? bj
                                                                      : std::max(bi, bj);
        items.erase(items.begin() + static_cast<std::ptrdiff_t>(drop));
    }
    return items;
}

} // namespace

Cover prune_cover(const Cover& cover, const NullParams& params, const WeightedNetwork& net,
                  double tau_overlap, bool conservative) {
    MomentEngine engine(params);
    std::vector<Candidate> items;
    for (const auto& c : cover.communities) {
        Candidate cand;
        cand.nodes = canonical(c);
        if (cand.nodes.empty())
            continue;
        cand.info.z = set_self_statistic(cand.nodes, net, engine, conservative).z;
        items.push_back(std::move(cand));
    }
    items = prune_candidates(std::move(items), tau_overlap);
    Cover out;
    out.num_nodes = cover.num_nodes;
    for (auto& c : items)
        out.communities.push_back(std::move(c.nodes));
    return out;
}

CcmeResult run_ccme(const WeightedNetwork& net, const ExtractionConfig& config) {
    config.validate();
    CcmeResult result;
    result.cover.num_nodes = net.num_nodes();
    if (net.num_edges() == 0)
        return result;

    result.params = estimate_params(net);
    const NullParams& params = result.params;
    SetUpdater update(net, params, config.alpha);

    auto seeds = seed_sets(net, params, config.seed);
    std::vector<std::size_t> order;
    for (std::size_t u = 0; u < seeds.size(); ++u) {
        if (!seeds[u].empty())
            order.push_back(u);
    }
    result.stats.seeds = order.size();
    if (config.filter_seeds) {
        std::vector<NodeSet> nonempty;
        nonempty.reserve(order.size());
        for (std::size_t u : order)
            nonempty.push_back(seeds[u]);
        const auto kept = filter_seed_sets(nonempty, net, params, config.alpha,
                                           config.conservative_set_sd);
        std::vector<std::size_t> filtered;
        filtered.reserve(kept.size());
        for (std::size_t i : kept)
            filtered.push_back(order[i]);
        order = std::move(filtered);
    }
    result.stats.seeds_after_filter = order.size();

    std::vector<char> extracted(net.num_nodes(), 0);
    std::vector<Candidate> found;
    std::unordered_set<NodeSet, NodeSetHash> found_sets;
    for (std::size_t u : order) {
        if (config.smart_skip && extracted[u]) {
            ++result.stats.skipped;
            continue;
        }
        ++result.stats.searches;
        auto outcome = scs_search(seeds[u], update, config.max_iter);
        if (!outcome.stable())
            continue;
        ++result.stats.stable;
        if (!found_sets.insert(outcome.community).second)
            continue;
        for (NodeId v : outcome.community)
            extracted[v] = 1;
        Candidate cand;
        cand.info.origin = static_cast<NodeId>(u);
        cand.info.from_cycle_union = outcome.from_cycle_union;
        cand.nodes = std::move(outcome.community);
        found.push_back(std::move(cand));
    }

    for (auto& c : found) {
        const auto stat = set_self_statistic(c.nodes, net, update.engine(), config.conservative_set_sd);
        c.info.z = stat.z;
        c.info.p = stat.p;
        c.info.size = c.nodes.size();
    }
    const std::size_t before = found.size();
    found = prune_candidates(std::move(found), config.tau_overlap);
    result.stats.pruned = before - found.size();

    for (auto& c : found) {
        c.info.fixed_point = update(c.nodes) == c.nodes;
        if (config.strict_fixed_points && !c.info.fixed_point)
            continue;
        result.info.push_back(c.info);
        result.cover.communities.push_back(std::move(c.nodes));
    }
    return result;
}

} // namespace ccme
