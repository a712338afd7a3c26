#include "ccme/null_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ccme {

void NullParams::validate() const {
    if (degree.size() != strength.size())
        throw ValidationError("degree and strength vectors differ in length");
    if (!(kappa > 0.0) || !std::isfinite(kappa))
        throw ValidationError("kappa must be positive");
    for (std::size_t u = 0; u < degree.size(); ++u) {
        if (!(degree[u] >= 0.0) || !(strength[u] >= 0.0))
            throw ValidationError("negative or NaN propensity at node " + std::to_string(u));
    }
}

double estimate_kappa(const WeightedNetwork& net) {
    if (net.num_edges() == 0)
        throw EstimationError("kappa needs at least one edge");
    RatioKernel kernel(net.degrees(), net.strengths());
    if (!(kernel.y_total() > 0.0))
        throw EstimationError("kappa undefined: total strength is zero");
    std::vector<double> num, den;
    num.reserve(net.num_edges());
    den.reserve(net.num_edges());
    for (const auto& e : net.edges()) {
        const double f = kernel.f(e.u, e.v);
        const double r = e.weight - f;
        num.push_back(r * r);
        den.push_back(f * f);
    }
    const double d = stable_sum(den);
    if (!(d > 0.0))
        throw EstimationError("kappa undefined: all expected weights are zero");
    return stable_sum(num) / d;
}

NullParams estimate_params(const WeightedNetwork& net) {
    NullParams p;
    p.degree = net.degrees();
    p.strength = net.strengths();
    // exact-mean weights give 0; keep the params valid
    p.kappa = std::max(estimate_kappa(net), 1e-12);
    return p;
}

Moments null_moments(NodeId u, std::span<const NodeId> set, const NullParams& params) {
    RatioKernel kernel(params.degree, params.strength);
    Moments m;
    if (!(kernel.y_total() > 0.0))
        return m;
    double var = 0.0;
    for (NodeId v : set) {
        if (v == u)
            continue;
        const double rs = kernel.r_y(u, v);
        const double rd = kernel.r_x_truncated(u, v);
        m.mean += rs;
        if (rd > 0.0)
            var += rs * (rs / rd) * (1.0 - rd + params.kappa);
    }
    m.sd = std::sqrt(std::max(var, 0.0));
    return m;
}

double normal_upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double upper_tail_p_value(double statistic, Moments m) {
    if (!(m.sd > 0.0))
        return statistic <= m.mean ? 1.0 : 0.0;
    return normal_upper_tail((statistic - m.mean) / m.sd);
}

double node_set_statistic(NodeId u, std::span<const NodeId> set, const WeightedNetwork& net) {
    double s = 0.0;
    for (NodeId v : set) {
        if (v != u)
            s += net.weight(u, v);
    }
    return s;
}

double node_set_p_value(NodeId u, std::span<const NodeId> set, const WeightedNetwork& net,
                        const NullParams& params) {
    return upper_tail_p_value(node_set_statistic(u, set, net), null_moments(u, set, params));
}

// ---------------------------------------------------------------------------
// MomentEngine
//
// For a pair with r_uv(d) <= 1 the variance term is
//     r_uv(s)^2 / r_uv(d) * (1 + kappa) - r_uv(s)^2
//   = a(u) a(v) d_T (1 + kappa) / s_T^2 - s(u)^2 s(v)^2 / s_T^2,
// with a(x) = s(x)^2 / d(x). For r_uv(d) > 1 it is kappa s(u)^2 s(v)^2 / s_T^2.
// ---------------------------------------------------------------------------

MomentEngine::MomentEngine(const NullParams& params)
    : params_(&params), degree_total_(stable_sum(params.degree)),
      strength_total_(stable_sum(params.strength)) {
    const std::size_t n = params.size();
    a_.assign(n, 0.0);
    for (std::size_t u = 0; u < n; ++u) {
        if (params.degree[u] > 0.0)
            a_[u] = params.strength[u] * params.strength[u] / params.degree[u];
    }
    in_set_.assign(n, 0);
}

void MomentEngine::prepare(std::span<const NodeId> set) {
    for (NodeId v : current_)
        in_set_[v] = 0;
    current_.assign(set.begin(), set.end());

    const auto& d = params_->degree;
    const auto& s = params_->strength;
    std::vector<NodeId> members;
    members.reserve(set.size());
    std::vector<double> strengths;
    strengths.reserve(set.size());
    for (NodeId v : set) {
        in_set_[v] = 1;
        strengths.push_back(s[v]);
        if (d[v] > 0.0)
            members.push_back(v);
    }
    set_strength_ = stable_sum(strengths);
    std::sort(members.begin(), members.end(), [&](NodeId x, NodeId y) { return d[x] < d[y]; });
    sorted_degree_.resize(members.size());
    prefix_a_.assign(members.size() + 1, 0.0);
    prefix_s2_.assign(members.size() + 1, 0.0);
    for (std::size_t i = 0; i < members.size(); ++i) {
        const NodeId v = members[i];
        sorted_degree_[i] = d[v];
        prefix_a_[i + 1] = prefix_a_[i] + a_[v];
        prefix_s2_[i + 1] = prefix_s2_[i] + s[v] * s[v];
    }
}

double MomentEngine::pair_variance(NodeId u, NodeId v) const {
    const auto& d = params_->degree;
    const auto& s = params_->strength;
    const double st2 = strength_total_ * strength_total_;
    const double s2 = s[u] * s[u] * s[v] * s[v] / st2;
    if (ratio(d[u], d[v], degree_total_) <= 1.0)
        return a_[u] * a_[v] * degree_total_ * (1.0 + params_->kappa) / st2 - s2;
    return params_->kappa * s2;
}

Moments MomentEngine::moments(NodeId u) const {
    Moments m;
    if (!(strength_total_ > 0.0))
        return m;
    const auto& d = params_->degree;
    const auto& s = params_->strength;
    m.mean = s[u] * set_strength_ / strength_total_;
    if (in_set_[u])
        m.mean -= s[u] * s[u] / strength_total_;
    m.mean = std::max(m.mean, 0.0);
    if (!(d[u] > 0.0))
        return m;

    const double du = d[u];
    const double dt = degree_total_;
    auto first_truncated = std::partition_point(
        sorted_degree_.begin(), sorted_degree_.end(),
        [&](double dv) { return ratio(du, dv, dt) <= 1.0; });
    const std::size_t split = static_cast<std::size_t>(first_truncated - sorted_degree_.begin());
    const std::size_t count = sorted_degree_.size();
    const double a_untruncated = prefix_a_[split];
    const double q_untruncated = prefix_s2_[split];
    const double q_truncated = prefix_s2_[count] - prefix_s2_[split];
    const double st2 = strength_total_ * strength_total_;

    double var = a_[u] * dt * (1.0 + params_->kappa) / st2 * a_untruncated +
                 s[u] * s[u] / st2 * (params_->kappa * q_truncated - q_untruncated);
    if (in_set_[u])
        var -= pair_variance(u, u);
    m.sd = std::sqrt(std::max(var, 0.0));
    return m;
}

std::vector<double> node_set_statistics(std::span<const NodeId> set, const WeightedNetwork& net) {
    std::vector<double> stat(net.num_nodes(), 0.0);
    for (NodeId v : set) {
        for (const auto& nb : net.neighbors(v))
            stat[nb.node] += nb.weight;
    }
    return stat;
}

std::vector<double> node_set_p_values(std::span<const NodeId> set, const WeightedNetwork& net,
                                      MomentEngine& engine) {
    engine.prepare(set);
    auto stat = node_set_statistics(set, net);
    std::vector<double> p(net.num_nodes());
    for (std::size_t u = 0; u < p.size(); ++u)
        p[u] = upper_tail_p_value(stat[u], engine.moments(static_cast<NodeId>(u)));
    return p;
}

SetStatistic set_self_statistic(std::span<const NodeId> set, const WeightedNetwork& net,
                                MomentEngine& engine, bool conservative) {
    SetStatistic out;
    if (set.size() < 2)
        return out;
    engine.prepare(set);
    std::vector<NodeId> sorted(set.begin(), set.end());
    std::sort(sorted.begin(), sorted.end());
    double stat = 0.0, mean = 0.0, var = 0.0;
    for (NodeId v : set) {
        for (const auto& nb : net.neighbors(v)) {
            if (std::binary_search(sorted.begin(), sorted.end(), nb.node))
                stat += nb.weight;
        }
        const auto m = engine.moments(v);
        mean += m.mean;
        var += m.sd * m.sd;
    }
    double sd = std::sqrt(var);
    if (conservative)
        sd *= std::sqrt(2.0);
    out.statistic = stat;
    out.p = upper_tail_p_value(stat, {mean, sd});
    out.z = sd > 0.0 ? (stat - mean) / sd : 0.0;
    return out;
}

SetStatistic set_self_statistic(std::span<const NodeId> set, const WeightedNetwork& net,
                                const NullParams& params, bool conservative) {
    MomentEngine engine(params);
    return set_self_statistic(set, net, engine, conservative);
}

void WeightDistribution::validate() const {
    if (!(variance > 0.0) || !std::isfinite(variance))
        throw ValidationError("weight variance must be positive");
    if (family == Family::Uniform && !(variance < 1.0 / 3.0))
        throw ValidationError("uniform weight family needs variance < 1/3");
}

WeightedNetwork sample_null_network(const NullParams& params, const WeightDistribution& dist,
                                    std::uint64_t seed) {
    params.validate();
    dist.validate();
    const std::size_t n = params.size();
    RatioKernel kernel(params.degree, params.strength);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<NodeId> order;
    for (std::size_t u = 0; u < n; ++u) {
        if (params.degree[u] > 0.0)
            order.push_back(static_cast<NodeId>(u));
    }
    std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
        return params.degree[a] > params.degree[b];
    });

    // Edge probabilities along each row are non-increasing, so candidates can
    // be skipped geometrically and thinned by the true probability.
    std::vector<Edge> edges;
    const std::size_t m = order.size();
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const NodeId u = order[i];
        std::size_t j = i + 1;
        double p = kernel.r_x_truncated(u, order[j]);
        while (j < m && p > 0.0) {
            if (p < 1.0) {
                const double r = 1.0 - unif(rng);
                const double skip = std::floor(std::log(r) / std::log1p(-p));
                if (skip >= static_cast<double>(m - j))
                    break;
                j += static_cast<std::size_t>(skip);
            }
            const NodeId v = order[j];
            const double q = kernel.r_x_truncated(u, v);
            if (unif(rng) < q / p)
                edges.push_back({u, v, kernel.f(u, v) * dist.sample(rng)});
            p = q;
            ++j;
        }
    }
    return WeightedNetwork::from_edges(n, std::move(edges));
}

RegularityReport regularity_diagnostics(std::span<const double> degree,
                                        std::span<const double> strength,
                                        std::span<const double> orders) {
    const std::size_t n = degree.size();
    if (n < 2)
        throw DomainError("regularity diagnostics need at least two nodes");
    RegularityReport rep;
    rep.lambda = stable_sum(degree) / static_cast<double>(n);
    static constexpr double default_orders[] = {1.0, 2.0, 3.0, 4.0};
    if (orders.empty())
        orders = default_orders;
    std::vector<double> terms(n);
    for (double r : orders) {
        for (std::size_t u = 0; u < n; ++u)
            terms[u] = std::pow(degree[u] / rep.lambda, r);
        rep.moments[r] = stable_sum(terms) / static_cast<double>(n);
    }

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::size_t k = 0;
    for (std::size_t u = 0; u < std::min(n, strength.size()); ++u) {
        if (degree[u] > 0.0 && strength[u] > 0.0) {
            const double x = std::log(degree[u]), y = std::log(strength[u]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++k;
        }
    }
    const double kk = static_cast<double>(k);
    const double denom = kk * sxx - sx * sx;
    rep.beta_fit = (k >= 2 && denom > 0.0) ? (kk * sxy - sx * sy) / denom - 1.0
                                           : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

RegularityReport regularity_diagnostics(const NullParams& params, std::span<const double> orders) {
    return regularity_diagnostics(params.degree, params.strength, orders);
}

std::vector<double> standardized_null_statistics(const NullParams& params,
                                                 const WeightDistribution& dist,
                                                 std::size_t set_size, std::size_t replicates,
                                                 std::uint64_t seed) {
    params.validate();
    dist.validate();
    const std::size_t n = params.size();
    if (set_size + 1 > n)
        throw DomainError("set size must leave room for the tested node");
    RatioKernel kernel(params.degree, params.strength);
    std::mt19937_64 rng(seed);
    std::vector<NodeId> pool(n);
    std::vector<double> out;
    out.reserve(replicates);
    while (out.size() < replicates) {
        std::iota(pool.begin(), pool.end(), NodeId{0});
        const NodeId u = std::uniform_int_distribution<NodeId>(0, static_cast<NodeId>(n - 1))(rng);
        std::swap(pool[u], pool[n - 1]);
        for (std::size_t i = 0; i < set_size; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, n - 2);
            std::swap(pool[i], pool[pick(rng)]);
        }
        std::span<const NodeId> set(pool.data(), set_size);
        double stat = 0.0;
        for (NodeId v : set)
            stat += sample_pair_weight(kernel, u, v, dist, rng);
        const auto m = null_moments(u, set, params);
        if (m.sd > 0.0)
            out.push_back((stat - m.mean) / m.sd);
    }
    return out;
}

double ks_distance_to_normal(std::vector<double> sample) {
    if (sample.empty())
        return 1.0;
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double dist = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double cdf = 1.0 - normal_upper_tail(sample[i]);
        dist = std::max({dist, (static_cast<double>(i) + 1.0) / n - cdf,
                         cdf - static_cast<double>(i) / n});
    }
    return dist;
}

} // namespace ccme
