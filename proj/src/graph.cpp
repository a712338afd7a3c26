#include "ccme/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace ccme {

double stable_sum(std::span<const double> values) {
    double sum = 0.0;
    double comp = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    return sum + comp;
}

WeightedNetwork WeightedNetwork::from_edges(std::size_t n, std::vector<Edge> edges,
                                            std::vector<std::int64_t> labels) {
    WeightedNetwork net;
    for (auto& e : edges) {
        if (e.u >= n || e.v >= n)
            throw ValidationError("edge endpoint out of range");
        if (e.u == e.v)
            throw ValidationError("self-loop on node " + std::to_string(e.u));
        if (!std::isfinite(e.weight) || e.weight < 0.0)
            throw ValidationError("invalid weight on edge {" + std::to_string(e.u) + "," +
                                  std::to_string(e.v) + "}");
        if (e.u > e.v)
            std::swap(e.u, e.v);
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    for (std::size_t i = 1; i < edges.size(); ++i) {
        if (edges[i].u == edges[i - 1].u && edges[i].v == edges[i - 1].v)
            throw ValidationError("duplicate edge {" + std::to_string(edges[i].u) + "," +
                                  std::to_string(edges[i].v) + "}");
    }

    if (labels.empty()) {
        labels.resize(n);
        std::iota(labels.begin(), labels.end(), std::int64_t{0});
    } else if (labels.size() != n) {
        throw ValidationError("label map size does not match node count");
    }

    net.degree_.assign(n, 0.0);
    std::vector<std::size_t> count(n, 0);
    for (const auto& e : edges) {
        ++count[e.u];
        ++count[e.v];
    }
    net.offsets_.assign(n + 1, 0);
    for (std::size_t u = 0; u < n; ++u)
        net.offsets_[u + 1] = net.offsets_[u] + count[u];
    net.adjacency_.resize(net.offsets_[n]);
    std::vector<std::size_t> cursor(net.offsets_.begin(), net.offsets_.end() - 1);
    // Edges are sorted by (u, v), so pushing in order keeps every list sorted:
    // for node x, neighbours smaller than x arrive (as e.v == x) before larger ones.
    for (const auto& e : edges) {
        net.adjacency_[cursor[e.v]++] = {e.u, e.weight};
    }
    for (const auto& e : edges) {
        net.adjacency_[cursor[e.u]++] = {e.v, e.weight};
    }

    net.strength_.assign(n, 0.0);
    std::vector<double> incident;
    for (std::size_t u = 0; u < n; ++u) {
        net.degree_[u] = static_cast<double>(count[u]);
        incident.clear();
        for (const auto& nb : net.neighbors(static_cast<NodeId>(u)))
            incident.push_back(nb.weight);
        net.strength_[u] = stable_sum(incident);
    }
    net.total_degree_ = 2.0 * static_cast<double>(edges.size());
    net.total_strength_ = stable_sum(net.strength_);
    net.edges_ = std::move(edges);
    net.labels_ = std::move(labels);
    return net;
}

std::span<const Neighbor> WeightedNetwork::neighbors(NodeId u) const {
    if (u >= num_nodes())
        throw std::out_of_range("node id out of range");
    return {adjacency_.data() + offsets_[u], offsets_[u + 1] - offsets_[u]};
}

bool WeightedNetwork::has_edge(NodeId u, NodeId v) const {
    const auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), v,
                               [](const Neighbor& a, NodeId x) { return a.node < x; });
    return it != nb.end() && it->node == v;
}

double WeightedNetwork::weight(NodeId u, NodeId v) const {
    const auto nb = neighbors(u);
    auto it = std::lower_bound(nb.begin(), nb.end(), v,
                               [](const Neighbor& a, NodeId x) { return a.node < x; });
    return (it != nb.end() && it->node == v) ? it->weight : 0.0;
}

DegreeStrength degrees_and_strengths(const WeightedNetwork& net) {
    DegreeStrength out;
    const std::size_t n = net.num_nodes();
    out.degree.assign(n, 0.0);
    std::vector<std::vector<double>> incident(n);
    for (const auto& e : net.edges()) {
        out.degree[e.u] += 1.0;
        out.degree[e.v] += 1.0;
        incident[e.u].push_back(e.weight);
        incident[e.v].push_back(e.weight);
    }
    out.strength.resize(n);
    for (std::size_t u = 0; u < n; ++u)
        out.strength[u] = stable_sum(incident[u]);
    out.total_degree = stable_sum(out.degree);
    out.total_strength = stable_sum(out.strength);
    return out;
}

namespace {

std::string_view next_token(std::string_view& rest) {
    std::size_t b = 0;
    while (b < rest.size() && (rest[b] == ' ' || rest[b] == '\t' || rest[b] == '\r'))
        ++b;
    std::size_t e = b;
    while (e < rest.size() && rest[e] != ' ' && rest[e] != '\t' && rest[e] != '\r')
        ++e;
    auto tok = rest.substr(b, e - b);
    rest = rest.substr(e);
    return tok;
}

std::int64_t parse_id(std::string_view tok, std::size_t line) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid node id '" + std::string(tok) + "'");
    if (value < 0)
        throw ParseError(line, "negative node id '" + std::string(tok) + "'");
    return value;
}

double parse_weight(std::string_view tok, std::size_t line) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc{} || ptr != tok.data() + tok.size())
        throw ParseError(line, "invalid weight '" + std::string(tok) + "'");
    return value;
}

} // namespace

WeightedNetwork parse_edge_list(std::istream& in) {
    struct RawEdge {
        std::int64_t a, b;
        double w;
        std::size_t line;
    };
    std::vector<RawEdge> raw;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view rest(line);
        auto first = next_token(rest);
        if (first.empty() || first.front() == '#')
            continue;
        auto second = next_token(rest);
        auto third = next_token(rest);
        if (second.empty() || third.empty())
            throw ParseError(lineno, "expected 'u v w'");
        if (auto extra = next_token(rest); !extra.empty() && extra.front() != '#')
            throw ParseError(lineno, "trailing field '" + std::string(extra) + "'");
        RawEdge e{parse_id(first, lineno), parse_id(second, lineno), parse_weight(third, lineno),
                  lineno};
        if (e.a == e.b)
            throw ValidationError("line " + std::to_string(lineno) + ": self-loop on node " +
                                  std::to_string(e.a));
        if (!std::isfinite(e.w) || e.w < 0.0)
            throw ValidationError("line " + std::to_string(lineno) + ": negative weight");
        raw.push_back(e);
    }

    std::vector<std::int64_t> labels;
    labels.reserve(2 * raw.size());
    for (const auto& e : raw) {
        labels.push_back(e.a);
        labels.push_back(e.b);
    }
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    auto dense = [&](std::int64_t label) {
        return static_cast<NodeId>(std::lower_bound(labels.begin(), labels.end(), label) -
                                   labels.begin());
    };

    std::map<std::pair<NodeId, NodeId>, std::size_t> seen;
    std::vector<Edge> edges;
    edges.reserve(raw.size());
    for (const auto& e : raw) {
        NodeId u = dense(e.a), v = dense(e.b);
        if (u > v)
            std::swap(u, v);
        auto [it, inserted] = seen.emplace(std::make_pair(u, v), e.line);
        if (!inserted)
            throw ValidationError("line " + std::to_string(e.line) + ": duplicate pair (first at line " +
                                  std::to_string(it->second) + ")");
        edges.push_back({u, v, e.w});
    }
    const std::size_t n = labels.size();
    return WeightedNetwork::from_edges(n, std::move(edges), std::move(labels));
}

WeightedNetwork load_edge_list(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path.string());
    return parse_edge_list(in);
}

void write_edge_list(const WeightedNetwork& net, std::ostream& out) {
    struct Row {
        std::int64_t a, b;
        double w;
    };
    std::vector<Row> rows;
    rows.reserve(net.num_edges());
    for (const auto& e : net.edges()) {
        auto a = net.label(e.u), b = net.label(e.v);
        if (a > b)
            std::swap(a, b);
        rows.push_back({a, b, e.weight});
    }
    std::sort(rows.begin(), rows.end(),
              [](const Row& x, const Row& y) { return x.a != y.a ? x.a < y.a : x.b < y.b; });
    char buf[64];
    for (const auto& r : rows) {
        auto res = std::to_chars(buf, buf + sizeof(buf), r.w);
        out << r.a << '\t' << r.b << '\t' << std::string_view(buf, res.ptr - buf) << '\n';
    }
}

void save_edge_list(const WeightedNetwork& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path.string());
    write_edge_list(net, out);
}

RatioKernel::RatioKernel(std::span<const double> x, std::span<const double> y)
    : x_(x), y_(y), x_total_(stable_sum(x)), y_total_(stable_sum(y)) {}

RatioTerms ratio_terms(std::span<const double> x, std::span<const double> y, NodeId u, NodeId v) {
    if (u == v)
        throw DomainError("ratio terms need distinct nodes");
    if (u >= x.size() || v >= x.size() || x.size() != y.size())
        throw DomainError("node id out of range");
    const double xt = stable_sum(x);
    const double yt = stable_sum(y);
    if (!(xt > 0.0) || !(yt > 0.0))
        throw DomainError("ratio terms need positive totals");
    RatioTerms t{};
    t.r = ratio(x[u], x[v], xt);
    t.r_truncated = std::min(1.0, t.r);
    if (!(t.r_truncated > 0.0))
        throw DomainError("ratio terms need positive propensities");
    t.f = ratio(y[u], y[v], yt) / t.r_truncated;
    return t;
}

} // namespace ccme
