#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ccme {

using NodeId = std::uint32_t;

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct Edge {
    NodeId u;
    NodeId v;
    double weight;
};

struct Neighbor {
    NodeId node;
    double weight;
};

/// Neumaier-compensated sum.
double stable_sum(std::span<const double> values);

/// Undirected weighted network with edge presence kept separate from weight:
/// an edge may carry weight zero and still count towards the degree.
///
/// Immutable after construction. Adjacency is stored in CSR form with each
/// neighbour list sorted by node id.
class WeightedNetwork {
public:
    WeightedNetwork() = default;

    /// Builds a network on nodes 0..n-1. Rejects self-loops, duplicate pairs,
    /// out-of-range ids and negative or non-finite weights.
    /// `labels` maps dense ids to external labels; empty means identity.
    static WeightedNetwork from_edges(std::size_t n, std::vector<Edge> edges,
                                      std::vector<std::int64_t> labels = {});

    std::size_t num_nodes() const noexcept { return degree_.size(); }
    std::size_t num_edges() const noexcept { return edges_.size(); }

    /// Canonical edge list: u < v, sorted lexicographically.
    std::span<const Edge> edges() const noexcept { return edges_; }
    std::span<const Neighbor> neighbors(NodeId u) const;

    bool has_edge(NodeId u, NodeId v) const;
    /// Zero for non-edges.
    double weight(NodeId u, NodeId v) const;

    const std::vector<double>& degrees() const noexcept { return degree_; }
    const std::vector<double>& strengths() const noexcept { return strength_; }
    double total_degree() const noexcept { return total_degree_; }
    double total_strength() const noexcept { return total_strength_; }

    const std::vector<std::int64_t>& labels() const noexcept { return labels_; }
    std::int64_t label(NodeId u) const { return labels_.at(u); }

private:
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<Neighbor> adjacency_;
    std::vector<double> degree_;
    std::vector<double> strength_;
    std::vector<std::int64_t> labels_;
    double total_degree_ = 0.0;
    double total_strength_ = 0.0;
};

struct DegreeStrength {
    std::vector<double> degree;
    std::vector<double> strength;
    double total_degree = 0.0;
    double total_strength = 0.0;
};

/// Recomputes degrees and strengths from the edge list.
DegreeStrength degrees_and_strengths(const WeightedNetwork& net);

/// Reads "u v w" lines (tab or space separated, '#' comments). Node ids are
/// non-negative integers, compacted to 0..n-1 in increasing label order.
WeightedNetwork load_edge_list(const std::filesystem::path& path);
WeightedNetwork parse_edge_list(std::istream& in);

/// Writes "u\tv\tw" with u < v in label order, shortest round-trip weights.
void save_edge_list(const WeightedNetwork& net, const std::filesystem::path& path);
void write_edge_list(const WeightedNetwork& net, std::ostream& out);

// ---------------------------------------------------------------------------
// Ratio kernels.
//
//   r_uv(x)       = x(u) x(v) / sum(x)
//   r~_uv(x)      = min(1, r_uv(x))
//   f_uv(x, y)    = r_uv(y) / r~_uv(x)
// ---------------------------------------------------------------------------

inline double ratio(double xu, double xv, double total) { return xu * xv / total; }
inline double truncated_ratio(double xu, double xv, double total) {
    const double r = ratio(xu, xv, total);
    return r < 1.0 ? r : 1.0;
}

struct RatioTerms {
    double r;           ///< r_uv(x)
    double r_truncated; ///< min(1, r_uv(x))
    double f;           ///< r_uv(y) / min(1, r_uv(x))
};

/// Pairwise ratio kernel over a fixed pair of propensity vectors. The first
/// vector drives truncation (edge propensity), the second the numerator.
class RatioKernel {
public:
    RatioKernel(std::span<const double> x, std::span<const double> y);

    double r_x(NodeId u, NodeId v) const { return ratio(x_[u], x_[v], x_total_); }
    double r_y(NodeId u, NodeId v) const { return ratio(y_[u], y_[v], y_total_); }
    double r_x_truncated(NodeId u, NodeId v) const {
        return truncated_ratio(x_[u], x_[v], x_total_);
    }
    /// Zero when x(u) x(v) = 0.
    double f(NodeId u, NodeId v) const {
        const double rt = r_x_truncated(u, v);
        return rt > 0.0 ? r_y(u, v) / rt : 0.0;
    }

    double x_total() const noexcept { return x_total_; }
    double y_total() const noexcept { return y_total_; }
    std::span<const double> x() const noexcept { return x_; }
    std::span<const double> y() const noexcept { return y_; }

private:
    std::span<const double> x_;
    std::span<const double> y_;
    double x_total_;
    double y_total_;
};

/// Checked single-pair evaluation. Throws DomainError for u == v or
/// non-positive totals.
RatioTerms ratio_terms(std::span<const double> x, std::span<const double> y, NodeId u, NodeId v);

} // namespace ccme
